use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ReferenceModel;
use crate::error::{Error, Result};
use crate::numerics::{norm, Matrix};

/// `n` points on the surface of the reference ellipsoid.
///
/// Each row is a standard normal draw scaled to unit length (uniform on the
/// sphere), mapped through the Cholesky factor of Σ, scaled by `c` and shifted
/// to the mean, so every row satisfies the ellipsoid equation.
pub fn sample_ellipsoid_surface(model: &ReferenceModel, n: usize, seed: u64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    let p = model.dim();
    let l = model.covariance().chol();
    let c = model.level_c2().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Matrix::zeros(n, p);
    let mut u = vec![0.0; p];
    for i in 0..n {
        loop {
            u.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            let r = norm(&u);
            if r > 0.0 {
                u.iter_mut().for_each(|v| *v /= r);
                break;
            }
        }
        let row = out.row_mut(i);
        for (a, x) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for b in 0..=a {
                acc += l[(a, b)] * u[b];
            }
            *x = model.mean()[a] + c * acc;
        }
    }
    Ok(out)
}
