use super::ProjectionBasis;
use crate::error::{Error, Result};
use crate::numerics::{dot, norm, orthonormalize, svd_2x2, sym_eigen_2x2, tol, Matrix};

/// Great-circle path between two projection planes.
///
/// The frames are aligned by the SVD of `FaᵀFb`; each aligned column of `Fa`
/// then rotates towards its partner in `Fb` through the corresponding
/// principal angle. The in-plane orientation is carried along from `Fa`, so
/// the path starts at exactly `Fa` and ends at a frame spanning `Fb`.
#[derive(Clone, Debug)]
pub struct Geodesic {
    start: ProjectionBasis,
    aligned: [Vec<f64>; 2],
    tangent: [Vec<f64>; 2],
    angles: [f64; 2],
    // in-plane rotation U of the start frame, undone at every step
    u: [[f64; 2]; 2],
}

impl Geodesic {
    pub fn new(from: &ProjectionBasis, to: &ProjectionBasis) -> Result<Self> {
        if from.p() != to.p() {
            return Err(Error::dims(
                format!("{} x 2 basis", from.p()),
                format!("{} x 2", to.p()),
            ));
        }
        let fa = from.matrix();
        let fb = to.matrix();
        let m = fa.t_matmul(fb)?;
        let (u, _, v) = svd_2x2(&m);
        let ga = fa.matmul(&Matrix::from_cols(&u)?)?;
        let gb = fb.matmul(&Matrix::from_cols(&v)?)?;

        let aligned = [ga.col(0), ga.col(1)];
        let mut tangent = [vec![0.0; from.p()], vec![0.0; from.p()]];
        let mut angles = [0.0; 2];
        for i in 0..2 {
            let a = &aligned[i];
            let b = gb.col(i);
            let c = dot(a, &b);
            let mut r: Vec<f64> = b.iter().zip(a).map(|(bj, aj)| bj - c * aj).collect();
            // keep the tangent orthogonal to both aligned columns
            for a_k in aligned.iter() {
                let d = dot(a_k, &r);
                r.iter_mut().zip(a_k).for_each(|(rj, aj)| *rj -= d * aj);
            }
            let s = norm(&r);
            let theta = s.atan2(c);
            if theta > tol::ANGLE && s > 0.0 {
                r.iter_mut().for_each(|x| *x /= s);
                tangent[i] = r;
                angles[i] = theta;
            }
        }
        Ok(Self {
            start: from.clone(),
            aligned,
            tangent,
            angles,
            u,
        })
    }

    /// Principal angles travelled by each aligned column.
    pub fn angles(&self) -> [f64; 2] {
        self.angles
    }

    pub fn max_angle(&self) -> f64 {
        self.angles[0].max(self.angles[1])
    }

    pub fn is_stationary(&self) -> bool {
        self.max_angle() <= tol::ANGLE
    }

    /// Frame at fraction `t ∈ [0, 1]` of the path.
    pub fn at(&self, t: f64) -> Result<ProjectionBasis> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("interpolation fraction {t} outside [0, 1]")));
        }
        if t == 0.0 || self.is_stationary() {
            return Ok(self.start.clone());
        }
        let p = self.start.p();
        let mut g = Matrix::zeros(p, 2);
        for i in 0..2 {
            let (s, c) = (self.angles[i] * t).sin_cos();
            let col: Vec<f64> = self.aligned[i]
                .iter()
                .zip(&self.tangent[i])
                .map(|(a, b)| a * c + b * s)
                .collect();
            g.set_col(i, &col);
        }
        // G · Uᵀ
        let ut = Matrix::from_rows(&self.u)?;
        let frame = g.matmul(&ut)?;
        ProjectionBasis::new(orthonormalize(&frame)?)
    }
}

/// Frame at fraction `t` of the geodesic from `fa` to `fb`.
pub fn geodesic_interpolate(fa: &ProjectionBasis, fb: &ProjectionBasis, t: f64) -> Result<ProjectionBasis> {
    Geodesic::new(fa, fb)?.at(t)
}

/// Principal angles between two planes, largest first.
///
/// Cosines come from the singular values of `AᵀB` and sines from those of
/// `B - A·AᵀB`; pairing them through `atan2` keeps precision at both ends.
pub fn principal_angles(a: &ProjectionBasis, b: &ProjectionBasis) -> Result<[f64; 2]> {
    if a.p() != b.p() {
        return Err(Error::dims(a.p(), b.p()));
    }
    let m = a.matrix().t_matmul(b.matrix())?;
    let (_, cos, _) = svd_2x2(&m);
    let residual = b.matrix().sub(&a.matrix().matmul(&m)?)?;
    let gram = residual.t_matmul(&residual)?;
    let mut g = gram.clone();
    let off = 0.5 * (g[(0, 1)] + g[(1, 0)]);
    g[(0, 1)] = off;
    g[(1, 0)] = off;
    let sin2 = sym_eigen_2x2(&g)?.values;
    let sin = [sin2[0].max(0.0).sqrt(), sin2[1].max(0.0).sqrt()];
    // largest angle: smallest cosine with largest sine
    Ok([sin[0].atan2(cos[1]), sin[1].atan2(cos[0])])
}
