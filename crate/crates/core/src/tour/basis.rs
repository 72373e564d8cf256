use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{orthonormalize, tol, Matrix};

/// A `p x 2` matrix with orthonormal columns spanning a projection plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionBasis {
    matrix: Matrix,
}

impl ProjectionBasis {
    /// Wraps a matrix that is already orthonormal (within `tol::BASIS`).
    pub fn new(matrix: Matrix) -> Result<Self> {
        let (p, d) = matrix.shape();
        if d != 2 || p < 2 {
            return Err(Error::dims("p x 2 with p >= 2", format!("{p}x{d}")));
        }
        let err = orthonormality_error(&matrix);
        if err >= tol::BASIS {
            return Err(Error::InvalidArgument(format!(
                "basis columns are not orthonormal (max |PᵀP - I| = {err:e})"
            )));
        }
        Ok(Self { matrix })
    }

    /// Orthonormalises an arbitrary full-rank `p x 2` matrix.
    pub fn from_matrix(matrix: &Matrix) -> Result<Self> {
        Self::new(orthonormalize(matrix)?)
    }

    pub fn from_cols(a: &[f64], b: &[f64]) -> Result<Self> {
        Self::from_matrix(&Matrix::from_cols(&[a, b])?)
    }

    /// Plane spanned by coordinate axes `i` and `j`.
    pub fn coordinate_plane(p: usize, i: usize, j: usize) -> Result<Self> {
        if i >= p || j >= p || i == j {
            return Err(Error::InvalidArgument(format!(
                "coordinate plane ({i}, {j}) invalid for p = {p}"
            )));
        }
        let mut m = Matrix::zeros(p, 2);
        m[(i, 0)] = 1.0;
        m[(j, 1)] = 1.0;
        Self::new(m)
    }

    /// Haar-distributed random plane: Gaussian fill, then Gram-Schmidt.
    pub fn random<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidArgument(format!("random basis needs p >= 2, got {p}")));
        }
        loop {
            let data: Vec<f64> = (0..2 * p).map(|_| rng.sample(StandardNormal)).collect();
            match orthonormalize(&Matrix::new(p, 2, data)?) {
                Ok(q) => return Ok(Self { matrix: q }),
                Err(Error::RankDeficient { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        self.matrix.col(j)
    }

    /// `x · P`.
    pub fn project(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.p() {
            return Err(Error::dims(self.p(), x.len()));
        }
        let mut y = [0.0; 2];
        for (xi, row) in x.iter().zip(self.matrix.row_iter()) {
            y[0] += xi * row[0];
            y[1] += xi * row[1];
        }
        Ok(y)
    }

    /// `P·Pᵀ`, the orthogonal projector onto the plane.
    pub fn projector(&self) -> Matrix {
        self.matrix
            .matmul(&self.matrix.transpose())
            .expect("p x 2 times 2 x p")
    }

    /// Max-entry distance between the two planes' projectors.
    pub fn projector_distance(&self, other: &ProjectionBasis) -> f64 {
        self.projector().max_abs_diff(&other.projector())
    }

    /// Squared norm of the projection of `v` onto the plane, relative to
    /// `‖v‖²`; 1 when `v` lies in the plane.
    pub fn captured_fraction(&self, v: &[f64]) -> Result<f64> {
        let y = self.project(v)?;
        let total: f64 = v.iter().map(|x| x * x).sum();
        Ok((y[0] * y[0] + y[1] * y[1]) / total)
    }

    /// Sum of squared coefficients in the given rows (both columns).
    pub fn row_mass(&self, rows: &[usize]) -> f64 {
        rows.iter()
            .map(|&i| {
                let r = self.matrix.row(i);
                r[0] * r[0] + r[1] * r[1]
            })
            .sum()
    }

    /// Same plane, in-plane coordinates rotated: `P · R(angle)`.
    pub fn rotated_in_plane(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let r = Matrix::from_rows(&[[c, -s], [s, c]]).expect("2x2");
        Self {
            matrix: self.matrix.matmul(&r).expect("p x 2 times 2 x 2"),
        }
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.matrix)
    }
}

fn orthonormality_error(m: &Matrix) -> f64 {
    m.t_matmul(m)
        .map(|g| g.max_abs_diff(&Matrix::identity(m.cols())))
        .unwrap_or(f64::INFINITY)
}

/// Random basis from an explicit seed.
pub fn random_basis(p: usize, seed: u64) -> Result<ProjectionBasis> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    ProjectionBasis::random(p, &mut rng)
}
