//! Tolerances shared by the numeric routines and their tests.

/// Relative asymmetry allowed before a matrix is rejected as non-symmetric.
pub const SYMMETRY: f64 = 1e-10;
/// Column norm (relative to the input column) below which Gram-Schmidt
/// declares the input rank deficient.
pub const RANK: f64 = 1e-12;
/// Orthonormality delivered by [`orthonormalize`](super::orthonormalize).
pub const ORTHONORMAL: f64 = 1e-12;
/// Orthonormality required of a projection basis.
pub const BASIS: f64 = 1e-10;
/// Relative reconstruction error of a Cholesky factor.
pub const CHOLESKY: f64 = 1e-8;
/// Eigen residual for the closed-form 2x2 solver.
pub const EIGEN: f64 = 1e-10;
/// Accuracy of the chi-square quantile, measured on the CDF.
pub const CHI2_CDF: f64 = 1e-10;
/// Principal angles below this are treated as zero by the geodesic.
pub const ANGLE: f64 = 1e-9;
