//! Dense small-matrix primitives and the scalar special functions the rest of
//! the crate builds on. Everything here is a pure function.

mod linalg;
mod matrix;
mod special;
pub mod tol;

pub use linalg::{cholesky, orthonormalize, solve_spd, sym_eigen_2x2, Eigen2, SpdMatrix};
pub(crate) use linalg::svd_2x2;
pub use matrix::Matrix;
pub(crate) use matrix::{dot, norm};
pub use special::{
    chi2_cdf, chi2_quantile, chi2_quantile_upper, chi2_sf, f_quantile_upper, f_sf, ln_gamma,
    regularized_beta, regularized_lower_gamma, regularized_upper_gamma, two_sided_normal_tail,
};
