//! The reference multivariate normal distribution: its level-set ellipsoid,
//! surface samples of that ellipsoid, and the analytic 2-D projection of it.

mod ellipse;
mod file;
mod sample;

pub use ellipse::{ellipse_boundary, project_model, ProjectedEllipse, DEFAULT_BOUNDARY_POINTS};
pub(crate) use ellipse::projected_shape;
pub use file::{parse_model, read_model, write_model, ModelFile};
pub use sample::sample_ellipsoid_surface;

use crate::error::{Error, Result};
use crate::numerics::{chi2_quantile, chi2_quantile_upper, two_sided_normal_tail, Matrix, SpdMatrix};

/// How the size of the reference ellipsoid is specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Level {
    /// Probability mass enclosed, converted through the chi-square quantile.
    Probability(f64),
    /// The squared constant `c²` directly.
    C2(f64),
    /// A two-sided normal z-score, e.g. 5 for "5 sigma".
    Sigma(f64),
}

impl Level {
    /// The squared level constant for a `df`-dimensional ellipsoid.
    pub fn c2(&self, df: usize) -> Result<f64> {
        let df = u32::try_from(df).map_err(|_| Error::InvalidArgument("df too large".into()))?;
        let c2 = match *self {
            Level::Probability(p) => chi2_quantile(p, df)?,
            Level::C2(c2) => c2,
            Level::Sigma(z) => {
                if !(z > 0.0 && z.is_finite()) {
                    return Err(Error::InvalidArgument(format!("sigma must be positive, got {z}")));
                }
                chi2_quantile_upper(two_sided_normal_tail(z), df)?
            }
        };
        if !(c2 > 0.0) || c2.is_nan() {
            return Err(Error::InvalidArgument(format!("level constant c² must be positive, got {c2}")));
        }
        Ok(c2)
    }
}

/// Mean, covariance and level constant `c²` of the reference ellipsoid
/// `(x - μ) Σ⁻¹ (x - μ)ᵀ = c²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceModel {
    mean: Vec<f64>,
    covariance: SpdMatrix,
    level_c2: f64,
}

impl ReferenceModel {
    pub fn new(mean: Vec<f64>, covariance: Matrix, level: Level) -> Result<Self> {
        let covariance = SpdMatrix::new(covariance)?;
        Self::from_spd(mean, covariance, level)
    }

    pub fn from_spd(mean: Vec<f64>, covariance: SpdMatrix, level: Level) -> Result<Self> {
        let p = mean.len();
        if p < 2 {
            return Err(Error::dims("p >= 2", p));
        }
        if covariance.dim() != p {
            return Err(Error::dims(
                format!("{p}x{p} covariance"),
                format!("{0}x{0}", covariance.dim()),
            ));
        }
        if let Some(i) = mean.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, col: i });
        }
        let level_c2 = level.c2(p)?;
        Ok(Self {
            mean,
            covariance,
            level_c2,
        })
    }

    /// Standard normal reference `N(0, I_p)`.
    pub fn standard(p: usize, level: Level) -> Result<Self> {
        Self::from_spd(vec![0.0; p], SpdMatrix::identity(p), level)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &SpdMatrix {
        &self.covariance
    }

    pub fn level_c2(&self) -> f64 {
        self.level_c2
    }

    pub fn with_level_c2(mut self, level_c2: f64) -> Result<Self> {
        self.level_c2 = Level::C2(level_c2).c2(self.dim())?;
        Ok(self)
    }

    /// `(x - μ) Σ⁻¹ (x - μ)ᵀ`.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::dims(self.dim(), x.len()));
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.covariance.quad_form(&centered)
    }

    /// Whether `x` lies inside or on the reference ellipsoid.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.quad_form(x)? <= self.level_c2)
    }
}

/// Free-function form of [`ReferenceModel::contains`].
pub fn contains(model: &ReferenceModel, x: &[f64]) -> Result<bool> {
    model.contains(x)
}
