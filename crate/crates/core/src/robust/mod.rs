//! Robust estimation of a reference distribution from contaminated data, and
//! clustering of anomaly directions.

mod cluster;
mod mcd;
mod scaling;

pub use cluster::{dunn_index, kmeans, normalize_directions, select_k, ClusterSolution, KSelection};
pub use mcd::{
    consistency_factor, default_h, fast_mcd, mean_cov, prediction_cutoff, reweight, McdFit, Reweighted,
};
pub use scaling::{median, median_mad_standardize, RobustScaling, MAD_CONSISTENCY};

use crate::error::Result;
use crate::numerics::{chi2_sf, Matrix};
use crate::reference::{Level, ReferenceModel};

#[derive(Clone, Debug, PartialEq)]
pub struct RobustOptions {
    /// MCD subset size; `None` uses [`default_h`].
    pub h: Option<usize>,
    pub n_starts: usize,
    /// Refine the raw MCD subset by leave-one-out reweighting at the flag
    /// level before building the model.
    pub reweight: bool,
    pub max_reweight_iter: usize,
    pub seed: u64,
}

impl Default for RobustOptions {
    fn default() -> Self {
        Self {
            h: None,
            n_starts: 20,
            reweight: true,
            max_reweight_iter: 50,
            seed: 0,
        }
    }
}

/// A reference model estimated from the data it will be compared against.
/// The model lives in the median/MAD standardised coordinates.
#[derive(Clone, Debug)]
pub struct RobustReference {
    pub scaling: RobustScaling,
    pub standardized: Matrix,
    pub mcd: McdFit,
    pub reweighted: Option<Reweighted>,
    pub model: ReferenceModel,
}

/// Standardises `x`, fits MCD and (optionally) reweights at `level`.
pub fn robust_reference(x: &Matrix, level: Level, opts: &RobustOptions) -> Result<RobustReference> {
    let (z, scaling) = median_mad_standardize(x)?;
    let (n, p) = z.shape();
    let h = opts.h.unwrap_or_else(|| default_h(n, p));
    let mcd = fast_mcd(&z, h, opts.n_starts, opts.seed)?;
    let c2 = level.c2(p)?;
    let (model, reweighted) = if opts.reweight {
        let rw = reweight(&z, &mcd.support, chi2_sf(c2, p as u32), opts.max_reweight_iter)?;
        let m = ReferenceModel::from_spd(rw.mean.clone(), rw.covariance.clone(), Level::C2(c2))?;
        (m, Some(rw))
    } else {
        let m = ReferenceModel::from_spd(mcd.mean.clone(), mcd.covariance.clone(), Level::C2(c2))?;
        (m, None)
    };
    Ok(RobustReference {
        scaling,
        standardized: z,
        mcd,
        reweighted,
        model,
    })
}
