use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Geodesic, ProjectionBasis, TourFrame, TourTrace};
use crate::error::{Error, Result};
use crate::index::AnomalyIndex;

/// A projection pursuit index: a scalar score of a projection plane.
pub trait ProjectionIndex: Sync {
    fn value(&self, basis: &ProjectionBasis) -> Result<f64>;
}

impl ProjectionIndex for AnomalyIndex {
    fn value(&self, basis: &ProjectionBasis) -> Result<f64> {
        self.evaluate(basis)
    }
}

impl<F> ProjectionIndex for F
where
    F: Fn(&ProjectionBasis) -> f64 + Sync,
{
    fn value(&self, basis: &ProjectionBasis) -> Result<f64> {
        Ok(self(basis))
    }
}

pub(crate) fn checked_value(index: &dyn ProjectionIndex, basis: &ProjectionBasis) -> Result<f64> {
    let v = index.value(basis)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::IndexEvaluation {
            value: v,
            basis: basis.matrix().as_slice().to_vec(),
        })
    }
}

/// How candidate planes are proposed each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Search {
    /// Candidates a fraction `r` of the way towards random planes; `r` shrinks
    /// by the cooling factor after every round without improvement.
    Better,
    /// Candidates are fresh random planes (pure random search).
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GuidedOptions {
    pub search: Search,
    pub n_candidates: usize,
    /// Starting neighbourhood size, as a geodesic fraction towards a random plane.
    pub initial_radius: f64,
    pub cooling: f64,
    pub min_radius: f64,
    pub max_rounds: usize,
    /// Angular spacing (radians) of the frames emitted between targets.
    pub frame_step: f64,
}

impl Default for GuidedOptions {
    fn default() -> Self {
        Self {
            search: Search::Better,
            n_candidates: 50,
            initial_radius: 0.5,
            cooling: 0.9,
            min_radius: 0.01,
            max_rounds: 200,
            frame_step: 0.05,
        }
    }
}

impl GuidedOptions {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("guided tour: {m}")));
        if self.n_candidates == 0 {
            return bad("n_candidates must be >= 1");
        }
        if !(self.initial_radius > 0.0 && self.initial_radius <= 1.0) {
            return bad("initial radius must lie in (0, 1]");
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling must lie in (0, 1)");
        }
        if !(self.min_radius > 0.0) {
            return bad("min radius must be positive");
        }
        if !(self.frame_step > 0.0) {
            return bad("frame step must be positive");
        }
        Ok(())
    }
}

/// Hill-climbs `index` from `start`, recording interpolated frames between
/// accepted targets. The last frame holds the best plane found; index values
/// at target frames strictly increase.
pub fn guided_tour(
    index: &dyn ProjectionIndex,
    start: &ProjectionBasis,
    opts: &GuidedOptions,
    seed: u64,
) -> Result<TourTrace> {
    opts.validate()?;
    let p = start.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = start.clone();
    let mut current_value = checked_value(index, &current)?;
    let mut frames = vec![TourFrame {
        basis: current.clone(),
        t: 0.0,
        index_value: current_value,
        is_target: true,
    }];

    let mut radius = opts.initial_radius;
    let mut rounds = 0;
    while rounds < opts.max_rounds && radius >= opts.min_radius {
        rounds += 1;
        // draws stay sequential so results do not depend on thread count
        let mut candidates = Vec::with_capacity(opts.n_candidates);
        for _ in 0..opts.n_candidates {
            let random = ProjectionBasis::random(p, &mut rng)?;
            let cand = match opts.search {
                Search::Better => Geodesic::new(&current, &random)?.at(radius.min(1.0))?,
                Search::Random => random,
            };
            candidates.push(cand);
        }
        let values: Vec<Result<f64>> = candidates
            .par_iter()
            .map(|b| checked_value(index, b))
            .collect();
        let mut best: Option<(usize, f64)> = None;
        for (k, v) in values.into_iter().enumerate() {
            let v = v?;
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((k, v));
            }
        }
        let (best_k, best_value) = best.expect("at least one candidate");

        let mut accepted = false;
        if best_value > current_value {
            let path = Geodesic::new(&current, &candidates[best_k])?;
            let end = path.at(1.0)?;
            let end_value = checked_value(index, &end)?;
            if end_value > current_value {
                let steps = ((path.max_angle() / opts.frame_step).ceil() as usize).max(1);
                for s in 1..steps {
                    let t = s as f64 / steps as f64;
                    let basis = path.at(t)?;
                    frames.push(TourFrame {
                        index_value: checked_value(index, &basis)?,
                        basis,
                        t,
                        is_target: false,
                    });
                }
                frames.push(TourFrame {
                    basis: end.clone(),
                    t: 1.0,
                    index_value: end_value,
                    is_target: true,
                });
                current = end;
                current_value = end_value;
                accepted = true;
            }
        }
        if !accepted {
            radius *= opts.cooling;
        }
    }
    Ok(TourTrace {
        frames,
        rng_seed: seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{mahalanobis_sq, OutlierSet};
    use crate::numerics::Matrix;
    use crate::reference::{Level, ReferenceModel};

    #[test]
    fn constant_index_keeps_start() {
        let start = crate::tour::random_basis(5, 1).unwrap();
        let tr = guided_tour(&|_: &ProjectionBasis| 1.0, &start, &GuidedOptions::default(), 7).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.last().basis, start);
    }

    #[test]
    fn non_finite_index_is_reported() {
        let start = crate::tour::random_basis(3, 1).unwrap();
        let err = guided_tour(&|_: &ProjectionBasis| f64::NAN, &start, &GuidedOptions::default(), 7)
            .unwrap_err();
        match err {
            Error::IndexEvaluation { basis, .. } => assert_eq!(basis.len(), 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_point_saturates_upper_bound() {
        let sigma = Matrix::from_rows(&[[1.0, 0.3, 0.0], [0.3, 2.0, 0.4], [0.0, 0.4, 1.5]]).unwrap();
        let model = ReferenceModel::new(vec![0.0; 3], sigma, Level::C2(1.0)).unwrap();
        let x = Matrix::from_rows(&[[2.0, -3.0, 4.0]]).unwrap();
        let w = OutlierSet::manual(vec![0], 1).unwrap();
        let idx = AnomalyIndex::new(&x, &w, &model).unwrap();
        let bound = mahalanobis_sq(x.row(0), &model).unwrap();
        for seed in 0..3 {
            let start = crate::tour::random_basis(3, 100 + seed).unwrap();
            let tr = guided_tour(&idx, &start, &GuidedOptions::default(), seed).unwrap();
            let best = tr.last().index_value;
            assert!(best <= bound + 1e-8);
            assert!(best >= 0.98 * bound, "seed {seed}: {best} vs {bound}");
            let targets: Vec<f64> = tr.targets().map(|f| f.index_value).collect();
            assert!(targets.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let model = ReferenceModel::standard(4, Level::C2(1.0)).unwrap();
        let x = Matrix::from_rows(&[[3.0, 1.0, 0.0, 0.0], [2.0, 2.0, 0.5, 0.0]]).unwrap();
        let w = OutlierSet::manual(vec![0, 1], 2).unwrap();
        let idx = AnomalyIndex::new(&x, &w, &model).unwrap();
        let start = crate::tour::random_basis(4, 5).unwrap();
        let opts = GuidedOptions::default();
        assert_eq!(
            guided_tour(&idx, &start, &opts, 11).unwrap(),
            guided_tour(&idx, &start, &opts, 11).unwrap()
        );
        let random = GuidedOptions {
            search: Search::Random,
            ..GuidedOptions::default()
        };
        let tr = guided_tour(&idx, &start, &random, 11).unwrap();
        assert!(tr.last().index_value >= tr.frames[0].index_value);
    }

    #[test]
    fn rejects_bad_options() {
        let start = crate::tour::random_basis(3, 1).unwrap();
        let opts = GuidedOptions {
            cooling: 1.0,
            ..GuidedOptions::default()
        };
        assert!(guided_tour(&|_: &ProjectionBasis| 0.0, &start, &opts, 1).is_err());
    }
}
