use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Geodesic, ProjectionBasis, ProjectionIndex, TourFrame, TourTrace};
use crate::error::{Error, Result};

/// Random walk through `n_targets` random planes, `steps_per_leg` equally
/// spaced frames per leg. Emits `1 + n_targets * steps_per_leg` frames with
/// index values of 0.
pub fn grand_tour(p: usize, n_targets: usize, steps_per_leg: usize, seed: u64) -> Result<TourTrace> {
    grand_tour_inner(p, n_targets, steps_per_leg, seed, None)
}

/// As [`grand_tour`], filling `index_value` from `index` at every frame.
pub fn grand_tour_with_index(
    p: usize,
    n_targets: usize,
    steps_per_leg: usize,
    seed: u64,
    index: &dyn ProjectionIndex,
) -> Result<TourTrace> {
    grand_tour_inner(p, n_targets, steps_per_leg, seed, Some(index))
}

fn grand_tour_inner(
    p: usize,
    n_targets: usize,
    steps_per_leg: usize,
    seed: u64,
    index: Option<&dyn ProjectionIndex>,
) -> Result<TourTrace> {
    if n_targets == 0 || steps_per_leg == 0 {
        return Err(Error::InvalidArgument(
            "grand tour needs at least one target and one step per leg".into(),
        ));
    }
    let value = |b: &ProjectionBasis| -> Result<f64> {
        match index {
            Some(f) => super::guided::checked_value(f, b),
            None => Ok(0.0),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = ProjectionBasis::random(p, &mut rng)?;
    let mut frames = vec![TourFrame {
        index_value: value(&current)?,
        basis: current.clone(),
        t: 0.0,
        is_target: true,
    }];
    for _ in 0..n_targets {
        let target = ProjectionBasis::random(p, &mut rng)?;
        let path = Geodesic::new(&current, &target)?;
        for s in 1..=steps_per_leg {
            let t = s as f64 / steps_per_leg as f64;
            let basis = path.at(t)?;
            frames.push(TourFrame {
                index_value: value(&basis)?,
                basis,
                t,
                is_target: s == steps_per_leg,
            });
        }
        current = frames.last().expect("leg emitted frames").basis.clone();
    }
    Ok(TourTrace { frames, rng_seed: seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_leg_single_step() {
        let tr = grand_tour(4, 1, 1, 3).unwrap();
        assert_eq!(tr.len(), 2);
        assert!(tr.frames.iter().all(|f| f.is_target));
        assert_eq!(tr.frames[1].t, 1.0);
    }

    #[test]
    fn frames_orthonormal_and_deterministic() {
        let a = grand_tour(6, 5, 20, 42).unwrap();
        assert_eq!(a.len(), 101);
        for f in &a.frames {
            assert!(f.basis.orthonormality_error() < 1e-10);
        }
        assert_eq!(a, grand_tour(6, 5, 20, 42).unwrap());
        assert_ne!(a, grand_tour(6, 5, 20, 43).unwrap());
        assert_eq!(a.targets().count(), 6);
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(grand_tour(3, 0, 5, 1).is_err());
        assert!(grand_tour(3, 5, 0, 1).is_err());
        assert!(grand_tour(1, 1, 1, 1).is_err());
    }
}
