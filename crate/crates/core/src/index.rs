//! Flagging observations against the reference model and the anomaly
//! projection pursuit index.
//!
//! For a flagged set `W`, a reference `N(μ, Σ)` and a `p x 2` basis `P` the
//! index is
//!
//! ```text
//! Σ_{w ∈ W} (w - μ) P (PᵀΣP)⁻¹ Pᵀ (w - μ)ᵀ
//! ```
//!
//! i.e. the summed squared Mahalanobis distance of the flagged rows measured
//! inside the projection plane. It never exceeds the summed full-dimensional
//! squared distances, and depends on `P` only through its span.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SpdMatrix};
use crate::reference::{projected_shape, ReferenceModel};
use crate::tour::ProjectionBasis;

/// Squared Mahalanobis distance `(x - μ) Σ⁻¹ (x - μ)ᵀ`.
pub fn mahalanobis_sq(x: &[f64], model: &ReferenceModel) -> Result<f64> {
    model.quad_form(x)
}

/// Squared Mahalanobis distance of every row of `x`.
pub fn mahalanobis_sq_rows(x: &Matrix, model: &ReferenceModel) -> Result<Vec<f64>> {
    check_cols(x, model)?;
    x.row_iter().map(|r| model.quad_form(r)).collect()
}

fn check_cols(x: &Matrix, model: &ReferenceModel) -> Result<()> {
    if x.cols() != model.dim() {
        return Err(Error::dims(
            format!("{} columns", model.dim()),
            format!("{} columns", x.cols()),
        ));
    }
    Ok(())
}

/// How to choose the flagged set `W`.
#[derive(Clone, Debug, PartialEq)]
pub enum OutlierRule {
    /// Rows strictly outside the reference ellipsoid.
    OutsideEllipsoid,
    /// The `k` rows with the largest Mahalanobis distance.
    TopK(usize),
    /// An explicit list of row indices.
    Manual(Vec<usize>),
}

/// The rule that produced an [`OutlierSet`], with its parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum SelectionRule {
    OutsideEllipsoid { level_c2: f64 },
    TopK { k: usize },
    Manual,
}

/// Flagged rows `W`, strictly increasing row indices.
#[derive(Clone, Debug, PartialEq)]
pub struct OutlierSet {
    indices: Vec<usize>,
    rule: SelectionRule,
}

impl OutlierSet {
    /// Validates `indices` against a data matrix of `n_rows` rows.
    pub fn manual(mut indices: Vec<usize>, n_rows: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidRule(format!("row {} listed twice", w[0])));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n_rows) {
            return Err(Error::InvalidRule(format!(
                "row {bad} out of bounds for {n_rows} rows"
            )));
        }
        Ok(Self {
            indices,
            rule: SelectionRule::Manual,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn rule(&self) -> &SelectionRule {
        &self.rule
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.indices.binary_search(&row).is_ok()
    }
}

pub fn select_outliers(x: &Matrix, model: &ReferenceModel, rule: &OutlierRule) -> Result<OutlierSet> {
    let d2 = mahalanobis_sq_rows(x, model)?;
    select_from_distances(&d2, model.level_c2(), rule)
}

/// Applies `rule` to precomputed squared distances.
pub fn select_from_distances(d2: &[f64], level_c2: f64, rule: &OutlierRule) -> Result<OutlierSet> {
    let n = d2.len();
    match rule {
        OutlierRule::OutsideEllipsoid => Ok(OutlierSet {
            indices: (0..n).filter(|&i| d2[i] > level_c2).collect(),
            rule: SelectionRule::OutsideEllipsoid { level_c2 },
        }),
        OutlierRule::TopK(k) => {
            let k = *k;
            if k > n {
                return Err(Error::InvalidRule(format!("top-{k} requested from {n} rows")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            // descending distance, ties to the lower row index
            order.sort_by(|&a, &b| {
                d2[b].partial_cmp(&d2[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b))
            });
            let mut indices = order[..k].to_vec();
            indices.sort_unstable();
            Ok(OutlierSet {
                indices,
                rule: SelectionRule::TopK { k },
            })
        }
        OutlierRule::Manual(rows) => OutlierSet::manual(rows.clone(), n),
    }
}

/// The anomaly index bound to a data set, flagged rows and reference, ready
/// to be evaluated at many bases.
#[derive(Clone, Debug)]
pub struct AnomalyIndex {
    centered: Option<Matrix>,
    sigma: Matrix,
    p: usize,
}

impl AnomalyIndex {
    pub fn new(x: &Matrix, w: &OutlierSet, model: &ReferenceModel) -> Result<Self> {
        check_cols(x, model)?;
        if let Some(&bad) = w.indices().iter().find(|&&i| i >= x.rows()) {
            return Err(Error::InvalidRule(format!(
                "flagged row {bad} out of bounds for {} rows",
                x.rows()
            )));
        }
        let centered = if w.is_empty() {
            None
        } else {
            let mut c = x.select_rows(w.indices());
            for i in 0..c.rows() {
                for (v, m) in c.row_mut(i).iter_mut().zip(model.mean()) {
                    *v -= m;
                }
            }
            Some(c)
        };
        Ok(Self {
            centered,
            sigma: model.covariance().matrix().clone(),
            p: model.dim(),
        })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// Index value at `basis`; rows are summed in ascending row order.
    pub fn evaluate(&self, basis: &ProjectionBasis) -> Result<f64> {
        if basis.p() != self.p {
            return Err(Error::dims(
                format!("{} x 2 basis", self.p),
                format!("{} x 2", basis.p()),
            ));
        }
        let Some(centered) = &self.centered else {
            return Ok(0.0);
        };
        let shape = SpdMatrix::new(projected_shape(&self.sigma, basis)?)?;
        let projected = centered.matmul(basis.matrix())?;
        let mut total = 0.0;
        for y in projected.row_iter() {
            total += shape.quad_form(y)?;
        }
        Ok(total)
    }
}

pub fn anomaly_index(
    x: &Matrix,
    w: &OutlierSet,
    model: &ReferenceModel,
    basis: &ProjectionBasis,
) -> Result<f64> {
    AnomalyIndex::new(x, w, model)?.evaluate(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::Level;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mahalanobis_examples() {
        let m = ReferenceModel::new(vec![1.0, 1.0], Matrix::identity(2), Level::C2(1.0)).unwrap();
        assert_eq!(mahalanobis_sq(&[1.0, 1.0], &m).unwrap(), 0.0);
        assert_eq!(mahalanobis_sq(&[4.0, 5.0], &m).unwrap(), 25.0);
        let d = ReferenceModel::new(vec![0.0, 0.0], Matrix::diag(&[4.0, 1.0]), Level::C2(1.0)).unwrap();
        // 2²/4 + 1²/1
        assert_eq!(mahalanobis_sq(&[2.0, 1.0], &d).unwrap(), 2.0);
        assert!(mahalanobis_sq(&[1.0], &d).is_err());
    }

    #[test]
    fn rows_at_mean_flag_nothing() {
        let m = ReferenceModel::new(vec![2.0, -1.0, 0.5], Matrix::identity(3), Level::C2(1.0)).unwrap();
        let x = Matrix::from_rows(&[[2.0, -1.0, 0.5]; 4]).unwrap();
        let w = select_outliers(&x, &m, &OutlierRule::OutsideEllipsoid).unwrap();
        assert!(w.is_empty());
        assert_eq!(w.rule(), &SelectionRule::OutsideEllipsoid { level_c2: 1.0 });
    }

    #[test]
    fn sixty_threshold_in_sixteen_dimensions() {
        let m = ReferenceModel::standard(16, Level::C2(60.0)).unwrap();
        let mut a = vec![0.0; 16];
        a[0] = 61f64.sqrt();
        let mut b = vec![0.0; 16];
        b[3] = 59f64.sqrt();
        let x = Matrix::from_rows(&[a, b]).unwrap();
        let w = select_outliers(&x, &m, &OutlierRule::OutsideEllipsoid).unwrap();
        assert_eq!(w.indices(), &[0]);
    }

    #[test]
    fn top_k_matches_full_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = ReferenceModel::standard(3, Level::C2(1.0)).unwrap();
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let w = select_outliers(&x, &m, &OutlierRule::TopK(2)).unwrap();
        let mut by_dist: Vec<(f64, usize)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().map(|v| v * v).sum(), i))
            .collect();
        by_dist.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut want = vec![by_dist[0].1, by_dist[1].1];
        want.sort();
        assert_eq!(w.indices(), want.as_slice());
        assert!(select_outliers(&x, &m, &OutlierRule::TopK(31)).is_err());
    }

    #[test]
    fn top_k_ties_prefer_lower_rows() {
        let w = select_from_distances(&[1.0, 5.0, 5.0, 5.0], 0.5, &OutlierRule::TopK(2)).unwrap();
        assert_eq!(w.indices(), &[1, 2]);
    }

    #[test]
    fn manual_rule_validation() {
        let w = select_from_distances(&[0.0; 5], 1.0, &OutlierRule::Manual(vec![4, 1])).unwrap();
        assert_eq!(w.indices(), &[1, 4]);
        assert!(matches!(
            select_from_distances(&[0.0; 5], 1.0, &OutlierRule::Manual(vec![5])),
            Err(Error::InvalidRule(_))
        ));
        assert!(OutlierSet::manual(vec![1, 1], 3).is_err());
    }

    #[test]
    fn index_examples() {
        let m = ReferenceModel::standard(3, Level::C2(1.0)).unwrap();
        let x = Matrix::from_rows(&[[2.5, 0.0, 0.0], [0.1, 0.1, 0.1]]).unwrap();
        let b = ProjectionBasis::coordinate_plane(3, 0, 1).unwrap();
        let empty = OutlierSet::manual(vec![], 2).unwrap();
        assert_eq!(anomaly_index(&x, &empty, &m, &b).unwrap(), 0.0);
        let w = OutlierSet::manual(vec![0], 2).unwrap();
        assert!((anomaly_index(&x, &w, &m, &b).unwrap() - 6.25).abs() < 1e-14);
    }

    #[test]
    fn full_dimension_equals_mahalanobis_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sigma = Matrix::from_rows(&[[2.0, 0.6], [0.6, 1.0]]).unwrap();
        let m = ReferenceModel::new(vec![0.3, -0.7], sigma, Level::C2(1.0)).unwrap();
        let rows: Vec<[f64; 2]> = (0..10)
            .map(|_| [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)])
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let w = OutlierSet::manual((0..10).collect(), 10).unwrap();
        let b = ProjectionBasis::new(Matrix::identity(2)).unwrap();
        let direct: f64 = rows.iter().map(|r| mahalanobis_sq(r, &m).unwrap()).sum();
        let idx = anomaly_index(&x, &w, &m, &b).unwrap();
        assert!((idx - direct).abs() < 1e-10 * direct);
    }
}
