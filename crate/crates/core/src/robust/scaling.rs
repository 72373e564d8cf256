use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Normal-consistency constant for the MAD.
pub const MAD_CONSISTENCY: f64 = 1.4826;

/// Median of a non-empty slice; even counts give the midpoint of the central pair.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-column centre and spread used to standardise data.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustScaling {
    pub medians: Vec<f64>,
    /// MADs already multiplied by [`MAD_CONSISTENCY`].
    pub mads: Vec<f64>,
}

impl RobustScaling {
    pub fn dim(&self) -> usize {
        self.medians.len()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::dims(self.dim(), row.len()));
        }
        Ok(row
            .iter()
            .zip(self.medians.iter().zip(&self.mads))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let rows = x.row_iter().map(|r| self.apply_row(r)).collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(&rows)
    }
}

/// Centres every column on its median and divides by its scaled MAD.
pub fn median_mad_standardize(x: &Matrix) -> Result<(Matrix, RobustScaling)> {
    if x.rows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "median/MAD scaling needs at least 2 rows, got {}",
            x.rows()
        )));
    }
    let mut medians = Vec::with_capacity(x.cols());
    let mut mads = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let col = x.col(j);
        let m = median(&col);
        let dev: Vec<f64> = col.iter().map(|v| (v - m).abs()).collect();
        let mad = median(&dev);
        if mad == 0.0 {
            return Err(Error::ZeroSpread { column: j });
        }
        medians.push(m);
        mads.push(MAD_CONSISTENCY * mad);
    }
    let scaling = RobustScaling { medians, mads };
    Ok((scaling.apply(x)?, scaling))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn five_point_column() {
        let x = Matrix::from_rows(&[[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 40.0], [5.0, 50.0]]).unwrap();
        let (z, s) = median_mad_standardize(&x).unwrap();
        assert_eq!(s.medians, vec![3.0, 30.0]);
        // |x - 3| = (2, 1, 0, 1, 2) has median 1
        assert_eq!(s.mads[0], 1.4826);
        assert_eq!(z[(2, 0)], 0.0);
        assert_eq!(z[(4, 0)], 2.0 / 1.4826);
    }

    #[test]
    fn even_count_median() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn constant_column_has_zero_spread() {
        let x = Matrix::from_rows(&[[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]]).unwrap();
        assert!(matches!(
            median_mad_standardize(&x),
            Err(Error::ZeroSpread { column: 1 })
        ));
        assert!(median_mad_standardize(&Matrix::from_rows(&[[1.0, 2.0]]).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn odd_symmetry(rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 5..30)) {
            let x = Matrix::from_rows(&rows).unwrap();
            let neg = x.scaled(-1.0);
            if let (Ok((z, _)), Ok((zn, _))) = (median_mad_standardize(&x), median_mad_standardize(&neg)) {
                prop_assert!(z.scaled(-1.0).max_abs_diff(&zn) < 1e-12);
            }
        }

        #[test]
        fn standardized_columns_have_zero_median_unit_mad(
            rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2), 2..40)
        ) {
            let x = Matrix::from_rows(&rows).unwrap();
            if let Ok((z, _)) = median_mad_standardize(&x) {
                for j in 0..2 {
                    let col = z.col(j);
                    let m = median(&col);
                    if col.len() % 2 == 1 {
                        prop_assert_eq!(m, 0.0);
                    } else {
                        prop_assert!(m.abs() < 1e-12);
                    }
                    let dev: Vec<f64> = col.iter().map(|v| (v - m).abs()).collect();
                    prop_assert!((MAD_CONSISTENCY * median(&dev) - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
