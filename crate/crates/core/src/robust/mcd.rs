use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::scaling::median;
use crate::error::{Error, Result};
use crate::numerics::{chi2_cdf, chi2_quantile, f_quantile_upper};
use crate::numerics::{Matrix, SpdMatrix};

const MAX_C_STEPS: usize = 100;
const DET_REL_TOL: f64 = 1e-12;
const SINGULAR_RIDGE: f64 = 1e-8;

/// Sample mean and covariance (n − 1 divisor) of the selected rows, in the
/// order given.
pub fn mean_cov(x: &Matrix, rows: &[usize]) -> Result<(Vec<f64>, Matrix)> {
    let p = x.cols();
    let n = rows.len();
    if n < 2 {
        return Err(Error::DegenerateData(format!(
            "covariance needs at least 2 rows, got {n}"
        )));
    }
    let mut mean = vec![0.0; p];
    for &i in rows {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = Matrix::zeros(p, p);
    for &i in rows {
        let d: Vec<f64> = x.row(i).iter().zip(&mean).map(|(v, m)| v - m).collect();
        for a in 0..p {
            for b in a..p {
                cov[(a, b)] += d[a] * d[b];
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok((mean, cov))
}

fn factor(cov: Matrix) -> Option<SpdMatrix> {
    if let Ok(s) = SpdMatrix::new(cov.clone()) {
        return Some(s);
    }
    let mut ridged = cov;
    for i in 0..ridged.rows() {
        ridged[(i, i)] += SINGULAR_RIDGE;
    }
    SpdMatrix::new(ridged).ok()
}

fn distances(x: &Matrix, mean: &[f64], cov: &SpdMatrix) -> Vec<f64> {
    x.row_iter()
        .map(|r| {
            let d: Vec<f64> = r.iter().zip(mean).map(|(v, m)| v - m).collect();
            cov.quad_form(&d).unwrap_or(f64::INFINITY)
        })
        .collect()
}

/// Indices of the `h` smallest distances (ties to the lower row), sorted.
fn smallest(d: &[f64], h: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut keep = order[..h].to_vec();
    keep.sort_unstable();
    keep
}

/// Raw minimum covariance determinant estimate.
#[derive(Clone, Debug)]
pub struct McdFit {
    pub mean: Vec<f64>,
    pub covariance: SpdMatrix,
    /// The winning h-subset, ascending.
    pub support: Vec<usize>,
    pub h: usize,
    /// Ordinal of the winning start; `n_starts` denotes the median start.
    pub best_start: usize,
    /// Per start, the determinants of successive h-subset estimates. Empty for
    /// starts discarded as singular.
    pub det_traces: Vec<Vec<f64>>,
}

impl McdFit {
    pub fn log_det(&self) -> f64 {
        self.covariance.log_det()
    }
}

struct StartResult {
    mean: Vec<f64>,
    cov: SpdMatrix,
    support: Vec<usize>,
    trace: Vec<f64>,
}

fn concentrate(x: &Matrix, h: usize, initial: &[usize]) -> Option<StartResult> {
    let (mut mean, cov) = mean_cov(x, initial).ok()?;
    let mut cov = factor(cov)?;
    let mut support: Vec<usize> = Vec::new();
    let mut trace: Vec<f64> = Vec::new();
    if initial.len() == h {
        support = initial.to_vec();
        trace.push(cov.det());
    }
    for _ in 0..MAX_C_STEPS {
        let next = smallest(&distances(x, &mean, &cov), h);
        if next == support {
            break;
        }
        let (m, c) = mean_cov(x, &next).ok()?;
        let c = factor(c)?;
        let det = c.det();
        let settled = trace
            .last()
            .is_some_and(|&prev| (prev - det).abs() <= DET_REL_TOL * prev.abs());
        mean = m;
        cov = c;
        support = next;
        trace.push(det);
        if settled {
            break;
        }
    }
    Some(StartResult {
        mean,
        cov,
        support,
        trace,
    })
}

/// The `h` rows closest to the coordinatewise median in MAD units.
fn median_start(x: &Matrix, h: usize) -> Vec<usize> {
    let mut score = vec![0.0; x.rows()];
    for j in 0..x.cols() {
        let col = x.col(j);
        let m = median(&col);
        let dev: Vec<f64> = col.iter().map(|v| (v - m).abs()).collect();
        let s = match median(&dev) {
            s if s > 0.0 => s,
            _ => 1.0,
        };
        for (acc, v) in score.iter_mut().zip(&col) {
            *acc += ((v - m) / s).powi(2);
        }
    }
    smallest(&score, h)
}

/// FastMCD: concentration steps from `n_starts` random (p+1)-subsets plus one
/// start at the rows nearest the coordinatewise median. Returns the h-subset
/// estimate with the smallest covariance determinant (ties to the earlier
/// start). No consistency correction or reweighting is applied.
pub fn fast_mcd(x: &Matrix, h: usize, n_starts: usize, seed: u64) -> Result<McdFit> {
    let (n, p) = x.shape();
    if h < p + 1 || h > n {
        return Err(Error::InvalidArgument(format!(
            "MCD subset size h = {h} must lie in [{}, {n}]",
            p + 1
        )));
    }
    if n_starts == 0 {
        return Err(Error::InvalidArgument("MCD needs at least one start".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<usize>> = (0..n_starts)
        .map(|_| {
            let mut s = sample(&mut rng, n, p + 1).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    starts.push(median_start(x, h));

    let results: Vec<Option<StartResult>> =
        starts.par_iter().map(|s| concentrate(x, h, s)).collect();

    let mut best: Option<(usize, f64)> = None;
    for (k, r) in results.iter().enumerate() {
        if let Some(r) = r {
            let ld = r.cov.log_det();
            if best.is_none_or(|(_, b)| ld < b) {
                best = Some((k, ld));
            }
        }
    }
    let Some((best_start, _)) = best else {
        return Err(Error::DegenerateData(
            "every MCD start produced a singular covariance".into(),
        ));
    };
    let det_traces = results
        .iter()
        .map(|r| r.as_ref().map(|r| r.trace.clone()).unwrap_or_default())
        .collect();
    let win = results.into_iter().nth(best_start).flatten().expect("winner exists");
    Ok(McdFit {
        mean: win.mean,
        covariance: win.cov,
        support: win.support,
        h,
        best_start,
        det_traces,
    })
}

/// Default subset size ⌊(n + p + 1) / 2⌋, the maximal-breakdown choice.
pub fn default_h(n: usize, p: usize) -> usize {
    (n + p).div_ceil(2)
}

/// Factor making the raw h-subset covariance consistent at the normal.
pub fn consistency_factor(h: usize, n: usize, p: usize) -> Result<f64> {
    let alpha = h as f64 / n as f64;
    if alpha >= 1.0 {
        return Ok(1.0);
    }
    let q = chi2_quantile(alpha, p as u32)?;
    Ok(alpha / chi2_cdf(q, (p + 2) as u32))
}

/// Squared-distance cutoff for a row judged against a fit on `m` other rows:
/// the `1 - tail` prediction limit `p(m-1)(m+1) / (m(m-p)) · F(p, m-p)`.
pub fn prediction_cutoff(tail: f64, m: usize, p: usize) -> Result<f64> {
    if m <= p + 1 {
        return Err(Error::DegenerateData(format!(
            "a fit on {m} rows cannot judge {p}-dimensional rows"
        )));
    }
    if tail <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let (mf, pf) = (m as f64, p as f64);
    let f = f_quantile_upper(tail, p as u32, (m - p) as u32)?;
    Ok(pf * (mf - 1.0) * (mf + 1.0) / (mf * (mf - pf)) * f)
}

/// Mean and covariance after reweighting.
#[derive(Clone, Debug)]
pub struct Reweighted {
    pub mean: Vec<f64>,
    pub covariance: SpdMatrix,
    /// Rows of the final fit, ascending.
    pub kept: Vec<usize>,
    pub iterations: usize,
}

/// Grows or shrinks the fitting set from `support` until it is stable. Each
/// row is judged by its distance to the classical fit on the other kept rows
/// (leave-one-out for kept rows) against [`prediction_cutoff`] at upper-tail
/// mass `tail`.
pub fn reweight(x: &Matrix, support: &[usize], tail: f64, max_iter: usize) -> Result<Reweighted> {
    let (n, p) = x.shape();
    let mut kept = support.to_vec();
    kept.sort_unstable();
    let mut iterations = 0;
    loop {
        let m = kept.len();
        let (mean, cov) = mean_cov(x, &kept)?;
        let cov = factor(cov)
            .ok_or_else(|| Error::DegenerateData("reweighted covariance is singular".into()))?;
        if iterations == max_iter.max(1) {
            return Ok(Reweighted { mean, covariance: cov, kept, iterations });
        }
        let outside_cut = prediction_cutoff(tail, m, p)?;
        let inside_cut = prediction_cutoff(tail, m - 1, p)?;
        let keep: Vec<bool> = (0..n)
            .into_par_iter()
            .map(|i| -> Result<bool> {
                match kept.binary_search(&i) {
                    Ok(pos) => {
                        let mut others = kept.clone();
                        others.remove(pos);
                        let (m_i, c_i) = mean_cov(x, &others)?;
                        let c_i = factor(c_i).ok_or_else(|| {
                            Error::DegenerateData("leave-one-out covariance is singular".into())
                        })?;
                        Ok(distances_one(x.row(i), &m_i, &c_i) <= inside_cut)
                    }
                    Err(_) => Ok(distances_one(x.row(i), &mean, &cov) <= outside_cut),
                }
            })
            .collect::<Result<_>>()?;
        let next: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
        iterations += 1;
        if next == kept {
            return Ok(Reweighted { mean, covariance: cov, kept, iterations });
        }
        if next.len() <= p + 2 {
            return Err(Error::DegenerateData(format!(
                "only {} rows survive reweighting",
                next.len()
            )));
        }
        kept = next;
    }
}

fn distances_one(row: &[f64], mean: &[f64], cov: &SpdMatrix) -> f64 {
    let d: Vec<f64> = row.iter().zip(mean).map(|(v, m)| v - m).collect();
    cov.quad_form(&d).unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        Matrix::new(n, p, data).unwrap()
    }

    #[test]
    fn full_subset_is_classical() {
        let x = gaussian(30, 3, 1);
        let all: Vec<usize> = (0..30).collect();
        let (m, c) = mean_cov(&x, &all).unwrap();
        let fit = fast_mcd(&x, 30, 10, 2).unwrap();
        assert_eq!(fit.mean, m);
        assert_eq!(fit.covariance.matrix(), &c);
        assert_eq!(fit.support, all);
    }

    #[test]
    fn determinants_never_increase() {
        let mut x = gaussian(60, 4, 3);
        for i in 0..10 {
            for j in 0..4 {
                x[(i, j)] += 8.0;
            }
        }
        let fit = fast_mcd(&x, default_h(60, 4), 40, 9).unwrap();
        for trace in &fit.det_traces {
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9), "{trace:?}");
            }
        }
        assert!(fit.support.iter().all(|&i| i >= 10));
    }

    #[test]
    fn deterministic_and_rejects_bad_h() {
        let x = gaussian(40, 3, 5);
        let a = fast_mcd(&x, 25, 20, 1).unwrap();
        let b = fast_mcd(&x, 25, 20, 1).unwrap();
        assert_eq!(a.support, b.support);
        assert_eq!(a.mean, b.mean);
        assert!(fast_mcd(&x, 3, 20, 1).is_err());
        assert!(fast_mcd(&x, 41, 20, 1).is_err());
    }

    #[test]
    fn consistency_factor_known_values() {
        assert_eq!(consistency_factor(50, 50, 3).unwrap(), 1.0);
        // alpha = 0.5, p = 1: 0.5 / P(chi2_3 <= chi2_1(0.5))
        let q = chi2_quantile(0.5, 1).unwrap();
        let expected = 0.5 / chi2_cdf(q, 3);
        let got = consistency_factor(50, 100, 1).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!(got > 1.0);
    }

    #[test]
    fn reweighting_drops_far_rows() {
        let mut x = gaussian(80, 3, 11);
        for i in 0..8 {
            x[(i, 0)] += 30.0;
        }
        let raw = fast_mcd(&x, default_h(80, 3), 20, 4).unwrap();
        let rw = reweight(&x, &raw.support, 1e-4, 50).unwrap();
        assert_eq!(rw.kept, (8..80).collect::<Vec<_>>());
        assert!(rw.mean[0].abs() < 0.5);
    }

    #[test]
    fn prediction_cutoff_grows_for_small_fits() {
        let big = prediction_cutoff(1e-3, 5000, 4).unwrap();
        let exact = chi2_quantile(1.0 - 1e-3, 4).unwrap();
        assert!((big / exact - 1.0).abs() < 0.01, "{big} vs {exact}");
        assert!(prediction_cutoff(1e-3, 20, 4).unwrap() > big);
        assert!(prediction_cutoff(1e-3, 5, 4).is_err());
        assert!(prediction_cutoff(0.0, 50, 4).unwrap().is_infinite());
    }
}
