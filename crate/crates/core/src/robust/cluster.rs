use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

const MAX_LLOYD: usize = 300;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Scales every row to unit length.
pub fn normalize_directions(x: &Matrix) -> Result<Matrix> {
    let mut out = x.clone();
    for i in 0..x.rows() {
        let n = x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::ZeroVector { row: i });
        }
        for v in out.row_mut(i) {
            *v /= n;
        }
    }
    Ok(out)
}

/// A k-means partition.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSolution {
    pub k: usize,
    pub labels: Vec<usize>,
    /// Cluster means scaled to unit length (k × p); a zero mean stays zero.
    pub centroids: Matrix,
    /// Cluster means as found by Lloyd's iterations.
    pub means: Matrix,
    /// Within-cluster sum of squares.
    pub wcss: f64,
    /// Objective after each Lloyd iteration of the winning start.
    pub wcss_trace: Vec<f64>,
    /// Dunn index, when `k >= 2`.
    pub dunn: Option<f64>,
}

fn nearest(row: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(row, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_plus_plus(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let m = x.rows();
    let mut chosen = vec![rng.random_range(0..m)];
    let mut d2: Vec<f64> = (0..m).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = m - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..m)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(next)));
        }
    }
    x.select_rows(&chosen)
}

fn lloyd(x: &Matrix, mut centroids: Matrix) -> (Vec<usize>, Matrix, Vec<f64>) {
    let (m, p) = x.shape();
    let k = centroids.rows();
    let mut labels = vec![usize::MAX; m];
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD {
        let mut changed = false;
        let mut dist = vec![0.0; m];
        for i in 0..m {
            let (c, d) = nearest(x.row(i), &centroids);
            dist[i] = d;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        // an empty cluster takes the point farthest from its own centroid
        for c in 0..k {
            if !labels.contains(&c) {
                let far = (0..m)
                    .filter(|&i| labels.iter().filter(|&&l| l == labels[i]).count() > 1)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
                if let Some(i) = far {
                    labels[i] = c;
                    dist[i] = 0.0;
                    changed = true;
                }
            }
        }
        let mut sums = Matrix::zeros(k, p);
        let mut counts = vec![0usize; k];
        for i in 0..m {
            counts[labels[i]] += 1;
            for (s, v) in sums.row_mut(labels[i]).iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums.row_mut(c) {
                    *s /= counts[c] as f64;
                }
            } else {
                sums.row_mut(c).copy_from_slice(centroids.row(c));
            }
        }
        centroids = sums;
        trace.push(wcss(x, &labels, &centroids));
        if !changed {
            break;
        }
    }
    (labels, centroids, trace)
}

fn wcss(x: &Matrix, labels: &[usize], centroids: &Matrix) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(x.row(i), centroids.row(c)))
        .sum()
}

/// Lloyd's k-means with k-means++ seeding, best of `n_starts` by objective
/// (ties to the earlier start).
pub fn kmeans(x: &Matrix, k: usize, n_starts: usize, seed: u64) -> Result<ClusterSolution> {
    let m = x.rows();
    if k == 0 || k > m {
        return Err(Error::InvalidK { k, m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, Matrix, Vec<f64>)> = None;
    for _ in 0..n_starts.max(1) {
        let init = seed_plus_plus(x, k, &mut rng);
        let run = lloyd(x, init);
        let obj = *run.2.last().expect("at least one iteration");
        if best.as_ref().is_none_or(|b| obj < *b.2.last().unwrap()) {
            best = Some(run);
        }
    }
    let (labels, means, wcss_trace) = best.expect("at least one start");
    let mut centroids = means.clone();
    for c in 0..k {
        let n = means.row(c).iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 {
            for v in centroids.row_mut(c) {
                *v /= n;
            }
        }
    }
    let dunn = if k >= 2 { Some(dunn_index(x, &labels)?) } else { None };
    Ok(ClusterSolution {
        k,
        labels,
        centroids,
        means,
        wcss: *wcss_trace.last().unwrap(),
        wcss_trace,
        dunn,
    })
}

/// Smallest between-cluster single-linkage distance over the largest cluster
/// diameter. Infinite when every cluster is a single point.
pub fn dunn_index(x: &Matrix, labels: &[usize]) -> Result<f64> {
    let m = x.rows();
    if labels.len() != m {
        return Err(Error::dims(m, labels.len()));
    }
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    if k < 2 {
        return Err(Error::InvalidK { k, m });
    }
    if let Some(c) = (0..k).find(|c| !labels.contains(c)) {
        return Err(Error::EmptyCluster { cluster: c });
    }
    let mut min_between = f64::INFINITY;
    let mut max_diameter: f64 = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let d = sq_dist(x.row(i), x.row(j)).sqrt();
            if labels[i] == labels[j] {
                max_diameter = max_diameter.max(d);
            } else {
                min_between = min_between.min(d);
            }
        }
    }
    if max_diameter == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(min_between / max_diameter)
}

/// Outcome of choosing k by the Dunn index.
#[derive(Clone, Debug)]
pub struct KSelection {
    pub best: ClusterSolution,
    /// `(k, dunn)` for every k tried.
    pub scores: Vec<(usize, f64)>,
}

/// Runs k-means for every k in `range` and keeps the largest Dunn index
/// (ties to the smaller k).
pub fn select_k(
    x: &Matrix,
    range: RangeInclusive<usize>,
    n_starts: usize,
    seed: u64,
) -> Result<KSelection> {
    let m = x.rows();
    let (lo, hi) = (*range.start(), *range.end());
    if lo < 2 || lo > hi {
        return Err(Error::InvalidArgument(format!(
            "k range {lo}..{hi} must be non-empty and start at 2 or more"
        )));
    }
    if hi > m {
        return Err(Error::InvalidK { k: hi, m });
    }
    let mut best: Option<ClusterSolution> = None;
    let mut scores = Vec::new();
    for k in range {
        let sol = kmeans(x, k, n_starts, seed.wrapping_add(k as u64))?;
        let d = sol.dunn.expect("k >= 2");
        scores.push((k, d));
        if best.as_ref().is_none_or(|b| d > b.dunn.unwrap()) {
            best = Some(sol);
        }
    }
    Ok(KSelection {
        best: best.expect("range is non-empty"),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalizes_rows() {
        let x = Matrix::from_rows(&[[3.0, 4.0], [0.0, -2.0]]).unwrap();
        let u = normalize_directions(&x).unwrap();
        assert_eq!(u.row(0), &[0.6, 0.8]);
        assert_eq!(u.row(1), &[0.0, -1.0]);
        let z = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(normalize_directions(&z), Err(Error::ZeroVector { row: 1 })));
    }

    #[test]
    fn single_cluster_is_column_means() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let s = kmeans(&x, 1, 3, 0).unwrap();
        assert_eq!(s.labels, vec![0, 0, 0]);
        assert!((s.means[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.means[(0, 1)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.centroids[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(s.dunn.is_none());
    }

    #[test]
    fn invalid_k() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(kmeans(&x, 3, 1, 0), Err(Error::InvalidK { k: 3, m: 2 })));
        assert!(matches!(kmeans(&x, 0, 1, 0), Err(Error::InvalidK { .. })));
    }

    #[test]
    fn dunn_two_pairs() {
        // two tight pairs 10 apart: diameter 1, separation 9
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [11.0, 0.0]]).unwrap();
        assert_eq!(dunn_index(&x, &[0, 0, 1, 1]).unwrap(), 9.0);
        let single = dunn_index(&x, &[0, 1, 2, 3]).unwrap();
        assert!(single.is_infinite());
        assert!(matches!(dunn_index(&x, &[0, 0, 2, 2]), Err(Error::EmptyCluster { cluster: 1 })));
    }

    #[test]
    fn recovers_planted_directions() {
        let mut rows = Vec::new();
        let dirs = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for d in &dirs {
            for e in [-0.05f64, 0.0, 0.05] {
                rows.push([d[0] + e, d[1] + e.abs(), d[2] - e]);
            }
        }
        let u = normalize_directions(&Matrix::from_rows(&rows).unwrap()).unwrap();
        let sel = select_k(&u, 2..=6, 10, 3).unwrap();
        assert_eq!(sel.best.k, 3);
        for g in 0..3 {
            let l = sel.best.labels[3 * g];
            assert!(sel.best.labels[3 * g..3 * g + 3].iter().all(|&x| x == l));
        }
        for c in 0..3 {
            let n: f64 = sel.best.centroids.row(c).iter().map(|v| v * v).sum();
            assert!((n.sqrt() - 1.0).abs() < 1e-10);
        }
        assert_eq!(sel.scores.len(), 5);
    }

    proptest! {
        #[test]
        fn lloyd_objective_never_increases(
            rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 6..40),
            k in 1usize..5,
            seed in 0u64..1000,
        ) {
            let x = Matrix::from_rows(&rows).unwrap();
            let s = kmeans(&x, k, 2, seed).unwrap();
            for w in s.wcss_trace.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
            }
            prop_assert_eq!(s.labels.len(), x.rows());
            for c in 0..k {
                prop_assert!(s.labels.contains(&c));
            }
        }
    }
}
