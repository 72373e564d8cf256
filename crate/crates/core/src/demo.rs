//! Synthetic datasets with known structure, for demos and tests.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::Result;
use crate::numerics::{cholesky, Matrix};
use crate::reference::{Level, ReferenceModel};

/// A sample together with the reference it was drawn against and the planted
/// truth.
#[derive(Clone, Debug)]
pub struct PlantedSample {
    pub dataset: Dataset,
    pub reference: ReferenceModel,
    /// Planted group of each row; `None` for rows drawn from the reference.
    pub labels: Vec<Option<usize>>,
    /// Unit planted directions in whitened coordinates, one row per group.
    pub directions: Matrix,
}

impl PlantedSample {
    pub fn planted_rows(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_some()).collect()
    }
}

fn normal_vec(p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..p).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit_vec(p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v = normal_vec(p, rng);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn names(prefix: &str, p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("{prefix}{j}")).collect()
}

/// Reference N(0, I₆) and a sample of `n` points shifted 5 standard
/// deviations along (e₄ + e₅)/√2.
pub fn fig4_analogue(n: usize, seed: u64) -> Result<PlantedSample> {
    let p = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let dir = [0.0, 0.0, 0.0, s, s, 0.0];
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let z = normal_vec(p, &mut rng);
            z.iter().zip(&dir).map(|(z, d)| z + 5.0 * d).collect()
        })
        .collect();
    Ok(PlantedSample {
        dataset: Dataset::new(names("x", p), Matrix::from_rows(&rows)?)?,
        reference: ReferenceModel::standard(p, Level::Probability(0.95))?,
        labels: vec![Some(0); n],
        directions: Matrix::from_rows(&[dir])?,
    })
}

/// Layout of [`planted_groups`].
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub p: usize,
    pub n_clean: usize,
    pub n_groups: usize,
    pub per_group: usize,
    /// Distance of each group from the mean, in whitened units.
    pub magnitude: f64,
}

impl Default for PlantedConfig {
    /// 48 clean rows and 5 groups of 4 anomalies in 16 dimensions.
    fn default() -> Self {
        Self {
            p: 16,
            n_clean: 48,
            n_groups: 5,
            per_group: 4,
            magnitude: 20.0,
        }
    }
}

/// Clean rows from a correlated Gaussian with unequal scales plus groups of
/// anomalies, each group spread N(0, I) around `magnitude` times its own
/// random unit direction (whitened units). Rows are shuffled.
pub fn planted_groups(cfg: &PlantedConfig, seed: u64) -> Result<PlantedSample> {
    let p = cfg.p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean: Vec<f64> = (0..p).map(|j| 10.0 * (j as f64 + 1.0)).collect();
    let scales: Vec<f64> = (0..p).map(|j| 0.5 + 4.5 * j as f64 / (p.max(2) - 1) as f64).collect();
    let mut cov = Matrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            let rho = 0.5f64.powi((a as i32 - b as i32).abs());
            cov[(a, b)] = rho * scales[a] * scales[b];
        }
    }
    let l = cholesky(&cov)?;
    let color = |z: &[f64]| -> Vec<f64> {
        (0..p)
            .map(|i| mean[i] + (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>())
            .collect()
    };
    let dirs: Vec<Vec<f64>> = (0..cfg.n_groups).map(|_| unit_vec(p, &mut rng)).collect();
    let mut rows: Vec<(Vec<f64>, Option<usize>)> = Vec::new();
    for _ in 0..cfg.n_clean {
        rows.push((color(&normal_vec(p, &mut rng)), None));
    }
    for (g, d) in dirs.iter().enumerate() {
        for _ in 0..cfg.per_group {
            let z: Vec<f64> = normal_vec(p, &mut rng)
                .iter()
                .zip(d)
                .map(|(z, d)| z + cfg.magnitude * d)
                .collect();
            rows.push((color(&z), Some(g)));
        }
    }
    rows.shuffle(&mut rng);
    let (values, labels): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(PlantedSample {
        dataset: Dataset::new(names("v", p), Matrix::from_rows(&values)?)?,
        reference: ReferenceModel::new(mean, cov, Level::Sigma(5.0))?,
        labels,
        directions: Matrix::from_rows(&dirs)?,
    })
}

/// Liver panel variables and normal ranges (min, max).
pub const LIVER_PANEL: [(&str, f64, f64); 7] = [
    ("albumin", 35.0, 50.0),
    ("protein", 60.0, 80.0),
    ("bilirubin", 0.0, 20.0),
    ("GGT", 2.0, 44.0),
    ("AST", 5.0, 30.0),
    ("ALP", 30.0, 120.0),
    ("ALT", 5.0, 40.0),
];

/// Illustrative (not clinical) reference for the liver panel: each normal
/// range is read as mean ± 2σ, with AST and ALT correlated at 0.5.
pub fn liver_reference() -> Result<(Vec<String>, ReferenceModel)> {
    let mean: Vec<f64> = LIVER_PANEL.iter().map(|(_, lo, hi)| 0.5 * (lo + hi)).collect();
    let sd: Vec<f64> = LIVER_PANEL.iter().map(|(_, lo, hi)| 0.25 * (hi - lo)).collect();
    let mut cov = Matrix::diag(&sd.iter().map(|s| s * s).collect::<Vec<_>>());
    let (ast, alt) = (4, 6);
    cov[(ast, alt)] = 0.5 * sd[ast] * sd[alt];
    cov[(alt, ast)] = cov[(ast, alt)];
    let names = LIVER_PANEL.iter().map(|(n, _, _)| n.to_string()).collect();
    Ok((names, ReferenceModel::new(mean, cov, Level::Probability(0.95))?))
}

/// A cohort drawn from the liver reference with its centre shifted by
/// `shift_sd` standard deviations per variable.
pub fn liver_cohort(n: usize, shift_sd: &[f64; 7], seed: u64) -> Result<PlantedSample> {
    let (names, reference) = liver_reference()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = reference.covariance().chol().clone();
    let sd: Vec<f64> = (0..7).map(|j| reference.covariance().matrix()[(j, j)].sqrt()).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let z = normal_vec(7, &mut rng);
            (0..7)
                .map(|i| {
                    reference.mean()[i]
                        + shift_sd[i] * sd[i]
                        + (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>()
                })
                .collect()
        })
        .collect();
    let norm = shift_sd.iter().map(|s| s * s).sum::<f64>().sqrt();
    let dir: Vec<f64> = if norm > 0.0 {
        shift_sd.iter().map(|s| s / norm).collect()
    } else {
        vec![0.0; 7]
    };
    Ok(PlantedSample {
        dataset: Dataset::new(names, Matrix::from_rows(&rows)?)?,
        reference,
        labels: vec![Some(0); n],
        directions: Matrix::from_rows(&[dir])?,
    })
}
