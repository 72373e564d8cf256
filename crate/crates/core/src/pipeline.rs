//! End-to-end workflows behind the command-line tool: sampling, flagging,
//! touring and clustering, with file output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::index::{mahalanobis_sq_rows, select_from_distances, AnomalyIndex, OutlierRule, OutlierSet};
use crate::numerics::Matrix;
use crate::reference::{project_model, sample_ellipsoid_surface, Level, ReferenceModel};
use crate::render::{fit_half_range, render_frame, view_center, EllipseSidecar, FrameContent, RenderSpec};
use crate::robust::{normalize_directions, robust_reference, select_k, KSelection, RobustOptions, RobustReference};
use crate::tour::{grand_tour, grand_tour_with_index, guided_tour, random_basis, GuidedOptions, TourTrace, TraceWriter};

/// Output files are written as `<name>.partial` and renamed once the whole
/// command has succeeded; a failed run leaves only `.partial` files behind.
#[derive(Default)]
pub struct Staged {
    pending: Vec<PathBuf>,
}

impl Staged {
    pub fn new() -> Self {
        Self::default()
    }

    fn partial(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".partial");
        PathBuf::from(s)
    }

    /// Opens `path.partial` for writing.
    pub fn create(&mut self, path: impl AsRef<Path>) -> Result<BufWriter<File>> {
        let path = path.as_ref();
        let tmp = Self::partial(path);
        let f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        self.pending.push(path.to_path_buf());
        Ok(BufWriter::new(f))
    }

    pub fn write(&mut self, path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
        let path = path.as_ref();
        let mut w = self.create(path)?;
        w.write_all(contents).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    /// Renames every staged file to its final name.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        for path in &self.pending {
            let tmp = Self::partial(path);
            std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
        }
        Ok(self.pending)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Where the reference distribution comes from.
#[derive(Clone, Debug)]
pub enum ModelSource {
    Given(ReferenceModel),
    Robust(RobustOptions),
}

/// Data and reference in the coordinates the analysis runs in. With a robust
/// reference these are the median/MAD standardised coordinates.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: Dataset,
    pub data: Matrix,
    pub model: ReferenceModel,
    pub robust: Option<RobustReference>,
}

/// Builds the analysis reference. `level` overrides the model's own level.
pub fn prepare(dataset: Dataset, source: &ModelSource, level: Option<Level>) -> Result<Prepared> {
    match source {
        ModelSource::Given(model) => {
            if model.dim() != dataset.p() {
                return Err(Error::dims(
                    format!("{} data columns (model dimension)", model.dim()),
                    dataset.p(),
                ));
            }
            let model = match level {
                Some(l) => model.clone().with_level_c2(l.c2(model.dim())?)?,
                None => model.clone(),
            };
            Ok(Prepared {
                data: dataset.values.clone(),
                dataset,
                model,
                robust: None,
            })
        }
        ModelSource::Robust(opts) => {
            let level = level.unwrap_or(Level::Sigma(5.0));
            let fit = robust_reference(&dataset.values, level, opts).map_err(|e| match e {
                Error::ZeroSpread { column } => Error::DegenerateData(format!(
                    "column '{}' has zero spread (MAD = 0)",
                    dataset.column_names[column]
                )),
                other => other,
            })?;
            Ok(Prepared {
                data: fit.standardized.clone(),
                model: fit.model.clone(),
                dataset,
                robust: Some(fit),
            })
        }
    }
}

/// `n` points on the reference ellipsoid surface.
pub fn generate(model: &ReferenceModel, n: usize, seed: u64) -> Result<Dataset> {
    let values = sample_ellipsoid_surface(model, n, seed)?;
    let names = (1..=model.dim()).map(|j| format!("x{j}")).collect();
    Dataset::new(names, values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlagRow {
    pub row: usize,
    pub label: String,
    pub mahalanobis_sq: f64,
    pub outside: bool,
}

#[derive(Clone, Debug)]
pub struct FlagReport {
    /// Sorted by distance, largest first (ties by row).
    pub rows: Vec<FlagRow>,
    pub level_c2: f64,
}

impl FlagReport {
    pub fn flagged(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.rows.iter().filter(|r| r.outside).map(|r| r.row).collect();
        v.sort_unstable();
        v
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "id", "mahalanobis_sq", "outside"])?;
        for r in &self.rows {
            w.write_record([
                r.row.to_string(),
                r.label.clone(),
                format!("{}", r.mahalanobis_sq),
                u8::from(r.outside).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))
    }
}

pub fn flag(prepared: &Prepared) -> Result<FlagReport> {
    let d2 = mahalanobis_sq_rows(&prepared.data, &prepared.model)?;
    let c2 = prepared.model.level_c2();
    let mut rows: Vec<FlagRow> = d2
        .iter()
        .enumerate()
        .map(|(i, &d)| FlagRow {
            row: i,
            label: prepared.dataset.row_label(i),
            mahalanobis_sq: d,
            outside: d > c2,
        })
        .collect();
    rows.sort_by(|a, b| b.mahalanobis_sq.total_cmp(&a.mahalanobis_sq).then(a.row.cmp(&b.row)));
    Ok(FlagReport { rows, level_c2: c2 })
}

#[derive(Clone, Debug, PartialEq)]
pub enum TourMode {
    Grand { n_targets: usize, steps_per_leg: usize },
    Guided(GuidedOptions),
}

#[derive(Clone, Debug)]
pub struct TourOptions {
    pub mode: TourMode,
    pub rule: OutlierRule,
    pub seed: u64,
    /// With an empty W, fall back to a grand tour instead of failing.
    pub allow_empty: bool,
    pub render: RenderSpec,
    /// Fallback grand tour shape.
    pub fallback_targets: usize,
    pub fallback_steps: usize,
}

impl Default for TourOptions {
    fn default() -> Self {
        Self {
            mode: TourMode::Guided(GuidedOptions::default()),
            rule: OutlierRule::OutsideEllipsoid,
            seed: 0,
            allow_empty: false,
            render: RenderSpec::default(),
            fallback_targets: 5,
            fallback_steps: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TourOutcome {
    pub trace: TourTrace,
    pub outliers: OutlierSet,
    /// A guided tour was requested but W was empty.
    pub fell_back: bool,
    pub files: Vec<PathBuf>,
}

/// Runs a tour and writes `trace.csv`, `ellipse.csv` and one SVG per frame
/// into `out_dir`.
pub fn tour(
    prepared: &Prepared,
    opts: &TourOptions,
    clusters: Option<&[Option<usize>]>,
    out_dir: &Path,
) -> Result<TourOutcome> {
    opts.render.validate()?;
    let p = prepared.model.dim();
    let d2 = mahalanobis_sq_rows(&prepared.data, &prepared.model)?;
    let outliers = select_from_distances(&d2, prepared.model.level_c2(), &opts.rule)?;
    let outside: Vec<bool> = d2.iter().map(|&d| d > prepared.model.level_c2()).collect();

    let (trace, fell_back) = match (&opts.mode, outliers.is_empty()) {
        (TourMode::Grand { n_targets, steps_per_leg }, true) => {
            (grand_tour(p, *n_targets, *steps_per_leg, opts.seed)?, false)
        }
        (TourMode::Grand { n_targets, steps_per_leg }, false) => {
            let idx = AnomalyIndex::new(&prepared.data, &outliers, &prepared.model)?;
            (grand_tour_with_index(p, *n_targets, *steps_per_leg, opts.seed, &idx)?, false)
        }
        (TourMode::Guided(_), true) => {
            if !opts.allow_empty {
                return Err(Error::InvalidArgument(
                    "no rows selected for the anomaly index; pass --allow-empty to run a grand tour instead".into(),
                ));
            }
            (grand_tour(p, opts.fallback_targets, opts.fallback_steps, opts.seed)?, true)
        }
        (TourMode::Guided(g), false) => {
            let idx = AnomalyIndex::new(&prepared.data, &outliers, &prepared.model)?;
            let start = random_basis(p, opts.seed)?;
            (guided_tour(&idx, &start, g, opts.seed.wrapping_add(1))?, false)
        }
    };

    let files = write_tour(prepared, opts, &trace, &outside, clusters, out_dir)?;
    Ok(TourOutcome {
        trace,
        outliers,
        fell_back,
        files,
    })
}

fn write_tour(
    prepared: &Prepared,
    opts: &TourOptions,
    trace: &TourTrace,
    outside: &[bool],
    clusters: Option<&[Option<usize>]>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut staged = Staged::new();
    let spec = &opts.render;

    let mut ellipses = Vec::with_capacity(trace.len());
    let mut projected = Vec::with_capacity(trace.len());
    for f in &trace.frames {
        let e = project_model(&prepared.model, &f.basis)?;
        let verts = e.boundary(spec.ellipse_points)?;
        let pts = (0..prepared.data.rows())
            .map(|i| f.basis.project(prepared.data.row(i)))
            .collect::<Result<Vec<_>>>()?;
        ellipses.push((e, verts));
        projected.push(pts);
    }
    let half_range = match spec.half_range {
        Some(h) => h,
        None => ellipses
            .iter()
            .zip(&projected)
            .map(|((e, v), pts)| fit_half_range(pts, v, view_center(spec, Some(e))))
            .fold(0.0, f64::max),
    };

    let mut tw = TraceWriter::new(staged.create(out_dir.join("trace.csv"))?, trace.p())?;
    let mut sc = EllipseSidecar::new(staged.create(out_dir.join("ellipse.csv"))?)?;
    let width = trace.len().saturating_sub(1).to_string().len().max(5);
    for (k, f) in trace.frames.iter().enumerate() {
        tw.write_frame(k, f)?;
        let (e, verts) = &ellipses[k];
        sc.write_frame(k, verts)?;
        let content = FrameContent {
            basis: &f.basis,
            data: &prepared.data,
            flagged: outside,
            clusters,
            ellipse: Some(e),
            ellipse_vertices: verts,
            variable_names: &prepared.dataset.column_names,
            title: format!("frame {k} index {}", f.index_value),
        };
        let svg = render_frame(spec, &content, half_range, view_center(spec, Some(e)))?;
        staged.write(out_dir.join(format!("frame_{k:0width$}.svg")), svg.as_bytes())?;
    }
    drop(tw);
    drop(sc);
    staged.commit()
}

#[derive(Clone, Debug)]
pub struct ClusterOptions {
    pub rule: OutlierRule,
    /// `None` searches 2..=min(8, m).
    pub k_range: Option<RangeInclusive<usize>>,
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            rule: OutlierRule::OutsideEllipsoid,
            k_range: None,
            n_starts: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClusterReport {
    pub outliers: OutlierSet,
    pub selection: KSelection,
}

impl ClusterReport {
    /// Cluster of every data row; `None` for rows outside W.
    pub fn row_clusters(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (pos, &row) in self.outliers.indices().iter().enumerate() {
            out[row] = Some(self.selection.best.labels[pos]);
        }
        out
    }

    /// Rows of W in cluster `c`.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.outliers
            .indices()
            .iter()
            .zip(&self.selection.best.labels)
            .filter(|(_, &l)| l == c)
            .map(|(&r, _)| r)
            .collect()
    }

    pub fn write_labels<W: Write>(&self, dataset: &Dataset, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "id", "cluster"])?;
        for (pos, &row) in self.outliers.indices().iter().enumerate() {
            w.write_record([
                row.to_string(),
                dataset.row_label(row),
                self.selection.best.labels[pos].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<labels>", e))
    }

    pub fn write_dunn<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "dunn", "selected"])?;
        for &(k, d) in &self.selection.scores {
            w.write_record([
                k.to_string(),
                format!("{d}"),
                u8::from(k == self.selection.best.k).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<dunn>", e))
    }
}

/// Flags W, centres it at the reference mean, projects onto the unit sphere
/// and picks k by the Dunn index.
pub fn cluster(prepared: &Prepared, opts: &ClusterOptions) -> Result<ClusterReport> {
    let d2 = mahalanobis_sq_rows(&prepared.data, &prepared.model)?;
    let outliers = select_from_distances(&d2, prepared.model.level_c2(), &opts.rule)?;
    let m = outliers.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "clustering needs at least 2 flagged rows, found {m}"
        )));
    }
    let mu = prepared.model.mean();
    let rows: Vec<Vec<f64>> = outliers
        .indices()
        .iter()
        .map(|&i| prepared.data.row(i).iter().zip(mu).map(|(x, m)| x - m).collect())
        .collect();
    let dirs = normalize_directions(&Matrix::from_rows(&rows)?)?;
    let range = opts.k_range.clone().unwrap_or(2..=m.min(8));
    let selection = select_k(&dirs, range, opts.n_starts, opts.seed)?;
    Ok(ClusterReport { outliers, selection })
}

/// Writes `clusters.csv` and `dunn.csv` into `out_dir`.
pub fn write_cluster_report(prepared: &Prepared, report: &ClusterReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut staged = Staged::new();
    report.write_labels(&prepared.dataset, staged.create(out_dir.join("clusters.csv"))?)?;
    report.write_dunn(staged.create(out_dir.join("dunn.csv"))?)?;
    staged.commit()
}

/// One guided tour per cluster, each using that cluster's rows as W, written
/// to `out_dir/cluster_<c>`.
pub fn cluster_tours(
    prepared: &Prepared,
    report: &ClusterReport,
    opts: &TourOptions,
    out_dir: &Path,
) -> Result<Vec<TourOutcome>> {
    let clusters = report.row_clusters(prepared.data.rows());
    (0..report.selection.best.k)
        .map(|c| {
            let o = TourOptions {
                rule: OutlierRule::Manual(report.members(c)),
                ..opts.clone()
            };
            tour(prepared, &o, Some(&clusters), &out_dir.join(format!("cluster_{c}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prepared_standard(rows: &[[f64; 3]], c2: f64) -> Prepared {
        let ds = Dataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            Matrix::from_rows(rows).unwrap(),
        )
        .unwrap();
        let model = ReferenceModel::standard(3, Level::C2(c2)).unwrap();
        prepare(ds, &ModelSource::Given(model), None).unwrap()
    }

    #[test]
    fn flag_report_sorted_descending() {
        let p = prepared_standard(&[[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [1.0, 1.0, 0.0]], 4.0);
        let r = flag(&p).unwrap();
        let order: Vec<usize> = r.rows.iter().map(|x| x.row).collect();
        assert_eq!(order, vec![1, 2, 0]);
        assert_eq!(r.rows[2].mahalanobis_sq, 0.0);
        assert_eq!(r.flagged(), vec![1]);
    }

    #[test]
    fn infinite_level_flags_nothing() {
        let p = prepared_standard(&[[100.0, 0.0, 0.0], [3.0, 0.0, 0.0]], f64::INFINITY);
        assert!(flag(&p).unwrap().flagged().is_empty());
    }

    #[test]
    fn model_dimension_must_match() {
        let ds = Dataset::new(vec!["a".into()], Matrix::from_rows(&[[1.0]]).unwrap()).unwrap();
        let model = ReferenceModel::standard(2, Level::C2(1.0)).unwrap();
        assert!(matches!(
            prepare(ds, &ModelSource::Given(model), None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cluster_needs_two_rows() {
        let p = prepared_standard(&[[0.0, 0.0, 0.0], [9.0, 0.0, 0.0]], 4.0);
        assert!(matches!(cluster(&p, &ClusterOptions::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn staged_files_appear_only_on_commit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let mut s = Staged::new();
        s.write(&path, b"hello").unwrap();
        assert!(!path.exists());
        assert!(dir.path().join("x.csv.partial").exists());
        s.commit().unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"hello");
        assert!(!dir.path().join("x.csv.partial").exists());
    }

    #[test]
    fn guided_without_outliers_requires_opt_in() {
        let dir = tempfile::tempdir().unwrap();
        let p = prepared_standard(&[[0.1, 0.0, 0.0], [0.0, 0.2, 0.0]], 4.0);
        let opts = TourOptions::default();
        assert!(tour(&p, &opts, None, dir.path()).is_err());
        let fallback = TourOptions {
            allow_empty: true,
            fallback_targets: 1,
            fallback_steps: 3,
            ..TourOptions::default()
        };
        let out = tour(&p, &fallback, None, dir.path()).unwrap();
        assert!(out.fell_back);
        assert_eq!(out.trace.len(), 4);
    }
}
