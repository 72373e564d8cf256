use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anomtour::data::load_csv;
use anomtour::demo::{fig4_analogue, liver_cohort, planted_groups, PlantedConfig, PlantedSample};
use anomtour::index::OutlierRule;
use anomtour::pipeline::{
    cluster, cluster_tours, flag, generate, prepare, tour, write_cluster_report, ClusterOptions, ModelSource,
    Prepared, Staged, TourMode, TourOptions,
};
use anomtour::reference::{read_model, write_model, Level, ModelFile};
use anomtour::render::{AxesPosition, RenderSpec};
use anomtour::robust::RobustOptions;
use anomtour::tour::GuidedOptions;
use anomtour::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "anomtour", version, about = "Compare a sample against a multivariate normal reference with projection tours")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample points on the surface of the reference ellipsoid
    Generate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report squared Mahalanobis distances and rows outside the ellipsoid
    Flag {
        #[command(flatten)]
        input: InputArgs,
        /// Output CSV (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grand or guided tour and write frames plus a trace
    Tour {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        tour: TourArgs,
        #[command(flatten)]
        render: RenderArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster the directions of flagged rows and pick k by the Dunn index
    Cluster {
        #[command(flatten)]
        input: InputArgs,
        /// Inclusive k range, e.g. 2..8
        #[arg(long, value_parser = parse_k_range)]
        k_range: Option<RangeInclusive<usize>>,
        /// k-means starts per k
        #[arg(long, default_value_t = 10)]
        starts: usize,
        /// Also run one guided tour per cluster
        #[arg(long)]
        tours: bool,
        #[command(flatten)]
        tour: TourArgs,
        #[command(flatten)]
        render: RenderArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic dataset and its reference model
    Demo {
        #[arg(value_enum)]
        kind: DemoKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Data CSV with a header row; a first column named `id` labels rows
    #[arg(long)]
    data: PathBuf,
    /// Reference model file
    #[arg(long, conflicts_with = "robust", required_unless_present = "robust")]
    model: Option<PathBuf>,
    /// Estimate the reference from the data (median/MAD scaling, MCD)
    #[arg(long)]
    robust: bool,
    /// Level as enclosed probability
    #[arg(long, group = "level")]
    prob: Option<f64>,
    /// Level as the squared constant c²
    #[arg(long, group = "level")]
    c2: Option<f64>,
    /// Level as a two-sided normal z-score
    #[arg(long, group = "level")]
    sigma: Option<f64>,
    /// Rows entering the anomaly index: outside, topk:K or manual:FILE
    #[arg(long, default_value = "outside", value_parser = parse_rule)]
    rule: OutlierRule,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// MCD subset size (default ⌊(n+p+1)/2⌋)
    #[arg(long)]
    mcd_h: Option<usize>,
    /// MCD random starts
    #[arg(long, default_value_t = 20)]
    mcd_starts: usize,
    /// Use the raw MCD estimate as the reference
    #[arg(long)]
    no_reweight: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Grand,
    Guided,
}

#[derive(Args)]
struct TourArgs {
    #[arg(long, value_enum, default_value = "guided")]
    mode: Mode,
    /// Frames per leg of a grand tour
    #[arg(long, default_value_t = 20)]
    frames: usize,
    /// Target planes of a grand tour
    #[arg(long, default_value_t = 5)]
    targets: usize,
    /// Run a grand tour when no rows are selected for a guided tour
    #[arg(long)]
    allow_empty: bool,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long, default_value_t = 400)]
    width: u32,
    #[arg(long, default_value_t = 400)]
    height: u32,
    /// Axis widget: bottomleft or off
    #[arg(long, default_value = "bottomleft")]
    axes: AxesPosition,
    /// Data units from view centre to edge (default fits all frames)
    #[arg(long)]
    half_range: Option<f64>,
    /// Centre the view on the projected reference mean
    #[arg(long)]
    center: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoKind {
    /// Liver panel cohort shifted from the normal ranges
    Liver,
    /// Six variables, sample shifted along x4 and x5
    Fig4,
    /// 68×16 data with 20 anomalies in 5 direction groups
    Planted,
}

fn parse_rule(s: &str) -> Result<OutlierRule, String> {
    if s == "outside" {
        return Ok(OutlierRule::OutsideEllipsoid);
    }
    if let Some(k) = s.strip_prefix("topk:") {
        return k
            .parse::<usize>()
            .map(OutlierRule::TopK)
            .map_err(|_| format!("bad top-k count '{k}'"));
    }
    if let Some(path) = s.strip_prefix("manual:") {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                rows.push(
                    tok.parse::<usize>()
                        .map_err(|_| format!("{path}:{}: '{tok}' is not a row index", n + 1))?,
                );
            }
        }
        return Ok(OutlierRule::Manual(rows));
    }
    Err(format!("unknown rule '{s}' (expected outside, topk:K or manual:FILE)"))
}

fn parse_k_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("k range '{s}' must look like A..B"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad k range start '{a}'"))?;
    let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad k range end '{b}'"))?;
    Ok(a..=b)
}

impl InputArgs {
    fn level(&self) -> Option<Level> {
        self.prob
            .map(Level::Probability)
            .or(self.c2.map(Level::C2))
            .or(self.sigma.map(Level::Sigma))
    }

    fn prepare(&self) -> Result<Prepared, Error> {
        let dataset = load_csv(&self.data)?;
        let source = match &self.model {
            Some(path) => ModelSource::Given(read_model(path)?.model()?),
            None => ModelSource::Robust(RobustOptions {
                h: self.mcd_h,
                n_starts: self.mcd_starts,
                reweight: !self.no_reweight,
                seed: self.seed,
                ..RobustOptions::default()
            }),
        };
        prepare(dataset, &source, self.level())
    }
}

fn tour_options(input: &InputArgs, t: &TourArgs, r: &RenderArgs) -> TourOptions {
    TourOptions {
        mode: match t.mode {
            Mode::Grand => TourMode::Grand {
                n_targets: t.targets,
                steps_per_leg: t.frames,
            },
            Mode::Guided => TourMode::Guided(GuidedOptions::default()),
        },
        rule: input.rule.clone(),
        seed: input.seed,
        allow_empty: t.allow_empty,
        render: RenderSpec {
            width: r.width,
            height: r.height,
            axes: r.axes,
            half_range: r.half_range,
            center: r.center,
            ..RenderSpec::default()
        },
        fallback_targets: t.targets,
        fallback_steps: t.frames,
    }
}

fn emit(out: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut staged = Staged::new();
            let mut w = staged.create(path)?;
            write(&mut w)?;
            w.flush().map_err(|e| Error::Io { path: path.clone(), source: e })?;
            drop(w);
            staged.commit()?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}

fn write_demo(sample: &PlantedSample, dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
    let mut staged = Staged::new();
    let model = write_model(&ModelFile::from_model(&sample.reference));
    staged.write(dir.join("model.txt"), model.as_bytes())?;
    sample.dataset.write_csv(staged.create(dir.join("data.csv"))?)?;
    let mut truth = String::from("row,group\n");
    for (i, l) in sample.labels.iter().enumerate() {
        let g = l.map_or_else(|| "".to_string(), |g| g.to_string());
        truth.push_str(&format!("{i},{g}\n"));
    }
    staged.write(dir.join("truth.csv"), truth.as_bytes())?;
    staged.commit()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate { model, n, seed, out } => {
            let model = read_model(&model)?.model()?;
            let ds = generate(&model, n, seed)?;
            emit(&out, |w| ds.write_csv(w))
        }
        Command::Flag { input, out } => {
            let prepared = input.prepare()?;
            let report = flag(&prepared)?;
            emit(&out, |w| report.write_csv(w))?;
            eprintln!(
                "flagged {} of {} rows (c² = {})",
                report.flagged().len(),
                report.rows.len(),
                report.level_c2
            );
            Ok(())
        }
        Command::Tour { input, tour: t, render, out } => {
            let prepared = input.prepare()?;
            let opts = tour_options(&input, &t, &render);
            let outcome = tour(&prepared, &opts, None, &out)?;
            if outcome.fell_back {
                eprintln!("warning: no rows selected for the anomaly index; ran a grand tour instead");
            }
            println!(
                "{} frames, |W| = {}, final index {} -> {}",
                outcome.trace.len(),
                outcome.outliers.len(),
                outcome.trace.last().index_value,
                out.display()
            );
            Ok(())
        }
        Command::Cluster {
            input,
            k_range,
            starts,
            tours,
            tour: t,
            render,
            out,
        } => {
            let prepared = input.prepare()?;
            let opts = ClusterOptions {
                rule: input.rule.clone(),
                k_range,
                n_starts: starts,
                seed: input.seed,
            };
            let report = cluster(&prepared, &opts)?;
            write_cluster_report(&prepared, &report, &out)?;
            println!(
                "k = {} (Dunn {}) over {} flagged rows -> {}",
                report.selection.best.k,
                report.selection.best.dunn.unwrap_or(f64::NAN),
                report.outliers.len(),
                out.display()
            );
            if tours {
                let topts = TourOptions {
                    mode: TourMode::Guided(GuidedOptions::default()),
                    ..tour_options(&input, &t, &render)
                };
                for (c, o) in cluster_tours(&prepared, &report, &topts, &out)?.iter().enumerate() {
                    println!("cluster {c}: {} frames, final index {}", o.trace.len(), o.trace.last().index_value);
                }
            }
            Ok(())
        }
        Command::Demo { kind, seed, out } => {
            let sample = match kind {
                DemoKind::Liver => liver_cohort(40, &[0.0, 0.0, 0.0, -1.0, -0.5, 1.0, -1.0], seed)?,
                DemoKind::Fig4 => fig4_analogue(20, seed)?,
                DemoKind::Planted => planted_groups(&PlantedConfig::default(), seed)?,
            };
            write_demo(&sample, &out)?;
            println!("wrote model.txt, data.csv, truth.csv -> {}", out.display());
            Ok(())
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            let first = text.split("\n\n").next().unwrap_or("invalid arguments");
            eprintln!("error[Usage]: {}", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
