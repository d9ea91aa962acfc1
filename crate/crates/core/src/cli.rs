//! `perfrec` command line.
//!
//! Every subcommand resolves a configuration (defaults, then `--config`,
//! then flags, then `--seed`), writes it to `run.json` in the output
//! directory and produces its files there. Passing that `run.json` back via
//! `--config` replays the run.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::datasetgen::{derive_seed, generate_suite, DatasetManifest, FoldScheme, ProtocolParams, Role, SuiteConfig};
use crate::phantom::{build_phantom, sample_volume, PhantomConfig, TacRanges};
use crate::plot::{box_plot_svg, line_plot_svg};
use crate::projector::{project_dynamic, Geometry, ScanProtocol, TimedSinogram};
use crate::recon::{reconstruct_sweeps, residual_csv, ReconConfig};
use crate::segeval::{
    confusion_counts, largest_component, mann_whitney_u, median, metrics, population_variance, Alternative,
    Connectivity, Mask, MetricsReport, UTestResult,
};
use crate::tensorio::{self, Tensor};
use crate::tst::{
    first_coeff_image, fit_projection_coeffs, flat_curve_library, harmonic_basis, perfusion_surrogates, prior_tac_library,
    reconstruct_coeff_volumes, svd_basis, uniform_grid, BasisSource,
};

type CliResult<T> = anyhow::Result<T>;

#[derive(Parser, Debug)]
#[command(name = "perfrec", version, about = "Dynamic CBCT perfusion phantoms, reconstruction and segmentation evaluation")]
struct Cli {
    /// Master seed; overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config for the subcommand (or a previous run.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing. Defaults to the working directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a labelled phantom and its TAC table.
    Phantom(PhantomArgs),
    /// Write the timed projection schedule.
    Protocol(ProtocolArgs),
    /// Simulate a timed multi-sweep acquisition.
    Project(ProjectArgs),
    /// Straightforward per-sweep reconstruction of a projected acquisition.
    Recon(ReconArgs),
    /// Time separation reconstruction and perfusion surrogates.
    Tst(TstArgs),
    /// Generate the CT / CBCT / CBCT-TST dataset suite.
    Suite(SuiteArgs),
    /// Segmentation metrics for one mask pair or a whole suite.
    Eval(EvalArgs),
    /// Mann-Whitney U test between two metric CSVs.
    Stats(StatsArgs),
    /// SVG box or line plot of CSV columns.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct PhantomArgs {
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    metal: bool,
    /// Also write the attenuation image at these times (seconds).
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,
}

#[derive(Args, Debug)]
struct ProtocolArgs {
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    arc: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long)]
    noise: Option<f64>,
    /// Detector half-width in mm.
    #[arg(long)]
    truncation: Option<f64>,
    #[arg(long)]
    sweeps: Option<usize>,
}

#[derive(Args, Debug)]
struct ReconArgs {
    /// Directory written by `perfrec project`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    iters: Option<usize>,
}

#[derive(Args, Debug)]
struct TstArgs {
    /// Directory written by `perfrec project`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    basis: Option<BasisArg>,
    #[arg(long)]
    iters: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BasisArg {
    Harmonic,
    Svd,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[arg(long)]
    subjects: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, requires = "gt", conflicts_with = "manifest")]
    pred: Option<PathBuf>,
    #[arg(long, requires = "pred")]
    gt: Option<PathBuf>,
    /// Suite manifest; predictions are read from `<pred-dir>/fold_<k>/<image>`.
    #[arg(long, requires = "pred_dir")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    pred_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "kfold-leave-one-out")]
    scheme: SchemeArg,
    /// Keep only the largest connected component of each prediction.
    #[arg(long)]
    postprocess: bool,
    #[arg(long, default_value_t = 8, value_parser = clap::builder::PossibleValuesParser::new(["4", "8"]).map(|s: String| s.parse::<u8>().expect("4 or 8")))]
    connectivity: u8,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    KfoldLeaveOneOut,
    KfoldLeaveTwoOut,
}

impl From<SchemeArg> for FoldScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::KfoldLeaveOneOut => FoldScheme::KfoldLeaveOneOut,
            SchemeArg::KfoldLeaveTwoOut => FoldScheme::KfoldLeaveTwoOut,
        }
    }
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value = "dice")]
    column: String,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long, value_enum, default_value = "box")]
    kind: PlotKind,
    /// `label=path` pairs; box plots draw one box per input, line plots one
    /// series per input.
    #[arg(long = "input", required = true)]
    inputs: Vec<String>,
    #[arg(long, default_value = "dice")]
    column: String,
    /// x column for line plots.
    #[arg(long, default_value = "iter")]
    x: String,
    #[arg(long, default_value = "")]
    title: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlotKind {
    Box,
    Line,
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 2 on usage errors and 1 on runtime errors.
pub fn dispatch<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match with_thread_cap(|| run(cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn with_thread_cap(f: impl FnOnce() -> CliResult<()> + Send) -> CliResult<()> {
    match std::env::var("PERFREC_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .with_context(|| format!("PERFREC_THREADS must be a positive integer, got {v:?}"))?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            pool.install(f)
        }
        Err(_) => f(),
    }
}

struct Ctx {
    seed: Option<u64>,
    config: Option<PathBuf>,
    out: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Defaults overlaid with the config file. A `run.json` is accepted too.
    fn load<T: DeserializeOwned + Default>(&self) -> CliResult<T> {
        let Some(path) = &self.config else {
            return Ok(T::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(obj) = value.as_object_mut() {
            if obj.contains_key("subcommand") && obj.contains_key("config") {
                value = obj.remove("config").unwrap_or(Value::Null);
            }
        }
        serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))
    }

    fn record<C: Serialize>(&self, subcommand: &str, config: &C, inputs: Value) -> CliResult<()> {
        let run = json!({
            "subcommand": subcommand,
            "config": config,
            "inputs": inputs,
        });
        tensorio::write_json(&self.path("run.json"), &run)?;
        Ok(())
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let ctx = Ctx {
        seed: cli.seed,
        config: cli.config,
        out,
    };
    match cli.command {
        Command::Phantom(a) => cmd_phantom(&ctx, a),
        Command::Protocol(a) => cmd_protocol(&ctx, a),
        Command::Project(a) => cmd_project(&ctx, a),
        Command::Recon(a) => cmd_recon(&ctx, a),
        Command::Tst(a) => cmd_tst(&ctx, a),
        Command::Suite(a) => cmd_suite(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::Stats(a) => cmd_stats(&ctx, a),
        Command::Plot(a) => cmd_plot(&ctx, a),
    }
}

fn cmd_phantom(ctx: &Ctx, a: PhantomArgs) -> CliResult<()> {
    let mut config: PhantomConfig = ctx.load()?;
    if let Some(h) = a.height {
        config.height = h;
    }
    if let Some(w) = a.width {
        config.width = w;
    }
    config.metal_insert |= a.metal;
    if let Some(s) = ctx.seed {
        config.seed = s;
    }
    ctx.record("phantom", &config, json!({ "times": a.times }))?;
    let phantom = build_phantom(&config)?;
    tensorio::write_tensor(
        &ctx.path("labels.tsr"),
        &Tensor::U8 {
            dims: vec![phantom.height as u64, phantom.width as u64],
            data: phantom.label_ids(),
        },
    )?;
    // label id, model code, baseline, five model parameters
    let mut table = Vec::new();
    for (label, tac) in &phantom.tacs {
        table.push(label.id() as f64);
        table.extend_from_slice(&tac.to_row());
    }
    tensorio::write_tensor(&ctx.path("tacs.tsr"), &Tensor::from_f64(vec![phantom.tacs.len(), 8], &table))?;
    let tacs: serde_json::Map<String, Value> = phantom
        .tacs
        .iter()
        .map(|(l, t)| Ok((l.name().to_string(), serde_json::to_value(t)?)))
        .collect::<CliResult<_>>()?;
    let counts: serde_json::Map<String, Value> =
        phantom.present_labels().iter().map(|&l| (l.name().to_string(), json!(phantom.count(l)))).collect();
    tensorio::write_json(
        &ctx.path("phantom.json"),
        &json!({ "height": phantom.height, "width": phantom.width, "pixel_spacing": phantom.pixel_spacing, "tacs": tacs, "pixel_counts": counts }),
    )?;
    for (i, &t) in a.times.iter().enumerate() {
        tensorio::write_volume(&ctx.path(&format!("frame_{i:02}.tsr")), &sample_volume(&phantom, t)?)?;
    }
    Ok(())
}

fn cmd_protocol(ctx: &Ctx, a: ProtocolArgs) -> CliResult<()> {
    let mut params: ProtocolParams = ctx.load()?;
    if let Some(v) = a.sweeps {
        params.n_sweeps = v;
    }
    if let Some(v) = a.arc {
        params.arc_degrees = v;
    }
    if let Some(v) = a.step {
        params.angular_step = v;
    }
    ctx.record("protocol", &params, json!({}))?;
    tensorio::write_json(&ctx.path("protocol.json"), &params.build()?)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ProjectConfig {
    phantom: PhantomConfig,
    protocol: ProtocolParams,
    noise_sigma: f64,
    noise_seed: u64,
    truncation: Option<f64>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            phantom: PhantomConfig::default(),
            protocol: ProtocolParams::default(),
            noise_sigma: 0.0,
            noise_seed: derive_seed(0, 100, 0),
            truncation: None,
        }
    }
}

fn cmd_project(ctx: &Ctx, a: ProjectArgs) -> CliResult<()> {
    let mut config: ProjectConfig = ctx.load()?;
    if let Some(v) = a.noise {
        config.noise_sigma = v;
    }
    if a.truncation.is_some() {
        config.truncation = a.truncation;
    }
    if let Some(v) = a.sweeps {
        config.protocol.n_sweeps = v;
    }
    if let Some(s) = ctx.seed {
        config.phantom.seed = s;
        config.noise_seed = derive_seed(s, 100, 0);
    }
    ctx.record("project", &config, json!({}))?;
    let phantom = build_phantom(&config.phantom)?;
    let protocol = config.protocol.build()?;
    let mut geometry = Geometry::for_image(phantom.height, phantom.width, phantom.pixel_spacing);
    geometry.truncation = config.truncation;
    let sino = project_dynamic(&phantom, &protocol, &geometry, config.noise_sigma, config.noise_seed)?;
    write_timed_sinogram(&ctx.out, &sino)?;
    tensorio::write_tensor(
        &ctx.path("labels.tsr"),
        &Tensor::U8 {
            dims: vec![phantom.height as u64, phantom.width as u64],
            data: phantom.label_ids(),
        },
    )?;
    Ok(())
}

fn write_timed_sinogram(dir: &Path, sino: &TimedSinogram) -> CliResult<()> {
    tensorio::write_tensor(
        &dir.join("sinogram.tsr"),
        &Tensor::from_f64(vec![sino.rows.len(), sino.geometry.detector_bins], &sino.flat()),
    )?;
    tensorio::write_json(&dir.join("protocol.json"), &sino.protocol)?;
    tensorio::write_json(&dir.join("geometry.json"), &sino.geometry)?;
    Ok(())
}

fn read_timed_sinogram(dir: &Path) -> CliResult<TimedSinogram> {
    let geometry: Geometry = tensorio::read_json(&dir.join("geometry.json"))?;
    let protocol: ScanProtocol = tensorio::read_json(&dir.join("protocol.json"))?;
    let tensor = tensorio::read_tensor(&dir.join("sinogram.tsr"))?;
    Ok(TimedSinogram::from_flat(geometry, protocol, &tensor.to_f64())?)
}

fn cmd_recon(ctx: &Ctx, a: ReconArgs) -> CliResult<()> {
    let mut config: ReconConfig = ctx.load()?;
    if let Some(n) = a.iters {
        config.max_iters = n;
    }
    ctx.record("recon", &config, json!({ "input": a.input }))?;
    let sino = read_timed_sinogram(&a.input)?;
    for (k, rec) in reconstruct_sweeps(&sino, &config)?.iter().enumerate() {
        tensorio::write_volume(&ctx.path(&format!("sweep_{k:02}.tsr")), &rec.volume)?;
        tensorio::write_text(&ctx.path(&format!("residuals_{k:02}.csv")), &residual_csv(&rec.residuals))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TstConfig {
    basis: BasisSource,
    n_basis: usize,
    grid_samples: usize,
    /// Prior curve ranges for the SVD basis.
    library: Vec<TacRanges>,
    library_size: usize,
    library_seed: u64,
    /// Non-enhancing curves added to the SVD library.
    flat_curves: usize,
    flat_levels: [f64; 2],
    recon: ReconConfig,
    /// Time samples for the perfusion surrogates.
    surrogate_samples: usize,
}

impl Default for TstConfig {
    fn default() -> Self {
        let p = PhantomConfig::default();
        Self {
            basis: BasisSource::Harmonic,
            n_basis: 5,
            grid_samples: 256,
            library: vec![p.liver_tac, p.vessel_tac],
            library_size: 40,
            library_seed: 0,
            flat_curves: 40,
            flat_levels: [0.05, 0.35],
            recon: ReconConfig::default(),
            surrogate_samples: 128,
        }
    }
}

fn cmd_tst(ctx: &Ctx, a: TstArgs) -> CliResult<()> {
    let mut config: TstConfig = ctx.load()?;
    if let Some(b) = a.basis {
        config.basis = match b {
            BasisArg::Harmonic => BasisSource::Harmonic,
            BasisArg::Svd => BasisSource::Svd,
        };
    }
    if let Some(n) = a.iters {
        config.recon.max_iters = n;
    }
    if let Some(s) = ctx.seed {
        config.library_seed = s;
    }
    ctx.record("tst", &config, json!({ "input": a.input }))?;
    let sino = read_timed_sinogram(&a.input)?;
    let t_total = sino.protocol.total_duration();
    let grid = uniform_grid(t_total, config.grid_samples);
    let basis = match config.basis {
        BasisSource::Harmonic => {
            if config.n_basis != 5 {
                bail!("the harmonic basis has exactly 5 functions");
            }
            harmonic_basis(&grid, t_total)?
        }
        BasisSource::Svd => {
            let ranges: Vec<&TacRanges> = config.library.iter().collect();
            let mut library = prior_tac_library(&ranges, config.library_size, &grid, config.library_seed)?;
            library.extend(flat_curve_library(config.flat_curves, config.flat_levels, &grid));
            svd_basis(&library, &grid, config.n_basis)?
        }
    };
    basis.save(&ctx.out, "basis")?;
    let pc = fit_projection_coeffs(&sino, &basis)?;
    let cv = reconstruct_coeff_volumes(&pc, &sino.geometry, &config.recon)?;
    for (i, v) in cv.volumes.iter().enumerate() {
        tensorio::write_volume(&ctx.path(&format!("coeff_{i:02}.tsr")), v)?;
    }
    tensorio::write_volume(&ctx.path("first_coeff.tsr"), &first_coeff_image(&cv)?)?;
    let times = uniform_grid(t_total, config.surrogate_samples);
    let maps = perfusion_surrogates(&cv, &times)?;
    tensorio::write_volume(&ctx.path("ttp.tsr"), &maps.ttp)?;
    tensorio::write_volume(&ctx.path("peak.tsr"), &maps.peak)?;
    tensorio::write_volume(&ctx.path("auc.tsr"), &maps.auc)?;
    Ok(())
}

fn cmd_suite(ctx: &Ctx, a: SuiteArgs) -> CliResult<()> {
    let mut config: SuiteConfig = ctx.load()?;
    if let Some(n) = a.subjects {
        config.n_subjects = n;
    }
    if let Some(s) = ctx.seed {
        config.seed = s;
    }
    ctx.record("suite", &config, json!({}))?;
    generate_suite(&config, &ctx.out)?;
    Ok(())
}

pub const METRICS_HEADER: [&str; 9] = [
    "dataset",
    "fold",
    "volume",
    "slice",
    "dice",
    "iou",
    "precision",
    "sensitivity",
    "specificity",
];

#[derive(Serialize)]
struct EvalSettings {
    postprocess: bool,
    connectivity: Connectivity,
    scheme: Option<FoldScheme>,
}

fn evaluate(pred: &Mask, gt: &Mask, settings: &EvalSettings) -> CliResult<MetricsReport> {
    let pred = if settings.postprocess {
        largest_component(pred, settings.connectivity)
    } else {
        pred.clone()
    };
    Ok(metrics(&confusion_counts(&pred, gt)?))
}

fn cmd_eval(ctx: &Ctx, a: EvalArgs) -> CliResult<()> {
    let connectivity = Connectivity::from_neighbours(a.connectivity).expect("validated by clap");
    let mut rows: Vec<[String; 9]> = Vec::new();
    let fmt = |v: f64| format!("{v:.6}");
    if let (Some(pred), Some(gt)) = (&a.pred, &a.gt) {
        let settings = EvalSettings {
            postprocess: a.postprocess,
            connectivity,
            scheme: None,
        };
        ctx.record("eval", &settings, json!({ "pred": pred, "gt": gt }))?;
        let m = evaluate(&tensorio::read_mask(pred)?, &tensorio::read_mask(gt)?, &settings)?;
        let v = m.values();
        rows.push([
            "single".into(),
            String::new(),
            pred.display().to_string(),
            "0".into(),
            fmt(v[0]),
            fmt(v[1]),
            fmt(v[2]),
            fmt(v[3]),
            fmt(v[4]),
        ]);
    } else if let (Some(manifest_path), Some(pred_dir)) = (&a.manifest, &a.pred_dir) {
        let scheme: FoldScheme = a.scheme.into();
        let settings = EvalSettings {
            postprocess: a.postprocess,
            connectivity,
            scheme: Some(scheme),
        };
        ctx.record("eval", &settings, json!({ "manifest": manifest_path, "pred_dir": pred_dir }))?;
        let manifest: DatasetManifest = tensorio::read_json(manifest_path)?;
        let root = manifest_path.parent().unwrap_or(Path::new("."));
        for entry in &manifest.entries {
            let Some(roles) = entry.folds.get(scheme.name()) else {
                bail!("manifest has no folds for scheme {}", scheme.name());
            };
            for fr in roles.iter().filter(|r| r.role == Role::Test) {
                let pred_path = pred_dir.join(format!("fold_{}", fr.fold)).join(&entry.image);
                let pred = tensorio::read_mask(&pred_path).with_context(|| format!("prediction {}", pred_path.display()))?;
                let gt = tensorio::read_mask(&root.join(&entry.mask))?;
                let v = evaluate(&pred, &gt, &settings)?.values();
                rows.push([
                    entry.modality.name().into(),
                    fr.fold.to_string(),
                    entry.subject.clone(),
                    entry.index.to_string(),
                    fmt(v[0]),
                    fmt(v[1]),
                    fmt(v[2]),
                    fmt(v[3]),
                    fmt(v[4]),
                ]);
            }
        }
    } else {
        bail!("eval needs either --pred and --gt, or --manifest and --pred-dir");
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(METRICS_HEADER)?;
    for r in &rows {
        writer.write_record(r)?;
    }
    let text = String::from_utf8(writer.into_inner()?)?;
    tensorio::write_text(&ctx.path("metrics.csv"), &text)?;
    print!("{text}");
    Ok(())
}

/// Reads one numeric column of a CSV with a header row.
pub fn read_column(path: &Path, column: &str) -> CliResult<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let idx = reader
        .headers()?
        .iter()
        .position(|h| h == column)
        .with_context(|| format!("{} has no column {column:?}", path.display()))?;
    reader
        .records()
        .map(|r| {
            let r = r?;
            let cell = r.get(idx).unwrap_or("");
            cell.trim()
                .parse::<f64>()
                .with_context(|| format!("{}: {cell:?} is not a number", path.display()))
        })
        .collect()
}

#[derive(Serialize)]
struct StatsReport {
    #[serde(flatten)]
    test: UTestResult,
    column: String,
    median_a: f64,
    median_b: f64,
    variance_a: f64,
    variance_b: f64,
    significant: bool,
}

fn cmd_stats(ctx: &Ctx, a: StatsArgs) -> CliResult<()> {
    ctx.record("stats", &json!({ "column": a.column, "alternative": "two_sided" }), json!({ "a": a.a, "b": a.b }))?;
    let xa = read_column(&a.a, &a.column)?;
    let xb = read_column(&a.b, &a.column)?;
    let test = mann_whitney_u(&xa, &xb, Alternative::TwoSided)?;
    let report = StatsReport {
        test,
        column: a.column.clone(),
        median_a: median(&xa).unwrap_or(f64::NAN),
        median_b: median(&xb).unwrap_or(f64::NAN),
        variance_a: population_variance(&xa).unwrap_or(f64::NAN),
        variance_b: population_variance(&xb).unwrap_or(f64::NAN),
        significant: test.significant(),
    };
    tensorio::write_json(&ctx.path("utest.json"), &report)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn cmd_plot(ctx: &Ctx, a: PlotArgs) -> CliResult<()> {
    ctx.record("plot", &json!({ "kind": format!("{:?}", a.kind).to_lowercase(), "column": a.column, "x": a.x, "title": a.title }), json!({ "inputs": a.inputs }))?;
    let mut named = Vec::new();
    for spec in &a.inputs {
        let (label, path) = spec.split_once('=').unwrap_or((spec.as_str(), spec.as_str()));
        named.push((label.to_string(), PathBuf::from(path)));
    }
    let svg = match a.kind {
        PlotKind::Box => {
            let groups = named
                .iter()
                .map(|(l, p)| Ok((l.clone(), read_column(p, &a.column)?)))
                .collect::<CliResult<Vec<_>>>()?;
            box_plot_svg(&a.title, &groups)?
        }
        PlotKind::Line => {
            let x = read_column(&named[0].1, &a.x)?;
            let mut series = Vec::new();
            for (l, p) in &named {
                if read_column(p, &a.x)? != x {
                    bail!("{} does not share the x column of {}", p.display(), named[0].1.display());
                }
                series.push((l.clone(), read_column(p, &a.column)?));
            }
            line_plot_svg(&a.title, &x, &series)?
        }
    };
    tensorio::write_text(&ctx.path("plot.svg"), &svg)?;
    Ok(())
}
