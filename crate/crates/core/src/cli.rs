//! Command-line driver: `run`, `sweep` and `validate`.
//!
//! Output is deterministic: floats are printed with 17 significant digits
//! and identical flags give byte-identical files. Sweep rows may be computed
//! in parallel (`WEAKLAB_THREADS` caps the worker count) but are always
//! written in ascending `k`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::engines::{
    run_fock, run_joint_exact, run_single_exact, Coupling, EngineOptions, EngineTag, JointCoupling,
    MeasurementRecord, SingleCoupling, TruncationReport, DEFAULT_N_MAX, DEFAULT_PS_FLOOR,
};
use crate::error::{Error, Result};
use crate::pointer::GaussianPointer;
use crate::qcore::{commutator_norm, max_norm, C64};
use crate::scenarios::{load_scenario, preset, Scenario, PRESET_NAMES};
use crate::weakvalues::{
    direct_joint_weak_value, direct_weak_value, extract_joint, extract_marginal, extract_single,
    PointerAxis, SinglesSource, WeakValueEstimate,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "k,ps_prob,re_extracted,im_extracted,re_direct,im_direct,abs_err,weakness_ratio";
pub const THREADS_ENV: &str = "WEAKLAB_THREADS";

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "weaklab", version, about = "Weak-measurement laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario at a fixed coupling.
    Run(RunArgs),
    /// Sweep the coupling strength and fit the extraction error order.
    Sweep(SweepArgs),
    /// Run the built-in invariant checks.
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Exact,
    Fock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SinglesArg {
    Direct,
    Extracted,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Preset name (three-box, hardy, spin, spin:<alpha>, imaginary) or path to a scenario file.
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub observable: String,
    /// Second observable; selects a joint (two-axis pointer) measurement.
    #[arg(long = "observable-b")]
    pub observable_b: Option<String>,
    #[arg(long, value_enum)]
    pub engine: EngineArg,
    #[arg(long = "sigma-x")]
    pub sigma_x: f64,
    /// Defaults to --sigma-x.
    #[arg(long = "sigma-y")]
    pub sigma_y: Option<f64>,
    #[arg(long = "n-max", default_value_t = DEFAULT_N_MAX)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    /// Source of the single weak values entering a joint extraction.
    #[arg(long, value_enum, default_value_t = SinglesArg::Extracted)]
    pub singles: SinglesArg,
    #[arg(long = "ps-floor", default_value_t = DEFAULT_PS_FLOOR)]
    pub ps_floor: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub kx: f64,
    /// Defaults to --kx.
    #[arg(long)]
    pub ky: Option<f64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    /// Include wall-clock time in the report (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long = "k-min")]
    pub k_min: f64,
    #[arg(long = "k-max")]
    pub k_max: f64,
    #[arg(long)]
    pub points: usize,
    /// Logarithmic spacing of K (linear otherwise).
    #[arg(long)]
    pub log: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

/// Everything needed to run one measurement.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub observable_a: String,
    pub observable_b: Option<String>,
    pub engine: EngineTag,
    pub kx: f64,
    pub ky: Option<f64>,
    pub sigma_x: f64,
    pub sigma_y: Option<f64>,
    pub n_max: usize,
    pub hbar: f64,
    pub singles: SinglesSource,
    pub ps_floor: f64,
}

impl RunConfig {
    /// Single-observable config with `hbar = 1` and default engine settings.
    pub fn single(scenario: Scenario, observable: &str, engine: EngineTag, k: f64, sigma: f64) -> Self {
        Self {
            scenario,
            observable_a: observable.to_string(),
            observable_b: None,
            engine,
            kx: k,
            ky: None,
            sigma_x: sigma,
            sigma_y: None,
            n_max: DEFAULT_N_MAX,
            hbar: 1.0,
            singles: SinglesSource::Extracted,
            ps_floor: DEFAULT_PS_FLOOR,
        }
    }

    pub fn joint(scenario: Scenario, a: &str, b: &str, engine: EngineTag, k: f64, sigma: f64) -> Self {
        Self { observable_b: Some(b.to_string()), ky: Some(k), sigma_y: Some(sigma), ..Self::single(scenario, a, engine, k, sigma) }
    }

    fn with_k(&self, k: f64) -> Self {
        let mut cfg = self.clone();
        cfg.kx = k;
        if cfg.observable_b.is_some() {
            cfg.ky = Some(k);
        }
        cfg
    }

    fn from_common(common: &CommonArgs, kx: f64, ky: Option<f64>) -> Result<Self> {
        Ok(Self {
            scenario: resolve_scenario(&common.scenario)?,
            observable_a: common.observable.clone(),
            observable_b: common.observable_b.clone(),
            engine: match common.engine {
                EngineArg::Exact => EngineTag::Exact,
                EngineArg::Fock => EngineTag::Fock,
            },
            kx,
            ky,
            sigma_x: common.sigma_x,
            sigma_y: common.sigma_y,
            n_max: common.n_max,
            hbar: common.hbar,
            singles: match common.singles {
                SinglesArg::Direct => SinglesSource::Direct,
                SinglesArg::Extracted => SinglesSource::Extracted,
            },
            ps_floor: common.ps_floor,
        })
    }
}

/// A preset name, or else a path to a scenario document.
pub fn resolve_scenario(source: &str) -> Result<Scenario> {
    match preset(source) {
        Ok(s) => Ok(s),
        Err(Error::UnknownScenario(_)) if Path::new(source).exists() => {
            let text = std::fs::read_to_string(source)?;
            let mut s = load_scenario(&text)?;
            if s.name == "custom" {
                if let Some(stem) = Path::new(source).file_stem() {
                    s.name = stem.to_string_lossy().into_owned();
                }
            }
            Ok(s)
        }
        Err(Error::UnknownScenario(_)) => Err(Error::UnknownScenario(format!(
            "{source} (not a preset [{}] nor an existing file)",
            PRESET_NAMES.join(", ")
        ))),
        Err(e) => Err(e),
    }
}

/// Extracted and direct values of one single observable inside a joint run.
#[derive(Debug, Clone)]
pub struct SingleComparison {
    pub label: String,
    pub extracted: C64,
    pub direct: C64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub engine: EngineTag,
    pub observable_a: String,
    pub observable_b: Option<String>,
    pub quantity: String,
    pub kx: f64,
    pub ky: Option<f64>,
    pub sigma_x: f64,
    pub sigma_y: Option<f64>,
    pub hbar: f64,
    pub n_max: Option<usize>,
    pub singles: Option<SinglesSource>,
    pub record: MeasurementRecord,
    pub extracted: WeakValueEstimate,
    pub direct: WeakValueEstimate,
    pub single_a: Option<SingleComparison>,
    pub single_b: Option<SingleComparison>,
    pub wall_time: Duration,
}

impl RunReport {
    pub fn abs_err(&self) -> f64 {
        (self.extracted.value - self.direct.value).norm()
    }

    pub fn weakness_ratio(&self) -> f64 {
        self.record.weakness_ratio
    }
}

/// Runs the configured measurement and extracts the weak value.
pub fn execute(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let s = &cfg.scenario;
    let a = s.observable(&cfg.observable_a)?;
    let px = GaussianPointer::new(cfg.sigma_x, cfg.hbar)?;
    let opts = EngineOptions { ps_floor: cfg.ps_floor };
    let n_max = (cfg.engine == EngineTag::Fock).then_some(cfg.n_max);

    let Some(label_b) = &cfg.observable_b else {
        let coupling = SingleCoupling::new(a.clone(), cfg.kx, px)?;
        let record = match cfg.engine {
            EngineTag::Exact => run_single_exact(&s.i, &s.f, &coupling, &opts)?,
            EngineTag::Fock => run_fock(&s.i, &s.f, &coupling.clone().into(), cfg.n_max, &opts)?,
        };
        let digest = format!("{}:{}", s.name, cfg.observable_a);
        let extracted = extract_single(&record, &coupling)?.with_digest(digest.clone());
        let direct = WeakValueEstimate::direct(
            direct_weak_value(a, &s.i, &s.f)?,
            crate::weakvalues::EstimateKind::DirectSingle,
            digest,
        );
        return Ok(RunReport {
            scenario: s.name.clone(),
            engine: cfg.engine,
            observable_a: cfg.observable_a.clone(),
            observable_b: None,
            quantity: format!("<{}>_W", cfg.observable_a),
            kx: cfg.kx,
            ky: None,
            sigma_x: cfg.sigma_x,
            sigma_y: None,
            hbar: cfg.hbar,
            n_max,
            singles: None,
            record,
            extracted,
            direct,
            single_a: None,
            single_b: None,
            wall_time: start.elapsed(),
        });
    };

    let b = s.observable(label_b)?;
    let ky = cfg.ky.unwrap_or(cfg.kx);
    let sigma_y = cfg.sigma_y.unwrap_or(cfg.sigma_x);
    let py = GaussianPointer::new(sigma_y, cfg.hbar)?;
    let coupling = JointCoupling::new(a.clone(), b.clone(), cfg.kx, ky, px, py)?;
    let record = match cfg.engine {
        EngineTag::Exact => run_joint_exact(&s.i, &s.f, &coupling, &opts)?,
        EngineTag::Fock => run_fock(&s.i, &s.f, &Coupling::Joint(coupling.clone()), cfg.n_max, &opts)?,
    };

    let direct_a = direct_weak_value(a, &s.i, &s.f)?;
    let direct_b = direct_weak_value(b, &s.i, &s.f)?;
    let extracted_a = extract_marginal(&record, &coupling, PointerAxis::X)?.value;
    let extracted_b = extract_marginal(&record, &coupling, PointerAxis::Y)?.value;
    let singles = match cfg.singles {
        SinglesSource::Direct => (direct_a, direct_b),
        SinglesSource::Extracted => (extracted_a, extracted_b),
    };

    let commuting = commutator_norm(a, b)? <= 1e-10 * max_norm(a.matrix()) * max_norm(b.matrix());
    let (la, lb) = (&cfg.observable_a, label_b);
    let quantity = if commuting {
        format!("<{la} {lb}>_W")
    } else {
        format!("<({la} {lb} + {lb} {la})/2>_W")
    };
    let digest = format!("{}:{la}*{lb}", s.name);
    let extracted = extract_joint(&record, singles, cfg.singles, &coupling)?.with_digest(digest.clone());
    let direct = WeakValueEstimate::direct(
        direct_joint_weak_value(a, b, &s.i, &s.f)?,
        crate::weakvalues::EstimateKind::DirectJointSymmetrized,
        digest,
    );

    Ok(RunReport {
        scenario: s.name.clone(),
        engine: cfg.engine,
        observable_a: la.clone(),
        observable_b: Some(lb.clone()),
        quantity,
        kx: cfg.kx,
        ky: Some(ky),
        sigma_x: cfg.sigma_x,
        sigma_y: Some(sigma_y),
        hbar: cfg.hbar,
        n_max,
        singles: Some(cfg.singles),
        record,
        extracted,
        direct,
        single_a: Some(SingleComparison { label: la.clone(), extracted: extracted_a, direct: direct_a }),
        single_b: Some(SingleComparison { label: lb.clone(), extracted: extracted_b, direct: direct_b }),
        wall_time: start.elapsed(),
    })
}

/// K grid for a sweep, ascending.
pub fn sweep_grid(k_min: f64, k_max: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::InvalidParameter("--points must be at least 1".into()));
    }
    if !(k_min.is_finite() && k_max.is_finite()) || k_min > k_max {
        return Err(Error::InvalidParameter(format!("invalid K range [{k_min}, {k_max}]")));
    }
    if log && k_min <= 0.0 {
        return Err(Error::InvalidParameter("--log requires --k-min > 0".into()));
    }
    if points == 1 {
        return Ok(vec![k_min]);
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|j| {
            let t = j as f64 / n;
            if log {
                (k_min.ln() + t * (k_max.ln() - k_min.ln())).exp()
            } else {
                k_min + t * (k_max - k_min)
            }
        })
        .collect())
}

fn sweep_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

/// Runs the config at each K; rows come back in grid order.
pub fn execute_sweep(base: &RunConfig, grid: &[f64]) -> Result<Vec<RunReport>> {
    let work = || grid.par_iter().map(|&k| execute(&base.with_k(k))).collect::<Result<Vec<_>>>();
    match sweep_threads() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(work)
        }
        None => work(),
    }
}

/// Least-squares slope of `ln(abs_err)` against `ln(k)`; NaN with fewer
/// than two usable points.
pub fn fitted_error_order(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, e)| *k > 0.0 && *e > 0.0 && e.is_finite())
        .map(|(k, e)| (k.ln(), e.ln()))
        .collect();
    if logs.len() < 2 {
        return f64::NAN;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return f64::NAN;
    }
    sxy / sxx
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn csv_row(k: f64, r: &RunReport) -> String {
    let cols = [
        k,
        r.record.ps_prob,
        r.extracted.value.re,
        r.extracted.value.im,
        r.direct.value.re,
        r.direct.value.im,
        r.abs_err(),
        r.weakness_ratio(),
    ];
    cols.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}

pub fn sweep_csv(grid: &[f64], reports: &[RunReport]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (k, r) in grid.iter().zip(reports) {
        out.push_str(&csv_row(*k, r));
        out.push('\n');
    }
    let pairs: Vec<(f64, f64)> = grid.iter().zip(reports).map(|(k, r)| (*k, r.abs_err())).collect();
    out.push_str(&format!("# schema={SCHEMA_VERSION}\n"));
    out.push_str(&format!("# fitted_error_order={}\n", fmt_f64(fitted_error_order(&pairs))));
    out
}

pub fn run_csv(r: &RunReport) -> String {
    format!("{CSV_HEADER}\n{}\n# schema={SCHEMA_VERSION}\n", csv_row(r.kx, r))
}

#[derive(Serialize)]
struct ComplexPair {
    re_extracted: f64,
    im_extracted: f64,
    re_direct: f64,
    im_direct: f64,
    abs_err: f64,
}

#[derive(Serialize)]
struct SingleDocument<'a> {
    observable: &'a str,
    #[serde(flatten)]
    values: ComplexPair,
}

#[derive(Serialize)]
struct RecordDocument {
    ps_prob: f64,
    x_mean: f64,
    y_mean: f64,
    px_mean: f64,
    py_mean: f64,
    xy_mean: f64,
    x_py_mean: f64,
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    schema: u32,
    scenario: &'a str,
    engine: EngineTag,
    observable_a: &'a str,
    observable_b: Option<&'a str>,
    quantity: &'a str,
    kx: f64,
    ky: Option<f64>,
    sigma_x: f64,
    sigma_y: Option<f64>,
    hbar: f64,
    n_max: Option<usize>,
    singles: Option<SinglesSource>,
    record: RecordDocument,
    #[serde(flatten)]
    values: ComplexPair,
    single_a: Option<SingleDocument<'a>>,
    single_b: Option<SingleDocument<'a>>,
    weakness_ratio: f64,
    truncation: Option<TruncationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

fn single_doc(s: &Option<SingleComparison>) -> Option<SingleDocument<'_>> {
    s.as_ref().map(|s| SingleDocument { observable: s.label.as_str(), values: pair(s.extracted, s.direct) })
}

fn pair(extracted: C64, direct: C64) -> ComplexPair {
    ComplexPair {
        re_extracted: extracted.re,
        im_extracted: extracted.im,
        re_direct: direct.re,
        im_direct: direct.im,
        abs_err: (extracted - direct).norm(),
    }
}

/// JSON report; error fields are recomputed here from the stored values.
pub fn report_json(r: &RunReport, timing: bool) -> String {
    let rec = &r.record;
    let doc = ReportDocument {
        schema: SCHEMA_VERSION,
        scenario: &r.scenario,
        engine: r.engine,
        observable_a: &r.observable_a,
        observable_b: r.observable_b.as_deref(),
        quantity: &r.quantity,
        kx: r.kx,
        ky: r.ky,
        sigma_x: r.sigma_x,
        sigma_y: r.sigma_y,
        hbar: r.hbar,
        n_max: r.n_max,
        singles: r.singles,
        record: RecordDocument {
            ps_prob: rec.ps_prob,
            x_mean: rec.x_mean,
            y_mean: rec.y_mean,
            px_mean: rec.px_mean,
            py_mean: rec.py_mean,
            xy_mean: rec.xy_mean,
            x_py_mean: rec.x_py_mean,
        },
        values: pair(r.extracted.value, r.direct.value),
        single_a: single_doc(&r.single_a),
        single_b: single_doc(&r.single_b),
        weakness_ratio: rec.weakness_ratio,
        truncation: rec.truncation,
        wall_time_s: timing.then_some(r.wall_time.as_secs_f64()),
    };
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits::default());
    doc.serialize(&mut ser).expect("report serializes");
    let mut s = String::from_utf8(buf).expect("utf-8");
    s.push('\n');
    s
}

/// Pretty JSON with every float at 17 significant digits.
#[derive(Default)]
struct SignificantDigits {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::from_common(&args.common, args.kx, args.ky)?;
    let report = execute(&cfg)?;
    let text = match args.format {
        FormatArg::Json => report_json(&report, args.timing),
        FormatArg::Csv => run_csv(&report),
    };
    emit(&text, args.common.out.as_deref())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    if args.format != FormatArg::Csv {
        return Err(Error::InvalidParameter("sweep output is CSV only".into()));
    }
    let grid = sweep_grid(args.k_min, args.k_max, args.points, args.log)?;
    let base = RunConfig::from_common(&args.common, args.k_min, None)?;
    let reports = execute_sweep(&base, &grid)?;
    emit(&sweep_csv(&grid, &reports), args.common.out.as_deref())
}

pub fn cmd_validate() -> bool {
    let checks = crate::validate::run_all();
    for check in &checks {
        println!("{check}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    failed == 0
}

/// Parses `argv` and runs the selected command, returning the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate => return if cmd_validate() { 0 } else { EXIT_VALIDATION },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{build_hardy, build_three_box};

    #[test]
    fn grid_shapes() {
        assert_eq!(sweep_grid(0.1, 0.5, 1, false).unwrap(), vec![0.1]);
        let g = sweep_grid(1e-3, 1e-1, 3, true).unwrap();
        assert!((g[1] - 1e-2).abs() < 1e-15);
        assert!((g[2] - 1e-1).abs() < 1e-15);
        assert!(sweep_grid(0.0, 1.0, 4, true).is_err());
        assert!(sweep_grid(0.1, 1.0, 0, false).is_err());
        assert!(sweep_grid(1.0, 0.1, 3, false).is_err());
    }

    #[test]
    fn fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [1e-3, 1e-2, 1e-1].iter().map(|&k| (k, 3.0 * k * k)).collect();
        assert!((fitted_error_order(&pts) - 2.0).abs() < 1e-12);
        assert!(fitted_error_order(&pts[..1]).is_nan());
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_f64(0.01), "1.0000000000000000e-2");
        assert_eq!(fmt_f64(-1.0), "-1.0000000000000000e0");
    }

    #[test]
    fn three_box_report() {
        let cfg = RunConfig::single(build_three_box(), "P3", EngineTag::Exact, 0.01, 1.0);
        let r = execute(&cfg).unwrap();
        assert!(r.abs_err() <= 1e-3);
        let json = report_json(&r, false);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!((v["re_extracted"].as_f64().unwrap() + 1.0).abs() <= 1e-3);
        assert_eq!(v["schema"], 1);
        assert!(v.get("wall_time_s").is_none());
        assert_eq!(json, report_json(&execute(&cfg).unwrap(), false));
    }

    #[test]
    fn hardy_joint_report() {
        let cfg = RunConfig::joint(build_hardy(), "N_Oe", "N_Op", EngineTag::Exact, 0.01, 1.0);
        let r = execute(&cfg).unwrap();
        assert!(r.extracted.value.re.abs() <= 1e-3);
        assert_eq!(r.quantity, "<N_Oe N_Op>_W");
    }

    #[test]
    fn unknown_observable_is_config_error() {
        let cfg = RunConfig::single(build_three_box(), "P9", EngineTag::Exact, 0.01, 1.0);
        let e = execute(&cfg).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
    }

    #[test]
    fn missing_kx_exits_one() {
        let code = main_with_args(["weaklab", "run", "--scenario", "spin", "--engine", "exact"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn sweep_csv_layout() {
        let cfg = RunConfig::single(build_three_box(), "P3", EngineTag::Exact, 0.01, 1.0);
        let grid = sweep_grid(0.01, 0.01, 1, true).unwrap();
        let reports = execute_sweep(&cfg, &grid).unwrap();
        let csv = sweep_csv(&grid, &reports);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "# schema=1");
        assert_eq!(lines[3], "# fitted_error_order=NaN");
    }
}
