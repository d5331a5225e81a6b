//! The `econet` command line: argument parsing, dispatch and report writing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::gkp::{self, GdpChange};
use crate::graph::{detect_percolation_point, percolation_sweep, FlowNetwork, ThresholdGrid};
use crate::io::{self, csv_text, sig6, sig6_opt, Format, IoError};
use crate::mlr::{self, CoefficientNetwork, FitCriteria, IndicatorId, IndicatorPanel};
use crate::pin::{self, NlsmmOptions, WarningConfig, YearMonth};
use crate::stats::Sidedness;
use crate::synth;

pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_COMPUTATION: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "econet",
    version,
    about = "Network analysis of balance-of-payments, portfolio-investment and trade data"
)]
pub struct Cli {
    /// Output directory for reports.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed recorded in every report and used by `synth`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Fit the balance-of-payments coefficient network by stepwise regression.
    FitBop(FitBopArgs),
    /// Apply a fitted model as a one-year evolution operator.
    Forecast(ForecastArgs),
    /// Shortest tracking path between two indicators of a fitted model.
    Track(TrackArgs),
    /// Density of the thresholded largest SCC of yearly holdings networks.
    PinDensity(PinDensityArgs),
    /// Fit the short-term memory model to derivative market values.
    NlsmmFit(NlsmmFitArgs),
    /// Warning signals where a model series exceeds a fraction of a reference variable.
    Warn(WarnArgs),
    /// Gate-keeping potential of every node in every year.
    Gkp(GkpArgs),
    /// Correlate GDP change with gate-keeping potential, imports and exports.
    Correlate(CorrelateArgs),
    /// Generate synthetic inputs with planted ground truth.
    Synth(SynthArgs),
    /// Check an input file against its format.
    Validate(ValidateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FitBop(_) => "fit-bop",
            Command::Forecast(_) => "forecast",
            Command::Track(_) => "track",
            Command::PinDensity(_) => "pin-density",
            Command::NlsmmFit(_) => "nlsmm-fit",
            Command::Warn(_) => "warn",
            Command::Gkp(_) => "gkp",
            Command::Correlate(_) => "correlate",
            Command::Synth(_) => "synth",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DeflateArgs {
    /// `year,deflator` CSV; values are converted to base-year money.
    #[arg(long)]
    pub deflator: Option<PathBuf>,
    /// Year whose price level the deflated values are expressed in.
    #[arg(long)]
    pub base_year: Option<i32>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitBopArgs {
    /// Panel CSV `country,account,direction,year,value_usd`.
    #[arg(long)]
    pub panel: PathBuf,
    #[command(flatten)]
    pub deflate: DeflateArgs,
    /// Exclude the final panel year from fitting.
    #[arg(long)]
    pub holdout_last: bool,
    /// Significance level for the t- and F-tests.
    #[arg(long, default_value_t = 0.025)]
    pub alpha: f64,
    /// Bound on the mean relative fit error of an accepted row.
    #[arg(long, default_value_t = 0.10)]
    pub max_error: f64,
    #[arg(long, default_value_t = 10.0)]
    pub max_cond: f64,
    #[arg(long, default_value_t = 5.0)]
    pub max_vif: f64,
    /// One-sided coefficient t-tests instead of two-sided.
    #[arg(long)]
    pub one_sided: bool,
    /// Keep only the largest countries covering this share of each account.
    #[arg(long)]
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ForecastArgs {
    /// model.json written by `fit-bop`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub panel: PathBuf,
    /// Year whose values are propagated one year ahead.
    #[arg(long)]
    pub from_year: i32,
    #[command(flatten)]
    pub deflate: DeflateArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrackArgs {
    /// model.json written by `fit-bop`.
    #[arg(long)]
    pub model: PathBuf,
    /// Indicator id `country:account:direction`.
    #[arg(long)]
    pub source: String,
    #[arg(long)]
    pub target: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PinDensityArgs {
    /// Edge list `source,target,year,value_usd`.
    #[arg(long)]
    pub holdings: PathBuf,
    /// Edge threshold in USD.
    #[arg(long)]
    pub threshold: f64,
    /// Normalization year (default: first year).
    #[arg(long)]
    pub ref_year: Option<i32>,
    #[arg(long, default_value_t = 1e6)]
    pub grid_min: f64,
    #[arg(long, default_value_t = 1e9)]
    pub grid_max: f64,
    #[arg(long, default_value_t = 50)]
    pub per_decade: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NlsmmFitArgs {
    /// Density CSV `time,rho[,rho_bar]`.
    #[arg(long)]
    pub density: PathBuf,
    /// Derivative series CSV `time,kind,label,value_usd`.
    #[arg(long)]
    pub target: PathBuf,
    /// Lead/lag candidates in months; positive means the density leads.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-12,-6,0,6,12"
    )]
    pub dt_grid: Vec<i32>,
    /// Normalization time `YYYY-MM` of the density (default: first point).
    #[arg(long)]
    pub ref_time: Option<String>,
    /// Reference value V_r (default: first target value after burn-in).
    #[arg(long)]
    pub v_ref: Option<f64>,
    /// Leading target points excluded from the fit.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    /// Months between the current and the memory term.
    #[arg(long, default_value_t = 12)]
    pub memory_lag: i64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WarnArgs {
    /// Model series CSV `time,kind,label,value_usd`.
    #[arg(long)]
    pub model_series: PathBuf,
    /// Reference-variable CSV `country,year,gdp_usd`.
    #[arg(long)]
    pub rv: PathBuf,
    /// Country of the reference variable, needed when the file has several.
    #[arg(long)]
    pub rv_country: Option<String>,
    /// Warn where the model exceeds `fmax` times the reference variable.
    #[arg(long)]
    pub fmax: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GkpArgs {
    /// Trade edge list `source,target,year,value_usd`.
    #[arg(long)]
    pub trade: PathBuf,
    /// `member,group` map merging nodes before evaluation.
    #[arg(long)]
    pub merge: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GdpChangeArg {
    Percentage,
    Absolute,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorrelateArgs {
    /// `country,year,gkp` CSV as written by `gkp`.
    #[arg(long)]
    pub gkp: PathBuf,
    /// Trade edge list the imports and exports are summed from.
    #[arg(long)]
    pub trade: PathBuf,
    /// `country,year,gdp_usd` CSV.
    #[arg(long)]
    pub gdp: PathBuf,
    #[arg(long)]
    pub merge: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GdpChangeArg::Percentage)]
    pub gdp_change: GdpChangeArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    Panel,
    Pin,
    Trade,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Countries (panel, trade).
    #[arg(long)]
    pub countries: Option<usize>,
    #[arg(long)]
    pub years: Option<usize>,
    /// Noise as a fraction of the signal (panel, trade).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Planted relations (panel).
    #[arg(long)]
    pub planted: Option<usize>,
    /// Pure-noise regressands (panel).
    #[arg(long)]
    pub noise_rows: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidateFormat {
    Panel,
    Edges,
    Series,
    Gdp,
    Deflator,
    Merge,
    Density,
    Gkp,
}

impl From<ValidateFormat> for Format {
    fn from(f: ValidateFormat) -> Self {
        match f {
            ValidateFormat::Panel => Format::Panel,
            ValidateFormat::Edges => Format::Edges,
            ValidateFormat::Series => Format::Series,
            ValidateFormat::Gdp => Format::Gdp,
            ValidateFormat::Deflator => Format::Deflator,
            ValidateFormat::Merge => Format::Merge,
            ValidateFormat::Density => Format::Density,
            ValidateFormat::Gkp => Format::Gkp,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    /// CSV file to check.
    #[arg(long)]
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub format: ValidateFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Validation,
    Computation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: FailureKind,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::Validation,
            message: message.into(),
        }
    }

    fn computation(module: &str, e: impl std::fmt::Display) -> Self {
        Self {
            kind: FailureKind::Computation,
            message: format!("{module}: {e}"),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            FailureKind::Validation => EXIT_VALIDATION,
            FailureKind::Computation => EXIT_COMPUTATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Write { .. } => CliError::computation("io", e),
            other => CliError::validation(format!("input: {other}")),
        }
    }
}

fn invalid(module: &str, e: impl std::fmt::Display) -> CliError {
    CliError::validation(format!("{module}: {e}"))
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub written: Vec<PathBuf>,
    pub summary: String,
}

type Files = Vec<(String, String)>;

fn meta(cli: &Cli) -> Value {
    json!({
        "tool": "econet",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "seed": cli.seed,
        "config": &cli.command,
    })
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Runs one parsed invocation and writes its reports.
pub fn run(cli: &Cli) -> Result<RunOutcome, CliError> {
    let m = meta(cli);
    let (files, summary) = match &cli.command {
        Command::FitBop(a) => fit_bop(a, m)?,
        Command::Forecast(a) => forecast(a, m)?,
        Command::Track(a) => track(a, m)?,
        Command::PinDensity(a) => pin_density(a, m)?,
        Command::NlsmmFit(a) => nlsmm_fit(a, m)?,
        Command::Warn(a) => warn(a, m)?,
        Command::Gkp(a) => gkp_cmd(a, m)?,
        Command::Correlate(a) => correlate(a, m)?,
        Command::Synth(a) => synth_cmd(a, cli.seed, m)?,
        Command::Validate(a) => return validate(a, m, &cli.out),
    };
    let written = io::write_outputs(&cli.out, &files)?;
    Ok(RunOutcome { written, summary })
}

/// Parses `args`, runs, prints the outcome and maps it to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(out) => {
            println!("{}", out.summary);
            for p in &out.written {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_deflated(path: &Path, d: &DeflateArgs) -> Result<IndicatorPanel, CliError> {
    let panel = io::load_panel(path)?;
    match (&d.deflator, d.base_year) {
        (None, None) => Ok(panel),
        (Some(p), Some(base)) => {
            let table = io::load_deflator(p)?;
            mlr::deflate_panel(&panel, &table, base).map_err(|e| invalid("mlr", e))
        }
        _ => Err(CliError::validation(
            "--deflator and --base-year must be given together",
        )),
    }
}

fn fit_bop(a: &FitBopArgs, m: Value) -> Result<(Files, String), CliError> {
    let criteria = FitCriteria {
        alpha: a.alpha,
        max_mean_error: a.max_error,
        max_condition: a.max_cond,
        max_vif: a.max_vif,
        sided: if a.one_sided {
            Sidedness::OneSided
        } else {
            Sidedness::TwoSided
        },
    };
    criteria.validate().map_err(|e| invalid("mlr", e))?;
    let mut panel = load_deflated(&a.panel, &a.deflate)?;
    if let Some(c) = a.coverage {
        let keep = mlr::select_countries(&panel, c).map_err(|e| invalid("mlr", e))?;
        panel = panel.restrict_countries(&keep).map_err(|e| invalid("mlr", e))?;
    }
    let net = mlr::fit_gbopn(&panel, &criteria, a.holdout_last).map_err(|e| CliError::computation("mlr", e))?;
    let sizes = panel.sizes();
    let tracking = mlr::tracking_centrality(&net, &sizes).map_err(|e| CliError::computation("mlr", e))?;
    let summary = net.summary();

    let model = json!({ "meta": m, "dropped": panel.dropped(), "model": net });
    let nodes: Vec<Value> = tracking
        .nodes
        .iter()
        .map(|n| json!({ "id": n.indicator, "S": n.size, "T": n.tracking }))
        .collect();
    let edges: Vec<Value> = tracking
        .edges
        .iter()
        .map(|e| json!({ "regressor": e.regressor, "regressand": e.regressand, "beta": e.beta, "r2": e.r2, "v": e.value }))
        .collect();
    let gbopn = json!({ "meta": model["meta"], "nodes": nodes, "edges": edges, "summary": summary });
    let tracking_csv = csv_text(
        &["id", "S", "T"],
        tracking
            .nodes
            .iter()
            .map(|n| vec![n.indicator.to_string(), sig6(n.size), sig6(n.tracking)]),
    );
    let rows_csv = csv_text(
        &[
            "regressand",
            "status",
            "regressors",
            "mean_error",
            "f_pvalue",
            "condition_number",
            "max_vif",
        ],
        net.rows.iter().map(|r| {
            vec![
                r.regressand.to_string(),
                to_value(&r.status).as_str().unwrap_or_default().to_owned(),
                r.regressors
                    .iter()
                    .map(|g| g.indicator.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
                sig6_opt(r.mean_error),
                sig6_opt(r.f_pvalue),
                sig6_opt(r.condition_number),
                sig6_opt(r.max_vif),
            ]
        }),
    );
    let text = format!(
        "fit-bop: {} of {} rows accepted; mean error {}, median error {}",
        summary.accepted,
        summary.total,
        sig6_opt(summary.mean_error),
        sig6_opt(summary.median_error)
    );
    Ok((
        vec![
            ("model.json".into(), json_text(&model)),
            ("gbopn.json".into(), json_text(&gbopn)),
            ("tracking.csv".into(), tracking_csv),
            ("fits.csv".into(), rows_csv),
        ],
        text,
    ))
}

#[derive(Deserialize)]
struct ModelFile {
    model: CoefficientNetwork,
}

fn load_model(path: &Path) -> Result<CoefficientNetwork, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("input: {}: {e}", path.display())))?;
    let f: ModelFile =
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("input: {}: {e}", path.display())))?;
    Ok(f.model)
}

fn forecast(a: &ForecastArgs, m: Value) -> Result<(Files, String), CliError> {
    let model = load_model(&a.model)?;
    let panel = load_deflated(&a.panel, &a.deflate)?;
    let f = mlr::forecast(&model, &panel, a.from_year).map_err(|e| invalid("mlr", e))?;
    let csv = csv_text(
        &["indicator", "predicted", "actual", "relative_error"],
        f.entries.iter().map(|e| {
            vec![
                e.indicator.to_string(),
                sig6(e.predicted),
                sig6_opt(e.actual),
                sig6_opt(e.relative_error),
            ]
        }),
    );
    let median = f.median_error();
    let report = json!({ "meta": m, "median_error": median, "forecast": f });
    let text = format!(
        "forecast: {} indicators for {}, {} skipped, median error {}",
        f.entries.len(),
        a.from_year + 1,
        f.skipped.len(),
        sig6_opt(median)
    );
    Ok((
        vec![
            ("forecast.json".into(), json_text(&report)),
            ("forecast.csv".into(), csv),
        ],
        text,
    ))
}

fn parse_id(s: &str) -> Result<IndicatorId, CliError> {
    s.parse().map_err(|e| invalid("mlr", e))
}

fn track(a: &TrackArgs, m: Value) -> Result<(Files, String), CliError> {
    let model = load_model(&a.model)?;
    let (s, t) = (parse_id(&a.source)?, parse_id(&a.target)?);
    let res = mlr::path_track(&model, &s, &t).map_err(|e| invalid("mlr", e))?;
    let text = match &res {
        mlr::PathResult::Found { path, error_bound } => format!(
            "track: {} ({} steps, error bound {})",
            path.iter().map(ToString::to_string).collect::<Vec<_>>().join(" -> "),
            path.len() - 1,
            sig6(*error_bound)
        ),
        mlr::PathResult::NoPath => format!("track: no path from {s} to {t}"),
    };
    let report = json!({ "meta": m, "source": s, "target": t, "path": res });
    Ok((vec![("path.json".into(), json_text(&report))], text))
}

fn density_csv(series: &pin::DensitySeries) -> String {
    csv_text(
        &["time", "rho", "rho_bar"],
        series
            .points
            .iter()
            .map(|p| vec![p.time.to_string(), sig6(p.rho), sig6(p.rho_bar)]),
    )
}

fn pin_density(a: &PinDensityArgs, m: Value) -> Result<(Files, String), CliError> {
    if !(a.threshold > 0.0 && a.threshold.is_finite()) {
        return Err(CliError::validation("--threshold must be positive"));
    }
    let networks = io::load_networks(&a.holdings)?;
    if networks.iter().any(|n| n.year().is_none()) {
        return Err(CliError::validation("input: holdings need a year column"));
    }
    let grid = ThresholdGrid::log(a.grid_min, a.grid_max, a.per_decade);
    grid.points().map_err(|e| invalid("graph", e))?;
    let mut sweep_rows = Vec::new();
    let mut points = BTreeMap::new();
    for net in &networks {
        let year = net.year().expect("checked above");
        let prof = percolation_sweep(net, &grid).map_err(|e| CliError::computation("graph", e))?;
        points.insert(year.to_string(), detect_percolation_point(&prof).ok());
        for e in &prof.entries {
            sweep_rows.push(vec![
                year.to_string(),
                sig6(e.threshold),
                e.scc_nodes.to_string(),
                e.scc_edges.to_string(),
                sig6(e.scc_density),
            ]);
        }
    }
    let annual =
        pin::build_density_series(&networks, a.threshold, a.ref_year).map_err(|e| CliError::computation("pin", e))?;
    let semi = pin::resample_density(&annual).map_err(|e| CliError::computation("pin", e))?;
    let report = json!({
        "meta": m,
        "threshold": a.threshold,
        "reference": annual.reference,
        "percolation_points": points,
        "annual": annual.points,
        "semiannual": semi.points,
    });
    let text = format!(
        "pin-density: {} years at threshold {}, {} semiannual points",
        annual.points.len(),
        sig6(a.threshold),
        semi.points.len()
    );
    Ok((
        vec![
            ("density.json".into(), json_text(&report)),
            ("density.csv".into(), density_csv(&semi)),
            (
                "percolation.csv".into(),
                csv_text(
                    &["year", "threshold", "scc_nodes", "scc_edges", "scc_density"],
                    sweep_rows,
                ),
            ),
        ],
        text,
    ))
}

fn nlsmm_fit(a: &NlsmmFitArgs, m: Value) -> Result<(Files, String), CliError> {
    let reference = a
        .ref_time
        .as_deref()
        .map(str::parse::<YearMonth>)
        .transpose()
        .map_err(|e| invalid("pin", e))?;
    let density = io::load_density(&a.density, reference)?;
    let density = if density.points.len() >= 2 {
        pin::resample_density(&density).map_err(|e| invalid("pin", e))?
    } else {
        return Err(CliError::validation("pin: density needs at least 2 points"));
    };
    let targets = io::load_series(&a.target)?;
    let opts = NlsmmOptions {
        dt_grid: a.dt_grid.clone(),
        memory_lag_months: a.memory_lag,
        v_ref: a.v_ref,
        burn_in: a.burn_in,
        ..NlsmmOptions::default()
    };
    let mut fits = Vec::new();
    let mut rows = Vec::new();
    let mut model_rows = Vec::new();
    let mut lines = Vec::new();
    for t in &targets {
        let fit = pin::nlsmm_fit(&density, t, &opts).map_err(|e| match e {
            pin::PinError::BadDeltaGrid(_) | pin::PinError::BadReferenceValue => invalid("pin", e),
            other => CliError::computation("pin", format!("{}: {other}", t.label)),
        })?;
        lines.push(format!(
            "{} {}: p_r {} ({}), delta_t {}",
            fit.kind.as_str(),
            fit.label,
            sig6(fit.p_r),
            to_value(&fit.verdict).as_str().unwrap_or_default(),
            fit.delta_t
        ));
        fits.push(json!({
            "label": fit.label,
            "kind": fit.kind,
            "a_r": fit.a_r,
            "gamma1": fit.gamma1,
            "gamma2": fit.gamma2,
            "m": fit.m,
            "delta_t": fit.delta_t,
            "p_r": fit.p_r,
            "verdict": fit.verdict,
            "v_ref": fit.v_ref,
            "objective": fit.objective,
            "points": fit.points.len(),
            "shifts": fit.shifts.iter().map(|s| json!({
                "delta_t": s.delta_t, "p_r": s.p_r, "objective": s.objective,
                "a_r": s.a_r, "gamma1": s.gamma1, "gamma2": s.gamma2,
            })).collect::<Vec<_>>(),
        }));
        for p in &fit.points {
            rows.push(vec![
                p.time.to_string(),
                fit.kind.as_str().to_owned(),
                fit.label.clone(),
                sig6(p.observed),
                sig6(p.model),
            ]);
            model_rows.push(vec![
                p.time.to_string(),
                fit.kind.as_str().to_owned(),
                fit.label.clone(),
                format!("{}", p.model),
            ]);
        }
    }
    let report = json!({ "meta": m, "fits": fits });
    Ok((
        vec![
            ("nlsmm.json".into(), json_text(&report)),
            (
                "nlsmm_fit.csv".into(),
                csv_text(&["time", "kind", "label", "observed", "model"], rows),
            ),
            (
                "nlsmm_model.csv".into(),
                csv_text(&["time", "kind", "label", "value_usd"], model_rows),
            ),
        ],
        format!("nlsmm-fit: {}", lines.join("; ")),
    ))
}

fn warn(a: &WarnArgs, m: Value) -> Result<(Files, String), CliError> {
    let series = io::load_series(&a.model_series)?;
    let gdp = io::load_gdp(&a.rv)?;
    let country = match (&a.rv_country, gdp.len()) {
        (Some(c), _) => c.clone(),
        (None, 1) => gdp.keys().next().expect("one entry").clone(),
        (None, _) => {
            return Err(CliError::validation(
                "--rv-country is required when the file has several countries",
            ))
        }
    };
    let rv_values: Vec<(i32, f64)> = gdp
        .get(&country)
        .ok_or_else(|| CliError::validation(format!("input: no reference values for {country:?}")))?
        .iter()
        .map(|(y, v)| (*y, *v))
        .collect();
    let config = WarningConfig {
        rv: pin::annual_reference(&rv_values),
        f_max: a.fmax,
    };
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for s in &series {
        let r = pin::warning_signal(&s.points, &config).map_err(|e| match e {
            pin::PinError::DisjointRanges => CliError::computation("pin", format!("{}: {e}", s.label)),
            other => invalid("pin", other),
        })?;
        lines.push(format!(
            "{}: first warning {}",
            s.label,
            r.first_warning.map_or_else(|| "none".to_owned(), |t| t.to_string())
        ));
        for p in &r.points {
            rows.push(vec![
                s.label.clone(),
                p.time.to_string(),
                sig6(p.value),
                sig6(p.threshold),
                p.warning.to_string(),
            ]);
        }
        reports.push(json!({ "label": s.label, "kind": s.kind, "report": r }));
    }
    let report = json!({ "meta": m, "rv_country": country, "series": reports });
    Ok((
        vec![
            ("warnings.json".into(), json_text(&report)),
            (
                "warnings.csv".into(),
                csv_text(&["label", "time", "value", "threshold", "warning"], rows),
            ),
        ],
        format!("warn: {}", lines.join("; ")),
    ))
}

fn load_trade(trade: &Path, merge: Option<&PathBuf>) -> Result<Vec<FlowNetwork>, CliError> {
    let networks = io::load_networks(trade)?;
    match merge {
        None => Ok(networks),
        Some(p) => {
            let groups = io::load_merge(p)?;
            networks
                .iter()
                .map(|n| gkp::merge_nodes(n, &groups).map_err(|e| CliError::computation("gkp", e)))
                .collect()
        }
    }
}

fn gkp_cmd(a: &GkpArgs, m: Value) -> Result<(Files, String), CliError> {
    let networks = load_trade(&a.trade, a.merge.as_ref())?;
    let mut by_node: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    let mut rows = Vec::new();
    for net in &networks {
        for (node, g) in gkp::gkp_all(net) {
            by_node
                .entry(node.clone())
                .or_default()
                .push(json!({ "year": net.year(), "gkp": g }));
            rows.push((node, net.year(), g));
        }
    }
    rows.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
    let csv = csv_text(
        &["country", "year", "gkp"],
        rows.iter()
            .map(|(n, y, g)| vec![n.clone(), y.map(|y| y.to_string()).unwrap_or_default(), sig6(*g)]),
    );
    let report = json!({ "meta": m, "nodes": by_node });
    Ok((
        vec![("gkp.json".into(), json_text(&report)), ("gkp.csv".into(), csv)],
        format!("gkp: {} nodes over {} network(s)", by_node.len(), networks.len()),
    ))
}

fn correlate(a: &CorrelateArgs, m: Value) -> Result<(Files, String), CliError> {
    let gkp_table = io::load_gkp(&a.gkp)?;
    let gdp = io::load_gdp(&a.gdp)?;
    let networks = load_trade(&a.trade, a.merge.as_ref())?;
    if networks.iter().any(|n| n.year().is_none()) {
        return Err(CliError::validation("input: trade data need a year column"));
    }
    let mode = match a.gdp_change {
        GdpChangeArg::Percentage => GdpChange::Percentage,
        GdpChangeArg::Absolute => GdpChange::Absolute,
    };
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (country, g) in &gkp_table {
        let Some(series) = gdp.get(country) else {
            skipped.push(json!({ "country": country, "reason": "no GDP data" }));
            continue;
        };
        let change = gkp::gdp_change(country, series, mode).map_err(|e| invalid("gkp", e))?;
        let mut years = Vec::new();
        let (mut gv, mut imp, mut exp, mut ch) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for net in &networks {
            let y = net.year().expect("checked above");
            if let (Some(gk), Some(c), true) = (g.get(&y), change.get(&y), net.contains_node(country)) {
                years.push(y);
                gv.push(*gk);
                imp.push(net.inflow(country));
                exp.push(net.outflow(country));
                ch.push((y, *c));
            }
        }
        if years.len() < 3 {
            skipped.push(json!({ "country": country, "reason": format!("{} aligned years", years.len()) }));
            continue;
        }
        let row = gkp::correlate_gdp(&gkp::CountryInputs {
            country,
            years: &years,
            gkp: &gv,
            imports: &imp,
            exports: &exp,
            gdp_change: &ch,
        })
        .map_err(|e| CliError::computation("gkp", e))?;
        rows.push(row);
    }
    let csv = csv_text(
        &["country", "corr_gkp", "corr_imports", "corr_exports"],
        rows.iter().map(|r| {
            vec![
                r.country.clone(),
                sig6_opt(r.corr_gkp),
                sig6_opt(r.corr_imports),
                sig6_opt(r.corr_exports),
            ]
        }),
    );
    let report = json!({ "meta": m, "gdp_change": mode, "rows": rows, "skipped": skipped });
    Ok((
        vec![
            ("correlation.json".into(), json_text(&report)),
            ("correlation.csv".into(), csv),
        ],
        format!("correlate: {} countries, {} skipped", rows.len(), skipped.len()),
    ))
}

/// Full-precision number for data files that are read back as inputs.
fn exact(x: f64) -> String {
    format!("{x}")
}

fn edges_csv(networks: &[FlowNetwork]) -> String {
    csv_text(
        &["source", "target", "year", "value_usd"],
        networks.iter().flat_map(|n| {
            let y = n.year().map(|y| y.to_string()).unwrap_or_default();
            n.edges()
                .map(move |(s, t, w)| vec![s.to_owned(), t.to_owned(), y.clone(), exact(w)])
                .collect::<Vec<_>>()
        }),
    )
}

fn gdp_csv(gdp: &BTreeMap<String, BTreeMap<i32, f64>>) -> String {
    csv_text(
        &["country", "year", "gdp_usd"],
        gdp.iter()
            .flat_map(|(c, s)| s.iter().map(move |(y, v)| vec![c.clone(), y.to_string(), exact(*v)])),
    )
}

fn synth_cmd(a: &SynthArgs, seed: u64, m: Value) -> Result<(Files, String), CliError> {
    let bad = |e: synth::SynthError| invalid("synth", e);
    match a.kind {
        SynthKind::Panel => {
            let d = synth::PanelSpec::default();
            let spec = synth::PanelSpec {
                countries: a.countries.unwrap_or(d.countries),
                years: a.years.unwrap_or(d.years),
                planted: a.planted.unwrap_or(d.planted),
                noise_rows: a.noise_rows.unwrap_or(d.noise_rows),
                noise: a.noise.unwrap_or(d.noise),
                ..d
            };
            let (panel, truth) = synth::synth_panel(&spec, seed).map_err(bad)?;
            let csv = csv_text(
                &["country", "account", "direction", "year", "value_usd"],
                panel.records().map(|r| {
                    vec![
                        r.indicator.country.clone(),
                        r.indicator.account.as_str().to_owned(),
                        r.indicator.direction.as_str().to_owned(),
                        r.year.to_string(),
                        r.value.map(exact).unwrap_or_default(),
                    ]
                }),
            );
            let truth = json!({ "meta": m, "truth": truth });
            Ok((
                vec![("panel.csv".into(), csv), ("truth.json".into(), json_text(&truth))],
                format!("synth: panel with {} indicators", panel.indicators().len()),
            ))
        }
        SynthKind::Pin => {
            let d = synth::PinSpec::default();
            let spec = synth::PinSpec {
                years: a.years.unwrap_or(d.years),
                ..d
            };
            let data = synth::synth_pin(&spec, seed).map_err(bad)?;
            let series = csv_text(
                &["time", "kind", "label", "value_usd"],
                data.derivatives.iter().flat_map(|s| {
                    s.points
                        .iter()
                        .map(|(t, v)| vec![t.to_string(), s.kind.as_str().to_owned(), s.label.clone(), exact(*v)])
                        .collect::<Vec<_>>()
                }),
            );
            let gdp: BTreeMap<String, BTreeMap<i32, f64>> =
                [("WLD".to_owned(), data.gdp.iter().copied().collect())].into();
            let truth = json!({ "meta": m, "truth": data.truth });
            Ok((
                vec![
                    ("holdings.csv".into(), edges_csv(&data.networks)),
                    ("derivatives.csv".into(), series),
                    ("gdp.csv".into(), gdp_csv(&gdp)),
                    ("truth.json".into(), json_text(&truth)),
                ],
                format!("synth: {} yearly holdings networks", data.networks.len()),
            ))
        }
        SynthKind::Trade => {
            let d = synth::TradeSpec::default();
            let spec = synth::TradeSpec {
                countries: a.countries.unwrap_or(d.countries),
                years: a.years.unwrap_or(d.years),
                noise: a.noise.unwrap_or(d.noise),
                ..d
            };
            let data = synth::synth_trade(&spec, seed).map_err(bad)?;
            let truth = json!({ "meta": m, "truth": data.truth });
            Ok((
                vec![
                    ("trade.csv".into(), edges_csv(&data.networks)),
                    ("gdp.csv".into(), gdp_csv(&data.gdp)),
                    ("truth.json".into(), json_text(&truth)),
                ],
                format!("synth: {} yearly trade networks", data.networks.len()),
            ))
        }
    }
}

fn validate(a: &ValidateArgs, m: Value, out: &Path) -> Result<RunOutcome, CliError> {
    let report = io::validate_file(&a.file, a.format.into())?;
    let body = json!({ "meta": m, "report": report });
    let written = io::write_outputs(out, &[("validation.json".into(), json_text(&body))])?;
    if report.is_clean() {
        Ok(RunOutcome {
            written,
            summary: format!("validate: {} rows, no findings", report.rows),
        })
    } else {
        let lines: Vec<String> = report
            .findings
            .iter()
            .map(|f| format!("{}:{}: {}", a.file.display(), f.line, f.message))
            .collect();
        Err(CliError::validation(format!(
            "validate: {} finding(s)\n{}",
            report.findings.len(),
            lines.join("\n")
        )))
    }
}
