//! Command-line front end. Every subcommand emits one CSV document: `#`
//! metadata lines, a header row, then data rows.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{optimize_cluster_size, AnalysisConfig, BitsMode};
use crate::channel::{empirical_correlation, psi, ChannelParams};
use crate::chquant::{
    exact_rate_estimate, high_rate_approximation, quantizer_moments, switch_point, UniformQuantizer,
};
use crate::interp::{PhaseCodebook, PhaseFormula, PhaseMode};
use crate::mc::{self, Axis, ClusterSize, CodebookReuse, RateReport, Scheme, SimConfig, SweepMode};
use crate::rng::{substream, Domain};
use crate::LogBase;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CliError {
    /// Bad flags or flag values; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Failure after validation; exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "bfinterp",
    version,
    about = "Limited-feedback OFDM beamforming: interpolation and channel quantization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form vs simulated subcarrier correlation.
    Correlation(CorrelationArgs),
    /// Predicted sum rate for every cluster size and the best one.
    ClusterOpt(ClusterOptArgs),
    /// Monte Carlo rate of one scheme.
    Simulate(SimulateArgs),
    /// One row per (axis value, scheme).
    Sweep(SweepArgs),
    /// Quantizer moments and channel-quantization rate predictions.
    Moments(MomentsArgs),
    /// Interpolation vs channel quantization over a feedback grid.
    SwitchPoint(SwitchArgs),
}

#[derive(Debug, Clone, Args)]
struct ChannelFlags {
    /// Subcarriers.
    #[arg(long = "N", default_value_t = 256)]
    subcarriers: usize,
    /// Transmit antennas.
    #[arg(long = "Nt", default_value_t = 4)]
    antennas: usize,
    /// Channel taps.
    #[arg(long = "L", default_value_t = 16)]
    taps: usize,
    #[arg(long = "snr-db", default_value_t = 10.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long = "log-base", value_enum, default_value_t = BaseArg::Bits)]
    log_base: BaseArg,
}

#[derive(Debug, Clone, Args)]
struct RunFlags {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
struct OutputFlags {
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct SchemeFlags {
    /// Total feedback bits.
    #[arg(long = "B", default_value_t = 64)]
    bits: u64,
    /// Cluster size, or `auto` for the analytic optimum.
    #[arg(long = "M", default_value = "auto")]
    size: String,
    /// Higher-order interpolation order (even).
    #[arg(long = "R", default_value_t = 2)]
    order: usize,
    /// Phase alphabet size for searched phases.
    #[arg(long = "P", default_value_t = 16)]
    levels: usize,
    #[arg(long = "phase-mode", value_enum, default_value_t = PhaseArg::ClosedForm)]
    phase_mode: PhaseArg,
    #[arg(long, value_enum, default_value_t = CodebookArg::PerRealization)]
    codebook: CodebookArg,
}

#[derive(Debug, Args)]
struct CorrelationArgs {
    #[command(flatten)]
    channel: ChannelFlags,
    #[command(flatten)]
    run: RunFlags,
    #[command(flatten)]
    out: OutputFlags,
    /// Subcarrier offsets.
    #[arg(long = "q", value_delimiter = ',', required = true)]
    offsets: Vec<usize>,
}

#[derive(Debug, Args)]
struct ClusterOptArgs {
    #[command(flatten)]
    channel: ChannelFlags,
    #[command(flatten)]
    out: OutputFlags,
    #[arg(long = "B", default_value_t = 64.0)]
    bits: f64,
    #[arg(long = "bits-mode", value_enum, default_value_t = BitsArg::Floored)]
    bits_mode: BitsArg,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    channel: ChannelFlags,
    #[command(flatten)]
    run: RunFlags,
    #[command(flatten)]
    out: OutputFlags,
    #[command(flatten)]
    scheme_flags: SchemeFlags,
    #[arg(long, value_enum, default_value_t = SchemeArg::Constant)]
    scheme: SchemeArg,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    channel: ChannelFlags,
    #[command(flatten)]
    run: RunFlags,
    #[command(flatten)]
    out: OutputFlags,
    #[command(flatten)]
    scheme_flags: SchemeFlags,
    #[arg(long, value_enum)]
    axis: AxisArg,
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    values: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "constant")]
    schemes: Vec<SchemeArg>,
    /// Skip Monte Carlo and emit the closed-form columns only.
    #[arg(long)]
    analytic_only: bool,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[command(flatten)]
    channel: ChannelFlags,
    #[command(flatten)]
    out: OutputFlags,
    /// Bits per real coefficient.
    #[arg(long = "br", value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
    bits_per_real: Vec<u32>,
}

#[derive(Debug, Args)]
struct SwitchArgs {
    #[command(flatten)]
    channel: ChannelFlags,
    #[command(flatten)]
    out: OutputFlags,
    /// Total feedback budgets to compare.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaseArg {
    Bits,
    Nats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BitsArg {
    Floored,
    Fractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PhaseArg {
    /// Closed-form phase solving the power-ratio equation.
    ClosedForm,
    /// Closed-form phase from the printed U/V expressions.
    Printed,
    /// Per-cluster search over P phases, fed back.
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CodebookArg {
    PerRealization,
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Constant,
    Linear,
    Higher,
    Chquant,
    Perfect,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    #[value(name = "B")]
    Bits,
    #[value(name = "M")]
    ClusterSize,
    #[value(name = "L")]
    Taps,
    #[value(name = "snr-db")]
    SnrDb,
    #[value(name = "Nt")]
    Antennas,
    #[value(name = "q")]
    Offset,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Bits => Axis::Bits,
            AxisArg::ClusterSize => Axis::ClusterSize,
            AxisArg::Taps => Axis::Taps,
            AxisArg::SnrDb => Axis::SnrDb,
            AxisArg::Antennas => Axis::Antennas,
            AxisArg::Offset => Axis::Offset,
        }
    }
}

fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

/// Formats with 9 significant digits; empty for `None`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&exp) {
        return format!("{x:.8e}");
    }
    format!("{x:.*}", (8 - exp).max(0) as usize)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

/// A parsed and validated invocation.
#[derive(Debug, Clone)]
pub struct Invocation {
    command: Plan,
    /// `key=value` pairs echoed in the metadata header.
    echo: Vec<(String, String)>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
enum Plan {
    Help(String),
    Correlation {
        params: ChannelParams,
        offsets: Vec<usize>,
        trials: usize,
        seed: u64,
    },
    ClusterOpt(AnalysisConfig),
    Simulate(SimConfig),
    Sweep {
        cfgs: Vec<SimConfig>,
        axis: Axis,
        values: Vec<f64>,
        mode: SweepMode,
    },
    Moments {
        params: ChannelParams,
        base: LogBase,
        bits: Vec<u32>,
    },
    SwitchPoint {
        cfg: AnalysisConfig,
        grid: Vec<f64>,
    },
}

struct Echo(Vec<(String, String)>);

impl Echo {
    fn put(&mut self, k: &str, v: impl ToString) {
        self.0.push((k.to_string(), v.to_string()));
    }

    fn channel(&mut self, c: &ChannelFlags) {
        self.put("N", c.subcarriers);
        self.put("Nt", c.antennas);
        self.put("L", c.taps);
        self.put("snr_db", c.snr_db);
        self.put("log_base", enum_name(&c.log_base));
    }

    fn run(&mut self, r: &RunFlags) {
        self.put("trials", r.trials);
        self.put("seed", r.seed);
    }

    fn scheme(&mut self, s: &SchemeFlags) {
        self.put("B", s.bits);
        self.put("M", &s.size);
        self.put("R", s.order);
        self.put("P", s.levels);
        self.put("phase_mode", enum_name(&s.phase_mode));
        self.put("codebook", enum_name(&s.codebook));
    }
}

fn channel_params(c: &ChannelFlags) -> Result<ChannelParams, CliError> {
    if !c.snr_db.is_finite() {
        return Err(usage("--snr-db must be finite"));
    }
    ChannelParams::with_snr_db(c.subcarriers, c.antennas, c.taps, c.snr_db).map_err(usage)
}

fn log_base(c: &ChannelFlags) -> LogBase {
    match c.log_base {
        BaseArg::Bits => LogBase::Bits,
        BaseArg::Nats => LogBase::Nats,
    }
}

fn check_run(r: &RunFlags) -> Result<(), CliError> {
    if r.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    if r.workers == Some(0) {
        return Err(usage("--workers must be positive"));
    }
    Ok(())
}

fn cluster_size(s: &str) -> Result<ClusterSize, CliError> {
    if s == "auto" {
        return Ok(ClusterSize::Auto);
    }
    s.parse::<usize>()
        .ok()
        .filter(|&m| m > 0)
        .map(ClusterSize::Fixed)
        .ok_or_else(|| {
            usage(format!(
                "--M must be a positive integer or `auto`, got `{s}`"
            ))
        })
}

fn scheme(kind: SchemeArg, s: &SchemeFlags) -> Result<Scheme, CliError> {
    let size = cluster_size(&s.size)?;
    let phases = PhaseCodebook::new(s.levels).map_err(usage)?;
    Ok(match kind {
        SchemeArg::Constant => Scheme::Constant { size },
        SchemeArg::Linear => {
            let phase = match s.phase_mode {
                PhaseArg::ClosedForm => PhaseMode::ClosedForm(PhaseFormula::RatioSolution),
                PhaseArg::Printed => PhaseMode::ClosedForm(PhaseFormula::Printed),
                PhaseArg::Search => PhaseMode::Search(phases),
            };
            Scheme::Linear { size, phase }
        }
        SchemeArg::Higher => Scheme::HigherOrder {
            size,
            order: s.order,
            phases,
        },
        SchemeArg::Chquant => Scheme::ChannelQuantization,
        SchemeArg::Perfect => Scheme::Perfect,
        SchemeArg::Random => Scheme::Random,
    })
}

fn sim_config(
    c: &ChannelFlags,
    r: &RunFlags,
    s: &SchemeFlags,
    kind: SchemeArg,
) -> Result<SimConfig, CliError> {
    let mut cfg = SimConfig::new(
        channel_params(c)?,
        s.bits,
        scheme(kind, s)?,
        r.trials,
        r.seed,
    );
    cfg.log_base = log_base(c);
    cfg.workers = r.workers;
    cfg.codebook = match s.codebook {
        CodebookArg::PerRealization => CodebookReuse::PerRealization,
        CodebookArg::Shared => CodebookReuse::Shared,
    };
    if let Scheme::HigherOrder { order, .. } = cfg.scheme {
        if order < 2 || order % 2 != 0 {
            return Err(usage(format!(
                "--R must be even and at least 2, got {order}"
            )));
        }
    }
    if let Some(ClusterSize::Fixed(m)) = cfg.scheme.cluster_size() {
        if m > cfg.params.subcarriers {
            return Err(usage(format!(
                "--M={m} exceeds --N={}",
                cfg.params.subcarriers
            )));
        }
    }
    Ok(cfg)
}

/// Parses and validates `args` (including the program name) without
/// running anything.
pub fn parse<I, T>(args: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                return Ok(Invocation {
                    command: Plan::Help(e.to_string()),
                    echo: Vec::new(),
                    output: None,
                });
            }
            _ => return Err(usage(e)),
        },
    };
    let mut echo = Echo(Vec::new());
    let (command, output) = match cli.command {
        Command::Correlation(a) => {
            echo.put("command", "correlation");
            echo.channel(&a.channel);
            echo.run(&a.run);
            check_run(&a.run)?;
            let params = channel_params(&a.channel)?;
            if let Some(&q) = a.offsets.iter().find(|&&q| q >= params.subcarriers) {
                return Err(usage(format!(
                    "--q={q} must be below --N={}",
                    params.subcarriers
                )));
            }
            echo.put(
                "q",
                a.offsets
                    .iter()
                    .map(|q| q.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            (
                Plan::Correlation {
                    params,
                    offsets: a.offsets,
                    trials: a.run.trials,
                    seed: a.run.seed,
                },
                a.out.output,
            )
        }
        Command::ClusterOpt(a) => {
            echo.put("command", "cluster-opt");
            echo.channel(&a.channel);
            echo.put("B", a.bits);
            echo.put("bits_mode", enum_name(&a.bits_mode));
            let mode = match a.bits_mode {
                BitsArg::Floored => BitsMode::Floored,
                BitsArg::Fractional => BitsMode::Fractional,
            };
            if !(a.bits >= 1.0) || !a.bits.is_finite() {
                return Err(usage(format!(
                    "--B must be a finite value of at least 1, got {}",
                    a.bits
                )));
            }
            let cfg = AnalysisConfig::new(channel_params(&a.channel)?, a.bits)
                .map_err(usage)?
                .with_log_base(log_base(&a.channel))
                .with_bits_mode(mode);
            (Plan::ClusterOpt(cfg), a.out.output)
        }
        Command::Simulate(a) => {
            echo.put("command", "simulate");
            echo.put("scheme", enum_name(&a.scheme));
            echo.channel(&a.channel);
            echo.run(&a.run);
            echo.scheme(&a.scheme_flags);
            check_run(&a.run)?;
            (
                Plan::Simulate(sim_config(&a.channel, &a.run, &a.scheme_flags, a.scheme)?),
                a.out.output,
            )
        }
        Command::Sweep(a) => {
            echo.put("command", "sweep");
            echo.put("axis", enum_name(&a.axis));
            echo.put(
                "values",
                a.values
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            echo.put(
                "schemes",
                a.schemes
                    .iter()
                    .map(enum_name)
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            echo.put("analytic_only", a.analytic_only);
            echo.channel(&a.channel);
            echo.run(&a.run);
            echo.scheme(&a.scheme_flags);
            check_run(&a.run)?;
            let axis = Axis::from(a.axis);
            let schemes = if axis == Axis::Offset {
                &a.schemes[..1]
            } else {
                &a.schemes[..]
            };
            let cfgs = schemes
                .iter()
                .map(|&k| sim_config(&a.channel, &a.run, &a.scheme_flags, k))
                .collect::<Result<Vec<_>, _>>()?;
            for cfg in &cfgs {
                for &v in &a.values {
                    cfg.with_axis_value(axis, v)
                        .map_err(|e| usage(format!("--values {}: {e}", v)))?;
                }
            }
            let mode = if a.analytic_only {
                SweepMode::AnalyticOnly
            } else {
                SweepMode::Full
            };
            (
                Plan::Sweep {
                    cfgs,
                    axis,
                    values: a.values,
                    mode,
                },
                a.out.output,
            )
        }
        Command::Moments(a) => {
            echo.put("command", "moments");
            echo.channel(&a.channel);
            echo.put(
                "br",
                a.bits_per_real
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            let params = channel_params(&a.channel)?;
            if a.bits_per_real.is_empty() {
                return Err(usage("--br needs at least one value"));
            }
            for &b in &a.bits_per_real {
                UniformQuantizer::new(b, params.taps).map_err(usage)?;
            }
            (
                Plan::Moments {
                    params,
                    base: log_base(&a.channel),
                    bits: a.bits_per_real,
                },
                a.out.output,
            )
        }
        Command::SwitchPoint(a) => {
            echo.put("command", "switch-point");
            echo.channel(&a.channel);
            echo.put(
                "grid",
                a.grid
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            if a.grid.is_empty() {
                return Err(usage("--grid needs at least one value"));
            }
            if let Some(b) = a.grid.iter().find(|b| !(**b >= 1.0) || !b.is_finite()) {
                return Err(usage(format!(
                    "--grid values must be finite and at least 1, got {b}"
                )));
            }
            let cfg = AnalysisConfig::new(channel_params(&a.channel)?, a.grid[0])
                .map_err(usage)?
                .with_log_base(log_base(&a.channel));
            (Plan::SwitchPoint { cfg, grid: a.grid }, a.out.output)
        }
    };
    Ok(Invocation {
        command,
        echo: echo.0,
        output,
    })
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(echo: &[(String, String)], summary: &[(String, String)]) -> Self {
        let mut text = format!("# tool=bfinterp {VERSION}\n");
        for (k, v) in echo.iter().chain(summary) {
            let _ = writeln!(text, "# {k}={v}");
        }
        Csv { text }
    }

    fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let line: Vec<&str> = fields.iter().map(|f| f.as_ref()).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }
}

const REPORT_COLUMNS: [&str; 18] = [
    "scheme",
    "M",
    "B",
    "feedback_bits",
    "trials",
    "sum_rate",
    "sum_rate_stderr",
    "rate_per_subcarrier",
    "avg_power",
    "avg_power_stderr",
    "analytic_rate",
    "analytic_power",
    "high_rate_approx",
    "exact_moments_rate",
    "clamp_events",
    "degenerate_phases",
    "zero_norm_fallbacks",
    "zero_channel_substitutions",
];

fn report_fields(
    cfg: &SimConfig,
    name: &str,
    size: Option<usize>,
    report: Option<&RateReport>,
    analytic: &mc::AnalyticColumns,
) -> Vec<String> {
    let n = cfg.params.subcarriers as f64;
    let mc = |f: &dyn Fn(&RateReport) -> String| report.map(f).unwrap_or_default();
    vec![
        name.to_string(),
        size.map(|m| m.to_string()).unwrap_or_default(),
        cfg.total_bits.to_string(),
        mc(&|r| r.feedback_bits.to_string()),
        mc(&|r| r.trials.to_string()),
        mc(&|r| fmt_sig(r.sum_rate.mean)),
        mc(&|r| fmt_sig(r.sum_rate.std_err)),
        mc(&|r| fmt_sig(r.sum_rate.mean / n)),
        mc(&|r| fmt_sig(r.avg_power.mean)),
        mc(&|r| fmt_sig(r.avg_power.std_err)),
        fmt_opt(analytic.cluster_rate),
        fmt_opt(analytic.cluster_power),
        fmt_opt(analytic.high_rate),
        fmt_opt(analytic.exact_moments),
        mc(&|r| r.diagnostics.clamp_events.to_string()),
        mc(&|r| r.diagnostics.degenerate_phases.to_string()),
        mc(&|r| r.diagnostics.zero_norm_fallbacks.to_string()),
        mc(&|r| r.diagnostics.zero_channel_substitutions.to_string()),
    ]
}

/// Runs a validated invocation and returns the CSV document.
pub fn execute(inv: &Invocation) -> Result<String, CliError> {
    match &inv.command {
        Plan::Help(text) => Ok(text.clone()),
        Plan::Correlation {
            params,
            offsets,
            trials,
            seed,
        } => {
            let mut csv = Csv::new(&inv.echo, &[]);
            csv.row(&["q", "psi_analytic", "mc_mean", "mc_stderr"]);
            for &q in offsets {
                let mut rng = substream(*seed, q as u64, Domain::Direction);
                let e = empirical_correlation(&mut rng, params, q, *trials).map_err(runtime)?;
                let p = psi(q as f64, params.antennas, params.taps, params.subcarriers);
                csv.row(&[
                    q.to_string(),
                    fmt_sig(p),
                    fmt_sig(e.mean),
                    fmt_sig(e.std_err),
                ]);
            }
            Ok(csv.text)
        }
        Plan::ClusterOpt(cfg) => {
            let opt = optimize_cluster_size(cfg).map_err(runtime)?;
            let summary = [
                ("best_M".to_string(), opt.best_size.to_string()),
                ("best_rate".to_string(), fmt_sig(opt.best_rate)),
            ];
            let mut csv = Csv::new(&inv.echo, &summary);
            csv.row(&["M", "predicted_rate"]);
            for (m, r) in &opt.table {
                csv.row(&[m.to_string(), fmt_sig(*r)]);
            }
            Ok(csv.text)
        }
        Plan::Simulate(cfg) => {
            let size = cfg.resolve_cluster_size().map_err(runtime)?;
            let analytic = mc::analytic_columns(cfg, size).map_err(runtime)?;
            let report = mc::run_experiment(cfg).map_err(runtime)?;
            let mut csv = Csv::new(&inv.echo, &[]);
            csv.row(&REPORT_COLUMNS);
            csv.row(&report_fields(
                cfg,
                cfg.scheme.name(),
                size,
                Some(&report),
                &analytic,
            ));
            Ok(csv.text)
        }
        Plan::Sweep {
            cfgs,
            axis,
            values,
            mode,
        } => {
            let mut csv = Csv::new(&inv.echo, &[]);
            if *axis == Axis::Offset {
                csv.row(&["q", "psi_analytic", "mc_mean", "mc_stderr"]);
                for row in mc::sweep(&cfgs[0], *axis, values, *mode).map_err(runtime)? {
                    let c = row.correlation.as_ref();
                    csv.row(&[
                        row.value.to_string(),
                        fmt_opt(row.analytic.psi),
                        fmt_opt(c.map(|e| e.mean)),
                        fmt_opt(c.map(|e| e.std_err)),
                    ]);
                }
                return Ok(csv.text);
            }
            let lead = *axis != Axis::Bits;
            let mut header = if lead { vec![axis.name()] } else { Vec::new() };
            header.extend(REPORT_COLUMNS);
            csv.row(&header);
            let mut per_scheme = Vec::with_capacity(cfgs.len());
            for cfg in cfgs {
                per_scheme.push(mc::sweep(cfg, *axis, values, *mode).map_err(runtime)?);
            }
            for i in 0..values.len() {
                for (cfg, rows) in cfgs.iter().zip(&per_scheme) {
                    let row = &rows[i];
                    let mut fields = if lead {
                        vec![row.value.to_string()]
                    } else {
                        Vec::new()
                    };
                    fields.extend(report_fields(
                        &row.config,
                        cfg.scheme.name(),
                        row.cluster_size,
                        row.report.as_ref(),
                        &row.analytic,
                    ));
                    csv.row(&fields);
                }
            }
            Ok(csv.text)
        }
        Plan::Moments { params, base, bits } => {
            let mut csv = Csv::new(&inv.echo, &[]);
            csv.row(&[
                "b_r",
                "B",
                "step",
                "mse",
                "mse_over_granular",
                "corr",
                "fourth",
                "output_power",
                "exact_moments_rate",
                "high_rate_approx",
            ]);
            for &b in bits {
                let q = UniformQuantizer::new(b, params.taps).map_err(runtime)?;
                let m = quantizer_moments(&q, params.taps);
                let total = q.feedback_bits(params.antennas, params.taps);
                csv.row(&[
                    b.to_string(),
                    total.to_string(),
                    fmt_sig(q.step()),
                    fmt_sig(m.mse),
                    fmt_sig(m.mse / (q.step() * q.step() / 12.0)),
                    fmt_sig(m.corr),
                    fmt_sig(m.fourth),
                    fmt_sig(m.output_power),
                    fmt_opt(exact_rate_estimate(&m, params, *base).ok()),
                    fmt_opt(high_rate_approximation(total as f64, params, *base).ok()),
                ]);
            }
            Ok(csv.text)
        }
        Plan::SwitchPoint { cfg, grid } => {
            let rows = switch_point(cfg, grid).map_err(runtime)?;
            let mut csv = Csv::new(&inv.echo, &[]);
            csv.row(&[
                "B",
                "best_M",
                "interpolation_rate",
                "chquant_rate",
                "recommendation",
            ]);
            for r in rows {
                csv.row(&[
                    r.total_bits.to_string(),
                    r.best_cluster_size.to_string(),
                    fmt_sig(r.interpolation_rate),
                    fmt_opt(r.channel_quantization_rate),
                    r.recommendation.name().to_string(),
                ]);
            }
            Ok(csv.text)
        }
    }
}

/// Writes `text` to the invocation's `--output` path, or to stdout without one.
pub fn deliver(inv: &Invocation, text: &str) -> Result<(), CliError> {
    match &inv.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| runtime(format!("cannot write to stdout: {e}")))
        }
    }
}

/// Parses and runs, writing the CSV to `--output` when given. Returns the
/// CSV document either way.
pub fn run<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let inv = parse(args)?;
    let text = execute(&inv)?;
    if inv.output.is_some() {
        deliver(&inv, &text)?;
    }
    Ok(text)
}
