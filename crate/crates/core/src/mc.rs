//! Deterministic Monte Carlo harness.
//!
//! Trial `i` draws its channel, codebook and random beamformers from
//! substreams keyed by `(seed, i)`, and per-trial results are reduced in trial
//! order. Reports are therefore bit-identical for any worker count.

use rayon::prelude::*;

use crate::analysis::{
    avg_power_estimate, optimize_cluster_size, total_rate_estimate, AnalysisConfig,
};
use crate::channel::{
    empirical_correlation, frequency_response, psi, sample_taps, ChannelParams, FrequencyResponse,
};
use crate::chquant::{
    exact_rate_estimate, high_rate_approximation, plan_from_quantized, quantizer_moments,
    UniformQuantizer,
};
use crate::error::{Error, Result};
use crate::interp::{
    baseline_plan, constant_plan, constant_plan_with_codebook, higher_order_plan,
    higher_order_plan_with_codebook, linear_plan, linear_plan_with_codebook, Baseline,
    BeamformerPlan, ClusterPlan, Diagnostics, PhaseCodebook, PhaseMode, SchemeTag,
};
use crate::linalg;
use crate::rng::{substream, Domain};
use crate::rvq::{self, Codebook, DEFAULT_MAX_BITS};
use crate::stats::Estimate;
use crate::LogBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterSize {
    Fixed(usize),
    /// Resolved by the constant-interpolation cluster-size search.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Constant {
        size: ClusterSize,
    },
    Linear {
        size: ClusterSize,
        phase: PhaseMode,
    },
    HigherOrder {
        size: ClusterSize,
        order: usize,
        phases: PhaseCodebook,
    },
    ChannelQuantization,
    Perfect,
    Random,
}

impl Scheme {
    pub fn cluster_size(&self) -> Option<ClusterSize> {
        match *self {
            Scheme::Constant { size }
            | Scheme::Linear { size, .. }
            | Scheme::HigherOrder { size, .. } => Some(size),
            _ => None,
        }
    }

    pub fn with_cluster_size(self, size: ClusterSize) -> Self {
        match self {
            Scheme::Constant { .. } => Scheme::Constant { size },
            Scheme::Linear { phase, .. } => Scheme::Linear { size, phase },
            Scheme::HigherOrder { order, phases, .. } => Scheme::HigherOrder {
                size,
                order,
                phases,
            },
            other => other,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Constant { .. } => "constant",
            Scheme::Linear {
                phase: PhaseMode::Search(_),
                ..
            } => "linear-search",
            Scheme::Linear {
                phase: PhaseMode::ClosedForm(_),
                ..
            } => "linear-closed-form",
            Scheme::HigherOrder { .. } => "higher-order",
            Scheme::ChannelQuantization => "chquant",
            Scheme::Perfect => "perfect",
            Scheme::Random => "random",
        }
    }
}

/// Whether RVQ codebooks are redrawn for every channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CodebookReuse {
    /// A fresh codebook per realization, shared by its clusters.
    #[default]
    PerRealization,
    /// One codebook for the whole experiment.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: ChannelParams,
    pub total_bits: u64,
    pub scheme: Scheme,
    pub trials: usize,
    pub seed: u64,
    pub log_base: LogBase,
    pub codebook: CodebookReuse,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Largest RVQ codebook (bits) a trial may search.
    pub max_codebook_bits: u32,
}

impl SimConfig {
    pub fn new(
        params: ChannelParams,
        total_bits: u64,
        scheme: Scheme,
        trials: usize,
        seed: u64,
    ) -> Self {
        SimConfig {
            params,
            total_bits,
            scheme,
            trials,
            seed,
            log_base: LogBase::Bits,
            codebook: CodebookReuse::PerRealization,
            workers: None,
            max_codebook_bits: DEFAULT_MAX_BITS,
        }
    }

    pub fn analysis(&self) -> Result<AnalysisConfig> {
        Ok(AnalysisConfig::new(self.params, self.total_bits as f64)?.with_log_base(self.log_base))
    }

    /// Cluster size after resolving `Auto`; `None` for unclustered schemes.
    pub fn resolve_cluster_size(&self) -> Result<Option<usize>> {
        match self.scheme.cluster_size() {
            None => Ok(None),
            Some(ClusterSize::Fixed(m)) => Ok(Some(m)),
            Some(ClusterSize::Auto) => {
                Ok(Some(optimize_cluster_size(&self.analysis()?)?.best_size))
            }
        }
    }

    /// False only for channel quantization with less than one bit per real
    /// coefficient, which sweeps report as an empty row.
    pub fn is_applicable(&self) -> bool {
        self.scheme != Scheme::ChannelQuantization
            || self.total_bits >= 2 * (self.params.antennas * self.params.taps) as u64
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if let Scheme::HigherOrder { order, .. } = self.scheme {
            if order < 2 || order % 2 != 0 {
                return Err(Error::invalid(format!(
                    "interpolation order R={order} must be even and at least 2"
                )));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("worker count must be positive"));
        }
        Ok(())
    }
}

/// Monte Carlo summary for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub scheme: SchemeTag,
    pub cluster_size: Option<usize>,
    /// Sum rate over all subcarriers per realization.
    pub sum_rate: Estimate,
    /// `(ρ/N) Σ_n |h_n† v_n|²` per realization.
    pub avg_power: Estimate,
    pub feedback_bits: u64,
    pub diagnostics: Diagnostics,
    pub trials: usize,
    pub seed: u64,
}

/// Sum rate `Σ_n log(1 + ρ|h_n† v_n|²)` and average received power
/// `(ρ/N) Σ_n |h_n† v_n|²` of one realization.
pub fn evaluate_plan(
    h: &FrequencyResponse,
    plan: &BeamformerPlan,
    rho: f64,
    base: LogBase,
) -> Result<(f64, f64)> {
    if plan.len() != h.subcarriers() || plan.antennas() != h.antennas() {
        return Err(Error::DimensionMismatch(format!(
            "plan of {} x {} for a {} x {} channel",
            plan.len(),
            plan.antennas(),
            h.subcarriers(),
            h.antennas()
        )));
    }
    let mut rate = 0.0;
    let mut power = 0.0;
    for n in 0..h.subcarriers() {
        let g = linalg::gain(h.row(n), plan.vector(n));
        rate += base.log1p(rho * g);
        power += g;
    }
    Ok((rate, rho * power / h.subcarriers() as f64))
}

struct TrialOutcome {
    rate: f64,
    power: f64,
    feedback_bits: u64,
    diagnostics: Diagnostics,
}

/// Everything a trial needs that does not depend on the trial index.
struct Prepared {
    cfg: SimConfig,
    cluster_size: Option<usize>,
    quantizer: Option<UniformQuantizer>,
    shared: Option<Codebook>,
}

fn prepare(cfg: &SimConfig) -> Result<Prepared> {
    cfg.validate()?;
    let cluster_size = cfg.resolve_cluster_size()?;
    let mut quantizer = None;
    let mut shared = None;
    if let Some(m) = cluster_size {
        let layout = ClusterPlan::new(cfg.params.subcarriers, m, cfg.total_bits)?;
        if layout.bits_per_cluster > cfg.max_codebook_bits {
            return Err(Error::CodebookBudget {
                bits: layout.bits_per_cluster,
                cap: cfg.max_codebook_bits,
            });
        }
        if let Scheme::HigherOrder { order, .. } = cfg.scheme {
            if order + 1 > layout.clusters {
                return Err(Error::invalid(format!(
                    "order R={order} needs {} anchors but M={m} leaves K={} clusters",
                    order + 1,
                    layout.clusters
                )));
            }
        }
        if cfg.codebook == CodebookReuse::Shared {
            let mut rng = substream(cfg.seed, 0, Domain::SharedCodebook);
            shared = Some(rvq::generate_codebook_capped(
                &mut rng,
                layout.bits_per_cluster,
                cfg.params.antennas,
                cfg.max_codebook_bits,
            )?);
        }
    }
    if cfg.scheme == Scheme::ChannelQuantization {
        quantizer = Some(UniformQuantizer::from_budget(
            cfg.total_bits,
            cfg.params.antennas,
            cfg.params.taps,
        )?);
    }
    Ok(Prepared {
        cfg: *cfg,
        cluster_size,
        quantizer,
        shared,
    })
}

fn run_trial(p: &Prepared, trial: u64) -> Result<TrialOutcome> {
    let cfg = &p.cfg;
    let params = &cfg.params;
    let taps = sample_taps(&mut substream(cfg.seed, trial, Domain::Channel), params);
    let h = frequency_response(&taps, params.subcarriers)?;
    let mut cb_rng = substream(cfg.seed, trial, Domain::Codebook);
    let plan = match (cfg.scheme, p.cluster_size, &p.shared) {
        (Scheme::Constant { .. }, Some(m), Some(cb)) => constant_plan_with_codebook(&h, m, cb)?,
        (Scheme::Constant { .. }, Some(m), None) => {
            constant_plan(&h, m, cfg.total_bits, &mut cb_rng)?
        }
        (Scheme::Linear { phase, .. }, Some(m), Some(cb)) => {
            linear_plan_with_codebook(&h, m, cb, phase)?
        }
        (Scheme::Linear { phase, .. }, Some(m), None) => {
            linear_plan(&h, m, cfg.total_bits, phase, &mut cb_rng)?
        }
        (Scheme::HigherOrder { order, phases, .. }, Some(m), Some(cb)) => {
            higher_order_plan_with_codebook(&h, m, cb, order, &phases)?
        }
        (Scheme::HigherOrder { order, phases, .. }, Some(m), None) => {
            higher_order_plan(&h, m, cfg.total_bits, order, &phases, &mut cb_rng)?
        }
        (Scheme::ChannelQuantization, _, _) => {
            let q = p
                .quantizer
                .as_ref()
                .expect("quantizer prepared for chquant");
            plan_from_quantized(&taps, q, params.subcarriers)?
        }
        (Scheme::Perfect, _, _) => baseline_plan(Baseline::Perfect, &h, &mut cb_rng),
        (Scheme::Random, _, _) => baseline_plan(
            Baseline::Random,
            &h,
            &mut substream(cfg.seed, trial, Domain::RandomPlan),
        ),
        _ => unreachable!("clustered schemes always resolve a cluster size"),
    };
    let (rate, power) = evaluate_plan(&h, &plan, params.rho, cfg.log_base)?;
    Ok(TrialOutcome {
        rate,
        power,
        feedback_bits: plan.feedback_bits,
        diagnostics: plan.diagnostics,
    })
}

fn run_trials(p: &Prepared) -> Result<Vec<TrialOutcome>> {
    let trials = p.cfg.trials as u64;
    let work = || {
        (0..trials)
            .into_par_iter()
            .map(|t| run_trial(p, t))
            .collect::<Result<Vec<_>>>()
    };
    match p.cfg.workers {
        None => work(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start {w} workers: {e}")))?
            .install(work),
    }
}

/// Runs `cfg.trials` realizations and summarizes them.
pub fn run_experiment(cfg: &SimConfig) -> Result<RateReport> {
    let prepared = prepare(cfg)?;
    let outcomes = run_trials(&prepared)?;
    let rates: Vec<f64> = outcomes.iter().map(|o| o.rate).collect();
    let powers: Vec<f64> = outcomes.iter().map(|o| o.power).collect();
    let mut diagnostics = Diagnostics::default();
    for o in &outcomes {
        diagnostics += o.diagnostics;
    }
    let scheme = match cfg.scheme {
        Scheme::Constant { .. } => SchemeTag::Constant,
        Scheme::Linear {
            phase: PhaseMode::Search(_),
            ..
        } => SchemeTag::LinearSearch,
        Scheme::Linear {
            phase: PhaseMode::ClosedForm(_),
            ..
        } => SchemeTag::LinearClosedForm,
        Scheme::HigherOrder { .. } => SchemeTag::HigherOrder,
        Scheme::ChannelQuantization => SchemeTag::ChannelQuantization,
        Scheme::Perfect => SchemeTag::Perfect,
        Scheme::Random => SchemeTag::Random,
    };
    Ok(RateReport {
        scheme,
        cluster_size: prepared.cluster_size,
        sum_rate: Estimate::from_samples(&rates),
        avg_power: Estimate::from_samples(&powers),
        feedback_bits: outcomes.first().map_or(0, |o| o.feedback_bits),
        diagnostics,
        trials: cfg.trials,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Total feedback bits `B`.
    Bits,
    /// Cluster size `M`.
    ClusterSize,
    /// Channel taps `L`.
    Taps,
    /// SNR in dB.
    SnrDb,
    /// Transmit antennas `Nt`.
    Antennas,
    /// Subcarrier offset `q` for the correlation table.
    Offset,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Bits => "B",
            Axis::ClusterSize => "M",
            Axis::Taps => "L",
            Axis::SnrDb => "snr_db",
            Axis::Antennas => "Nt",
            Axis::Offset => "q",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Monte Carlo plus analytic columns.
    Full,
    /// Analytic columns only.
    AnalyticOnly,
}

/// Closed-form companions of a sweep row; `None` where not applicable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalyticColumns {
    /// Constant-interpolation sum-rate prediction.
    pub cluster_rate: Option<f64>,
    /// Constant-interpolation average-power prediction.
    pub cluster_power: Option<f64>,
    /// High-rate channel-quantization approximation.
    pub high_rate: Option<f64>,
    /// Channel-quantization estimate from numerically integrated moments.
    pub exact_moments: Option<f64>,
    /// Closed-form subcarrier correlation.
    pub psi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub config: SimConfig,
    pub cluster_size: Option<usize>,
    pub report: Option<RateReport>,
    pub correlation: Option<Estimate>,
    pub analytic: AnalyticColumns,
}

impl SimConfig {
    /// This configuration with one sweep axis set to `value`.
    pub fn with_axis_value(&self, axis: Axis, value: f64) -> Result<SimConfig> {
        let cfg = self;
        let mut c = *cfg;
        let p = cfg.params;
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::invalid(format!(
                    "{} must be a non-negative integer, got {value}",
                    axis.name()
                )))
            }
        };
        match axis {
            Axis::Bits => c.total_bits = count()? as u64,
            Axis::ClusterSize => {
                c.scheme = cfg.scheme.with_cluster_size(ClusterSize::Fixed(count()?))
            }
            Axis::Taps => {
                c.params = ChannelParams::new(p.subcarriers, p.antennas, count()?, p.rho)?
            }
            Axis::SnrDb => {
                c.params = ChannelParams::with_snr_db(p.subcarriers, p.antennas, p.taps, value)?
            }
            Axis::Antennas => {
                c.params = ChannelParams::new(p.subcarriers, count()?, p.taps, p.rho)?
            }
            Axis::Offset => {
                let q = count()?;
                if q >= p.subcarriers {
                    return Err(Error::invalid(format!(
                        "offset q={q} must be below N={}",
                        p.subcarriers
                    )));
                }
            }
        }
        Ok(c)
    }
}

/// Closed-form predictions applicable to `cfg`'s scheme.
pub fn analytic_columns(cfg: &SimConfig, cluster_size: Option<usize>) -> Result<AnalyticColumns> {
    let mut a = AnalyticColumns::default();
    let p = &cfg.params;
    match cfg.scheme {
        Scheme::ChannelQuantization => {
            if let Ok(q) = UniformQuantizer::from_budget(cfg.total_bits, p.antennas, p.taps) {
                a.exact_moments =
                    exact_rate_estimate(&quantizer_moments(&q, p.taps), p, cfg.log_base).ok();
            }
            a.high_rate = high_rate_approximation(cfg.total_bits as f64, p, cfg.log_base).ok();
        }
        _ => {
            if let (Some(m), true) = (cluster_size, p.antennas >= 2) {
                let an = cfg.analysis()?;
                a.cluster_rate = Some(total_rate_estimate(m, &an)?);
                a.cluster_power = Some(avg_power_estimate(m, &an)?);
            }
        }
    }
    Ok(a)
}

fn sweep_row(cfg: &SimConfig, axis: Axis, value: f64, mode: SweepMode) -> Result<SweepRow> {
    let c = cfg.with_axis_value(axis, value)?;
    if axis == Axis::Offset {
        let q = value as usize;
        let p = &c.params;
        let corr = match mode {
            SweepMode::Full => {
                let mut rng = substream(c.seed, q as u64, Domain::Direction);
                Some(empirical_correlation(&mut rng, p, q, c.trials)?)
            }
            SweepMode::AnalyticOnly => None,
        };
        let analytic = AnalyticColumns {
            psi: Some(psi(q as f64, p.antennas, p.taps, p.subcarriers)),
            ..Default::default()
        };
        return Ok(SweepRow {
            value,
            config: c,
            cluster_size: None,
            report: None,
            correlation: corr,
            analytic,
        });
    }
    let cluster_size = c.resolve_cluster_size()?;
    let analytic = analytic_columns(&c, cluster_size)?;
    let report = match mode {
        SweepMode::Full if c.is_applicable() => Some(run_experiment(&c)?),
        _ => None,
    };
    Ok(SweepRow {
        value,
        config: c,
        cluster_size,
        report,
        correlation: None,
        analytic,
    })
}

/// One row per axis value with Monte Carlo results (unless analytic-only)
/// and the applicable closed-form predictions. A failing row aborts the sweep;
/// channel quantization below one bit per real coefficient is not a failure
/// and leaves the row's Monte Carlo columns empty.
pub fn sweep(
    cfg: &SimConfig,
    axis: Axis,
    values: &[f64],
    mode: SweepMode,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one axis value"));
    }
    values
        .iter()
        .map(|&v| {
            sweep_row(cfg, axis, v, mode).map_err(|e| Error::SweepRow {
                axis: axis.name().to_string(),
                value: v.to_string(),
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::PhaseFormula;

    fn params() -> ChannelParams {
        ChannelParams::with_snr_db(32, 3, 4, 10.0).unwrap()
    }

    #[test]
    fn single_trial_equals_direct_evaluation() {
        let cfg = SimConfig::new(
            params(),
            16,
            Scheme::Constant {
                size: ClusterSize::Fixed(8),
            },
            1,
            3,
        );
        let report = run_experiment(&cfg).unwrap();
        let taps = sample_taps(&mut substream(3, 0, Domain::Channel), &cfg.params);
        let h = frequency_response(&taps, 32).unwrap();
        let plan = constant_plan(&h, 8, 16, &mut substream(3, 0, Domain::Codebook)).unwrap();
        let (r, p) = evaluate_plan(&h, &plan, cfg.params.rho, LogBase::Bits).unwrap();
        assert_eq!(report.sum_rate.mean, r);
        assert_eq!(report.avg_power.mean, p);
        assert_eq!(report.sum_rate.std_err, 0.0);
        assert_eq!(report.feedback_bits, 16);
    }

    #[test]
    fn perfect_plan_rate() {
        let p = params();
        let taps = sample_taps(&mut substream(1, 0, Domain::Channel), &p);
        let h = frequency_response(&taps, 32).unwrap();
        let plan = baseline_plan(
            Baseline::Perfect,
            &h,
            &mut substream(1, 0, Domain::Codebook),
        );
        let (r, _) = evaluate_plan(&h, &plan, p.rho, LogBase::Bits).unwrap();
        let expect: f64 = (0..32)
            .map(|n| (1.0 + p.rho * linalg::norm_sqr(h.row(n))).log2())
            .sum();
        assert!((r - expect).abs() < 1e-9);
        assert_eq!(
            evaluate_plan(&h, &plan, 0.0, LogBase::Bits).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn random_plan_power() {
        let p = ChannelParams::new(32, 4, 4, 10.0).unwrap();
        let cfg = SimConfig::new(p, 0, Scheme::Random, 2000, 9);
        let r = run_experiment(&cfg).unwrap();
        assert!(r.avg_power.within(10.0, 3.0), "{:?}", r.avg_power);
    }

    #[test]
    fn reports_are_deterministic_across_workers() {
        let scheme = Scheme::Linear {
            size: ClusterSize::Auto,
            phase: PhaseMode::ClosedForm(PhaseFormula::RatioSolution),
        };
        let mut cfg = SimConfig::new(params(), 24, scheme, 40, 17);
        cfg.workers = Some(1);
        let a = run_experiment(&cfg).unwrap();
        cfg.workers = Some(4);
        let b = run_experiment(&cfg).unwrap();
        let c = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn auto_size_matches_search() {
        let cfg = SimConfig::new(
            params(),
            24,
            Scheme::Constant {
                size: ClusterSize::Auto,
            },
            2,
            1,
        );
        let best = optimize_cluster_size(&cfg.analysis().unwrap())
            .unwrap()
            .best_size;
        assert_eq!(run_experiment(&cfg).unwrap().cluster_size, Some(best));
    }

    #[test]
    fn codebook_budget_error() {
        let mut cfg = SimConfig::new(
            params(),
            40,
            Scheme::Constant {
                size: ClusterSize::Fixed(32),
            },
            2,
            1,
        );
        cfg.max_codebook_bits = 20;
        assert_eq!(
            run_experiment(&cfg).unwrap_err(),
            Error::CodebookBudget { bits: 40, cap: 20 }
        );
    }

    #[test]
    fn shared_codebook_mode_runs() {
        let mut cfg = SimConfig::new(
            params(),
            16,
            Scheme::Constant {
                size: ClusterSize::Fixed(4),
            },
            20,
            2,
        );
        cfg.codebook = CodebookReuse::Shared;
        let a = run_experiment(&cfg).unwrap();
        cfg.codebook = CodebookReuse::PerRealization;
        let b = run_experiment(&cfg).unwrap();
        assert_ne!(a.sum_rate.mean, b.sum_rate.mean);
        assert_eq!(a.feedback_bits, b.feedback_bits);
    }

    #[test]
    fn higher_order_and_chquant_run() {
        let p = ChannelParams::with_snr_db(64, 2, 4, 10.0).unwrap();
        let ho = Scheme::HigherOrder {
            size: ClusterSize::Fixed(8),
            order: 2,
            phases: PhaseCodebook::new(4).unwrap(),
        };
        let r = run_experiment(&SimConfig::new(p, 32, ho, 4, 5)).unwrap();
        assert_eq!(r.feedback_bits, 32 + 8 * 2 * 2);
        let r = run_experiment(&SimConfig::new(p, 64, Scheme::ChannelQuantization, 4, 5)).unwrap();
        assert_eq!(r.feedback_bits, 64);
        assert!(run_experiment(&SimConfig::new(p, 8, Scheme::ChannelQuantization, 4, 5)).is_err());
    }

    #[test]
    fn sweep_over_cluster_size_tracks_search() {
        let cfg = SimConfig::new(
            ChannelParams::with_snr_db(64, 4, 4, 10.0).unwrap(),
            16,
            Scheme::Constant {
                size: ClusterSize::Auto,
            },
            1,
            0,
        );
        let values: Vec<f64> = (1..=64).map(|m| m as f64).collect();
        let rows = sweep(&cfg, Axis::ClusterSize, &values, SweepMode::AnalyticOnly).unwrap();
        let best = rows
            .iter()
            .fold((0.0, f64::NEG_INFINITY), |b, r| {
                let v = r.analytic.cluster_rate.unwrap();
                if v > b.1 {
                    (r.value, v)
                } else {
                    b
                }
            })
            .0;
        assert_eq!(best as usize, cfg.resolve_cluster_size().unwrap().unwrap());
        assert!(rows.iter().all(|r| r.report.is_none()));
    }

    #[test]
    fn sweep_failure_names_the_row() {
        let cfg = SimConfig::new(
            params(),
            16,
            Scheme::Constant {
                size: ClusterSize::Fixed(4),
            },
            1,
            0,
        );
        let err = sweep(&cfg, Axis::Taps, &[2.0, 64.0], SweepMode::AnalyticOnly).unwrap_err();
        assert!(
            matches!(err, Error::SweepRow { ref value, .. } if value == "64"),
            "{err}"
        );
        assert!(sweep(&cfg, Axis::Bits, &[], SweepMode::Full).is_err());
    }

    #[test]
    fn starved_channel_quantization_rows_are_empty() {
        let p = ChannelParams::with_snr_db(64, 2, 4, 10.0).unwrap();
        let cfg = SimConfig::new(p, 0, Scheme::ChannelQuantization, 2, 0);
        let rows = sweep(&cfg, Axis::Bits, &[8.0, 16.0], SweepMode::Full).unwrap();
        assert!(rows[0].report.is_none() && rows[0].analytic.exact_moments.is_none());
        assert_eq!(rows[1].report.as_ref().unwrap().feedback_bits, 16);
    }

    #[test]
    fn offset_sweep_has_correlation_columns() {
        let cfg = SimConfig::new(
            ChannelParams::new(64, 2, 1, 1.0).unwrap(),
            0,
            Scheme::Perfect,
            20,
            0,
        );
        let rows = sweep(&cfg, Axis::Offset, &[1.0, 5.0], SweepMode::Full).unwrap();
        for r in rows {
            assert_eq!(r.correlation.unwrap().mean, 1.0);
            assert_eq!(r.analytic.psi, Some(1.0));
        }
    }
}
