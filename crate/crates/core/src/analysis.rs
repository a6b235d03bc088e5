//! Closed-form rate and power predictions for constant interpolation, and the
//! cluster-size search built on them.

use crate::channel::{psi, ChannelParams};
use crate::error::{Error, Result};
use crate::rvq::rvq_quality;
use crate::LogBase;

/// How the per-cluster bit budget `B/K` enters the formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitsMode {
    /// `⌊B/K⌋`, the codebook size a receiver can actually use.
    #[default]
    Floored,
    /// Real-valued `B/K`.
    Fractional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub params: ChannelParams,
    /// Total feedback bits `B`.
    pub total_bits: f64,
    pub log_base: LogBase,
    pub bits_mode: BitsMode,
}

impl AnalysisConfig {
    pub fn new(params: ChannelParams, total_bits: f64) -> Result<Self> {
        if !(total_bits.is_finite() && total_bits >= 0.0) {
            return Err(Error::invalid(format!(
                "feedback budget B={total_bits} must be non-negative"
            )));
        }
        Ok(AnalysisConfig {
            params,
            total_bits,
            log_base: LogBase::Bits,
            bits_mode: BitsMode::Floored,
        })
    }

    pub fn with_log_base(mut self, base: LogBase) -> Self {
        self.log_base = base;
        self
    }

    pub fn with_bits_mode(mut self, mode: BitsMode) -> Self {
        self.bits_mode = mode;
        self
    }

    /// Bits per cluster for cluster size `size`.
    pub fn bits_per_cluster(&self, size: usize) -> f64 {
        let k = (self.params.subcarriers / size) as f64;
        let raw = self.total_bits / k;
        match self.bits_mode {
            BitsMode::Floored => raw.floor(),
            BitsMode::Fractional => raw,
        }
    }

    fn check_size(&self, size: usize) -> Result<()> {
        if size == 0 || size > self.params.subcarriers {
            return Err(Error::invalid(format!(
                "cluster size M={size} must lie in 1..={}",
                self.params.subcarriers
            )));
        }
        Ok(())
    }
}

/// `E|h̄_{n+q}† v̂_n|²` for a `bits`-bit RVQ beamformer anchored `offset`
/// subcarriers away: `ψ·Q + (1-ψ)(1-Q)/(Nt-1)` with `Q` the RVQ quality.
pub fn gamma_fn(offset: f64, bits: f64, antennas: usize, taps: usize, subcarriers: usize) -> f64 {
    let p = psi(offset, antennas, taps, subcarriers);
    let q = rvq_quality(bits, antennas);
    if antennas <= 1 {
        return q;
    }
    p * q + (1.0 - p) * (1.0 - q) / (antennas as f64 - 1.0)
}

/// `log(1 + ρ Nt γ(q, b))`.
pub fn subcarrier_rate_estimate(offset: f64, bits: f64, cfg: &AnalysisConfig) -> f64 {
    let p = &cfg.params;
    let g = gamma_fn(offset, bits, p.antennas, p.taps, p.subcarriers);
    cfg.log_base.log1p(p.rho * p.antennas as f64 * g)
}

/// Offsets from the representative covered by one cluster of `size`, each
/// with its multiplicity: `0` once, `1..` twice, and for even `M` the far
/// edge `M/2` once.
fn cluster_offsets(size: usize) -> impl Iterator<Item = (f64, f64)> {
    let half = size / 2;
    let paired = if size % 2 == 1 {
        half
    } else {
        half.saturating_sub(1)
    };
    let edge = size.is_multiple_of(2).then_some((half as f64, 1.0));
    std::iter::once((0.0, 1.0))
        .chain((1..=paired).map(|q| (q as f64, 2.0)))
        .chain(edge)
}

/// Approximate sum rate of one cluster of `size` with `bits` per cluster.
pub fn cluster_rate_estimate(size: usize, bits: f64, cfg: &AnalysisConfig) -> f64 {
    cluster_offsets(size)
        .map(|(q, mult)| mult * subcarrier_rate_estimate(q, bits, cfg))
        .sum()
}

/// Offsets `r + M/2` of the leftover subcarriers.
fn remainder_offsets(size: usize, subcarriers: usize) -> impl Iterator<Item = f64> {
    let k = subcarriers / size;
    (1..=subcarriers - k * size).map(move |r| r as f64 + size as f64 / 2.0)
}

/// Approximate sum rate over all `N` subcarriers for cluster size `size`.
pub fn total_rate_estimate(size: usize, cfg: &AnalysisConfig) -> Result<f64> {
    cfg.check_size(size)?;
    let n = cfg.params.subcarriers;
    let k = (n / size) as f64;
    let bits = cfg.bits_per_cluster(size);
    let clusters = k * cluster_rate_estimate(size, bits, cfg);
    let rest: f64 = remainder_offsets(size, n)
        .map(|q| subcarrier_rate_estimate(q, bits, cfg))
        .sum();
    Ok(clusters + rest)
}

/// Approximate average received power per subcarrier for cluster size `size`.
pub fn avg_power_estimate(size: usize, cfg: &AnalysisConfig) -> Result<f64> {
    cfg.check_size(size)?;
    let p = &cfg.params;
    let n = p.subcarriers;
    let k = (n / size) as f64;
    let bits = cfg.bits_per_cluster(size);
    let g = |q: f64| gamma_fn(q, bits, p.antennas, p.taps, n);
    let clusters: f64 = cluster_offsets(size)
        .map(|(q, mult)| mult * g(q))
        .sum::<f64>()
        * k;
    let rest: f64 = remainder_offsets(size, n).map(g).sum();
    Ok(p.rho * p.antennas as f64 / n as f64 * (clusters + rest))
}

/// Cluster-size search result.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOptimum {
    pub best_size: usize,
    pub best_rate: f64,
    /// `(M, predicted total rate)` for every `M` in `1..=N`.
    pub table: Vec<(usize, f64)>,
}

/// Exhaustive search for the cluster size maximizing the predicted sum rate;
/// ties go to the smallest `M`.
pub fn optimize_cluster_size(cfg: &AnalysisConfig) -> Result<ClusterOptimum> {
    optimize_over(cfg, 1..=cfg.params.subcarriers)
}

/// Same search restricted to `sizes`.
pub fn optimize_over(
    cfg: &AnalysisConfig,
    sizes: impl IntoIterator<Item = usize>,
) -> Result<ClusterOptimum> {
    if cfg.total_bits < 1.0 {
        return Err(Error::invalid(
            "cluster-size search needs at least one feedback bit",
        ));
    }
    let table = sizes
        .into_iter()
        .map(|m| total_rate_estimate(m, cfg).map(|r| (m, r)))
        .collect::<Result<Vec<_>>>()?;
    let &(best_size, best_rate) = table
        .iter()
        .fold(None, |best: Option<&(usize, f64)>, e| match best {
            Some(b) if b.1 >= e.1 => Some(b),
            _ => Some(e),
        })
        .ok_or_else(|| Error::invalid("empty cluster-size grid"))?;
    Ok(ClusterOptimum {
        best_size,
        best_rate,
        table,
    })
}
