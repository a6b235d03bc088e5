//! Direct quantization of the channel impulse response.
//!
//! The real and imaginary part of every tap is quantized by the same midrise
//! uniform quantizer with `b_r = B / (2·Nt·L)` bits. The transmitter beamforms
//! along the frequency response of the reconstructed taps.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erfc;

use crate::analysis::{optimize_cluster_size, AnalysisConfig};
use crate::channel::{frequency_response, ChannelParams, ChannelTaps};
use crate::error::{Error, Result};
use crate::interp::{BeamformerPlan, SchemeTag};
use crate::linalg;
use crate::LogBase;
use num_complex::Complex64;

/// Largest supported bits per real coefficient.
pub const MAX_BITS_PER_REAL: u32 = 40;

/// Midrise uniform quantizer with `2^b_r` levels and step
/// `Δ = 2^{3/2 - b_r} / √L` (four standard deviations of a tap component
/// spread over the levels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformQuantizer {
    bits_per_real: u32,
    step: f64,
    half_levels: i64,
}

impl UniformQuantizer {
    pub fn new(bits_per_real: u32, taps: usize) -> Result<Self> {
        if bits_per_real == 0 || bits_per_real > MAX_BITS_PER_REAL {
            return Err(Error::invalid(format!(
                "bits per real coefficient must lie in 1..={MAX_BITS_PER_REAL}, got {bits_per_real}"
            )));
        }
        if taps == 0 {
            return Err(Error::invalid("tap count must be positive"));
        }
        let step = (1.5 - bits_per_real as f64).exp2() / (taps as f64).sqrt();
        Ok(UniformQuantizer {
            bits_per_real,
            step,
            half_levels: 1 << (bits_per_real - 1),
        })
    }

    /// Quantizer for a total budget of `total_bits`, using
    /// `⌊B / (2·Nt·L)⌋` bits per real coefficient.
    pub fn from_budget(total_bits: u64, antennas: usize, taps: usize) -> Result<Self> {
        let coefficients = 2 * antennas as u64 * taps as u64;
        let bits = total_bits / coefficients.max(1);
        if bits == 0 {
            return Err(Error::invalid(format!(
                "B={total_bits} gives less than one bit per real coefficient \
                 (needs at least {coefficients} for Nt={antennas}, L={taps})"
            )));
        }
        Self::new(u32::try_from(bits).unwrap_or(u32::MAX), taps)
    }

    pub fn bits_per_real(&self) -> u32 {
        self.bits_per_real
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn levels(&self) -> u64 {
        2 * self.half_levels as u64
    }

    /// Feedback bits spent on `antennas × taps` complex coefficients.
    pub fn feedback_bits(&self, antennas: usize, taps: usize) -> u64 {
        2 * antennas as u64 * taps as u64 * self.bits_per_real as u64
    }

    /// Reconstruction point of cell `i`, `(i + ½)Δ`.
    pub fn level(&self, i: i64) -> f64 {
        (i as f64 + 0.5) * self.step
    }

    /// Cell indices `-levels/2 ..= levels/2 - 1`.
    pub fn cells(&self) -> std::ops::RangeInclusive<i64> {
        -self.half_levels..=self.half_levels - 1
    }
}

/// Quantizes one real value, saturating at the outermost cells.
pub fn quantize_value(x: f64, q: &UniformQuantizer) -> f64 {
    let i = (x / q.step)
        .floor()
        .clamp(-q.half_levels as f64, (q.half_levels - 1) as f64);
    q.level(i as i64)
}

/// Quantizes the real and imaginary part of every tap independently.
pub fn quantize_taps(taps: &ChannelTaps, q: &UniformQuantizer) -> ChannelTaps {
    taps.map(|g| Complex64::new(quantize_value(g.re, q), quantize_value(g.im, q)))
}

/// Beamforms along the frequency response of the quantized taps.
///
/// A reconstructed channel vector of zero norm is replaced by `e_1` and
/// counted in the diagnostics.
pub fn plan_from_quantized(
    taps: &ChannelTaps,
    q: &UniformQuantizer,
    subcarriers: usize,
) -> Result<BeamformerPlan> {
    let quantized = quantize_taps(taps, q);
    let approx = frequency_response(&quantized, subcarriers)?;
    let mut plan =
        BeamformerPlan::new(taps.antennas(), subcarriers, SchemeTag::ChannelQuantization);
    for n in 0..subcarriers {
        match linalg::normalized(approx.row(n), 1e-300) {
            Some(v) => plan.set(n, &v),
            None => {
                let mut e1 = vec![Complex64::new(0.0, 0.0); taps.antennas()];
                e1[0] = Complex64::new(1.0, 0.0);
                plan.set(n, &e1);
                plan.diagnostics.zero_channel_substitutions += 1;
            }
        }
    }
    plan.feedback_bits = q.feedback_bits(taps.antennas(), taps.taps());
    Ok(plan)
}

/// Expectations of the quantizer against a `N(0, 1/(2L))` input `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerMoments {
    /// `E[(ĝ - g)²]`.
    pub mse: f64,
    /// `E[ĝ g]`.
    pub corr: f64,
    /// `E[ĝ² g²]`.
    pub fourth: f64,
    /// `E[ĝ²]`.
    pub output_power: f64,
}

/// Partial moments `∫_a^b x^k φ_σ(x) dx` for `k = 0, 1, 2` of a zero-mean
/// Gaussian, exact via `erfc`.
fn gaussian_cell_moments(a: f64, b: f64, sigma: f64) -> [f64; 3] {
    let var = sigma * sigma;
    let pdf = |x: f64| {
        if x.is_infinite() {
            0.0
        } else {
            (-0.5 * x * x / var).exp() / (sigma * (2.0 * PI).sqrt())
        }
    };
    // x·φ(x) with the infinite endpoints mapped to 0
    let xpdf = |x: f64| if x.is_infinite() { 0.0 } else { x * pdf(x) };
    let z = |x: f64| x / sigma * FRAC_1_SQRT_2;
    let mass = if a >= 0.0 {
        0.5 * (erfc(z(a)) - erfc(z(b)))
    } else if b <= 0.0 {
        0.5 * (erfc(-z(b)) - erfc(-z(a)))
    } else {
        1.0 - 0.5 * erfc(z(b)) - 0.5 * erfc(-z(a))
    };
    let first = var * (pdf(a) - pdf(b));
    let second = var * mass + var * (xpdf(a) - xpdf(b));
    [mass, first, second]
}

/// Moments of `q` for tap components of variance `1/(2L)`, summed cell by
/// cell with exact Gaussian partial moments.
pub fn quantizer_moments(q: &UniformQuantizer, taps: usize) -> QuantizerMoments {
    let sigma = (0.5 / taps as f64).sqrt();
    let lo = q.cells().start().to_owned();
    let hi = q.cells().end().to_owned();
    let mut m = QuantizerMoments {
        mse: 0.0,
        corr: 0.0,
        fourth: 0.0,
        output_power: 0.0,
    };
    for i in q.cells() {
        let a = if i == lo {
            f64::NEG_INFINITY
        } else {
            i as f64 * q.step
        };
        let b = if i == hi {
            f64::INFINITY
        } else {
            (i + 1) as f64 * q.step
        };
        let [i0, i1, i2] = gaussian_cell_moments(a, b, sigma);
        let y = q.level(i);
        m.mse += y * y * i0 - 2.0 * y * i1 + i2;
        m.corr += y * i1;
        m.fourth += y * y * i2;
        m.output_power += y * y * i0;
    }
    m
}

/// `N log(1 + ρ E|h† ĥ|² / E‖ĥ‖²)` with both expectations written in the
/// quantizer moments:
/// `E‖ĥ‖² = Nt(1 - 2L·mse)` and
/// `E|h†ĥ|² = Nt(1 + 1/L - (2L-1)·mse + 2L·E[ĝ²g²] + 4L(NtL-1)·E²[ĝg])`.
pub fn exact_rate_estimate(
    m: &QuantizerMoments,
    params: &ChannelParams,
    base: LogBase,
) -> Result<f64> {
    let nt = params.antennas as f64;
    let l = params.taps as f64;
    let power = nt * (1.0 - 2.0 * l * m.mse);
    if !(power > 0.0) {
        return Err(Error::Domain(format!(
            "expected reconstructed channel power {power} is not positive (mse {})",
            m.mse
        )));
    }
    let cross = nt
        * (1.0 + 1.0 / l - (2.0 * l - 1.0) * m.mse
            + 2.0 * l * m.fourth
            + 4.0 * l * (nt * l - 1.0) * m.corr * m.corr);
    Ok(params.subcarriers as f64 * base.log1p(params.rho * cross / power))
}

/// `Ω_B = 1/L - (4/(3L))·2^{-B/(Nt L)}`.
pub fn omega(total_bits: f64, antennas: usize, taps: usize) -> f64 {
    let l = taps as f64;
    1.0 / l - 4.0 / (3.0 * l) * (-total_bits / (antennas as f64 * l)).exp2()
}

/// Smallest budget with `Ω_B > 0`, `Nt L log2(4/3)`.
pub fn min_high_rate_bits(antennas: usize, taps: usize) -> f64 {
    (antennas * taps) as f64 * (4.0f64 / 3.0).log2()
}

/// High-rate sum-rate approximation
/// `N log(1 + ρ(1 - 1/L + (NtL-1)Ω_B + 3/(4L²Ω_B)))`.
pub fn high_rate_approximation(
    total_bits: f64,
    params: &ChannelParams,
    base: LogBase,
) -> Result<f64> {
    let om = omega(total_bits, params.antennas, params.taps);
    if !(om > 0.0) {
        return Err(Error::Domain(format!(
            "high-rate approximation needs B > {:.4} (Nt={}, L={}), got B={total_bits}",
            min_high_rate_bits(params.antennas, params.taps),
            params.antennas,
            params.taps
        )));
    }
    let l = params.taps as f64;
    let nt = params.antennas as f64;
    let snr_gain = 1.0 - 1.0 / l + (nt * l - 1.0) * om + 3.0 / (4.0 * l * l * om);
    Ok(params.subcarriers as f64 * base.log1p(params.rho * snr_gain))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recommendation {
    Interpolation,
    ChannelQuantization,
}

impl Recommendation {
    pub fn name(self) -> &'static str {
        match self {
            Recommendation::Interpolation => "interpolation",
            Recommendation::ChannelQuantization => "channel_quantization",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchRow {
    pub total_bits: f64,
    pub best_cluster_size: usize,
    pub interpolation_rate: f64,
    /// `None` when the budget buys less than one bit per real coefficient
    /// or the high-rate approximation is undefined.
    pub channel_quantization_rate: Option<f64>,
    pub recommendation: Recommendation,
}

/// Compares the best constant-interpolation prediction with the high-rate
/// channel-quantization prediction at every budget in `grid`.
pub fn switch_point(cfg: &AnalysisConfig, grid: &[f64]) -> Result<Vec<SwitchRow>> {
    if grid.is_empty() {
        return Err(Error::invalid("switch-point grid is empty"));
    }
    let p = &cfg.params;
    let coefficients = 2.0 * (p.antennas * p.taps) as f64;
    grid.iter()
        .map(|&b| {
            let at = AnalysisConfig {
                total_bits: b,
                ..*cfg
            };
            let opt = optimize_cluster_size(&at)?;
            let chq = if b >= coefficients {
                high_rate_approximation(b, p, cfg.log_base).ok()
            } else {
                None
            };
            let recommendation = match chq {
                Some(r) if r > opt.best_rate => Recommendation::ChannelQuantization,
                _ => Recommendation::Interpolation,
            };
            Ok(SwitchRow {
                total_bits: b,
                best_cluster_size: opt.best_size,
                interpolation_rate: opt.best_rate,
                channel_quantization_rate: chq,
                recommendation,
            })
        })
        .collect()
}
