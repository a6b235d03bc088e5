//! Frequency-selective Rayleigh MISO channels with a uniform power delay
//! profile, their per-subcarrier frequency responses, and the closed-form
//! subcarrier correlation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::stats::Estimate;

/// Link dimensions and per-subcarrier SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Subcarrier count.
    pub subcarriers: usize,
    /// Transmit antennas.
    pub antennas: usize,
    /// Channel taps.
    pub taps: usize,
    /// Linear SNR per subcarrier.
    pub rho: f64,
}

impl ChannelParams {
    pub fn new(subcarriers: usize, antennas: usize, taps: usize, rho: f64) -> Result<Self> {
        if subcarriers == 0 || antennas == 0 || taps == 0 {
            return Err(Error::invalid(format!(
                "counts must be positive (N={subcarriers}, Nt={antennas}, L={taps})"
            )));
        }
        if taps > subcarriers {
            return Err(Error::invalid(format!(
                "tap count L={taps} exceeds subcarrier count N={subcarriers}"
            )));
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::invalid(format!(
                "SNR must be finite and non-negative, got {rho}"
            )));
        }
        Ok(ChannelParams {
            subcarriers,
            antennas,
            taps,
            rho,
        })
    }

    pub fn with_snr_db(
        subcarriers: usize,
        antennas: usize,
        taps: usize,
        snr_db: f64,
    ) -> Result<Self> {
        Self::new(subcarriers, antennas, taps, crate::db_to_linear(snr_db))
    }
}

/// Impulse-response gains, `taps × antennas`, row-major by tap.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTaps {
    taps: usize,
    antennas: usize,
    gains: Vec<Complex64>,
}

impl ChannelTaps {
    pub fn from_gains(taps: usize, antennas: usize, gains: Vec<Complex64>) -> Result<Self> {
        if taps == 0 || antennas == 0 || gains.len() != taps * antennas {
            return Err(Error::DimensionMismatch(format!(
                "{} gains for {taps} taps x {antennas} antennas",
                gains.len()
            )));
        }
        Ok(ChannelTaps {
            taps,
            antennas,
            gains,
        })
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn gain(&self, tap: usize, antenna: usize) -> Complex64 {
        self.gains[tap * self.antennas + antenna]
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    /// `Σ_l |g_{l,antenna}|²`.
    pub fn antenna_power(&self, antenna: usize) -> f64 {
        (0..self.taps)
            .map(|l| self.gain(l, antenna).norm_sqr())
            .sum()
    }

    pub(crate) fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ChannelTaps {
        ChannelTaps {
            taps: self.taps,
            antennas: self.antennas,
            gains: self.gains.iter().map(|&g| f(g)).collect(),
        }
    }
}

/// Per-subcarrier channel vectors `h_n`, `subcarriers × antennas`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    subcarriers: usize,
    antennas: usize,
    taps: usize,
    response: Vec<Complex64>,
}

impl FrequencyResponse {
    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Tap count of the impulse response this was computed from.
    pub fn taps(&self) -> usize {
        self.taps
    }

    /// Channel vector `h_n`.
    pub fn row(&self, n: usize) -> &[Complex64] {
        &self.response[n * self.antennas..(n + 1) * self.antennas]
    }

    /// Unit-norm direction `h_n / ‖h_n‖`; `None` for an all-zero row.
    pub fn direction(&self, n: usize) -> Option<Vec<Complex64>> {
        linalg::normalized(self.row(n), 0.0)
    }
}

/// Draws i.i.d. `CN(0, 1/L)` gains for every tap and antenna.
pub fn sample_taps<R: Rng + ?Sized>(rng: &mut R, params: &ChannelParams) -> ChannelTaps {
    let scale = (0.5 / params.taps as f64).sqrt();
    let gains = (0..params.taps * params.antennas)
        .map(|_| linalg::complex_normal(rng, scale))
        .collect();
    ChannelTaps {
        taps: params.taps,
        antennas: params.antennas,
        gains,
    }
}

/// `e^{-j2π k/N}` for `k = 0..N`.
fn twiddles(subcarriers: usize) -> Vec<Complex64> {
    (0..subcarriers)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / subcarriers as f64))
        .collect()
}

/// `h_{n,a} = Σ_l g_{l,a} e^{-j2πln/N}` evaluated by direct summation.
pub fn frequency_response(taps: &ChannelTaps, subcarriers: usize) -> Result<FrequencyResponse> {
    if taps.taps > subcarriers {
        return Err(Error::DimensionMismatch(format!(
            "{} taps do not fit in {subcarriers} subcarriers",
            taps.taps
        )));
    }
    let tw = twiddles(subcarriers);
    let mut response = vec![Complex64::new(0.0, 0.0); subcarriers * taps.antennas];
    for n in 0..subcarriers {
        let row = &mut response[n * taps.antennas..(n + 1) * taps.antennas];
        for l in 0..taps.taps {
            let w = tw[(l * n) % subcarriers];
            for (a, h) in row.iter_mut().enumerate() {
                *h += taps.gain(l, a) * w;
            }
        }
    }
    Ok(FrequencyResponse {
        subcarriers,
        antennas: taps.antennas,
        taps: taps.taps,
        response,
    })
}

/// Channel vector of a single subcarrier without building the full response.
pub fn subcarrier_vector(taps: &ChannelTaps, subcarriers: usize, n: usize) -> Vec<Complex64> {
    let mut row = vec![Complex64::new(0.0, 0.0); taps.antennas];
    for l in 0..taps.taps {
        let k = (l * n) % subcarriers;
        let w = Complex64::from_polar(1.0, -2.0 * PI * k as f64 / subcarriers as f64);
        for (a, h) in row.iter_mut().enumerate() {
            *h += taps.gain(l, a) * w;
        }
    }
    row
}

/// `sin(πxL/N) / sin(πx/N)`.
///
/// At `x = kN` both sines vanish and the value is the limit `L·(-1)^{k(L-1)}`,
/// which is `L` at the origin.
pub fn varphi(x: f64, taps: usize, subcarriers: usize) -> f64 {
    let l = taps as f64;
    let n = subcarriers as f64;
    let den = (PI * x / n).sin();
    if den.abs() < 1e-12 {
        let k = (x / n).round() as i64;
        let odd = (k * (taps as i64 - 1)).rem_euclid(2) == 1;
        return if odd { -l } else { l };
    }
    (PI * x * l / n).sin() / den
}

/// Approximate `E|h̄_n† h̄_{n+q}|²`: `(L² + Nt φ²(q)) / (L² Nt + φ²(q))`.
pub fn psi(offset: f64, antennas: usize, taps: usize, subcarriers: usize) -> f64 {
    let l2 = (taps * taps) as f64;
    let nt = antennas as f64;
    let p2 = varphi(offset, taps, subcarriers).powi(2);
    (l2 + nt * p2) / (l2 * nt + p2)
}

/// Monte Carlo estimate of `E|h̄_0† h̄_q|²` over `trials` channel draws.
pub fn empirical_correlation<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ChannelParams,
    offset: usize,
    trials: usize,
) -> Result<Estimate> {
    if offset >= params.subcarriers {
        return Err(Error::invalid(format!(
            "offset q={offset} must be below N={}",
            params.subcarriers
        )));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let samples: Vec<f64> = (0..trials)
        .map(|_| {
            let taps = sample_taps(rng, params);
            let a = subcarrier_vector(&taps, params.subcarriers, 0);
            let b = subcarrier_vector(&taps, params.subcarriers, offset);
            if offset == 0 {
                return 1.0;
            }
            let corr = linalg::gain(&a, &b) / (linalg::norm_sqr(&a) * linalg::norm_sqr(&b));
            corr.min(1.0)
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};

    fn rng() -> crate::rng::SimRng {
        substream(11, 0, Domain::Channel)
    }

    #[test]
    fn params_reject_bad_dimensions() {
        assert!(ChannelParams::new(8, 2, 9, 1.0).is_err());
        assert!(ChannelParams::new(0, 2, 1, 1.0).is_err());
        assert!(ChannelParams::new(8, 0, 1, 1.0).is_err());
        assert!(ChannelParams::new(8, 2, 2, -1.0).is_err());
        assert!(ChannelParams::new(8, 2, 8, 1.0).is_ok());
    }

    #[test]
    fn taps_shape() {
        let p = ChannelParams::new(64, 3, 5, 1.0).unwrap();
        let t = sample_taps(&mut rng(), &p);
        assert_eq!(t.taps(), 5);
        assert_eq!(t.antennas(), 3);
        assert_eq!(t.gains().len(), 15);
    }

    #[test]
    fn single_tap_unit_power() {
        let p = ChannelParams::new(1, 1, 1, 1.0).unwrap();
        let mut r = rng();
        let s: Vec<f64> = (0..10_000)
            .map(|_| sample_taps(&mut r, &p).antenna_power(0))
            .collect();
        let e = Estimate::from_samples(&s);
        assert!(e.within(1.0, 3.0), "{e:?}");
    }

    #[test]
    fn tap_power_sum_is_one() {
        let p = ChannelParams::new(64, 4, 16, 1.0).unwrap();
        let mut r = rng();
        let s: Vec<f64> = (0..10_000)
            .map(|_| sample_taps(&mut r, &p).antenna_power(0))
            .collect();
        let e = Estimate::from_samples(&s);
        assert!(e.within(1.0, 3.0), "{e:?}");
    }

    #[test]
    fn flat_channel_repeats_single_gain() {
        let p = ChannelParams::new(16, 2, 1, 1.0).unwrap();
        let t = sample_taps(&mut rng(), &p);
        let h = frequency_response(&t, 16).unwrap();
        for n in 0..16 {
            assert_eq!(h.row(n), h.row(0));
            assert_eq!(h.row(n)[1], t.gain(0, 1));
        }
    }

    #[test]
    fn zero_index_sums_taps() {
        let p = ChannelParams::new(32, 2, 6, 1.0).unwrap();
        let t = sample_taps(&mut rng(), &p);
        let h = frequency_response(&t, 32).unwrap();
        for a in 0..2 {
            let s: Complex64 = (0..6).map(|l| t.gain(l, a)).sum();
            assert!((h.row(0)[a] - s).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_per_realization() {
        let p = ChannelParams::new(64, 2, 8, 1.0).unwrap();
        let mut r = rng();
        for _ in 0..20 {
            let t = sample_taps(&mut r, &p);
            let h = frequency_response(&t, 64).unwrap();
            for a in 0..2 {
                let lhs: f64 = (0..64).map(|n| h.row(n)[a].norm_sqr()).sum();
                let rhs = 64.0 * t.antenna_power(a);
                assert!((lhs - rhs).abs() <= 1e-9 * rhs);
            }
        }
    }

    #[test]
    fn single_subcarrier_matches_full_response() {
        let p = ChannelParams::new(48, 3, 7, 1.0).unwrap();
        let t = sample_taps(&mut rng(), &p);
        let h = frequency_response(&t, 48).unwrap();
        for n in [0, 1, 17, 47] {
            let v = subcarrier_vector(&t, 48, n);
            for (x, y) in v.iter().zip(h.row(n)) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn response_rejects_too_many_taps() {
        let t = ChannelTaps::from_gains(4, 1, vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        assert!(matches!(
            frequency_response(&t, 3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn varphi_values() {
        assert_eq!(varphi(0.0, 4, 64), 4.0);
        assert!((varphi(5.0, 1, 64) - 1.0).abs() < 1e-12);
        assert!((varphi(8.0, 4, 64) - 2.613_125_929_752_753).abs() < 1e-12);
        // limits at multiples of N carry the sign (-1)^{k(L-1)}
        assert_eq!(varphi(64.0, 4, 64), -4.0);
        assert_eq!(varphi(64.0, 5, 64), 5.0);
    }

    #[test]
    fn psi_values() {
        assert!((psi(0.0, 4, 4, 64) - 1.0).abs() < 1e-15);
        for q in 0..64 {
            assert!((psi(q as f64, 4, 1, 64) - 1.0).abs() < 1e-12);
        }
        let p = 2.613_125_929_752_753_f64.powi(2);
        let expected = (16.0 + 4.0 * p) / (64.0 + p);
        assert!((psi(8.0, 4, 4, 64) - expected).abs() < 1e-12);
        assert!((expected - 0.611_530_0).abs() < 1e-6);
    }

    #[test]
    fn psi_bounds() {
        for nt in 1..6 {
            for l in [1, 3, 8, 24] {
                for q in 0..128 {
                    let v = psi(q as f64, nt, l, 128);
                    assert!(v >= 1.0 / nt as f64 - 1e-12 && v <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn flat_and_self_correlation_are_exact() {
        let flat = ChannelParams::new(64, 4, 1, 1.0).unwrap();
        let e = empirical_correlation(&mut rng(), &flat, 9, 50).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-12);
        let sel = ChannelParams::new(64, 4, 8, 1.0).unwrap();
        let e = empirical_correlation(&mut rng(), &sel, 0, 50).unwrap();
        assert_eq!(e.mean, 1.0);
    }

    #[test]
    fn correlation_rejects_bad_offset() {
        let p = ChannelParams::new(16, 2, 2, 1.0).unwrap();
        assert!(empirical_correlation(&mut rng(), &p, 16, 10).is_err());
        assert!(empirical_correlation(&mut rng(), &p, 3, 0).is_err());
    }

    #[test]
    fn correlation_tracks_closed_form() {
        let p = ChannelParams::new(256, 4, 16, 1.0).unwrap();
        for q in [1, 16, 64] {
            let e = empirical_correlation(&mut rng(), &p, q, 2000).unwrap();
            assert!(
                (e.mean - psi(q as f64, 4, 16, 256)).abs() <= 0.02,
                "q={q} {e:?}"
            );
        }
    }
}
