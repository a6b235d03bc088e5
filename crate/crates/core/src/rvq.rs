//! Random vector quantization of beamforming directions.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::Rng;
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg;

/// Largest codebook (in bits) searched by default.
pub const DEFAULT_MAX_BITS: u32 = 24;

/// `2^bits` isotropic unit vectors in `C^antennas`.
///
/// Entries are stored with their first coordinate real and non-negative. The
/// selection metric `|h† w|²` ignores a common phase, so this only fixes the
/// otherwise arbitrary phase of each entry and makes entries that point in
/// nearby directions numerically close, which interpolation relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    bits: u32,
    antennas: usize,
    entries: Vec<Complex64>,
}

impl Codebook {
    /// Builds a codebook from explicit entries; each is normalized.
    pub fn from_entries(antennas: usize, entries: Vec<Vec<Complex64>>) -> Result<Self> {
        let size = entries.len();
        if antennas == 0 || size == 0 || !size.is_power_of_two() {
            return Err(Error::invalid(format!(
                "codebook needs a power-of-two number of entries, got {size}"
            )));
        }
        let mut flat = Vec::with_capacity(size * antennas);
        for e in &entries {
            if e.len() != antennas {
                return Err(Error::DimensionMismatch(format!(
                    "entry of length {} in a {antennas}-antenna codebook",
                    e.len()
                )));
            }
            let u = linalg::normalized(e, 1e-300)
                .ok_or_else(|| Error::invalid("zero codebook entry"))?;
            flat.extend(u);
        }
        Ok(Codebook {
            bits: size.trailing_zeros(),
            antennas,
            entries: flat,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn len(&self) -> usize {
        self.entries.len() / self.antennas
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.antennas..(i + 1) * self.antennas]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Complex64]> {
        self.entries.chunks_exact(self.antennas)
    }
}

/// Best codebook entry for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedBeamformer {
    pub index: usize,
    pub vector: Vec<Complex64>,
    /// `|h̄† w|²` for the selected entry.
    pub correlation: f64,
}

/// Rotates `v` so its first coordinate is real and non-negative.
pub(crate) fn canonical_phase(v: &mut [Complex64]) {
    if let Some(first) = v.first().copied() {
        let r = first.norm();
        if r > 0.0 {
            let rot = first.conj() / r;
            v.iter_mut().for_each(|x| *x *= rot);
            v[0] = Complex64::new(r, 0.0);
        }
    }
}

pub fn generate_codebook<R: Rng + ?Sized>(
    rng: &mut R,
    bits: u32,
    antennas: usize,
) -> Result<Codebook> {
    generate_codebook_capped(rng, bits, antennas, DEFAULT_MAX_BITS)
}

pub fn generate_codebook_capped<R: Rng + ?Sized>(
    rng: &mut R,
    bits: u32,
    antennas: usize,
    cap: u32,
) -> Result<Codebook> {
    if bits > cap {
        return Err(Error::CodebookBudget { bits, cap });
    }
    if antennas == 0 {
        return Err(Error::invalid("codebook needs at least one antenna"));
    }
    let size = 1usize << bits;
    let mut entries = Vec::with_capacity(size * antennas);
    for _ in 0..size {
        let mut w = linalg::isotropic_unit(rng, antennas);
        canonical_phase(&mut w);
        entries.extend(w);
    }
    Ok(Codebook {
        bits,
        antennas,
        entries,
    })
}

/// Selects the entry maximizing `|h̄† w|²`; ties go to the lowest index.
pub fn quantize(direction: &[Complex64], codebook: &Codebook) -> QuantizedBeamformer {
    debug_assert_eq!(direction.len(), codebook.antennas);
    let mut best = 0;
    let mut best_corr = f64::NEG_INFINITY;
    for (i, w) in codebook.iter().enumerate() {
        let c = linalg::gain(direction, w);
        if c > best_corr {
            best = i;
            best_corr = c;
        }
    }
    QuantizedBeamformer {
        index: best,
        vector: codebook.entry(best).to_vec(),
        correlation: best_corr.clamp(0.0, 1.0),
    }
}

/// `E|h̄† ŵ|² = 1 - 2^b β(2^b, Nt/(Nt-1))` for a `b`-bit RVQ codebook.
///
/// `bits` may be fractional. A single antenna has nothing to quantize and
/// returns 1.
pub fn rvq_quality(bits: f64, antennas: usize) -> f64 {
    if antennas <= 1 {
        return 1.0;
    }
    let size = bits.exp2();
    let nt = antennas as f64;
    let shape = nt / (nt - 1.0);
    let log_gap = if size < ASYMPTOTIC_SIZE {
        size.ln() + ln_beta(size, shape)
    } else {
        bits * LN_2 + ln_gamma(shape) - ln_gamma_ratio(size, shape)
    };
    1.0 - log_gap.exp()
}

/// Above this codebook size `ln β` is evaluated from its asymptotic series;
/// differencing `ln Γ` of huge arguments loses all precision.
const ASYMPTOTIC_SIZE: f64 = 256.0;

/// `ln Γ(x + a) - ln Γ(x)` for large `x` via the Bernoulli-polynomial series.
fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    let b2 = a * a - a;
    let b3 = a * a * a - 1.5 * a * a + 0.5 * a;
    let b4 = a.powi(4) - 2.0 * a.powi(3) + a * a;
    let b5 = a.powi(5) - 2.5 * a.powi(4) + 5.0 / 3.0 * a.powi(3) - a / 6.0;
    a * x.ln() + b2 / (2.0 * x) - b3 / (6.0 * x * x) + b4 / (12.0 * x.powi(3))
        - b5 / (20.0 * x.powi(4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};
    use crate::stats::Estimate;

    fn rng(i: u64) -> crate::rng::SimRng {
        substream(5, i, Domain::Codebook)
    }

    #[test]
    fn zero_bits_is_single_entry() {
        let cb = generate_codebook(&mut rng(0), 0, 3).unwrap();
        assert_eq!(cb.len(), 1);
        let d = linalg::isotropic_unit(&mut rng(1), 3);
        let q = quantize(&d, &cb);
        assert_eq!(q.index, 0);
        assert_eq!(q.vector, cb.entry(0));
    }

    #[test]
    fn entries_are_unit_norm() {
        let cb = generate_codebook(&mut rng(0), 3, 2).unwrap();
        assert_eq!(cb.len(), 8);
        assert_eq!(cb.bits(), 3);
        for w in cb.iter() {
            assert!((linalg::norm(w) - 1.0).abs() < 1e-12);
            assert!(w[0].im == 0.0 && w[0].re >= 0.0);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let err = generate_codebook_capped(&mut rng(0), 9, 2, 8).unwrap_err();
        assert_eq!(err, Error::CodebookBudget { bits: 9, cap: 8 });
        assert!(err.to_string().contains("8 bits"));
    }

    #[test]
    fn exact_match_is_found() {
        let mut cb = generate_codebook(&mut rng(0), 4, 3).unwrap();
        let target = linalg::isotropic_unit(&mut rng(9), 3);
        cb.entries[5 * 3..6 * 3].copy_from_slice(&target);
        let q = quantize(&target, &cb);
        assert_eq!(q.index, 5);
        assert!((q.correlation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let e = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let cb = Codebook::from_entries(2, vec![e.clone(), e]).unwrap();
        let q = quantize(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], &cb);
        assert_eq!(q.index, 0);
    }

    #[test]
    fn pairwise_inner_products_are_isotropic() {
        let mut samples = Vec::new();
        for t in 0..400 {
            let cb = generate_codebook(&mut rng(t), 3, 4).unwrap();
            for i in 0..cb.len() {
                for j in i + 1..cb.len() {
                    samples.push(linalg::gain(cb.entry(i), cb.entry(j)));
                }
            }
        }
        // pairs within one codebook are dependent; use codebook means
        let per_book: Vec<f64> = samples
            .chunks(28)
            .map(|c| c.iter().sum::<f64>() / 28.0)
            .collect();
        let e = Estimate::from_samples(&per_book);
        assert!(e.within(0.25, 3.0), "{e:?}");
    }

    #[test]
    fn quality_closed_forms() {
        for nt in 2..7 {
            assert!((rvq_quality(0.0, nt) - 1.0 / nt as f64).abs() < 1e-12);
        }
        // β(n, 2) = 1/(n(n+1))
        for b in 0..12 {
            let n = (1u64 << b) as f64;
            assert!((rvq_quality(b as f64, 2) - n / (n + 1.0)).abs() < 1e-12);
        }
        assert!((rvq_quality(4.0, 2) - 16.0 / 17.0).abs() < 1e-12);
        assert_eq!(rvq_quality(3.0, 1), 1.0);
    }

    #[test]
    fn quality_large_bits_follows_power_law() {
        // 2^b β(2^b, c) → Γ(c) 2^{b(1-c)} as b grows
        let c = 4.0 / 3.0;
        let gamma_c = statrs::function::gamma::gamma(c);
        let gap = 1.0 - rvq_quality(30.0, 4);
        let oracle = gamma_c * (30.0 * (1.0 - c)).exp2();
        assert!((gap - oracle).abs() < 1e-6 * oracle, "{gap} vs {oracle}");
        assert!(gap < 1e-3);
    }

    #[test]
    fn asymptotic_branch_is_continuous() {
        for nt in 2..8 {
            let shape = nt as f64 / (nt as f64 - 1.0);
            for x in [256.0_f64, 1000.0, 4096.0] {
                let direct = ln_beta(x, shape) + x.ln();
                let series = ln_gamma(shape) - ln_gamma_ratio(x, shape) + x.ln();
                assert!((direct - series).abs() < 1e-10, "{nt} {x}");
            }
        }
    }

    #[test]
    fn quality_is_monotone() {
        for nt in 2..6 {
            let mut prev = rvq_quality(0.0, nt);
            for k in 1..=80 {
                let q = rvq_quality(k as f64 * 0.25, nt);
                assert!(q > prev && q < 1.0);
                prev = q;
            }
        }
        for b in 0..10 {
            for nt in 2..6 {
                assert!(rvq_quality(b as f64, nt) > rvq_quality(b as f64, nt + 1));
            }
        }
    }

    #[test]
    fn quantize_mean_matches_quality_two_antennas() {
        let mut r = rng(77);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| {
                let cb = generate_codebook(&mut r, 4, 2).unwrap();
                let d = linalg::isotropic_unit(&mut r, 2);
                quantize(&d, &cb).correlation
            })
            .collect();
        let e = Estimate::from_samples(&samples);
        assert!((e.mean - 16.0 / 17.0).abs() < 0.01, "{e:?}");
    }
}
