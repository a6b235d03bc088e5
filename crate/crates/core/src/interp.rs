//! Beamformer plans built from a few quantized anchors per OFDM symbol.
//!
//! Subcarriers are grouped into `K = ⌊N/M⌋` clusters of `M`. Constant plans
//! quantize one representative per cluster and repeat it. Linear and
//! higher-order plans quantize the first subcarrier of every cluster and
//! interpolate the others from neighbouring anchors, with anchor indices
//! wrapping around the band (the cluster after the last one is cluster 0).
//! The last cluster absorbs the `N - K·M` leftover subcarriers, so its
//! interpolation span is `N - (K-1)·M`.

use std::f64::consts::PI;
use std::ops::AddAssign;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{psi, varphi, FrequencyResponse};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rvq::{self, Codebook};

/// Interpolants with a norm below this are treated as cancelled.
const ZERO_NORM: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeTag {
    Constant,
    LinearSearch,
    LinearClosedForm,
    HigherOrder,
    ChannelQuantization,
    Perfect,
    Random,
}

impl SchemeTag {
    pub fn name(self) -> &'static str {
        match self {
            SchemeTag::Constant => "constant",
            SchemeTag::LinearSearch => "linear-search",
            SchemeTag::LinearClosedForm => "linear-closed-form",
            SchemeTag::HigherOrder => "higher-order",
            SchemeTag::ChannelQuantization => "chquant",
            SchemeTag::Perfect => "perfect",
            SchemeTag::Random => "random",
        }
    }
}

/// Counters for the degenerate cases the plans resolve on the fly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Closed-form phases whose arccos argument left `[-1, 1]`.
    pub clamp_events: u64,
    /// Closed-form phases with a vanishing denominator.
    pub degenerate_phases: u64,
    /// Interpolants that cancelled and were replaced by the nearest anchor.
    pub zero_norm_fallbacks: u64,
    /// Zero channel vectors replaced by a fixed unit direction.
    pub zero_channel_substitutions: u64,
}

impl AddAssign for Diagnostics {
    fn add_assign(&mut self, o: Self) {
        self.clamp_events += o.clamp_events;
        self.degenerate_phases += o.degenerate_phases;
        self.zero_norm_fallbacks += o.zero_norm_fallbacks;
        self.zero_channel_substitutions += o.zero_channel_substitutions;
    }
}

/// One unit-norm transmit vector per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerPlan {
    antennas: usize,
    vectors: Vec<Complex64>,
    pub feedback_bits: u64,
    pub scheme: SchemeTag,
    pub diagnostics: Diagnostics,
}

impl BeamformerPlan {
    pub(crate) fn new(antennas: usize, subcarriers: usize, scheme: SchemeTag) -> Self {
        BeamformerPlan {
            antennas,
            vectors: vec![Complex64::new(0.0, 0.0); antennas * subcarriers],
            feedback_bits: 0,
            scheme,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.antennas
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn vector(&self, n: usize) -> &[Complex64] {
        &self.vectors[n * self.antennas..(n + 1) * self.antennas]
    }

    pub(crate) fn set(&mut self, n: usize, v: &[Complex64]) {
        self.vectors[n * self.antennas..(n + 1) * self.antennas].copy_from_slice(v);
    }
}

/// Cluster layout for `subcarriers` split into clusters of `size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterPlan {
    pub subcarriers: usize,
    pub size: usize,
    pub clusters: usize,
    pub remainder: usize,
    /// `⌊B/K⌋`, the codebook size used for every anchor.
    pub bits_per_cluster: u32,
}

impl ClusterPlan {
    pub fn new(subcarriers: usize, size: usize, total_bits: u64) -> Result<Self> {
        if size == 0 || size > subcarriers {
            return Err(Error::invalid(format!(
                "cluster size M={size} must lie in 1..={subcarriers}"
            )));
        }
        let clusters = subcarriers / size;
        let bits = total_bits / clusters as u64;
        let bits_per_cluster = u32::try_from(bits)
            .map_err(|_| Error::invalid(format!("{bits} bits per cluster is out of range")))?;
        Ok(ClusterPlan {
            subcarriers,
            size,
            clusters,
            remainder: subcarriers - clusters * size,
            bits_per_cluster,
        })
    }

    /// Quantized subcarrier of a constant-plan cluster: the centre for odd
    /// `M`, the subcarrier just before the centre for even `M`.
    pub fn representative(&self, cluster: usize) -> usize {
        cluster * self.size + (self.size - 1) / 2
    }

    /// First subcarrier of `cluster`, the anchor for interpolating plans.
    pub fn anchor(&self, cluster: usize) -> usize {
        cluster * self.size
    }

    /// Distance from the anchor of `cluster` to the next anchor.
    pub fn span(&self, cluster: usize) -> usize {
        if cluster + 1 == self.clusters {
            self.subcarriers - cluster * self.size
        } else {
            self.size
        }
    }

    pub fn beamformer_bits(&self) -> u64 {
        self.clusters as u64 * self.bits_per_cluster as u64
    }
}

/// Uniform phase alphabet `{2πi/P : i = 0..P}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseCodebook {
    levels: usize,
}

impl PhaseCodebook {
    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid("phase codebook needs at least one level"));
        }
        Ok(PhaseCodebook { levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn value(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.levels as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.levels).map(|i| self.value(i))
    }

    /// `⌈log2 P⌉` bits to report one phase.
    pub fn feedback_bits(&self) -> u32 {
        self.levels.next_power_of_two().trailing_zeros()
    }
}

/// Which expression produces the closed-form phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseFormula {
    /// Solves `E_b(θ)/E_l(θ) = ψ(m)` for `cos θ`, with the expected
    /// numerator and denominator powers of the interpolated channel.
    #[default]
    RatioSolution,
    /// The printed `U(m)/V(m)` pair. It is kept for comparison and does
    /// not satisfy the ratio equation.
    Printed,
}

/// How linear plans pick their phase rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// One phase per cluster, chosen by exhaustive search and fed back.
    Search(PhaseCodebook),
    /// One phase per subcarrier offset, computed at the transmitter from
    /// `L` and `M` alone.
    ClosedForm(PhaseFormula),
}

/// Result of the closed-form phase rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormPhase {
    pub theta: f64,
    /// The unclamped arccos argument (NaN when degenerate).
    pub ratio: f64,
    pub clamped: bool,
    pub degenerate: bool,
}

/// Shared pieces of the expected interpolated powers at offset `m` in a
/// span of `size`: `(a, b, d)` with `a = (1-c)²`, `b = c²` and
/// `d = 2(1-c)c·cos(πM(L-1)/N)·φ(M)`, so that
/// `E_b = a(Nt+1) + b(Nt φ²(M)/L + 1) + d cosθ (Nt+1)/L` and
/// `E_l = a(Nt+1) + b Nt + d cosθ Nt/L`.
fn expected_power_terms(m: usize, size: usize, taps: usize, subcarriers: usize) -> (f64, f64, f64) {
    let c = m as f64 / size as f64;
    let l = taps as f64;
    let phi = varphi(size as f64, taps, subcarriers);
    let drift = (PI * size as f64 * (l - 1.0) / subcarriers as f64).cos();
    ((1.0 - c).powi(2), c * c, 2.0 * (1.0 - c) * c * drift * phi)
}

/// `E_b(θ) / E_l(θ)` for the linearly interpolated, unquantized channel.
pub fn expected_power_ratio(
    theta: f64,
    m: usize,
    size: usize,
    taps: usize,
    subcarriers: usize,
    antennas: usize,
) -> f64 {
    let (a, b, d) = expected_power_terms(m, size, taps, subcarriers);
    let nt = antennas as f64;
    let l = taps as f64;
    let phi2 = varphi(size as f64, taps, subcarriers).powi(2);
    let cross = d * theta.cos() / l;
    let num = a * (nt + 1.0) + b * (nt * phi2 / l + 1.0) + cross * (nt + 1.0);
    let den = a * (nt + 1.0) + b * nt + cross * nt;
    num / den
}

/// `(U, V)` with `cos θ_m = U/V`.
pub fn phase_ratio_terms(
    formula: PhaseFormula,
    m: usize,
    size: usize,
    taps: usize,
    subcarriers: usize,
    antennas: usize,
) -> (f64, f64) {
    let (a, b, d) = expected_power_terms(m, size, taps, subcarriers);
    let nt = antennas as f64;
    let l = taps as f64;
    let target = psi(m as f64, antennas, taps, subcarriers);
    let phi2 = varphi(size as f64, taps, subcarriers).powi(2);
    let v = d / l * (nt - nt * target + 1.0);
    let u = match formula {
        PhaseFormula::RatioSolution => {
            a * (nt + 1.0) * (target - 1.0) + b * (nt * target - nt * phi2 / l - 1.0)
        }
        PhaseFormula::Printed => {
            a * (target - nt + 1.0) + b * (nt * target - nt * phi2 / (l * l) + 1.0)
        }
    };
    (u, v)
}

/// Closed-form phase rotation `θ_m = arccos(U(m)/V(m)) ∈ [0, π]`.
///
/// The argument is clamped to `[-1, 1]` (flagged in the result) and a
/// vanishing `V` yields `θ = 0` (also flagged).
pub fn phase_rotation_closed_form(
    formula: PhaseFormula,
    m: usize,
    size: usize,
    taps: usize,
    subcarriers: usize,
    antennas: usize,
) -> ClosedFormPhase {
    let (u, v) = phase_ratio_terms(formula, m, size, taps, subcarriers, antennas);
    if !(v.abs() > 1e-14) {
        return ClosedFormPhase {
            theta: 0.0,
            ratio: f64::NAN,
            clamped: false,
            degenerate: true,
        };
    }
    let ratio = u / v;
    let clamped = !(-1.0..=1.0).contains(&ratio);
    ClosedFormPhase {
        theta: ratio.clamp(-1.0, 1.0).acos(),
        ratio,
        clamped,
        degenerate: false,
    }
}

fn unit_e1(antennas: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); antennas];
    v[0] = Complex64::new(1.0, 0.0);
    v
}

/// Channel direction, substituting `e_1` for an all-zero vector.
fn direction_or_e1(h: &FrequencyResponse, n: usize, diag: &mut Diagnostics) -> Vec<Complex64> {
    h.direction(n).unwrap_or_else(|| {
        diag.zero_channel_substitutions += 1;
        unit_e1(h.antennas())
    })
}

/// Where anchor beamformers come from.
enum AnchorSource<'a> {
    Codebook(&'a Codebook),
    Random(&'a mut dyn rand::RngCore),
}

impl AnchorSource<'_> {
    fn pick(&mut self, direction: &[Complex64]) -> Vec<Complex64> {
        match self {
            AnchorSource::Codebook(cb) => rvq::quantize(direction, cb).vector,
            AnchorSource::Random(rng) => {
                let mut v = linalg::isotropic_unit(*rng, direction.len());
                rvq::canonical_phase(&mut v);
                v
            }
        }
    }
}

fn anchor_codebook<R: Rng + ?Sized>(
    rng: &mut R,
    bits: u32,
    antennas: usize,
) -> Result<Option<Codebook>> {
    if bits == 0 {
        Ok(None)
    } else {
        rvq::generate_codebook(rng, bits, antennas).map(Some)
    }
}

fn quantize_anchors(
    h: &FrequencyResponse,
    positions: impl Iterator<Item = usize>,
    source: &mut AnchorSource<'_>,
    diag: &mut Diagnostics,
) -> Vec<Vec<Complex64>> {
    positions
        .map(|n| {
            let d = direction_or_e1(h, n, diag);
            source.pick(&d)
        })
        .collect()
}

/// Constant interpolation with a fresh RVQ codebook of `⌊B/K⌋` bits.
///
/// With zero bits per cluster every cluster gets an independent random
/// beamformer.
pub fn constant_plan<R: Rng>(
    h: &FrequencyResponse,
    size: usize,
    total_bits: u64,
    rng: &mut R,
) -> Result<BeamformerPlan> {
    let layout = ClusterPlan::new(h.subcarriers(), size, total_bits)?;
    match anchor_codebook(rng, layout.bits_per_cluster, h.antennas())? {
        Some(cb) => Ok(constant_plan_inner(h, &layout, AnchorSource::Codebook(&cb))),
        None => Ok(constant_plan_inner(h, &layout, AnchorSource::Random(rng))),
    }
}

/// Constant interpolation against a caller-supplied codebook.
pub fn constant_plan_with_codebook(
    h: &FrequencyResponse,
    size: usize,
    codebook: &Codebook,
) -> Result<BeamformerPlan> {
    let mut layout = ClusterPlan::new(h.subcarriers(), size, 0)?;
    layout.bits_per_cluster = codebook.bits();
    Ok(constant_plan_inner(
        h,
        &layout,
        AnchorSource::Codebook(codebook),
    ))
}

fn constant_plan_inner(
    h: &FrequencyResponse,
    layout: &ClusterPlan,
    mut source: AnchorSource<'_>,
) -> BeamformerPlan {
    let mut plan = BeamformerPlan::new(h.antennas(), h.subcarriers(), SchemeTag::Constant);
    let mut diag = Diagnostics::default();
    let reps = quantize_anchors(
        h,
        (0..layout.clusters).map(|k| layout.representative(k)),
        &mut source,
        &mut diag,
    );
    for n in 0..layout.subcarriers {
        let k = (n / layout.size).min(layout.clusters - 1);
        plan.set(n, &reps[k]);
    }
    plan.feedback_bits = layout.beamformer_bits();
    plan.diagnostics = diag;
    plan
}

/// `((1-c)a + c e^{jθ} b) / ‖·‖`. Falls back to the nearer anchor when the
/// combination cancels; the flag reports the fallback.
pub fn interpolate_linear(
    a: &[Complex64],
    b: &[Complex64],
    c: f64,
    theta: f64,
) -> (Vec<Complex64>, bool) {
    let rot = Complex64::from_polar(c, theta);
    let y: Vec<Complex64> = a
        .iter()
        .zip(b)
        .map(|(x, z)| x * (1.0 - c) + z * rot)
        .collect();
    match linalg::normalized(&y, ZERO_NORM) {
        Some(v) => (v, false),
        None if c <= 0.5 => (a.to_vec(), true),
        None => (b.to_vec(), true),
    }
}

/// Phase chosen for one cluster by exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseChoice {
    pub index: usize,
    pub theta: f64,
    /// Received power `Σ |h† v(θ)|²` over the cluster at the chosen phase.
    pub objective: f64,
}

/// Received power of a linearly interpolated cluster starting at `start`.
pub fn linear_cluster_power(
    h: &FrequencyResponse,
    start: usize,
    span: usize,
    a: &[Complex64],
    b: &[Complex64],
    theta: f64,
) -> f64 {
    let mut total = linalg::gain(h.row(start), a);
    for m in 1..span {
        let (v, _) = interpolate_linear(a, b, m as f64 / span as f64, theta);
        total += linalg::gain(h.row(start + m), &v);
    }
    total
}

/// Maximizes the cluster's received power over the phase alphabet; ties go
/// to the smallest phase.
pub fn phase_search(
    h: &FrequencyResponse,
    start: usize,
    span: usize,
    a: &[Complex64],
    b: &[Complex64],
    phases: &PhaseCodebook,
) -> PhaseChoice {
    let mut best = PhaseChoice {
        index: 0,
        theta: 0.0,
        objective: f64::NEG_INFINITY,
    };
    for (i, theta) in phases.values().enumerate() {
        let obj = linear_cluster_power(h, start, span, a, b, theta);
        if obj > best.objective {
            best = PhaseChoice {
                index: i,
                theta,
                objective: obj,
            };
        }
    }
    best
}

/// Linear interpolation between consecutive cluster anchors.
pub fn linear_plan<R: Rng>(
    h: &FrequencyResponse,
    size: usize,
    total_bits: u64,
    mode: PhaseMode,
    rng: &mut R,
) -> Result<BeamformerPlan> {
    let layout = ClusterPlan::new(h.subcarriers(), size, total_bits)?;
    let mut diag = Diagnostics::default();
    let anchors = match anchor_codebook(rng, layout.bits_per_cluster, h.antennas())? {
        Some(cb) => quantize_anchors(
            h,
            (0..layout.clusters).map(|k| layout.anchor(k)),
            &mut AnchorSource::Codebook(&cb),
            &mut diag,
        ),
        None => quantize_anchors(
            h,
            (0..layout.clusters).map(|k| layout.anchor(k)),
            &mut AnchorSource::Random(rng),
            &mut diag,
        ),
    };
    let mut plan = linear_plan_from_anchors(h, &layout, &anchors, mode)?;
    plan.diagnostics += diag;
    Ok(plan)
}

/// Linear interpolation against a caller-supplied codebook.
pub fn linear_plan_with_codebook(
    h: &FrequencyResponse,
    size: usize,
    codebook: &Codebook,
    mode: PhaseMode,
) -> Result<BeamformerPlan> {
    let mut layout = ClusterPlan::new(h.subcarriers(), size, 0)?;
    layout.bits_per_cluster = codebook.bits();
    let mut diag = Diagnostics::default();
    let anchors = quantize_anchors(
        h,
        (0..layout.clusters).map(|k| layout.anchor(k)),
        &mut AnchorSource::Codebook(codebook),
        &mut diag,
    );
    let mut plan = linear_plan_from_anchors(h, &layout, &anchors, mode)?;
    plan.diagnostics += diag;
    Ok(plan)
}

/// Fills a linear plan given the quantized anchor of every cluster.
pub fn linear_plan_from_anchors(
    h: &FrequencyResponse,
    layout: &ClusterPlan,
    anchors: &[Vec<Complex64>],
    mode: PhaseMode,
) -> Result<BeamformerPlan> {
    if anchors.len() != layout.clusters {
        return Err(Error::DimensionMismatch(format!(
            "{} anchors for {} clusters",
            anchors.len(),
            layout.clusters
        )));
    }
    let (tag, phase_bits) = match mode {
        PhaseMode::Search(p) => (
            SchemeTag::LinearSearch,
            layout.clusters as u64 * p.feedback_bits() as u64,
        ),
        PhaseMode::ClosedForm(_) => (SchemeTag::LinearClosedForm, 0),
    };
    let mut plan = BeamformerPlan::new(h.antennas(), h.subcarriers(), tag);
    let mut diag = Diagnostics::default();
    let mut closed_form_cache: Vec<(usize, Vec<f64>)> = Vec::new();
    for k in 0..layout.clusters {
        let start = layout.anchor(k);
        let span = layout.span(k);
        let a = &anchors[k];
        let b = &anchors[(k + 1) % layout.clusters];
        plan.set(start, a);
        let thetas: Vec<f64> = match mode {
            PhaseMode::Search(p) => vec![phase_search(h, start, span, a, b, &p).theta; span],
            PhaseMode::ClosedForm(formula) => {
                if let Some((_, t)) = closed_form_cache.iter().find(|(s, _)| *s == span) {
                    t.clone()
                } else {
                    let mut t = vec![0.0; span];
                    for (m, slot) in t.iter_mut().enumerate().skip(1) {
                        let r = phase_rotation_closed_form(
                            formula,
                            m,
                            span,
                            h.taps(),
                            h.subcarriers(),
                            h.antennas(),
                        );
                        diag.clamp_events += r.clamped as u64;
                        diag.degenerate_phases += r.degenerate as u64;
                        *slot = r.theta;
                    }
                    closed_form_cache.push((span, t.clone()));
                    t
                }
            }
        };
        for (m, &theta) in thetas.iter().enumerate().take(span).skip(1) {
            let (v, fell_back) = interpolate_linear(a, b, m as f64 / span as f64, theta);
            diag.zero_norm_fallbacks += fell_back as u64;
            plan.set(start + m, &v);
        }
    }
    plan.feedback_bits = layout.beamformer_bits() + phase_bits;
    plan.diagnostics = diag;
    Ok(plan)
}

/// Lagrange basis on the integer nodes `-R/2..=R/2` evaluated at `c`.
///
/// For `R = 2` this is `(c(c-1)/2, -(c-1)(c+1), c(c+1)/2)`.
pub fn lagrange_weights(order: usize, c: f64) -> Vec<f64> {
    let half = (order / 2) as i64;
    let nodes: Vec<f64> = (-half..=half).map(|s| s as f64).collect();
    nodes
        .iter()
        .map(|&xi| {
            nodes
                .iter()
                .filter(|&&xj| xj != xi)
                .map(|&xj| (c - xj) / (xi - xj))
                .product()
        })
        .collect()
}

/// `y / ‖y‖` with `y = Σ_s α_s e^{jθ_s} v_s`, where `phases` holds the
/// rotations of every anchor except the centre one. Falls back to the anchor
/// whose node is nearest `c`.
pub fn interpolate_higher(
    anchors: &[&[Complex64]],
    weights: &[f64],
    phases: &[f64],
    c: f64,
) -> (Vec<Complex64>, bool) {
    let centre = anchors.len() / 2;
    let dim = anchors[0].len();
    let mut y = vec![Complex64::new(0.0, 0.0); dim];
    let mut p = phases.iter();
    for (s, (v, &w)) in anchors.iter().zip(weights).enumerate() {
        let coef = if s == centre {
            Complex64::new(w, 0.0)
        } else {
            Complex64::from_polar(w, *p.next().expect("one phase per outer anchor"))
        };
        for (yi, vi) in y.iter_mut().zip(v.iter()) {
            *yi += vi * coef;
        }
    }
    match linalg::normalized(&y, ZERO_NORM) {
        Some(v) => (v, false),
        None => {
            let nearest =
                (c.round() as i64 + centre as i64).clamp(0, anchors.len() as i64 - 1) as usize;
            (anchors[nearest].to_vec(), true)
        }
    }
}

/// Phase set chosen for one higher-order cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSet {
    /// Alphabet indices, outer anchors in order `-R/2..-1, 1..R/2`.
    pub indices: Vec<usize>,
    pub objective: f64,
}

fn higher_cluster_power(
    h: &FrequencyResponse,
    start: usize,
    span: usize,
    anchors: &[&[Complex64]],
    order: usize,
    phases: &[f64],
) -> f64 {
    let centre = anchors[order / 2];
    let mut total = linalg::gain(h.row(start), centre);
    for m in 1..span {
        let c = m as f64 / span as f64;
        let (v, _) = interpolate_higher(anchors, &lagrange_weights(order, c), phases, c);
        total += linalg::gain(h.row(start + m), &v);
    }
    total
}

/// Exhaustive search over `Θ^R` for one cluster; the first maximizer in
/// lexicographic index order wins.
pub fn higher_order_phase_search(
    h: &FrequencyResponse,
    start: usize,
    span: usize,
    anchors: &[&[Complex64]],
    order: usize,
    phases: &PhaseCodebook,
) -> PhaseSet {
    let p = phases.levels();
    let mut idx = vec![0usize; order];
    let mut best = PhaseSet {
        indices: idx.clone(),
        objective: f64::NEG_INFINITY,
    };
    let mut theta = vec![0.0; order];
    loop {
        for (t, &i) in theta.iter_mut().zip(&idx) {
            *t = phases.value(i);
        }
        let obj = higher_cluster_power(h, start, span, anchors, order, &theta);
        if obj > best.objective {
            best = PhaseSet {
                indices: idx.clone(),
                objective: obj,
            };
        }
        // odometer, last position fastest
        let mut pos = order;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < p {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Interpolation of even order `R` over `R + 1` consecutive anchors with one
/// searched phase per outer anchor and cluster.
pub fn higher_order_plan<R: Rng>(
    h: &FrequencyResponse,
    size: usize,
    total_bits: u64,
    order: usize,
    phases: &PhaseCodebook,
    rng: &mut R,
) -> Result<BeamformerPlan> {
    let layout = ClusterPlan::new(h.subcarriers(), size, total_bits)?;
    check_order(order, &layout)?;
    let mut diag = Diagnostics::default();
    let anchors = match anchor_codebook(rng, layout.bits_per_cluster, h.antennas())? {
        Some(cb) => quantize_anchors(
            h,
            (0..layout.clusters).map(|k| layout.anchor(k)),
            &mut AnchorSource::Codebook(&cb),
            &mut diag,
        ),
        None => quantize_anchors(
            h,
            (0..layout.clusters).map(|k| layout.anchor(k)),
            &mut AnchorSource::Random(rng),
            &mut diag,
        ),
    };
    let mut plan = higher_order_plan_from_anchors(h, &layout, &anchors, order, phases)?;
    plan.diagnostics += diag;
    Ok(plan)
}

/// Higher-order interpolation against a caller-supplied codebook.
pub fn higher_order_plan_with_codebook(
    h: &FrequencyResponse,
    size: usize,
    codebook: &Codebook,
    order: usize,
    phases: &PhaseCodebook,
) -> Result<BeamformerPlan> {
    let mut layout = ClusterPlan::new(h.subcarriers(), size, 0)?;
    layout.bits_per_cluster = codebook.bits();
    check_order(order, &layout)?;
    let mut diag = Diagnostics::default();
    let anchors = quantize_anchors(
        h,
        (0..layout.clusters).map(|k| layout.anchor(k)),
        &mut AnchorSource::Codebook(codebook),
        &mut diag,
    );
    let mut plan = higher_order_plan_from_anchors(h, &layout, &anchors, order, phases)?;
    plan.diagnostics += diag;
    Ok(plan)
}

fn check_order(order: usize, layout: &ClusterPlan) -> Result<()> {
    if order < 2 || !order.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "interpolation order R={order} must be even and at least 2"
        )));
    }
    if order + 1 > layout.clusters {
        return Err(Error::invalid(format!(
            "order R={order} needs {} anchors but only K={} clusters exist",
            order + 1,
            layout.clusters
        )));
    }
    Ok(())
}

/// Fills a higher-order plan given the quantized anchor of every cluster.
pub fn higher_order_plan_from_anchors(
    h: &FrequencyResponse,
    layout: &ClusterPlan,
    anchors: &[Vec<Complex64>],
    order: usize,
    phases: &PhaseCodebook,
) -> Result<BeamformerPlan> {
    check_order(order, layout)?;
    if anchors.len() != layout.clusters {
        return Err(Error::DimensionMismatch(format!(
            "{} anchors for {} clusters",
            anchors.len(),
            layout.clusters
        )));
    }
    let k_total = layout.clusters as i64;
    let half = (order / 2) as i64;
    let mut plan = BeamformerPlan::new(h.antennas(), h.subcarriers(), SchemeTag::HigherOrder);
    let mut diag = Diagnostics::default();
    for k in 0..layout.clusters {
        let start = layout.anchor(k);
        let span = layout.span(k);
        let window: Vec<&[Complex64]> = (-half..=half)
            .map(|s| anchors[(k as i64 + s).rem_euclid(k_total) as usize].as_slice())
            .collect();
        let best = higher_order_phase_search(h, start, span, &window, order, phases);
        let theta: Vec<f64> = best.indices.iter().map(|&i| phases.value(i)).collect();
        plan.set(start, window[order / 2]);
        for m in 1..span {
            let c = m as f64 / span as f64;
            let (v, fell_back) =
                interpolate_higher(&window, &lagrange_weights(order, c), &theta, c);
            diag.zero_norm_fallbacks += fell_back as u64;
            plan.set(start + m, &v);
        }
    }
    plan.feedback_bits = layout.beamformer_bits()
        + layout.clusters as u64 * order as u64 * phases.feedback_bits() as u64;
    plan.diagnostics = diag;
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// `v_n = h̄_n`, infinite feedback.
    Perfect,
    /// Independent isotropic vector per subcarrier, zero feedback.
    Random,
}

pub fn baseline_plan<R: Rng>(kind: Baseline, h: &FrequencyResponse, rng: &mut R) -> BeamformerPlan {
    let tag = match kind {
        Baseline::Perfect => SchemeTag::Perfect,
        Baseline::Random => SchemeTag::Random,
    };
    let mut plan = BeamformerPlan::new(h.antennas(), h.subcarriers(), tag);
    let mut diag = Diagnostics::default();
    for n in 0..h.subcarriers() {
        let v = match kind {
            Baseline::Perfect => direction_or_e1(h, n, &mut diag),
            Baseline::Random => linalg::isotropic_unit(rng, h.antennas()),
        };
        plan.set(n, &v);
    }
    plan.diagnostics = diag;
    plan
}
