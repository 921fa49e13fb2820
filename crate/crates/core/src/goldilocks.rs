//! Boundary point classification through improper integrals of gauge functions.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{CPoint, CVector, DomainOracle, Frame};
use crate::numeric::{bisect_predicate, gauss_legendre};

/// Dyadic levels k = 0..=LEVELS.
pub const LEVELS: usize = 60;
/// Levels used to fit the decay of the increments.
const FIT_LEVELS: usize = 40;
/// Partial sums above this count as divergent outright.
const DIVERGENCE_SUM: f64 = 1e3;
/// Power-law decay exponents: summable at or above the first, divergent at
/// or below the second.
const CONVERGENT_EXPONENT: f64 = 1.2;
const DIVERGENT_EXPONENT: f64 = 1.05;
/// Largest increment ratio still read as geometric decay.
const GEOMETRIC_RATIO: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum IntegralStatus {
    /// Partial sum plus extrapolated tail.
    Convergent {
        value: f64,
    },
    /// Increments decay like k^-p with p ≤ 1 (or the sum is already huge).
    Divergent {
        decay_exponent: f64,
    },
    Inconclusive,
}

/// Three-valued decision on ∫_0^ε f(r) dr from its dyadic pieces
/// I_k = ∫ over [ε 2^{-k-1}, ε 2^{-k}].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralVerdict {
    pub status: IntegralStatus,
    pub epsilon: f64,
    pub increments: Vec<f64>,
    pub partial_sum: f64,
    /// Fitted p in I_k ≈ A (k + s)^-p, or None for geometric decay.
    pub decay_exponent: Option<f64>,
}

impl IntegralVerdict {
    pub fn is_convergent(&self) -> bool {
        matches!(self.status, IntegralStatus::Convergent { .. })
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self.status, IntegralStatus::Divergent { .. })
    }
}

/// Integrates each dyadic level in ln r with double-exponential quadrature
/// and reads convergence off the decay of the increments.
pub fn improper_integral_verdict<F>(integrand: F, epsilon: f64) -> Result<IntegralVerdict>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(LabError::BadParameters(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let failure: Cell<Option<LabError>> = Cell::new(None);
    let weighted = |s: f64| {
        let r = s.exp();
        match integrand(r) {
            Ok(v) if v.is_finite() && v >= 0.0 => v * r,
            Ok(_) => {
                failure.set(Some(LabError::NonFiniteIntegrand { x: r }));
                0.0
            }
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let ln2 = std::f64::consts::LN_2;
    let mut increments = Vec::with_capacity(LEVELS + 1);
    for k in 0..=LEVELS {
        let hi = epsilon.ln() - k as f64 * ln2;
        let lo = hi - ln2;
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let guess: f64 = gauss_legendre(16)
            .iter()
            .map(|&(x, w)| w * half * weighted(mid + half * x))
            .sum();
        let value = quadrature::double_exponential::integrate(
            weighted,
            lo,
            hi,
            1e-10 * guess.abs() + 1e-300,
        )
        .integral;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        increments.push(value.max(0.0));
    }
    let partial_sum: f64 = increments.iter().sum();
    let (status, decay_exponent) = decide(&increments, partial_sum);
    Ok(IntegralVerdict {
        status,
        epsilon,
        increments,
        partial_sum,
        decay_exponent,
    })
}

fn decide(increments: &[f64], partial_sum: f64) -> (IntegralStatus, Option<f64>) {
    let k_last = increments.len() - 1;
    let last = increments[k_last];
    if partial_sum > DIVERGENCE_SUM {
        return (
            IntegralStatus::Divergent {
                decay_exponent: 0.0,
            },
            None,
        );
    }
    if last == 0.0 {
        return (IntegralStatus::Convergent { value: partial_sum }, None);
    }
    let tail = &increments[k_last - 20..];
    if tail.contains(&0.0) {
        return (IntegralStatus::Inconclusive, None);
    }
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|&q| q <= GEOMETRIC_RATIO) {
        let q = ratios[ratios.len() - 1];
        return (
            IntegralStatus::Convergent {
                value: partial_sum + last * q / (1.0 - q),
            },
            None,
        );
    }
    let Some((ln_a, p, s)) = power_fit(increments) else {
        return (IntegralStatus::Inconclusive, None);
    };
    let status = if p >= CONVERGENT_EXPONENT {
        let tail = ln_a.exp() * (k_last as f64 + 0.5 + s).powf(1.0 - p) / (p - 1.0);
        IntegralStatus::Convergent {
            value: partial_sum + tail,
        }
    } else if p <= DIVERGENT_EXPONENT {
        IntegralStatus::Divergent { decay_exponent: p }
    } else {
        IntegralStatus::Inconclusive
    };
    (status, Some(p))
}

/// Least-squares fit of ln I_k = ln A - p ln(k + s) over the last FIT_LEVELS
/// levels, with the shift s scanned on a half-integer grid in [0, 64].
fn power_fit(increments: &[f64]) -> Option<(f64, f64, f64)> {
    let k_last = increments.len() - 1;
    let ks: Vec<usize> = (k_last - FIT_LEVELS..=k_last).collect();
    if ks.iter().any(|&k| !(increments[k] > 0.0)) {
        return None;
    }
    let ys: Vec<f64> = ks.iter().map(|&k| increments[k].ln()).collect();
    let n = ks.len() as f64;
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for i in 0..=128 {
        let s = 0.5 * i as f64;
        let xs: Vec<f64> = ks.iter().map(|&k| (k as f64 + s).ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let sse: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        if best.is_none_or(|b| sse < b.3) {
            best = Some((intercept, -slope, s, sse));
        }
    }
    best.map(|(a, p, s, _)| (a, p, s))
}

/// M_{Ω,p}(r) = δ_Ω(p + r η_p; X_p).
pub fn tangential_gauge(oracle: &DomainOracle, p: &CPoint, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < oracle.depth_cap()) {
        return Err(LabError::BadParameters(format!(
            "radius {r} outside (0, {})",
            oracle.depth_cap()
        )));
    }
    let frame = oracle.normal_tangent_frame(p)?;
    oracle.directional_distance(&p.shifted(&frame.normal, r), &frame.tangent)
}

/// A failed shape condition of the tangential gauge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeViolation {
    /// M at the midpoint of (r1, r2) falls below the chord by `deficit`.
    Concavity { r1: f64, r2: f64, deficit: f64 },
    /// M decreases from r1 to r2 below the largest sampled value.
    Monotonicity { r1: f64, r2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeShapeReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub violations: Vec<ShapeViolation>,
}

/// Midpoint concavity on consecutive radii and monotonicity up to the
/// largest sampled value.
pub fn gauge_shape_check(
    oracle: &DomainOracle,
    p: &CPoint,
    radii: &[f64],
) -> Result<GaugeShapeReport> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(LabError::BadParameters(
            "radii must be strictly increasing, at least two".into(),
        ));
    }
    let values = radii
        .iter()
        .map(|&r| tangential_gauge(oracle, p, r))
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    for (i, w) in radii.windows(2).enumerate() {
        let mid = tangential_gauge(oracle, p, 0.5 * (w[0] + w[1]))?;
        let chord = 0.5 * (values[i] + values[i + 1]);
        let tol = 1e-9 + oracle.root_tol() * chord.abs();
        if mid < chord - tol {
            violations.push(ShapeViolation::Concavity {
                r1: w[0],
                r2: w[1],
                deficit: chord - mid,
            });
        }
    }
    let peak = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > values[b] { i } else { b });
    for i in 0..peak {
        if values[i + 1] < values[i] - 1e-9 - oracle.root_tol() * values[i] {
            violations.push(ShapeViolation::Monotonicity {
                r1: radii[i],
                r2: radii[i + 1],
            });
        }
    }
    Ok(GaugeShapeReport {
        radii: radii.to_vec(),
        values,
        violations,
    })
}

/// Knobs of the sampled sup-gauges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Upper end ε of the criterion integrals.
    pub epsilon: f64,
    /// Radius of the neighbourhood U around p for the local test.
    pub neighborhood: f64,
    /// Shell base points on each side of p.
    pub shell_per_side: usize,
    /// Polar and phase counts of the direction sample (polar × phase directions).
    pub polar_samples: usize,
    pub phase_samples: usize,
    /// Gauge table nodes per halving of r.
    pub nodes_per_octave: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            epsilon: 1e-2,
            neighborhood: 0.1,
            shell_per_side: 8,
            polar_samples: 8,
            phase_samples: 8,
            nodes_per_octave: 2,
        }
    }
}

/// Unit directions cos θ X + sin θ e^{iφ} η with their normal weight sin θ,
/// sorted by θ. θ = 0 is a single complex line and appears once.
fn direction_sample(frame: &Frame, opts: &ClassifyOptions) -> Vec<(CVector, f64)> {
    let mut out = vec![(frame.tangent, 0.0)];
    for i in 1..opts.polar_samples {
        let theta = FRAC_PI_2 * i as f64 / opts.polar_samples as f64;
        for j in 0..opts.phase_samples {
            let phase =
                Complex64::from_polar(theta.sin(), TAU * j as f64 / opts.phase_samples as f64);
            out.push((
                frame
                    .tangent
                    .scale(theta.cos())
                    .add(&frame.normal.mul(phase)),
                theta.sin(),
            ));
        }
    }
    out
}

/// max over the sampled directions of δ(q + r η_q; v). The line along X_q
/// goes through `tangent_gap`, which needs no representable offset; the
/// supporting half-space at q gives δ ≤ r / sin θ for the others, which
/// prunes most of them. Unpruned directions at offsets lost to rounding are
/// skipped.
fn sup_delta(
    oracle: &DomainOracle,
    q: &CPoint,
    frame: &Frame,
    dirs: &[(CVector, f64)],
    r: f64,
) -> Result<f64> {
    let mut best = tangent_gap(oracle, q.re1, r.ln())?;
    let z = q.shifted(&frame.normal, r);
    let representable = oracle.height(&z) > 0.5 * r * frame.normal.re2;
    for (v, weight) in dirs {
        if *weight == 0.0 || r / weight <= best || !representable {
            continue;
        }
        best = best.max(oracle.directional_distance(&z, v)?);
    }
    Ok(best)
}

/// δ(q + r η_q; X_q) for the boundary point q over x0, computed in units of
/// Ψ(x0) when Ψ(x0) > 0. Along X_q the complex line of a tube domain only
/// meets the boundary where Ψ rises above the tangent line at x0 by r‖X‖.
fn tangent_gap(oracle: &DomainOracle, x0: f64, ln_r: f64) -> Result<f64> {
    let profile = oracle.profile();
    let ln_h = profile.ln_eval(x0);
    let reach = oracle.reach();
    if ln_h == f64::NEG_INFINITY {
        // Ψ vanishes at x0, so x0 = 0 and the tangent line is flat.
        let x = profile.ln_inverse(ln_r).unwrap_or(f64::INFINITY);
        let d = x - x0.abs();
        return Ok(if d > reach { f64::INFINITY } else { d.max(0.0) });
    }
    let ell = profile.log_slope(x0);
    let m = ell * ln_h.exp();
    let norm = (1.0 + m * m).sqrt();
    let threshold = (ln_r - ln_h).exp() * norm;
    let excess = |x: f64| (profile.ln_eval(x) - ln_h).exp_m1() - ell * (x - x0);
    let start = x0 - (ln_r + ln_h).exp() * ell / norm;
    // On an affine piece the excess vanishes exactly; rounding noise there
    // would swamp small thresholds, so the search starts at the piece ends.
    let piece = profile.affine_piece(x0);
    let side = |sign: f64| -> f64 {
        let base = match piece {
            Some((_, b)) if sign > 0.0 => (b - start).max(0.0),
            Some((a, _)) => (start - a).max(0.0),
            None => 0.0,
        };
        let (mut lo, mut step) = (base, 1e-9 * x0.abs().max(1e-300));
        while excess(start + sign * (base + step)) < threshold {
            lo = base + step;
            step *= 2.0;
            if step > reach {
                return f64::INFINITY;
            }
        }
        bisect_predicate(
            |d| excess(start + sign * d) >= threshold,
            lo,
            base + step,
            0.0,
        )
    };
    let d = norm * side(1.0).min(side(-1.0));
    Ok(if d > reach { f64::INFINITY } else { d })
}

/// Running sup of a gauge over r' ≤ r, tabulated on a geometric grid and
/// interpolated linearly in (ln r, ln g).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeTable {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl GaugeTable {
    /// `sample(r)` is evaluated at ε 2^{-i/m}, i = 0..=m(LEVELS + 2).
    fn build(opts: &ClassifyOptions, mut sample: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let m = opts.nodes_per_octave.max(1);
        let count = m * (LEVELS + 2) + 1;
        let mut radii: Vec<f64> = (0..count)
            .map(|i| opts.epsilon * (-(i as f64) / m as f64).exp2())
            .collect();
        radii.reverse();
        let mut values = Vec::with_capacity(count);
        let mut running: f64 = 0.0;
        for &r in &radii {
            running = running.max(sample(r)?);
            values.push(running);
        }
        Ok(GaugeTable { radii, values })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let i = self.radii.partition_point(|&x| x <= r);
        if i == 0 {
            return self.values[0];
        }
        if i == self.radii.len() {
            return self.values[i - 1];
        }
        let (r0, r1, g0, g1) = (
            self.radii[i - 1],
            self.radii[i],
            self.values[i - 1],
            self.values[i],
        );
        if g0 <= 0.0 || !g1.is_finite() {
            return g0 + (g1 - g0) * (r - r0) / (r1 - r0);
        }
        let t = (r / r0).ln() / (r1 / r0).ln();
        (g0.ln() + t * (g1 / g0).ln()).exp()
    }
}

/// sup over r' ≤ r and sampled v of δ(p_{r'}; v).
pub fn weakly_gauge(
    oracle: &DomainOracle,
    p: &CPoint,
    opts: &ClassifyOptions,
) -> Result<GaugeTable> {
    let frame = oracle.normal_tangent_frame(p)?;
    let dirs = direction_sample(&frame, opts);
    GaugeTable::build(opts, |r| sup_delta(oracle, p, &frame, &dirs, r))
}

/// Boundary points x_p ± ν 2^{-(i+1)/2} (i < shell_per_side) and p itself,
/// kept when smooth and inside the ν-ball around p.
pub fn shell_base_points(
    oracle: &DomainOracle,
    p: &CPoint,
    opts: &ClassifyOptions,
) -> Vec<(CPoint, Frame)> {
    let profile = oracle.profile();
    let mut out = Vec::new();
    let offsets = std::iter::once(0.0).chain((0..opts.shell_per_side).flat_map(|i| {
        let d = opts.neighborhood * (-((i + 1) as f64) / 2.0).exp2();
        [d, -d]
    }));
    for d in offsets {
        let x = p.re1 + d;
        let q = CPoint::new(x, p.im1, profile.eval(x), p.im2);
        if q.dist(p) > opts.neighborhood {
            continue;
        }
        if let Ok(frame) = oracle.normal_tangent_frame(&q) {
            out.push((q, frame));
        }
    }
    out
}

/// sup of δ(z; v) over sampled z with δ(z) ≤ r near p and sampled v.
pub fn neighborhood_gauge(
    oracle: &DomainOracle,
    p: &CPoint,
    opts: &ClassifyOptions,
) -> Result<GaugeTable> {
    let shell: Vec<_> = shell_base_points(oracle, p, opts)
        .into_iter()
        .map(|(q, f)| {
            let dirs = direction_sample(&f, opts);
            (q, f, dirs)
        })
        .collect();
    GaugeTable::build(opts, |r| {
        let mut best: f64 = 0.0;
        for (q, frame, dirs) in &shell {
            best = best.max(sup_delta(oracle, q, frame, dirs, r)?);
        }
        Ok(best)
    })
}

/// Tri-state outcome of one classification test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finding {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub point: CPoint,
    pub options: ClassifyOptions,
    /// Neighbourhood sup gauge N(r)/r.
    pub local_goldilocks: IntegralVerdict,
    /// Normal-ray sup gauge over r' ≤ r.
    pub weakly_goldilocks: IntegralVerdict,
    /// Tangential gauge M(r)/r.
    pub strongly_non_goldilocks: IntegralVerdict,
    pub is_local_goldilocks: Finding,
    pub is_weakly_goldilocks: Finding,
    pub is_strongly_non_goldilocks: Finding,
    /// Directions actually sampled per point (θ = 0 counted once).
    pub direction_count: usize,
    pub shell_point_count: usize,
}

impl ClassificationReport {
    /// One-line summary of the findings.
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        match self.is_local_goldilocks {
            Finding::Yes => parts.push("local goldilocks"),
            Finding::No => parts.push("not local goldilocks"),
            Finding::Unknown => {}
        }
        if self.is_weakly_goldilocks == Finding::Yes {
            parts.push("weakly goldilocks");
        }
        if self.is_strongly_non_goldilocks == Finding::Yes {
            parts.push("strongly non-goldilocks");
        }
        if parts.is_empty() {
            "inconclusive".to_string()
        } else {
            parts.join(", ")
        }
    }
}

fn finding(verdict: &IntegralVerdict, on_convergent: Finding, on_divergent: Finding) -> Finding {
    match verdict.status {
        IntegralStatus::Convergent { .. } => on_convergent,
        IntegralStatus::Divergent { .. } => on_divergent,
        IntegralStatus::Inconclusive => Finding::Unknown,
    }
}

pub fn classify_point(oracle: &DomainOracle, p: &CPoint) -> Result<ClassificationReport> {
    classify_point_with(oracle, p, &ClassifyOptions::default())
}

pub fn classify_point_with(
    oracle: &DomainOracle,
    p: &CPoint,
    opts: &ClassifyOptions,
) -> Result<ClassificationReport> {
    if !(opts.epsilon > 0.0 && opts.epsilon < oracle.depth_cap() && opts.neighborhood > 0.0) {
        return Err(LabError::BadParameters(format!(
            "bad classification options {opts:?}"
        )));
    }
    let frame = oracle.normal_tangent_frame(p)?;
    let strong =
        improper_integral_verdict(|r| Ok(tangential_gauge(oracle, p, r)? / r), opts.epsilon)?;
    let weak_table = weakly_gauge(oracle, p, opts)?;
    let weak = improper_integral_verdict(|r| Ok(weak_table.eval(r) / r), opts.epsilon)?;
    let local_table = neighborhood_gauge(oracle, p, opts)?;
    let local = improper_integral_verdict(|r| Ok(local_table.eval(r) / r), opts.epsilon)?;
    Ok(ClassificationReport {
        point: *p,
        options: *opts,
        is_local_goldilocks: finding(&local, Finding::Yes, Finding::No),
        is_weakly_goldilocks: finding(&weak, Finding::Yes, Finding::No),
        is_strongly_non_goldilocks: finding(&strong, Finding::No, Finding::Yes),
        local_goldilocks: local,
        weakly_goldilocks: weak,
        strongly_non_goldilocks: strong,
        direction_count: direction_sample(&frame, opts).len(),
        shell_point_count: shell_base_points(oracle, p, opts).len(),
    })
}

/// Offset along the normal used by `face_witness`, relative to Ψ(p′).
pub const FACE_WITNESS_RADIUS: f64 = 1e-8;

/// δ_Ω(p′ + r η; X/‖X‖) with r = FACE_WITNESS_RADIUS·Ψ(p′).
pub fn face_witness(oracle: &DomainOracle, p: &CPoint, x_face: &CVector) -> Result<f64> {
    face_witness_at(oracle, p, x_face, FACE_WITNESS_RADIUS)
}

/// As `face_witness` with r = relative_radius·Ψ(p′); works for faces far
/// below the f64 range.
pub fn face_witness_at(
    oracle: &DomainOracle,
    p: &CPoint,
    x_face: &CVector,
    relative_radius: f64,
) -> Result<f64> {
    let profile = oracle.profile();
    let ln_h = profile.ln_eval(p.re1);
    if !ln_h.is_finite() {
        return Err(LabError::BadParameters(format!(
            "face point needs Ψ(x) > 0, got x = {}",
            p.re1
        )));
    }
    let residual = (p.re2 - profile.eval(p.re1)).abs();
    if residual > oracle.root_tol() || !p.is_finite() {
        return Err(LabError::NotOnBoundary { residual });
    }
    if !(relative_radius > 0.0) {
        return Err(LabError::BadParameters(format!(
            "relative radius {relative_radius}"
        )));
    }
    let m = profile.log_slope(p.re1) * ln_h.exp();
    let v1 = x_face.z1();
    if v1.norm() == 0.0 || ((x_face.z2() / v1) - m).norm() > 1e-9 * (1.0 + m.abs()) {
        return Err(LabError::BadParameters(
            "direction is not tangent to the face".into(),
        ));
    }
    tangent_gap(oracle, p.re1, relative_radius.ln() + ln_h)
}
