//! Even convex profiles Ψ defining the model domains, including the
//! piecewise-max profile Ψ₀ and its smoothed version Ψ∞.
//!
//! All kinds evaluate in log space first (`ln_eval`); `eval` exponentiates.
//! Profiles like `exp(-1/sqrt|x|)` underflow long before the dyadic nodes
//! used by the counterexample do.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numeric::{bisect_predicate, gauss_legendre};

/// Support radius of the bump used by [`Mollifier`], strictly inside (-1, 1).
const BUMP_RADIUS: f64 = 0.5;

/// Serializable description of a profile, as it appears in configs and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    ExpPower { alpha: f64, c: f64 },
    PiecewiseMax { alpha: f64, c: f64, j_max: usize },
    Mollified { alpha: f64, c: f64, j_max: usize },
    Flat,
    Wedge { slope: f64 },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Profile> {
        match *self {
            ProfileSpec::ExpPower { alpha, c } => Profile::exp_power(alpha, c),
            ProfileSpec::PiecewiseMax { alpha, c, j_max } => {
                build_piecewise_max(&Profile::exp_power(alpha, c)?, j_max)
            }
            ProfileSpec::Mollified { alpha, c, j_max } => {
                let psi0 = build_piecewise_max(&Profile::exp_power(alpha, c)?, j_max)?;
                mollify(&psi0, j_max)
            }
            ProfileSpec::Flat => Ok(Profile::Stub(Stub::Flat)),
            ProfileSpec::Wedge { slope } => {
                if !(slope > 0.0 && slope.is_finite()) {
                    return Err(LabError::BadParameters(format!("wedge slope {slope}")));
                }
                Ok(Profile::Stub(Stub::Wedge { slope }))
            }
        }
    }
}

/// A profile function Ψ: even, convex, Ψ(0) = 0, increasing on [0, ∞).
#[derive(Debug, Clone)]
pub enum Profile {
    ExpPower(ExpPower),
    PiecewiseMax(PiecewiseMax),
    Mollified(Mollified),
    Stub(Stub),
}

/// Degenerate profiles used to test the oracles against half-spaces and wedges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stub {
    /// Ψ ≡ 0.
    Flat,
    /// Ψ(x) = slope·|x|.
    Wedge { slope: f64 },
}

/// `exp(-c/|x|^alpha)` near the origin.
///
/// The formula stops being convex at its inflection point `x_c`; past it
/// the profile continues as the C² cubic `y_c + s·d + k·d³`, `d = |x| - x_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPower {
    alpha: f64,
    c: f64,
    x_c: f64,
    y_c: f64,
    slope_c: f64,
    cubic: f64,
}

impl ExpPower {
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 0.0 && c > 0.0 && alpha.is_finite() && c.is_finite()) {
            return Err(LabError::BadParameters(format!(
                "exp-power needs alpha, c > 0, got {alpha}, {c}"
            )));
        }
        let x_c = (c * alpha / (alpha + 1.0)).powf(1.0 / alpha);
        let y_c = (-c * x_c.powf(-alpha)).exp();
        let slope_c = y_c * c * alpha * x_c.powf(-alpha - 1.0);
        Ok(ExpPower {
            alpha,
            c,
            x_c,
            y_c,
            slope_c,
            cubic: slope_c / (x_c * x_c),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Where the exact formula hands over to the cubic continuation.
    pub fn inflection(&self) -> f64 {
        self.x_c
    }

    fn ln_eval(&self, ax: f64) -> f64 {
        if ax == 0.0 {
            f64::NEG_INFINITY
        } else if ax <= self.x_c {
            -self.c * ax.powf(-self.alpha)
        } else {
            let d = ax - self.x_c;
            (self.y_c + self.slope_c * d + self.cubic * d * d * d).ln()
        }
    }

    fn slope(&self, ax: f64) -> f64 {
        if ax == 0.0 {
            0.0
        } else if ax <= self.x_c {
            let ln = self.ln_eval(ax);
            (ln + (self.c * self.alpha).ln() - (self.alpha + 1.0) * ax.ln()).exp()
        } else {
            let d = ax - self.x_c;
            self.slope_c + 3.0 * self.cubic * d * d
        }
    }

    fn log_slope(&self, ax: f64) -> f64 {
        if ax <= self.x_c {
            self.c * self.alpha * ax.powf(-self.alpha - 1.0)
        } else {
            self.slope(ax) / self.ln_eval(ax).exp()
        }
    }

    fn inverse(&self, y: f64) -> f64 {
        if y == 0.0 {
            0.0
        } else if y <= self.y_c {
            (self.c / (-y.ln())).powf(1.0 / self.alpha)
        } else {
            let target = y - self.y_c;
            let mut hi = 1.0;
            while self.slope_c * hi + self.cubic * hi * hi * hi < target {
                hi *= 2.0;
            }
            let d = bisect_predicate(
                |d| self.slope_c * d + self.cubic * d * d * d >= target,
                0.0,
                hi,
                0.0,
            );
            self.x_c + d
        }
    }
}

/// Ψ₀ = max(Ψ, L_n : n even), L_n the chord of Ψ over [t_{n+1}, t_n], t_j = 2^-j.
#[derive(Debug, Clone)]
pub struct PiecewiseMax {
    base: Box<Profile>,
    j_max: usize,
    /// ln Ψ(t_j) for j = 0..=j_max+1.
    ln_nodes: Vec<f64>,
}

/// Dyadic node t_j = 2^-j.
pub fn dyadic(j: usize) -> f64 {
    (-(j as f64)).exp2()
}

impl PiecewiseMax {
    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn base(&self) -> &Profile {
        &self.base
    }

    /// Whether the chord L_n is part of the profile.
    pub fn has_chord(&self, n: usize) -> bool {
        n >= 2 && n.is_multiple_of(2) && n <= self.j_max
    }

    /// Indices n of all chords, increasing (so faces shrink toward 0).
    pub fn chords(&self) -> impl Iterator<Item = usize> + '_ {
        (2..=self.j_max).step_by(2)
    }

    /// ln Ψ(t_j).
    pub fn ln_node(&self, j: usize) -> f64 {
        self.ln_nodes[j]
    }

    /// Slope of the chord L_n.
    pub fn chord_slope(&self, n: usize) -> f64 {
        let (hi, lo) = (self.ln_nodes[n].exp(), self.ln_nodes[n + 1].exp());
        (hi - lo) / (dyadic(n) - dyadic(n + 1))
    }

    /// L_n(x)/Ψ(t_n) for any x (the chord extended affinely).
    fn chord_ratio(&self, n: usize, ax: f64) -> f64 {
        let rho = (self.ln_nodes[n + 1] - self.ln_nodes[n]).exp();
        let s = 2.0 * ax / dyadic(n) - 1.0;
        rho + (1.0 - rho) * s
    }

    /// Index j with t_{j+1} < ax ≤ t_j, or None when ax ≥ 1 or ax = 0.
    fn interval_of(ax: f64) -> Option<usize> {
        if !(ax > 0.0 && ax < 1.0) {
            return None;
        }
        let mut j = (-ax.log2()).floor().max(0.0) as usize;
        while j > 0 && dyadic(j) < ax {
            j -= 1;
        }
        while dyadic(j + 1) >= ax {
            j += 1;
        }
        Some(j)
    }

    fn ln_eval(&self, ax: f64) -> f64 {
        match Self::interval_of(ax) {
            Some(j) if self.has_chord(j) => self.ln_nodes[j] + self.chord_ratio(j, ax).ln(),
            _ => self.base.ln_eval(ax),
        }
    }

    /// Which piece governs the profile just left (`right = false`) or just
    /// right of `ax`: Some(chord index) or None for the base.
    fn piece(&self, ax: f64, right: bool) -> Option<usize> {
        let probe = if right {
            ax * (1.0 + 1e-15) + 1e-300
        } else {
            ax * (1.0 - 1e-15)
        };
        Self::interval_of(probe).filter(|&j| self.has_chord(j))
    }

    /// Chord interval [t_{n+1}, t_n] containing ax, if any.
    fn chord_at(&self, ax: f64) -> Option<usize> {
        Self::interval_of(ax).filter(|&j| self.has_chord(j) && ax > dyadic(j + 1) && ax < dyadic(j))
    }

    /// d/dx of ln L_n, from the right.
    fn chord_log_slope(&self, n: usize, ax: f64) -> f64 {
        let rho = (self.ln_nodes[n + 1] - self.ln_nodes[n]).exp();
        (1.0 - rho) * 2.0 / dyadic(n) / self.chord_ratio(n, ax)
    }

    fn log_slope(&self, ax: f64) -> f64 {
        match self.piece(ax, true) {
            Some(n) => self.chord_log_slope(n, ax),
            None => self.base.log_slope(ax),
        }
    }

    fn slopes(&self, ax: f64) -> (f64, f64) {
        let (bl, br) = self.base.slopes(ax);
        let left = match self.piece(ax, false) {
            Some(n) => self.chord_slope(n),
            None => bl,
        };
        let right = match self.piece(ax, true) {
            Some(n) => self.chord_slope(n),
            None => br,
        };
        (left, right)
    }
}

/// Smoothing kernel ρ: a normalized bump supported in [-1/2, 1/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    radius: f64,
    mass: f64,
}

impl Default for Mollifier {
    fn default() -> Self {
        let radius = BUMP_RADIUS;
        let mass = gauss_legendre(64)
            .iter()
            .map(|&(y, w)| w * bump(y * radius, radius))
            .sum::<f64>()
            * radius;
        Mollifier { radius, mass }
    }
}

fn bump(y: f64, radius: f64) -> f64 {
    let q = y / radius;
    if q.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - q * q)).exp()
    }
}

impl Mollifier {
    /// Half-width of the support.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// ρ(y), unit mass.
    pub fn rho(&self, y: f64) -> f64 {
        bump(y, self.radius) / self.mass
    }

    /// ρ_ε(y) = ρ(y/ε)/ε.
    pub fn rho_scaled(&self, y: f64, eps: f64) -> f64 {
        self.rho(y / eps) / eps
    }

    /// ∫ρ over its support by the 64-point rule.
    pub fn mass(&self) -> f64 {
        gauss_legendre(64)
            .iter()
            .map(|&(y, w)| w * self.rho(y * self.radius))
            .sum::<f64>()
            * self.radius
    }

    /// C_n = ∫|ρ^(n)|, by central differences on a fine grid.
    pub fn derivative_norm(&self, n: u32) -> f64 {
        let m = 20_000;
        let h = 2.0 * self.radius / m as f64;
        let d = 1e-3 * self.radius;
        let deriv = |y: f64| -> f64 {
            match n {
                0 => self.rho(y),
                1 => (self.rho(y + d) - self.rho(y - d)) / (2.0 * d),
                2 => (self.rho(y + d) - 2.0 * self.rho(y) + self.rho(y - d)) / (d * d),
                _ => {
                    (self.rho(y + 2.0 * d) - 2.0 * self.rho(y + d) + 2.0 * self.rho(y - d)
                        - self.rho(y - 2.0 * d))
                        / (2.0 * d * d * d)
                }
            }
        };
        (0..m)
            .map(|i| deriv(-self.radius + (i as f64 + 0.5) * h).abs() * h)
            .sum()
    }

    /// S_ε(u) = ∫ (u - εy)₊ ρ(y) dy, a smooth convex majorant of u₊ that
    /// equals u₊ once |u| ≥ ε·radius.
    pub fn smoothed_ramp(&self, u: f64, eps: f64) -> f64 {
        let a = self.radius;
        if u >= eps * a {
            return u;
        }
        if u <= -eps * a {
            return 0.0;
        }
        let top = u / eps;
        let (mid, half) = (0.5 * (top - a), 0.5 * (top + a));
        gauss_legendre(64)
            .iter()
            .map(|&(s, w)| {
                let y = mid + half * s;
                w * (u - eps * y) * self.rho(y)
            })
            .sum::<f64>()
            * half
    }

    /// dS_ε/du: the kernel's distribution function at u/ε.
    pub fn smoothed_ramp_slope(&self, u: f64, eps: f64) -> f64 {
        let a = self.radius;
        if u >= eps * a {
            return 1.0;
        }
        if u <= -eps * a {
            return 0.0;
        }
        let top = u / eps;
        let (mid, half) = (0.5 * (top - a), 0.5 * (top + a));
        gauss_legendre(64)
            .iter()
            .map(|&(s, w)| w * self.rho(mid + half * s))
            .sum::<f64>()
            * half
    }
}

/// One smoothing band around a kink t_j of Ψ₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    /// Kink index: the band is [3t_j/4, 5t_j/4].
    pub j: usize,
    /// Chord adjacent to the kink.
    pub chord: usize,
    /// Smoothing width in units of Ψ(t_chord).
    pub eps: f64,
}

impl Band {
    pub fn lo(&self) -> f64 {
        0.75 * dyadic(self.j)
    }

    pub fn hi(&self) -> f64 {
        1.25 * dyadic(self.j)
    }
}

/// Ψ∞: Ψ₀ with every kink smoothed inside its dyadic band.
#[derive(Debug, Clone)]
pub struct Mollified {
    psi0: PiecewiseMax,
    kernel: Mollifier,
    bands: Vec<Band>,
}

impl Mollified {
    pub fn psi0(&self) -> &PiecewiseMax {
        &self.psi0
    }

    pub fn kernel(&self) -> &Mollifier {
        &self.kernel
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    fn band_at(&self, ax: f64) -> Option<&Band> {
        if !(ax > 0.0 && ax < 1.5) {
            return None;
        }
        // Bands are disjoint and ordered by decreasing position.
        let j = (-(ax / 1.25).log2()).ceil().max(0.0) as usize;
        [j.saturating_sub(1), j, j + 1]
            .into_iter()
            .filter_map(|k| self.bands.iter().find(|b| b.j == k))
            .find(|b| ax >= b.lo() && ax <= b.hi())
    }

    /// (u, chord ratio) in units of Ψ(t_chord) at ax for the band.
    fn band_parts(&self, band: &Band, ax: f64) -> (f64, f64) {
        let ln_scale = self.psi0.ln_nodes[band.chord];
        let chord = self.psi0.chord_ratio(band.chord, ax);
        let base = (self.psi0.base.ln_eval(ax) - ln_scale).exp();
        (base - chord, chord)
    }

    fn ln_eval(&self, ax: f64) -> f64 {
        if let Some(band) = self.band_at(ax) {
            let (u, chord) = self.band_parts(band, ax);
            if u.abs() < band.eps * self.kernel.radius {
                let value = chord + self.kernel.smoothed_ramp(u, band.eps);
                // Below max(chord, base) only through cancellation.
                if value > chord.max(u + chord) {
                    return self.psi0.ln_nodes[band.chord] + value.ln();
                }
            }
        }
        self.psi0.ln_eval(ax)
    }

    /// The part of chord n left untouched by the smoothing, [lo, hi].
    pub fn flat_part(&self, n: usize) -> (f64, f64) {
        let a = self.kernel.radius;
        let zone = |j: usize| self.bands.iter().find(|b| b.j == j).copied();
        let inside = |band: Band, x: f64| self.band_parts(&band, x).0.abs() < band.eps * a;
        let (t_hi, t_lo) = (dyadic(n), dyadic(n + 1));
        let hi = match zone(n) {
            Some(b) => bisect_predicate(|x| inside(b, x), b.lo(), t_hi, 0.0),
            None => t_hi,
        };
        let lo = match zone(n + 1) {
            Some(b) => bisect_predicate(|x| !inside(b, x), t_lo, b.hi(), 0.0),
            None => t_lo,
        };
        (lo, hi)
    }

    fn log_slope(&self, ax: f64) -> f64 {
        if let Some(band) = self.band_at(ax) {
            let (u, chord) = self.band_parts(band, ax);
            if u.abs() < band.eps * self.kernel.radius {
                let value = chord + self.kernel.smoothed_ramp(u, band.eps);
                if value > chord.max(u + chord) {
                    // Everything in units of Ψ(t_chord).
                    let m = self.psi0.chord_log_slope(band.chord, ax) * chord;
                    let base = (u + chord) * self.psi0.base.log_slope(ax);
                    return (m + self.kernel.smoothed_ramp_slope(u, band.eps) * (base - m)) / value;
                }
            }
        }
        self.psi0.log_slope(ax)
    }

    fn slopes(&self, ax: f64) -> (f64, f64) {
        if let Some(band) = self.band_at(ax) {
            let (u, _) = self.band_parts(band, ax);
            if u.abs() < band.eps * self.kernel.radius {
                let m = self.psi0.chord_slope(band.chord);
                let base_slope = self.psi0.base.slopes(ax).1;
                let du = base_slope - m;
                let s = m + self.kernel.smoothed_ramp_slope(u, band.eps) * du;
                return (s, s);
            }
        }
        self.psi0.slopes(ax)
    }
}

impl Profile {
    pub fn exp_power(alpha: f64, c: f64) -> Result<Profile> {
        Ok(Profile::ExpPower(ExpPower::new(alpha, c)?))
    }

    /// ln Ψ(x); -∞ where Ψ vanishes.
    pub fn ln_eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        match self {
            Profile::ExpPower(p) => p.ln_eval(ax),
            Profile::PiecewiseMax(p) => p.ln_eval(ax),
            Profile::Mollified(p) => p.ln_eval(ax),
            Profile::Stub(Stub::Flat) => f64::NEG_INFINITY,
            Profile::Stub(Stub::Wedge { slope }) => (slope * ax).ln(),
        }
    }

    /// Ψ(x).
    pub fn eval(&self, x: f64) -> f64 {
        self.ln_eval(x).exp()
    }

    /// One-sided derivatives (Ψ'(x-), Ψ'(x+)).
    pub fn slopes(&self, x: f64) -> (f64, f64) {
        let ax = x.abs();
        let (l, r) = match self {
            Profile::ExpPower(p) => {
                let s = p.slope(ax);
                (s, s)
            }
            Profile::PiecewiseMax(p) => p.slopes(ax),
            Profile::Mollified(p) => p.slopes(ax),
            Profile::Stub(Stub::Flat) => (0.0, 0.0),
            Profile::Stub(Stub::Wedge { slope }) => {
                if ax == 0.0 {
                    (-slope, *slope)
                } else {
                    (*slope, *slope)
                }
            }
        };
        if x < 0.0 {
            (-r, -l)
        } else if x == 0.0 && l == r {
            (0.0, 0.0)
        } else {
            (l, r)
        }
    }

    /// Ψ'(x) where the one-sided slopes agree (their mean otherwise).
    pub fn slope(&self, x: f64) -> f64 {
        let (l, r) = self.slopes(x);
        0.5 * (l + r)
    }

    /// Ψ'(x+)/Ψ(x), finite where Ψ(x) underflows; 0 where Ψ vanishes identically.
    pub fn log_slope(&self, x: f64) -> f64 {
        let ax = x.abs();
        let s = match self {
            Profile::ExpPower(p) => p.log_slope(ax),
            Profile::PiecewiseMax(p) => p.log_slope(ax),
            Profile::Mollified(p) => p.log_slope(ax),
            Profile::Stub(Stub::Flat) => 0.0,
            Profile::Stub(Stub::Wedge { .. }) => 1.0 / ax,
        };
        if x < 0.0 {
            -s
        } else {
            s
        }
    }

    /// Maximal interval around x on which Ψ is affine, if x lies inside one.
    pub fn affine_piece(&self, x: f64) -> Option<(f64, f64)> {
        let ax = x.abs();
        let piece = match self {
            Profile::ExpPower(_) => None,
            Profile::Stub(Stub::Flat) => return Some((f64::NEG_INFINITY, f64::INFINITY)),
            Profile::Stub(Stub::Wedge { .. }) => (ax > 0.0).then_some((0.0, f64::INFINITY)),
            Profile::PiecewiseMax(p) => p.chord_at(ax).map(|n| (dyadic(n + 1), dyadic(n))),
            Profile::Mollified(m) => m
                .psi0
                .chord_at(ax)
                .map(|n| m.flat_part(n))
                .filter(|&(lo, hi)| ax > lo && ax < hi),
        }?;
        Some(if x < 0.0 { (-piece.1, -piece.0) } else { piece })
    }

    /// The unique x ≥ 0 with Ψ(x) = y.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(LabError::OutOfRange { value: y });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        match self {
            Profile::ExpPower(p) => Ok(p.inverse(y)),
            Profile::Stub(Stub::Flat) => Err(LabError::OutOfRange { value: y }),
            Profile::Stub(Stub::Wedge { slope }) => Ok(y / slope),
            _ => self.ln_inverse(y.ln()),
        }
    }

    /// The x ≥ 0 with ln Ψ(x) = ln_y, for targets that underflow as plain values.
    pub fn ln_inverse(&self, ln_y: f64) -> Result<f64> {
        if ln_y == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        let mut guard = 0;
        while self.ln_eval(hi) < ln_y {
            hi *= 2.0;
            guard += 1;
            if guard > 40 {
                return Err(LabError::OutOfRange { value: ln_y.exp() });
            }
        }
        Ok(bisect_predicate(|x| self.ln_eval(x) >= ln_y, 0.0, hi, 0.0))
    }

    /// Short human-readable tag used in reports.
    pub fn label(&self) -> String {
        match self {
            Profile::ExpPower(p) => format!("exp_power(alpha={}, c={})", p.alpha, p.c),
            Profile::PiecewiseMax(p) => {
                format!("piecewise_max(j_max={}, base={})", p.j_max, p.base.label())
            }
            Profile::Mollified(p) => format!(
                "mollified(j_max={}, base={})",
                p.psi0.j_max,
                p.psi0.base.label()
            ),
            Profile::Stub(Stub::Flat) => "flat".to_string(),
            Profile::Stub(Stub::Wedge { slope }) => format!("wedge(slope={slope})"),
        }
    }
}

/// Ψ₀ = max(base, L_n : n even, 2 ≤ n ≤ j_max).
pub fn build_piecewise_max(base: &Profile, j_max: usize) -> Result<Profile> {
    if j_max < 2 {
        return Err(LabError::BadParameters(format!(
            "j_max must be at least 2, got {j_max}"
        )));
    }
    if matches!(base, Profile::PiecewiseMax(_) | Profile::Mollified(_)) {
        return Err(LabError::BadParameters(
            "piecewise-max base must be a plain profile".into(),
        ));
    }
    let ln_nodes: Vec<f64> = (0..=j_max + 1).map(|j| base.ln_eval(dyadic(j))).collect();
    if ln_nodes.iter().any(|v| !v.is_finite()) {
        return Err(LabError::BadParameters(
            "base profile vanishes at a dyadic node".into(),
        ));
    }
    Ok(Profile::PiecewiseMax(PiecewiseMax {
        base: Box::new(base.clone()),
        j_max,
        ln_nodes,
    }))
}

/// Ψ∞: smooths every kink of Ψ₀ inside its band [3t_j/4, 5t_j/4].
pub fn mollify(psi0: &Profile, j_max: usize) -> Result<Profile> {
    let Profile::PiecewiseMax(p) = psi0 else {
        return Err(LabError::BadParameters(
            "mollify expects a piecewise-max profile".into(),
        ));
    };
    if j_max != p.j_max {
        return Err(LabError::BadParameters(format!(
            "j_max {j_max} does not match the profile's {}",
            p.j_max
        )));
    }
    let kernel = Mollifier::default();
    let mut bands = Vec::new();
    for n in p.chords() {
        for (j, far) in [(n, 0.625 * dyadic(n)), (n + 1, 1.5 * dyadic(n + 1))] {
            let t = dyadic(j);
            let u = |x: f64| -> f64 {
                let base = (p.base.ln_eval(x) - p.ln_nodes[n]).exp();
                (base - p.chord_ratio(n, x)).abs()
            };
            let gap = u(0.75 * t).min(u(1.25 * t)).min(u(far));
            let eps = 0.999 * gap / kernel.radius;
            if !(eps > 0.0) {
                return Err(LabError::BadParameters(format!(
                    "band {j} has no room to smooth"
                )));
            }
            bands.push(Band { j, chord: n, eps });
        }
    }
    Ok(Profile::Mollified(Mollified {
        psi0: p.clone(),
        kernel,
        bands,
    }))
}
