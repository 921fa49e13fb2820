//! Tangential almost-geodesics: construction, terminal depth and certification.

use std::cell::Cell;

use num_complex::Complex64;
use ode_solvers::{Dopri5, System, Vector1};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{CPoint, CVector, DomainOracle};
use crate::metric::{
    exact_halfplane_distance, gromov_exact, kdist_bounds, segment_lengths, segment_upper,
    BoundInterval, DistanceGrid, LengthMode,
};
use crate::numeric::brent_root;
use crate::profiles::Profile;

/// How a sampled curve was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveOrigin {
    /// Solution of the tangential balance ODE.
    Tangential { c: f64, f0: f64, span: f64 },
    /// Any other polyline.
    Polyline,
}

/// One recorded sample γ(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveNode {
    pub t: f64,
    pub point: CPoint,
}

/// A curve in ℂ² sampled at increasing parameters in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    nodes: Vec<CurveNode>,
    origin: CurveOrigin,
}

impl SampledCurve {
    /// Parameters must start at 0, increase strictly and end at 1
    /// (a lone node at t = 0 is the constant curve).
    pub fn new(nodes: Vec<CurveNode>, origin: CurveOrigin) -> Result<Self> {
        let bad = |msg: &str| Err(LabError::BadParameters(format!("curve: {msg}")));
        let (Some(first), Some(last)) = (nodes.first(), nodes.last()) else {
            return bad("no nodes");
        };
        if first.t != 0.0 {
            return bad("first parameter must be 0");
        }
        if nodes.len() > 1 && last.t != 1.0 {
            return bad("last parameter must be 1");
        }
        if nodes.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return bad("parameters must increase strictly");
        }
        if nodes.iter().any(|n| !n.point.is_finite()) {
            return bad("non-finite point");
        }
        Ok(SampledCurve { nodes, origin })
    }

    /// Polyline through `points` with uniform parameters.
    pub fn from_points(points: &[CPoint]) -> Result<Self> {
        let n = points.len();
        let nodes = points
            .iter()
            .enumerate()
            .map(|(i, &point)| CurveNode {
                t: if n > 1 {
                    i as f64 / (n - 1) as f64
                } else {
                    0.0
                },
                point,
            })
            .collect();
        SampledCurve::new(nodes, CurveOrigin::Polyline)
    }

    pub fn nodes(&self) -> &[CurveNode] {
        &self.nodes
    }

    pub fn origin(&self) -> CurveOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn start(&self) -> CPoint {
        self.nodes[0].point
    }

    pub fn end(&self) -> CPoint {
        self.nodes[self.nodes.len() - 1].point
    }

    pub fn point(&self, i: usize) -> CPoint {
        self.nodes[i].point
    }

    /// γ(t) by linear interpolation between nodes.
    pub fn at(&self, t: f64) -> CPoint {
        let i = self.nodes.partition_point(|n| n.t <= t);
        if i == 0 {
            return self.start();
        }
        if i == self.nodes.len() {
            return self.end();
        }
        let (a, b) = (self.nodes[i - 1], self.nodes[i]);
        a.point.lerp(&b.point, (t - a.t) / (b.t - a.t))
    }
}

/// Whether the tangential construction stayed inside the working box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flag", rename_all = "snake_case")]
pub enum DepthStatus {
    Reached,
    Escaped { depth_cap: f64 },
}

/// Terminal value D of f for the tangential construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalDepth {
    pub f0: f64,
    pub c: f64,
    /// D when reached, otherwise the cap.
    pub depth: f64,
    pub status: DepthStatus,
}

impl TerminalDepth {
    pub fn reached(&self) -> bool {
        self.status == DepthStatus::Reached
    }
}

/// Outcome of a (λ, ε)-geodesic check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Certified,
    Refuted,
    Inconclusive,
}

/// Record of a (λ, ε)-geodesic check over a grid of parameter pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicCertificate {
    pub lambda_target: f64,
    pub epsilon_target: f64,
    /// sup over pairs of (length upper - ε) / distance lower.
    pub observed_sup_ratio: f64,
    /// max over pairs of (length lower - ε) / distance upper.
    pub refutation_ratio: f64,
    pub pair_grid_size: usize,
    pub status: CertificateStatus,
    /// (t1, t2) attaining the sup ratio.
    pub witness: (f64, f64),
}

/// Recorded samples per unit parameter.
const CURVE_SAMPLES: usize = 1024;

struct BalanceOde<'a> {
    oracle: &'a DomainOracle,
    c: f64,
    dir: CVector,
    span: f64,
    ln_cap: f64,
}

impl BalanceOde<'_> {
    fn point(&self, t: f64, f: f64) -> CPoint {
        CPoint::new(0.0, 0.0, f, 0.0).shifted(&self.dir, self.span * t)
    }

    /// d(ln f)/dt = span / (c·D_dir).
    fn rate(&self, t: f64, u: f64) -> Result<f64> {
        let d = self
            .oracle
            .directional_distance(&self.point(t, u.exp()), &self.dir)?;
        Ok(self.span / (self.c * d))
    }
}

impl System<f64, Vector1<f64>> for BalanceOde<'_> {
    fn system(&self, t: f64, y: &Vector1<f64>, dy: &mut Vector1<f64>) {
        dy[0] = self.rate(t, y[0]).unwrap_or(f64::NAN);
    }

    fn solout(&mut self, _t: f64, y: &Vector1<f64>, _dy: &Vector1<f64>) -> bool {
        y[0] > self.ln_cap || !y[0].is_finite()
    }
}

/// Solves f' = span·f / (c·δ(γ; dir)) for γ(t) = t·span·dir + (0, f(t)),
/// f(0) = f0, and samples γ at 1025 uniform parameters.
pub fn construct_tangential_geodesic(
    oracle: &DomainOracle,
    c: f64,
    f0: f64,
    dir: &CVector,
    span: f64,
) -> Result<SampledCurve> {
    let cap = oracle.depth_cap();
    if !(c > 0.0 && c.is_finite() && f0 > 0.0 && f0 < cap && span > 0.0 && span.is_finite()) {
        return Err(LabError::BadParameters(format!(
            "need c > 0, 0 < f0 < {cap}, span > 0; got {c}, {f0}, {span}"
        )));
    }
    let dir = dir.unit()?;
    let ode = BalanceOde {
        oracle,
        c,
        dir,
        span,
        ln_cap: cap.ln(),
    };
    let h = 1.0 / CURVE_SAMPLES as f64;
    let mut solver = Dopri5::new(ode, 0.0, 1.0, h, Vector1::new(f0.ln()), 1e-10, 1e-12);
    let outcome = solver.integrate();
    let (ts, us) = (
        solver.x_out().clone(),
        solver.y_out().iter().map(|y| y[0]).collect::<Vec<_>>(),
    );
    let ode = BalanceOde {
        oracle,
        c,
        dir,
        span,
        ln_cap: cap.ln(),
    };
    if let Err(e) = outcome {
        return Err(LabError::Numeric(format!("ode: {e}")));
    }
    let last_u = us.last().copied().unwrap_or(f64::NAN);
    let last_t = ts.last().copied().unwrap_or(0.0);
    if last_u > ode.ln_cap || last_t < 1.0 - 1e-12 {
        if let Some(e) = solver_failure(&ts, &us, &ode) {
            return Err(e);
        }
        return Err(LabError::EscapedDepthCap {
            t: last_t,
            depth: last_u.exp(),
        });
    }
    let nodes: Vec<CurveNode> = ts
        .iter()
        .zip(&us)
        .map(|(&t, &u)| CurveNode {
            t: if (t - 1.0).abs() < 1e-12 { 1.0 } else { t },
            point: ode.point(t, u.exp()),
        })
        .collect();
    let residual = ode_residual(&ode, &ts, &us)?;
    if residual > 1e-6 {
        return Err(LabError::Numeric(format!(
            "ODE residual {residual:e} above 1e-6"
        )));
    }
    SampledCurve::new(nodes, CurveOrigin::Tangential { c, f0, span })
}

fn solver_failure(ts: &[f64], us: &[f64], ode: &BalanceOde) -> Option<LabError> {
    ts.iter().zip(us).find_map(|(&t, &u)| {
        if u.is_nan() {
            ode.rate(t, u).err()
        } else {
            None
        }
    })
}

/// max |c·D·f'/f - 1| at the recorded nodes, with f'/f from fourth-order
/// differences of ln f on the uniform output grid.
fn ode_residual(ode: &BalanceOde, ts: &[f64], us: &[f64]) -> Result<f64> {
    let n = us.len();
    if n < 5 {
        return Ok(0.0);
    }
    let h = ts[1] - ts[0];
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let d = match i {
            0 => {
                (-25.0 * us[0] + 48.0 * us[1] - 36.0 * us[2] + 16.0 * us[3] - 3.0 * us[4])
                    / (12.0 * h)
            }
            1 => (-3.0 * us[0] - 10.0 * us[1] + 18.0 * us[2] - 6.0 * us[3] + us[4]) / (12.0 * h),
            _ if i == n - 2 => {
                (3.0 * us[n - 1] + 10.0 * us[n - 2] - 18.0 * us[n - 3] + 6.0 * us[n - 4]
                    - us[n - 5])
                    / (12.0 * h)
            }
            _ if i == n - 1 => {
                (25.0 * us[n - 1] - 48.0 * us[n - 2] + 36.0 * us[n - 3] - 16.0 * us[n - 4]
                    + 3.0 * us[n - 5])
                    / (12.0 * h)
            }
            _ => (us[i - 2] - 8.0 * us[i - 1] + 8.0 * us[i + 1] - us[i + 2]) / (12.0 * h),
        };
        let rate = ode.rate(ts[i], us[i])?;
        worst = worst.max((d / rate - 1.0).abs());
    }
    Ok(worst)
}

/// Solves ∫_{f0}^{D} Ψ⁻¹(y)/y dy = 1/c for D (model face direction (i, 0)).
pub fn predicted_terminal_depth(
    profile: &Profile,
    c: f64,
    f0: f64,
    depth_cap: f64,
) -> Result<TerminalDepth> {
    if !(c > 0.0 && f0 > 0.0 && f0 < depth_cap && depth_cap.is_finite()) {
        return Err(LabError::BadParameters(format!(
            "need c > 0 and 0 < f0 < depth_cap; got {c}, {f0}, {depth_cap}"
        )));
    }
    let target = 1.0 / c;
    // In s = ln y the integrand is Ψ⁻¹(e^s).
    let failure: Cell<Option<LabError>> = Cell::new(None);
    let integral = |ln_d: f64| -> f64 {
        let out = quadrature::double_exponential::integrate(
            |s| match profile.ln_inverse(s) {
                Ok(x) => x,
                Err(e) => {
                    failure.set(Some(e));
                    f64::NAN
                }
            },
            f0.ln(),
            ln_d,
            1e-12,
        );
        out.integral
    };
    let (lo, hi) = (f0.ln(), depth_cap.ln());
    let at_cap = integral(hi);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if at_cap < target {
        return Ok(TerminalDepth {
            f0,
            c,
            depth: depth_cap,
            status: DepthStatus::Escaped { depth_cap },
        });
    }
    let ln_d = brent_root(|s| integral(s) - target, lo, hi, 1e-14 * (1.0 + lo.abs()))?;
    Ok(TerminalDepth {
        f0,
        c,
        depth: ln_d.exp(),
        status: DepthStatus::Reached,
    })
}

/// max over the nodes of δ_Ω(γ(t)).
pub fn max_boundary_distance(oracle: &DomainOracle, curve: &SampledCurve) -> Result<f64> {
    curve.nodes().iter().try_fold(
        0.0f64,
        |m, n| Ok(m.max(oracle.boundary_distance(&n.point)?)),
    )
}

/// Relative rounding allowance when comparing ratios with λ.
pub const RATIO_ROUNDING: f64 = 1e-9;

/// Checks l(γ|[t1,t2]) ≤ λ·k(γ(t1), γ(t2)) + ε over a pair grid.
/// Certification pairs the length upper bound with the distance lower bound;
/// refutation pairs the length lower bound with a straight-segment upper bound.
pub fn certify_lambda_geodesic(
    oracle: &DomainOracle,
    curve: &SampledCurve,
    lambda: f64,
    epsilon: f64,
    pair_grid: usize,
) -> Result<GeodesicCertificate> {
    if pair_grid < 8 || !(lambda >= 1.0) || !(epsilon >= 0.0) {
        return Err(LabError::BadParameters(format!(
            "need pair_grid ≥ 8, λ ≥ 1, ε ≥ 0; got {pair_grid}, {lambda}, {epsilon}"
        )));
    }
    let segments = segment_lengths(oracle, curve, LengthMode::Refined)?;
    let mut prefix = vec![BoundInterval::zero()];
    for s in &segments {
        let last = prefix[prefix.len() - 1];
        prefix.push(last + *s);
    }
    let n = curve.len();
    let mut picks: Vec<usize> = (0..pair_grid)
        .map(|k| (k * (n - 1) + (pair_grid - 1) / 2) / (pair_grid - 1))
        .collect();
    picks.dedup();
    let depths = picks
        .iter()
        .map(|&i| oracle.boundary_distance(&curve.point(i)))
        .collect::<Result<Vec<_>>>()?;
    let factor = oracle.class().metric_factor();
    let mut sup = f64::NEG_INFINITY;
    let mut refute = f64::NEG_INFINITY;
    let mut witness = (0.0, 0.0);
    for a in 0..picks.len() {
        for b in a + 1..picks.len() {
            let (i, j) = (picks[a], picks[b]);
            let length = BoundInterval {
                lower: prefix[j].lower - prefix[i].lower,
                upper: prefix[j].upper - prefix[i].upper,
            };
            let k_lower = factor * (depths[b] / depths[a]).ln().abs();
            let ratio = (length.upper - epsilon) / k_lower.max(1e-12);
            if ratio > sup {
                sup = ratio;
                witness = (curve.nodes()[i].t, curve.nodes()[j].t);
            }
            let k_upper =
                segment_upper(oracle, &curve.point(i), &curve.point(j))?.min(length.upper);
            refute = refute.max((length.lower - epsilon) / k_upper);
        }
    }
    let slack = lambda * (1.0 + RATIO_ROUNDING);
    let status = if sup <= slack {
        CertificateStatus::Certified
    } else if refute > slack {
        CertificateStatus::Refuted
    } else {
        CertificateStatus::Inconclusive
    };
    Ok(GeodesicCertificate {
        lambda_target: lambda,
        epsilon_target: epsilon,
        observed_sup_ratio: sup,
        refutation_ratio: refute,
        pair_grid_size: picks.len(),
        status,
        witness,
    })
}

/// Source of two-sided Kobayashi distance estimates.
pub trait DistanceBounds {
    fn bounds(&self, z: &CPoint, w: &CPoint) -> Result<BoundInterval>;
}

/// Lower estimate paired with a graph path on a slice grid.
pub struct GridDistances<'a> {
    pub oracle: &'a DomainOracle,
    pub grid: &'a DistanceGrid,
}

impl DistanceBounds for GridDistances<'_> {
    fn bounds(&self, z: &CPoint, w: &CPoint) -> Result<BoundInterval> {
        kdist_bounds(self.oracle, z, w, self.grid)
    }
}

/// Exact distances of ℂ × {Re z2 > 0}, which only see the second coordinate.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfPlaneDistances;

impl DistanceBounds for HalfPlaneDistances {
    fn bounds(&self, z: &CPoint, w: &CPoint) -> Result<BoundInterval> {
        let d =
            exact_halfplane_distance(Complex64::new(z.re2, z.im2), Complex64::new(w.re2, w.im2))?;
        Ok(BoundInterval::point(d))
    }
}

/// A parameter where (z|γ(τ))_o = (w|γ(τ))_o.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancedPoint {
    pub tau: f64,
    pub point: CPoint,
    /// (z|x)_o / (w|x)_o from midpoints.
    pub ratio: f64,
    /// Midpoint estimate of (z|x)_o.
    pub gromov_zx: f64,
}

const BALANCE_TOL: f64 = 1e-3;
const BALANCE_SCAN: usize = 64;

/// Mean-value search for h(τ) = (z|γ(τ))_o / (w|γ(τ))_o = 1 on midpoint estimates,
/// with z = γ(0) and w = γ(1).
pub fn find_balanced_parameter(
    curve: &SampledCurve,
    o: &CPoint,
    distances: &impl DistanceBounds,
) -> Result<BalancedPoint> {
    let (z, w) = (curve.start(), curve.end());
    let zo = distances.bounds(&z, o)?.midpoint();
    let wo = distances.bounds(&w, o)?.midpoint();
    let products = |x: &CPoint| -> Result<(f64, f64)> {
        let xo = distances.bounds(x, o)?.midpoint();
        let zx = gromov_exact(zo, xo, distances.bounds(&z, x)?.midpoint());
        let wx = gromov_exact(wo, xo, distances.bounds(&w, x)?.midpoint());
        Ok((zx, wx))
    };
    let ratio = |(zx, wx): (f64, f64)| if wx > 0.0 { zx / wx } else { f64::INFINITY };
    let h0 = ratio(products(&z)?);
    let h1 = ratio(products(&w)?);
    if !(h0 >= 1.0 - BALANCE_TOL && h1 <= 1.0 + BALANCE_TOL) {
        return Err(LabError::BalanceViolation { h0, h1 });
    }
    let n = curve.len();
    let scan = BALANCE_SCAN.min(n - 1).max(1);
    let mut lo = (0.0, h0);
    let mut hi = (1.0, h1);
    for k in 1..=scan {
        let t = curve.nodes()[k * (n - 1) / scan].t;
        let h = ratio(products(&curve.at(t))?);
        if h <= 1.0 {
            hi = (t, h);
            break;
        }
        lo = (t, h);
    }
    let mut best = if (lo.1 - 1.0).abs() <= (hi.1 - 1.0).abs() {
        lo
    } else {
        hi
    };
    while hi.0 - lo.0 > 1e-13 && best.1 != 1.0 {
        let t = 0.5 * (lo.0 + hi.0);
        let h = ratio(products(&curve.at(t))?);
        if h > 1.0 {
            lo = (t, h);
        } else {
            hi = (t, h);
        }
        if (h - 1.0).abs() < (best.1 - 1.0).abs() {
            best = (t, h);
        }
    }
    if (best.1 - 1.0).abs() > BALANCE_TOL {
        return Err(LabError::BalanceViolation { h0: lo.1, h1: hi.1 });
    }
    let point = curve.at(best.0);
    let (zx, _) = products(&point)?;
    Ok(BalancedPoint {
        tau: best.0,
        point,
        ratio: best.1,
        gromov_zx: zx,
    })
}
