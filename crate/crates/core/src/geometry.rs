//! Model domains Ω_Ψ = {Re z2 > Ψ(Re z1)} and their boundary queries.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numeric::{brent_root, golden_min};
use crate::profiles::Profile;

/// A point of ℂ² stored as four real coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CPoint {
    pub re1: f64,
    pub im1: f64,
    pub re2: f64,
    pub im2: f64,
}

/// A direction in ℂ², same layout as [`CPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CVector {
    pub re1: f64,
    pub im1: f64,
    pub re2: f64,
    pub im2: f64,
}

impl CPoint {
    pub const fn new(re1: f64, im1: f64, re2: f64, im2: f64) -> Self {
        CPoint { re1, im1, re2, im2 }
    }

    /// The point (z1, z2) with both coordinates real.
    pub const fn real(x: f64, y: f64) -> Self {
        CPoint::new(x, 0.0, y, 0.0)
    }

    pub fn from_complex(z1: Complex64, z2: Complex64) -> Self {
        CPoint::new(z1.re, z1.im, z2.re, z2.im)
    }

    pub fn z1(&self) -> Complex64 {
        Complex64::new(self.re1, self.im1)
    }

    pub fn z2(&self) -> Complex64 {
        Complex64::new(self.re2, self.im2)
    }

    pub fn is_finite(&self) -> bool {
        self.re1.is_finite() && self.im1.is_finite() && self.re2.is_finite() && self.im2.is_finite()
    }

    /// z + α·v for complex α.
    pub fn offset(&self, v: &CVector, alpha: Complex64) -> CPoint {
        CPoint::from_complex(self.z1() + alpha * v.z1(), self.z2() + alpha * v.z2())
    }

    /// z + s·v for real s.
    pub fn shifted(&self, v: &CVector, s: f64) -> CPoint {
        CPoint::new(
            self.re1 + s * v.re1,
            self.im1 + s * v.im1,
            self.re2 + s * v.re2,
            self.im2 + s * v.im2,
        )
    }

    /// w - z as a vector.
    pub fn to(&self, w: &CPoint) -> CVector {
        CVector::new(
            w.re1 - self.re1,
            w.im1 - self.im1,
            w.re2 - self.re2,
            w.im2 - self.im2,
        )
    }

    pub fn dist(&self, w: &CPoint) -> f64 {
        self.to(w).norm()
    }

    /// Affine combination (1-t)·z + t·w.
    pub fn lerp(&self, w: &CPoint, t: f64) -> CPoint {
        self.shifted(&self.to(w), t)
    }
}

impl CVector {
    pub const fn new(re1: f64, im1: f64, re2: f64, im2: f64) -> Self {
        CVector { re1, im1, re2, im2 }
    }

    pub fn from_complex(v1: Complex64, v2: Complex64) -> Self {
        CVector::new(v1.re, v1.im, v2.re, v2.im)
    }

    pub fn z1(&self) -> Complex64 {
        Complex64::new(self.re1, self.im1)
    }

    pub fn z2(&self) -> Complex64 {
        Complex64::new(self.re2, self.im2)
    }

    pub fn norm(&self) -> f64 {
        (self.re1 * self.re1 + self.im1 * self.im1 + self.re2 * self.re2 + self.im2 * self.im2)
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> CVector {
        CVector::new(s * self.re1, s * self.im1, s * self.re2, s * self.im2)
    }

    pub fn mul(&self, a: Complex64) -> CVector {
        CVector::from_complex(a * self.z1(), a * self.z2())
    }

    pub fn add(&self, w: &CVector) -> CVector {
        CVector::new(
            self.re1 + w.re1,
            self.im1 + w.im1,
            self.re2 + w.re2,
            self.im2 + w.im2,
        )
    }

    pub fn sub(&self, w: &CVector) -> CVector {
        self.add(&w.scale(-1.0))
    }

    pub fn unit(&self) -> Result<CVector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Ok(self.scale(1.0 / n))
        } else {
            Err(LabError::ZeroDirection)
        }
    }

    /// Hermitian product ⟨u, v⟩ = u1·conj(v1) + u2·conj(v2).
    pub fn inner(&self, v: &CVector) -> Complex64 {
        self.z1() * v.z1().conj() + self.z2() * v.z2().conj()
    }
}

/// Which constant regime of the metric estimates applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityClass {
    #[default]
    Convex,
    CConvex,
}

impl ConvexityClass {
    /// Lower-bound constant of the pseudometric sandwich.
    pub fn metric_factor(&self) -> f64 {
        match self {
            ConvexityClass::Convex => 0.5,
            ConvexityClass::CConvex => 0.25,
        }
    }
}

/// Inner unit normal η and complex tangent X at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub normal: CVector,
    pub tangent: CVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceKind {
    /// The boundary is affine along the real tangent direction (a chord face).
    Affine,
    /// Only the imaginary-translation line i·X lies in the face.
    Translation,
}

/// A segment {base + s·direction : s ∈ [0, extent]} inside the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceSegment {
    pub base: CPoint,
    pub direction: CVector,
    pub extent: f64,
    pub kind: FaceKind,
}

impl FaceSegment {
    pub fn point(&self, s: f64) -> CPoint {
        self.base.shifted(&self.direction, s)
    }

    pub fn midpoint(&self) -> CPoint {
        self.point(0.5 * self.extent)
    }

    /// Euclidean distance from z to the segment.
    pub fn distance_to(&self, z: &CPoint) -> f64 {
        let d = self.direction;
        let s = self.base.to(z).inner(&d).re / d.inner(&d).re;
        z.dist(&self.point(s.clamp(0.0, self.extent)))
    }
}

/// The domain Ω_Ψ together with its numeric settings.
#[derive(Debug, Clone)]
pub struct DomainOracle {
    profile: Profile,
    class: ConvexityClass,
    depth_cap: f64,
    root_tol: f64,
    phase_grid_count: usize,
}

impl DomainOracle {
    pub fn new(profile: Profile) -> Self {
        DomainOracle {
            profile,
            class: ConvexityClass::Convex,
            depth_cap: 10.0,
            root_tol: 1e-10,
            phase_grid_count: 128,
        }
    }

    pub fn with_class(mut self, class: ConvexityClass) -> Self {
        self.class = class;
        self
    }

    pub fn with_depth_cap(mut self, depth_cap: f64) -> Result<Self> {
        if !(depth_cap > 0.0 && depth_cap.is_finite()) {
            return Err(LabError::BadParameters(format!(
                "depth_cap must be positive, got {depth_cap}"
            )));
        }
        self.depth_cap = depth_cap;
        Ok(self)
    }

    pub fn with_tolerances(mut self, root_tol: f64, phase_grid_count: usize) -> Result<Self> {
        if !(root_tol > 0.0) || phase_grid_count < 8 {
            return Err(LabError::BadParameters(format!(
                "need root_tol > 0 and at least 8 phases, got {root_tol}, {phase_grid_count}"
            )));
        }
        self.root_tol = root_tol;
        self.phase_grid_count = phase_grid_count;
        Ok(self)
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn class(&self) -> ConvexityClass {
        self.class
    }

    pub fn depth_cap(&self) -> f64 {
        self.depth_cap
    }

    pub fn root_tol(&self) -> f64 {
        self.root_tol
    }

    pub fn phase_grid_count(&self) -> usize {
        self.phase_grid_count
    }

    /// Farthest |α| searched along a complex line.
    pub fn reach(&self) -> f64 {
        10.0 * self.depth_cap
    }

    /// Re z2 > Ψ(Re z1).
    pub fn contains(&self, z: &CPoint) -> bool {
        z.is_finite() && z.re2 > self.profile.eval(z.re1)
    }

    fn require_inside(&self, z: &CPoint) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(LabError::PointOutsideDomain {
                re2: z.re2,
                profile: self.profile.eval(z.re1),
            })
        }
    }

    /// Vertical gap Re z2 - Ψ(Re z1).
    pub fn height(&self, z: &CPoint) -> f64 {
        z.re2 - self.profile.eval(z.re1)
    }

    /// Nearest point of the profile graph to (Re z1, Re z2): (x, distance).
    fn nearest_graph_point(&self, z: &CPoint) -> Result<(f64, f64)> {
        self.require_inside(z)?;
        let (a, b) = (z.re1, z.re2);
        let gap = b - self.profile.eval(a);
        let psi = &self.profile;
        let phi = |x: f64| {
            let dy = psi.eval(x) - b;
            (x - a) * (x - a) + dy * dy
        };
        let samples = 256usize;
        let h = 2.0 * gap / samples as f64;
        let xs: Vec<f64> = (0..=samples).map(|i| a - gap + i as f64 * h).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
        let best_sample = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut candidates = Vec::new();
        for i in 0..=samples {
            let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
            let right = if i < samples {
                vals[i + 1]
            } else {
                f64::INFINITY
            };
            if vals[i] <= left && vals[i] <= right && vals[i] <= best_sample * 4.0 + 1e-300 {
                let lo = if i > 0 { xs[i - 1] } else { xs[i] };
                let hi = if i < samples { xs[i + 1] } else { xs[i] };
                let (x, v) = if hi > lo {
                    golden_min(phi, lo, hi, 1e-14 * gap.max(1e-300))
                } else {
                    (xs[i], vals[i])
                };
                let (x, v) = if vals[i] < v {
                    (xs[i], vals[i])
                } else {
                    (x, v)
                };
                let (x, v) = self
                    .polish_foot(a, b, lo, hi)
                    .filter(|p| p.1 <= v)
                    .unwrap_or((x, v));
                candidates.push((x, v.sqrt()));
            }
        }
        let dmin = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let tied = candidates
            .into_iter()
            .filter(|c| c.1 <= dmin * (1.0 + 1e-12));
        let pick = tied
            .min_by(|p, q| {
                let key = |x: f64| {
                    (
                        x.abs(),
                        if a == 0.0 {
                            x < 0.0
                        } else {
                            x.signum() != a.signum()
                        },
                    )
                };
                let (kp, kq) = (key(p.0), key(q.0));
                kp.0.total_cmp(&kq.0).then(kp.1.cmp(&kq.1))
            })
            .ok_or_else(|| LabError::Numeric("no boundary candidate".into()))?;
        Ok(pick)
    }

    /// Root of the first-order condition (x - a) + (Ψ(x) - b)Ψ'(x) = 0 in [lo, hi].
    fn polish_foot(&self, a: f64, b: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let psi = &self.profile;
        let grad = |x: f64| (x - a) + (psi.eval(x) - b) * psi.slopes(x).1;
        if !(hi > lo) || grad(lo) * grad(hi) > 0.0 {
            return None;
        }
        let x = brent_root(grad, lo, hi, 1e-16 * (1.0 + a.abs())).ok()?;
        let dy = psi.eval(x) - b;
        Some((x, (x - a) * (x - a) + dy * dy))
    }

    /// δ_Ω(z): Euclidean distance to the boundary.
    pub fn boundary_distance(&self, z: &CPoint) -> Result<f64> {
        Ok(self.nearest_graph_point(z)?.1)
    }

    /// π_Ω(z): a nearest boundary point.
    pub fn boundary_project(&self, z: &CPoint) -> Result<CPoint> {
        let (x, _) = self.nearest_graph_point(z)?;
        Ok(CPoint::new(x, z.im1, self.profile.eval(x), z.im2))
    }

    /// δ_Ω(z; v) = inf{|α| : z + αv ∈ ∂Ω}; `f64::INFINITY` when the complex
    /// line does not reach the boundary within the working box.
    pub fn directional_distance(&self, z: &CPoint, v: &CVector) -> Result<f64> {
        self.require_inside(z)?;
        let nv = v.norm();
        if !(nv > 0.0) {
            return Err(LabError::ZeroDirection);
        }
        let (n1, n2) = (v.z1().norm(), v.z2().norm());
        if n2 == 0.0 {
            let d = match self.profile.inverse(z.re2) {
                Ok(x) => (x - z.re1.abs()) / n1,
                Err(_) => f64::INFINITY,
            };
            return Ok(if d > self.reach() {
                f64::INFINITY
            } else {
                d.max(0.0)
            });
        }
        if n1 == 0.0 {
            return Ok(self.height(z) / n2);
        }
        Ok(self.directional_distance_generic(z, v))
    }

    /// Phase-grid search over arg α, root finding along each ray, then a
    /// golden-section refinement of the phase.
    pub fn directional_distance_generic(&self, z: &CPoint, v: &CVector) -> f64 {
        let reach = self.reach() / v.norm();
        let n = self.phase_grid_count;
        let mut best = reach;
        let mut best_theta = None;
        for k in 0..n {
            let theta = TAU * k as f64 / n as f64;
            if let Some(r) = self.ray_hit(z, v, theta, best) {
                best = r;
                best_theta = Some(theta);
            }
        }
        let Some(theta0) = best_theta else {
            return f64::INFINITY;
        };
        let step = TAU / n as f64;
        let objective = |theta: f64| self.ray_hit(z, v, theta, reach).unwrap_or(f64::INFINITY);
        let (_, refined) = golden_min(objective, theta0 - step, theta0 + step, 1e-7);
        best.min(refined)
    }

    /// First |α| along α = r·e^{iθ} where z + αv leaves the domain, if ≤ r_max.
    fn ray_hit(&self, z: &CPoint, v: &CVector, theta: f64, r_max: f64) -> Option<f64> {
        let e = Complex64::from_polar(1.0, theta);
        let u1 = (e * v.z1()).re;
        let u2 = (e * v.z2()).re;
        let g = |r: f64| z.re2 + r * u2 - self.profile.eval(z.re1 + r * u1);
        if g(r_max) > 0.0 {
            return None;
        }
        let tol = self.root_tol * 1e-2;
        Some(bisect_hit(g, r_max, tol))
    }

    /// Inner unit normal and complex tangent at a boundary point.
    pub fn normal_tangent_frame(&self, p: &CPoint) -> Result<Frame> {
        self.require_boundary(p)?;
        let m = self.smooth_slope(p.re1)?;
        let n = (1.0 + m * m).sqrt();
        Ok(Frame {
            normal: CVector::new(-m / n, 0.0, 1.0 / n, 0.0),
            tangent: CVector::new(1.0 / n, 0.0, m / n, 0.0),
        })
    }

    /// Ψ'(x), or NonSmoothPoint where the one-sided slopes disagree.
    pub fn smooth_slope(&self, x: f64) -> Result<f64> {
        let (left, right) = self.profile.slopes(x);
        let scale = left.abs().max(right.abs());
        if (left - right).abs() > 1e-6 * scale {
            return Err(LabError::NonSmoothPoint { x, left, right });
        }
        Ok(0.5 * (left + right))
    }

    fn require_boundary(&self, p: &CPoint) -> Result<()> {
        let residual = (p.re2 - self.profile.eval(p.re1)).abs();
        if residual <= self.root_tol && p.is_finite() {
            Ok(())
        } else {
            Err(LabError::NotOnBoundary { residual })
        }
    }

    /// The face segment through p.
    pub fn face_segment(&self, p: &CPoint) -> Result<Option<FaceSegment>> {
        self.require_boundary(p)?;
        let frame = match self.normal_tangent_frame(p) {
            Ok(f) => f,
            Err(LabError::NonSmoothPoint { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let x = frame.tangent;
        if let Some((lo, hi)) = self.profile.affine_piece(p.re1) {
            let cap = self.depth_cap;
            let (lo, hi) = (lo.max(p.re1 - cap), hi.min(p.re1 + cap));
            let stretch = 1.0 / x.re1;
            let base = p.shifted(&x, (lo - p.re1) * stretch);
            let seg = FaceSegment {
                base,
                direction: x,
                extent: (hi - lo) * stretch,
                kind: FaceKind::Affine,
            };
            let ok = (0..=32)
                .all(|i| self.on_tangent_plane(p, &seg.point(seg.extent * i as f64 / 32.0)));
            return Ok(ok.then_some(seg));
        }
        let direction = x.mul(Complex64::i());
        let base = p.shifted(&direction, -0.5 * self.depth_cap);
        let seg = FaceSegment {
            base,
            direction,
            extent: self.depth_cap,
            kind: FaceKind::Translation,
        };
        let ok =
            (0..=32).all(|i| self.on_tangent_plane(p, &seg.point(seg.extent * i as f64 / 32.0)));
        Ok(ok.then_some(seg))
    }

    /// Whether q lies both on the boundary and on the real tangent hyperplane at p,
    /// compared in log space so that tiny profile values are not all "flat".
    fn on_tangent_plane(&self, p: &CPoint, q: &CPoint) -> bool {
        let m = self.profile.slope(p.re1);
        let rise = m * (q.re1 - p.re1);
        let tangent = p.re2 + rise;
        let tol = 1e-9 * p.re2.abs().max(rise.abs()).max(f64::MIN_POSITIVE);
        (q.re2 - tangent).abs() <= tol && (self.profile.eval(q.re1) - tangent).abs() <= tol
    }
}

/// Root of a concave g with g(0) > 0 ≥ g(r_max), to relative tolerance `tol`.
fn bisect_hit<G: Fn(f64) -> f64>(g: G, r_max: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, r_max);
    let (mut glo, mut ghi) = (g(lo), g(hi));
    let mut side = 0i32;
    for _ in 0..200 {
        if hi - lo <= tol * hi {
            break;
        }
        let denom = glo - ghi;
        let mut mid = if denom > 0.0 {
            lo + (hi - lo) * glo / denom
        } else {
            0.5 * (lo + hi)
        };
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let gm = g(mid);
        if gm > 0.0 {
            lo = mid;
            glo = gm;
            if side == 1 {
                ghi *= 0.5;
            }
            side = 1;
        } else {
            hi = mid;
            ghi = gm;
            if side == -1 {
                glo *= 0.5;
            }
            side = -1;
        }
    }
    hi
}
