//! Two-sided bounds on the Kobayashi-Royden metric, curve lengths,
//! Kobayashi distance and Gromov products.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geodesics::SampledCurve;
use crate::geometry::{CPoint, CVector, ConvexityClass, DomainOracle};
use crate::numeric::gauss_legendre;

/// A certified enclosure [lower, upper] of a nonnegative quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
}

impl BoundInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(LabError::Numeric(format!(
                "empty interval [{lower}, {upper}]"
            )));
        }
        Ok(BoundInterval { lower, upper })
    }

    pub fn point(value: f64) -> Self {
        BoundInterval {
            lower: value,
            upper: value,
        }
    }

    pub fn zero() -> Self {
        BoundInterval::point(0.0)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn is_point(&self) -> bool {
        self.lower == self.upper
    }

    /// upper / lower; infinite when lower is zero.
    pub fn ratio(&self) -> f64 {
        if self.lower > 0.0 {
            self.upper / self.lower
        } else {
            f64::INFINITY
        }
    }
}

impl std::ops::Add for BoundInterval {
    type Output = BoundInterval;

    fn add(self, rhs: BoundInterval) -> BoundInterval {
        BoundInterval {
            lower: self.lower + rhs.lower,
            upper: self.upper + rhs.upper,
        }
    }
}

/// The plain sandwich [f/δ(z;v), 1/δ(z;v)] with f = 1/2 (convex) or 1/4 (ℂ-convex).
pub fn kappa_sandwich(oracle: &DomainOracle, z: &CPoint, v: &CVector) -> Result<BoundInterval> {
    let d = oracle.directional_distance(z, v)?;
    if d.is_infinite() {
        // The line stays inside up to the reach, so δ(z;v) ≥ reach/‖v‖.
        return Ok(BoundInterval {
            lower: 0.0,
            upper: v.norm() / oracle.reach(),
        });
    }
    let f = oracle.class().metric_factor();
    Ok(BoundInterval {
        lower: f / d,
        upper: 1.0 / d,
    })
}

/// Sandwich bounds, tightened to the half-plane value 1/(2δ) when z + ℂv
/// meets the domain in a half-plane (v = (0, w2) on model domains).
pub fn kappa_bounds(oracle: &DomainOracle, z: &CPoint, v: &CVector) -> Result<BoundInterval> {
    let mut b = kappa_sandwich(oracle, z, v)?;
    if v.z1().norm() == 0.0 {
        b.upper *= 0.5;
        if oracle.class() == ConvexityClass::Convex {
            b.lower = b.upper;
        }
    }
    Ok(b)
}

/// κ(z; (v1, 0)) + κ(z; (0, v2)) bounded above, using only closed-form
/// distances. κ(z; ·) is a seminorm on convex domains.
pub fn kappa_upper_split(oracle: &DomainOracle, z: &CPoint, v: &CVector) -> Result<f64> {
    let (n1, n2) = (v.z1().norm(), v.z2().norm());
    let mut total = 0.0;
    if n1 > 0.0 {
        total += kappa_sandwich(oracle, z, &CVector::new(n1, 0.0, 0.0, 0.0))?.upper;
    }
    if n2 > 0.0 {
        total += kappa_bounds(oracle, z, &CVector::new(0.0, 0.0, n2, 0.0))?.upper;
    }
    Ok(total)
}

/// Splits v along the complex normal and complex tangent at π_Ω(z).
/// Returns (normal part, tangential part).
pub fn decompose_tangential_normal(
    oracle: &DomainOracle,
    z: &CPoint,
    v: &CVector,
) -> Result<(CVector, CVector)> {
    let p = oracle.boundary_project(z)?;
    let frame = oracle.normal_tangent_frame(&p)?;
    let normal = frame.normal.mul(v.inner(&frame.normal));
    let tangential = frame.tangent.mul(v.inner(&frame.tangent));
    Ok((normal, tangential))
}

/// How a curve length integrand is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMode {
    /// The sandwich only.
    Sandwich,
    /// Half-plane slices and the coordinate split as well.
    #[default]
    Refined,
}

fn kappa_for_length(
    oracle: &DomainOracle,
    z: &CPoint,
    v: &CVector,
    mode: LengthMode,
) -> Result<BoundInterval> {
    match mode {
        LengthMode::Sandwich => kappa_sandwich(oracle, z, v),
        LengthMode::Refined => {
            let mut b = kappa_bounds(oracle, z, v)?;
            b.upper = b.upper.min(kappa_upper_split(oracle, z, v)?);
            Ok(b)
        }
    }
}

/// Splits [0, 1] by bisection until the height along a→b varies by at most
/// a factor 1.25 on each piece (endpoints and midpoint sampled).
fn height_pieces(oracle: &DomainOracle, a: &CPoint, b: &CPoint) -> Vec<(f64, f64)> {
    let height = |t: f64| oracle.height(&a.lerp(b, t));
    let mut out = Vec::new();
    let mut stack = vec![(0.0, 1.0, height(0.0), height(1.0), 0u32)];
    while let Some((t0, t1, h0, h1, depth)) = stack.pop() {
        let tm = 0.5 * (t0 + t1);
        let hm = height(tm);
        let (lo, hi) = (h0.min(h1).min(hm), h0.max(h1).max(hm));
        if hi <= 1.25 * lo || depth >= 60 {
            out.push((t0, t1));
        } else {
            stack.push((tm, t1, hm, h1, depth + 1));
            stack.push((t0, tm, h0, hm, depth + 1));
        }
    }
    out
}

/// ∫ over the straight segment a→b of an interval-valued integrand
/// f(point, a→b), by Gauss-Legendre of the given order on the height pieces.
fn integrate_segment<F>(
    oracle: &DomainOracle,
    a: &CPoint,
    b: &CPoint,
    order: usize,
    f: F,
) -> Result<BoundInterval>
where
    F: Fn(&CPoint, &CVector) -> Result<BoundInterval>,
{
    let step = a.to(b);
    if step.norm() == 0.0 {
        return Ok(BoundInterval::zero());
    }
    for p in [a, b] {
        if !oracle.contains(p) {
            return Err(LabError::PointOutsideDomain {
                re2: p.re2,
                profile: oracle.profile().eval(p.re1),
            });
        }
    }
    let mut err = None;
    let mut eval = |t: f64| match f(&a.lerp(b, t), &step) {
        Ok(k) => k,
        Err(e) => {
            err.get_or_insert(e);
            BoundInterval::point(f64::NAN)
        }
    };
    let mut total = BoundInterval::zero();
    for (t0, t1) in height_pieces(oracle, a, b) {
        let (mid, half) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
        for &(x, w) in gauss_legendre(order) {
            let v = eval(mid + half * x);
            total.lower += w * half * v.lower;
            total.upper += w * half * v.upper;
        }
    }
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Per-segment κ-length bounds of the polyline through the curve nodes.
pub fn segment_lengths(
    oracle: &DomainOracle,
    curve: &SampledCurve,
    mode: LengthMode,
) -> Result<Vec<BoundInterval>> {
    curve
        .nodes()
        .windows(2)
        .map(|w| {
            integrate_segment(oracle, &w[0].point, &w[1].point, 4, |z, v| {
                kappa_for_length(oracle, z, v, mode)
            })
        })
        .collect()
}

/// Bounds on ∫κ(γ, γ') over the polyline through the curve nodes.
pub fn curve_kappa_length_bounds(
    oracle: &DomainOracle,
    curve: &SampledCurve,
    mode: LengthMode,
) -> Result<BoundInterval> {
    let z = curve.start();
    if !oracle.contains(&z) {
        return Err(LabError::PointOutsideDomain {
            re2: z.re2,
            profile: oracle.profile().eval(z.re1),
        });
    }
    Ok(segment_lengths(oracle, curve, mode)?
        .into_iter()
        .fold(BoundInterval::zero(), |acc, b| acc + b))
}

/// κ-length upper bound of the straight segment from a to b using the
/// closed-form split integrand.
pub fn segment_upper(oracle: &DomainOracle, a: &CPoint, b: &CPoint) -> Result<f64> {
    Ok(integrate_segment(oracle, a, b, 8, |z, v| {
        kappa_upper_split(oracle, z, v).map(BoundInterval::point)
    })?
    .upper)
}

/// f·|ln(δ(z)/δ(w))| with f = 1/2 (convex) or 1/4 (ℂ-convex).
pub fn kdist_lower(oracle: &DomainOracle, z: &CPoint, w: &CPoint) -> Result<f64> {
    let dz = oracle.boundary_distance(z)?;
    let dw = oracle.boundary_distance(w)?;
    Ok((oracle.class().metric_factor() * (dz / dw).ln().abs()).max(0.0))
}

/// Poincaré distance of the right half-plane, normalized so that
/// the metric is |dζ|/(2 Re ζ).
pub fn exact_halfplane_distance(z: Complex64, w: Complex64) -> Result<f64> {
    for p in [z, w] {
        if !(p.re > 0.0) || !p.im.is_finite() {
            return Err(LabError::OutsideHalfPlane { re: p.re, im: p.im });
        }
    }
    if z == w {
        return Ok(0.0);
    }
    let q = ((z - w) / (z + w.conj())).norm();
    Ok(q.atanh())
}

/// The 2-real-dimensional slice of ℂ² that carries a distance grid.
/// Grid coordinates are (s, y): s is a free real coordinate and y the height
/// Re z2 - Ψ(Re z1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Slice {
    /// s = Im z1, with Re z1 and Im z2 fixed.
    TangentialNormal { re1: f64, im2: f64 },
    /// s = Im z2, with z1 fixed.
    NormalPlane { re1: f64, im1: f64 },
}

impl Slice {
    fn point(&self, oracle: &DomainOracle, s: f64, y: f64) -> CPoint {
        match *self {
            Slice::TangentialNormal { re1, im2 } => {
                CPoint::new(re1, s, oracle.profile().eval(re1) + y, im2)
            }
            Slice::NormalPlane { re1, im1 } => {
                CPoint::new(re1, im1, oracle.profile().eval(re1) + y, s)
            }
        }
    }

    fn coords(&self, oracle: &DomainOracle, z: &CPoint) -> (f64, f64) {
        let s = match self {
            Slice::TangentialNormal { .. } => z.im1,
            Slice::NormalPlane { .. } => z.im2,
        };
        (s, oracle.height(z))
    }
}

/// Layout of a distance grid: uniform columns in s, geometric rows in y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub slice: Slice,
    pub s_min: f64,
    pub s_max: f64,
    /// Column spacing.
    pub spacing: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Ratio between consecutive row heights, in (0, 1).
    pub ratio: f64,
    /// Largest row or column offset of an edge.
    pub stencil_radius: u32,
}

impl GridSpec {
    /// Rows tied to the spacing: ratio 0.8 at spacing 0.1, halving the
    /// spacing takes the square root of the ratio. The stencil widens as the
    /// spacing shrinks so that edge directions refine too.
    pub fn with_spacing(
        slice: Slice,
        s_range: (f64, f64),
        y_range: (f64, f64),
        spacing: f64,
    ) -> Self {
        GridSpec {
            slice,
            s_min: s_range.0,
            s_max: s_range.1,
            spacing,
            y_min: y_range.0,
            y_max: y_range.1,
            ratio: 0.8f64.powf(spacing / 0.1),
            stencil_radius: ((0.2 / spacing).round() as u32).max(1),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.s_max > self.s_min
            && self.spacing > 0.0
            && self.y_min > 0.0
            && self.y_max > self.y_min
            && self.ratio > 0.0
            && self.ratio < 1.0
            && self.stencil_radius >= 1;
        if ok {
            Ok(())
        } else {
            Err(LabError::BadParameters(format!(
                "invalid grid layout {self:?}"
            )))
        }
    }
}

/// Neighbour offsets (row, column) of size at most `radius`. Multiples are
/// kept so that a grid of half the spacing and twice the radius contains
/// every edge of the coarser one.
fn stencil(radius: i64) -> Vec<(i64, i64)> {
    (-radius..=radius)
        .flat_map(|dr| (-radius..=radius).map(move |dc| (dr, dc)))
        .filter(|&o| o != (0, 0))
        .collect()
}

/// Graph on a slice whose edge weights are κ-length upper bounds of straight
/// segments; shortest paths bound the Kobayashi distance from above.
#[derive(Debug, Clone)]
pub struct DistanceGrid {
    spec: GridSpec,
    columns: Vec<f64>,
    rows: Vec<f64>,
    nodes: Vec<CPoint>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Visit {
    dist: f64,
    node: usize,
}

impl Eq for Visit {}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl DistanceGrid {
    pub fn build(oracle: &DomainOracle, spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n_cols = ((spec.s_max - spec.s_min) / spec.spacing).round() as usize + 1;
        let columns: Vec<f64> = (0..n_cols)
            .map(|i| spec.s_min + i as f64 * spec.spacing)
            .collect();
        let mut rows = vec![spec.y_max];
        while rows[rows.len() - 1] * spec.ratio >= spec.y_min * (1.0 - 1e-12) {
            rows.push(rows[rows.len() - 1] * spec.ratio);
        }
        let nodes: Vec<CPoint> = rows
            .iter()
            .flat_map(|&y| columns.iter().map(move |&s| (s, y)))
            .map(|(s, y)| spec.slice.point(oracle, s, y))
            .collect();
        if nodes.iter().any(|z| !oracle.contains(z)) {
            return Err(LabError::BadParameters(
                "grid node outside the domain".into(),
            ));
        }
        let (nr, nc) = (rows.len() as i64, n_cols as i64);
        let offsets_rc = stencil(spec.stencil_radius as i64);
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for r in 0..nr {
            for c in 0..nc {
                let from = (r * nc + c) as usize;
                for &(dr, dc) in &offsets_rc {
                    let (r2, c2) = (r + dr, c + dc);
                    if r2 < 0 || r2 >= nr || c2 < 0 || c2 >= nc {
                        continue;
                    }
                    let to = (r2 * nc + c2) as usize;
                    let w = segment_upper(oracle, &nodes[from], &nodes[to])?;
                    if !(w.is_finite() && w > 0.0) {
                        return Err(LabError::Numeric(format!("edge weight {w}")));
                    }
                    targets.push(to as u32);
                    weights.push(w);
                }
                offsets.push(targets.len());
            }
        }
        let grid = DistanceGrid {
            spec,
            columns,
            rows,
            nodes,
            offsets,
            targets,
            weights,
        };
        if grid
            .shortest_from(&[(0, 0.0)], None)
            .iter()
            .any(|d| d.is_infinite())
        {
            return Err(LabError::DisconnectedGrid);
        }
        Ok(grid)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn node(&self, i: usize) -> CPoint {
        self.nodes[i]
    }

    /// Multi-source Dijkstra; stops early once every settled distance
    /// exceeds `cutoff`.
    fn shortest_from(&self, sources: &[(usize, f64)], cutoff: Option<f64>) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        for &(node, d) in sources {
            if d < dist[node] {
                dist[node] = d;
                heap.push(Visit { dist: d, node });
            }
        }
        while let Some(Visit { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            if cutoff.is_some_and(|c| d > c) {
                break;
            }
            for e in self.offsets[node]..self.offsets[node + 1] {
                let to = self.targets[e] as usize;
                let nd = d + self.weights[e];
                if nd < dist[to] {
                    dist[to] = nd;
                    heap.push(Visit { dist: nd, node: to });
                }
            }
        }
        dist
    }

    /// Grid nodes within `stencil_radius` cells of z, with straight-segment
    /// weights.
    fn attach(&self, oracle: &DomainOracle, z: &CPoint) -> Result<Vec<(usize, f64)>> {
        let (s, y) = self.spec.slice.coords(oracle, z);
        if !(y > 0.0) {
            return Err(LabError::AttachmentFailure);
        }
        let nc = self.columns.len();
        let c = ((s - self.spec.s_min) / self.spec.spacing).floor();
        // Rows decrease geometrically from y_max.
        let r = ((y / self.spec.y_max).ln() / self.spec.ratio.ln()).floor();
        let (c_lim, r_lim) = (nc as f64, self.rows.len() as f64);
        if c < -1.0 || c > c_lim || r < -1.0 || r > r_lim {
            return Err(LabError::AttachmentFailure);
        }
        let reach = self.spec.stencil_radius as i64;
        let mut out = Vec::new();
        for rr in (r as i64 - reach + 1)..=(r as i64 + reach) {
            for cc in (c as i64 - reach + 1)..=(c as i64 + reach) {
                if rr < 0 || cc < 0 || rr >= self.rows.len() as i64 || cc >= nc as i64 {
                    continue;
                }
                let node = rr as usize * nc + cc as usize;
                out.push((node, segment_upper(oracle, z, &self.nodes[node])?));
            }
        }
        if out.is_empty() {
            return Err(LabError::AttachmentFailure);
        }
        Ok(out)
    }

    /// Shortest grid path from z to w, including the attachment segments and
    /// the direct segment.
    pub fn distance(&self, oracle: &DomainOracle, z: &CPoint, w: &CPoint) -> Result<f64> {
        for p in [z, w] {
            if !oracle.contains(p) {
                return Err(LabError::PointOutsideDomain {
                    re2: p.re2,
                    profile: oracle.profile().eval(p.re1),
                });
            }
        }
        if z == w {
            return Ok(0.0);
        }
        let from = self.attach(oracle, z)?;
        let to = self.attach(oracle, w)?;
        let direct = segment_upper(oracle, z, w)?;
        let dist = self.shortest_from(&from, Some(direct));
        let best = to
            .iter()
            .map(|&(node, d)| dist[node] + d)
            .fold(direct, f64::min);
        Ok(best)
    }

    /// Distance between two grid nodes.
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        self.shortest_from(&[(a, 0.0)], None)[b]
    }
}

/// Graph upper bound on k_Ω(z, w).
pub fn kdist_upper_graph(
    oracle: &DomainOracle,
    z: &CPoint,
    w: &CPoint,
    grid: &DistanceGrid,
) -> Result<f64> {
    grid.distance(oracle, z, w)
}

/// Two-sided bounds on k_Ω(z, w): the lower estimate and the grid path.
pub fn kdist_bounds(
    oracle: &DomainOracle,
    z: &CPoint,
    w: &CPoint,
    grid: &DistanceGrid,
) -> Result<BoundInterval> {
    let lower = kdist_lower(oracle, z, w)?;
    let upper = kdist_upper_graph(oracle, z, w, grid)?;
    Ok(BoundInterval {
        lower: lower.min(upper),
        upper,
    })
}

/// (z|w)_o from enclosures of k(z,o), k(w,o) and k(z,w).
pub fn gromov_from_distances(
    zo: BoundInterval,
    wo: BoundInterval,
    zw: BoundInterval,
) -> BoundInterval {
    let lower = (0.5 * (zo.lower + wo.lower - zw.upper)).max(0.0);
    let upper = (0.5 * (zo.upper + wo.upper - zw.lower)).max(lower);
    BoundInterval { lower, upper }
}

/// Exact Gromov product from exact distances.
pub fn gromov_exact(zo: f64, wo: f64, zw: f64) -> f64 {
    0.5 * (zo + wo - zw)
}

/// Bounds on the Gromov product (z|w)_o.
pub fn gromov_product_bounds(
    oracle: &DomainOracle,
    z: &CPoint,
    w: &CPoint,
    o: &CPoint,
    grid: &DistanceGrid,
) -> Result<BoundInterval> {
    let zo = kdist_bounds(oracle, z, o, grid)?;
    let wo = kdist_bounds(oracle, w, o, grid)?;
    let zw = kdist_bounds(oracle, z, w, grid)?;
    Ok(gromov_from_distances(zo, wo, zw))
}
