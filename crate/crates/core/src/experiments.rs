//! End-to-end runs: boundary-hugging curve families, their control runs and
//! the counterexample profiles, with reports written as JSON and CSV.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geodesics::{
    certify_lambda_geodesic, construct_tangential_geodesic, find_balanced_parameter,
    max_boundary_distance, predicted_terminal_depth, GeodesicCertificate, GridDistances,
    TerminalDepth, RATIO_ROUNDING,
};
use crate::geometry::{CPoint, CVector, ConvexityClass, DomainOracle};
use crate::goldilocks::{
    classify_point_with, face_witness, face_witness_at, ClassificationReport, ClassifyOptions,
    IntegralStatus, IntegralVerdict, FACE_WITNESS_RADIUS, LEVELS,
};
use crate::metric::{gromov_product_bounds, DistanceGrid, GridSpec, Slice};
use crate::profiles::{build_piecewise_max, dyadic, mollify, Profile, ProfileSpec};

pub const CONFIG_VERSION: u32 = 1;
pub const REPORT_SCHEMA: &str = "kobalab-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    ExpPower,
    PiecewiseMax,
    Mollified,
    Flat,
    Wedge,
}

/// Flat key/value run description, read from TOML.
///
/// Every key except `version` has a default; the defaults describe the
/// boundary-hugging family on Ψ = e^{-1/x} with c = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub profile: ProfileKind,
    pub alpha: f64,
    /// The constant c of the profile e^{-c/|x|^α}.
    pub profile_c: f64,
    pub j_max: usize,
    pub slope: f64,
    pub convexity: ConvexityClass,
    /// Balance constant of the tangential construction.
    pub c: f64,
    /// Starting depths, strictly decreasing.
    pub f0: Vec<f64>,
    pub span: f64,
    pub lambda: f64,
    pub pair_grid: usize,
    pub depth_cap: f64,
    pub root_tol: f64,
    pub phase_grid_count: usize,
    pub gromov: bool,
    pub grid_spacing: f64,
    pub grid_s: [f64; 2],
    pub grid_y: [f64; 2],
    pub base_point: [f64; 4],
    pub epsilon: f64,
    /// Inclusive range of j for the faces on chords n = 2j.
    pub chords: [usize; 2],
    pub invariant_samples: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: 0,
            profile: ProfileKind::ExpPower,
            alpha: 1.0,
            profile_c: 1.0,
            j_max: 24,
            slope: 1.0,
            convexity: ConvexityClass::Convex,
            c: 1.0,
            f0: (2..=9).map(|k| 10f64.powi(-k)).collect(),
            span: 1.0,
            lambda: 4.0 * 1.05,
            pair_grid: 32,
            depth_cap: 10.0,
            root_tol: 1e-10,
            phase_grid_count: 128,
            gromov: true,
            grid_spacing: 0.1,
            grid_s: [-0.5, 1.5],
            grid_y: [1e-10, 4.0],
            base_point: [0.0, 0.0, 1.0, 0.0],
            epsilon: 1e-2,
            chords: [2, 10],
            invariant_samples: 200,
            seed: 7,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// The boundary-hugging family on e^{-1/x}.
    pub fn visibility_family() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            ..Default::default()
        }
    }

    /// The same family on e^{-1/√x}, where the construction escapes.
    pub fn visibility_control() -> Self {
        ExperimentConfig {
            alpha: 0.5,
            depth_cap: 0.25,
            gromov: false,
            ..Self::visibility_family()
        }
    }

    /// Ψ₀ and Ψ∞ over e^{-1/√x}.
    pub fn counterexample_suite() -> Self {
        ExperimentConfig {
            profile: ProfileKind::Mollified,
            alpha: 0.5,
            f0: Vec::new(),
            gromov: false,
            ..Self::visibility_family()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| LabError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::InvalidConfig(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "version must be {CONFIG_VERSION}, got {}",
                self.version
            ));
        }
        let positive = [
            ("alpha", self.alpha),
            ("profile_c", self.profile_c),
            ("slope", self.slope),
            ("c", self.c),
            ("span", self.span),
            ("depth_cap", self.depth_cap),
            ("root_tol", self.root_tol),
            ("grid_spacing", self.grid_spacing),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.lambda >= 1.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be at least 1, got {}", self.lambda));
        }
        if self.f0.iter().any(|&f| !(f > 0.0 && f < self.depth_cap)) {
            return bad(format!(
                "f0 values must lie in (0, depth_cap = {})",
                self.depth_cap
            ));
        }
        if self.f0.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("f0 list must be strictly decreasing".into());
        }
        if self.pair_grid < 8 || self.phase_grid_count < 8 {
            return bad("pair_grid and phase_grid_count must be at least 8".into());
        }
        if !(self.grid_s[0] < self.grid_s[1]
            && 0.0 < self.grid_y[0]
            && self.grid_y[0] < self.grid_y[1])
        {
            return bad("grid_s and grid_y must be increasing ranges with grid_y above 0".into());
        }
        if self.base_point.iter().any(|v| !v.is_finite()) {
            return bad("base_point must be finite".into());
        }
        if matches!(
            self.profile,
            ProfileKind::PiecewiseMax | ProfileKind::Mollified
        ) && (self.chords[0] < 1
            || self.chords[0] > self.chords[1]
            || 2 * self.chords[1] > self.j_max)
        {
            return bad(format!(
                "chords {:?} need 1 ≤ first ≤ last and 2·last ≤ j_max = {}",
                self.chords, self.j_max
            ));
        }
        Ok(())
    }

    pub fn profile_spec(&self) -> ProfileSpec {
        let (alpha, c, j_max) = (self.alpha, self.profile_c, self.j_max);
        match self.profile {
            ProfileKind::ExpPower => ProfileSpec::ExpPower { alpha, c },
            ProfileKind::PiecewiseMax => ProfileSpec::PiecewiseMax { alpha, c, j_max },
            ProfileKind::Mollified => ProfileSpec::Mollified { alpha, c, j_max },
            ProfileKind::Flat => ProfileSpec::Flat,
            ProfileKind::Wedge => ProfileSpec::Wedge { slope: self.slope },
        }
    }

    pub fn oracle_for(&self, profile: Profile) -> Result<DomainOracle> {
        DomainOracle::new(profile)
            .with_class(self.convexity)
            .with_depth_cap(self.depth_cap)?
            .with_tolerances(self.root_tol, self.phase_grid_count)
    }

    pub fn oracle(&self) -> Result<DomainOracle> {
        self.oracle_for(self.profile_spec().build()?)
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            epsilon: self.epsilon,
            ..Default::default()
        }
    }

    fn base(&self) -> CPoint {
        let [a, b, c, d] = self.base_point;
        CPoint::new(a, b, c, d)
    }
}

/// What a reported number bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lower,
    Upper,
    PointEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub value: f64,
    pub bound: BoundKind,
    pub tolerance: f64,
}

impl Tagged {
    fn estimate(value: f64, tolerance: f64) -> Self {
        Tagged {
            value,
            bound: BoundKind::PointEstimate,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveStatus {
    Reached,
    Escaped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub f0: f64,
    pub status: CurveStatus,
    /// From the integral equation.
    pub predicted_depth: Option<TerminalDepth>,
    /// f(1) of the constructed curve.
    pub terminal_depth: Option<Tagged>,
    pub max_delta: Option<Tagged>,
    pub certificate: Option<GeodesicCertificate>,
    pub endpoint: Option<CPoint>,
    /// Distance from the endpoint to the face segment through the origin.
    pub endpoint_face_dist: Option<Tagged>,
    pub error: Option<String>,
}

impl CurveRecord {
    fn new(f0: f64) -> Self {
        CurveRecord {
            f0,
            status: CurveStatus::Failed,
            predicted_depth: None,
            terminal_depth: None,
            max_delta: None,
            certificate: None,
            endpoint: None,
            endpoint_face_dist: None,
            error: None,
        }
    }
}

/// (z|x)_o at the balanced parameter x of one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GromovEntry {
    pub f0: f64,
    pub tau: Option<f64>,
    pub balance_ratio: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub error: Option<String>,
}

/// Lower bounds of (z_n|x_n)_o over the family; growth is reported, not a limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GromovSeries {
    pub label: String,
    pub bound: BoundKind,
    pub base_point: CPoint,
    pub grid: GridSpec,
    pub entries: Vec<GromovEntry>,
    pub strictly_increasing: bool,
    /// Last lower bound minus the first.
    pub gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseBoundRow {
    pub r: f64,
    /// Ψ∞⁻¹(r).
    pub inverse: f64,
    /// 1/ln²(1/r).
    pub bound: f64,
}

/// Face witness at the midpoint of chord n = 2j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceRecord {
    pub j: usize,
    pub chord: usize,
    pub x: f64,
    pub point_norm: f64,
    pub witness: Option<f64>,
    pub witness_half_radius: Option<f64>,
    pub relative_change: Option<f64>,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleBlock {
    pub checks: Vec<Check>,
    pub inverse_bound: Vec<InverseBoundRow>,
    pub faces: Vec<FaceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub config_version: u32,
    pub root_tol: f64,
    pub depth_cap: f64,
    pub phase_grid_count: usize,
    pub ratio_rounding: f64,
    pub face_witness_radius: f64,
    pub dyadic_levels: usize,
}

impl Environment {
    fn of(cfg: &ExperimentConfig) -> Self {
        Environment {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_version: cfg.version,
            root_tol: cfg.root_tol,
            depth_cap: cfg.depth_cap,
            phase_grid_count: cfg.phase_grid_count,
            ratio_rounding: RATIO_ROUNDING,
            face_witness_radius: FACE_WITNESS_RADIUS,
            dyadic_levels: LEVELS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    VisibilityFamily,
    CounterexampleSuite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub curves: Vec<CurveRecord>,
    pub gromov: Option<GromovSeries>,
    pub classification: Option<ClassificationReport>,
    pub counterexample: Option<CounterexampleBlock>,
    pub environment: Environment,
}

impl ExperimentReport {
    fn empty(cfg: &ExperimentConfig, kind: ExperimentKind) -> Self {
        ExperimentReport {
            schema: REPORT_SCHEMA.to_string(),
            kind,
            config: cfg.clone(),
            curves: Vec::new(),
            gromov: None,
            classification: None,
            counterexample: None,
            environment: Environment::of(cfg),
        }
    }

    /// Errors that were recorded instead of aborting the run.
    pub fn quarantined(&self) -> usize {
        let curves = self.curves.iter().filter(|c| c.error.is_some()).count();
        let gromov = self
            .gromov
            .iter()
            .flat_map(|g| &g.entries)
            .filter(|e| e.error.is_some())
            .count();
        let faces = self
            .counterexample
            .iter()
            .flat_map(|b| &b.faces)
            .filter(|f| f.error.is_some())
            .count();
        curves + gromov + faces
    }
}

/// Runs `job` on every item with one scoped worker per core; results keep
/// the item order.
fn parallel_map<T: Sync, R: Send>(items: &[T], job: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(items.len())
        .max(1);
    if workers == 1 {
        return items.iter().map(&job).collect();
    }
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let job = &job;
                scope.spawn(move || {
                    items
                        .iter()
                        .enumerate()
                        .skip(w)
                        .step_by(workers)
                        .map(|(i, x)| (i, job(x)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every slot is filled"))
        .collect()
}

/// Tangential curves from (0, f0) along the face direction i·X at the
/// origin, with certificates, terminal depths and the Gromov diagnostic.
pub fn run_visibility_family(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let oracle = cfg.oracle()?;
    let origin = CPoint::real(0.0, 0.0);
    let frame = oracle.normal_tangent_frame(&origin)?;
    let direction = frame.tangent.mul(Complex64::i());
    let face = oracle
        .face_segment(&origin)?
        .ok_or_else(|| LabError::BadParameters("no face segment through the origin".into()))?;
    let spec = GridSpec::with_spacing(
        Slice::TangentialNormal { re1: 0.0, im2: 0.0 },
        (cfg.grid_s[0], cfg.grid_s[1]),
        (cfg.grid_y[0], cfg.grid_y[1]),
        cfg.grid_spacing,
    );
    let grid = if cfg.gromov && !cfg.f0.is_empty() {
        Some(DistanceGrid::build(&oracle, spec)?)
    } else {
        None
    };
    let base = cfg.base();

    let outcomes = parallel_map(&cfg.f0, |&f0| {
        let mut record = CurveRecord::new(f0);
        let mut entry = GromovEntry {
            f0,
            tau: None,
            balance_ratio: None,
            lower: None,
            upper: None,
            error: None,
        };
        record.predicted_depth =
            predicted_terminal_depth(oracle.profile(), cfg.c, f0, cfg.depth_cap).ok();
        let curve = match construct_tangential_geodesic(&oracle, cfg.c, f0, &direction, cfg.span) {
            Ok(curve) => curve,
            Err(LabError::EscapedDepthCap { .. }) => {
                record.status = CurveStatus::Escaped;
                return (record, entry);
            }
            Err(e) => {
                record.error = Some(e.to_string());
                return (record, entry);
            }
        };
        record.status = CurveStatus::Reached;
        let end = curve.end();
        record.endpoint = Some(end);
        record.terminal_depth = Some(Tagged::estimate(end.re2, 1e-6 * end.re2));
        record.endpoint_face_dist =
            Some(Tagged::estimate(face.distance_to(&end), oracle.root_tol()));
        let mut errors = Vec::new();
        match max_boundary_distance(&oracle, &curve) {
            Ok(d) => record.max_delta = Some(Tagged::estimate(d, oracle.root_tol() * d.max(1.0))),
            Err(e) => errors.push(e.to_string()),
        }
        match certify_lambda_geodesic(&oracle, &curve, cfg.lambda, 0.0, cfg.pair_grid) {
            Ok(cert) => record.certificate = Some(cert),
            Err(e) => errors.push(e.to_string()),
        }
        if !errors.is_empty() {
            record.error = Some(errors.join("; "));
        }
        if let Some(grid) = &grid {
            let gromov = find_balanced_parameter(
                &curve,
                &base,
                &GridDistances {
                    oracle: &oracle,
                    grid,
                },
            )
            .and_then(|bp| {
                entry.tau = Some(bp.tau);
                entry.balance_ratio = Some(bp.ratio);
                gromov_product_bounds(&oracle, &curve.start(), &bp.point, &base, grid)
            });
            match gromov {
                Ok(b) => (entry.lower, entry.upper) = (Some(b.lower), Some(b.upper)),
                Err(e) => entry.error = Some(e.to_string()),
            }
        }
        (record, entry)
    });

    let mut report = ExperimentReport::empty(cfg, ExperimentKind::VisibilityFamily);
    let (curves, entries): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    report.curves = curves;
    if cfg.gromov {
        let lower: Vec<Option<f64>> = entries.iter().map(|e| e.lower).collect();
        let strictly_increasing =
            lower.iter().all(Option::is_some) && lower.windows(2).all(|w| w[1] > w[0]);
        let gain = match (lower.first(), lower.last()) {
            (Some(Some(a)), Some(Some(b))) => Some(b - a),
            _ => None,
        };
        report.gromov = Some(GromovSeries {
            label: "growth diagnostic".into(),
            bound: BoundKind::Lower,
            base_point: base,
            grid: spec,
            entries,
            strictly_increasing,
            gain,
        });
    }
    report.classification = Some(classify_point_with(
        &oracle,
        &origin,
        &cfg.classify_options(),
    )?);
    Ok(report)
}

/// Builds Ψ₀ and Ψ∞ over the configured base, checks their invariants,
/// the inverse bound, the face witnesses on even chords and classifies the origin.
pub fn run_counterexample_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if !matches!(
        cfg.profile,
        ProfileKind::PiecewiseMax | ProfileKind::Mollified
    ) {
        return Err(LabError::InvalidConfig(
            "the counterexample suite needs a piecewise_max or mollified profile".into(),
        ));
    }
    let base = Profile::exp_power(cfg.alpha, cfg.profile_c)?;
    let psi0 = build_piecewise_max(&base, cfg.j_max)?;
    let psi_inf = mollify(&psi0, cfg.j_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    for (name, profile) in [("psi0", &psi0), ("psi_inf", &psi_inf)] {
        checks.extend(profile_checks(
            name,
            profile,
            cfg.invariant_samples,
            &mut rng,
        ));
    }
    checks.push(domination_check(
        &psi0,
        &psi_inf,
        cfg.invariant_samples,
        &mut rng,
    ));

    let inverse_bound = (0..50)
        .map(|i| {
            let r = 1e-8 * 10f64.powf(6.0 * i as f64 / 49.0);
            Ok(InverseBoundRow {
                r,
                inverse: psi_inf.inverse(r)?,
                bound: 1.0 / r.ln().powi(2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = inverse_bound
        .iter()
        .filter(|row| row.inverse > row.bound * (1.0 + 1e-12))
        .count();
    checks.push(Check {
        name: "psi_inf inverse below 1/ln^2(1/r)".into(),
        passed: violations == 0,
        detail: format!(
            "{violations} of {} radii violate the bound",
            inverse_bound.len()
        ),
    });

    let selected = match cfg.profile {
        ProfileKind::PiecewiseMax => psi0.clone(),
        _ => psi_inf.clone(),
    };
    let Profile::PiecewiseMax(chords) = &psi0 else {
        unreachable!("built as piecewise max")
    };
    let oracle = cfg.oracle_for(selected)?;
    let faces: Vec<FaceRecord> = (cfg.chords[0]..=cfg.chords[1])
        .map(|j| {
            let n = 2 * j;
            let x = 0.75 * dyadic(n);
            let p = CPoint::real(x, oracle.profile().eval(x));
            let dir = CVector::new(1.0, 0.0, chords.chord_slope(n), 0.0);
            let mut record = FaceRecord {
                j,
                chord: n,
                x,
                point_norm: x.hypot(p.re2),
                witness: None,
                witness_half_radius: None,
                relative_change: None,
                passed: false,
                error: None,
            };
            let pair = face_witness(&oracle, &p, &dir).and_then(|w| {
                Ok((
                    w,
                    face_witness_at(&oracle, &p, &dir, 0.5 * FACE_WITNESS_RADIUS)?,
                ))
            });
            match pair {
                Ok((w, half)) => {
                    let change = (half / w - 1.0).abs();
                    record.witness = Some(w);
                    record.witness_half_radius = Some(half);
                    record.relative_change = Some(change);
                    record.passed = w > 0.0 && w.is_finite() && change < 1e-2;
                }
                Err(e) => record.error = Some(e.to_string()),
            }
            record
        })
        .collect();
    let halving = faces
        .windows(2)
        .all(|w| (w[1].point_norm / w[0].point_norm - 0.25).abs() < 1e-2);
    checks.push(Check {
        name: "face points approach the origin".into(),
        passed: halving,
        detail: "norm shrinks by 4 per chord step, i.e. halves per dyadic index".into(),
    });

    let mut report = ExperimentReport::empty(cfg, ExperimentKind::CounterexampleSuite);
    report.classification = Some(classify_point_with(
        &oracle,
        &CPoint::real(0.0, 0.0),
        &cfg.classify_options(),
    )?);
    report.counterexample = Some(CounterexampleBlock {
        checks,
        inverse_bound,
        faces,
    });
    Ok(report)
}

/// Evenness, monotonicity on [0, 1] and midpoint convexity at seeded samples.
fn profile_checks(
    name: &str,
    profile: &Profile,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Check> {
    let (mut odd, mut decreasing, mut concave) = (0, 0, 0);
    for _ in 0..samples {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        let (fa, fb) = (profile.eval(a), profile.eval(b));
        if (fa - profile.eval(-a)).abs() > 1e-15 * fa {
            odd += 1;
        }
        let (lo, hi) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
        if profile.eval(lo) > profile.eval(hi) {
            decreasing += 1;
        }
        if profile.eval(0.5 * (a + b)) > 0.5 * (fa + fb) * (1.0 + 1e-12) {
            concave += 1;
        }
    }
    let check = |what: &str, bad: usize| Check {
        name: format!("{name} {what}"),
        passed: bad == 0,
        detail: format!("{bad} of {samples} samples fail"),
    };
    vec![
        check("even", odd),
        check("nondecreasing in |x|", decreasing),
        check("midpoint convex", concave),
    ]
}

fn domination_check(
    psi0: &Profile,
    psi_inf: &Profile,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Check {
    let below = (0..samples)
        .filter(|_| {
            let x: f64 = rng.random_range(0.0..1.0);
            psi_inf.eval(x) < psi0.eval(x) * (1.0 - 1e-12)
        })
        .count();
    Check {
        name: "psi_inf dominates psi0".into(),
        passed: below == 0,
        detail: format!("{below} of {samples} samples below"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Json,
    Csv,
}

#[derive(Serialize)]
struct CurveRow {
    f0: f64,
    #[serde(rename = "D")]
    depth: Option<f64>,
    max_delta: Option<f64>,
    lambda_target: f64,
    sup_ratio: Option<f64>,
    status: String,
    endpoint_face_dist: Option<f64>,
}

#[derive(Serialize)]
struct GromovRow {
    f0: f64,
    tau: Option<f64>,
    balance_ratio: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
}

#[derive(Serialize)]
struct ClassifyRow {
    test: &'static str,
    status: &'static str,
    value: Option<f64>,
    decay_exponent: Option<f64>,
    partial_sum: f64,
    epsilon: f64,
}

#[derive(Serialize)]
struct FaceRow {
    j: usize,
    chord: usize,
    x: f64,
    point_norm: f64,
    witness: Option<f64>,
    witness_half_radius: Option<f64>,
    relative_change: Option<f64>,
    passed: bool,
}

fn classify_row(test: &'static str, v: &IntegralVerdict) -> ClassifyRow {
    let (status, value) = match v.status {
        IntegralStatus::Convergent { value } => ("convergent", Some(value)),
        IntegralStatus::Divergent { .. } => ("divergent", None),
        IntegralStatus::Inconclusive => ("inconclusive", None),
    };
    ClassifyRow {
        test,
        status,
        value,
        decay_exponent: v.decay_exponent,
        partial_sum: v.partial_sum,
        epsilon: v.epsilon,
    }
}

/// Certificate outcome for reached curves, otherwise the curve status.
fn status_label(c: &CurveRecord) -> String {
    let value = match (c.status, c.certificate) {
        (CurveStatus::Reached, Some(cert)) => serde_json::to_value(cert.status),
        (status, _) => serde_json::to_value(status),
    };
    value
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn write_csv<R: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> Result<()> {
    let io = |e: csv::Error| LabError::Io(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes report.json, or curves.csv, gromov.csv and classify.csv (plus
/// faces.csv for the counterexample suite) into `dir`; returns the paths.
pub fn emit(report: &ExperimentReport, dir: &Path, format: EmitFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    match format {
        EmitFormat::Json => {
            let path = dir.join("report.json");
            let mut text =
                serde_json::to_string_pretty(report).map_err(|e| LabError::Io(e.to_string()))?;
            text.push('\n');
            fs::write(&path, text)?;
            Ok(vec![path])
        }
        EmitFormat::Csv => {
            let mut paths = Vec::new();
            let path = dir.join("curves.csv");
            let rows = report.curves.iter().map(|c| CurveRow {
                f0: c.f0,
                depth: c.terminal_depth.map(|t| t.value),
                max_delta: c.max_delta.map(|t| t.value),
                lambda_target: report.config.lambda,
                sup_ratio: c.certificate.map(|x| x.observed_sup_ratio),
                status: status_label(c),
                endpoint_face_dist: c.endpoint_face_dist.map(|t| t.value),
            });
            write_csv(
                &path,
                &[
                    "f0",
                    "D",
                    "max_delta",
                    "lambda_target",
                    "sup_ratio",
                    "status",
                    "endpoint_face_dist",
                ],
                rows,
            )?;
            paths.push(path);

            let path = dir.join("gromov.csv");
            let entries = report.gromov.iter().flat_map(|g| &g.entries);
            let rows = entries.map(|e| GromovRow {
                f0: e.f0,
                tau: e.tau,
                balance_ratio: e.balance_ratio,
                lower: e.lower,
                upper: e.upper,
            });
            write_csv(
                &path,
                &["f0", "tau", "balance_ratio", "lower", "upper"],
                rows,
            )?;
            paths.push(path);

            let path = dir.join("classify.csv");
            let rows = report.classification.iter().flat_map(|c| {
                [
                    classify_row("local", &c.local_goldilocks),
                    classify_row("weak", &c.weakly_goldilocks),
                    classify_row("strong", &c.strongly_non_goldilocks),
                ]
            });
            write_csv(
                &path,
                &[
                    "test",
                    "status",
                    "value",
                    "decay_exponent",
                    "partial_sum",
                    "epsilon",
                ],
                rows,
            )?;
            paths.push(path);

            if let Some(block) = &report.counterexample {
                let path = dir.join("faces.csv");
                let rows = block.faces.iter().map(|f| FaceRow {
                    j: f.j,
                    chord: f.chord,
                    x: f.x,
                    point_norm: f.point_norm,
                    witness: f.witness,
                    witness_half_radius: f.witness_half_radius,
                    relative_change: f.relative_change,
                    passed: f.passed,
                });
                let header = [
                    "j",
                    "chord",
                    "x",
                    "point_norm",
                    "witness",
                    "witness_half_radius",
                    "relative_change",
                    "passed",
                ];
                write_csv(&path, &header, rows)?;
                paths.push(path);
            }
            Ok(paths)
        }
    }
}
