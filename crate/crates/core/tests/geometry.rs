use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use approx::assert_relative_eq;
use kobalab::profiles::dyadic;
use kobalab::{
    build_piecewise_max, CPoint, CVector, DomainOracle, FaceKind, LabError, Profile, ProfileSpec,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn exp_domain() -> DomainOracle {
    DomainOracle::new(Profile::exp_power(1.0, 1.0).unwrap())
}

fn flat_domain() -> DomainOracle {
    DomainOracle::new(ProfileSpec::Flat.build().unwrap())
}

fn psi0_domain() -> DomainOracle {
    DomainOracle::new(build_piecewise_max(&Profile::exp_power(1.0, 1.0).unwrap(), 12).unwrap())
}

fn tangential() -> CVector {
    CVector::new(0.0, 1.0, 0.0, 0.0)
}

fn normal() -> CVector {
    CVector::new(0.0, 0.0, 1.0, 0.0)
}

/// Distance from (a, b) to the graph of `psi` by a dense scan plus local zoom.
fn graph_distance_oracle(psi: impl Fn(f64) -> f64, a: f64, b: f64, half_width: f64) -> f64 {
    let d2 = |x: f64| (x - a).powi(2) + (psi(x) - b).powi(2);
    let (mut lo, mut hi) = (a - half_width, a + half_width);
    let mut best = a;
    for _ in 0..6 {
        let n = 2000;
        let h = (hi - lo) / n as f64;
        best = (0..=n)
            .map(|i| lo + i as f64 * h)
            .min_by(|p, q| d2(*p).total_cmp(&d2(*q)))
            .unwrap();
        lo = best - 2.0 * h;
        hi = best + 2.0 * h;
    }
    d2(best).sqrt()
}

/// First |α| along the phase θ where z + αv leaves the domain, by plain bisection.
fn ray_exit(psi: &Profile, z: &CPoint, v: &CVector, theta: f64) -> f64 {
    let e = Complex64::from_polar(1.0, theta);
    let (u1, u2) = ((e * v.z1()).re, (e * v.z2()).re);
    let inside = |r: f64| z.re2 + r * u2 > psi.eval(z.re1 + r * u1);
    let (mut lo, mut hi) = (0.0, 100.0);
    if inside(hi) {
        return f64::INFINITY;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Brute force over 10^4 phases, then two nested zooms around the best phase.
fn directional_oracle(psi: &Profile, z: &CPoint, v: &CVector) -> f64 {
    let mut center = 0.0;
    let mut width = TAU;
    let mut best = f64::INFINITY;
    for count in [10_000usize, 1_000, 1_000] {
        let step = width / count as f64;
        for k in 0..count {
            let theta = center - 0.5 * width + k as f64 * step;
            let r = ray_exit(psi, z, v, theta);
            if r < best {
                best = r;
                center = theta;
            }
        }
        width = 2.0 * step;
    }
    best
}

#[test]
fn membership_examples() {
    let o = exp_domain();
    assert!(o.contains(&CPoint::real(0.0, 1.0)));
    assert!(!o.contains(&CPoint::real(0.0, 0.0)));
    let e1 = (-1.0f64).exp();
    assert!(!o.contains(&CPoint::real(1.0, e1 / 2.0)));
    let top = o.profile().eval(1.0);
    assert!(top >= e1);
    assert!(o.contains(&CPoint::new(1.0, 7.0, top * 1.01, -3.0)));
    assert!(!o.contains(&CPoint::new(f64::NAN, 0.0, 1.0, 0.0)));
}

#[test]
fn boundary_distance_near_origin() {
    let o = exp_domain();
    let psi = o.profile().clone();
    for &b in &[0.3, 0.1, 0.01] {
        let d = o.boundary_distance(&CPoint::real(0.0, b)).unwrap();
        assert!(d <= b);
        let oracle = graph_distance_oracle(|x| psi.eval(x), 0.0, b, b);
        assert_relative_eq!(d, oracle, max_relative = 1e-9);
        let witness = ((0.5f64).powi(2) + (psi.eval(0.5) - b).powi(2)).sqrt();
        assert!(d <= witness);
    }
}

#[test]
fn flat_domain_distance_is_height() {
    let o = flat_domain();
    let z = CPoint::new(0.7, -2.0, 0.25, 5.0);
    assert_relative_eq!(o.boundary_distance(&z).unwrap(), 0.25, max_relative = 1e-14);
    let p = o.boundary_project(&z).unwrap();
    assert_eq!(p, CPoint::new(0.7, -2.0, 0.0, 5.0));
}

#[test]
fn outside_points_are_rejected() {
    let o = exp_domain();
    let z = CPoint::real(0.0, -1.0);
    assert!(matches!(
        o.boundary_distance(&z),
        Err(LabError::PointOutsideDomain { .. })
    ));
    assert!(matches!(
        o.boundary_project(&z),
        Err(LabError::PointOutsideDomain { .. })
    ));
    assert!(matches!(
        o.directional_distance(&z, &normal()),
        Err(LabError::PointOutsideDomain { .. })
    ));
    let z = CPoint::real(0.0, 0.5);
    assert_eq!(
        o.directional_distance(&z, &CVector::default()),
        Err(LabError::ZeroDirection)
    );
}

#[test]
fn directional_closed_forms() {
    let o = exp_domain();
    // Heights below e^-2, where the profile is the pure exponential.
    for &b in &[0.13, 0.05, 1e-4] {
        let z = CPoint::new(0.0, 2.0, b, -1.0);
        let along = o.directional_distance(&z, &tangential()).unwrap();
        assert_relative_eq!(along, 1.0 / (1.0f64 / b).ln(), max_relative = 1e-12);
        assert_relative_eq!(
            o.directional_distance(&z, &normal()).unwrap(),
            b,
            max_relative = 1e-14
        );
        let scaled = o
            .directional_distance(&z, &CVector::new(0.0, 0.0, 0.0, 4.0))
            .unwrap();
        assert_relative_eq!(scaled, b / 4.0, max_relative = 1e-14);
    }
}

#[test]
fn generic_solver_matches_brute_force() {
    let o = exp_domain();
    let z = CPoint::real(0.0, 0.5);
    let v = CVector::new(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0);
    let fast = o.directional_distance(&z, &v).unwrap();
    let slow = directional_oracle(o.profile(), &z, &v);
    assert!(
        (fast - slow).abs() <= 10.0 * o.root_tol(),
        "{fast} vs {slow}"
    );
}

#[test]
fn generic_solver_matches_brute_force_off_axis() {
    let o = psi0_domain();
    let z = CPoint::new(0.1, 0.3, 0.02, -0.2);
    let v = CVector::new(0.3, -0.5, 0.2, 0.6);
    let fast = o.directional_distance(&z, &v).unwrap();
    let slow = directional_oracle(o.profile(), &z, &v);
    assert!(
        (fast - slow).abs() <= 10.0 * o.root_tol(),
        "{fast} vs {slow}"
    );
}

#[test]
fn projection_examples() {
    let o = exp_domain();
    let p = o
        .boundary_project(&CPoint::new(0.0, 1.5, 0.2, 0.5))
        .unwrap();
    assert!((p.re2 - o.profile().eval(p.re1)).abs() <= o.root_tol());
    assert_eq!((p.im1, p.im2), (1.5, 0.5));

    // Equidistant feet (±1/2, 1/2) on the wedge: the positive one wins.
    let wedge = DomainOracle::new(ProfileSpec::Wedge { slope: 1.0 }.build().unwrap());
    let p = wedge.boundary_project(&CPoint::real(0.0, 1.0)).unwrap();
    assert_relative_eq!(p.re1, 0.5, max_relative = 1e-9);
    assert_relative_eq!(p.re2, 0.5, max_relative = 1e-9);
}

#[test]
fn frame_at_origin() {
    let o = exp_domain();
    let f = o.normal_tangent_frame(&CPoint::real(0.0, 0.0)).unwrap();
    assert_eq!(f.normal, normal());
    assert_eq!(f.tangent, CVector::new(1.0, 0.0, 0.0, 0.0));
}

#[test]
fn frame_on_chord_face() {
    let o = psi0_domain();
    let base = |x: f64| (-1.0 / x).exp();
    let (hi, lo) = (dyadic(4), dyadic(5));
    let m = (base(hi) - base(lo)) / (hi - lo);
    let x = 0.5 * (lo + hi);
    let p = CPoint::real(x, o.profile().eval(x));
    let f = o.normal_tangent_frame(&p).unwrap();
    let n = (1.0 + m * m).sqrt();
    assert_relative_eq!(f.tangent.re1, 1.0 / n, max_relative = 1e-12);
    assert_relative_eq!(f.tangent.re2, m / n, max_relative = 1e-9);
    assert!(f.tangent.inner(&f.normal).norm() <= o.root_tol());
    assert_relative_eq!(f.normal.norm(), 1.0, max_relative = 1e-14);
}

#[test]
fn frame_rejects_kinks_and_interior_points() {
    let o = psi0_domain();
    let t = dyadic(4);
    let kink = CPoint::real(t, o.profile().eval(t));
    assert!(matches!(
        o.normal_tangent_frame(&kink),
        Err(LabError::NonSmoothPoint { .. })
    ));
    assert!(matches!(
        o.normal_tangent_frame(&CPoint::real(0.0, 0.1)),
        Err(LabError::NotOnBoundary { .. })
    ));
}

#[test]
fn face_at_origin_is_the_translation_line() {
    let o = exp_domain();
    let seg = o
        .face_segment(&CPoint::real(0.0, 0.0))
        .unwrap()
        .expect("segment");
    assert_eq!(seg.kind, FaceKind::Translation);
    assert_eq!(seg.direction, CVector::new(0.0, 1.0, 0.0, 0.0));
    assert_eq!(seg.extent, o.depth_cap());
    for i in 0..=10 {
        let q = seg.point(seg.extent * i as f64 / 10.0);
        assert_eq!((q.re1, q.re2, q.im2), (0.0, 0.0, 0.0));
    }
}

#[test]
fn strictly_convex_point_has_no_real_face() {
    let o = exp_domain();
    let p = CPoint::real(1.0, o.profile().eval(1.0));
    let seg = o.face_segment(&p).unwrap().expect("translation line");
    assert_eq!(seg.kind, FaceKind::Translation);
    assert_eq!(seg.direction.re1, 0.0);
    assert_eq!(seg.direction.re2, 0.0);
    // Any real step along the tangent leaves the boundary.
    let f = o.normal_tangent_frame(&p).unwrap();
    for &s in &[1e-3, -1e-3, 0.1] {
        let q = p.shifted(&f.tangent, s);
        assert!(q.re2 < o.profile().eval(q.re1) * (1.0 - 1e-9));
    }
}

#[test]
fn chord_face_is_affine() {
    let o = psi0_domain();
    let x = 3.0 / 64.0;
    let p = CPoint::real(x, o.profile().eval(x));
    let seg = o.face_segment(&p).unwrap().expect("affine face");
    assert_eq!(seg.kind, FaceKind::Affine);
    let base = |x: f64| (-1.0 / x).exp();
    let m = (base(dyadic(4)) - base(dyadic(5))) / (dyadic(4) - dyadic(5));
    assert_relative_eq!(
        seg.direction.re2 / seg.direction.re1,
        m,
        max_relative = 1e-9
    );
    assert_relative_eq!(seg.direction.norm(), 1.0, max_relative = 1e-14);
    assert_relative_eq!(seg.base.re1, dyadic(5), max_relative = 1e-12);
    assert_relative_eq!(seg.point(seg.extent).re1, dyadic(4), max_relative = 1e-12);
    for i in 0..=16 {
        let q = seg.point(seg.extent * i as f64 / 16.0);
        assert!((q.re2 - o.profile().eval(q.re1)).abs() <= 1e-9 * p.re2);
    }
}

#[test]
fn face_requires_boundary_point() {
    let o = exp_domain();
    assert!(matches!(
        o.face_segment(&CPoint::real(0.0, 1.0)),
        Err(LabError::NotOnBoundary { .. })
    ));
}

fn interior_point() -> impl Strategy<Value = CPoint> {
    (-0.8f64..0.8, 1e-3f64..0.5, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, h, y1, y2)| {
        let psi = Profile::exp_power(1.0, 1.0).unwrap();
        CPoint::new(a, y1, psi.eval(a) + h, y2)
    })
}

fn direction() -> impl Strategy<Value = CVector> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("nonzero", |v| {
            v.0.abs() + v.1.abs() + v.2.abs() + v.3.abs() > 0.1
        })
        .prop_map(|(a, b, c, d)| CVector::new(a, b, c, d).unit().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn directional_dominates_euclidean(z in interior_point(), v in direction()) {
        let o = exp_domain();
        let d = o.boundary_distance(&z).unwrap();
        prop_assert!(o.directional_distance(&z, &v).unwrap() >= d - o.root_tol());
    }

    #[test]
    fn sampled_directions_recover_distance(z in interior_point()) {
        let o = exp_domain();
        let d = o.boundary_distance(&z).unwrap();
        let best = (0..64)
            .map(|k| {
                let t = TAU * k as f64 / 64.0;
                o.directional_distance(&z, &CVector::new(t.cos(), 0.0, t.sin(), 0.0)).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!(best <= d * 1.02 && best >= d - o.root_tol(), "{} vs {}", best, d);
    }

    #[test]
    fn projection_realizes_distance(z in interior_point()) {
        let o = exp_domain();
        let p = o.boundary_project(&z).unwrap();
        let d = o.boundary_distance(&z).unwrap();
        prop_assert!((p.dist(&z) - d).abs() <= o.root_tol());
        prop_assert!((p.re2 - o.profile().eval(p.re1)).abs() <= o.root_tol());
    }

    #[test]
    fn domain_is_convex(z in interior_point(), w in interior_point(), t in 0.0f64..1.0) {
        prop_assert!(exp_domain().contains(&z.lerp(&w, t)));
    }

    #[test]
    fn fast_paths_match_generic_solver(z in interior_point(), phase in 0.0f64..TAU, scale in 0.2f64..3.0) {
        let o = exp_domain();
        let e = Complex64::from_polar(scale, phase);
        for v in [CVector::from_complex(e, Complex64::new(0.0, 0.0)), CVector::from_complex(Complex64::new(0.0, 0.0), e)] {
            let fast = o.directional_distance(&z, &v).unwrap();
            let generic = o.directional_distance_generic(&z, &v);
            prop_assert!((fast - generic).abs() <= 10.0 * o.root_tol(), "{} vs {}", fast, generic);
        }
    }
}
