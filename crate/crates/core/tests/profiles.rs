use approx::assert_relative_eq;
use kobalab::profiles::dyadic;
use kobalab::{build_piecewise_max, mollify, Mollifier, Profile, ProfileSpec};
use proptest::prelude::*;

fn exp1() -> Profile {
    Profile::exp_power(1.0, 1.0).unwrap()
}

fn sqrt_profile() -> Profile {
    Profile::exp_power(0.5, 1.0).unwrap()
}

fn psi0() -> Profile {
    build_piecewise_max(&exp1(), 12).unwrap()
}

fn psi_inf() -> Profile {
    mollify(&psi0(), 12).unwrap()
}

fn all_kinds() -> Vec<Profile> {
    vec![
        exp1(),
        sqrt_profile(),
        Profile::exp_power(2.0, 0.5).unwrap(),
        psi0(),
        psi_inf(),
        ProfileSpec::Flat.build().unwrap(),
        ProfileSpec::Wedge { slope: 2.0 }.build().unwrap(),
    ]
}

/// Chord of `f` through (lo, f(lo)) and (hi, f(hi)), evaluated at x.
fn chord(f: impl Fn(f64) -> f64, lo: f64, hi: f64, x: f64) -> f64 {
    f(lo) + (f(hi) - f(lo)) * (x - lo) / (hi - lo)
}

#[test]
fn exp_power_values() {
    assert_relative_eq!(exp1().eval(0.5), (-2.0f64).exp(), max_relative = 1e-14);
    assert_relative_eq!(exp1().eval(0.5), 0.135335, epsilon = 1e-6);
    // 1/sqrt(1/16) = 4; x = 1 lies past the inflection of this profile.
    assert_relative_eq!(
        sqrt_profile().eval(1.0 / 16.0),
        (-4.0f64).exp(),
        max_relative = 1e-14
    );
    assert_relative_eq!(
        sqrt_profile().eval(-1.0 / 16.0),
        (-4.0f64).exp(),
        max_relative = 1e-14
    );
}

#[test]
fn every_kind_vanishes_at_origin() {
    for p in all_kinds() {
        assert_eq!(p.eval(0.0), 0.0, "{}", p.label());
    }
}

#[test]
fn exp_power_inverse() {
    assert_relative_eq!(
        exp1().inverse((-4.0f64).exp()).unwrap(),
        0.25,
        max_relative = 1e-13
    );
    let r = (-10.0f64).exp();
    assert_relative_eq!(
        sqrt_profile().inverse(r).unwrap(),
        0.01,
        max_relative = 1e-12
    );
    for &r in &[1e-8, 1e-5, 1e-3] {
        let expected = 1.0 / (1.0f64 / r).ln().powi(2);
        assert_relative_eq!(
            sqrt_profile().inverse(r).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }
    assert_eq!(exp1().inverse(0.0).unwrap(), 0.0);
}

#[test]
fn flat_profile_has_no_inverse() {
    assert!(ProfileSpec::Flat.build().unwrap().inverse(0.5).is_err());
}

#[test]
fn piecewise_inverse_recovers_nodes() {
    let p = psi0();
    for j in 1..=12 {
        let t = dyadic(j);
        // Ψ(t_j) underflows past j = 9; invert in log space there.
        let x = if j <= 9 {
            p.inverse(p.eval(t)).unwrap()
        } else {
            p.ln_inverse(p.ln_eval(t)).unwrap()
        };
        assert!((x - t).abs() <= 1e-10, "node {j}: {x} vs {t}");
    }
}

#[test]
fn piecewise_matches_base_at_nodes() {
    let (base, p) = (exp1(), psi0());
    for j in 0..=13 {
        let t = dyadic(j);
        assert_relative_eq!(p.eval(t), base.eval(t), max_relative = 1e-13);
    }
}

#[test]
fn piecewise_uses_even_chords_only() {
    let (base, p) = (exp1(), psi0());
    for n in 1..=8usize {
        let (lo, hi) = (dyadic(n + 1), dyadic(n));
        let mid = 0.5 * (lo + hi);
        if n % 2 == 0 && n >= 2 {
            let expected = chord(|x| base.eval(x), lo, hi, mid);
            assert_relative_eq!(p.eval(mid), expected, max_relative = 1e-12);
            assert!(p.eval(mid) > base.eval(mid));
        } else {
            assert_eq!(p.eval(mid), base.eval(mid), "odd interval {n}");
        }
    }
}

#[test]
fn piecewise_rejects_short_tables() {
    assert!(build_piecewise_max(&exp1(), 1).is_err());
    assert!(mollify(&exp1(), 8).is_err());
}

fn relative_second_differences(p: &Profile, xs: &[f64]) -> f64 {
    xs.windows(3)
        .map(|w| {
            let (a, b, c) = (p.eval(w[0]), p.eval(w[1]), p.eval(w[2]));
            let lhs = (c - b) / (w[2] - w[1]) - (b - a) / (w[1] - w[0]);
            let scale = ((c - b) / (w[2] - w[1]))
                .abs()
                .max((b - a) / (w[1] - w[0]))
                .max(1e-300);
            lhs / scale
        })
        .fold(f64::INFINITY, f64::min)
}

fn dyadic_grid() -> Vec<f64> {
    // 32 points per octave from 2^-9 to 2; deeper values underflow.
    (0..=10 * 32)
        .map(|i| 2f64.powf(-9.0 + i as f64 / 32.0))
        .collect()
}

#[test]
fn constructed_profiles_are_convex() {
    let grid = dyadic_grid();
    for p in [psi0(), psi_inf(), exp1(), sqrt_profile()] {
        let worst = relative_second_differences(&p, &grid);
        assert!(worst >= -1e-12, "{}: {worst:e}", p.label());
    }
}

#[test]
fn constructed_profiles_are_monotone() {
    let grid = dyadic_grid();
    for p in all_kinds() {
        for w in grid.windows(2) {
            assert!(p.eval(w[1]) >= p.eval(w[0]), "{} at {}", p.label(), w[0]);
        }
    }
}

#[test]
fn mollified_equals_piecewise_off_bands() {
    let (p0, pi) = (psi0(), psi_inf());
    let Profile::Mollified(m) = &pi else {
        panic!("not mollified")
    };
    let in_band = |x: f64| m.bands().iter().any(|b| x >= b.lo() && x <= b.hi());
    let mut checked = 0;
    for x in dyadic_grid() {
        if !in_band(x) {
            assert_eq!(pi.eval(x), p0.eval(x), "x = {x}");
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn mollified_dominates_piecewise() {
    let (p0, pi) = (psi0(), psi_inf());
    for x in dyadic_grid() {
        let gap = pi.eval(x) - p0.eval(x);
        assert!(gap >= -1e-12 * p0.eval(x), "x = {x}: {gap:e}");
    }
    for j in 2..=13 {
        let t = dyadic(j);
        assert!(pi.ln_eval(t) >= p0.ln_eval(t), "kink {j}");
    }
}

#[test]
fn mollified_smooths_every_kink() {
    let pi = psi_inf();
    for j in 2..=12 {
        let (l, r) = pi.slopes(dyadic(j));
        assert!((l - r).abs() <= 1e-9 * r.abs(), "kink {j}: {l:e} {r:e}");
    }
    let p0 = psi0();
    let (l, r) = p0.slopes(dyadic(4));
    assert!(r > l * (1.0 + 1e-3));
}

/// Simpson rule with many panels; only used as an independent check.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn smoothed_ramp_matches_direct_quadrature() {
    let k = Mollifier::default();
    let eps = 0.3;
    for &u in &[-0.2, -0.1, -0.02, 0.0, 0.05, 0.12, 0.2] {
        let direct = simpson(|y| (u - eps * y).max(0.0) * k.rho(y), -0.5, 0.5, 20_000);
        assert_relative_eq!(k.smoothed_ramp(u, eps), direct, epsilon = 1e-9);
        assert!(k.smoothed_ramp(u, eps) >= u.max(0.0) - 1e-15);
    }
}

#[test]
fn mollifier_kernel_properties() {
    let k = Mollifier::default();
    let mass = quadrature::double_exponential::integrate(|y| k.rho(y), -0.5, 0.5, 1e-14).integral;
    assert!((mass - 1.0).abs() <= 1e-10, "mass {mass}");
    assert!((k.mass() - 1.0).abs() <= 1e-10);
    for &y in &[0.5, 0.75, 1.0, -1.0, 3.0] {
        assert_eq!(k.rho(y), 0.0);
    }
    for i in 0..50 {
        let y = i as f64 / 100.0;
        assert!(k.rho(y) >= 0.0);
        assert_eq!(k.rho(y), k.rho(-y));
    }
    assert_relative_eq!(
        k.rho_scaled(0.1, 0.5),
        2.0 * k.rho(0.2),
        max_relative = 1e-15
    );
}

#[test]
fn band_derivatives_respect_growth_bound() {
    let pi = psi_inf();
    let base = exp1();
    let k = Mollifier::default();
    for j in 2..=8 {
        let t = dyadic(j);
        let h = t * 1e-3;
        for step in 0..=8 {
            let x = t * (0.8 + 0.05 * step as f64);
            let d1 = pi.slope(x);
            let d2 = (pi.slope(x + h) - pi.slope(x - h)) / (2.0 * h);
            let d3 = (pi.slope(x + h) - 2.0 * pi.slope(x) + pi.slope(x - h)) / (h * h);
            for (n, d) in [(1u32, d1), (2, d2), (3, d3)] {
                let bound = 2f64.powi(2 * n as i32 + 1) * k.derivative_norm(n) * base.eval(2.0 * t)
                    / t.powi(n as i32);
                assert!(d.abs() <= bound, "j {j} n {n} x {x}: {d:e} > {bound:e}");
            }
        }
    }
}

#[test]
fn mollified_derivatives_vanish_at_origin() {
    let pi = mollify(&build_piecewise_max(&exp1(), 40).unwrap(), 40).unwrap();
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for kk in 3..=30 {
        let x = 2f64.powi(-kk);
        let h = 1e-3 * x;
        let d1 = (pi.eval(x + h) - pi.eval(x - h)) / (2.0 * h);
        let d2 = (pi.eval(x + h) - 2.0 * pi.eval(x) + pi.eval(x - h)) / (h * h);
        if kk >= 6 {
            assert!(
                d1.abs() <= prev.0 && d2.abs() <= prev.1.max(1e-300),
                "k {kk}: {d1:e} {d2:e}"
            );
        }
        prev = (d1.abs(), d2.abs());
    }
    assert!(prev.0 < 1e-300 && prev.1 < 1e-300);
}

#[test]
fn log_space_round_trip_on_wide_range() {
    for p in [exp1(), sqrt_profile(), psi0(), psi_inf()] {
        for i in 0..=80 {
            let x = 10f64.powf(-8.0 + i as f64 / 10.0);
            let back = p.ln_inverse(p.ln_eval(x)).unwrap();
            assert!(
                (back - x).abs() <= 1e-10 * x,
                "{}: {x} -> {back}",
                p.label()
            );
        }
    }
}

#[test]
fn spec_round_trips_through_json() {
    let spec = ProfileSpec::Mollified {
        alpha: 1.0,
        c: 1.0,
        j_max: 40,
    };
    let text = serde_json::to_string(&spec).unwrap();
    assert!(text.contains("\"kind\":\"mollified\""));
    let back: ProfileSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
}

proptest! {
    #[test]
    fn profiles_are_even(x in -2.0f64..2.0, which in 0usize..7) {
        let p = &all_kinds()[which];
        prop_assert_eq!(p.eval(x), p.eval(-x));
    }

    #[test]
    fn chords_lie_above_profile(a in 1e-4f64..1.0, b in 1e-4f64..1.0, s in 0.0f64..1.0, which in 0usize..5) {
        let p = &all_kinds()[which];
        let x = a + s * (b - a);
        let line = chord(|x| p.eval(x), a, b, x);
        prop_assert!(p.eval(x) <= line * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn inverse_undoes_eval(x in 0.05f64..1.0, which in 0usize..5) {
        let p = &all_kinds()[which];
        let y = p.eval(x);
        let back = p.inverse(y).unwrap();
        prop_assert!((p.eval(back) - y).abs() <= 1e-12 * y.max(1e-300));
    }
}

#[test]
fn log_slope_matches_log_differences() {
    // Sample points avoid kinks; deep ones have Ψ far below f64 range.
    let xs = [0.3, 0.1, 0.043, 0.0123, 3.1e-3, 4.4e-4, 1.7e-5, 2.3e-6];
    for p in [exp1(), sqrt_profile(), psi0(), psi_inf()] {
        for &x in &xs {
            let h = 1e-6 * x;
            let fd = (p.ln_eval(x + h) - p.ln_eval(x - h)) / (2.0 * h);
            assert_relative_eq!(p.log_slope(x), fd, max_relative = 1e-5);
            assert_relative_eq!(p.log_slope(-x), -fd, max_relative = 1e-5);
        }
    }
}
