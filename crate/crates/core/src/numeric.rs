//! Small numerical helpers shared by the modules.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use roots::{find_root_brent, SimpleConvergency};

use crate::error::{LabError, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns `(x, f(x))` of the best point seen.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > tol && iter < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Root of `f` inside a sign-changing bracket.
pub fn brent_root<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut conv = SimpleConvergency {
        eps: tol,
        max_iter: 200,
    };
    find_root_brent(a, b, f, &mut conv)
        .map_err(|e| LabError::Numeric(format!("root search: {e:?}")))
}

/// Bisection on a monotone predicate: returns the smallest `x` in `[lo, hi]`
/// (up to `tol` or floating-point resolution) where `above(x)` holds.
pub fn bisect_predicate<F: FnMut(f64) -> bool>(
    mut above: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Cached Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    static G2: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    static G4: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    static G8: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    static G16: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    static G64: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let cell = match n {
        2 => &G2,
        4 => &G4,
        8 => &G8,
        16 => &G16,
        64 => &G64,
        _ => panic!("unsupported Gauss-Legendre order {n}"),
    };
    cell.get_or_init(|| {
        let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("nonzero order"));
        let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    })
}

/// Fixed-order Gauss-Legendre integral of `f` over `[a, b]`.
pub fn gl_integrate<F: FnMut(f64) -> f64>(n: usize, a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre(n)
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Logarithmically spaced grid of `n` points from `a` to `b` (both > 0).
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, fx) = golden_min(|x| (x - 0.3) * (x - 0.3) + 1.0, -1.0, 2.0, 1e-10);
        // f is flat to rounding within ~sqrt(eps) of the vertex.
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_rules_integrate_polynomials() {
        let v = gl_integrate(8, 0.0, 2.0, |x| x.powi(7));
        assert!((v - 32.0).abs() < 1e-11);
        let mass: f64 = gauss_legendre(64).iter().map(|p| p.1).sum();
        assert!((mass - 2.0).abs() < 1e-13);
    }

    #[test]
    fn bisection_hits_threshold() {
        let x = bisect_predicate(|x| x * x >= 2.0, 0.0, 2.0, 0.0);
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
    }
}
