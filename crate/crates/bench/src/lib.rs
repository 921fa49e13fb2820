//! Shared fixtures for the benchmarks.

use kobalab::{CPoint, DomainOracle, ProfileSpec};

/// Ω for e^{-c/|x|^α}.
pub fn exp_power(alpha: f64) -> DomainOracle {
    DomainOracle::new(
        ProfileSpec::ExpPower { alpha, c: 1.0 }
            .build()
            .expect("valid profile"),
    )
}

/// Ω for the smoothed counterexample over e^{-1/√x}.
pub fn mollified(j_max: usize) -> DomainOracle {
    DomainOracle::new(
        ProfileSpec::Mollified {
            alpha: 0.5,
            c: 1.0,
            j_max,
        }
        .build()
        .expect("valid profile"),
    )
}

/// The interior point (x, Ψ(x) + height).
pub fn above(oracle: &DomainOracle, x: f64, height: f64) -> CPoint {
    CPoint::real(x, oracle.profile().eval(x) + height)
}
