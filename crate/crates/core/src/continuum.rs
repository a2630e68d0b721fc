//! Continuum oracles: Kac heat-trace coefficients, exact rectangle Dirichlet
//! spectra and theta-function heat traces, and `ζ'(0)` for rectangles.

use crate::geometry::GeometrySummary;
use crate::quad::adaptive_simpson;
use crate::special::EULER_GAMMA;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ContinuumError {
    #[error("side lengths must be positive, got {0} x {1}")]
    BadRectangle(f64, f64),
    #[error("quadrature failed to stabilize: {0}")]
    QuadratureUnstable(String),
}

/// Short-time heat-trace coefficients of a polygon:
/// `Tr e^{-tΔ} = a0/t + a1/√t + a2 + O(e^{-δ²/t})`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KacCoefficients {
    /// `area / 4π`
    pub a0: f64,
    /// `-perimeter / 8√π`
    pub a1: f64,
    /// `Σ_corners (π² - θ²) / 24πθ`
    pub a2: f64,
}

pub fn kac_coefficients(summary: &GeometrySummary) -> KacCoefficients {
    let a2 = summary
        .corners
        .iter()
        .map(|c| (PI * PI - c.theta * c.theta) / (24.0 * PI * c.theta))
        .sum();
    KacCoefficients {
        a0: summary.area() / (4.0 * PI),
        a1: -summary.perimeter / (8.0 * PI.sqrt()),
        a2,
    }
}

impl KacCoefficients {
    /// Coefficients of an axis-aligned `a x b` rectangle.
    pub fn rectangle(a: f64, b: f64) -> KacCoefficients {
        KacCoefficients {
            a0: a * b / (4.0 * PI),
            a1: -2.0 * (a + b) / (8.0 * PI.sqrt()),
            a2: 0.25,
        }
    }
}

/// `Ψ(q) = Σ_{m∈Z} e^{-q m²}`, with the modular switch
/// `Ψ(q) = √(π/q) Ψ(π²/q)` applied for `q < 1` so a handful of terms always
/// suffice.
fn theta_sum(q: f64) -> f64 {
    debug_assert!(q > 0.0);
    if q < 1.0 {
        return (PI / q).sqrt() * theta_sum(PI * PI / q);
    }
    let mut s = 1.0;
    for m in 1..200 {
        let term = 2.0 * (-q * (m * m) as f64).exp();
        s += term;
        if term < 1e-300 {
            break;
        }
    }
    s
}

/// Dirichlet heat trace of an `a x b` rectangle,
/// `Σ_{m,n ≥ 1} exp(-t π²(m²/a² + n²/b²))`, as a product of one-dimensional
/// theta sums.
pub fn rectangle_heat_trace(a: f64, b: f64, t: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0 && t > 0.0);
    let s = |l: f64| (theta_sum(t * PI * PI / (l * l)) - 1.0) / 2.0;
    s(a) * s(b)
}

/// Dirichlet eigenvalues `π²(m²/a² + n²/b²)` of the rectangle below the
/// cutoff, in increasing order.
pub fn rectangle_spectrum(a: f64, b: f64, cutoff: f64) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0);
    let mut eigs = Vec::new();
    let pi2 = PI * PI;
    let m_max = (a * (cutoff / pi2).sqrt()).ceil() as i64;
    for m in 1..=m_max {
        let part = pi2 * (m * m) as f64 / (a * a);
        if part > cutoff {
            break;
        }
        let n_max = (b * ((cutoff - part) / pi2).sqrt()).ceil() as i64;
        for n in 1..=n_max {
            let lam = part + pi2 * (n * n) as f64 / (b * b);
            if lam <= cutoff {
                eigs.push(lam);
            }
        }
    }
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// `ζ'(0)` of the Dirichlet Laplacian on an `a x b` rectangle, from
/// `ζ'(0) = ∫_0^∞ F(t) dt/t` with
/// `F(t) = Tr e^{-tΔ} - a0/t - a1/√t - a2·1_{[0,e^{-γ}]}(t)`.
pub fn continuum_zeta_prime_zero(a: f64, b: f64) -> Result<f64, ContinuumError> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(ContinuumError::BadRectangle(a, b));
    }
    let k = KacCoefficients::rectangle(a, b);
    let split = (-EULER_GAMMA).exp();
    // Below t0 the integrand is bounded by e^{-min(a,b)²/t} prefactors and
    // evaluating it in doubles only returns cancellation noise.
    let t0 = a.min(b) * a.min(b) / 70.0;
    let head = |t: f64| {
        (rectangle_heat_trace(a, b, t) - k.a0 / t - k.a1 / t.sqrt() - k.a2) / t
    };
    let mid = |t: f64| (rectangle_heat_trace(a, b, t) - k.a0 / t - k.a1 / t.sqrt()) / t;
    let lam1 = PI * PI * (1.0 / (a * a) + 1.0 / (b * b));
    let horizon = (80.0 / lam1).max(4.0);
    let value = adaptive_simpson(&head, t0, split, 2e-10)
        + adaptive_simpson(&mid, split, horizon, 2e-10)
        // analytic tail of the subtracted terms; the trace itself is below
        // e^{-80} past the horizon
        - k.a0 / horizon
        - 2.0 * k.a1 / horizon.sqrt();
    // stability under tolerance tightening
    let check = adaptive_simpson(&head, t0, split, 2e-11)
        + adaptive_simpson(&mid, split, horizon, 2e-11)
        - k.a0 / horizon
        - 2.0 * k.a1 / horizon.sqrt();
    if (value - check).abs() > 1e-8 {
        return Err(ContinuumError::QuadratureUnstable(format!(
            "{} vs {}",
            value, check
        )));
    }
    Ok(check)
}

/// Half-plane heat-kernel defect `∂P_H(x_perp; t) = -(1/4πt) e^{-x_perp²/t}`.
pub fn half_plane_defect(x_perp: f64, t: f64) -> f64 {
    assert!(x_perp >= 0.0 && t > 0.0);
    -(-x_perp * x_perp / t).exp() / (4.0 * PI * t)
}
