//! Spectral zeta derivative at the origin, computed from the heat trace.

use super::SpectralError;
use crate::quad::{adaptive_simpson, integrate_to_infinity};
use crate::special::EULER_GAMMA;

/// `ζ'_M(0)` for a finite positive spectrum, via the split heat-trace
/// integral with breakpoint `e^{-γ}`:
///
/// `ζ'(0) = ∫_0^{e^{-γ}} Tr(e^{-tM} - I) dt/t + ∫_{e^{-γ}}^∞ Tr e^{-tM} dt/t`.
///
/// The result equals `-Σ log μ_j`; going through the quadrature keeps this
/// an independent cross-check of the factorization path.
pub fn discrete_zeta_prime_zero(spectrum: &[f64], tol: f64) -> Result<f64, SpectralError> {
    for &mu in spectrum {
        if mu <= 0.0 {
            return Err(SpectralError::NonpositiveEigenvalue(mu));
        }
    }
    let split = (-EULER_GAMMA).exp();
    let small = |t: f64| -> f64 {
        if t == 0.0 {
            return -spectrum.iter().sum::<f64>();
        }
        spectrum.iter().map(|&mu| ((-t * mu).exp() - 1.0) / t).sum()
    };
    let large = |t: f64| -> f64 { spectrum.iter().map(|&mu| (-t * mu).exp()).sum::<f64>() / t };
    let head = adaptive_simpson(&small, 0.0, split, tol * 0.25);
    let tail = integrate_to_infinity(&large, split, tol * 0.25);
    Ok(head + tail)
}
