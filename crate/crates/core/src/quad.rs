//! Adaptive quadrature helpers.

/// Adaptive Simpson's rule on a finite interval.
///
/// `tol` is an absolute tolerance for the whole interval; subdivision stops
/// once the local Richardson error estimate is below the local share of the
/// tolerance or the maximum depth is reached.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return left + right + err / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integral of `f` over `[a, ∞)` for integrands with at least power-law
/// decay: integrates doubling windows until their contribution falls below
/// the tolerance.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: &F, a: f64, tol: f64) -> f64 {
    assert!(a > 0.0);
    let mut lo = a;
    let mut total = 0.0;
    for _ in 0..200 {
        let hi = lo * 2.0;
        let piece = adaptive_simpson(f, lo, hi, tol * 0.05);
        total += piece;
        if piece.abs() < 0.2 * tol && f(hi).abs() * hi < tol {
            break;
        }
        lo = hi;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let v = adaptive_simpson(&|x| x * x * x, 0.0, 2.0, 1e-12);
        assert_relative_eq!(v, 4.0, epsilon = 1e-11);
    }

    #[test]
    fn gaussian_tail() {
        let v = integrate_to_infinity(&|x| (-x * x).exp(), 0.5, 1e-11);
        // erfc(1/2) * sqrt(pi)/2
        assert_relative_eq!(v, 0.42494591904007666, epsilon = 1e-9);
    }

    #[test]
    fn log_singularity_handled() {
        let v = adaptive_simpson(&|x: f64| if x == 0.0 { 0.0 } else { x.ln() }, 0.0, 1.0, 1e-10);
        assert_relative_eq!(v, -1.0, epsilon = 1e-7);
    }
}
