//! Scaled modified Bessel functions and a few fixed constants.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577215664901532860606512090082402431;

/// Catalan's constant.
pub const CATALAN: f64 = 0.915965594177219015054603514932384110;

/// `e^{-x} I_0(x)` for `x >= 0`.
pub fn i0e(x: f64) -> f64 {
    ine(0, x)
}

/// `e^{-x} I_n(x)` for `x >= 0`.
///
/// Power series for small arguments, asymptotic expansion for large ones.
pub fn ine(n: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < 30.0 + n as f64 {
        // series: I_n(x) = sum_k (x/2)^(2k+n) / (k! (k+n)!)
        let half = x / 2.0;
        // leading term (x/2)^n / n!, in log form to dodge overflow
        let mut log_lead = n as f64 * half.ln();
        for k in 1..=n {
            log_lead -= (k as f64).ln();
        }
        let lead = (log_lead - x).exp();
        let mut term = 1.0;
        let mut sum = 1.0;
        let h2 = half * half;
        for k in 1..500 {
            term *= h2 / (k as f64 * (k + n as usize) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        lead * sum
    } else {
        // asymptotic: e^{-x} I_n(x) ~ (2πx)^{-1/2} Σ_k (-1)^k a_k(n)/x^k
        // with a_k built from μ = 4n².
        let mu = 4.0 * (n as f64) * (n as f64);
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        for k in 1..30 {
            let kf = k as f64;
            term *= -(mu - (2.0 * kf - 1.0) * (2.0 * kf - 1.0)) / (8.0 * kf * x);
            if term.abs() > sum.abs() {
                break; // divergent tail, stop at smallest term
            }
            sum += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// All of `e^{-x} I_k(x)` for `k = 0..=max_order` by Miller's backward
/// recurrence, normalized with `I_0 + 2 Σ_{k≥1} I_k = e^x`.
pub fn ine_family(max_order: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; max_order + 1];
        v[0] = 1.0;
        return v;
    }
    let start = max_order + 25 + (3.0 * x.sqrt()) as usize + (x as usize).min(20_000);
    let mut above = 0.0_f64; // surrogate I_{k+1}
    let mut cur = 1e-300_f64; // surrogate I_k, starting at k = start
    let mut out = vec![0.0; max_order + 1];
    let mut norm = 2.0 * cur; // accumulates I_0 + 2 Σ_{k>=1} I_k in surrogate scale
    if start <= max_order {
        out[start] = cur;
    }
    for k in (1..=start).rev() {
        let below = above + 2.0 * k as f64 / x * cur; // I_{k-1}
        above = cur;
        cur = below;
        norm += if k == 1 { cur } else { 2.0 * cur };
        if k - 1 <= max_order {
            out[k - 1] = cur;
        }
        if cur > 1e260 {
            let s = 1e-260;
            above *= s;
            cur *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    // norm = e^x in surrogate scale, so out[k]/norm = e^{-x} I_k(x)
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}
