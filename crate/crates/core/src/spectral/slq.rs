//! Stochastic Lanczos quadrature for large heat traces.
//!
//! Only used as a cross-check on instances past the dense threshold; all
//! quantitative results go through the exact factorization or spectra.

use super::SymmetricOperator;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Hutchinson estimate of `Tr e^{-tA}` with Rademacher probes, each probe
/// resolved by `steps` Lanczos iterations. Returns `(mean, standard error)`.
pub fn slq_heat_trace(
    op: &SymmetricOperator,
    t: f64,
    probes: usize,
    steps: usize,
    seed: u64,
) -> (f64, f64) {
    assert!(probes >= 2);
    let n = op.n();
    let m = steps.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(probes);
    for _ in 0..probes {
        let z: Vec<f64> = (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        samples.push(lanczos_quadrature(op, &z, m, t));
    }
    let mean = samples.iter().sum::<f64>() / probes as f64;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
        / (probes as f64 - 1.0);
    (mean, (var / probes as f64).sqrt())
}

/// `zᵀ e^{-tA} z` via the Lanczos tridiagonalization seeded at `z`.
fn lanczos_quadrature(op: &SymmetricOperator, z: &[f64], m: usize, t: f64) -> f64 {
    let n = z.len();
    let znorm2 = z.iter().map(|v| v * v).sum::<f64>();
    let znorm = znorm2.sqrt();

    let mut q_prev = vec![0.0; n];
    let mut q: Vec<f64> = z.iter().map(|v| v / znorm).collect();
    let mut alphas = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m);
    let mut w = vec![0.0; n];
    let mut beta_prev = 0.0;
    for _ in 0..m {
        op.matvec(&q, &mut w);
        let alpha: f64 = w.iter().zip(&q).map(|(a, b)| a * b).sum();
        for i in 0..n {
            w[i] -= alpha * q[i] + beta_prev * q_prev[i];
        }
        alphas.push(alpha);
        let beta = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if beta < 1e-12 {
            break;
        }
        betas.push(beta);
        for i in 0..n {
            q_prev[i] = q[i];
            q[i] = w[i] / beta;
        }
        beta_prev = beta;
    }

    let k = alphas.len();
    let mut tri = DMatrix::zeros(k, k);
    for (i, &a) in alphas.iter().enumerate() {
        tri[(i, i)] = a;
    }
    for (i, &b) in betas.iter().take(k - 1).enumerate() {
        tri[(i, i + 1)] = b;
        tri[(i + 1, i)] = b;
    }
    let eig = SymmetricEigen::new(tri);
    let mut acc = 0.0;
    for j in 0..k {
        let w0 = eig.eigenvectors[(0, j)];
        acc += w0 * w0 * (-t * eig.eigenvalues[j]).exp();
    }
    znorm2 * acc
}
