//! Continuous-time random walk estimators for the twisted Dirichlet heat
//! kernel.
//!
//! A walker jumps at total rate 4, choosing one of the four lattice
//! directions uniformly. Jumping along a bond that is not in the region
//! kills the path. Surviving paths carry the product of edge signs, so the
//! estimator's expectation is exactly an entry of `e^{-tΔ̃}`.

use crate::connection::FlatConnection;
use crate::geometry::{DomainGraph, LatticePoint};
use crate::special::i0e;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum WalkerError {
    #[error("vertex {0:?} is not in the graph")]
    VertexNotInGraph(LatticePoint),
    #[error("sample count must be positive")]
    NoSamples,
}

/// A Monte Carlo mean with its sampling error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Free-lattice return probability `P̃_0(t) = (e^{-2t} I_0(2t))^2`.
pub fn free_return_prob(t: f64) -> f64 {
    let v = i0e(2.0 * t);
    v * v
}

/// Per-vertex jump table: neighbor index and edge sign in the four lattice
/// directions, `None` for bonds that leave the region.
struct WalkContext {
    nbr: Vec<[Option<(u32, i8)>; 4]>,
}

impl WalkContext {
    fn new(graph: &DomainGraph, conn: &FlatConnection) -> Self {
        let mut nbr = vec![[None; 4]; graph.n()];
        for (ei, &(a, b)) in graph.edges.iter().enumerate() {
            let s = conn.edge_signs()[ei];
            let p = graph.vertices[a as usize];
            let q = graph.vertices[b as usize];
            // directions: 0 = +x, 1 = -x, 2 = +y, 3 = -y
            let (dir_ab, dir_ba) = match (q[0] - p[0], q[1] - p[1]) {
                (1, 0) => (0, 1),
                (-1, 0) => (1, 0),
                (0, 1) => (2, 3),
                _ => (3, 2),
            };
            nbr[a as usize][dir_ab] = Some((b, s));
            nbr[b as usize][dir_ba] = Some((a, s));
        }
        WalkContext { nbr }
    }

    /// Run one path to horizon `t`. Returns `None` if killed, otherwise the
    /// final vertex and the accumulated sign.
    fn run(&self, start: u32, t: f64, rng: &mut ChaCha8Rng) -> Option<(u32, i8)> {
        let mut pos = start;
        let mut sign: i8 = 1;
        let mut clock = 0.0f64;
        loop {
            let u: f64 = rng.random();
            clock -= (1.0 - u).ln() / 4.0;
            if clock > t {
                return Some((pos, sign));
            }
            let dir = rng.random_range(0..4usize);
            match self.nbr[pos as usize][dir] {
                Some((next, s)) => {
                    pos = next;
                    sign *= s;
                }
                None => return None,
            }
        }
    }
}

fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn summarize(values_sum: f64, squares_sum: f64, n: u64, seed: u64) -> McEstimate {
    let nf = n as f64;
    let mean = values_sum / nf;
    let var = if n > 1 {
        ((squares_sum - values_sum * values_sum / nf) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    McEstimate {
        mean,
        stderr: (var / nf).sqrt(),
        samples: n,
        seed,
    }
}

/// Monte Carlo estimate of the twisted Dirichlet diagonal kernel
/// `P̃(x, x; t)`, the `(x, x)` entry of `e^{-tΔ̃}`.
pub fn mc_dirichlet_kernel(
    graph: &DomainGraph,
    conn: &FlatConnection,
    x: LatticePoint,
    t: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, WalkerError> {
    if samples == 0 {
        return Err(WalkerError::NoSamples);
    }
    let start = graph
        .index_of(x)
        .ok_or(WalkerError::VertexNotInGraph(x))?;
    let ctx = WalkContext::new(graph, conn);
    let (sum, sq) = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let v = match ctx.run(start, t, &mut rng) {
                Some((end, sign)) if end == start => f64::from(sign),
                _ => 0.0,
            };
            (v, v * v)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(summarize(sum, sq, samples, seed))
}

/// Monte Carlo heat trace: stratified sum of per-vertex diagonal estimates
/// with a pooled standard error.
pub fn mc_heat_trace(
    graph: &DomainGraph,
    conn: &FlatConnection,
    t: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, WalkerError> {
    if samples == 0 {
        return Err(WalkerError::NoSamples);
    }
    let n = graph.n() as u64;
    if t == 0.0 {
        return Ok(McEstimate {
            mean: n as f64,
            stderr: 0.0,
            samples: 0,
            seed,
        });
    }
    let per_vertex = samples.div_ceil(n);
    let ctx = WalkContext::new(graph, conn);
    let per_vertex_stats: Vec<McEstimate> = (0..graph.n() as u32)
        .into_par_iter()
        .map(|v| {
            let base = u64::from(v) * per_vertex;
            let mut sum = 0.0;
            let mut sq = 0.0;
            for i in 0..per_vertex {
                let mut rng = path_rng(seed, base + i);
                let val = match ctx.run(v, t, &mut rng) {
                    Some((end, sign)) if end == v => f64::from(sign),
                    _ => 0.0,
                };
                sum += val;
                sq += val * val;
            }
            summarize(sum, sq, per_vertex, seed)
        })
        .collect();
    let mean: f64 = per_vertex_stats.iter().map(|e| e.mean).sum();
    let var: f64 = per_vertex_stats.iter().map(|e| e.stderr * e.stderr).sum();
    Ok(McEstimate {
        mean,
        stderr: var.sqrt(),
        samples: per_vertex * n,
        seed,
    })
}

/// One row of a domain-change decay table.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DecayRow {
    pub t: f64,
    /// `|P̃_Ω(x,x;t) - P̃_Θ(x,x;t)|` from Monte Carlo.
    pub diff: f64,
    pub diff_se: f64,
    /// Decay envelope `ρ̃(R, t)` at the separation of the change.
    pub envelope: f64,
    pub ratio: f64,
}

/// Decay envelope `ρ̃(R, t)`: `t e^{-R}` for small times, `t^{-1} e^{-R}`
/// up to `R/(4e²)`, Gaussian `t^{-1} e^{-R²/8t}` beyond.
pub fn decay_envelope(r: f64, t: f64) -> f64 {
    assert!(r > 0.0 && t > 0.0);
    if t <= 1.0 {
        t * (-r).exp()
    } else if t <= r / (4.0 * std::f64::consts::E * std::f64::consts::E) {
        (-r).exp() / t
    } else {
        (-r * r / (8.0 * t)).exp() / t
    }
}

/// Distance from `x` to the symmetric difference of the two instances:
/// vertices in one graph but not the other, and punctures in one Σ but not
/// the other. Infinite when the instances are identical.
pub fn change_distance(
    graph_a: &DomainGraph,
    conn_a: &FlatConnection,
    graph_b: &DomainGraph,
    conn_b: &FlatConnection,
    x: LatticePoint,
) -> f64 {
    let mut r2 = f64::INFINITY;
    let mut visit = |px: f64, py: f64| {
        let dx = px - x[0] as f64;
        let dy = py - x[1] as f64;
        r2 = r2.min(dx * dx + dy * dy);
    };
    for (g, other) in [(graph_a, graph_b), (graph_b, graph_a)] {
        for &v in &g.vertices {
            if other.index_of(v).is_none() {
                visit(v[0] as f64, v[1] as f64);
            }
        }
    }
    for (c, other) in [(conn_a, conn_b), (conn_b, conn_a)] {
        for &p in c.sigma().points_doubled() {
            if !other.sigma().points_doubled().contains(&p) {
                visit(p[0] as f64 / 2.0, p[1] as f64 / 2.0);
            }
        }
    }
    r2.sqrt()
}

/// Empirical domain-change decay: kernel differences at `x` across a time
/// grid against the envelope `ρ̃(R, t)`. Returns the table and the fitted
/// constant `ĉ = max diff/envelope`.
#[allow(clippy::too_many_arguments)]
pub fn domain_change_decay(
    graph_a: &DomainGraph,
    conn_a: &FlatConnection,
    graph_b: &DomainGraph,
    conn_b: &FlatConnection,
    x: LatticePoint,
    t_grid: &[f64],
    samples: u64,
    seed: u64,
) -> Result<(Vec<DecayRow>, f64), WalkerError> {
    let r = change_distance(graph_a, conn_a, graph_b, conn_b, x);
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut c_hat = 0.0f64;
    for (ti, &t) in t_grid.iter().enumerate() {
        // common random numbers on both sides: identical instances cancel
        // exactly and the difference estimate has lower variance
        let s = seed ^ ((ti as u64) << 32);
        let ea = mc_dirichlet_kernel(graph_a, conn_a, x, t, samples, s)?;
        let eb = mc_dirichlet_kernel(graph_b, conn_b, x, t, samples, s)?;
        let diff = (ea.mean - eb.mean).abs();
        let envelope = if r.is_finite() {
            decay_envelope(r, t)
        } else {
            0.0
        };
        let ratio = if envelope > 0.0 { diff / envelope } else { 0.0 };
        c_hat = c_hat.max(ratio);
        rows.push(DecayRow {
            t,
            diff,
            diff_se: (ea.stderr * ea.stderr + eb.stderr * eb.stderr).sqrt(),
            envelope,
            ratio,
        });
    }
    Ok((rows, c_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{CutDirection, PunctureSet};
    use crate::geometry::{build_graph, LatticeRegion, RegionSpec};
    use crate::spectral::SymmetricOperator;
    use approx::assert_relative_eq;

    fn square(side: i64) -> (LatticeRegion, DomainGraph) {
        let r = LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [side, 0], [side, side], [0, side]]],
            scale: 1,
        })
        .unwrap();
        let g = build_graph(&r).unwrap();
        (r, g)
    }

    #[test]
    fn free_return_prob_limits() {
        assert_eq!(free_return_prob(0.0), 1.0);
        // late-time tail: t * P0(t) -> 1/(4π)
        let t = 1000.0;
        assert_relative_eq!(
            t * free_return_prob(t),
            1.0 / (4.0 * std::f64::consts::PI),
            max_relative = 0.01
        );
    }

    #[test]
    fn free_return_prob_matches_mc() {
        // free walk on Z^2 via a large box with the walker started at center
        let t = 1.0;
        let mut hits = 0u64;
        let n = 200_000u64;
        for i in 0..n {
            let mut rng = path_rng(99, i);
            let mut pos = [0i64, 0i64];
            let mut clock = 0.0;
            loop {
                let u: f64 = rng.random();
                clock -= (1.0 - u).ln() / 4.0;
                if clock > t {
                    break;
                }
                match rng.random_range(0..4usize) {
                    0 => pos[0] += 1,
                    1 => pos[0] -= 1,
                    2 => pos[1] += 1,
                    _ => pos[1] -= 1,
                }
            }
            if pos == [0, 0] {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (p - free_return_prob(t)).abs() < 3.5 * se,
            "p = {}, want {}",
            p,
            free_return_prob(t)
        );
    }

    #[test]
    fn jump_count_is_poisson() {
        let t = 2.0;
        let n = 100_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let mut rng = path_rng(5, i);
            let mut k = 0u64;
            let mut clock = 0.0;
            loop {
                let u: f64 = rng.random();
                clock -= (1.0 - u).ln() / 4.0;
                if clock > t {
                    break;
                }
                k += 1;
            }
            sum += k as f64;
            sumsq += (k * k) as f64;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert_relative_eq!(mean, 4.0 * t, max_relative = 0.02);
        assert_relative_eq!(var, 4.0 * t, max_relative = 0.05);
    }

    #[test]
    fn coordinate_jump_counts_uncorrelated() {
        let t = 2.0;
        let n = 1_000_000u64;
        let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let mut rng = path_rng(11, i);
            let mut kx = 0.0;
            let mut ky = 0.0;
            let mut clock = 0.0;
            loop {
                let u: f64 = rng.random();
                clock -= (1.0 - u).ln() / 4.0;
                if clock > t {
                    break;
                }
                if rng.random_range(0..4usize) < 2 {
                    kx += 1.0;
                } else {
                    ky += 1.0;
                }
            }
            sx += kx;
            sy += ky;
            sxy += kx * ky;
            sxx += kx * kx;
            syy += ky * ky;
        }
        let nf = n as f64;
        let cov = sxy / nf - (sx / nf) * (sy / nf);
        let vx = sxx / nf - (sx / nf) * (sx / nf);
        let vy = syy / nf - (sy / nf) * (sy / nf);
        let r = cov / (vx * vy).sqrt();
        assert!(r.abs() < 0.01, "correlation {}", r);
    }

    #[test]
    fn single_vertex_survival() {
        let (_, g) = square(2);
        let conn = FlatConnection::trivial(&g);
        let t = 0.3;
        let est = mc_dirichlet_kernel(&g, &conn, [1, 1], t, 100_000, 1).unwrap();
        let want = (-4.0 * t).exp();
        assert!((est.mean - want).abs() < 3.0 * est.stderr);
    }

    #[test]
    fn kernel_matches_dense_untwisted() {
        let (_, g) = square(3);
        let conn = FlatConnection::trivial(&g);
        let op = SymmetricOperator::assemble(&g, &conn).unwrap();
        let t = 0.5;
        let diag = op.kernel_diagonal(t).unwrap();
        let x = [1, 1];
        let est = mc_dirichlet_kernel(&g, &conn, x, t, 200_000, 3).unwrap();
        let want = diag[g.index_of(x).unwrap() as usize];
        assert!(
            (est.mean - want).abs() < 3.0 * est.stderr,
            "mc {} ± {}, dense {}",
            est.mean,
            est.stderr,
            want
        );
    }

    #[test]
    fn kernel_matches_dense_twisted() {
        let r = LatticeRegion::new(&RegionSpec {
            loops: vec![
                vec![[0, 0], [6, 0], [6, 6], [0, 6]],
                vec![[2, 2], [4, 2], [4, 4], [2, 4]],
            ],
            scale: 1,
        })
        .unwrap();
        let g = build_graph(&r).unwrap();
        let sigma = PunctureSet::new(&r, &[[7, 7]]).unwrap();
        let conn = FlatConnection::build(&g, sigma, CutDirection::PosX);
        let op = SymmetricOperator::assemble(&g, &conn).unwrap();
        let t = 0.8;
        let diag = op.kernel_diagonal(t).unwrap();
        let x = [1, 3];
        let est = mc_dirichlet_kernel(&g, &conn, x, t, 300_000, 17).unwrap();
        let want = diag[g.index_of(x).unwrap() as usize];
        assert!(
            (est.mean - want).abs() < 3.0 * est.stderr,
            "mc {} ± {}, dense {}",
            est.mean,
            est.stderr,
            want
        );
    }

    #[test]
    fn trace_t_zero_and_dense_match() {
        let (_, g) = square(6);
        let conn = FlatConnection::trivial(&g);
        let op = SymmetricOperator::assemble(&g, &conn).unwrap();
        let zero = mc_heat_trace(&g, &conn, 0.0, 1000, 0).unwrap();
        assert_eq!(zero.mean, g.n() as f64);
        assert_eq!(zero.stderr, 0.0);
        let t = 1.0;
        let est = mc_heat_trace(&g, &conn, t, 500_000, 21).unwrap();
        let want = op.heat_trace(t).unwrap().value;
        assert!(
            (est.mean - want).abs() < 3.0 * est.stderr,
            "mc {} ± {}, dense {}",
            est.mean,
            est.stderr,
            want
        );
    }

    #[test]
    fn reproducible_under_seed() {
        let (_, g) = square(4);
        let conn = FlatConnection::trivial(&g);
        let a = mc_heat_trace(&g, &conn, 0.7, 20_000, 9).unwrap();
        let b = mc_heat_trace(&g, &conn, 0.7, 20_000, 9).unwrap();
        assert_eq!(a, b);
        let c = mc_heat_trace(&g, &conn, 0.7, 20_000, 10).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn identical_instances_zero_difference() {
        let (_, g) = square(5);
        let conn = FlatConnection::trivial(&g);
        let (rows, c_hat) = domain_change_decay(
            &g,
            &conn,
            &g,
            &conn,
            [2, 2],
            &[0.5, 1.0, 2.0],
            20_000,
            4,
        )
        .unwrap();
        // common random numbers: identical instances cancel exactly, and
        // R = ∞ gives a zero envelope by convention
        assert!(rows.iter().all(|r| r.diff == 0.0 && r.envelope == 0.0));
        assert_eq!(c_hat, 0.0);
    }

    #[test]
    fn nested_squares_decay_bounded() {
        let (_, ga) = square(13);
        let rb = LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[-2, -2], [15, -2], [15, 15], [-2, 15]]],
            scale: 1,
        })
        .unwrap();
        let gb = build_graph(&rb).unwrap();
        let ca = FlatConnection::trivial(&ga);
        let cb = FlatConnection::trivial(&gb);
        let x = [6, 6];
        let r = change_distance(&ga, &ca, &gb, &cb, x);
        assert!(r >= 6.0);
        let (rows, c_hat) =
            domain_change_decay(&ga, &ca, &gb, &cb, x, &[0.5, 1.0, 2.0, 4.0], 50_000, 8).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(c_hat.is_finite());
        // differences at these times are tiny; the MC noise floor dominates,
        // so just require every diff to be within noise + envelope allowance
        for row in &rows {
            assert!(row.diff <= 4.0 * row.diff_se + c_hat * row.envelope + 1e-12);
        }
    }

    #[test]
    fn envelope_regimes() {
        let r = 100.0;
        assert_relative_eq!(decay_envelope(r, 0.5), 0.5 * (-r).exp());
        assert_relative_eq!(decay_envelope(r, 2.0), (-r).exp() / 2.0);
        let big = r / (4.0 * std::f64::consts::E * std::f64::consts::E) + 1.0;
        assert_relative_eq!(
            decay_envelope(r, big),
            (-r * r / (8.0 * big)).exp() / big
        );
        // continuity at t = 1
        assert_relative_eq!(
            decay_envelope(r, 1.0 - 1e-9) / decay_envelope(r, 1.0 + 1e-9),
            1.0,
            max_relative = 1e-6
        );
    }

    #[test]
    fn rejects_bad_input() {
        let (_, g) = square(3);
        let conn = FlatConnection::trivial(&g);
        assert!(matches!(
            mc_dirichlet_kernel(&g, &conn, [9, 9], 1.0, 10, 0),
            Err(WalkerError::VertexNotInGraph(_))
        ));
        assert!(matches!(
            mc_dirichlet_kernel(&g, &conn, [1, 1], 1.0, 0, 0),
            Err(WalkerError::NoSamples)
        ));
    }
}
