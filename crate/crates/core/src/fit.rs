//! Scale sweeps, boundary-site classification, and regression extraction of
//! the log-determinant expansion coefficients.
//!
//! The model fitted against a sweep is
//! `logdet(L) = α0·n(L) + Σ_c β_c·N_c(L) + α2·log L + α3`
//! where `N_c` counts exterior-boundary sites of local shape class `c`.
//! Classes whose counts do not vary with `L` (corner neighborhoods) are
//! collinear with the intercept and are absorbed into it.

use crate::connection::{ConnectionError, CutDirection, FlatConnection, PunctureSet};
use crate::geometry::{
    build_graph, GeometryError, LatticePoint, LatticeRegion,
};
use crate::quad::adaptive_simpson;
use crate::special::{i0e, CATALAN, EULER_GAMMA};
use crate::spectral::{SpectralError, SymmetricOperator};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} distinct scales, got {got}")]
    TooFewScales { need: usize, got: usize },
    #[error("scale range too narrow: max/min = {0:.3}")]
    RangeTooNarrow(f64),
    #[error("design matrix is rank deficient (condition {0:.3e})")]
    RankDeficient(f64),
    #[error("alpha0 oracles disagree: quadrature {quadrature}, lattice {lattice}")]
    OracleDisagreement { quadrature: f64, lattice: f64 },
    #[error("no valid puncture position near {0:?} at scale {1}")]
    PunctureSnap([i64; 2], i64),
    #[error("scale {l}: {source}")]
    Spectral { l: i64, source: SpectralError },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
}

/// Per-site bulk coefficient as a time integral of the free return
/// probability: `α0 = ∫ [1_{[0,e^{-γ})}(t) - P̃_0(t)] dt/t`.
pub fn alpha0_quadrature() -> f64 {
    let p0 = |t: f64| {
        let v = i0e(2.0 * t);
        v * v
    };
    let split = (-EULER_GAMMA).exp();
    let head = adaptive_simpson(
        &|t| if t == 0.0 { 4.0 } else { (1.0 - p0(t)) / t },
        0.0,
        split,
        1e-11,
    );
    let horizon = 64.0f64;
    let mid = adaptive_simpson(&|t| p0(t) / t, split, horizon, 1e-11);
    // remaining ∫_T^∞ P̃_0/t dt via the substitution t = u^{-2}, which turns
    // the 1/(4πt²) tail into a linear integrand near u = 0
    let tail = adaptive_simpson(
        &|u: f64| {
            if u == 0.0 {
                0.0
            } else {
                2.0 * p0(u.powi(-2)) / u
            }
        },
        0.0,
        1.0 / horizon.sqrt(),
        1e-12,
    );
    head - mid - tail
}

/// Independent oracle for the same constant: the lattice Green integral
/// `(1/4π²) ∫∫ log(4 - 2cosθ - 2cosφ) dθ dφ`, with the inner integral done
/// in closed form.
pub fn alpha0_lattice() -> f64 {
    let f = |theta: f64| {
        let a = 4.0 - 2.0 * theta.cos();
        ((a + (a * a - 4.0).sqrt()) / 2.0).ln()
    };
    adaptive_simpson(&f, 0.0, PI, 1e-12) / PI
}

/// Cross-checked α0 reference; errors if the two oracles drift apart.
pub fn alpha0_reference() -> Result<f64, FitError> {
    let quadrature = alpha0_quadrature();
    let lattice = alpha0_lattice();
    if (quadrature - lattice).abs() > 1e-8 {
        return Err(FitError::OracleDisagreement {
            quadrature,
            lattice,
        });
    }
    Ok(lattice)
}

/// Closed form of the bulk constant, `4G/π` with `G` Catalan's constant.
pub fn alpha0_closed_form() -> f64 {
    4.0 * CATALAN / PI
}

/// Per-site coefficient of an axis-aligned straight edge, from the discrete
/// half-plane reflection kernel:
/// `∫_0^∞ e^{-4t}I_0(2t) Σ_{b≥1} e^{-4t}I_{2b}(2t) dt/t`.
pub fn edge_site_coefficient() -> f64 {
    let g = |t: f64| {
        let x = 2.0 * t;
        let i0 = i0e(x);
        // Σ_{b≥1} e^{-x} I_{2b}(x) = ((1 + e^{-2x})/2 - e^{-x}I_0(x))/2
        let even_tail = ((1.0 + (-2.0 * x).exp()) / 2.0 - i0) / 2.0;
        i0 * even_tail / t
    };
    let horizon = 60.0f64;
    let head = adaptive_simpson(&|t| if t == 0.0 { 0.0 } else { g(t) }, 0.0, horizon, 1e-12);
    // t^{-3/2} tail flattened by t = u^{-2}
    let tail = adaptive_simpson(
        &|u: f64| {
            if u == 0.0 {
                1.0 / (4.0 * PI.sqrt())
            } else {
                2.0 * g(u.powi(-2)) / (u * u * u)
            }
        },
        0.0,
        1.0 / horizon.sqrt(),
        1e-12,
    );
    head + tail
}

fn disc_offsets() -> &'static [[i64; 2]] {
    static OFFSETS: OnceLock<Vec<[i64; 2]>> = OnceLock::new();
    OFFSETS.get_or_init(|| {
        let mut v = Vec::new();
        for i in -4i64..=4 {
            for j in -4i64..=4 {
                if i * i + j * j <= 16 {
                    v.push([i, j]);
                }
            }
        }
        v
    })
}

fn transform(p: [i64; 2], op: usize) -> [i64; 2] {
    let [i, j] = p;
    match op {
        0 => [i, j],
        1 => [-i, j],
        2 => [i, -j],
        3 => [-i, -j],
        4 => [j, i],
        5 => [-j, i],
        6 => [j, -i],
        _ => [-j, -i],
    }
}

/// Local-shape class of a boundary site: the membership pattern of the
/// region over the radius-2 disc around `x` (sampled at half-integer
/// resolution), canonicalized over the eight lattice symmetries.
pub fn boundary_signature(region: &LatticeRegion, x: LatticePoint) -> u64 {
    let c = [2 * x[0], 2 * x[1]];
    let mut best = u64::MAX;
    for op in 0..8 {
        let mut bits = 0u64;
        for (k, &o) in disc_offsets().iter().enumerate() {
            let t = transform(o, op);
            if region.contains_doubled([c[0] + t[0], c[1] + t[1]]) {
                bits |= 1 << k;
            }
        }
        best = best.min(bits);
    }
    best
}

/// Move a doubled-coordinate point onto half-integer coordinates without
/// entering the region. Scaling a puncture by an even factor lands on
/// integer coordinates; the nearest half-integer neighbor in the same
/// complement component carries the same monodromy class.
pub fn snap_puncture(region: &LatticeRegion, p: [i64; 2]) -> Result<[i64; 2], FitError> {
    let offsets = |v: i64| if v % 2 != 0 { vec![0] } else { vec![1, -1] };
    for d0 in offsets(p[0]) {
        for d1 in offsets(p[1]) {
            let c = [p[0] + d0, p[1] + d1];
            if !region.contains_doubled(c) {
                return Ok(c);
            }
        }
    }
    Err(FitError::PunctureSnap(p, region.scale()))
}

/// One point of a scale sweep.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepRecord {
    pub l: i64,
    pub n: usize,
    /// Boundary class signature -> site count; the classes partition the
    /// exterior boundary.
    pub class_counts: BTreeMap<u64, u64>,
    pub logdet: f64,
    /// Punctures actually used at this scale, in doubled coordinates.
    pub sigma_doubled: Vec<[i64; 2]>,
    pub runtime_ms: u64,
}

/// Compute one sweep point: scaled region, snapped punctures, assembly,
/// factorization, boundary classification.
pub fn sweep_one(
    base: &LatticeRegion,
    sigma_base_doubled: &[[i64; 2]],
    l: i64,
    cut: CutDirection,
) -> Result<SweepRecord, FitError> {
    let start = std::time::Instant::now();
    let region = base.with_scale(base.scale() * l)?;
    let graph = build_graph(&region)?;
    let mut sigma_doubled = Vec::with_capacity(sigma_base_doubled.len());
    for &p in sigma_base_doubled {
        sigma_doubled.push(snap_puncture(&region, [p[0] * l, p[1] * l])?);
    }
    let sigma = PunctureSet::new(&region, &sigma_doubled)?;
    let conn = FlatConnection::build(&graph, sigma, cut);
    let op = SymmetricOperator::assemble(&graph, &conn)
        .map_err(|e| FitError::Spectral { l, source: e })?;
    let logdet = op
        .logdet()
        .map_err(|e| FitError::Spectral { l, source: e })?;
    let mut class_counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &x in &graph.ext_boundary {
        *class_counts
            .entry(boundary_signature(&region, x))
            .or_insert(0) += 1;
    }
    Ok(SweepRecord {
        l,
        n: graph.n(),
        class_counts,
        logdet,
        sigma_doubled,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// Sweep over a list of scales, parallel over `L`.
pub fn sweep(
    base: &LatticeRegion,
    sigma_base_doubled: &[[i64; 2]],
    ls: &[i64],
    cut: CutDirection,
) -> Result<Vec<SweepRecord>, FitError> {
    let mut records = ls
        .par_iter()
        .map(|&l| sweep_one(base, sigma_base_doubled, l, cut))
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by_key(|r| r.l);
    Ok(records)
}

/// Geometric scale grid from `lo` to `hi` with ratio ~√2, deduplicated.
pub fn geometric_scales(lo: i64, hi: i64) -> Vec<i64> {
    assert!(lo >= 2 && hi >= lo);
    let mut ls = Vec::new();
    let mut x = lo as f64;
    while (x.round() as i64) < hi {
        ls.push(x.round() as i64);
        x *= std::f64::consts::SQRT_2;
    }
    ls.push(hi);
    ls.dedup();
    ls
}

/// Which sign convention for the `log L` coefficient the data supports:
/// `+Σ(π²-θ²)/12πθ` or its negation `-2a2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SignVerdict {
    #[serde(rename = "plus_corner_sum")]
    PlusCornerSum,
    #[serde(rename = "minus_two_a2")]
    MinusTwoA2,
    #[serde(rename = "indeterminate")]
    Indeterminate,
}

/// Compare a fitted `log L` coefficient against `s = Σ(π²-θ²)/12πθ`.
pub fn sign_verdict(alpha2: f64, corner_sum: f64) -> SignVerdict {
    let d_plus = (alpha2 - corner_sum).abs();
    let d_minus = (alpha2 + corner_sum).abs();
    let gate = 0.25 * corner_sum.abs();
    if d_plus < d_minus && d_plus < gate {
        SignVerdict::PlusCornerSum
    } else if d_minus < d_plus && d_minus < gate {
        SignVerdict::MinusTwoA2
    } else {
        SignVerdict::Indeterminate
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FitReport {
    pub alpha0: f64,
    pub alpha0_pinned: bool,
    /// Coefficients of boundary classes kept as regressors.
    pub class_coefficients: BTreeMap<u64, f64>,
    /// Classes absorbed into other columns: constant counts fold into the
    /// intercept, affinely dependent counts into the retained classes.
    pub merged_classes: Vec<u64>,
    pub alpha2: f64,
    pub alpha3: f64,
    /// Condition number of the equilibrated design matrix.
    pub condition: f64,
    pub residuals: Vec<(i64, f64)>,
    pub rms_residual: f64,
    pub alpha2_verdict: SignVerdict,
}

/// Least squares of logdet against `{n, variable class counts, log L, 1}`.
///
/// `pin_alpha0` removes the bulk column and subtracts the pinned value;
/// `corner_sum` is `Σ(π²-θ²)/12πθ` of the base polygon, used only for the
/// sign verdict.
pub fn fit_expansion(
    records: &[SweepRecord],
    pin_alpha0: Option<f64>,
    corner_sum: Option<f64>,
) -> Result<FitReport, FitError> {
    let ls: BTreeSet<i64> = records.iter().map(|r| r.l).collect();
    if ls.len() < 6 {
        return Err(FitError::TooFewScales {
            need: 6,
            got: ls.len(),
        });
    }
    let lmin = *ls.iter().next().unwrap() as f64;
    let lmax = *ls.iter().last().unwrap() as f64;
    if lmax / lmin < 8.0 {
        return Err(FitError::RangeTooNarrow(lmax / lmin));
    }

    let all_classes: BTreeSet<u64> = records
        .iter()
        .flat_map(|r| r.class_counts.keys().copied())
        .collect();
    let count_of = |r: &SweepRecord, c: u64| *r.class_counts.get(&c).unwrap_or(&0) as f64;
    let mut variable: Vec<u64> = Vec::new();
    let mut merged: Vec<u64> = Vec::new();
    for &c in &all_classes {
        let first = count_of(&records[0], c);
        if records.iter().any(|r| count_of(r, c) != first) {
            variable.push(c);
        } else {
            merged.push(c);
        }
    }

    let m = records.len();
    // mandatory columns first, then candidate class columns admitted only if
    // they increase the numerical rank
    let mut columns: Vec<(Column, Vec<f64>)> = Vec::new();
    if pin_alpha0.is_none() {
        columns.push((
            Column::Bulk,
            records.iter().map(|r| r.n as f64).collect(),
        ));
    }
    columns.push((
        Column::LogL,
        records.iter().map(|r| (r.l as f64).ln()).collect(),
    ));
    columns.push((Column::Intercept, vec![1.0; m]));
    for &c in &variable {
        let col: Vec<f64> = records.iter().map(|r| count_of(r, c)).collect();
        let mut trial = columns.clone();
        trial.push((Column::Class(c), col.clone()));
        if relative_min_singular(&trial, m) > 1e-8 {
            columns.push((Column::Class(c), col));
        } else {
            merged.push(c);
        }
    }

    let y0: Vec<f64> = records
        .iter()
        .map(|r| r.logdet - pin_alpha0.unwrap_or(0.0) * r.n as f64)
        .collect();

    let k = columns.len();
    let mut design = DMatrix::zeros(m, k);
    let mut norms = vec![0.0f64; k];
    for (j, (_, col)) in columns.iter().enumerate() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        norms[j] = norm;
        for (i, &v) in col.iter().enumerate() {
            design[(i, j)] = v / norm;
        }
    }
    let y = DVector::from_vec(y0.clone());
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = smax / smin;
    if condition > 1e12 {
        return Err(FitError::RankDeficient(condition));
    }
    let beta_scaled = svd
        .solve(&y, 0.0)
        .map_err(|_| FitError::RankDeficient(condition))?;
    let beta: Vec<f64> = beta_scaled
        .iter()
        .zip(&norms)
        .map(|(b, n)| b / n)
        .collect();

    let mut alpha0 = pin_alpha0.unwrap_or(0.0);
    let mut alpha2 = 0.0;
    let mut alpha3 = 0.0;
    let mut class_coefficients = BTreeMap::new();
    for ((kind, _), &b) in columns.iter().zip(&beta) {
        match kind {
            Column::Bulk => alpha0 = b,
            Column::LogL => alpha2 = b,
            Column::Intercept => alpha3 = b,
            Column::Class(c) => {
                class_coefficients.insert(*c, b);
            }
        }
    }

    let mut residuals = Vec::with_capacity(m);
    let mut ss = 0.0;
    for (i, r) in records.iter().enumerate() {
        let mut pred = 0.0;
        for ((_, col), &b) in columns.iter().zip(&beta) {
            pred += b * col[i];
        }
        let resid = y0[i] - pred;
        ss += resid * resid;
        residuals.push((r.l, resid));
    }
    merged.sort_unstable();

    Ok(FitReport {
        alpha0,
        alpha0_pinned: pin_alpha0.is_some(),
        class_coefficients,
        merged_classes: merged,
        alpha2,
        alpha3,
        condition,
        residuals,
        rms_residual: (ss / m as f64).sqrt(),
        alpha2_verdict: corner_sum
            .map(|s| sign_verdict(alpha2, s))
            .unwrap_or(SignVerdict::Indeterminate),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Column {
    Bulk,
    LogL,
    Intercept,
    Class(u64),
}

fn relative_min_singular(columns: &[(Column, Vec<f64>)], m: usize) -> f64 {
    let k = columns.len();
    let mut a = DMatrix::zeros(m, k);
    for (j, (_, col)) in columns.iter().enumerate() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for (i, &v) in col.iter().enumerate() {
            a[(i, j)] = v / norm;
        }
    }
    let sv = a.svd(false, false).singular_values;
    sv.min() / sv.max()
}

/// `Σ(π²-θ²)/12πθ` over the corners of a region, the magnitude entering
/// the `log L` coefficient under either sign convention.
pub fn corner_log_sum(region: &LatticeRegion) -> f64 {
    region
        .summarize()
        .corners
        .iter()
        .map(|c| (PI * PI - c.theta * c.theta) / (12.0 * PI * c.theta))
        .sum()
}

/// One scale of a puncture-set comparison.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RatioRow {
    pub l: i64,
    pub logdet_a: f64,
    pub logdet_b: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
    /// Absolute successive differences of `diff`, one per adjacent pair.
    pub deltas: Vec<f64>,
    pub limit: f64,
}

/// Per-scale `logdet[Σ1] - logdet[Σ2]` for two puncture sets on the same
/// region, tracking Cauchy convergence of the difference.
pub fn sigma_ratio_experiment(
    base: &LatticeRegion,
    sigma1: &[[i64; 2]],
    sigma2: &[[i64; 2]],
    ls: &[i64],
    cut: CutDirection,
) -> Result<RatioTable, FitError> {
    let mut rows: Vec<RatioRow> = ls
        .par_iter()
        .map(|&l| -> Result<RatioRow, FitError> {
            let region = base.with_scale(base.scale() * l)?;
            let graph = build_graph(&region)?;
            let mut logdets = [0.0f64; 2];
            for (slot, sigma_base) in [sigma1, sigma2].into_iter().enumerate() {
                let mut pts = Vec::new();
                for &p in sigma_base {
                    pts.push(snap_puncture(&region, [p[0] * l, p[1] * l])?);
                }
                let sigma = PunctureSet::new(&region, &pts)?;
                let conn = FlatConnection::build(&graph, sigma, cut);
                let op = SymmetricOperator::assemble(&graph, &conn)
                    .map_err(|e| FitError::Spectral { l, source: e })?;
                logdets[slot] = op
                    .logdet()
                    .map_err(|e| FitError::Spectral { l, source: e })?;
            }
            Ok(RatioRow {
                l,
                logdet_a: logdets[0],
                logdet_b: logdets[1],
                diff: logdets[0] - logdets[1],
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by_key(|r| r.l);
    let deltas = rows
        .windows(2)
        .map(|w| (w[1].diff - w[0].diff).abs())
        .collect();
    let limit = rows.last().map(|r| r.diff).unwrap_or(0.0);
    Ok(RatioTable {
        rows,
        deltas,
        limit,
    })
}
