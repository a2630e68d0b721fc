//! Assembly and spectral computations for the twisted Dirichlet Laplacian.

mod ldlt;
mod slq;
mod zeta;

pub use ldlt::SkylineFactor;
pub use slq::slq_heat_trace;
pub use zeta::discrete_zeta_prime_zero;

use crate::connection::FlatConnection;
use crate::geometry::DomainGraph;
use nalgebra::{DMatrix, SymmetricEigen};
use std::sync::OnceLock;
use thiserror::Error;

/// Instances up to this size take the dense-spectrum path.
pub const DENSE_THRESHOLD: usize = 4096;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SpectralError {
    #[error("operator is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dense path refused: n = {n} exceeds threshold {limit}")]
    DenseThresholdExceeded { n: usize, limit: usize },
    #[error("connection does not match graph: {0}")]
    GraphMismatch(String),
    #[error("nonpositive eigenvalue {0}")]
    NonpositiveEigenvalue(f64),
}

/// Sparse symmetric form of `Δ̃_{Ω,ρ}`: diagonal 4, off-diagonal `-ρ_xy`
/// per edge.
#[derive(Debug)]
pub struct SymmetricOperator {
    n: usize,
    /// `(a, b, value)` with `a < b`; value is `-sign ∈ {-1, +1}`.
    off_diag: Vec<(u32, u32, f64)>,
    dense_eigen: OnceLock<(Vec<f64>, DMatrix<f64>)>,
}

/// Trace of the heat semigroup at one time.
#[derive(Debug, Clone, Copy)]
pub struct HeatTracePoint {
    pub t: f64,
    pub value: f64,
    /// Standard error when the value comes from stochastic estimation.
    pub stderr: Option<f64>,
}

impl SymmetricOperator {
    /// Assemble the operator for a graph and a connection built on it.
    pub fn assemble(
        graph: &DomainGraph,
        conn: &FlatConnection,
    ) -> Result<Self, SpectralError> {
        if conn.n_vertices() != graph.n() || conn.edge_signs().len() != graph.edges.len() {
            return Err(SpectralError::GraphMismatch(format!(
                "graph has {} vertices / {} edges, connection has {} / {}",
                graph.n(),
                graph.edges.len(),
                conn.n_vertices(),
                conn.edge_signs().len()
            )));
        }
        let off_diag = graph
            .edges
            .iter()
            .zip(conn.edge_signs())
            .map(|(&(a, b), &s)| (a, b, -f64::from(s)))
            .collect();
        Ok(SymmetricOperator {
            n: graph.n(),
            off_diag,
            dense_eigen: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn off_diag(&self) -> &[(u32, u32, f64)] {
        &self.off_diag
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = 4.0 * xi;
        }
        for &(a, b, v) in &self.off_diag {
            y[a as usize] += v * x[b as usize];
            y[b as usize] += v * x[a as usize];
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::from_diagonal_element(self.n, self.n, 4.0);
        for &(a, b, v) in &self.off_diag {
            m[(a as usize, b as usize)] = v;
            m[(b as usize, a as usize)] = v;
        }
        m
    }

    /// Log-determinant via sparse symmetric LDLᵀ.
    pub fn logdet(&self) -> Result<f64, SpectralError> {
        SkylineFactor::factor(self)?.logdet()
    }

    fn dense_eigen(&self) -> Result<&(Vec<f64>, DMatrix<f64>), SpectralError> {
        if self.n > DENSE_THRESHOLD {
            return Err(SpectralError::DenseThresholdExceeded {
                n: self.n,
                limit: DENSE_THRESHOLD,
            });
        }
        Ok(self.dense_eigen.get_or_init(|| {
            let eig = SymmetricEigen::new(self.to_dense());
            let mut pairs: Vec<(f64, usize)> = eig
                .eigenvalues
                .iter()
                .copied()
                .enumerate()
                .map(|(i, v)| (v, i))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let mut vectors = DMatrix::zeros(self.n, self.n);
            for (col, &(_, src)) in pairs.iter().enumerate() {
                vectors.set_column(col, &eig.eigenvectors.column(src));
            }
            (values, vectors)
        }))
    }

    /// Sorted eigenvalues; dense path only.
    pub fn dense_spectrum(&self) -> Result<&[f64], SpectralError> {
        Ok(&self.dense_eigen()?.0)
    }

    /// Diagonal of `e^{-tΔ̃}` from the dense eigendecomposition.
    pub fn kernel_diagonal(&self, t: f64) -> Result<Vec<f64>, SpectralError> {
        let (values, vectors) = self.dense_eigen()?;
        let weights: Vec<f64> = values.iter().map(|&mu| (-t * mu).exp()).collect();
        let mut diag = vec![0.0; self.n];
        for (x, d) in diag.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, w) in weights.iter().enumerate() {
                let v = vectors[(x, j)];
                acc += w * v * v;
            }
            *d = acc;
        }
        Ok(diag)
    }

    /// `Tr e^{-tΔ̃}`: exact from the dense spectrum when available,
    /// stochastic Lanczos quadrature otherwise.
    pub fn heat_trace(&self, t: f64) -> Result<HeatTracePoint, SpectralError> {
        assert!(t >= 0.0, "time must be nonnegative");
        if self.n <= DENSE_THRESHOLD {
            let spectrum = self.dense_spectrum()?;
            let value = spectrum.iter().map(|&mu| (-t * mu).exp()).sum();
            Ok(HeatTracePoint {
                t,
                value,
                stderr: None,
            })
        } else {
            let (value, se) = slq_heat_trace(self, t, 48, 64, 0x5eed);
            Ok(HeatTracePoint {
                t,
                value,
                stderr: Some(se),
            })
        }
    }
}
