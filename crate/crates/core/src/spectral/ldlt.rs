//! Profile (skyline) LDLᵀ factorization for the symmetric operator.
//!
//! Each row stores the contiguous span from its first structurally nonzero
//! column to the diagonal. Vertices are indexed along the longer axis of the
//! bounding box, so the profile width stays near the shorter side length and
//! fill-in is confined to the stored spans.

use super::{SpectralError, SymmetricOperator};

pub struct SkylineFactor {
    n: usize,
    /// First stored column of each row.
    first: Vec<u32>,
    /// Start of each row's span in `data`; `data[row_start[i] + (j - first[i])]`
    /// holds entry `(i, j)`, the diagonal slot holding `D_i` after factoring.
    row_start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineFactor {
    /// Factor `A = L D Lᵀ`, failing on any nonpositive pivot.
    pub fn factor(op: &SymmetricOperator) -> Result<Self, SpectralError> {
        let n = op.n();
        let mut first: Vec<u32> = (0..n as u32).collect();
        for &(a, b, _) in op.off_diag() {
            let (lo, hi) = (a.min(b), a.max(b));
            if lo < first[hi as usize] {
                first[hi as usize] = lo;
            }
        }
        let mut row_start = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for i in 0..n {
            row_start.push(total);
            total += i - first[i] as usize + 1;
        }
        row_start.push(total);

        let mut data = vec![0.0f64; total];
        for i in 0..n {
            data[row_start[i] + (i - first[i] as usize)] = 4.0;
        }
        for &(a, b, v) in op.off_diag() {
            let (lo, hi) = (a.min(b) as usize, a.max(b) as usize);
            data[row_start[hi] + (lo - first[hi] as usize)] = v;
        }

        // In-place factorization: row i's span is overwritten with
        // L_{i,first[i]..i} and D_i.
        let mut diag = vec![0.0f64; n];
        for i in 0..n {
            let fi = first[i] as usize;
            let (done, rest) = data.split_at_mut(row_start[i]);
            let row = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j] as usize;
                let rj = &done[row_start[j]..row_start[j + 1]];
                let mut s = row[j - fi];
                for k in fi.max(fj)..j {
                    s -= row[k - fi] * diag[k] * rj[k - fj];
                }
                row[j - fi] = s / diag[j];
            }
            let mut s = row[i - fi];
            for k in fi..i {
                let l = row[k - fi];
                s -= l * l * diag[k];
            }
            if s <= 0.0 {
                return Err(SpectralError::NotPositiveDefinite { row: i, pivot: s });
            }
            diag[i] = s;
            row[i - fi] = s;
        }
        Ok(SkylineFactor {
            n,
            first,
            row_start,
            data,
        })
    }

    pub fn pivot(&self, i: usize) -> f64 {
        self.data[self.row_start[i] + (i - self.first[i] as usize)]
    }

    /// `Σ log D_i` with Neumaier-compensated summation.
    pub fn logdet(&self) -> Result<f64, SpectralError> {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for i in 0..self.n {
            let term = self.pivot(i).ln();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        Ok(sum + comp)
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let fi = self.first[i] as usize;
            let row = &self.data[self.row_start[i]..self.row_start[i + 1]];
            let mut s = b[i];
            for k in fi..i {
                s -= row[k - fi] * b[k];
            }
            b[i] = s;
        }
        for i in 0..self.n {
            b[i] /= self.pivot(i);
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i] as usize;
            let row = &self.data[self.row_start[i]..self.row_start[i + 1]];
            let bi = b[i];
            for k in fi..i {
                b[k] -= row[k - fi] * bi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::FlatConnection;
    use crate::geometry::{build_graph, LatticeRegion, RegionSpec};
    use approx::assert_relative_eq;

    fn rect_op(w: i64, h: i64) -> SymmetricOperator {
        let r = LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [w, 0], [w, h], [0, h]]],
            scale: 1,
        })
        .unwrap();
        let g = build_graph(&r).unwrap();
        SymmetricOperator::assemble(&g, &FlatConnection::trivial(&g)).unwrap()
    }

    #[test]
    fn logdet_matches_dense_lu() {
        for (w, h) in [(3, 3), (5, 4), (7, 2), (6, 6)] {
            let op = rect_op(w, h);
            let dense = op.to_dense();
            let want = dense.lu().determinant().ln();
            let got = SkylineFactor::factor(&op).unwrap().logdet().unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn pivots_positive_and_bounded() {
        let op = rect_op(9, 5);
        let f = SkylineFactor::factor(&op).unwrap();
        for i in 0..op.n() {
            let d = f.pivot(i);
            assert!(d > 0.0 && d <= 4.0 + 1e-12);
        }
    }

    #[test]
    fn solve_recovers_rhs() {
        let op = rect_op(8, 6);
        let f = SkylineFactor::factor(&op).unwrap();
        let n = op.n();
        let x0: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let mut b = vec![0.0; n];
        op.matvec(&x0, &mut b);
        f.solve_in_place(&mut b);
        for (got, want) in b.iter().zip(&x0) {
            assert_relative_eq!(*got, *want, epsilon = 1e-10);
        }
    }
}
