//! Compressed sparse row matrices.
//!
//! The network constructions are dominated by block-diagonal and rank-one
//! structure, so weights are held in CSR form. Positive zeros are treated as
//! structural zeros; a negative zero read from a dense source is kept so a
//! dense round trip reproduces the input bit for bit.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    vals: Vec<f64>,
}

#[inline]
fn is_structural_zero(v: f64) -> bool {
    v.to_bits() == 0
}

impl Csr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Csr {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Csr::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            if !is_structural_zero(v) {
                m.col_idx.push(i as u32);
                m.vals.push(v);
            }
            m.row_ptr[i + 1] = m.vals.len();
        }
        m
    }

    /// Builds from a dense row-major buffer of length `rows * cols`.
    pub fn from_dense(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "dense buffer has wrong length");
        let mut m = Csr::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = data[i * cols + j];
                if !is_structural_zero(v) {
                    m.col_idx.push(j as u32);
                    m.vals.push(v);
                }
            }
            m.row_ptr[i + 1] = m.vals.len();
        }
        m
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|e| (e.0, e.1));
        let mut m = Csr::zeros(rows, cols);
        let mut row = 0;
        let mut idx = 0;
        while idx < t.len() {
            let (i, j, mut v) = t[idx];
            assert!(i < rows && j < cols, "triplet out of bounds");
            idx += 1;
            while idx < t.len() && t[idx].0 == i && t[idx].1 == j {
                v += t[idx].2;
                idx += 1;
            }
            while row < i {
                row += 1;
                m.row_ptr[row] = m.vals.len();
            }
            if !is_structural_zero(v) {
                m.col_idx.push(j as u32);
                m.vals.push(v);
            }
        }
        while row < rows {
            row += 1;
            m.row_ptr[row] = m.vals.len();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&(j as u32)) {
            Ok(p) => v[p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                out[i * self.cols + j as usize] = x;
            }
        }
        out
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            let mut acc = 0.0;
            for (&j, &a) in c.iter().zip(v) {
                acc += a * x[j as usize];
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    /// Sparse product `self * other` (Gustavson's row-by-row algorithm).
    pub fn matmul(&self, other: &Csr) -> Csr {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let n = other.cols;
        let mut acc = vec![0.0f64; n];
        let mut seen = vec![usize::MAX; n];
        let mut touched: Vec<u32> = Vec::new();
        let mut out = Csr::zeros(self.rows, n);
        for i in 0..self.rows {
            touched.clear();
            let (ca, va) = self.row(i);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k as usize);
                for (&j, &b) in cb.iter().zip(vb) {
                    let ju = j as usize;
                    if seen[ju] != i {
                        seen[ju] = i;
                        acc[ju] = a * b;
                        touched.push(j);
                    } else {
                        acc[ju] += a * b;
                    }
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                let v = acc[j as usize];
                if v != 0.0 {
                    out.col_idx.push(j);
                    out.vals.push(v);
                }
            }
            out.row_ptr[i + 1] = out.vals.len();
        }
        out
    }

    /// Multiplies every entry by `s`.
    pub fn scaled(&self, s: f64) -> Csr {
        if s == 0.0 {
            return Csr::zeros(self.rows, self.cols);
        }
        let mut m = self.clone();
        for v in &mut m.vals {
            *v *= s;
        }
        m
    }

    /// Multiplies row `i` by `s[i]` and column `j` by `t[j]`.
    pub fn scale_rows_cols(&self, s: &[f64], t: &[f64]) -> Csr {
        assert_eq!(s.len(), self.rows);
        assert_eq!(t.len(), self.cols);
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                trip.push((i, j as usize, x * s[i] * t[j as usize]));
            }
        }
        Csr::from_triplets(self.rows, self.cols, trip)
    }

    pub fn block_diag(blocks: &[&Csr]) -> Csr {
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let nnz: usize = blocks.iter().map(|b| b.nnz()).sum();
        let mut out = Csr::zeros(rows, cols);
        out.col_idx.reserve(nnz);
        out.vals.reserve(nnz);
        let mut r0 = 0;
        let mut c0 = 0u32;
        for b in blocks {
            for i in 0..b.rows {
                let (c, v) = b.row(i);
                out.col_idx.extend(c.iter().map(|&j| j + c0));
                out.vals.extend_from_slice(v);
                out.row_ptr[r0 + i + 1] = out.vals.len();
            }
            r0 += b.rows;
            c0 += b.cols as u32;
        }
        out
    }

    /// Stacks blocks on top of each other; all must have equal column counts.
    pub fn vstack(blocks: &[&Csr]) -> Csr {
        let cols = blocks.first().map_or(0, |b| b.cols);
        assert!(blocks.iter().all(|b| b.cols == cols), "vstack column mismatch");
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let mut out = Csr::zeros(rows, cols);
        let mut r0 = 0;
        for b in blocks {
            for i in 0..b.rows {
                let (c, v) = b.row(i);
                out.col_idx.extend_from_slice(c);
                out.vals.extend_from_slice(v);
                out.row_ptr[r0 + i + 1] = out.vals.len();
            }
            r0 += b.rows;
        }
        out
    }

    /// Places blocks side by side; all must have equal row counts.
    pub fn hstack(blocks: &[&Csr]) -> Csr {
        let rows = blocks.first().map_or(0, |b| b.rows);
        assert!(blocks.iter().all(|b| b.rows == rows), "hstack row mismatch");
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Csr::zeros(rows, cols);
        for i in 0..rows {
            let mut c0 = 0u32;
            for b in blocks {
                let (c, v) = b.row(i);
                out.col_idx.extend(c.iter().map(|&j| j + c0));
                out.vals.extend_from_slice(v);
                c0 += b.cols as u32;
            }
            out.row_ptr[i + 1] = out.vals.len();
        }
        out
    }

    /// Maximum absolute row sum (operator norm induced by the sup norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).1.iter().map(|v| crate::math::abs(*v)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Iterates over stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j as usize, x))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                for l in 0..k {
                    out[i * m + j] += a[i * k + l] * b[l * m + j];
                }
            }
        }
        out
    }

    #[test]
    fn dense_round_trip_keeps_negative_zero() {
        let d = [1.0, 0.0, -0.0, 2.5, 0.0, -3.0];
        let m = Csr::from_dense(2, 3, &d);
        assert_eq!(m.nnz(), 4);
        let back = m.to_dense();
        for (a, b) in d.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn matmul_matches_dense() {
        let a = [1.0, 0.0, 2.0, 0.0, -1.0, 3.0];
        let b = [0.5, 1.0, 0.0, 0.0, 2.0, -1.0, 4.0, 0.0];
        let sa = Csr::from_dense(2, 3, &a);
        let sb = Csr::from_dense(3, 2, &b[..6]);
        let p = sa.matmul(&sb).to_dense();
        assert_eq!(p, dense_mul(&a, &b[..6], 2, 3, 2));
    }

    #[test]
    fn blocks_and_stacks() {
        let a = Csr::from_dense(1, 2, &[1.0, 2.0]);
        let b = Csr::from_dense(2, 1, &[3.0, 4.0]);
        let bd = Csr::block_diag(&[&a, &b]).to_dense();
        assert_eq!(bd, vec![1.0, 2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 4.0]);
        let h = Csr::hstack(&[&a, &a]).to_dense();
        assert_eq!(h, vec![1.0, 2.0, 1.0, 2.0]);
        let v = Csr::vstack(&[&b, &b]).to_dense();
        assert_eq!(v, vec![3.0, 4.0, 3.0, 4.0]);
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = Csr::from_triplets(2, 2, vec![(1, 1, 1.0), (0, 1, 2.0), (1, 1, 0.5)]);
        assert_eq!(m.to_dense(), vec![0.0, 2.0, 0.0, 1.5]);
        assert_eq!(m.norm_inf(), 2.0);
    }
}
