//! Compressed-sparse-row Hermitian operators.
//!
//! All Hamiltonians and observables in this crate are assembled as
//! [`SparseOperator`]s: row-compressed complex matrices with sorted,
//! duplicate-free columns and no stored explicit zeros. Assembly goes
//! through [`SparseBuilder`], which merges duplicate entries and drops
//! entries below a magnitude floor.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Entries with magnitude below this floor are not stored.
const ZERO_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    offsets: Vec<usize>,
    columns: Vec<u32>,
    values: Vec<C64>,
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[C64]) {
        let (a, b) = (self.offsets[r], self.offsets[r + 1]);
        (&self.columns[a..b], &self.values[a..b])
    }

    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter()
                .zip(vals.iter())
                .map(move |(&c, &v)| (r, c as usize, v))
        })
    }

    /// y = A x.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        // Rows are independent, so the parallel result is bit-identical to
        // the sequential one.
        if self.dim >= 4096 {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| {
                *yr = self.row_dot(r, x);
            });
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = self.row_dot(r, x);
            }
        }
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[C64]) -> C64 {
        let (cols, vals) = self.row(r);
        let mut acc = C64::new(0.0, 0.0);
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            acc += v * x[c as usize];
        }
        acc
    }

    pub fn apply_alloc(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.apply(x, &mut y);
        y
    }

    /// ⟨x|A|x⟩, assuming A Hermitian (result truncated to its real part).
    pub fn expectation(&self, x: &[C64]) -> f64 {
        let y = self.apply_alloc(x);
        x.iter()
            .zip(y.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// Max-norm of A − A†.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for (r, c, v) in self.iter_entries() {
            let vt = self.get(c, r);
            defect = defect.max((v - vt.conj()).norm());
        }
        defect
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Max-norm of [A, D] for a diagonal operator D, computed entrywise:
    /// ([A, D])_{rc} = A_{rc} (d_c − d_r).
    pub fn commutator_with_diagonal_max(&self, diag: &[f64]) -> f64 {
        assert_eq!(diag.len(), self.dim);
        let mut m: f64 = 0.0;
        for (r, c, v) in self.iter_entries() {
            m = m.max((v * (diag[c] - diag[r])).norm());
        }
        m
    }

    /// Sum of two operators on the same basis.
    pub fn add(&self, other: &SparseOperator) -> SparseOperator {
        assert_eq!(self.dim, other.dim);
        let mut b = SparseBuilder::new(self.dim);
        for (r, c, v) in self.iter_entries() {
            b.add(r, c, v);
        }
        for (r, c, v) in other.iter_entries() {
            b.add(r, c, v);
        }
        b.build()
    }

    pub fn scale(&self, s: f64) -> SparseOperator {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= s;
        }
        out
    }

    /// Crude upper estimate of the spectral norm: max_r Σ_c |A_{rc}|
    /// (exact bound for Hermitian matrices by Gershgorin).
    pub fn norm_estimate(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                let (_, vals) = self.row(r);
                vals.iter().map(|v| v.norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter_entries() {
            m[(r, c)] = v;
        }
        m
    }
}

/// Triplet accumulator for [`SparseOperator`].
pub struct SparseBuilder {
    dim: usize,
    entries: Vec<(u32, u32, C64)>,
}

impl SparseBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: C64) {
        debug_assert!(row < self.dim && col < self.dim);
        if value.norm_sqr() > 0.0 {
            self.entries.push((row as u32, col as u32, value));
        }
    }

    /// Adds v at (r, c) and v̄ at (c, r).
    pub fn add_hermitian_pair(&mut self, row: usize, col: usize, value: C64) {
        self.add(row, col, value);
        self.add(col, row, value.conj());
    }

    pub fn build(mut self) -> SparseOperator {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut offsets = Vec::with_capacity(self.dim + 1);
        let mut columns = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        let mut i = 0;
        for r in 0..self.dim as u32 {
            while i < self.entries.len() && self.entries[i].0 == r {
                let c = self.entries[i].1;
                let mut v = self.entries[i].2;
                i += 1;
                while i < self.entries.len() && self.entries[i].0 == r && self.entries[i].1 == c {
                    v += self.entries[i].2;
                    i += 1;
                }
                if v.norm() > ZERO_FLOOR {
                    columns.push(c);
                    values.push(v);
                }
            }
            offsets.push(columns.len());
        }
        SparseOperator {
            dim: self.dim,
            offsets,
            columns,
            values,
        }
    }
}

/// Diagonal operator as a sparse matrix.
pub fn diagonal(diag: &[f64]) -> SparseOperator {
    let mut b = SparseBuilder::new(diag.len());
    for (i, &d) in diag.iter().enumerate() {
        b.add(i, i, C64::new(d, 0.0));
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn builder_merges_and_sorts() {
        let mut b = SparseBuilder::new(3);
        b.add(0, 2, c(1.0, 0.0));
        b.add(0, 1, c(2.0, 0.0));
        b.add(0, 2, c(3.0, 0.0));
        b.add(2, 0, c(1.0, -1.0));
        let m = b.build();
        assert_eq!(m.nnz(), 3);
        let (cols, vals) = m.row(0);
        assert_eq!(cols, &[1, 2]);
        assert_eq!(vals[1], c(4.0, 0.0));
        assert_eq!(m.get(2, 0), c(1.0, -1.0));
    }

    #[test]
    fn exact_zeros_are_dropped() {
        let mut b = SparseBuilder::new(2);
        b.add(0, 1, c(1.0, 0.0));
        b.add(0, 1, c(-1.0, 0.0));
        b.add(1, 1, c(0.0, 0.0));
        let m = b.build();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn apply_matches_dense() {
        let mut b = SparseBuilder::new(3);
        b.add_hermitian_pair(0, 1, c(1.0, 2.0));
        b.add(2, 2, c(-1.0, 0.0));
        let m = b.build();
        assert_abs_diff_eq!(m.hermiticity_defect(), 0.0);
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)];
        let y = m.apply_alloc(&x);
        assert_eq!(y[0], c(1.0, 2.0) * c(0.0, 1.0));
        assert_eq!(y[1], c(1.0, -2.0) * c(1.0, 0.0));
        assert_eq!(y[2], c(-2.0, 0.0));
    }

    #[test]
    fn diagonal_commutator_detects_nonzero() {
        let mut b = SparseBuilder::new(2);
        b.add_hermitian_pair(0, 1, c(1.0, 0.0));
        let m = b.build();
        assert_abs_diff_eq!(m.commutator_with_diagonal_max(&[1.0, 1.0]), 0.0);
        assert_abs_diff_eq!(m.commutator_with_diagonal_max(&[1.0, 2.0]), 1.0);
    }
}
