//! Column-compressed design matrix, coordinate partitions and their text formats.

mod io;
mod partition;

pub use io::{
    parse_matrix_market, read_matrix_market, read_partition, read_vector, write_matrix_market,
    write_partition, write_vector,
};
pub use partition::Partition;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sparse `n x d` matrix in compressed sparse column layout.
///
/// Row indices inside a column are strictly increasing and no stored value is zero,
/// so structural and numeric sparsity coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<F> {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<F>,
}

/// Borrowed view of one column.
#[derive(Debug, Clone, Copy)]
pub struct Column<'a, F> {
    pub rows: &'a [usize],
    pub values: &'a [F],
}

impl<'a, F: Scalar> Column<'a, F> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, F)> + 'a {
        let rows = self.rows;
        let values = self.values;
        rows.iter().copied().zip(values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    /// `<column, v>` for a dense vector indexed by row.
    #[inline]
    pub fn dot(&self, v: &[F]) -> F {
        let mut acc = F::zero();
        for (&r, &a) in self.rows.iter().zip(self.values) {
            acc += a * v[r];
        }
        acc
    }

    /// `v += alpha * column`.
    #[inline]
    pub fn axpy(&self, alpha: F, v: &mut [F]) {
        for (&r, &a) in self.rows.iter().zip(self.values) {
            v[r] += alpha * a;
        }
    }

    pub fn sq_norm(&self) -> F {
        self.values.iter().map(|&v| v * v).sum()
    }
}

impl<F: Scalar> SparseMatrix<F> {
    /// Builds a matrix from raw CSC arrays, checking every structural invariant.
    pub fn from_csc(
        n_rows: usize,
        n_cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<F>,
    ) -> Result<Self> {
        if col_ptr.len() != n_cols + 1 {
            return Err(Error::InvalidMatrix(format!(
                "column pointer length {} != d + 1 = {}",
                col_ptr.len(),
                n_cols + 1
            )));
        }
        if col_ptr[0] != 0 || col_ptr[n_cols] != row_idx.len() || row_idx.len() != values.len() {
            return Err(Error::InvalidMatrix(
                "column pointers do not span the index/value arrays".into(),
            ));
        }
        for j in 0..n_cols {
            let (lo, hi) = (col_ptr[j], col_ptr[j + 1]);
            if lo > hi {
                return Err(Error::InvalidMatrix(format!(
                    "column pointer not monotone at column {j}"
                )));
            }
            let rows = &row_idx[lo..hi];
            for (k, &r) in rows.iter().enumerate() {
                if r >= n_rows {
                    return Err(Error::InvalidMatrix(format!(
                        "row index {r} out of range in column {j}"
                    )));
                }
                if k > 0 && rows[k - 1] >= r {
                    return Err(Error::InvalidMatrix(format!(
                        "row indices not strictly increasing in column {j}"
                    )));
                }
            }
        }
        if let Some(p) = values.iter().position(|v| *v == F::zero()) {
            return Err(Error::InvalidMatrix(format!(
                "explicit zero at position {p}"
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "matrix value",
                index: p,
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    ///
    /// Duplicates and explicit zeros are rejected rather than summed or dropped.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, F)>,
    {
        let mut entries: Vec<(usize, usize, F)> = triplets.into_iter().collect();
        for (k, &(r, c, v)) in entries.iter().enumerate() {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) outside {n_rows} x {n_cols}"
                )));
            }
            if v == F::zero() {
                return Err(Error::InvalidMatrix(format!("explicit zero at ({r}, {c})")));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "matrix value",
                    index: k,
                });
            }
        }
        entries.sort_by_key(|&(r, c, _)| (c, r));
        if let Some(w) = entries
            .windows(2)
            .find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1)
        {
            return Err(Error::InvalidMatrix(format!(
                "duplicate entry ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut col_ptr = vec![0usize; n_cols + 1];
        for &(_, c, _) in &entries {
            col_ptr[c + 1] += 1;
        }
        for j in 0..n_cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let row_idx = entries.iter().map(|e| e.0).collect();
        let values = entries.iter().map(|e| e.2).collect();
        Self::from_csc(n_rows, n_cols, col_ptr, row_idx, values)
    }

    /// Dense row-major input; zeros are skipped.
    pub fn from_dense_rows(rows: &[Vec<F>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                what: "dense row length",
                expected: d,
                got: bad.len(),
            });
        }
        let trip = rows.iter().enumerate().flat_map(|(r, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| **v != F::zero())
                .map(move |(c, &v)| (r, c, v))
        });
        Self::from_triplets(n, d, trip)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            n_rows: d,
            n_cols: d,
            col_ptr: (0..=d).collect(),
            row_idx: (0..d).collect(),
            values: vec![F::one(); d],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    #[inline]
    pub fn col(&self, j: usize) -> Column<'_, F> {
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        Column {
            rows: &self.row_idx[lo..hi],
            values: &self.values[lo..hi],
        }
    }

    pub fn col_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn col_sq_norm(&self, j: usize) -> F {
        self.col(j).sq_norm()
    }

    pub fn col_sq_norms(&self) -> Vec<F> {
        (0..self.n_cols).map(|j| self.col_sq_norm(j)).collect()
    }

    /// Structural nonzeros in each row, from one pass over the row indices.
    pub fn nnz_per_row(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_rows];
        for &r in &self.row_idx {
            counts[r] += 1;
        }
        counts
    }

    /// Number of distinct partition blocks holding a nonzero in each row.
    pub fn blocks_per_row(&self, partition: &Partition) -> Vec<usize> {
        assert_eq!(
            partition.dim(),
            self.n_cols,
            "partition must cover the columns"
        );
        self.groups_per_row(partition.assignment())
    }

    /// Like [`blocks_per_row`](Self::blocks_per_row) for an arbitrary column grouping,
    /// `group_of[j]` being the group of column `j`. Groups need not be balanced.
    pub fn groups_per_row(&self, group_of: &[usize]) -> Vec<usize> {
        assert_eq!(
            group_of.len(),
            self.n_cols,
            "grouping must cover the columns"
        );
        let mut counts = vec![0usize; self.n_rows];
        let mut touched: Vec<Vec<usize>> = vec![Vec::new(); self.n_rows];
        for (j, &l) in group_of.iter().enumerate() {
            for &r in self.col(j).rows {
                if !touched[r].contains(&l) {
                    touched[r].push(l);
                    counts[r] += 1;
                }
            }
        }
        counts
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.n_cols);
        let mut out = vec![F::zero(); self.n_rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != F::zero() {
                self.col(j).axpy(xj, &mut out);
            }
        }
        out
    }

    /// `A^T v`.
    pub fn tr_mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(v.len(), self.n_rows);
        (0..self.n_cols).map(|j| self.col(j).dot(v)).collect()
    }

    /// Column submatrix with the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut col_ptr = Vec::with_capacity(cols.len() + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for &j in cols {
            let c = self.col(j);
            row_idx.extend_from_slice(c.rows);
            values.extend_from_slice(c.values);
            col_ptr.push(row_idx.len());
        }
        Self {
            n_rows: self.n_rows,
            n_cols: cols.len(),
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Multiplies column `j` by a nonzero finite factor.
    pub fn scale_column(&mut self, j: usize, factor: F) {
        assert!(factor != F::zero() && factor.is_finite());
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        for v in &mut self.values[lo..hi] {
            *v *= factor;
        }
    }

    /// Replaces the stored values of column `j`, keeping its pattern.
    pub fn set_column_values(&mut self, j: usize, values: &[F]) {
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        assert_eq!(
            values.len(),
            hi - lo,
            "column {j} holds {} entries",
            hi - lo
        );
        assert!(values.iter().all(|v| *v != F::zero() && v.is_finite()));
        self.values[lo..hi].copy_from_slice(values);
    }

    /// `A_i^T A_j` by merging the two sorted row lists.
    pub fn col_dot_col(&self, i: usize, j: usize) -> F {
        let (a, b) = (self.col(i), self.col(j));
        let (mut p, mut q) = (0, 0);
        let mut acc = F::zero();
        while p < a.rows.len() && q < b.rows.len() {
            match a.rows[p].cmp(&b.rows[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.values[p] * b.values[q];
                    p += 1;
                    q += 1;
                }
            }
        }
        acc
    }

    /// Dense row-major copy; only meant for small oracle computations.
    pub fn to_dense_rows(&self) -> Vec<Vec<F>> {
        let mut out = vec![vec![F::zero(); self.n_cols]; self.n_rows];
        for j in 0..self.n_cols {
            for (r, v) in self.col(j).iter() {
                out[r][j] = v;
            }
        }
        out
    }

    /// Index of the first column with no nonzeros, if any.
    pub fn first_zero_column(&self) -> Option<usize> {
        (0..self.n_cols).find(|&j| self.col_nnz(j) == 0)
    }

    /// Converts the value type (e.g. `f64` data solved in `f32`).
    pub fn cast<G: Scalar>(&self) -> SparseMatrix<G> {
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values: self.values.iter().map(|v| G::of(v.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_three() -> SparseMatrix<f64> {
        SparseMatrix::from_dense_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap()
    }

    #[test]
    fn nnz_per_row_counts() {
        assert_eq!(two_by_three().nnz_per_row(), vec![2, 2]);
        assert_eq!(
            SparseMatrix::<f64>::identity(3).nnz_per_row(),
            vec![1, 1, 1]
        );
        let empty = SparseMatrix::<f64>::from_triplets(3, 2, vec![]).unwrap();
        assert_eq!(empty.nnz_per_row(), vec![0, 0, 0]);
    }

    #[test]
    fn blocks_per_row_counts() {
        let a = two_by_three();
        assert_eq!(a.groups_per_row(&[0, 0, 1]), vec![1, 2]);

        let single = Partition::contiguous(3, 1).unwrap();
        assert_eq!(a.blocks_per_row(&single), vec![1, 1]);

        let singletons = Partition::contiguous(3, 3).unwrap();
        assert_eq!(a.blocks_per_row(&singletons), a.nnz_per_row());
    }

    #[test]
    fn rejects_duplicates_and_zeros() {
        assert!(SparseMatrix::<f64>::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(SparseMatrix::<f64>::from_triplets(2, 2, vec![(0, 0, 0.0)]).is_err());
        assert!(SparseMatrix::<f64>::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn from_csc_checks_ordering() {
        let bad = SparseMatrix::<f64>::from_csc(3, 1, vec![0, 2], vec![2, 1], vec![1.0, 1.0]);
        assert!(bad.is_err());
        let bad_ptr = SparseMatrix::<f64>::from_csc(3, 2, vec![0, 2], vec![0, 1], vec![1.0, 1.0]);
        assert!(bad_ptr.is_err());
    }

    #[test]
    fn products_agree_with_dense() {
        let a = two_by_three();
        assert_eq!(a.mul_vec(&[1.0, 2.0, 3.0]), vec![3.0, 5.0]);
        assert_eq!(a.tr_mul_vec(&[1.0, 2.0]), vec![1.0, 3.0, 2.0]);
        assert_eq!(a.col_dot_col(0, 1), 1.0);
        assert_eq!(a.col_dot_col(0, 2), 0.0);
        assert_eq!(a.col_dot_col(1, 1), 2.0);
    }

    #[test]
    fn select_columns_keeps_values() {
        let a = two_by_three();
        let sub = a.select_columns(&[2, 0]);
        assert_eq!(sub.n_cols(), 2);
        assert_eq!(sub.to_dense_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }
}
