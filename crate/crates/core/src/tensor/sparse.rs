use std::sync::OnceLock;

use super::{DenseMatrix, TensorError};

/// Sparse matrix stored as a sorted, deduplicated coordinate list.
///
/// Entries are ordered by `(row, col)`. Unweighted matrices carry an implicit
/// weight of `1.0` per entry. A compressed-row offset table is built lazily the
/// first time a row-oriented kernel needs it.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize)>,
    weights: Option<Vec<f64>>,
    symmetric: bool,
    row_ptr: OnceLock<Vec<usize>>,
}

impl PartialEq for SparseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.entries == other.entries
            && self.weights == other.weights
            && self.symmetric == other.symmetric
    }
}

impl SparseMatrix {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self::from_sorted(rows, cols, Vec::new(), None)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_sorted(n, n, (0..n).map(|i| (i, i)).collect(), None);
        m.symmetric = true;
        m
    }

    fn from_sorted(
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize)>,
        weights: Option<Vec<f64>>,
    ) -> Self {
        Self {
            rows,
            cols,
            entries,
            weights,
            symmetric: false,
            row_ptr: OnceLock::new(),
        }
    }

    /// Binary matrix from arbitrary index pairs; duplicates collapse to one entry.
    pub fn from_pairs(
        rows: usize,
        cols: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TensorError> {
        let mut entries: Vec<(usize, usize)> = pairs.into_iter().collect();
        for &(r, c) in &entries {
            if r >= rows || c >= cols {
                return Err(TensorError::IndexOutOfRange {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
        }
        entries.sort_unstable();
        entries.dedup();
        Ok(Self::from_sorted(rows, cols, entries, None))
    }

    /// Weighted matrix from triplets. Duplicate coordinates are rejected since
    /// there is no single right way to merge their weights.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, TensorError> {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, w) in &t {
            if r >= rows || c >= cols {
                return Err(TensorError::IndexOutOfRange {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            if !w.is_finite() {
                return Err(TensorError::NonFinite("sparse weight"));
            }
        }
        t.sort_by_key(|&(r, c, _)| (r, c));
        if t.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(TensorError::DuplicateEntry);
        }
        let entries = t.iter().map(|&(r, c, _)| (r, c)).collect();
        let weights = t.into_iter().map(|(_, _, w)| w).collect();
        Ok(Self::from_sorted(rows, cols, entries, Some(weights)))
    }

    /// Builds a matrix from entries already sorted and deduplicated, skipping validation.
    pub(crate) fn from_raw_parts(
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize)>,
        weights: Option<Vec<f64>>,
        symmetric: bool,
    ) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0] < w[1]));
        let mut m = Self::from_sorted(rows, cols, entries, weights);
        m.symmetric = symmetric;
        m
    }

    /// Marks the matrix symmetric after checking that it is.
    pub fn into_symmetric(mut self) -> Result<Self, TensorError> {
        if !self.check_symmetric() {
            return Err(TensorError::NotSymmetric);
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[k])
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.entries.binary_search(&(r, c)).is_ok()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match self.entries.binary_search(&(r, c)) {
            Ok(k) => self.weight(k),
            Err(_) => 0.0,
        }
    }

    /// Compressed-row offsets: entries of row `r` live in `row_ptr[r]..row_ptr[r + 1]`.
    pub fn row_ptr(&self) -> &[usize] {
        self.row_ptr.get_or_init(|| {
            let mut ptr = vec![0usize; self.rows + 1];
            for &(r, _) in &self.entries {
                ptr[r + 1] += 1;
            }
            for r in 0..self.rows {
                ptr[r + 1] += ptr[r];
            }
            ptr
        })
    }

    pub fn row_entries(&self, r: usize) -> std::ops::Range<usize> {
        let ptr = self.row_ptr();
        ptr[r]..ptr[r + 1]
    }

    fn check_symmetric(&self) -> bool {
        self.rows == self.cols
            && self.entries.iter().enumerate().all(|(k, &(r, c))| {
                match self.entries.binary_search(&(c, r)) {
                    Ok(k2) => self.weight(k) == self.weight(k2),
                    Err(_) => false,
                }
            })
    }

    pub fn densify(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (k, &(r, c)) in self.entries.iter().enumerate() {
            d.set(r, c, self.weight(k));
        }
        d
    }

    /// `self · d`. Within each output row, contributions are summed in ascending
    /// column order starting from `0.0`, so the result is bit-identical to
    /// `self.densify().matmul(d)` for finite inputs.
    pub fn spmm(&self, d: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
        if self.cols != d.rows() {
            return Err(TensorError::shape("spmm", self.shape(), d.shape()));
        }
        let m = d.cols();
        let mut out = DenseMatrix::zeros(self.rows, m);
        let ptr = self.row_ptr();
        for r in 0..self.rows {
            let o_row = out.row_mut(r);
            for k in ptr[r]..ptr[r + 1] {
                let (_, c) = self.entries[k];
                let w = self.weight(k);
                for (o, &b) in o_row.iter_mut().zip(d.row(c)) {
                    *o += w * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · d`, accumulating entries in storage order.
    pub fn t_spmm(&self, d: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
        if self.rows != d.rows() {
            return Err(TensorError::shape("t_spmm", self.shape(), d.shape()));
        }
        let m = d.cols();
        let mut out = DenseMatrix::zeros(self.cols, m);
        for (k, &(r, c)) in self.entries.iter().enumerate() {
            let w = self.weight(k);
            for (o, &b) in out.row_mut(c).iter_mut().zip(d.row(r)) {
                *o += w * b;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut t: Vec<(usize, usize, f64)> = self
            .entries
            .iter()
            .enumerate()
            .map(|(k, &(r, c))| (c, r, self.weight(k)))
            .collect();
        t.sort_by_key(|&(r, c, _)| (r, c));
        let entries = t.iter().map(|&(r, c, _)| (r, c)).collect();
        let weights = self
            .weights
            .as_ref()
            .map(|_| t.iter().map(|&(_, _, w)| w).collect());
        let mut m = Self::from_sorted(self.cols, self.rows, entries, weights);
        m.symmetric = self.symmetric;
        m
    }
}
