use nalgebra::DMatrix;
use rayon::prelude::*;

/// Compressed sparse rows. Column indices within a row are sorted and unique.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; duplicates are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                assert!(c < ncols, "column {c} out of range {ncols}");
                if indices.len() > *indptr.last().unwrap() && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    /// `self * x`, rows computed in parallel.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols);
        let k = x.ncols();
        let rows: Vec<Vec<f64>> = (0..self.nrows)
            .into_par_iter()
            .map(|i| {
                let (cols, vals) = self.row(i);
                (0..k)
                    .map(|c| cols.iter().zip(vals).map(|(&j, &v)| v * x[(j, c)]).sum())
                    .collect()
            })
            .collect();
        DMatrix::from_fn(self.nrows, k, |i, c| rows[i][c])
    }

    /// `self^T * diag(w) * y`, accumulated in row order.
    pub fn transpose_mul_weighted(&self, w: Option<&[f64]>, y: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(y.nrows(), self.nrows);
        let mut out = DMatrix::zeros(self.ncols, y.ncols());
        for i in 0..self.nrows {
            let wi = w.map_or(1.0, |w| w[i]);
            if wi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                for c in 0..y.ncols() {
                    out[(j, c)] += wi * v * y[(i, c)];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// Symmetric matrix stored as its upper triangle (row <= column) in
/// compressed sparse columns, rows sorted within each column.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricCsc {
    pub n: usize,
    pub colptr: Vec<usize>,
    pub rowidx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SymmetricCsc {
    /// Pattern from `(row, col)` pairs in either triangle; values zeroed.
    pub fn from_pattern(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, j) in entries {
            let (r, c) = if i <= j { (i, j) } else { (j, i) };
            cols[c].push(r);
        }
        let mut colptr = vec![0];
        let mut rowidx = Vec::new();
        for mut col in cols {
            col.sort_unstable();
            col.dedup();
            rowidx.extend(col);
            colptr.push(rowidx.len());
        }
        let nnz = rowidx.len();
        SymmetricCsc {
            n,
            colptr,
            rowidx,
            values: vec![0.0; nnz],
        }
    }

    /// Position of entry `(i, j)` (either triangle) in `values`.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let range = self.colptr[c]..self.colptr[c + 1];
        self.rowidx[range.clone()]
            .binary_search(&r)
            .ok()
            .map(|k| range.start + k)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside the pattern"));
        self.values[p] += v;
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Adds `scale * A^T diag(w) A` for a CSR `A` whose Gram pattern is
    /// contained in this pattern.
    pub fn add_gram(&mut self, a: &CsrMatrix, w: &[f64], scale: f64) {
        for r in 0..a.nrows() {
            let s = scale * w[r];
            if s == 0.0 {
                continue;
            }
            let (cols, vals) = a.row(r);
            for (x, (&ci, &vi)) in cols.iter().zip(vals).enumerate() {
                for (&cj, &vj) in cols[x..].iter().zip(&vals[x..]) {
                    self.add(ci, cj, s * vi * vj);
                }
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            for p in self.colptr[c]..self.colptr[c + 1] {
                let r = self.rowidx[p];
                let v = self.values[p];
                y[r] += v * x[c];
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for c in 0..self.n {
            for p in self.colptr[c]..self.colptr[c + 1] {
                let r = self.rowidx[p];
                m[(r, c)] = self.values[p];
                m[(c, r)] = self.values[p];
            }
        }
        m
    }
}

/// Union of the Gram patterns `A^T A` of the given matrices plus the diagonal.
pub fn gram_pattern(n: usize, mats: &[&CsrMatrix]) -> SymmetricCsc {
    let mut entries = Vec::new();
    for k in 0..n {
        entries.push((k, k));
    }
    for a in mats {
        for r in 0..a.nrows() {
            let (cols, _) = a.row(r);
            for (x, &ci) in cols.iter().enumerate() {
                for &cj in &cols[x..] {
                    entries.push((ci, cj));
                }
            }
        }
    }
    SymmetricCsc::from_pattern(n, entries)
}
