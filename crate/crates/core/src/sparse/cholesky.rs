//! Up-looking sparse Cholesky `P A P^T = L L^T` with the symbolic analysis
//! (ordering, elimination tree, row patterns of `L`) separated from the
//! numeric factorization, so matrices sharing one pattern are analyzed once.

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::SymmetricCsc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Ordering {
    Natural,
    /// Reverse Cuthill-McKee, reduces bandwidth and fill.
    #[default]
    ReverseCuthillMcKee,
}

#[derive(Clone, Debug)]
pub struct SymbolicCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// Permuted upper pattern; `source[k]` indexes the input value array.
    c_colptr: Vec<usize>,
    c_rowidx: Vec<usize>,
    source: Vec<usize>,
    input_colptr: Vec<usize>,
    input_rowidx: Vec<usize>,
    /// Elimination tree.
    parent: Vec<usize>,
    /// Nonzero columns of each row of `L` (strictly left of the diagonal), in
    /// topological order.
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    l_colptr: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    symbolic: Arc<SymbolicCholesky>,
    l_rowidx: Vec<usize>,
    l_values: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl SymbolicCholesky {
    pub fn analyze(pattern: &SymmetricCsc, ordering: Ordering) -> Self {
        let n = pattern.n;
        let perm = match ordering {
            Ordering::Natural => (0..n).collect(),
            Ordering::ReverseCuthillMcKee => reverse_cuthill_mckee(pattern),
        };
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // Permuted upper triangle.
        let mut cols: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for c in 0..n {
            for p in pattern.colptr[c]..pattern.colptr[c + 1] {
                let (i, j) = (iperm[pattern.rowidx[p]], iperm[c]);
                let (r, cc) = if i <= j { (i, j) } else { (j, i) };
                cols[cc].push((r, p));
            }
        }
        let mut c_colptr = vec![0];
        let mut c_rowidx = Vec::with_capacity(pattern.nnz());
        let mut source = Vec::with_capacity(pattern.nnz());
        for mut col in cols {
            col.sort_unstable();
            for (r, p) in col {
                c_rowidx.push(r);
                source.push(p);
            }
            c_colptr.push(c_rowidx.len());
        }

        // Elimination tree with path compression.
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for p in c_colptr[k]..c_colptr[k + 1] {
                let mut i = c_rowidx[p];
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }

        // Row patterns via elimination-tree reach.
        let mut mark = vec![NONE; n];
        let mut stack = vec![0; n];
        let mut row_ptr = vec![0];
        let mut row_cols = Vec::new();
        let mut counts = vec![1usize; n];
        for k in 0..n {
            mark[k] = k;
            let mut top = n;
            for p in c_colptr[k]..c_colptr[k + 1] {
                let mut i = c_rowidx[p];
                if i >= k {
                    continue;
                }
                let mut len = 0;
                while mark[i] != k {
                    stack[len] = i;
                    len += 1;
                    mark[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    stack[top] = stack[len];
                }
            }
            for &i in &stack[top..n] {
                counts[i] += 1;
            }
            row_cols.extend_from_slice(&stack[top..n]);
            row_ptr.push(row_cols.len());
        }
        let mut l_colptr = vec![0];
        for c in counts {
            l_colptr.push(l_colptr.last().unwrap() + c);
        }

        SymbolicCholesky {
            n,
            perm,
            c_colptr,
            c_rowidx,
            source,
            input_colptr: pattern.colptr.clone(),
            input_rowidx: pattern.rowidx.clone(),
            parent,
            row_ptr,
            row_cols,
            l_colptr,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros of `L` including the diagonal.
    pub fn factor_nnz(&self) -> usize {
        *self.l_colptr.last().unwrap()
    }

    pub fn etree(&self) -> &[usize] {
        &self.parent
    }

    /// Numeric factorization of a matrix with the analyzed pattern.
    pub fn factor(self: &Arc<Self>, a: &SymmetricCsc) -> Result<CholeskyFactor> {
        if a.n != self.n || a.colptr != self.input_colptr || a.rowidx != self.input_rowidx {
            return Err(Error::Factorization(
                "matrix pattern differs from the analyzed pattern".into(),
            ));
        }
        let n = self.n;
        let nnz = self.factor_nnz();
        let mut l_rowidx = vec![0; nnz];
        let mut l_values = vec![0.0; nnz];
        let mut next = self.l_colptr[..n].to_vec();
        let mut x = vec![0.0; n];
        for k in 0..n {
            for p in self.c_colptr[k]..self.c_colptr[k + 1] {
                x[self.c_rowidx[p]] = a.values[self.source[p]];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &self.row_cols[self.row_ptr[k]..self.row_ptr[k + 1]] {
                let lki = x[i] / l_values[self.l_colptr[i]];
                x[i] = 0.0;
                for p in self.l_colptr[i] + 1..next[i] {
                    x[l_rowidx[p]] -= l_values[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                l_rowidx[p] = k;
                l_values[p] = lki;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Factorization(format!(
                    "matrix is not positive definite (pivot {k} = {d:e})"
                )));
            }
            let p = next[k];
            next[k] += 1;
            l_rowidx[p] = k;
            l_values[p] = d.sqrt();
        }
        Ok(CholeskyFactor {
            symbolic: Arc::clone(self),
            l_rowidx,
            l_values,
        })
    }
}

impl CholeskyFactor {
    pub fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        &self.symbolic
    }

    pub fn l_values(&self) -> &[f64] {
        &self.l_values
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let s = &*self.symbolic;
        let n = s.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = s.perm.iter().map(|&o| b[o]).collect();
        for j in 0..n {
            let start = s.l_colptr[j];
            y[j] /= self.l_values[start];
            let yj = y[j];
            for p in start + 1..s.l_colptr[j + 1] {
                y[self.l_rowidx[p]] -= self.l_values[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let start = s.l_colptr[j];
            let mut acc = y[j];
            for p in start + 1..s.l_colptr[j + 1] {
                acc -= self.l_values[p] * y[self.l_rowidx[p]];
            }
            y[j] = acc / self.l_values[start];
        }
        for (new, &old) in s.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }

    /// Solves `A X = B` column by column; columns run in parallel.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let cols: Vec<Vec<f64>> = (0..rhs.ncols())
            .into_par_iter()
            .map(|c| {
                let mut col: Vec<f64> = rhs.column(c).iter().copied().collect();
                self.solve_in_place(&mut col);
                col
            })
            .collect();
        DMatrix::from_fn(rhs.nrows(), rhs.ncols(), |i, c| cols[c][i])
    }
}

fn reverse_cuthill_mckee(pattern: &SymmetricCsc) -> Vec<usize> {
    let n = pattern.n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in 0..n {
        for p in pattern.colptr[c]..pattern.colptr[c + 1] {
            let r = pattern.rowidx[p];
            if r != c {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SymmetricCsc {
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                if i == j || rng.random::<f64>() < density {
                    entries.push((i, j));
                }
            }
        }
        let mut m = SymmetricCsc::from_pattern(n, entries);
        // Diagonally dominant: SPD.
        let mut rowsum = vec![0.0; n];
        for c in 0..n {
            for p in m.colptr[c]..m.colptr[c + 1] {
                let r = m.rowidx[p];
                if r != c {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    m.values[p] = v;
                    rowsum[r] += v.abs();
                    rowsum[c] += v.abs();
                }
            }
        }
        for c in 0..n {
            let p = m.position(c, c).unwrap();
            m.values[p] = rowsum[c] + 1.0;
        }
        m
    }

    #[test]
    fn solves_random_spd_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &ordering in &[Ordering::Natural, Ordering::ReverseCuthillMcKee] {
            for n in [1, 2, 7, 40, 120] {
                let a = random_spd(&mut rng, n, 0.08);
                let sym = Arc::new(SymbolicCholesky::analyze(&a, ordering));
                let f = sym.factor(&a).unwrap();
                let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
                let mut b = a.mul_vec(&x_true);
                f.solve_in_place(&mut b);
                for (u, v) in b.iter().zip(&x_true) {
                    assert!((u - v).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_spd(&mut rng, 30, 0.2);
        let sym = Arc::new(SymbolicCholesky::analyze(&a, Ordering::default()));
        let f = sym.factor(&a).unwrap();
        let dense = a.to_dense();
        let inv_a = f.solve(&dense);
        assert!((inv_a - DMatrix::identity(30, 30)).amax() < 1e-8);
    }

    #[test]
    fn cached_analysis_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_spd(&mut rng, 60, 0.1);
        let mut a2 = a.clone();
        for v in &mut a2.values {
            *v *= 1.5;
        }
        let cached = Arc::new(SymbolicCholesky::analyze(&a, Ordering::default()));
        let _ = cached.factor(&a).unwrap();
        let reused = cached.factor(&a2).unwrap();
        let fresh = Arc::new(SymbolicCholesky::analyze(&a2, Ordering::default()))
            .factor(&a2)
            .unwrap();
        assert_eq!(reused.l_values(), fresh.l_values());
    }

    #[test]
    fn indefinite_matrix_fails() {
        let mut m = SymmetricCsc::from_pattern(2, [(0, 0), (0, 1), (1, 1)]);
        m.values = vec![1.0, 2.0, 1.0];
        let sym = Arc::new(SymbolicCholesky::analyze(&m, Ordering::Natural));
        assert!(matches!(sym.factor(&m), Err(Error::Factorization(_))));
    }

    #[test]
    fn pattern_mismatch_is_rejected() {
        let a = SymmetricCsc::from_pattern(2, [(0, 0), (1, 1)]);
        let b = SymmetricCsc::from_pattern(2, [(0, 0), (0, 1), (1, 1)]);
        let sym = Arc::new(SymbolicCholesky::analyze(&a, Ordering::Natural));
        assert!(sym.factor(&b).is_err());
    }
}
