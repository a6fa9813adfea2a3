//! Sparse symmetric matrices and an LDLᵀ solver for Gaussian Markov random
//! fields.
//!
//! Everything the inference path needs from a precision matrix lives here:
//! fill-reducing ordering (reverse Cuthill–McKee), sparse LDLᵀ factorization
//! with reusable symbolic analysis, triangular solves, log-determinants,
//! zero-mean Gaussian sampling through the factor, and the Takahashi
//! recursion that recovers the diagonal of the inverse (posterior marginal
//! variances) without ever forming a dense inverse.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Symmetric sparse matrix, full pattern stored row-wise (CSR). By symmetry
/// the same arrays serve as CSC.
#[derive(Debug, Clone)]
pub struct SymmetricSparse {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricSparse {
    /// Build from (row, col, value) triplets; duplicates are summed. The
    /// caller supplies both triangles (or relies on symmetric input such as
    /// FEM assembly loops).
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut items: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::dims(format!("triplet ({i},{j}) out of range for n={n}")));
            }
            items.push((i, j, v));
        }
        items.sort_unstable_by_key(|&(i, j, _)| (i, j));

        let mut row_counts = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(items.len());
        let mut values = Vec::with_capacity(items.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in items {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_counts[i + 1] += 1;
                last = Some((i, j));
            }
        }
        let mut row_ptr = row_counts;
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SymmetricSparse { n, row_ptr, col_idx, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            y[i] = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
        y
    }

    /// D·A·D for a diagonal D.
    pub fn diag_scale(&self, d: &[f64]) -> SymmetricSparse {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.n {
            let (s, e) = (out.row_ptr[i], out.row_ptr[i + 1]);
            for p in s..e {
                out.values[p] *= d[i] * d[out.col_idx[p]];
            }
        }
        out
    }

    /// A + diag(d).
    pub fn add_diagonal(&self, d: &[f64]) -> Result<SymmetricSparse> {
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                triplets.push((i, j, v));
            }
            triplets.push((i, i, d[i]));
        }
        SymmetricSparse::from_triplets(self.n, &triplets)
    }

    /// `a·self + b·other` on the union pattern.
    pub fn linear_combination(&self, a: f64, other: &SymmetricSparse, b: f64) -> Result<SymmetricSparse> {
        if self.n != other.n {
            return Err(Error::dims("linear combination of mismatched matrices"));
        }
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            triplets.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, a * v)));
            let (cols, vals) = other.row(i);
            triplets.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, b * v)));
        }
        SymmetricSparse::from_triplets(self.n, &triplets)
    }

    /// Sparse product `self · diag(d) · other` (Gustavson row merge). The
    /// result is stored in the same full-pattern CSR form; it is symmetric
    /// whenever the algebra says so (e.g. the GMRF precision recursion).
    pub fn product_diag(&self, d: &[f64], other: &SymmetricSparse) -> SymmetricSparse {
        assert_eq!(d.len(), self.n);
        assert_eq!(other.n, self.n);
        let n = self.n;
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0f64; n];
        let mut marker = vec![usize::MAX; n];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..n {
            touched.clear();
            let (cols_i, vals_i) = self.row(i);
            for (&k, &aik) in cols_i.iter().zip(vals_i) {
                let w = aik * d[k];
                let (cols_k, vals_k) = other.row(k);
                for (&j, &akj) in cols_k.iter().zip(vals_k) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += w * akj;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        SymmetricSparse { n, row_ptr, col_idx, values }
    }

    /// Symmetric triple product `self · diag(d) · self`.
    pub fn triple_product_diag(&self, d: &[f64]) -> SymmetricSparse {
        self.product_diag(d, self)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Quadratic form xᵀ A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mat_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// Fill-reducing ordering choice for the factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    Natural,
    ReverseCuthillMcKee,
}

/// Reverse Cuthill–McKee permutation of the matrix pattern. Returns
/// `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SymmetricSparse) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);

    let bfs_order = |start: usize, visited: &mut Vec<bool>, order: &mut Vec<usize>| {
        let mut queue = std::collections::VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = a
                .row(u)
                .0
                .iter()
                .copied()
                .filter(|&v| v != u && !visited[v])
                .collect();
            nbrs.sort_unstable_by_key(|&v| degree[v]);
            for v in nbrs {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
    };

    while order.len() < n {
        // Pseudo-peripheral start: min-degree unvisited node, pushed outward
        // by one BFS sweep.
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .unwrap();
        let mut probe = Vec::new();
        let mut probe_visited = visited.clone();
        bfs_order(start, &mut probe_visited, &mut probe);
        let far = *probe.last().unwrap();
        bfs_order(far, &mut visited, &mut order);
    }
    order.reverse();
    order
}

/// Symbolic LDLᵀ analysis: permutation, elimination tree, and column counts.
/// Reusable across matrices with the same pattern.
#[derive(Debug, Clone)]
pub struct LdlSymbolic {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    parent: Vec<isize>,
    col_ptr: Vec<usize>,
}

impl LdlSymbolic {
    pub fn analyze(a: &SymmetricSparse, ordering: Ordering) -> Self {
        let n = a.n();
        let perm = match ordering {
            Ordering::Natural => (0..n).collect::<Vec<_>>(),
            Ordering::ReverseCuthillMcKee => reverse_cuthill_mckee(a),
        };
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        let mut parent = vec![-1isize; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            for &c in a.row(perm[k]).0 {
                let mut i = iperm[c];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == -1 {
                            parent[i] = k as isize;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i] as usize;
                    }
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + lnz[k];
        }
        LdlSymbolic { n, perm, iperm, parent, col_ptr }
    }

    /// Expected number of nonzeros in L.
    pub fn factor_nnz(&self) -> usize {
        self.col_ptr[self.n]
    }

    /// Numeric LDLᵀ of a matrix sharing (a subset of) the analyzed pattern.
    pub fn factorize(&self, a: &SymmetricSparse) -> Result<LdlFactor> {
        if a.n() != self.n {
            return Err(Error::dims("factorize: matrix size differs from analysis"));
        }
        let n = self.n;
        let mut li = vec![0usize; self.factor_nnz()];
        let mut lx = vec![0.0f64; self.factor_nnz()];
        let mut d = vec![0.0f64; n];
        let mut lnz = vec![0usize; n];
        let mut y = vec![0.0f64; n];
        let mut flag = vec![usize::MAX; n];
        let mut pattern = vec![0usize; n];

        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for (&c, &v) in {
                let (cols, vals) = a.row(self.perm[k]);
                cols.iter().zip(vals)
            } {
                let i0 = self.iperm[c];
                if i0 > k {
                    continue;
                }
                y[i0] += v;
                let mut len = 0usize;
                let mut i = i0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = self.parent[i] as usize;
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for t in top..n {
                let i = pattern[t];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = self.col_ptr[i] + lnz[i];
                for p in self.col_ptr[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lnz[i] += 1;
            }
            if !(d[k] > 0.0) || !d[k].is_finite() {
                return Err(Error::NotPositiveDefinite(format!(
                    "LDL pivot {} at column {k} of {n}",
                    d[k]
                )));
            }
        }

        Ok(LdlFactor {
            n,
            perm: self.perm.clone(),
            iperm: self.iperm.clone(),
            col_ptr: self.col_ptr.clone(),
            lnz,
            li,
            lx,
            d,
        })
    }
}

/// Numeric LDLᵀ factor of a permuted SPD matrix: `P A Pᵀ = L D Lᵀ` with unit
/// lower-triangular L.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    col_ptr: Vec<usize>,
    lnz: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// One-shot analyze + factorize.
    pub fn new(a: &SymmetricSparse, ordering: Ordering) -> Result<Self> {
        LdlSymbolic::analyze(a, ordering).factorize(a)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.lnz.iter().sum()
    }

    /// log |A| = Σ log d_k.
    pub fn log_det(&self) -> f64 {
        self.d.iter().map(|v| v.ln()).sum()
    }

    fn col(&self, k: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.col_ptr[k], self.col_ptr[k] + self.lnz[k]);
        (&self.li[s..e], &self.lx[s..e])
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<f64> = (0..self.n).map(|k| b[self.perm[k]]).collect();
        // L y = Pb
        for k in 0..self.n {
            let (rows, vals) = self.col(k);
            let xk = x[k];
            for (&i, &l) in rows.iter().zip(vals) {
                x[i] -= l * xk;
            }
        }
        for k in 0..self.n {
            x[k] /= self.d[k];
        }
        // Lᵀ z = y
        for k in (0..self.n).rev() {
            let (rows, vals) = self.col(k);
            let mut acc = x[k];
            for (&i, &l) in rows.iter().zip(vals) {
                acc -= l * x[i];
            }
            x[k] = acc;
        }
        let mut out = vec![0.0; self.n];
        for k in 0..self.n {
            out[self.perm[k]] = x[k];
        }
        out
    }

    /// Draw `z ~ N(0, A^{-1})` through the factor: solve `Lᵀ u = D^{-1/2} w`
    /// with standard normal w. Deterministic given the generator state.
    pub fn sample_zero_mean<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.n)
            .map(|k| {
                let w: f64 = rng.sample(StandardNormal);
                w / self.d[k].sqrt()
            })
            .collect();
        for k in (0..self.n).rev() {
            let (rows, vals) = self.col(k);
            let mut acc = x[k];
            for (&i, &l) in rows.iter().zip(vals) {
                acc -= l * x[i];
            }
            x[k] = acc;
        }
        let mut out = vec![0.0; self.n];
        for k in 0..self.n {
            out[self.perm[k]] = x[k];
        }
        out
    }

    /// Diagonal of A^{-1} via the Takahashi recursion over the factor
    /// pattern (exact: the pattern of L is closed under the recursion).
    pub fn selected_inverse_diag(&self) -> Vec<f64> {
        let n = self.n;
        // Inverse entries on the pattern of L, plus its diagonal.
        let mut zx = vec![0.0f64; self.col_ptr[n]];
        let mut zdiag = vec![0.0f64; n];

        let z_get = |zx: &[f64], zdiag: &[f64], a: usize, b: usize| -> f64 {
            if a == b {
                return zdiag[a];
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (s, e) = (self.col_ptr[lo], self.col_ptr[lo] + self.lnz[lo]);
            match self.li[s..e].binary_search(&hi) {
                Ok(p) => zx[s + p],
                Err(_) => 0.0,
            }
        };

        for j in (0..n).rev() {
            let (s, e) = (self.col_ptr[j], self.col_ptr[j] + self.lnz[j]);
            for idx in s..e {
                let i = self.li[idx];
                let mut acc = 0.0;
                for q in s..e {
                    let k = self.li[q];
                    acc += self.lx[q] * z_get(&zx, &zdiag, k, i);
                }
                zx[idx] = -acc;
            }
            let mut acc = 0.0;
            for q in s..e {
                acc += self.lx[q] * zx[q];
            }
            zdiag[j] = 1.0 / self.d[j] - acc;
        }

        let mut out = vec![0.0; n];
        for orig in 0..n {
            out[orig] = zdiag[self.iperm[orig]];
        }
        out
    }
}
