//! Sparse symmetric LDLᵀ factorization with a fixed pattern.
//!
//! The pattern is analysed once: a minimum-degree ordering, the elimination
//! tree and the column counts of L. Numeric factorization is the up-looking
//! algorithm with 1x1 pivots and no pivoting, so it needs a matrix whose
//! every leading principal minor is nonsingular in the chosen order.
//! Quasi-definite KKT matrices (positive definite upper block, negative
//! definite lower block) satisfy this for any ordering. The factorization
//! reports the inertia read off `D`.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

const NONE: usize = usize::MAX;

/// Minimum-degree ordering of the graph of a symmetric pattern given as
/// `(row, col)` pairs (either triangle, duplicates allowed). Ties break on
/// the lowest index, so the result is deterministic.
pub fn minimum_degree_order(n: usize, entries: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(i, j) in entries {
        if i != j {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|i| Reverse((adj[i].len(), i))).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((deg, v))) = heap.pop() {
        if done[v] || deg != adj[v].len() {
            continue;
        }
        done[v] = true;
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        for (k, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[k + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nbrs {
            heap.push(Reverse((adj[a].len(), a)));
        }
    }
    order
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactorError {
    /// A pivot was exactly zero or not finite.
    ZeroPivot(usize),
}

/// Symbolic analysis plus storage for repeated numeric factorizations.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    /// perm[k] = original index placed at position k.
    perm: Vec<usize>,
    /// Upper-triangular CSC pattern of the permuted matrix.
    ap: Vec<usize>,
    ai: Vec<usize>,
    ax: Vec<f64>,
    /// For each input entry, its slot in `ax`.
    slot: Vec<usize>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    // scratch
    y_vals: Vec<f64>,
    y_idx: Vec<usize>,
    y_mark: Vec<bool>,
    elim: Vec<usize>,
    next: Vec<usize>,
}

impl LdlFactor {
    /// Analyses the pattern `entries` (lower or upper triangle entries of a
    /// symmetric `n x n` matrix; each unordered pair at most once). Diagonal
    /// entries are added for every row whether listed or not.
    pub fn analyse(n: usize, entries: &[(usize, usize)]) -> Self {
        let perm = minimum_degree_order(n, entries);
        let mut pinv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }
        // Permuted upper-triangular coordinates for each entry, plus diagonals.
        let mut coords: Vec<(usize, usize)> = entries
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (pinv[i], pinv[j]);
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        coords.extend((0..n).map(|k| (k, k)));
        let mut unique: Vec<(usize, usize)> = coords.clone();
        // Column-major order: sort by (col, row).
        unique.sort_unstable_by_key(|&(r, c)| (c, r));
        unique.dedup();
        let mut ap = vec![0usize; n + 1];
        let mut ai = Vec::with_capacity(unique.len());
        for &(r, c) in &unique {
            ap[c + 1] += 1;
            ai.push(r);
        }
        for c in 0..n {
            ap[c + 1] += ap[c];
        }
        let slot = coords[..entries.len()]
            .iter()
            .map(|&(r, c)| {
                let col = &ai[ap[c]..ap[c + 1]];
                ap[c] + col.binary_search(&r).expect("entry in pattern")
            })
            .collect();

        // Elimination tree and column counts.
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &ai[ap[j]..ap[j + 1]] {
                let mut i = row;
                if i == j {
                    continue;
                }
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let nnz_l = lp[n];
        let nnz_a = ai.len();
        LdlFactor {
            n,
            perm,
            ap,
            ai,
            ax: vec![0.0; nnz_a],
            slot,
            etree,
            lp,
            li: vec![0; nnz_l],
            lx: vec![0.0; nnz_l],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            y_vals: vec![0.0; n],
            y_idx: vec![0; n],
            y_mark: vec![false; n],
            elim: vec![0; n],
            next: vec![0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.lp[self.n]
    }

    /// Factorizes the matrix with values `values[k]` at `entries[k]` (the
    /// pattern given to `analyse`) and `diag` added on the diagonal.
    pub fn factor(&mut self, values: &[f64], diag: &[f64]) -> Result<(), FactorError> {
        let n = self.n;
        self.ax.iter_mut().for_each(|v| *v = 0.0);
        for (k, &v) in values.iter().enumerate() {
            self.ax[self.slot[k]] += v;
        }
        // The diagonal is the last entry of each upper-triangular column.
        for k in 0..n {
            let orig = self.perm[k];
            let col_end = self.ap[k + 1];
            debug_assert_eq!(self.ai[col_end - 1], k);
            self.ax[col_end - 1] += diag[orig];
        }

        for i in 0..n {
            self.next[i] = self.lp[i];
            self.y_mark[i] = false;
            self.y_vals[i] = 0.0;
        }
        for k in 0..n {
            let mut nnz_y = 0;
            self.d[k] = 0.0;
            for p in self.ap[k]..self.ap[k + 1] {
                let b = self.ai[p];
                if b == k {
                    self.d[k] = self.ax[p];
                    continue;
                }
                self.y_vals[b] = self.ax[p];
                if !self.y_mark[b] {
                    self.y_mark[b] = true;
                    self.elim[0] = b;
                    let mut nnz_e = 1;
                    let mut next = self.etree[b];
                    while next != NONE && next < k {
                        if self.y_mark[next] {
                            break;
                        }
                        self.y_mark[next] = true;
                        self.elim[nnz_e] = next;
                        nnz_e += 1;
                        next = self.etree[next];
                    }
                    while nnz_e > 0 {
                        nnz_e -= 1;
                        self.y_idx[nnz_y] = self.elim[nnz_e];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = self.y_idx[i];
                let tmp = self.next[c];
                let yc = self.y_vals[c];
                for j in self.lp[c]..tmp {
                    self.y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[tmp] = k;
                let l = yc * self.dinv[c];
                self.lx[tmp] = l;
                self.d[k] -= yc * l;
                self.next[c] += 1;
                self.y_vals[c] = 0.0;
                self.y_mark[c] = false;
            }
            if self.d[k] == 0.0 || !self.d[k].is_finite() {
                return Err(FactorError::ZeroPivot(self.perm[k]));
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        Ok(())
    }

    /// Number of (positive, negative) pivots of the last factorization.
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|&&v| v > 0.0).count();
        (pos, self.n - pos)
    }

    /// Solves in place using the last factorization.
    pub fn solve(&self, rhs: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                x[self.li[j]] -= self.lx[j] * xi;
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                xi -= self.lx[j] * x[self.li[j]];
            }
            x[i] = xi;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            rhs[p] = x[k];
        }
    }
}

/// `y = A x` for a symmetric matrix stored as one triangle `entries`/`values`
/// plus a diagonal.
pub fn sym_matvec(entries: &[(usize, usize)], values: &[f64], diag: &[f64], x: &[f64], y: &mut [f64]) {
    for (yi, (&d, &xi)) in y.iter_mut().zip(diag.iter().zip(x)) {
        *yi = d * xi;
    }
    for (&(i, j), &v) in entries.iter().zip(values) {
        y[i] += v * x[j];
        if i != j {
            y[j] += v * x[i];
        }
    }
}
