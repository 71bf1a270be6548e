//! Sparse Cholesky factorization `P A Pᵀ = L Lᵀ` with a nested-dissection
//! ordering computed from the matrix graph.

use super::sparse::SparseSymmetric;
use crate::error::{Error, Result};

/// Leaf size below which dissection stops.
const LEAF: usize = 64;

/// Fill-reducing permutation: `perm[new] = old`.
pub fn nested_dissection(a: &SparseSymmetric) -> Vec<usize> {
    let n = a.dim();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let mut perm = Vec::with_capacity(n);
    // uncoupled rows first: they produce no fill
    let mut rest = Vec::new();
    for (i, nb) in adj.iter().enumerate() {
        if nb.is_empty() {
            perm.push(i);
        } else {
            rest.push(i);
        }
    }
    let mut ws = Workspace {
        stamp: vec![0; n],
        level: vec![0; n],
        next_stamp: 0,
    };
    dissect(&adj, rest, &mut perm, &mut ws);
    debug_assert_eq!(perm.len(), n);
    perm
}

struct Workspace {
    stamp: Vec<u32>,
    level: Vec<usize>,
    next_stamp: u32,
}

impl Workspace {
    fn mark_set(&mut self, nodes: &[usize]) -> u32 {
        self.next_stamp += 2;
        let s = self.next_stamp;
        for &v in nodes {
            self.stamp[v] = s;
        }
        s
    }

    /// Breadth-first levels from `root` within the nodes stamped `set`;
    /// visited nodes get stamp `set + 1`. Returns nodes in visiting order.
    fn bfs(&mut self, adj: &[Vec<usize>], root: usize, set: u32) -> Vec<usize> {
        let mut order = vec![root];
        self.stamp[root] = set + 1;
        self.level[root] = 0;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &u in &adj[v] {
                if self.stamp[u] == set {
                    self.stamp[u] = set + 1;
                    self.level[u] = self.level[v] + 1;
                    order.push(u);
                }
            }
        }
        order
    }

    fn reset(&mut self, nodes: &[usize], set: u32) {
        for &v in nodes {
            self.stamp[v] = set;
        }
    }
}

fn dissect(adj: &[Vec<usize>], nodes: Vec<usize>, perm: &mut Vec<usize>, ws: &mut Workspace) {
    if nodes.len() <= LEAF {
        perm.extend(nodes);
        return;
    }
    let set = ws.mark_set(&nodes);
    // split into connected components
    let mut components = Vec::new();
    for &v in &nodes {
        if ws.stamp[v] == set {
            components.push(ws.bfs(adj, v, set));
        }
    }
    if components.len() > 1 {
        for c in components {
            dissect(adj, c, perm, ws);
        }
        return;
    }
    let mut order = components.pop().expect("non-empty node set");
    // pseudo-peripheral root: restart from the last node reached
    for _ in 0..2 {
        ws.reset(&order, set);
        let root = *order.last().expect("non-empty");
        order = ws.bfs(adj, root, set);
    }
    let depth = ws.level[*order.last().expect("non-empty")];
    if depth < 2 {
        perm.extend(order);
        return;
    }
    let half = order.len() / 2;
    let mid = ws.level[order[half]].clamp(1, depth - 1);
    let (mut a, mut b, mut sep) = (Vec::new(), Vec::new(), Vec::new());
    for &v in &order {
        match ws.level[v].cmp(&mid) {
            std::cmp::Ordering::Less => a.push(v),
            std::cmp::Ordering::Equal => sep.push(v),
            std::cmp::Ordering::Greater => b.push(v),
        }
    }
    dissect(adj, a, perm, ws);
    dissect(adj, b, perm, ws);
    perm.extend(sep);
}

/// Sparse lower-triangular Cholesky factor.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    perm: Vec<usize>,
    /// Column pointers of `L` (diagonal entry first in each column).
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl Cholesky {
    /// Factors an SPD matrix. A non-positive pivot yields
    /// [`Error::NotPositiveDefinite`] with the permuted index.
    ///
    /// Explicit zeros are dropped from the pattern first, so a matrix that is
    /// diagonal on most rows factors with little fill.
    pub fn factor(a: &SparseSymmetric) -> Result<Self> {
        let a = a.pruned();
        let perm = nested_dissection(&a);
        Self::factor_with_ordering(&a, perm)
    }

    pub fn factor_with_ordering(a: &SparseSymmetric, perm: Vec<usize>) -> Result<Self> {
        let n = a.dim();
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: perm.len(),
            });
        }
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // upper triangle of the permuted matrix, by column
        let mut cptr = Vec::with_capacity(n + 1);
        let mut crow = Vec::new();
        let mut cval = Vec::new();
        cptr.push(0);
        for &old in &perm {
            let k = inv[old];
            for (j, v) in a.row(old) {
                let i = inv[j];
                if i <= k {
                    crow.push(i);
                    cval.push(v);
                }
            }
            cptr.push(crow.len());
        }

        // elimination tree
        let mut parent = vec![usize::MAX; n];
        let mut ancestor = vec![usize::MAX; n];
        for k in 0..n {
            for &i0 in &crow[cptr[k]..cptr[k + 1]] {
                let mut i = i0;
                while i != usize::MAX && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == usize::MAX {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }

        // column counts from row patterns
        let mut mark = vec![usize::MAX; n];
        let mut stack = vec![0usize; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(&crow[cptr[k]..cptr[k + 1]], k, &parent, &mut mark, &mut stack);
            for &i in &stack[top..n] {
                counts[i] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + counts[k];
        }
        let nnz = col_ptr[n];
        let mut rows = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill = col_ptr[..n].to_vec();

        // up-looking numeric factorization
        mark.fill(usize::MAX);
        let mut x = vec![0.0; n];
        for k in 0..n {
            let top = ereach(&crow[cptr[k]..cptr[k + 1]], k, &parent, &mut mark, &mut stack);
            let mut d = 0.0;
            for p in cptr[k]..cptr[k + 1] {
                let i = crow[p];
                if i == k {
                    d += cval[p];
                } else {
                    x[i] += cval[p];
                }
            }
            for &i in &stack[top..n] {
                let lki = x[i] / vals[col_ptr[i]];
                x[i] = 0.0;
                for p in (col_ptr[i] + 1)..fill[i] {
                    x[rows[p]] -= vals[p] * lki;
                }
                d -= lki * lki;
                rows[fill[i]] = k;
                vals[fill[i]] = lki;
                fill[i] += 1;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: k, pivot: d });
            }
            rows[fill[k]] = k;
            vals[fill[k]] = d.sqrt();
            fill[k] += 1;
        }
        Ok(Self {
            n,
            perm,
            col_ptr,
            rows,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros in `L`.
    pub fn factor_nnz(&self) -> usize {
        self.vals.len()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for j in 0..n {
            let r = self.col_ptr[j]..self.col_ptr[j + 1];
            let yj = y[j] / self.vals[r.start];
            y[j] = yj;
            if yj != 0.0 {
                for p in (r.start + 1)..r.end {
                    y[self.rows[p]] -= self.vals[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let r = self.col_ptr[j]..self.col_ptr[j + 1];
            let mut s = y[j];
            for p in (r.start + 1)..r.end {
                s -= self.vals[p] * y[self.rows[p]];
            }
            y[j] = s / self.vals[r.start];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal), written to
/// `stack[top..]` in topological order. `mark` must not hold `k` on entry.
fn ereach(
    col: &[usize],
    k: usize,
    parent: &[usize],
    mark: &mut [usize],
    stack: &mut [usize],
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = k;
    for &i0 in col {
        if i0 >= k {
            continue;
        }
        let mut len = 0;
        let mut i = i0;
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
    top
}
