//! Lagrange bases on Gauss–Lobatto nodes, in one dimension and as tensor
//! products on square cells.

use crate::error::{Error, Result};
use crate::geometry::rules::gauss_lobatto;

/// Gauss–Lobatto nodes of order `p` on `[-1, 1]`.
pub fn gauss_lobatto_nodes(p: usize) -> Vec<f64> {
    gauss_lobatto(p).points
}

/// Degree-`p` Lagrange basis on the Gauss–Lobatto nodes of `[-1, 1]`.
///
/// Values use the barycentric formula; the `k`-th derivative of every basis
/// function is interpolated exactly from its nodal values `D^k`.
#[derive(Clone, Debug)]
pub struct LagrangeBasis1d {
    p: usize,
    nodes: Vec<f64>,
    bary: Vec<f64>,
    /// `diff[k][i * n + j]` = k-th derivative of basis function `j` at node `i`.
    diff: Vec<Vec<f64>>,
}

impl LagrangeBasis1d {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "polynomial order must be at least 1");
        let nodes = gauss_lobatto_nodes(p);
        let n = p + 1;
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let prod: f64 = (0..n)
                    .filter(|&m| m != j)
                    .map(|m| nodes[j] - nodes[m])
                    .product();
                1.0 / prod
            })
            .collect();
        let mut d1 = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    d1[i * n + j] = v;
                    diag -= v;
                }
            }
            d1[i * n + i] = diag;
        }
        let mut identity = vec![0.0; n * n];
        for i in 0..n {
            identity[i * n + i] = 1.0;
        }
        let mut diff = vec![identity];
        for k in 1..=p {
            let prev = &diff[k - 1];
            let mut next = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    next[i * n + j] = (0..n).map(|m| d1[i * n + m] * prev[m * n + j]).sum();
                }
            }
            diff.push(next);
        }
        Self { p, nodes, bary, diff }
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.p + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Basis values at `xi`.
    pub fn values(&self, xi: f64, out: &mut [f64]) {
        let n = self.len();
        if let Some(j) = self.nodes.iter().position(|&x| x == xi) {
            out[..n].fill(0.0);
            out[j] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for j in 0..n {
            let t = self.bary[j] / (xi - self.nodes[j]);
            out[j] = t;
            denom += t;
        }
        for v in out[..n].iter_mut() {
            *v /= denom;
        }
    }

    /// Values (`k = 0`) through `max_order`-th derivatives at `xi`, with respect
    /// to the reference coordinate. `out[k * n + j]` holds derivative `k` of
    /// function `j`.
    pub fn derivatives(&self, xi: f64, max_order: usize, out: &mut [f64]) {
        let n = self.len();
        let mut vals = [0.0; 16];
        let vals = if n <= 16 {
            &mut vals[..n]
        } else {
            unreachable!("orders above 15 are not supported")
        };
        self.values(xi, vals);
        out[..n].copy_from_slice(vals);
        for k in 1..=max_order.min(self.p) {
            let dk = &self.diff[k];
            for j in 0..n {
                out[k * n + j] = (0..n).map(|i| vals[i] * dk[i * n + j]).sum();
            }
        }
        for k in (self.p + 1)..=max_order {
            out[k * n..(k + 1) * n].fill(0.0);
        }
    }
}

/// Shape functions of a tensor-product cell evaluated at one point.
///
/// Derivatives are physical (already scaled by `(2/h)^k`). Local function
/// `a + (p + 1) b` is the product of 1D functions `a` (x) and `b` (y).
#[derive(Clone, Debug, Default)]
pub struct ShapeValues {
    pub values: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    /// `pure[axis][k - 1][l]` = ∂ᵏφ_l/∂x_axisᵏ for k = 1..=max_order.
    pub pure: [Vec<Vec<f64>>; 2],
}

/// Tensor-product `Q_p` Lagrange basis on Gauss–Lobatto nodes.
#[derive(Clone, Debug)]
pub struct TensorBasis {
    line: LagrangeBasis1d,
}

impl TensorBasis {
    pub fn new(p: usize) -> Self {
        Self {
            line: LagrangeBasis1d::new(p),
        }
    }

    pub fn order(&self) -> usize {
        self.line.order()
    }

    pub fn line(&self) -> &LagrangeBasis1d {
        &self.line
    }

    pub fn num_functions(&self) -> usize {
        self.line.len() * self.line.len()
    }

    /// Reference coordinates of local node `l`.
    pub fn node(&self, l: usize) -> [f64; 2] {
        let n = self.line.len();
        [self.line.nodes[l % n], self.line.nodes[l / n]]
    }

    /// Evaluates values, gradients and pure axis derivatives up to
    /// `max_order` at reference point `xi` on a cell of side `h`.
    pub fn evaluate(&self, xi: [f64; 2], h: f64, max_order: usize) -> Result<ShapeValues> {
        let p = self.order();
        if max_order > p {
            return Err(Error::InvalidArgument(format!(
                "derivative order {max_order} exceeds polynomial order {p}"
            )));
        }
        let mut out = ShapeValues::default();
        self.evaluate_into(xi, h, max_order, &mut out);
        Ok(out)
    }

    /// Allocation-reusing variant of [`Self::evaluate`]; `max_order` must not
    /// exceed the order.
    pub fn evaluate_into(&self, xi: [f64; 2], h: f64, max_order: usize, out: &mut ShapeValues) {
        let n = self.line.len();
        let kmax = max_order.max(1);
        let mut dx = vec![0.0; (kmax + 1) * n];
        let mut dy = vec![0.0; (kmax + 1) * n];
        self.line.derivatives(xi[0], kmax, &mut dx);
        self.line.derivatives(xi[1], kmax, &mut dy);
        let s = 2.0 / h;
        let nf = n * n;
        out.values.resize(nf, 0.0);
        out.grad.resize(nf, [0.0; 2]);
        for b in 0..n {
            for a in 0..n {
                let l = a + n * b;
                out.values[l] = dx[a] * dy[b];
                out.grad[l] = [s * dx[n + a] * dy[b], s * dx[a] * dy[n + b]];
            }
        }
        for axis in 0..2 {
            let pure = &mut out.pure[axis];
            pure.resize(max_order, Vec::new());
            for k in 1..=max_order {
                let scale = s.powi(k as i32);
                let row = &mut pure[k - 1];
                row.resize(nf, 0.0);
                for b in 0..n {
                    for a in 0..n {
                        row[a + n * b] = scale
                            * if axis == 0 {
                                dx[k * n + a] * dy[b]
                            } else {
                                dx[a] * dy[k * n + b]
                            };
                    }
                }
            }
        }
    }

    /// Values only, into `out` (length `(p+1)²`).
    pub fn values_into(&self, xi: [f64; 2], out: &mut [f64]) {
        let n = self.line.len();
        let mut vx = [0.0; 16];
        let mut vy = [0.0; 16];
        self.line.values(xi[0], &mut vx[..n]);
        self.line.values(xi[1], &mut vy[..n]);
        for b in 0..n {
            for a in 0..n {
                out[a + n * b] = vx[a] * vy[b];
            }
        }
    }

    /// Values and physical gradients into the given buffers.
    pub fn values_gradients_into(&self, xi: [f64; 2], h: f64, vals: &mut [f64], grads: &mut [[f64; 2]]) {
        let n = self.line.len();
        let mut dx = [0.0; 32];
        let mut dy = [0.0; 32];
        self.line.derivatives(xi[0], 1, &mut dx[..2 * n]);
        self.line.derivatives(xi[1], 1, &mut dy[..2 * n]);
        let s = 2.0 / h;
        for b in 0..n {
            for a in 0..n {
                let l = a + n * b;
                vals[l] = dx[a] * dy[b];
                grads[l] = [s * dx[n + a] * dy[b], s * dx[a] * dy[n + b]];
            }
        }
    }
}

/// Reference coordinate in `[-1, 1]` of physical `x` on a cell starting at
/// `lower` with side `h`.
#[inline]
pub fn to_reference(x: [f64; 2], lower: [f64; 2], h: f64) -> [f64; 2] {
    [
        2.0 * (x[0] - lower[0]) / h - 1.0,
        2.0 * (x[1] - lower[1]) / h - 1.0,
    ]
}
