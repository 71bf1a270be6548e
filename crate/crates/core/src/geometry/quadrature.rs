//! Quadrature on square cells and on their intersection with `{ψ < 0}`.
//!
//! Cut cells are handled by dimension reduction. A height direction `k` is
//! chosen where `∂ψ/∂x_k` keeps one sign, so every line along `k` crosses the
//! boundary at most once. The base interval is split where the boundary
//! meets the two faces normal to `k`, Gauss points are placed on each piece,
//! and each line is integrated over its negative part. Boxes where no such
//! direction exists are bisected.

use super::rules::{gauss_legendre, Rule1d};
use super::{Point, ScalarField};
use crate::error::{Error, Result};

/// Maximum number of box bisections before giving up on a cell.
pub const MAX_DEPTH: usize = 8;

/// A boundary quadrature point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub point: Point,
    pub weight: f64,
    /// Outward unit normal `∇ψ/|∇ψ|`.
    pub normal: [f64; 2],
}

/// Volume and boundary rules for one cell.
#[derive(Clone, Debug, Default)]
pub struct CutCellQuadrature {
    pub volume: Vec<(Point, f64)>,
    pub surface: Vec<SurfacePoint>,
}

impl CutCellQuadrature {
    pub fn volume_weight_sum(&self) -> f64 {
        self.volume.iter().map(|(_, w)| w).sum()
    }

    pub fn surface_weight_sum(&self) -> f64 {
        self.surface.iter().map(|s| s.weight).sum()
    }
}

/// Gauss–Legendre rule on a face of length `h`, with `p + 1` points on `[0, h]`.
pub fn face_rule(p: usize, h: f64) -> Rule1d {
    gauss_legendre(p + 1).mapped(0.0, h)
}

/// Number of Gauss points per direction for exactness up to `degree`.
pub fn points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}

/// Tensor Gauss rule with `n` points per direction on the square with lower
/// corner `lower` and side `h`.
pub fn tensor_gauss_rule(lower: Point, h: f64, n: usize) -> Vec<(Point, f64)> {
    let rx = gauss_legendre(n).mapped(lower[0], lower[0] + h);
    let ry = gauss_legendre(n).mapped(lower[1], lower[1] + h);
    let mut out = Vec::with_capacity(n * n);
    for (&y, &wy) in ry.points.iter().zip(&ry.weights) {
        for (&x, &wx) in rx.points.iter().zip(&rx.weights) {
            out.push(([x, y], wx * wy));
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Box2 {
    lo: Point,
    hi: Point,
}

impl Box2 {
    fn center(&self) -> Point {
        [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])]
    }

    fn diameter(&self) -> f64 {
        (self.hi[0] - self.lo[0]).hypot(self.hi[1] - self.lo[1])
    }

    fn split(&self) -> [Box2; 4] {
        let c = self.center();
        [
            Box2 { lo: self.lo, hi: c },
            Box2 { lo: [c[0], self.lo[1]], hi: [self.hi[0], c[1]] },
            Box2 { lo: [self.lo[0], c[1]], hi: [c[0], self.hi[1]] },
            Box2 { lo: c, hi: self.hi },
        ]
    }
}

fn sample_grid(b: &Box2, m: usize) -> impl Iterator<Item = Point> + '_ {
    (0..m).flat_map(move |j| {
        (0..m).map(move |i| {
            [
                b.lo[0] + (b.hi[0] - b.lo[0]) * i as f64 / (m - 1) as f64,
                b.lo[1] + (b.hi[1] - b.lo[1]) * j as f64 / (m - 1) as f64,
            ]
        })
    })
}

/// Point with coordinate `t` along `axis` and `s` along the other one.
#[inline]
fn compose(axis: usize, t: f64, s: f64) -> Point {
    if axis == 0 {
        [t, s]
    } else {
        [s, t]
    }
}

/// Root of `f` in `[a, b]` where `f(a)` and `f(b)` differ in sign, by Newton
/// steps kept inside a shrinking bracket.
fn bracketed_root(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    let fb = f(b);
    if fb == 0.0 {
        return b;
    }
    let mut x = a - fa * (b - a) / (fb - fa);
    if !(x > a && x < b) {
        x = 0.5 * (a + b);
    }
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let d = df(x);
        let mut next = if d != 0.0 { x - fx / d } else { f64::NAN };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        let step = (next - x).abs();
        x = next;
        if step < tol || b - a < tol {
            break;
        }
    }
    x
}

/// Roots of `f` on `[a, b]` found by sign changes on `samples` subintervals.
fn roots_on_segment(
    f: &impl Fn(f64) -> f64,
    df: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    samples: usize,
    tol: f64,
) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=samples {
        let x1 = a + (b - a) * i as f64 / samples as f64;
        let f1 = f(x1);
        if (f0 < 0.0) != (f1 < 0.0) {
            roots.push(bracketed_root(f, df, x0, x1, tol));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

struct Builder<'a, F: ?Sized> {
    field: &'a F,
    n: usize,
    tol: f64,
    cell: usize,
    out: CutCellQuadrature,
}

impl<F: ScalarField + ?Sized> Builder<'_, F> {
    fn process(&mut self, b: Box2, depth: usize) -> Result<()> {
        let samples = 2 * self.n + 3;
        let c = b.center();
        let grad_c = self.field.gradient(c);
        let mut min_v = f64::INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        let mut max_grad: f64 = grad_c[0].hypot(grad_c[1]);
        for x in sample_grid(&b, samples) {
            let v = self.field.value(x);
            min_v = min_v.min(v);
            max_v = max_v.max(v);
            let g = self.field.gradient(x);
            max_grad = max_grad.max(g[0].hypot(g[1]));
        }
        if max_grad == 0.0 {
            // locally constant field
            if max_v < 0.0 {
                self.full_box(b);
            }
            return Ok(());
        }
        // Box clearly on one side of the boundary.
        let margin = max_grad * b.diameter();
        if min_v > margin {
            return Ok(());
        }
        if max_v < -margin {
            self.full_box(b);
            return Ok(());
        }
        let mut order = [0usize, 1];
        if grad_c[1].abs() > grad_c[0].abs() {
            order = [1, 0];
        }
        for k in order {
            if self.monotone(&b, k, samples) {
                self.lines(b, k);
                return Ok(());
            }
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Quadrature {
                cell: self.cell,
                reason: format!("no monotone direction after {MAX_DEPTH} subdivisions"),
            });
        }
        for child in b.split() {
            self.process(child, depth + 1)?;
        }
        Ok(())
    }

    fn monotone(&self, b: &Box2, k: usize, samples: usize) -> bool {
        let mut sign = 0.0;
        for x in sample_grid(b, samples) {
            let d = self.field.gradient(x)[k];
            if d == 0.0 {
                return false;
            }
            if sign == 0.0 {
                sign = d.signum();
            } else if d.signum() != sign {
                return false;
            }
        }
        true
    }

    fn full_box(&mut self, b: Box2) {
        let rx = gauss_legendre(self.n).mapped(b.lo[0], b.hi[0]);
        let ry = gauss_legendre(self.n).mapped(b.lo[1], b.hi[1]);
        for (&y, &wy) in ry.points.iter().zip(&ry.weights) {
            for (&x, &wx) in rx.points.iter().zip(&rx.weights) {
                self.out.volume.push(([x, y], wx * wy));
            }
        }
    }

    /// Integrates along lines in direction `k` over the box.
    fn lines(&mut self, b: Box2, k: usize) {
        let j = 1 - k;
        let field = self.field;
        let (lo_k, hi_k) = (b.lo[k], b.hi[k]);
        let (lo_j, hi_j) = (b.lo[j], b.hi[j]);
        let mut breaks = vec![lo_j, hi_j];
        for t in [lo_k, hi_k] {
            let f = |s: f64| field.value(compose(k, t, s));
            let df = |s: f64| field.gradient(compose(k, t, s))[j];
            breaks.extend(roots_on_segment(&f, &df, lo_j, hi_j, 4 * self.n + 4, self.tol));
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= self.tol);
        let base = gauss_legendre(self.n);
        for seg in breaks.windows(2) {
            let (s0, s1) = (seg[0], seg[1]);
            if s1 - s0 <= self.tol {
                continue;
            }
            let rule = base.mapped(s0, s1);
            for (&s, &ws) in rule.points.iter().zip(&rule.weights) {
                let f0 = field.value(compose(k, lo_k, s));
                let f1 = field.value(compose(k, hi_k, s));
                let (a, z) = match (f0 < 0.0, f1 < 0.0) {
                    (true, true) => (lo_k, hi_k),
                    (false, false) => continue,
                    _ => {
                        let f = |t: f64| field.value(compose(k, t, s));
                        let df = |t: f64| field.gradient(compose(k, t, s))[k];
                        let r = bracketed_root(f, df, lo_k, hi_k, self.tol);
                        let x = compose(k, r, s);
                        let g = field.gradient(x);
                        let norm = g[0].hypot(g[1]);
                        if norm > 0.0 && g[k] != 0.0 {
                            self.out.surface.push(SurfacePoint {
                                point: x,
                                weight: ws * norm / g[k].abs(),
                                normal: [g[0] / norm, g[1] / norm],
                            });
                        }
                        if f0 < 0.0 {
                            (lo_k, r)
                        } else {
                            (r, hi_k)
                        }
                    }
                };
                if z > a {
                    let line = base.mapped(a, z);
                    for (&t, &wt) in line.points.iter().zip(&line.weights) {
                        self.out.volume.push((compose(k, t, s), ws * wt));
                    }
                }
            }
        }
    }
}

/// Volume rule for `{ψ < 0} ∩ T` and surface rule for `{ψ = 0} ∩ T` on the
/// square `T` with lower corner `lower` and side `h`, using `n` Gauss points
/// per line. `cell` only labels errors.
pub fn cut_cell_quadrature<F: ScalarField + ?Sized>(
    field: &F,
    lower: Point,
    h: f64,
    n: usize,
    cell: usize,
) -> Result<CutCellQuadrature> {
    let mut builder = Builder {
        field,
        n,
        tol: 1e-13 * h,
        cell,
        out: CutCellQuadrature::default(),
    };
    let b = Box2 {
        lo: lower,
        hi: [lower[0] + h, lower[1] + h],
    };
    builder.process(b, 0)?;
    Ok(builder.out)
}
