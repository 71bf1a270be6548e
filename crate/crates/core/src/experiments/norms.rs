//! Error norms over the cut domain and convergence rates.

use crate::basis::FESpace;
use crate::forms::CutGeometry;
use crate::geometry::{tensor_gauss_rule, Point};
use serde::Serialize;

/// Something with a value and gradient at every point of the domain.
pub trait Target {
    fn value_grad(&self, x: Point) -> (f64, [f64; 2]);
}

impl<F: Fn(Point) -> (f64, [f64; 2])> Target for F {
    fn value_grad(&self, x: Point) -> (f64, [f64; 2]) {
        self(x)
    }
}

/// Finite element function given by free coefficients on a space.
///
/// Points in a cell that is not active are evaluated by extending the
/// polynomial of the nearest active neighbour, which happens when the
/// function is sampled on a slightly different discrete domain.
pub struct FeFunction<'a> {
    space: &'a FESpace,
    raw: Vec<f64>,
}

impl<'a> FeFunction<'a> {
    pub fn new(space: &'a FESpace, free: &[f64]) -> Self {
        Self {
            space,
            raw: space.expand(free),
        }
    }

    pub fn space(&self) -> &FESpace {
        self.space
    }

    /// Active cell used to evaluate at `x`, if any lies within one ring.
    pub fn host_cell(&self, x: Point) -> Option<usize> {
        let mesh = self.space.mesh();
        let cls = self.space.classification();
        let h = mesh.h();
        let o = mesh.origin();
        let [nx, ny] = mesh.n_cells();
        let fi = ((x[0] - o[0]) / h).floor() as i64;
        let fj = ((x[1] - o[1]) / h).floor() as i64;
        let mut best: Option<(f64, usize)> = None;
        for dj in -1..=1i64 {
            for di in -1..=1i64 {
                let (i, j) = (fi + di, fj + dj);
                if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
                    continue;
                }
                let cell = mesh.cell_index(i as usize, j as usize);
                if !cls.is_active(cell) {
                    continue;
                }
                let c = mesh.cell_center(cell);
                let d = (x[0] - c[0]).abs().max((x[1] - c[1]).abs());
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, cell));
                }
            }
        }
        best.map(|(_, c)| c)
    }
}

impl Target for FeFunction<'_> {
    fn value_grad(&self, x: Point) -> (f64, [f64; 2]) {
        match self.host_cell(x) {
            Some(cell) => self.space.evaluate_on_cell(&self.raw, cell, x),
            None => (f64::NAN, [f64::NAN; 2]),
        }
    }
}

/// What the boundary column measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryError {
    /// `‖u_h − u‖` on the discrete boundary.
    Value,
    /// `‖∂ₙu_h − ∂ₙu‖` on the discrete boundary.
    NormalDerivative,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l2: f64,
    /// Gradient seminorm.
    pub h1: f64,
    pub boundary: f64,
}

/// Errors of the discrete function with free coefficients `free` against
/// `target`, integrated with the rules in `geometry` on cut cells and a
/// tensor Gauss rule with `geometry.points_per_line()` points elsewhere.
pub fn error_norms(
    space: &FESpace,
    free: &[f64],
    geometry: &CutGeometry,
    target: &dyn Target,
    boundary: BoundaryError,
) -> ErrorNorms {
    let raw = space.expand(free);
    let mesh = space.mesh();
    let n = geometry.points_per_line().max(space.order() + 3);
    let (mut l2, mut h1, mut bd) = (0.0, 0.0, 0.0);
    let mut volume = |cell: usize, x: Point, w: f64| {
        let (v, g) = space.evaluate_on_cell(&raw, cell, x);
        let (u, gu) = target.value_grad(x);
        l2 += w * (v - u).powi(2);
        h1 += w * ((g[0] - gu[0]).powi(2) + (g[1] - gu[1]).powi(2));
    };
    for &cell in space.classification().active_cells() {
        match geometry.rule(cell) {
            None => {
                for (x, w) in tensor_gauss_rule(mesh.cell_lower(cell), mesh.h(), n) {
                    volume(cell, x, w);
                }
            }
            Some(rule) => {
                for &(x, w) in &rule.volume {
                    volume(cell, x, w);
                }
            }
        }
    }
    for &cell in space.classification().cut_cells() {
        if let Some(rule) = geometry.rule(cell) {
            for s in &rule.surface {
                let (v, g) = space.evaluate_on_cell(&raw, cell, s.point);
                let (u, gu) = target.value_grad(s.point);
                let d = match boundary {
                    BoundaryError::Value => v - u,
                    BoundaryError::NormalDerivative => {
                        (g[0] - gu[0]) * s.normal[0] + (g[1] - gu[1]) * s.normal[1]
                    }
                };
                bd += s.weight * d * d;
            }
        }
    }
    ErrorNorms {
        l2: l2.sqrt(),
        h1: h1.sqrt(),
        boundary: bd.sqrt(),
    }
}

/// `log(e₁/e₂) / log(h₁/h₂)`.
pub fn rate(e1: f64, e2: f64, h1: f64, h2: f64) -> f64 {
    (e1 / e2).ln() / (h1 / h2).ln()
}

/// One line of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub h: f64,
    pub e_l2: f64,
    pub rate_l2: Option<f64>,
    pub e_h1: f64,
    pub rate_h1: Option<f64>,
    pub e_boundary: f64,
    pub rate_boundary: Option<f64>,
}

impl ErrorRow {
    pub fn new(h: f64, e: ErrorNorms) -> Self {
        Self {
            h,
            e_l2: e.l2,
            rate_l2: None,
            e_h1: e.h1,
            rate_h1: None,
            e_boundary: e.boundary,
            rate_boundary: None,
        }
    }
}

/// Fills the rate columns of each row from the row before it. Rows must be
/// ordered by decreasing `h`.
pub fn fill_rates(rows: &mut [ErrorRow]) {
    for i in 1..rows.len() {
        let (a, b) = (rows[i - 1], rows[i]);
        rows[i].rate_l2 = Some(rate(a.e_l2, b.e_l2, a.h, b.h));
        rows[i].rate_h1 = Some(rate(a.e_h1, b.e_h1, a.h, b.h));
        rows[i].rate_boundary = Some(rate(a.e_boundary, b.e_boundary, a.h, b.h));
    }
    if let Some(first) = rows.first_mut() {
        first.rate_l2 = None;
        first.rate_h1 = None;
        first.rate_boundary = None;
    }
}
