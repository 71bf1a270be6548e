//! Level-set geometry: analytic shapes, their projection onto a continuous
//! `Q_p` space over the background mesh, and cut-cell quadrature.
//!
//! The domain is `{ψ < 0}` and its boundary is `{ψ = 0}`.

pub mod quadrature;
pub mod rules;

use crate::basis::lagrange::{to_reference, TensorBasis};
use crate::error::{Error, Result};
use crate::grid::BackgroundMesh;
use nalgebra::DMatrix;

pub use quadrature::{
    cut_cell_quadrature, face_rule, tensor_gauss_rule, CutCellQuadrature, SurfacePoint,
};

pub type Point = [f64; 2];

/// A scalar function of the plane with a gradient.
pub trait ScalarField {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> [f64; 2];
}

/// Level-set description of a domain.
#[derive(Clone, Debug)]
pub enum LevelSet {
    /// `|x - center| - radius`: the disk.
    Circle { center: Point, radius: f64 },
    /// `radius + amplitude·sin(lobes·θ) - r` in polar coordinates about the
    /// origin: negative outside the star-shaped curve.
    Star {
        radius: f64,
        amplitude: f64,
        lobes: u32,
    },
    /// `sign·(x_axis - offset)`.
    HalfPlane { axis: usize, offset: f64, sign: f64 },
    /// The same value everywhere.
    Constant(f64),
    /// Piecewise `Q_p` field over a full background mesh.
    Discrete(DiscreteLevelSet),
}

impl LevelSet {
    pub fn circle(center: Point, radius: f64) -> Self {
        LevelSet::Circle { center, radius }
    }

    /// The five-lobed star used for the scattering problem.
    pub fn star() -> Self {
        LevelSet::Star {
            radius: 0.5,
            amplitude: 0.1,
            lobes: 5,
        }
    }

    pub fn half_plane(axis: usize, offset: f64, sign: f64) -> Self {
        assert!(axis < 2, "axis must be 0 or 1");
        LevelSet::HalfPlane { axis, offset, sign }
    }

    pub fn constant(value: f64) -> Self {
        LevelSet::Constant(value)
    }

    pub fn eval(&self, x: Point) -> f64 {
        match self {
            LevelSet::Circle { center, radius } => {
                (x[0] - center[0]).hypot(x[1] - center[1]) - radius
            }
            LevelSet::Star {
                radius,
                amplitude,
                lobes,
            } => {
                let r = x[0].hypot(x[1]);
                let theta = x[1].atan2(x[0]);
                radius + amplitude * (*lobes as f64 * theta).sin() - r
            }
            LevelSet::HalfPlane { axis, offset, sign } => sign * (x[*axis] - offset),
            LevelSet::Constant(v) => *v,
            LevelSet::Discrete(d) => d.eval(x),
        }
    }

    /// Gradient of ψ; fails where it is undefined or vanishes.
    pub fn eval_gradient(&self, x: Point) -> Result<[f64; 2]> {
        let degenerate = || Error::DegenerateGradient { x: x[0], y: x[1] };
        match self {
            LevelSet::Circle { center, .. } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                let r = d[0].hypot(d[1]);
                if r == 0.0 {
                    return Err(degenerate());
                }
                Ok([d[0] / r, d[1] / r])
            }
            LevelSet::Star {
                amplitude, lobes, ..
            } => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                if r2 == 0.0 {
                    return Err(degenerate());
                }
                let r = r2.sqrt();
                let n = *lobes as f64;
                let theta = x[1].atan2(x[0]);
                let c = amplitude * n * (n * theta).cos();
                Ok([-c * x[1] / r2 - x[0] / r, c * x[0] / r2 - x[1] / r])
            }
            LevelSet::HalfPlane { axis, sign, .. } => {
                let mut g = [0.0; 2];
                g[*axis] = *sign;
                Ok(g)
            }
            LevelSet::Constant(_) => Ok([0.0, 0.0]),
            LevelSet::Discrete(d) => Ok(d.gradient(x)),
        }
    }

    /// Restriction of ψ to one cell of `mesh`. For a discrete level set built
    /// on that same mesh this is the cell polynomial.
    pub fn on_cell<'a>(&'a self, mesh: &BackgroundMesh, cell: usize) -> CellField<'a> {
        match self {
            LevelSet::Discrete(d) if d.mesh == *mesh => CellField::Polynomial(d.cell_polynomial(cell)),
            _ => CellField::Analytic(self),
        }
    }
}

impl ScalarField for LevelSet {
    fn value(&self, x: Point) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: Point) -> [f64; 2] {
        self.eval_gradient(x).unwrap_or([0.0, 0.0])
    }
}

/// Level set restricted to one cell.
#[derive(Clone, Debug)]
pub enum CellField<'a> {
    Analytic(&'a LevelSet),
    Polynomial(CellPolynomial<'a>),
}

impl ScalarField for CellField<'_> {
    fn value(&self, x: Point) -> f64 {
        match self {
            CellField::Analytic(ls) => ls.eval(x),
            CellField::Polynomial(p) => p.value(x),
        }
    }

    fn gradient(&self, x: Point) -> [f64; 2] {
        match self {
            CellField::Analytic(ls) => ScalarField::gradient(*ls, x),
            CellField::Polynomial(p) => p.gradient(x),
        }
    }
}

/// A `Q_p` polynomial on one square cell, extended beyond it by the same
/// polynomial.
#[derive(Clone, Debug)]
pub struct CellPolynomial<'a> {
    basis: &'a TensorBasis,
    coeffs: Vec<f64>,
    lower: Point,
    h: f64,
}

impl ScalarField for CellPolynomial<'_> {
    fn value(&self, x: Point) -> f64 {
        let mut v = [0.0; 64];
        let n = self.coeffs.len();
        self.basis
            .values_into(to_reference(x, self.lower, self.h), &mut v[..n]);
        v[..n].iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    fn gradient(&self, x: Point) -> [f64; 2] {
        let mut v = [0.0; 64];
        let mut g = [[0.0; 2]; 64];
        let n = self.coeffs.len();
        self.basis.values_gradients_into(
            to_reference(x, self.lower, self.h),
            self.h,
            &mut v[..n],
            &mut g[..n],
        );
        let mut out = [0.0; 2];
        for (gl, c) in g[..n].iter().zip(&self.coeffs) {
            out[0] += gl[0] * c;
            out[1] += gl[1] * c;
        }
        out
    }
}

/// Continuous piecewise `Q_p` field on every cell of a background mesh,
/// stored by its values at the global Gauss–Lobatto node grid.
#[derive(Clone, Debug)]
pub struct DiscreteLevelSet {
    mesh: BackgroundMesh,
    basis: TensorBasis,
    /// Node values, x index fastest, `(nx·p + 1) × (ny·p + 1)`.
    coeffs: Vec<f64>,
}

impl DiscreteLevelSet {
    pub fn mesh(&self) -> &BackgroundMesh {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    fn row_len(&self) -> usize {
        self.mesh.n_cells()[0] * self.order() + 1
    }

    pub fn cell_polynomial(&self, cell: usize) -> CellPolynomial<'_> {
        let p = self.order();
        let [i, j] = self.mesh.cell_coords(cell);
        let row = self.row_len();
        let mut coeffs = Vec::with_capacity((p + 1) * (p + 1));
        for b in 0..=p {
            for a in 0..=p {
                coeffs.push(self.coeffs[(i * p + a) + (j * p + b) * row]);
            }
        }
        CellPolynomial {
            basis: &self.basis,
            coeffs,
            lower: self.mesh.cell_lower(cell),
            h: self.mesh.h(),
        }
    }

    /// Value at `x`; points outside the mesh use the nearest cell's polynomial.
    pub fn eval(&self, x: Point) -> f64 {
        self.cell_polynomial(self.nearest_cell(x)).value(x)
    }

    pub fn gradient(&self, x: Point) -> [f64; 2] {
        self.cell_polynomial(self.nearest_cell(x)).gradient(x)
    }

    fn nearest_cell(&self, x: Point) -> usize {
        let o = self.mesh.origin();
        let h = self.mesh.h();
        let n = self.mesh.n_cells();
        let idx = |axis: usize| {
            let s = ((x[axis] - o[axis]) / h).floor();
            (s.max(0.0) as usize).min(n[axis] - 1)
        };
        self.mesh.cell_index(idx(0), idx(1))
    }
}

/// 1D consistent mass matrix of the continuous GL Lagrange space on `n`
/// intervals of length `h`.
fn line_mass(n: usize, p: usize, h: f64) -> DMatrix<f64> {
    let basis = crate::basis::lagrange::LagrangeBasis1d::new(p);
    let rule = rules::gauss_legendre(p + 1);
    let mut local = vec![0.0; (p + 1) * (p + 1)];
    let mut v = vec![0.0; p + 1];
    for (&x, &w) in rule.points.iter().zip(&rule.weights) {
        basis.values(x, &mut v);
        for a in 0..=p {
            for b in 0..=p {
                local[a * (p + 1) + b] += 0.5 * h * w * v[a] * v[b];
            }
        }
    }
    let size = n * p + 1;
    let mut m = DMatrix::zeros(size, size);
    for e in 0..n {
        for a in 0..=p {
            for b in 0..=p {
                m[(e * p + a, e * p + b)] += local[a * (p + 1) + b];
            }
        }
    }
    m
}

/// L2 projection of `analytic` onto the continuous `Q_p` space over every
/// cell of `mesh`.
///
/// On a full rectangular mesh the mass matrix is the Kronecker product of two
/// 1D masses, so the projection reduces to two banded solves.
pub fn project_levelset(analytic: &LevelSet, mesh: &BackgroundMesh, p: usize) -> Result<LevelSet> {
    if p == 0 {
        return Err(Error::InvalidArgument("projection order must be at least 1".into()));
    }
    let basis = TensorBasis::new(p);
    let [nx, ny] = mesh.n_cells();
    let h = mesh.h();
    let (sx, sy) = (nx * p + 1, ny * p + 1);
    let rule = rules::gauss_legendre(p + 3);
    let mut rhs = DMatrix::<f64>::zeros(sx, sy);
    let nl = (p + 1) * (p + 1);
    let mut vals = vec![0.0; nl];
    for cell in 0..mesh.num_cells() {
        let lower = mesh.cell_lower(cell);
        let [i, j] = mesh.cell_coords(cell);
        for (&qy, &wy) in rule.points.iter().zip(&rule.weights) {
            for (&qx, &wx) in rule.points.iter().zip(&rule.weights) {
                let x = [
                    lower[0] + 0.5 * h * (qx + 1.0),
                    lower[1] + 0.5 * h * (qy + 1.0),
                ];
                let w = 0.25 * h * h * wx * wy * analytic.eval(x);
                basis.values_into([qx, qy], &mut vals);
                for b in 0..=p {
                    for a in 0..=p {
                        rhs[(i * p + a, j * p + b)] += w * vals[a + (p + 1) * b];
                    }
                }
            }
        }
    }
    let mx = line_mass(nx, p, h)
        .cholesky()
        .expect("1D Lagrange mass matrices are positive definite");
    let my = line_mass(ny, p, h)
        .cholesky()
        .expect("1D Lagrange mass matrices are positive definite");
    // C = Mx⁻¹ B My⁻¹
    let left = mx.solve(&rhs);
    let c = my.solve(&left.transpose()).transpose();
    let mut coeffs = vec![0.0; sx * sy];
    for jj in 0..sy {
        for ii in 0..sx {
            coeffs[ii + jj * sx] = c[(ii, jj)];
        }
    }
    Ok(LevelSet::Discrete(DiscreteLevelSet {
        mesh: mesh.clone(),
        basis,
        coeffs,
    }))
}
