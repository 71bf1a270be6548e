use super::{BoundaryKind, BoundarySetup, ProblemData};
use crate::basis::{FESpace, ShapeValues, TensorBasis};
use crate::error::{Error, Result};
use crate::geometry::quadrature::face_rule;
use crate::geometry::rules::{gauss_legendre, gauss_lobatto};
use crate::geometry::{cut_cell_quadrature, CutCellQuadrature, LevelSet, Point};
use crate::grid::{BackgroundMesh, CutClassification, StabilizedFace};
use crate::spectra::{Pattern, SparseSymmetric};
use std::sync::Arc;

/// Cut-cell quadrature for every cut cell of a classification.
#[derive(Clone, Debug)]
pub struct CutGeometry {
    points_per_line: usize,
    rules: Vec<Option<CutCellQuadrature>>,
}

impl CutGeometry {
    /// Builds rules with `n` Gauss points per line on every cut cell.
    pub fn build(
        mesh: &BackgroundMesh,
        classification: &CutClassification,
        levelset: &LevelSet,
        n: usize,
    ) -> Result<Self> {
        let mut rules = vec![None; mesh.num_cells()];
        let (mut npts, mut min_w) = (0usize, f64::INFINITY);
        for &cell in classification.cut_cells() {
            let field = levelset.on_cell(mesh, cell);
            let q = cut_cell_quadrature(&field, mesh.cell_lower(cell), mesh.h(), n, cell)?;
            npts += q.volume.len();
            min_w = q.volume.iter().fold(min_w, |m, p| m.min(p.1));
            rules[cell] = Some(q);
        }
        log::debug!(
            "cut quadrature: {} cells, {npts} volume points, smallest weight {min_w:.3e}",
            classification.cut_cells().len()
        );
        Ok(Self {
            points_per_line: n,
            rules,
        })
    }

    /// Geometry with no cut cells.
    pub fn empty(mesh: &BackgroundMesh) -> Self {
        Self {
            points_per_line: 0,
            rules: vec![None; mesh.num_cells()],
        }
    }

    pub fn points_per_line(&self) -> usize {
        self.points_per_line
    }

    pub fn rule(&self, cell: usize) -> Option<&CutCellQuadrature> {
        self.rules[cell].as_ref()
    }
}

/// Quadrature for the mass matrix on uncut cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassRule {
    /// Collocated Gauss–Lobatto points: diagonal cell blocks.
    Lobatto,
    /// Exact Gauss integration.
    Gauss,
}

/// Sparsity pattern coupling all DOFs of a cell, and all DOFs of the two
/// cells of each stabilized face.
pub fn dof_pattern(space: &FESpace) -> Arc<Pattern> {
    let cls = space.classification();
    let mut cell_sets: Vec<Vec<usize>> = Vec::with_capacity(cls.active_cells().len());
    let mut index_of = vec![usize::MAX; space.mesh().num_cells()];
    for &cell in cls.active_cells() {
        let mut dofs = Vec::new();
        for &r in space.cell_raw_dofs(cell) {
            space.for_each_master(r, |g, _| dofs.push(g));
        }
        dofs.sort_unstable();
        dofs.dedup();
        index_of[cell] = cell_sets.len();
        cell_sets.push(dofs);
    }
    let mut face_sets = Vec::with_capacity(cls.stabilized_faces().len());
    for f in cls.stabilized_faces() {
        let mut dofs = cell_sets[index_of[f.minus]].clone();
        dofs.extend_from_slice(&cell_sets[index_of[f.plus]]);
        dofs.sort_unstable();
        dofs.dedup();
        face_sets.push(dofs);
    }
    Arc::new(Pattern::from_groups(
        space.num_dofs(),
        cell_sets.iter().chain(face_sets.iter()).map(|v| &v[..]),
    ))
}

/// Adds a dense local matrix over `raw` DOFs into `target`.
fn scatter(space: &FESpace, raw: &[usize], local: &[f64], target: &mut SparseSymmetric) {
    let n = raw.len();
    let mut rows: Vec<(usize, f64)> = Vec::with_capacity(4);
    let mut cols: Vec<(usize, f64)> = Vec::with_capacity(4);
    for a in 0..n {
        rows.clear();
        space.for_each_master(raw[a], |g, w| rows.push((g, w)));
        for b in 0..n {
            let v = local[a * n + b];
            if v == 0.0 {
                continue;
            }
            cols.clear();
            space.for_each_master(raw[b], |g, w| cols.push((g, w)));
            for &(i, wi) in &rows {
                for &(j, wj) in &cols {
                    target.add(i, j, wi * wj * v);
                }
            }
        }
    }
}

fn scatter_vector(space: &FESpace, raw: &[usize], local: &[f64], target: &mut [f64]) {
    for (a, &r) in raw.iter().enumerate() {
        if local[a] != 0.0 {
            space.for_each_master(r, |g, w| target[g] += w * local[a]);
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Weighted ghost penalty
/// `Σ_F Σ_k w_k h^{2k+1} / ((2k+1)(k!)²) ⟨[∂ₙᵏu], [∂ₙᵏv]⟩_F`, with `k` up to
/// the lower order of the two cells.
pub fn assemble_ghost_penalty(
    space: &FESpace,
    faces: &[StabilizedFace],
    weights: &[f64],
    pattern: Arc<Pattern>,
) -> Result<SparseSymmetric> {
    let mut j = SparseSymmetric::zeros(pattern);
    let cls = space.classification();
    let h = space.mesh().h();
    let rule = face_rule(space.order(), h);
    for face in faces {
        if !(cls.is_active(face.minus) && cls.is_active(face.plus))
            || !(cls.is_cut(face.minus) || cls.is_cut(face.plus))
        {
            return Err(Error::InvalidArgument(format!(
                "face {face:?} is not a stabilized face"
            )));
        }
        let kmax = space.cell_order(face.minus).min(space.cell_order(face.plus));
        if weights.len() < kmax {
            return Err(Error::InvalidArgument(format!(
                "{} weights given, {kmax} needed",
                weights.len()
            )));
        }
        let raw_m = space.cell_raw_dofs(face.minus);
        let raw_p = space.cell_raw_dofs(face.plus);
        let (nm, np) = (raw_m.len(), raw_p.len());
        let n = nm + np;
        let mut local = vec![0.0; n * n];
        let mut jump = vec![0.0; n];
        for (&t, &wq) in rule.points.iter().zip(&rule.weights) {
            let g = space.face_geometry(face, t)?;
            let sm = space.shape(face.minus, g.minus_ref, kmax)?;
            let sp = space.shape(face.plus, g.plus_ref, kmax)?;
            for k in 1..=kmax {
                let c = weights[k - 1] * h.powi(2 * k as i32 + 1)
                    / ((2 * k + 1) as f64 * factorial(k).powi(2));
                for (l, v) in sm.pure[face.axis][k - 1].iter().enumerate() {
                    jump[l] = -v;
                }
                for (l, v) in sp.pure[face.axis][k - 1].iter().enumerate() {
                    jump[nm + l] = *v;
                }
                let s = c * wq;
                for a in 0..n {
                    let ja = s * jump[a];
                    for b in 0..n {
                        local[a * n + b] += ja * jump[b];
                    }
                }
            }
        }
        let raw: Vec<usize> = raw_m.iter().chain(raw_p).copied().collect();
        scatter(space, &raw, &local, &mut j);
    }
    Ok(j)
}

/// Reference data for uncut cells of one order.
struct UncutCell {
    /// Stiffness block, independent of `h` in two dimensions.
    stiffness: Vec<f64>,
    /// Mass block on the reference square `[-1, 1]²`.
    mass: Vec<f64>,
}

impl UncutCell {
    fn new(basis: &TensorBasis, mass_rule: MassRule) -> Self {
        let q = basis.order();
        let n = basis.num_functions();
        let rule = gauss_legendre(q + 1);
        let mut stiffness = vec![0.0; n * n];
        let mut mass = vec![0.0; n * n];
        let mut vals = vec![0.0; n];
        let mut grads = vec![[0.0; 2]; n];
        for (&y, &wy) in rule.points.iter().zip(&rule.weights) {
            for (&x, &wx) in rule.points.iter().zip(&rule.weights) {
                basis.values_gradients_into([x, y], 2.0, &mut vals, &mut grads);
                let w = wx * wy;
                for a in 0..n {
                    for b in 0..n {
                        stiffness[a * n + b] +=
                            w * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                        if mass_rule == MassRule::Gauss {
                            mass[a * n + b] += w * vals[a] * vals[b];
                        }
                    }
                }
            }
        }
        if mass_rule == MassRule::Lobatto {
            let gl = gauss_lobatto(q);
            for b in 0..=q {
                for a in 0..=q {
                    let l = a + (q + 1) * b;
                    mass[l * n + l] = gl.weights[a] * gl.weights[b];
                }
            }
        }
        Self { stiffness, mass }
    }
}

fn uncut_data(space: &FESpace, mass_rule: MassRule) -> Vec<UncutCell> {
    (1..=space.order())
        .map(|q| UncutCell::new(space.basis(q), mass_rule))
        .collect()
}

fn shape_at(space: &FESpace, cell: usize, x: Point, out: &mut ShapeValues) {
    let mesh = space.mesh();
    let xi = crate::basis::lagrange::to_reference(x, mesh.cell_lower(cell), mesh.h());
    space.cell_basis(cell).evaluate_into(xi, mesh.h(), 1, out);
}

/// `(φ_i, φ_j)` over `Ω`: cut rules on cut cells, `mass_rule` elsewhere.
pub fn assemble_cut_mass(
    space: &FESpace,
    geometry: &CutGeometry,
    mass_rule: MassRule,
    pattern: Arc<Pattern>,
) -> SparseSymmetric {
    let mut m = SparseSymmetric::zeros(pattern);
    let h = space.mesh().h();
    let uncut = uncut_data(space, mass_rule);
    let mut sv = ShapeValues::default();
    for &cell in space.classification().active_cells() {
        let raw = space.cell_raw_dofs(cell);
        let n = raw.len();
        let local: Vec<f64> = match geometry.rule(cell) {
            None => {
                let scale = 0.25 * h * h;
                uncut[space.cell_order(cell) - 1].mass.iter().map(|v| v * scale).collect()
            }
            Some(rule) => {
                let mut local = vec![0.0; n * n];
                for &(x, w) in &rule.volume {
                    shape_at(space, cell, x, &mut sv);
                    for a in 0..n {
                        let wa = w * sv.values[a];
                        for b in 0..n {
                            local[a * n + b] += wa * sv.values[b];
                        }
                    }
                }
                local
            }
        };
        scatter(space, raw, &local, &mut m);
    }
    m
}

/// `(u, φ_i)` over `Ω` with the quadrature of [`assemble_cut_mass`], so that
/// solving with the resulting mass reproduces functions already in the space.
pub fn assemble_mass_load(
    space: &FESpace,
    geometry: &CutGeometry,
    mass_rule: MassRule,
    u: &dyn Fn(Point) -> f64,
) -> Vec<f64> {
    let mesh = space.mesh();
    let h = mesh.h();
    let mut f = vec![0.0; space.num_dofs()];
    let mut sv = ShapeValues::default();
    let mut local = Vec::new();
    for &cell in space.classification().active_cells() {
        let raw = space.cell_raw_dofs(cell);
        local.clear();
        local.resize(raw.len(), 0.0);
        let points: Vec<(Point, f64)> = match geometry.rule(cell) {
            Some(rule) => rule.volume.clone(),
            None => {
                let q = space.cell_order(cell);
                let line = match mass_rule {
                    MassRule::Lobatto => gauss_lobatto(q),
                    MassRule::Gauss => gauss_legendre(q + 1),
                };
                let lower = mesh.cell_lower(cell);
                let mut pts = Vec::with_capacity(line.len() * line.len());
                for (&yb, &wb) in line.points.iter().zip(&line.weights) {
                    for (&xa, &wa) in line.points.iter().zip(&line.weights) {
                        let x = [lower[0] + 0.5 * h * (xa + 1.0), lower[1] + 0.5 * h * (yb + 1.0)];
                        pts.push((x, 0.25 * h * h * wa * wb));
                    }
                }
                pts
            }
        };
        for (x, w) in points {
            shape_at(space, cell, x, &mut sv);
            let uv = w * u(x);
            for (l, out) in local.iter_mut().enumerate() {
                *out += uv * sv.values[l];
            }
        }
        scatter_vector(space, raw, &local, &mut f);
    }
    f
}

/// Faces of uncut active cells on the outer boundary of the background
/// mesh, as `(cell, axis, positive side)`. Cut cells touching the mesh
/// boundary are not supported and are skipped with a warning.
pub(crate) fn mesh_boundary_faces(space: &FESpace) -> Vec<(usize, usize, bool)> {
    let mesh = space.mesh();
    let cls = space.classification();
    let mut out = Vec::new();
    for &cell in cls.active_cells() {
        if cls.is_cut(cell) {
            if (0..2).any(|axis| {
                mesh.neighbor(cell, axis, false).is_none() || mesh.neighbor(cell, axis, true).is_none()
            }) {
                log::warn!("cut cell {cell} touches the mesh boundary; its side terms are skipped");
            }
            continue;
        }
        for axis in 0..2 {
            for positive in [false, true] {
                if mesh.neighbor(cell, axis, positive).is_none() {
                    out.push((cell, axis, positive));
                }
            }
        }
    }
    out
}

/// Points, weights and outward normal of an outer mesh face.
pub(crate) fn mesh_face_points(
    mesh: &BackgroundMesh,
    p: usize,
    cell: usize,
    axis: usize,
    positive: bool,
) -> (Vec<(Point, f64)>, [f64; 2]) {
    let h = mesh.h();
    let lower = mesh.cell_lower(cell);
    let rule = face_rule(p, h);
    let mut normal = [0.0; 2];
    normal[axis] = if positive { 1.0 } else { -1.0 };
    let fixed = lower[axis] + if positive { h } else { 0.0 };
    let pts = rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| {
            let mut x = [0.0; 2];
            x[axis] = fixed;
            x[1 - axis] = lower[1 - axis] + t;
            (x, w)
        })
        .collect();
    (pts, normal)
}

/// Adds Nitsche terms `-⟨∂ₙu, v⟩ - ⟨u, ∂ₙv⟩ + γ/h ⟨u, v⟩` at one point.
fn nitsche_point(local: &mut [f64], sv: &ShapeValues, w: f64, normal: [f64; 2], gamma_over_h: f64) {
    let n = sv.values.len();
    for a in 0..n {
        let va = sv.values[a];
        let dna = sv.grad[a][0] * normal[0] + sv.grad[a][1] * normal[1];
        for b in 0..n {
            let vb = sv.values[b];
            let dnb = sv.grad[b][0] * normal[0] + sv.grad[b][1] * normal[1];
            local[a * n + b] += w * (gamma_over_h * va * vb - dnb * va - vb * dna);
        }
    }
}

/// `(∇u, ∇v)_Ω` plus Nitsche terms on the Dirichlet parts of the boundary.
pub fn assemble_nitsche_stiffness(
    space: &FESpace,
    geometry: &CutGeometry,
    gamma_d: f64,
    boundary: BoundarySetup,
    pattern: Arc<Pattern>,
) -> SparseSymmetric {
    stiffness_without(space, geometry, gamma_d, boundary, pattern, &|_| false)
}

/// Reference stiffness block of an uncut cell of order `q`; it does not
/// depend on `h` in two dimensions.
pub(crate) fn uncut_stiffness(space: &FESpace, q: usize) -> Vec<f64> {
    UncutCell::new(space.basis(q), MassRule::Lobatto).stiffness
}

/// As [`assemble_nitsche_stiffness`], leaving out the volume term of every
/// cell for which `skip` holds.
pub(crate) fn stiffness_without(
    space: &FESpace,
    geometry: &CutGeometry,
    gamma_d: f64,
    boundary: BoundarySetup,
    pattern: Arc<Pattern>,
    skip: &dyn Fn(usize) -> bool,
) -> SparseSymmetric {
    let mut a = SparseSymmetric::zeros(pattern);
    let h = space.mesh().h();
    let uncut = uncut_data(space, MassRule::Lobatto);
    let mut sv = ShapeValues::default();
    for &cell in space.classification().active_cells() {
        if skip(cell) {
            continue;
        }
        let raw = space.cell_raw_dofs(cell);
        let n = raw.len();
        let local: Vec<f64> = match geometry.rule(cell) {
            None => uncut[space.cell_order(cell) - 1].stiffness.clone(),
            Some(rule) => {
                let mut local = vec![0.0; n * n];
                for &(x, w) in &rule.volume {
                    shape_at(space, cell, x, &mut sv);
                    for i in 0..n {
                        let gi = sv.grad[i];
                        for j in 0..n {
                            let gj = sv.grad[j];
                            local[i * n + j] += w * (gi[0] * gj[0] + gi[1] * gj[1]);
                        }
                    }
                }
                if boundary.immersed == BoundaryKind::Dirichlet {
                    for s in &rule.surface {
                        shape_at(space, cell, s.point, &mut sv);
                        nitsche_point(&mut local, &sv, s.weight, s.normal, gamma_d / h);
                    }
                }
                local
            }
        };
        scatter(space, raw, &local, &mut a);
    }
    if boundary.mesh_sides == BoundaryKind::Dirichlet {
        for (cell, axis, positive) in mesh_boundary_faces(space) {
            let raw = space.cell_raw_dofs(cell);
            let n = raw.len();
            let mut local = vec![0.0; n * n];
            let (pts, normal) = mesh_face_points(space.mesh(), space.order(), cell, axis, positive);
            for (x, w) in pts {
                shape_at(space, cell, x, &mut sv);
                nitsche_point(&mut local, &sv, w, normal, gamma_d / h);
            }
            scatter(space, raw, &local, &mut a);
        }
    }
    a
}

/// `L(v) = (f, v)_Ω + ⟨g_D, γ/h v - ∂ₙv⟩_{Γ_D} + ⟨g_N, v⟩_{Γ_N}` at time `t`.
pub fn assemble_load(
    space: &FESpace,
    geometry: &CutGeometry,
    data: &ProblemData,
    gamma_d: f64,
    boundary: BoundarySetup,
    t: f64,
) -> Vec<f64> {
    let mut f = vec![0.0; space.num_dofs()];
    if data.is_homogeneous() {
        return f;
    }
    let mesh = space.mesh();
    let h = mesh.h();
    let mut sv = ShapeValues::default();
    let mut local = Vec::new();
    let boundary_term = |local: &mut Vec<f64>, sv: &ShapeValues, x: Point, w: f64, normal: [f64; 2], kind: BoundaryKind| {
        match kind {
            BoundaryKind::Dirichlet => {
                if let Some(g) = &data.dirichlet {
                    let gv = g(x, t);
                    for (l, out) in local.iter_mut().enumerate() {
                        let dn = sv.grad[l][0] * normal[0] + sv.grad[l][1] * normal[1];
                        *out += w * gv * (gamma_d / h * sv.values[l] - dn);
                    }
                }
            }
            BoundaryKind::Neumann => {
                if let Some(g) = &data.neumann {
                    let gv = g(x, t);
                    for (l, out) in local.iter_mut().enumerate() {
                        *out += w * gv * sv.values[l];
                    }
                }
            }
        }
    };
    for &cell in space.classification().active_cells() {
        let raw = space.cell_raw_dofs(cell);
        local.clear();
        local.resize(raw.len(), 0.0);
        match geometry.rule(cell) {
            None => {
                if let Some(src) = &data.source {
                    let q = space.cell_order(cell);
                    for (x, w) in crate::geometry::tensor_gauss_rule(mesh.cell_lower(cell), h, q + 1) {
                        shape_at(space, cell, x, &mut sv);
                        let fv = src(x, t);
                        for (l, out) in local.iter_mut().enumerate() {
                            *out += w * fv * sv.values[l];
                        }
                    }
                }
            }
            Some(rule) => {
                if let Some(src) = &data.source {
                    for &(x, w) in &rule.volume {
                        shape_at(space, cell, x, &mut sv);
                        let fv = src(x, t);
                        for (l, out) in local.iter_mut().enumerate() {
                            *out += w * fv * sv.values[l];
                        }
                    }
                }
                for s in &rule.surface {
                    shape_at(space, cell, s.point, &mut sv);
                    boundary_term(&mut local, &sv, s.point, s.weight, s.normal, boundary.immersed);
                }
            }
        }
        scatter_vector(space, raw, &local, &mut f);
    }
    let side_data = match boundary.mesh_sides {
        BoundaryKind::Dirichlet => data.dirichlet.is_some(),
        BoundaryKind::Neumann => data.neumann.is_some(),
    };
    if side_data {
        for (cell, axis, positive) in mesh_boundary_faces(space) {
            let raw = space.cell_raw_dofs(cell);
            local.clear();
            local.resize(raw.len(), 0.0);
            let (pts, normal) = mesh_face_points(mesh, space.order(), cell, axis, positive);
            for (x, w) in pts {
                shape_at(space, cell, x, &mut sv);
                boundary_term(&mut local, &sv, x, w, normal, boundary.mesh_sides);
            }
            scatter_vector(space, raw, &local, &mut f);
        }
    }
    f
}
