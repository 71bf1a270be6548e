//! Continuous `Q_p` spaces on the active cells, with an optional order
//! reduction next to the boundary.
//!
//! Raw degrees of freedom are numbered vertices first, then face interiors,
//! then cell interiors, each group lexicographically. On a face shared by a
//! cell of order `p - 1` and a cell of order `p`, the high side carries its
//! own face-interior DOFs; these are constrained to interpolate the trace of
//! the low side. The free DOFs are the unconstrained raw DOFs, in order.

use super::lagrange::{to_reference, LagrangeBasis1d, ShapeValues, TensorBasis};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{BackgroundMesh, CellTag, CutClassification, StabilizedFace};

/// Which polynomial space is built on the active cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceVariant {
    /// Order `p` everywhere.
    Full,
    /// Order `p - 1` on cut cells and their face neighbors.
    Reduced,
}

impl std::str::FromStr for SpaceVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(SpaceVariant::Full),
            "reduced" => Ok(SpaceVariant::Reduced),
            _ => Err(Error::Parse(format!("unknown space variant '{s}'"))),
        }
    }
}

/// Linear dependencies of constrained raw DOFs on free DOFs.
#[derive(Clone, Debug, Default)]
pub struct ConstraintSet {
    /// `(constrained raw DOF, [(master raw DOF, coefficient)])`, sorted by
    /// constrained DOF. Masters are never constrained.
    rows: Vec<(usize, Vec<(usize, f64)>)>,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(usize, Vec<(usize, f64)>)] {
        &self.rows
    }

    /// Overwrites constrained entries of a raw vector with the values implied
    /// by their masters.
    pub fn apply(&self, raw: &mut [f64]) {
        for (c, masters) in &self.rows {
            raw[*c] = masters.iter().map(|(m, w)| w * raw[*m]).sum();
        }
    }
}

/// Global numbering of a continuous space over the active cells.
#[derive(Clone, Debug)]
pub struct FESpace {
    mesh: BackgroundMesh,
    classification: CutClassification,
    p: usize,
    variant: SpaceVariant,
    bases: Vec<TensorBasis>,
    /// Order per mesh cell (0 for inactive cells).
    order: Vec<usize>,
    /// Raw DOFs of every active cell, concatenated in active-cell order.
    cell_dofs: Vec<usize>,
    cell_offset: Vec<usize>,
    raw_coords: Vec<Point>,
    free_of_raw: Vec<Option<usize>>,
    raw_of_free: Vec<usize>,
    constraints: ConstraintSet,
    /// Masters in free numbering, per raw DOF (empty for free DOFs).
    expansion: Vec<Vec<(usize, f64)>>,
}

#[derive(Clone, Copy, Debug, Default)]
struct FaceDofs {
    low_start: usize,
    low_count: usize,
    high_start: usize,
    high_count: usize,
}

impl FESpace {
    pub fn new(
        mesh: &BackgroundMesh,
        classification: &CutClassification,
        p: usize,
        variant: SpaceVariant,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("order must be at least 1".into()));
        }
        if variant == SpaceVariant::Reduced && p < 2 {
            return Err(Error::InvalidArgument(
                "the reduced space needs p >= 2".into(),
            ));
        }
        let ncell = mesh.num_cells();
        let mut order = vec![0usize; ncell];
        for &cell in classification.active_cells() {
            order[cell] = p;
            if variant == SpaceVariant::Reduced {
                let near_cut = classification.is_cut(cell)
                    || (0..2).any(|axis| {
                        [true, false].iter().any(|&pos| {
                            mesh.neighbor(cell, axis, pos)
                                .is_some_and(|n| classification.tag(n) == CellTag::Cut)
                        })
                    });
                if near_cut {
                    order[cell] = p - 1;
                }
            }
        }

        let [nx, ny] = mesh.n_cells();
        let h = mesh.h();
        let origin = mesh.origin();
        let mut raw_coords: Vec<Point> = Vec::new();

        // vertices
        let nvx = nx + 1;
        let mut vertex_dof = vec![usize::MAX; nvx * (ny + 1)];
        for j in 0..=ny {
            for i in 0..=nx {
                let touches = [(0, 0), (1, 0), (0, 1), (1, 1)].iter().any(|&(di, dj)| {
                    i >= di
                        && j >= dj
                        && i - di < nx
                        && j - dj < ny
                        && order[mesh.cell_index(i - di, j - dj)] > 0
                });
                if touches {
                    vertex_dof[i + j * nvx] = raw_coords.len();
                    raw_coords.push([origin[0] + i as f64 * h, origin[1] + j as f64 * h]);
                }
            }
        }

        // faces: axis 0 (normal x) indexed i + j (nx + 1); axis 1 indexed i + j nx
        let face_index = |axis: usize, i: usize, j: usize| {
            if axis == 0 {
                i + j * (nx + 1)
            } else {
                (nx + 1) * ny + i + j * nx
            }
        };
        let mut faces = vec![FaceDofs::default(); mesh.num_faces()];
        let mut mixed = Vec::new();
        for axis in 0..2 {
            let (fi, fj) = if axis == 0 { (nx + 1, ny) } else { (nx, ny + 1) };
            for j in 0..fj {
                for i in 0..fi {
                    let (c0, c1) = if axis == 0 {
                        (
                            (i > 0).then(|| mesh.cell_index(i - 1, j)),
                            (i < nx).then(|| mesh.cell_index(i, j)),
                        )
                    } else {
                        (
                            (j > 0).then(|| mesh.cell_index(i, j - 1)),
                            (j < ny).then(|| mesh.cell_index(i, j)),
                        )
                    };
                    let o0 = c0.map_or(0, |c| order[c]);
                    let o1 = c1.map_or(0, |c| order[c]);
                    if o0 == 0 && o1 == 0 {
                        continue;
                    }
                    let lo = if o0 == 0 || o1 == 0 { o0.max(o1) } else { o0.min(o1) };
                    let hi = o0.max(o1);
                    let f = face_index(axis, i, j);
                    let start = [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
                    let line = LagrangeBasis1d::new(lo);
                    faces[f].low_start = raw_coords.len();
                    faces[f].low_count = lo - 1;
                    for m in 1..lo {
                        raw_coords.push(face_point(start, axis, h, line.nodes()[m]));
                    }
                    if lo != hi {
                        let line = LagrangeBasis1d::new(hi);
                        faces[f].high_start = raw_coords.len();
                        faces[f].high_count = hi - 1;
                        for m in 1..hi {
                            raw_coords.push(face_point(start, axis, h, line.nodes()[m]));
                        }
                        mixed.push((f, axis, i, j, lo, hi));
                    }
                }
            }
        }

        // cell interiors and local maps
        let mut cell_dofs = Vec::new();
        let mut cell_offset = Vec::with_capacity(classification.active_cells().len() + 1);
        cell_offset.push(0);
        for &cell in classification.active_cells() {
            let q = order[cell];
            let [i, j] = mesh.cell_coords(cell);
            let lower = mesh.cell_lower(cell);
            let nodes = LagrangeBasis1d::new(q).nodes().to_vec();
            let interior_start = raw_coords.len();
            for b in 1..q {
                for a in 1..q {
                    raw_coords.push([
                        lower[0] + 0.5 * h * (nodes[a] + 1.0),
                        lower[1] + 0.5 * h * (nodes[b] + 1.0),
                    ]);
                }
            }
            for b in 0..=q {
                for a in 0..=q {
                    let on_x = a == 0 || a == q;
                    let on_y = b == 0 || b == q;
                    let dof = if on_x && on_y {
                        vertex_dof[(i + a / q) + (j + b / q) * nvx]
                    } else if on_x {
                        let fd = &faces[face_index(0, i + a / q, j)];
                        face_slot(fd, q, b - 1)
                    } else if on_y {
                        let fd = &faces[face_index(1, i, j + b / q)];
                        face_slot(fd, q, a - 1)
                    } else {
                        interior_start + (a - 1) + (q - 1) * (b - 1)
                    };
                    debug_assert!(dof != usize::MAX);
                    cell_dofs.push(dof);
                }
            }
            cell_offset.push(cell_dofs.len());
        }

        // constraints on the high side of mixed faces
        let mut rows = Vec::new();
        for &(f, axis, i, j, lo, hi) in &mixed {
            let fd = faces[f];
            let (v0, v1) = if axis == 0 {
                (vertex_dof[i + j * nvx], vertex_dof[i + (j + 1) * nvx])
            } else {
                (vertex_dof[i + j * nvx], vertex_dof[(i + 1) + j * nvx])
            };
            let low_line = LagrangeBasis1d::new(lo);
            let high_line = LagrangeBasis1d::new(hi);
            let mut vals = vec![0.0; lo + 1];
            for m in 1..hi {
                low_line.values(high_line.nodes()[m], &mut vals);
                let mut masters = Vec::with_capacity(lo + 1);
                for (l, &w) in vals.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let master = if l == 0 {
                        v0
                    } else if l == lo {
                        v1
                    } else {
                        fd.low_start + l - 1
                    };
                    masters.push((master, w));
                }
                rows.push((fd.high_start + m - 1, masters));
            }
        }
        rows.sort_by_key(|r| r.0);

        let nraw = raw_coords.len();
        let mut constrained = vec![false; nraw];
        for (c, _) in &rows {
            constrained[*c] = true;
        }
        let mut free_of_raw = vec![None; nraw];
        let mut raw_of_free = Vec::with_capacity(nraw - rows.len());
        for r in 0..nraw {
            if !constrained[r] {
                free_of_raw[r] = Some(raw_of_free.len());
                raw_of_free.push(r);
            }
        }
        let mut expansion = vec![Vec::new(); nraw];
        for (c, masters) in &rows {
            expansion[*c] = masters
                .iter()
                .map(|(m, w)| (free_of_raw[*m].expect("masters are free"), *w))
                .collect();
        }

        let mut bases = Vec::new();
        for q in 1..=p {
            bases.push(TensorBasis::new(q));
        }

        Ok(Self {
            mesh: mesh.clone(),
            classification: classification.clone(),
            p,
            variant,
            bases,
            order,
            cell_dofs,
            cell_offset,
            raw_coords,
            free_of_raw,
            raw_of_free,
            constraints: ConstraintSet { rows },
            expansion,
        })
    }

    pub fn mesh(&self) -> &BackgroundMesh {
        &self.mesh
    }

    pub fn classification(&self) -> &CutClassification {
        &self.classification
    }

    /// Nominal order `p`.
    pub fn order(&self) -> usize {
        self.p
    }

    pub fn variant(&self) -> SpaceVariant {
        self.variant
    }

    /// Polynomial order on `cell` (0 if inactive).
    pub fn cell_order(&self, cell: usize) -> usize {
        self.order[cell]
    }

    /// Lowest order among cut cells; the order seen by the boundary.
    pub fn boundary_order(&self) -> usize {
        match self.variant {
            SpaceVariant::Full => self.p,
            SpaceVariant::Reduced => self.p - 1,
        }
    }

    pub fn basis(&self, order: usize) -> &TensorBasis {
        &self.bases[order - 1]
    }

    pub fn cell_basis(&self, cell: usize) -> &TensorBasis {
        self.basis(self.order[cell])
    }

    /// Number of free DOFs: the dimension of the space.
    pub fn num_dofs(&self) -> usize {
        self.raw_of_free.len()
    }

    pub fn num_raw_dofs(&self) -> usize {
        self.raw_coords.len()
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    /// Raw DOFs of an active cell in local tensor order.
    pub fn cell_raw_dofs(&self, cell: usize) -> &[usize] {
        let k = self
            .classification
            .active_position(cell)
            .expect("cell must be active");
        &self.cell_dofs[self.cell_offset[k]..self.cell_offset[k + 1]]
    }

    pub fn free_index(&self, raw: usize) -> Option<usize> {
        self.free_of_raw[raw]
    }

    /// Free DOFs of a cell, or `None` if any local node is constrained.
    pub fn cell_free_dofs(&self, cell: usize) -> Option<Vec<usize>> {
        self.cell_raw_dofs(cell)
            .iter()
            .map(|&r| self.free_of_raw[r])
            .collect()
    }

    /// Calls `f(free DOF, coefficient)` for every free DOF that local node
    /// `raw` depends on.
    #[inline]
    pub fn for_each_master(&self, raw: usize, mut f: impl FnMut(usize, f64)) {
        match self.free_of_raw[raw] {
            Some(g) => f(g, 1.0),
            None => {
                for &(g, w) in &self.expansion[raw] {
                    f(g, w);
                }
            }
        }
    }

    pub fn raw_coordinates(&self) -> &[Point] {
        &self.raw_coords
    }

    /// Node location of every free DOF.
    pub fn dof_coordinates(&self) -> Vec<Point> {
        self.raw_of_free.iter().map(|&r| self.raw_coords[r]).collect()
    }

    /// Raw vector from free coefficients, constraints applied.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut raw = vec![0.0; self.num_raw_dofs()];
        for (f, &r) in self.raw_of_free.iter().enumerate() {
            raw[r] = free[f];
        }
        self.constraints.apply(&mut raw);
        raw
    }

    /// Free coefficients of the nodal interpolant of `u`.
    pub fn interpolate(&self, u: impl Fn(Point) -> f64) -> Vec<f64> {
        self.raw_of_free.iter().map(|&r| u(self.raw_coords[r])).collect()
    }

    /// Local coefficients of `cell` from a raw vector.
    pub fn local_coefficients(&self, raw: &[f64], cell: usize) -> Vec<f64> {
        self.cell_raw_dofs(cell).iter().map(|&r| raw[r]).collect()
    }

    /// Value and gradient of the raw-vector function at `x` using the
    /// polynomial of `cell`.
    pub fn evaluate_on_cell(&self, raw: &[f64], cell: usize, x: Point) -> (f64, [f64; 2]) {
        let basis = self.cell_basis(cell);
        let n = basis.num_functions();
        let mut v = [0.0; 64];
        let mut g = [[0.0; 2]; 64];
        let h = self.mesh.h();
        basis.values_gradients_into(
            to_reference(x, self.mesh.cell_lower(cell), h),
            h,
            &mut v[..n],
            &mut g[..n],
        );
        let mut value = 0.0;
        let mut grad = [0.0; 2];
        for (l, &r) in self.cell_raw_dofs(cell).iter().enumerate() {
            value += v[l] * raw[r];
            grad[0] += g[l][0] * raw[r];
            grad[1] += g[l][1] * raw[r];
        }
        (value, grad)
    }

    /// Value of the raw-vector function at `x`, or `None` outside the active
    /// cells.
    pub fn evaluate(&self, raw: &[f64], x: Point) -> Option<(f64, [f64; 2])> {
        let cell = self.mesh.locate(x)?;
        if self.order[cell] == 0 {
            return None;
        }
        Some(self.evaluate_on_cell(raw, cell, x))
    }

    /// Jump `∂ₙᵏv(plus) - ∂ₙᵏv(minus)` across an interior face at the point
    /// `t ∈ [0, h]` along it, with `n` the unit vector along the face axis.
    pub fn jump_of_normal_derivative(
        &self,
        face: &StabilizedFace,
        k: usize,
        raw: &[f64],
        t: f64,
    ) -> Result<f64> {
        let FaceGeometry { minus_ref, plus_ref } = self.face_geometry(face, t)?;
        let kmax = self.order[face.minus].min(self.order[face.plus]);
        if k > kmax {
            return Err(Error::InvalidArgument(format!(
                "derivative order {k} exceeds the face order {kmax}"
            )));
        }
        let h = self.mesh.h();
        let side = |cell: usize, xi: [f64; 2]| -> Result<f64> {
            let sv = self.cell_basis(cell).evaluate(xi, h, k)?;
            let row = if k == 0 { &sv.values } else { &sv.pure[face.axis][k - 1] };
            Ok(self
                .cell_raw_dofs(cell)
                .iter()
                .zip(row)
                .map(|(&r, &d)| raw[r] * d)
                .sum())
        };
        Ok(side(face.plus, plus_ref)? - side(face.minus, minus_ref)?)
    }

    /// Reference coordinates on both cells of the face point at `t`.
    pub fn face_geometry(&self, face: &StabilizedFace, t: f64) -> Result<FaceGeometry> {
        if self.order[face.minus] == 0 || self.order[face.plus] == 0 {
            return Err(Error::InvalidArgument(
                "face is on the boundary of the active region".into(),
            ));
        }
        if self.mesh.neighbor(face.minus, face.axis, true) != Some(face.plus) {
            return Err(Error::InvalidArgument("cells do not share the face".into()));
        }
        let s = 2.0 * t / self.mesh.h() - 1.0;
        let (minus_ref, plus_ref) = if face.axis == 0 {
            ([1.0, s], [-1.0, s])
        } else {
            ([s, 1.0], [s, -1.0])
        };
        Ok(FaceGeometry { minus_ref, plus_ref })
    }

    /// Shape data of `cell` at reference point `xi` up to `max_order`
    /// derivatives.
    pub fn shape(&self, cell: usize, xi: [f64; 2], max_order: usize) -> Result<ShapeValues> {
        self.cell_basis(cell).evaluate(xi, self.mesh.h(), max_order)
    }
}

/// Where a face point sits on the reference squares of its two cells.
#[derive(Clone, Copy, Debug)]
pub struct FaceGeometry {
    pub minus_ref: [f64; 2],
    pub plus_ref: [f64; 2],
}

fn face_point(start: Point, axis: usize, h: f64, node: f64) -> Point {
    let s = 0.5 * h * (node + 1.0);
    if axis == 0 {
        [start[0], start[1] + s]
    } else {
        [start[0] + s, start[1]]
    }
}

/// Raw DOF of interior face node `m` seen from a cell of order `q`.
fn face_slot(fd: &FaceDofs, q: usize, m: usize) -> usize {
    if fd.high_count > 0 && q == fd.high_count + 1 {
        fd.high_start + m
    } else {
        debug_assert_eq!(fd.low_count, q - 1);
        fd.low_start + m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellTag;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_active(n: usize, h: f64) -> (BackgroundMesh, CutClassification) {
        let mesh = BackgroundMesh::new([0.0, 0.0], [n as f64 * h, n as f64 * h], h).unwrap();
        let cls = CutClassification::from_tags(&mesh, vec![CellTag::Inside; n * n]).unwrap();
        (mesh, cls)
    }

    #[test]
    fn dof_counts_on_two_by_two() {
        let (mesh, cls) = all_active(2, 0.5);
        assert_eq!(FESpace::new(&mesh, &cls, 1, SpaceVariant::Full).unwrap().num_dofs(), 9);
        assert_eq!(FESpace::new(&mesh, &cls, 2, SpaceVariant::Full).unwrap().num_dofs(), 25);
        assert!(FESpace::new(&mesh, &cls, 1, SpaceVariant::Reduced).is_err());
    }

    #[test]
    fn interpolation_reproduces_global_polynomials() {
        let (mesh, cls) = all_active(3, 0.4);
        let u = |x: Point| 1.0 + x[0] * x[0] * x[1] - 2.0 * x[1] * x[1] * x[0];
        let space = FESpace::new(&mesh, &cls, 2, SpaceVariant::Full).unwrap();
        let raw = space.expand(&space.interpolate(u));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = [rng.gen_range(0.0..1.2), rng.gen_range(0.0..1.2)];
            let (v, _) = space.evaluate(&raw, x).unwrap();
            assert!((v - u(x)).abs() < 1e-12);
        }
    }

    fn reduced_setup() -> (BackgroundMesh, CutClassification) {
        let mesh = BackgroundMesh::new([0.0, 0.0], [5.0, 5.0], 1.0).unwrap();
        let mut tags = vec![CellTag::Inside; 25];
        tags[12] = CellTag::Cut;
        let cls = CutClassification::from_tags(&mesh, tags).unwrap();
        (mesh, cls)
    }

    #[test]
    fn reduced_orders_around_a_cut_cell() {
        let (mesh, cls) = reduced_setup();
        let space = FESpace::new(&mesh, &cls, 2, SpaceVariant::Reduced).unwrap();
        for cell in 0..25 {
            let expect = if [12, 7, 11, 13, 17].contains(&cell) { 1 } else { 2 };
            assert_eq!(space.cell_order(cell), expect, "cell {cell}");
        }
        // 12 mixed faces, one constrained midpoint each
        assert_eq!(space.constraints().len(), 12);
    }

    #[test]
    fn reduced_functions_are_continuous_across_mixed_faces() {
        let (mesh, cls) = reduced_setup();
        for p in [2, 3] {
            let space = FESpace::new(&mesh, &cls, p, SpaceVariant::Reduced).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
            let free: Vec<f64> = (0..space.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let raw = space.expand(&free);
            for minus in 0..25 {
                for axis in 0..2 {
                    let Some(plus) = mesh.neighbor(minus, axis, true) else { continue };
                    if space.cell_order(minus) == space.cell_order(plus) {
                        continue;
                    }
                    let face = StabilizedFace { minus, plus, axis };
                    for _ in 0..20 {
                        let t = rng.gen_range(0.0..1.0);
                        let j = space.jump_of_normal_derivative(&face, 0, &raw, t).unwrap();
                        assert!(j.abs() < 1e-12, "p={p} face {face:?}: {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn constraints_are_idempotent_with_unit_row_sums() {
        let (mesh, cls) = reduced_setup();
        let space = FESpace::new(&mesh, &cls, 3, SpaceVariant::Reduced).unwrap();
        for (_, masters) in space.constraints().rows() {
            let s: f64 = masters.iter().map(|m| m.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut raw: Vec<f64> = (0..space.num_raw_dofs()).map(|_| rng.gen()).collect();
        space.constraints().apply(&mut raw);
        let once = raw.clone();
        space.constraints().apply(&mut raw);
        assert_eq!(once, raw);
    }

    #[test]
    fn normal_derivative_jump_of_a_kink() {
        // v = x on the left cell, 0 on the right; face at x = 0
        let mesh = BackgroundMesh::new([-1.0, 0.0], [2.0, 1.0], 1.0).unwrap();
        let cls = CutClassification::from_tags(&mesh, vec![CellTag::Cut, CellTag::Cut]).unwrap();
        let space = FESpace::new(&mesh, &cls, 1, SpaceVariant::Full).unwrap();
        let free = space.interpolate(|x| if x[0] < 0.0 { x[0] } else { 0.0 });
        let raw = space.expand(&free);
        let face = StabilizedFace { minus: 0, plus: 1, axis: 0 };
        for t in [0.0, 0.3, 1.0] {
            assert!(space.jump_of_normal_derivative(&face, 0, &raw, t).unwrap().abs() < 1e-15);
            let j = space.jump_of_normal_derivative(&face, 1, &raw, t).unwrap();
            assert!((j + 1.0).abs() < 1e-14);
        }
        // mirrored: 0 on the left, -x on the right gives the same jump
        let free = space.interpolate(|x| if x[0] < 0.0 { 0.0 } else { -x[0] });
        let raw = space.expand(&free);
        let j = space.jump_of_normal_derivative(&face, 1, &raw, 0.5).unwrap();
        assert!((j + 1.0).abs() < 1e-14);
        assert!(space.jump_of_normal_derivative(&face, 2, &raw, 0.5).is_err());
    }
}
