//! Cartesian background mesh and cell/face classification against a level set.
//!
//! Cells are squares of side `h`, numbered lexicographically with the x index
//! running fastest. A face between two cells is identified by its normal axis
//! and the cell on its axis-negative side.

use crate::error::{Error, Result};
use crate::geometry::{LevelSet, Point, ScalarField};

/// Axis-aligned square-cell grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundMesh {
    origin: Point,
    h: f64,
    n_cells: [usize; 2],
}

impl BackgroundMesh {
    /// Builds a mesh covering `[origin, origin + extent]` with cells of side `h`.
    ///
    /// Each extent component must be an integer multiple of `h` (relative
    /// tolerance 1e-9).
    pub fn new(origin: Point, extent: [f64; 2], h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidMesh(format!("cell size must be positive, got {h}")));
        }
        let mut n_cells = [0usize; 2];
        for axis in 0..2 {
            let e = extent[axis];
            if !(e > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "extent along axis {axis} must be positive, got {e}"
                )));
            }
            let n = (e / h).round();
            if n < 1.0 || (n * h - e).abs() > 1e-9 * e {
                return Err(Error::InvalidMesh(format!(
                    "extent {e} along axis {axis} is not an integer multiple of h = {h}"
                )));
            }
            n_cells[axis] = n as usize;
        }
        Ok(Self { origin, h, n_cells })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn n_cells(&self) -> [usize; 2] {
        self.n_cells
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.n_cells[0] as f64 * self.h, self.n_cells[1] as f64 * self.h]
    }

    pub fn num_cells(&self) -> usize {
        self.n_cells[0] * self.n_cells[1]
    }

    /// Total number of faces, boundary faces included.
    pub fn num_faces(&self) -> usize {
        let [nx, ny] = self.n_cells;
        (nx + 1) * ny + nx * (ny + 1)
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n_cells[0] && j < self.n_cells[1]);
        i + j * self.n_cells[0]
    }

    pub fn cell_coords(&self, cell: usize) -> [usize; 2] {
        [cell % self.n_cells[0], cell / self.n_cells[0]]
    }

    /// Lower-left corner of a cell.
    pub fn cell_lower(&self, cell: usize) -> Point {
        let [i, j] = self.cell_coords(cell);
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    pub fn cell_center(&self, cell: usize) -> Point {
        let lo = self.cell_lower(cell);
        [lo[0] + 0.5 * self.h, lo[1] + 0.5 * self.h]
    }

    /// Neighbor across the face with normal `axis`, on the positive (`true`)
    /// or negative side.
    pub fn neighbor(&self, cell: usize, axis: usize, positive: bool) -> Option<usize> {
        let mut c = self.cell_coords(cell);
        if positive {
            if c[axis] + 1 >= self.n_cells[axis] {
                return None;
            }
            c[axis] += 1;
        } else {
            if c[axis] == 0 {
                return None;
            }
            c[axis] -= 1;
        }
        Some(self.cell_index(c[0], c[1]))
    }

    /// Cell containing `x`; points on a shared face go to the upper cell.
    /// Points within `1e-10 h` outside the mesh are clamped onto it.
    pub fn locate(&self, x: Point) -> Option<usize> {
        let mut c = [0usize; 2];
        for axis in 0..2 {
            let s = (x[axis] - self.origin[axis]) / self.h;
            let n = self.n_cells[axis] as f64;
            if s < -1e-10 || s > n + 1e-10 {
                return None;
            }
            c[axis] = (s.floor().max(0.0) as usize).min(self.n_cells[axis] - 1);
        }
        Some(self.cell_index(c[0], c[1]))
    }
}

/// Position of a cell relative to the domain `{ψ < 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellTag {
    Inside,
    Cut,
    Outside,
}

/// Interior face between two active cells carrying the ghost penalty.
///
/// `plus` is the axis-positive neighbor of `minus`; jumps are taken as
/// `v|plus - v|minus` and the face normal is the unit vector along `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct StabilizedFace {
    pub minus: usize,
    pub plus: usize,
    pub axis: usize,
}

/// Result of classifying every mesh cell against a level set.
#[derive(Clone, Debug)]
pub struct CutClassification {
    tags: Vec<CellTag>,
    active: Vec<usize>,
    cut: Vec<usize>,
    active_position: Vec<Option<usize>>,
    faces: Vec<StabilizedFace>,
    /// Cells on which every sample of ψ was exactly zero.
    pub degenerate: Vec<usize>,
}

impl CutClassification {
    /// Builds the derived sets from explicit per-cell tags.
    pub fn from_tags(mesh: &BackgroundMesh, tags: Vec<CellTag>) -> Result<Self> {
        if tags.len() != mesh.num_cells() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_cells(),
                found: tags.len(),
            });
        }
        let mut active = Vec::new();
        let mut cut = Vec::new();
        let mut active_position = vec![None; tags.len()];
        for (c, tag) in tags.iter().enumerate() {
            if *tag != CellTag::Outside {
                active_position[c] = Some(active.len());
                active.push(c);
            }
            if *tag == CellTag::Cut {
                cut.push(c);
            }
        }
        let faces = stabilized_faces(mesh, &tags);
        Ok(Self {
            tags,
            active,
            cut,
            active_position,
            faces,
            degenerate: Vec::new(),
        })
    }

    pub fn tags(&self) -> &[CellTag] {
        &self.tags
    }

    pub fn tag(&self, cell: usize) -> CellTag {
        self.tags[cell]
    }

    pub fn is_active(&self, cell: usize) -> bool {
        self.tags[cell] != CellTag::Outside
    }

    pub fn is_cut(&self, cell: usize) -> bool {
        self.tags[cell] == CellTag::Cut
    }

    /// Active cells (the set 𝒯) in increasing index order.
    pub fn active_cells(&self) -> &[usize] {
        &self.active
    }

    /// Cells intersected by the boundary (𝒯_Γ).
    pub fn cut_cells(&self) -> &[usize] {
        &self.cut
    }

    /// Position of `cell` within [`Self::active_cells`].
    pub fn active_position(&self, cell: usize) -> Option<usize> {
        self.active_position[cell]
    }

    /// The stabilized face set ℱ_Γ.
    pub fn stabilized_faces(&self) -> &[StabilizedFace] {
        &self.faces
    }
}

/// Classifies cells by the sign of ψ on an `(order + 3)²` tensor grid of
/// sample points per cell, corners included.
///
/// A cell is INSIDE when every sample is negative, OUTSIDE when no sample is
/// negative, and CUT otherwise. A cell where every sample is exactly zero is
/// tagged CUT and recorded in [`CutClassification::degenerate`].
pub fn classify_cells(
    mesh: &BackgroundMesh,
    levelset: &LevelSet,
    order: usize,
) -> Result<CutClassification> {
    let m = order + 3;
    let h = mesh.h();
    let mut tags = Vec::with_capacity(mesh.num_cells());
    let mut degenerate = Vec::new();
    for cell in 0..mesh.num_cells() {
        let field = levelset.on_cell(mesh, cell);
        let lo = mesh.cell_lower(cell);
        let (mut neg, mut pos, mut zero) = (0usize, 0usize, 0usize);
        for b in 0..m {
            for a in 0..m {
                let x = [
                    lo[0] + h * a as f64 / (m - 1) as f64,
                    lo[1] + h * b as f64 / (m - 1) as f64,
                ];
                let v = field.value(x);
                if v < 0.0 {
                    neg += 1;
                } else if v > 0.0 {
                    pos += 1;
                } else {
                    zero += 1;
                }
            }
        }
        let tag = if neg == m * m {
            CellTag::Inside
        } else if zero == m * m {
            log::warn!("level set vanishes identically on cell {cell}");
            degenerate.push(cell);
            CellTag::Cut
        } else if neg == 0 {
            CellTag::Outside
        } else {
            let _ = pos;
            CellTag::Cut
        };
        tags.push(tag);
    }
    let mut classification = CutClassification::from_tags(mesh, tags)?;
    classification.degenerate = degenerate;
    Ok(classification)
}

/// Faces `T₁ ∩ T₂` with both cells active and at least one of them cut.
///
/// Faces on the boundary of the active region never appear, and every
/// qualifying face appears exactly once, ordered by its minus cell.
pub fn stabilized_faces(mesh: &BackgroundMesh, tags: &[CellTag]) -> Vec<StabilizedFace> {
    let mut faces = Vec::new();
    for minus in 0..mesh.num_cells() {
        if tags[minus] == CellTag::Outside {
            continue;
        }
        for axis in 0..2 {
            if let Some(plus) = mesh.neighbor(minus, axis, true) {
                if tags[plus] == CellTag::Outside {
                    continue;
                }
                if tags[minus] == CellTag::Cut || tags[plus] == CellTag::Cut {
                    faces.push(StabilizedFace { minus, plus, axis });
                }
            }
        }
    }
    faces
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LevelSet;

    #[test]
    fn unit_square_two_by_two() {
        let mesh = BackgroundMesh::new([0.0, 0.0], [1.0, 1.0], 0.5).unwrap();
        assert_eq!(mesh.n_cells(), [2, 2]);
        assert_eq!(mesh.num_faces(), 12);
    }

    #[test]
    fn study_grid_sizes() {
        let mesh = BackgroundMesh::new([-1.5, -1.5], [3.0, 3.0], 0.12).unwrap();
        assert_eq!(mesh.n_cells(), [25, 25]);
        for (h, n) in [(0.06, 50), (0.03, 100), (0.015, 200), (0.0375, 80)] {
            let mesh = BackgroundMesh::new([-1.5, -1.5], [3.0, 3.0], h).unwrap();
            assert_eq!(mesh.n_cells(), [n, n]);
        }
    }

    #[test]
    fn rejects_non_multiple_extent() {
        let err = BackgroundMesh::new([0.0, 0.0], [1.0, 1.0], 0.3).unwrap_err();
        assert!(err.to_string().contains("not an integer multiple"));
    }

    #[test]
    fn half_plane_classification() {
        let mesh = BackgroundMesh::new([0.0, 0.0], [1.0, 1.0], 0.5).unwrap();
        let ls = LevelSet::half_plane(0, 0.25, 1.0);
        let cls = classify_cells(&mesh, &ls, 1).unwrap();
        assert_eq!(cls.tags(), &[CellTag::Cut, CellTag::Outside, CellTag::Cut, CellTag::Outside]);
        assert_eq!(cls.cut_cells(), &[0, 2]);
        assert_eq!(
            cls.stabilized_faces(),
            &[StabilizedFace { minus: 0, plus: 2, axis: 1 }]
        );
    }

    #[test]
    fn coarse_circle_leaves_only_corner_cells_outside() {
        // the nearest point of a corner cell is at distance 0.75·√2 > 1
        let mesh = BackgroundMesh::new([-1.5, -1.5], [3.0, 3.0], 0.75).unwrap();
        let ls = LevelSet::circle([0.0, 0.0], 1.0);
        let cls = classify_cells(&mesh, &ls, 2).unwrap();
        assert_eq!(cls.active_cells().len(), 12);
        for corner in [0, 3, 12, 15] {
            assert_eq!(cls.tag(corner), CellTag::Outside);
        }
        assert!(cls.tags().iter().all(|t| *t != CellTag::Inside));
    }

    #[test]
    fn negative_constant_is_all_inside() {
        let mesh = BackgroundMesh::new([0.0, 0.0], [1.0, 1.0], 0.25).unwrap();
        let cls = classify_cells(&mesh, &LevelSet::constant(-1.0), 2).unwrap();
        assert!(cls.tags().iter().all(|t| *t == CellTag::Inside));
        assert!(cls.stabilized_faces().is_empty());
    }

    #[test]
    fn zero_level_set_is_degenerate_cut() {
        let mesh = BackgroundMesh::new([0.0, 0.0], [1.0, 1.0], 0.5).unwrap();
        let cls = classify_cells(&mesh, &LevelSet::constant(0.0), 1).unwrap();
        assert_eq!(cls.degenerate.len(), 4);
        assert_eq!(cls.cut_cells().len(), 4);
    }

    #[test]
    fn isolated_cut_cell_has_four_faces() {
        let mesh = BackgroundMesh::new([0.0, 0.0], [5.0, 5.0], 1.0).unwrap();
        let mut tags = vec![CellTag::Inside; 25];
        tags[12] = CellTag::Cut;
        let cls = CutClassification::from_tags(&mesh, tags).unwrap();
        let faces = cls.stabilized_faces();
        assert_eq!(faces.len(), 4);
        assert!(faces.iter().all(|f| f.minus == 12 || f.plus == 12));
    }

    #[test]
    fn locate_assigns_shared_faces_upward() {
        let mesh = BackgroundMesh::new([0.0, 0.0], [1.0, 1.0], 0.5).unwrap();
        assert_eq!(mesh.locate([0.5, 0.25]), Some(1));
        assert_eq!(mesh.locate([1.0, 1.0]), Some(3));
        assert_eq!(mesh.locate([1.2, 0.0]), None);
    }
}
