//! Stiffness operator that applies one shared dense block on the uncut cells
//! and a sparse matrix for everything else.

use super::assemble::{dof_pattern, stiffness_without, uncut_stiffness, CutGeometry};
use super::{BoundarySetup, StabilizationConfig};
use crate::basis::FESpace;
use crate::error::Result;
use crate::spectra::{LinearOperator, SparseSymmetric};

/// `A x = Σ_T K x_T + R x`, where the sum runs over uncut cells of full order
/// with unconstrained DOFs, `K` is their common stiffness block and `R` holds
/// the remaining volume, boundary and penalty terms.
#[derive(Clone, Debug)]
pub struct CellBlockOperator {
    n: usize,
    n_local: usize,
    block: Vec<f64>,
    cells: Vec<u32>,
    rest: SparseSymmetric,
}

impl CellBlockOperator {
    /// Same operator as the stabilized stiffness `a + γ_A h⁻² J`.
    pub fn stiffness(
        space: &FESpace,
        geometry: &CutGeometry,
        config: &StabilizationConfig,
        boundary: BoundarySetup,
        ghost_penalty: &SparseSymmetric,
    ) -> Result<Self> {
        let p = space.order();
        let mut eligible = vec![false; space.mesh().num_cells()];
        let mut cells = Vec::new();
        for &cell in space.classification().active_cells() {
            if geometry.rule(cell).is_some() || space.cell_order(cell) != p {
                continue;
            }
            if let Some(dofs) = space.cell_free_dofs(cell) {
                eligible[cell] = true;
                cells.extend(dofs.into_iter().map(|d| d as u32));
            }
        }
        let pattern = dof_pattern(space);
        let rest = stiffness_without(space, geometry, config.gamma_d, boundary, pattern, &|c| eligible[c]);
        let h = space.mesh().h();
        let rest = rest.add_scaled(ghost_penalty, config.gamma_a / (h * h))?.pruned();
        Ok(Self {
            n: space.num_dofs(),
            n_local: (p + 1) * (p + 1),
            block: uncut_stiffness(space, p),
            cells,
            rest,
        })
    }

    pub fn num_block_cells(&self) -> usize {
        self.cells.len() / self.n_local
    }

    pub fn rest(&self) -> &SparseSymmetric {
        &self.rest
    }
}

impl LinearOperator for CellBlockOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.rest.mul_vec_into(x, y);
        let m = self.n_local;
        let mut xl = [0.0f64; 64];
        for dofs in self.cells.chunks_exact(m) {
            for (a, &d) in dofs.iter().enumerate() {
                xl[a] = x[d as usize];
            }
            for (a, &d) in dofs.iter().enumerate() {
                let row = &self.block[a * m..(a + 1) * m];
                let v: f64 = row.iter().zip(&xl[..m]).map(|(k, v)| k * v).sum();
                y[d as usize] += v;
            }
        }
    }
}
