//! Stabilized bilinear forms and load vectors.
//!
//! `M = mass + γ_M J` and `A = a + γ_A h⁻² J`, where `J` is the weighted
//! ghost penalty on jumps of normal derivatives across the faces of cut
//! cells and `a` is the stiffness with Nitsche terms for Dirichlet data.

mod assemble;
mod operator;

pub use assemble::{
    assemble_cut_mass, assemble_ghost_penalty, assemble_load, assemble_mass_load, assemble_nitsche_stiffness,
    dof_pattern, CutGeometry, MassRule,
};
pub use operator::CellBlockOperator;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::spectra::SparseSymmetric;
use std::sync::Arc;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Ghost-penalty weights `w_k = k! √(2k+1) / p^{2k+1}`, `k = 1..=p`.
pub fn stabilization_weights(p: usize) -> Vec<f64> {
    let pf = p as f64;
    (1..=p)
        .map(|k| factorial(k) * ((2 * k + 1) as f64).sqrt() / pf.powi(2 * k as i32 + 1))
        .collect()
}

/// Weights `(2k+1)(k!)²` that cancel the scaling in the jump form, leaving
/// `Σ_k h^{2k+1} ⟨[∂ₙᵏu], [∂ₙᵏv]⟩`.
pub fn raw_weights(p: usize) -> Vec<f64> {
    (1..=p)
        .map(|k| (2 * k + 1) as f64 * factorial(k).powi(2))
        .collect()
}

/// How the ghost-penalty weights are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    Paper,
    Raw,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(WeightMode::Paper),
            "raw" => Ok(WeightMode::Raw),
            _ => Err(Error::Parse(format!("unknown weight mode '{s}'"))),
        }
    }
}

/// Penalty parameters and ghost-penalty weights.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizationConfig {
    pub gamma_m: f64,
    pub gamma_a: f64,
    pub gamma_d: f64,
    pub weights: Vec<f64>,
    pub mode: WeightMode,
}

impl StabilizationConfig {
    /// Defaults for boundary order `p`: `γ_M = √3/4`, `γ_A = √3/2`,
    /// `γ_D = 5p²`.
    pub fn new(p: usize, mode: WeightMode) -> Self {
        let weights = match mode {
            WeightMode::Paper => stabilization_weights(p),
            WeightMode::Raw => raw_weights(p),
        };
        Self {
            gamma_m: 0.25 * 3f64.sqrt(),
            gamma_a: 0.5 * 3f64.sqrt(),
            gamma_d: 5.0 * (p * p) as f64,
            weights,
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        for (name, v) in [("gamma_m", self.gamma_m), ("gamma_a", self.gamma_a), ("gamma_d", self.gamma_d)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Boundary condition type on one part of the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Boundary conditions on the immersed curve and on the outer sides of the
/// background mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundarySetup {
    pub immersed: BoundaryKind,
    pub mesh_sides: BoundaryKind,
}

impl BoundarySetup {
    pub fn immersed_dirichlet() -> Self {
        Self {
            immersed: BoundaryKind::Dirichlet,
            mesh_sides: BoundaryKind::Neumann,
        }
    }

    pub fn all_neumann() -> Self {
        Self {
            immersed: BoundaryKind::Neumann,
            mesh_sides: BoundaryKind::Neumann,
        }
    }
}

/// Space-time function `(x, t) ↦ value`.
pub type SpaceTimeFn = dyn Fn(Point, f64) -> f64 + Send + Sync;

/// Right-hand side data of the wave equation.
#[derive(Clone, Default)]
pub struct ProblemData {
    pub source: Option<Arc<SpaceTimeFn>>,
    pub dirichlet: Option<Arc<SpaceTimeFn>>,
    pub neumann: Option<Arc<SpaceTimeFn>>,
}

impl ProblemData {
    pub fn is_homogeneous(&self) -> bool {
        self.source.is_none() && self.dirichlet.is_none() && self.neumann.is_none()
    }
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("source", &self.source.is_some())
            .field("dirichlet", &self.dirichlet.is_some())
            .field("neumann", &self.neumann.is_some())
            .finish()
    }
}

/// `(M, A) = (mass + γ_M J, stiffness + γ_A h⁻² J)`.
pub fn combine(
    mass: &SparseSymmetric,
    stiffness: &SparseSymmetric,
    ghost: &SparseSymmetric,
    config: &StabilizationConfig,
    h: f64,
) -> Result<(SparseSymmetric, SparseSymmetric)> {
    let m = mass.add_scaled(ghost, config.gamma_m)?;
    let a = stiffness.add_scaled(ghost, config.gamma_a / (h * h))?;
    Ok((m, a))
}

/// Assembled matrices of one discretization.
#[derive(Clone, Debug)]
pub struct BilinearSystem {
    pub mass_cut: SparseSymmetric,
    pub stiffness_nitsche: SparseSymmetric,
    pub ghost_penalty: SparseSymmetric,
    pub mass: SparseSymmetric,
    pub stiffness: SparseSymmetric,
}

impl BilinearSystem {
    pub fn assemble(
        space: &crate::basis::FESpace,
        geometry: &CutGeometry,
        config: &StabilizationConfig,
        boundary: BoundarySetup,
        mass_rule: MassRule,
    ) -> Result<Self> {
        config.validate()?;
        let pattern = dof_pattern(space);
        let ghost_penalty = assemble_ghost_penalty(
            space,
            space.classification().stabilized_faces(),
            &config.weights,
            pattern.clone(),
        )?;
        let mass_cut = assemble_cut_mass(space, geometry, mass_rule, pattern.clone());
        let stiffness_nitsche =
            assemble_nitsche_stiffness(space, geometry, config.gamma_d, boundary, pattern);
        let (mass, stiffness) = combine(
            &mass_cut,
            &stiffness_nitsche,
            &ghost_penalty,
            config,
            space.mesh().h(),
        )?;
        Ok(Self {
            mass_cut,
            stiffness_nitsche,
            ghost_penalty,
            mass,
            stiffness,
        })
    }
}
