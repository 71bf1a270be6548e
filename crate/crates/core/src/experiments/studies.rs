//! The numerical studies: disk modes, scattering off the star, and the
//! spectral diagnostics of the mass and stiffness matrices.

use super::bessel::BesselMode;
use super::norms::{error_norms, BoundaryError, ErrorNorms, ErrorRow, FeFunction};
use crate::basis::{FESpace, SpaceVariant};
use crate::dynamics::{
    default_time_step, integrate, project_initial, IntegrateOptions, Trajectory, WaveState,
    RK4_STABILITY,
};
use crate::error::{Error, Result};
use crate::forms::{
    assemble_load, BilinearSystem, BoundaryKind, CellBlockOperator, BoundarySetup, CutGeometry, MassRule,
    ProblemData, StabilizationConfig, WeightMode,
};
use crate::geometry::{project_levelset, LevelSet, Point};
use crate::grid::{classify_cells, BackgroundMesh};
use crate::spectra::{
    cfl_number, extremal_eigenvalue, growth_p, Cholesky, EigenEstimate, Extreme, LanczosOptions,
    SparseSymmetric,
};
use serde::Serialize;
use std::sync::Arc;

/// Lower-left corner and side lengths of the background box `[-1.5, 1.5]²`.
pub const BOX_ORIGIN: Point = [-1.5, -1.5];
pub const BOX_EXTENT: [f64; 2] = [3.0, 3.0];

/// How the immersed boundary enters the discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryMode {
    /// Cut rules from the exact level set.
    Analytic,
    /// Cut rules from the `Q_p` projection of the level set.
    Projected,
}

impl std::str::FromStr for GeometryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(GeometryMode::Analytic),
            "projected" => Ok(GeometryMode::Projected),
            _ => Err(Error::Parse(format!("unknown geometry mode '{s}'"))),
        }
    }
}

/// Parameters shared by every discretization.
#[derive(Clone, Debug)]
pub struct SetupOptions {
    pub p: usize,
    pub h: f64,
    pub variant: SpaceVariant,
    pub geometry: GeometryMode,
    pub weights: WeightMode,
    pub gamma_m: Option<f64>,
    pub gamma_a: Option<f64>,
    pub gamma_d: Option<f64>,
    pub mass_rule: MassRule,
    pub boundary: BoundarySetup,
}

impl SetupOptions {
    pub fn new(p: usize, h: f64) -> Self {
        Self {
            p,
            h,
            variant: SpaceVariant::Full,
            geometry: GeometryMode::Projected,
            weights: WeightMode::Paper,
            gamma_m: None,
            gamma_a: None,
            gamma_d: None,
            mass_rule: MassRule::Lobatto,
            boundary: BoundarySetup::immersed_dirichlet(),
        }
    }
}

/// Everything assembled for one `(domain, p, h)`.
pub struct Discretization {
    pub levelset: LevelSet,
    pub space: FESpace,
    /// Rules with `p + 1` points per line, used for assembly.
    pub geometry: CutGeometry,
    /// Rules with `p + 3` points per line, used for error norms.
    pub error_geometry: CutGeometry,
    pub config: StabilizationConfig,
    pub options: SetupOptions,
    pub system: BilinearSystem,
    /// `system.stiffness` in a form that is cheaper to apply.
    pub operator: CellBlockOperator,
}

impl Discretization {
    /// Discretizes `{ψ < 0} ∩ [-1.5, 1.5]²`.
    pub fn build(domain: &LevelSet, opts: &SetupOptions) -> Result<Self> {
        let mesh = BackgroundMesh::new(BOX_ORIGIN, BOX_EXTENT, opts.h)?;
        let levelset = match opts.geometry {
            GeometryMode::Analytic => domain.clone(),
            GeometryMode::Projected => match domain {
                LevelSet::Constant(_) | LevelSet::HalfPlane { .. } => domain.clone(),
                _ => project_levelset(domain, &mesh, opts.p)?,
            },
        };
        let cls = classify_cells(&mesh, &levelset, opts.p)?;
        let space = FESpace::new(&mesh, &cls, opts.p, opts.variant)?;
        let geometry = CutGeometry::build(&mesh, &cls, &levelset, opts.p + 1)?;
        let error_geometry = CutGeometry::build(&mesh, &cls, &levelset, opts.p + 3)?;
        let mut config = StabilizationConfig::new(space.boundary_order(), opts.weights);
        if let Some(g) = opts.gamma_m {
            config.gamma_m = g;
        }
        if let Some(g) = opts.gamma_a {
            config.gamma_a = g;
        }
        if let Some(g) = opts.gamma_d {
            config.gamma_d = g;
        }
        let system = BilinearSystem::assemble(&space, &geometry, &config, opts.boundary, opts.mass_rule)?;
        let operator = CellBlockOperator::stiffness(&space, &geometry, &config, opts.boundary, &system.ghost_penalty)?;
        log::info!(
            "p={} h={} {:?}: {} active cells ({} cut), {} dofs",
            opts.p,
            opts.h,
            opts.variant,
            cls.active_cells().len(),
            cls.cut_cells().len(),
            space.num_dofs()
        );
        Ok(Self {
            levelset,
            space,
            geometry,
            error_geometry,
            config,
            options: opts.clone(),
            system,
            operator,
        })
    }

    pub fn h(&self) -> f64 {
        self.options.h
    }

    pub fn num_dofs(&self) -> usize {
        self.space.num_dofs()
    }

    pub fn mass_factor(&self) -> Result<Cholesky> {
        Cholesky::factor(&self.system.mass)
    }

    /// `C_FL` of the stabilized pencil.
    pub fn cfl(&self, factor: Option<&Cholesky>, lanczos: LanczosOptions) -> Result<(f64, EigenEstimate)> {
        cfl_number(&self.system.stiffness, &self.system.mass, factor, self.h(), lanczos)
    }
}

/// Extremal eigenvalues of a mass matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassSpectrum {
    pub kappa: f64,
    pub lambda_min_scaled: f64,
    pub lambda_max_scaled: f64,
    pub converged: bool,
}

/// `κ(M)`, `λ_min h⁻²` and `λ_max h⁻²`.
pub fn mass_spectrum(m: &SparseSymmetric, h: f64, lanczos: LanczosOptions) -> Result<MassSpectrum> {
    let lo = extremal_eigenvalue(m, None, Extreme::Smallest, None, lanczos)?;
    let hi = extremal_eigenvalue(m, None, Extreme::Largest, None, lanczos)?;
    if !(lo.converged && hi.converged) {
        log::warn!(
            "mass spectrum not converged (residuals {:.1e}, {:.1e})",
            lo.residual,
            hi.residual
        );
    }
    Ok(MassSpectrum {
        kappa: hi.value / lo.value,
        lambda_min_scaled: lo.value / (h * h),
        lambda_max_scaled: hi.value / (h * h),
        converged: lo.converged && hi.converged,
    })
}

/// The unit disk centered at the origin.
pub fn unit_disk() -> LevelSet {
    LevelSet::circle([0.0, 0.0], 1.0)
}

/// Radial mode used by default. With three periods of this mode the
/// errors agree with published reference values; the first mode gives
/// errors up to 25 times smaller on the same meshes.
pub const DEFAULT_MODE: usize = 3;

/// Settings of the disk-mode problem.
#[derive(Clone, Debug)]
pub struct InnerOptions {
    pub setup: SetupOptions,
    /// Bessel mode index `n ≥ 1`; see [`DEFAULT_MODE`].
    pub mode: usize,
    /// Defaults to three periods of the mode.
    pub t_final: Option<f64>,
    /// Defaults to `0.4 h / p²`.
    pub tau: Option<f64>,
    pub track_energy: bool,
    pub snapshots: usize,
    /// Estimate `C_FL` first and compare `τ` with `2√2 C_FL h`.
    pub check_stability: bool,
}

impl InnerOptions {
    pub fn new(p: usize, h: f64) -> Self {
        Self {
            setup: SetupOptions::new(p, h),
            mode: DEFAULT_MODE,
            t_final: None,
            tau: None,
            track_energy: false,
            snapshots: 0,
            check_stability: false,
        }
    }
}

/// Output of a time-dependent run.
pub struct Run {
    pub disc: Discretization,
    pub trajectory: Trajectory,
    pub tau: f64,
    pub t_final: f64,
    pub errors: ErrorNorms,
}

impl Run {
    pub fn row(&self) -> ErrorRow {
        ErrorRow::new(self.disc.h(), self.errors)
    }
}

fn stability_limit(disc: &Discretization, factor: &Cholesky) -> Result<f64> {
    let (c, _) = disc.cfl(Some(factor), LanczosOptions::default())?;
    log::info!("C_FL = {c:.4}");
    Ok(RK4_STABILITY * c * disc.h())
}

/// Disk of radius 1 with `u = 0` on its boundary, started from the Bessel
/// mode `J₀(α_n r)` at rest; errors against the exact mode at the final time.
pub fn run_inner(opts: &InnerOptions) -> Result<Run> {
    let mut setup = opts.setup.clone();
    setup.boundary = BoundarySetup::immersed_dirichlet();
    let disc = Discretization::build(&unit_disk(), &setup)?;
    let mode = BesselMode::new(opts.mode, 1.0);
    let factor = disc.mass_factor()?;
    let u0 = |x: Point| mode.eval(x, 0.0).0;
    let state0 = project_initial(&disc.space, &disc.geometry, setup.mass_rule, &factor, &u0, &|_| 0.0)?;
    let t_final = opts.t_final.unwrap_or(3.0 * mode.period);
    let tau = opts.tau.unwrap_or_else(|| default_time_step(setup.h, setup.p));
    let mut iopts = IntegrateOptions::new(tau, t_final);
    iopts.track_energy = opts.track_energy;
    iopts.snapshots = opts.snapshots;
    if opts.check_stability {
        iopts.stability_limit = Some(stability_limit(&disc, &factor)?);
    }
    let trajectory = integrate(
        Some(&disc.system.mass),
        &factor,
        &disc.operator,
        None,
        state0,
        &iopts,
    )?;
    let exact = |x: Point| mode.eval(x, t_final);
    let errors = error_norms(
        &disc.space,
        &trajectory.state.xi,
        &disc.error_geometry,
        &exact,
        BoundaryError::Value,
    );
    Ok(Run {
        disc,
        trajectory,
        tau,
        t_final,
        errors,
    })
}

/// Width `σ` and center `t_c` of the Gaussian pulse.
pub const PULSE_WIDTH: f64 = 0.25;
pub const PULSE_CENTER: f64 = 3.0;
/// Final time of the scattering problem.
pub const OUTER_FINAL_TIME: f64 = 4.0;

/// `cos(πx/3) exp(−((t − t_c)/σ)²)` on the bottom side, zero elsewhere.
pub fn pulse(x: Point, t: f64) -> f64 {
    if (x[1] - BOX_ORIGIN[1]).abs() > 1e-12 {
        return 0.0;
    }
    (std::f64::consts::PI * x[0] / 3.0).cos() * (-((t - PULSE_CENTER) / PULSE_WIDTH).powi(2)).exp()
}

/// Settings of the scattering problem.
#[derive(Clone, Debug)]
pub struct OuterOptions {
    pub setup: SetupOptions,
    pub t_final: f64,
    pub tau: Option<f64>,
    pub snapshots: usize,
    pub check_stability: bool,
}

impl OuterOptions {
    pub fn new(p: usize, h: f64) -> Self {
        Self {
            setup: SetupOptions::new(p, h),
            t_final: OUTER_FINAL_TIME,
            tau: None,
            snapshots: 0,
            check_stability: false,
        }
    }
}

/// Exterior of the star in the box: homogeneous Neumann on the star, the
/// pulse as Dirichlet data on the box, zero initial data.
pub fn solve_outer(opts: &OuterOptions) -> Result<(Discretization, Trajectory, f64)> {
    let mut setup = opts.setup.clone();
    setup.boundary = BoundarySetup {
        immersed: BoundaryKind::Neumann,
        mesh_sides: BoundaryKind::Dirichlet,
    };
    let disc = Discretization::build(&LevelSet::star(), &setup)?;
    let factor = disc.mass_factor()?;
    let data = ProblemData {
        dirichlet: Some(Arc::new(pulse)),
        ..Default::default()
    };
    let load = |t: f64| assemble_load(&disc.space, &disc.geometry, &data, disc.config.gamma_d, setup.boundary, t);
    let tau = opts.tau.unwrap_or_else(|| default_time_step(setup.h, setup.p));
    let mut iopts = IntegrateOptions::new(tau, opts.t_final);
    iopts.snapshots = opts.snapshots;
    if opts.check_stability {
        iopts.stability_limit = Some(stability_limit(&disc, &factor)?);
    }
    let trajectory = integrate(
        None,
        &factor,
        &disc.operator,
        Some(&load),
        WaveState::zeros(disc.num_dofs()),
        &iopts,
    )?;
    Ok((disc, trajectory, tau))
}

/// Errors of a coarse scattering solution against a finer one: `L₂` and
/// gradient norms over the coarse discrete domain, and the normal derivative
/// on the star.
pub fn outer_errors(
    coarse: &Discretization,
    coarse_state: &WaveState,
    reference: &Discretization,
    reference_state: &WaveState,
) -> Result<ErrorNorms> {
    if reference.options.p != coarse.options.p {
        return Err(Error::Reference(format!(
            "reference order {} differs from {}",
            reference.options.p, coarse.options.p
        )));
    }
    if reference.h() >= coarse.h() {
        return Err(Error::Reference(format!(
            "reference h = {} is not finer than h = {}",
            reference.h(),
            coarse.h()
        )));
    }
    if (coarse_state.t - reference_state.t).abs() > 1e-12 * coarse_state.t.abs().max(1.0) {
        return Err(Error::Reference(format!(
            "reference time {} differs from {}",
            reference_state.t, coarse_state.t
        )));
    }
    let fine = FeFunction::new(&reference.space, &reference_state.xi);
    let e = error_norms(
        &coarse.space,
        &coarse_state.xi,
        &coarse.error_geometry,
        &fine,
        BoundaryError::NormalDerivative,
    );
    if !(e.l2.is_finite() && e.h1.is_finite() && e.boundary.is_finite()) {
        return Err(Error::Reference("reference does not cover the coarse domain".into()));
    }
    Ok(e)
}

/// Scattering runs on each `h` of `hs`, with errors against a run at
/// `h_ref`.
pub fn run_outer(base: &OuterOptions, hs: &[f64], h_ref: f64) -> Result<Vec<ErrorRow>> {
    let mut ref_opts = base.clone();
    ref_opts.setup.h = h_ref;
    ref_opts.tau = base.tau.map(|t| t * h_ref / base.setup.h);
    ref_opts.snapshots = 0;
    let (ref_disc, ref_traj, _) = solve_outer(&ref_opts)?;
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let mut o = base.clone();
        o.setup.h = h;
        let (disc, traj, _) = solve_outer(&o)?;
        let e = outer_errors(&disc, &traj.state, &ref_disc, &ref_traj.state)?;
        rows.push(ErrorRow::new(h, e));
    }
    super::norms::fill_rates(&mut rows);
    Ok(rows)
}

/// Spectral diagnostics of the unstabilized aligned problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlignedDiagnostics {
    pub p: usize,
    pub h: f64,
    pub cfl: f64,
    pub kappa: f64,
    pub lambda_min_scaled: f64,
    pub lambda_max_scaled: f64,
    pub converged: bool,
}

/// The whole box with Neumann conditions and no cut cells, with exact
/// (consistent) mass integration.
pub fn aligned_discretization(p: usize, h: f64) -> Result<Discretization> {
    let mut setup = SetupOptions::new(p, h);
    setup.geometry = GeometryMode::Analytic;
    setup.mass_rule = MassRule::Gauss;
    setup.boundary = BoundarySetup::all_neumann();
    Discretization::build(&LevelSet::constant(-1.0), &setup)
}

pub fn run_aligned_reference(p: usize, h: f64, lanczos: LanczosOptions) -> Result<AlignedDiagnostics> {
    let disc = aligned_discretization(p, h)?;
    let factor = disc.mass_factor()?;
    let (cfl, est) = disc.cfl(Some(&factor), lanczos)?;
    let ms = mass_spectrum(&disc.system.mass, h, lanczos)?;
    Ok(AlignedDiagnostics {
        p,
        h,
        cfl,
        kappa: ms.kappa,
        lambda_min_scaled: ms.lambda_min_scaled,
        lambda_max_scaled: ms.lambda_max_scaled,
        converged: est.converged && ms.converged,
    })
}

/// One line of the CFL table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CflRow {
    pub p: usize,
    pub h: f64,
    pub cfl_aligned: f64,
    pub cfl_immersed: f64,
    pub converged: bool,
}

/// `C_FL` of the aligned box and of the disk problem.
pub fn cfl_row(setup: &SetupOptions, lanczos: LanczosOptions) -> Result<CflRow> {
    let aligned = aligned_discretization(setup.p, setup.h)?;
    let (ca, ea) = aligned.cfl(None, lanczos)?;
    let mut s = setup.clone();
    s.boundary = BoundarySetup::immersed_dirichlet();
    let disk = Discretization::build(&unit_disk(), &s)?;
    let (ci, ei) = disk.cfl(None, lanczos)?;
    Ok(CflRow {
        p: setup.p,
        h: setup.h,
        cfl_aligned: ca,
        cfl_immersed: ci,
        converged: ea.converged && ei.converged,
    })
}

/// Unit circle through a grid vertex near 45°, pushed outward by `δ` along
/// the diagonal so that the cell beyond the vertex keeps a corner of size
/// `δ`.
pub fn offset_disk(h: f64, delta: f64) -> LevelSet {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = [
        BOX_ORIGIN[0] + h * ((s - BOX_ORIGIN[0]) / h).round(),
        BOX_ORIGIN[1] + h * ((s - BOX_ORIGIN[1]) / h).round(),
    ];
    LevelSet::circle([v[0] - (1.0 - delta) * s, v[1] - (1.0 - delta) * s], 1.0)
}

/// One line of the conditioning sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionRow {
    pub p: usize,
    pub h: f64,
    pub offset: f64,
    pub variant: String,
    pub dofs: usize,
    pub kappa_stabilized: f64,
    pub kappa_unstabilized: f64,
    pub lambda_min_scaled: f64,
    pub lambda_max_scaled: f64,
    pub p_function: f64,
    pub converged: bool,
    pub note: String,
}

fn kappa(m: &SparseSymmetric, lanczos: LanczosOptions) -> (f64, bool, String) {
    let lo = extremal_eigenvalue(m, None, Extreme::Smallest, None, lanczos);
    let hi = extremal_eigenvalue(m, None, Extreme::Largest, None, lanczos);
    match (lo, hi) {
        (Ok(lo), Ok(hi)) => (hi.value / lo.value, lo.converged && hi.converged, String::new()),
        (Err(Error::NotPositiveDefinite { .. }), Ok(_)) => {
            (f64::INFINITY, false, "numerically singular".into())
        }
        (Err(e), _) | (_, Err(e)) => (f64::NAN, false, e.to_string()),
    }
}

/// Condition numbers of the stabilized and unstabilized mass matrices for a
/// disk placed with offset `offset · h` at a grid vertex.
pub fn condition_row(
    setup: &SetupOptions,
    offset: f64,
    lanczos: LanczosOptions,
) -> Result<ConditionRow> {
    let domain = offset_disk(setup.h, offset * setup.h);
    let disc = Discretization::build(&domain, setup)?;
    let (ks, cs, mut note, ms) = match mass_spectrum(&disc.system.mass, setup.h, lanczos) {
        Ok(ms) => (ms.kappa, ms.converged, String::new(), Some(ms)),
        Err(e) => (f64::NAN, false, e.to_string(), None),
    };
    let (ku, cu, nu) = kappa(&disc.system.mass_cut, lanczos);
    if !nu.is_empty() {
        note = if note.is_empty() { format!("unstabilized: {nu}") } else { format!("{note}; unstabilized: {nu}") };
    }
    Ok(ConditionRow {
        p: setup.p,
        h: setup.h,
        offset,
        variant: format!("{:?}", setup.variant).to_lowercase(),
        dofs: disc.num_dofs(),
        kappa_stabilized: ks,
        kappa_unstabilized: ku,
        lambda_min_scaled: ms.map_or(f64::NAN, |m| m.lambda_min_scaled),
        lambda_max_scaled: ms.map_or(f64::NAN, |m| m.lambda_max_scaled),
        p_function: growth_p(setup.p),
        converged: cs && cu,
        note,
    })
}

/// Every combination of `ps`, `hs` and `offsets` (relative to `h`). Failed
/// rows are kept with the error in `note`.
pub fn condition_sweep(
    base: &SetupOptions,
    ps: &[usize],
    hs: &[f64],
    offsets: &[f64],
    lanczos: LanczosOptions,
) -> Vec<ConditionRow> {
    let mut jobs = Vec::new();
    for &p in ps {
        for &h in hs {
            for &o in offsets {
                jobs.push((p, h, o));
            }
        }
    }
    super::par_map(&jobs, |&(p, h, offset)| {
        let mut s = base.clone();
        s.p = p;
        s.h = h;
        condition_row(&s, offset, lanczos).unwrap_or_else(|e| ConditionRow {
            p,
            h,
            offset,
            variant: format!("{:?}", s.variant).to_lowercase(),
            dofs: 0,
            kappa_stabilized: f64::NAN,
            kappa_unstabilized: f64::NAN,
            lambda_min_scaled: f64::NAN,
            lambda_max_scaled: f64::NAN,
            p_function: growth_p(p),
            converged: false,
            note: e.to_string(),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_vanishes_off_the_bottom_side_and_early() {
        assert_eq!(pulse([0.0, 0.0], 3.0), 0.0);
        assert!((pulse([0.0, -1.5], 3.0) - 1.0).abs() < 1e-15);
        assert!(pulse([0.3, -1.5], 0.5) <= 1e-14);
    }

    #[test]
    fn offset_disk_passes_near_a_vertex() {
        let h = 0.06;
        let ls = offset_disk(h, 1e-3 * h);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = [
            BOX_ORIGIN[0] + h * ((s - BOX_ORIGIN[0]) / h).round(),
            BOX_ORIGIN[1] + h * ((s - BOX_ORIGIN[1]) / h).round(),
        ];
        assert!((ls.eval(v) + 1e-3 * h).abs() < 1e-12);
    }

    #[test]
    fn aligned_p1_cfl_is_the_tensor_value() {
        // consistent Q1 mass on a uniform grid: λ_max = 24/h²
        let d = run_aligned_reference(1, 0.3, LanczosOptions::default()).unwrap();
        assert!((d.cfl - 1.0 / 24f64.sqrt()).abs() < 1e-3, "{}", d.cfl);
    }

    #[test]
    fn short_inner_run_is_accurate() {
        let mut o = InnerOptions::new(2, 0.12);
        o.mode = 1;
        o.t_final = Some(0.3);
        o.track_energy = true;
        let run = run_inner(&o).unwrap();
        assert!(run.errors.l2 < 5e-3, "{:?}", run.errors);
        let drift = run.trajectory.relative_energy_drift().unwrap();
        assert!(drift < 1e-5, "drift {drift:e}");
    }

    #[test]
    fn outer_solution_is_quiet_before_the_pulse() {
        let mut o = OuterOptions::new(1, 0.3);
        o.t_final = 0.5;
        let (_, traj, _) = solve_outer(&o).unwrap();
        assert!(traj.state.norm() <= 1e-12);
    }

    #[test]
    fn outer_errors_need_a_finer_reference() {
        let mut o = OuterOptions::new(1, 0.3);
        o.t_final = 0.1;
        let (d, t, _) = solve_outer(&o).unwrap();
        assert!(matches!(outer_errors(&d, &t.state, &d, &t.state), Err(Error::Reference(_))));
    }
}
