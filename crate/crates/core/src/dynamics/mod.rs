//! Explicit time integration of `M ξ̈ + A ξ = F(t)`.
//!
//! The second-order system is stepped as `ξ' = η`, `η' = M⁻¹(F − Aξ)` with
//! the classical four-stage Runge–Kutta method.

mod snapshot;

pub use snapshot::{write_snapshot, SnapshotFormat};

use crate::basis::FESpace;
use crate::error::{Error, Result};
use crate::forms::{assemble_mass_load, CutGeometry, MassRule};
use crate::geometry::Point;
use crate::spectra::{Cholesky, LinearOperator, SparseSymmetric};

/// Stability factor `α` in `τ ≤ α C_FL h` for classical RK4.
pub const RK4_STABILITY: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Default growth factor of `‖(ξ, η)‖` that aborts an integration.
pub const DEFAULT_GROWTH_LIMIT: f64 = 1e6;

/// Displacement, velocity and time.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub t: f64,
}

impl WaveState {
    pub fn zeros(n: usize) -> Self {
        Self {
            xi: vec![0.0; n],
            eta: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    /// Euclidean norm of the stacked vector `(ξ, η)`.
    pub fn norm(&self) -> f64 {
        self.xi.iter().chain(&self.eta).map(|v| v * v).sum::<f64>().sqrt()
    }

    fn is_finite(&self) -> bool {
        self.xi.iter().chain(&self.eta).all(|v| v.is_finite())
    }
}

/// `τ = 0.4 h / p²`.
pub fn default_time_step(h: f64, p: usize) -> f64 {
    0.4 * h / (p * p) as f64
}

/// `½ (ηᵀMη + ξᵀAξ)`.
pub fn energy(state: &WaveState, m: &SparseSymmetric, a: &dyn LinearOperator) -> Result<f64> {
    for dim in [m.dim(), a.dim(), state.eta.len()] {
        if dim != state.xi.len() {
            return Err(Error::DimensionMismatch {
                expected: state.xi.len(),
                found: dim,
            });
        }
    }
    Ok(0.5 * (m.quadratic_form(&state.eta) + a.quadratic(&state.xi)))
}

/// Projects initial data: `M ξ₀ = ((u₀, φ_i))`, `M η₀ = ((v₀, φ_i))`, with the
/// right-hand sides integrated by the mass quadrature.
pub fn project_initial(
    space: &FESpace,
    geometry: &CutGeometry,
    mass_rule: MassRule,
    mass_factor: &Cholesky,
    u0: &dyn Fn(Point) -> f64,
    v0: &dyn Fn(Point) -> f64,
) -> Result<WaveState> {
    if mass_factor.dim() != space.num_dofs() {
        return Err(Error::DimensionMismatch {
            expected: space.num_dofs(),
            found: mass_factor.dim(),
        });
    }
    let mut xi = assemble_mass_load(space, geometry, mass_rule, u0);
    mass_factor.solve_in_place(&mut xi);
    let mut eta = assemble_mass_load(space, geometry, mass_rule, v0);
    mass_factor.solve_in_place(&mut eta);
    Ok(WaveState { xi, eta, t: 0.0 })
}

/// Time-dependent right-hand side `F(t)`; `None` means `F = 0`.
pub type Forcing<'a> = Option<&'a dyn Fn(f64) -> Vec<f64>>;

/// Reusable buffers for RK4 stages.
struct Stepper<'a> {
    m: &'a Cholesky,
    a: &'a dyn LinearOperator,
    forcing: Forcing<'a>,
    cache: Vec<(f64, Vec<f64>)>,
    forcing_peak: f64,
    /// Stage velocities `η_s`, which are also the slopes of `ξ`.
    kx: [Vec<f64>; 4],
    /// `M⁻¹(A ξ_s − F)`, the negated slopes of `η`.
    ke: [Vec<f64>; 4],
    x: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(m: &'a Cholesky, a: &'a dyn LinearOperator, forcing: Forcing<'a>) -> Self {
        let n = a.dim();
        Self {
            m,
            a,
            forcing,
            cache: Vec::new(),
            forcing_peak: 0.0,
            kx: std::array::from_fn(|_| vec![0.0; n]),
            ke: std::array::from_fn(|_| vec![0.0; n]),
            x: vec![0.0; n],
        }
    }

    /// `ke[s] = M⁻¹(A x − F(t))`.
    fn stage(&mut self, s: usize, t: f64) {
        let out = &mut self.ke[s];
        self.a.apply(&self.x, out);
        if let Some(f) = self.forcing {
            // stage times repeat (t + τ/2 twice, t + τ as the next t)
            let idx = match self.cache.iter().position(|(c, _)| *c == t) {
                Some(i) => i,
                None => {
                    if self.cache.len() == 3 {
                        self.cache.remove(0);
                    }
                    let v = f(t);
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    self.forcing_peak = self.forcing_peak.max(norm);
                    self.cache.push((t, v));
                    self.cache.len() - 1
                }
            };
            for (o, fv) in out.iter_mut().zip(&self.cache[idx].1) {
                *o -= fv;
            }
        }
        self.m.solve_in_place(out);
    }

    fn step(&mut self, state: &mut WaveState, tau: f64) {
        let t = state.t;
        let stage_t = [t, t + 0.5 * tau, t + 0.5 * tau, t + tau];
        let stage_c = [0.0, 0.5 * tau, 0.5 * tau, tau];
        for s in 0..4 {
            let c = stage_c[s];
            if s == 0 {
                self.x.copy_from_slice(&state.xi);
                self.kx[0].copy_from_slice(&state.eta);
            } else {
                let (done, rest) = self.kx.split_at_mut(s);
                let (kx_prev, kx_s) = (&done[s - 1], &mut rest[0]);
                let ke_prev = &self.ke[s - 1];
                for i in 0..self.x.len() {
                    self.x[i] = state.xi[i] + c * kx_prev[i];
                    kx_s[i] = state.eta[i] - c * ke_prev[i];
                }
            }
            self.stage(s, stage_t[s]);
        }
        let w = tau / 6.0;
        let [k0, k1, k2, k3] = &self.kx;
        let [e0, e1, e2, e3] = &self.ke;
        for i in 0..state.xi.len() {
            state.xi[i] += w * (k0[i] + 2.0 * (k1[i] + k2[i]) + k3[i]);
            state.eta[i] -= w * (e0[i] + 2.0 * (e1[i] + e2[i]) + e3[i]);
        }
        state.t = t + tau;
    }
}

/// One classical RK4 step of length `τ`.
pub fn rk4_step(
    mass_factor: &Cholesky,
    stiffness: &dyn LinearOperator,
    forcing: Forcing<'_>,
    state: &WaveState,
    tau: f64,
) -> Result<WaveState> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
    }
    check_dims(mass_factor, stiffness, state)?;
    let mut next = state.clone();
    Stepper::new(mass_factor, stiffness, forcing).step(&mut next, tau);
    if !next.is_finite() {
        return Err(Error::NonFinite { time: next.t });
    }
    Ok(next)
}

fn check_dims(m: &Cholesky, a: &dyn LinearOperator, state: &WaveState) -> Result<()> {
    let n = state.dim();
    for dim in [m.dim(), a.dim(), state.eta.len()] {
        if dim != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: dim,
            });
        }
    }
    Ok(())
}

/// Settings for [`integrate`].
#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    pub tau: f64,
    pub t_final: f64,
    /// Number of evenly spaced snapshots to keep (the final state included).
    pub snapshots: usize,
    /// Record `(t, E(t))` after every step; needs `mass`.
    pub track_energy: bool,
    /// `α C_FL h`, when known; a larger `τ` only logs a warning.
    pub stability_limit: Option<f64>,
    pub growth_limit: f64,
}

impl IntegrateOptions {
    pub fn new(tau: f64, t_final: f64) -> Self {
        Self {
            tau,
            t_final,
            snapshots: 0,
            track_energy: false,
            stability_limit: None,
            growth_limit: DEFAULT_GROWTH_LIMIT,
        }
    }
}

/// Result of [`integrate`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub state: WaveState,
    pub steps: usize,
    pub energy: Vec<(f64, f64)>,
    pub snapshots: Vec<WaveState>,
}

impl Trajectory {
    /// `max_t |E(t) − E(0)| / E(0)` over the recorded energies.
    pub fn relative_energy_drift(&self) -> Option<f64> {
        let e0 = self.energy.first()?.1;
        if e0 <= 0.0 {
            return None;
        }
        Some(self.energy.iter().map(|(_, e)| (e - e0).abs()).fold(0.0, f64::max) / e0)
    }
}

/// Integrates from `state0.t` to `t_final`; the last step is shortened so
/// that the final time is hit exactly.
///
/// The run aborts when `‖(ξ, η)‖` exceeds `growth_limit` times the larger of
/// `‖(ξ₀, η₀)‖` and the largest `‖F(t)‖` seen so far.
pub fn integrate(
    mass: Option<&SparseSymmetric>,
    mass_factor: &Cholesky,
    stiffness: &dyn LinearOperator,
    forcing: Forcing<'_>,
    state0: WaveState,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let tau = opts.tau;
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
    }
    check_dims(mass_factor, stiffness, &state0)?;
    if opts.track_energy && mass.is_none() {
        return Err(Error::InvalidArgument("energy tracking needs the mass matrix".into()));
    }
    if let Some(limit) = opts.stability_limit {
        if tau > limit {
            log::warn!("time step {tau:.3e} exceeds the RK4 stability bound {limit:.3e}");
        } else {
            log::info!("time step {tau:.3e} is {:.2} of the RK4 stability bound", tau / limit);
        }
    }
    let t0 = state0.t;
    let span = opts.t_final - t0;
    if span < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "final time {} precedes the initial time {t0}",
            opts.t_final
        )));
    }
    let full = (span / tau * (1.0 + 1e-12)).floor() as usize;
    let rest = span - full as f64 * tau;
    let steps = full + usize::from(rest > 1e-10 * tau);
    let snap_at: Vec<usize> = (1..=opts.snapshots)
        .map(|i| ((i * steps) as f64 / opts.snapshots as f64).round() as usize)
        .collect();

    let mut stepper = Stepper::new(mass_factor, stiffness, forcing);
    let mut state = state0;
    let mut base = state.norm();
    let mut energies = Vec::new();
    let record = |state: &WaveState, out: &mut Vec<(f64, f64)>| -> Result<()> {
        if let Some(m) = mass {
            out.push((state.t, energy(state, m, stiffness)?));
        }
        Ok(())
    };
    if opts.track_energy {
        record(&state, &mut energies)?;
    }
    let mut snapshots = Vec::with_capacity(snap_at.len());
    let mut next_snap = 0;
    while next_snap < snap_at.len() && snap_at[next_snap] == 0 {
        snapshots.push(state.clone());
        next_snap += 1;
    }
    for k in 1..=steps {
        let dt = if k <= full { tau } else { rest };
        stepper.step(&mut state, dt);
        state.t = if k <= full { t0 + k as f64 * tau } else { opts.t_final };
        if !state.is_finite() {
            return Err(Error::NonFinite { time: state.t });
        }
        base = base.max(stepper.forcing_peak);
        let norm = state.norm();
        if base > 0.0 && norm > opts.growth_limit * base {
            return Err(Error::Unstable {
                time: state.t,
                growth: norm / base,
            });
        }
        if opts.track_energy {
            record(&state, &mut energies)?;
        }
        while next_snap < snap_at.len() && snap_at[next_snap] == k {
            snapshots.push(state.clone());
            next_snap += 1;
        }
    }
    Ok(Trajectory {
        state,
        steps,
        energy: energies,
        snapshots,
    })
}
