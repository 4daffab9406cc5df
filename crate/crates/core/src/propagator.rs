//! BCH split-operator steps (orders 1–3, real and imaginary time) and the
//! evolution loop.
//!
//! A step of size `z` (`z = δτ` in real time, `z = −i·δτ` in imaginary time,
//! substituted in every power) maps
//!
//! ```text
//! order 1:  ψ' = e^{−izV(β)} · φ,           φ = ℱ⁻¹[e^{−izκ²} ℱψ]
//! order 2:  ψ' = P(β') · [φ + z²∇V(β)·∇φ],  β' = β + z²∇V(β)
//!           P = exp(½z²∇²V − izV)
//! order 3:  P gains iz³(⅔|∇V|² + ⅙∇⁴V), and the kinetic factor becomes
//!           exp(−(4/3)iz³ Σ_{j>k} C_jk κ_jκ_k − ((2/3)C·iz³ + iz)κ²)
//! ```
//!
//! The `z²∇V·∇φ` term is the leading factor `e^{iz²∇V·κ}` acting on the
//! kinetic-evolved field; dropping it leaves a first-order method. `C` and
//! `C_jk` are `⟨∇²V⟩` and `⟨∂_j∂_kV⟩` over the current density.
//!
//! Cells with `V ≥ WALL_THRESHOLD` (at `β` or `β'`) take a pure phase capped
//! at one radian per step in real time, `e^{−δτ·V}` in imaginary time, and
//! no translation.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::dsl::{DslError, Expr, Point, PotentialModel, Var};
use crate::grid::Grid;
use crate::observables::{energy_with_field, ObservableError, Snapshot};
use crate::wavefunction::{Representation, Wavefunction, WavefunctionError};

/// Potential values at or above this are treated as hard walls.
pub const WALL_THRESHOLD: f64 = 1.0e5;
/// Largest per-step wall phase in real time (radians).
pub const WALL_PHASE_CAP: f64 = 1.0;
/// Norm drift per real-time step that triggers a retry when stepping is dynamic.
pub const DRIFT_LIMIT: f64 = 1e-8;
/// Maximum number of halvings of one step.
pub const MAX_HALVINGS: u32 = 20;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Real,
    Imaginary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    First = 1,
    Second = 2,
    Third = 3,
}

impl Order {
    pub fn from_number(n: u32) -> Option<Order> {
        match n {
            1 => Some(Order::First),
            2 => Some(Order::Second),
            3 => Some(Order::Third),
            _ => None,
        }
    }

    pub fn number(self) -> u32 {
        self as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub order: Order,
    pub mode: Mode,
    pub dtau_base: f64,
    pub dynamic: bool,
    /// Always on in imaginary mode.
    pub renorm_each_step: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            order: Order::Second,
            mode: Mode::Real,
            dtau_base: 0.01,
            dynamic: false,
            renorm_each_step: false,
        }
    }
}

impl StepConfig {
    pub fn renormalizes(&self) -> bool {
        self.renorm_each_step || self.mode == Mode::Imaginary
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagatorError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Wavefunction(#[from] WavefunctionError),
    #[error("coupling schedule may only depend on t")]
    AlphaNotTimeOnly,
    #[error("alpha({tau}) = {value} is not positive")]
    NonPositiveAlpha { tau: f64, value: f64 },
    #[error("potential uses axis {axis} but the grid has {dims} dimension(s)")]
    PotentialDims { axis: usize, dims: usize },
    #[error("non-finite amplitudes at tau = {tau}")]
    NonFinite { tau: f64 },
    #[error("state must be in position representation")]
    NotPosition,
    #[error("invalid evolution plan: {0}")]
    BadPlan(&'static str),
    #[error("time step must be finite and non-negative, got {0}")]
    BadTimestep(f64),
    #[error("observable: {0}")]
    Observable(alloc::boxed::Box<ObservableError>),
}

impl From<ObservableError> for PropagatorError {
    fn from(e: ObservableError) -> Self {
        PropagatorError::Observable(alloc::boxed::Box::new(e))
    }
}

/// `ℋ = −∇² + α(τ)·U(β, τ)` on a grid.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: Arc<Grid>,
    model: PotentialModel,
    alpha: Expr,
}

impl Hamiltonian {
    /// `potential` and `alpha` must be fully bound; `alpha` may use only `t`.
    pub fn new(grid: Arc<Grid>, potential: &Expr, alpha: &Expr) -> Result<Self, PropagatorError> {
        if alpha.is_spatial() {
            return Err(PropagatorError::AlphaNotTimeOnly);
        }
        if let Some(axis) = potential.max_axis() {
            if axis >= grid.dims() {
                return Err(PropagatorError::PotentialDims {
                    axis,
                    dims: grid.dims(),
                });
            }
        }
        let model = PotentialModel::new(potential, grid.dims())?;
        // Surface unbound parameters in the schedule now rather than mid-run.
        alpha.eval(&Point::time(0.0)).or_else(|e| match e {
            DslError::UnboundParameter(_) => Err(e),
            _ => Ok(0.0),
        })?;
        Ok(Self {
            grid,
            model,
            alpha: alpha.clone(),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn potential(&self) -> &Expr {
        self.model.expr()
    }

    pub fn alpha_expr(&self) -> &Expr {
        &self.alpha
    }

    pub fn alpha_at(&self, tau: f64) -> Result<f64, PropagatorError> {
        let value = self.alpha.eval(&Point::time(tau))?;
        if value > 0.0 {
            Ok(value)
        } else {
            Err(PropagatorError::NonPositiveAlpha { tau, value })
        }
    }

    /// Neither `α` nor `U` depends on `t`.
    pub fn is_static(&self) -> bool {
        !self.alpha.depends_on(Var::T) && !self.model.is_time_dependent()
    }

    /// Copy with `α` and `U` frozen at `tau`.
    pub fn frozen(&self, tau: f64) -> Result<Hamiltonian, PropagatorError> {
        let alpha = Expr::Num(self.alpha_at(tau)?);
        Hamiltonian::new(self.grid.clone(), &self.model.expr().freeze_time(tau), &alpha)
    }

    /// `V = α(τ)·U(β, τ)` at every cell center.
    pub fn potential_field(&self, tau: f64) -> Result<Vec<f64>, PropagatorError> {
        let alpha = self.alpha_at(tau)?;
        (0..self.grid.len())
            .map(|i| {
                let p = self.grid.point(i);
                self.model
                    .value(&Point::new(p, tau))
                    .map(|u| alpha * u)
                    .map_err(|e| {
                        PropagatorError::Dsl(DslError::AtPoint {
                            point: p,
                            source: alloc::boxed::Box::new(e),
                        })
                    })
            })
            .collect()
    }
}

/// `δτ = dtau_base / √max(α, 1)`.
pub fn choose_timestep(alpha_now: f64, config: &StepConfig) -> f64 {
    config.dtau_base / alpha_now.max(1.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    order: Order,
    mode: Mode,
    dtau: u64,
    alpha: u64,
    tau: u64,
}

/// Position-space factors for one (order, mode, δτ, α, τ) combination.
#[derive(Debug, Clone)]
struct Factors {
    key: Key,
    prefactor: Vec<Complex64>,
    /// `z²·∂_dV(β)` per dimension, zero in wall cells.
    shift: Vec<Vec<f64>>,
    /// Fixed kinetic factor (orders 1 and 2).
    kinetic: Option<Vec<Complex64>>,
    /// Order 3: `∇²V(β)` and `((j, k), ∂_j∂_kV(β))` for `j > k`.
    laplacian: Vec<f64>,
    mixed: Vec<((usize, usize), Vec<f64>)>,
}

/// Applies split steps, caching the position-space factors between steps
/// with identical parameters.
#[derive(Debug, Clone, Default)]
pub struct Stepper {
    factors: Option<Factors>,
    /// `κ_d` per flat index with the Nyquist bin zeroed (odd derivatives).
    derivative_k: Option<Vec<Vec<f64>>>,
    kappa: Option<Vec<[f64; 3]>>,
}

fn z_of(mode: Mode, dtau: f64) -> Complex64 {
    match mode {
        Mode::Real => Complex64::new(dtau, 0.0),
        Mode::Imaginary => Complex64::new(0.0, -dtau),
    }
}

fn wall_factor(mode: Mode, dtau: f64, v: f64) -> Complex64 {
    match mode {
        Mode::Real => Complex64::from_polar(1.0, -(dtau * v).min(WALL_PHASE_CAP)),
        Mode::Imaginary => Complex64::new((-dtau * v).exp(), 0.0),
    }
}

impl Stepper {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure_grid_tables(&mut self, grid: &Grid) {
        if self.kappa.as_ref().map(Vec::len) == Some(grid.len()) {
            return;
        }
        let kappa: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.wave_vector(i)).collect();
        let derivative_k = (0..grid.dims())
            .map(|d| {
                let half = grid.axis(d).bins() / 2;
                (0..grid.len())
                    .map(|i| if grid.multi_index(i)[d] == half { 0.0 } else { kappa[i][d] })
                    .collect()
            })
            .collect();
        self.kappa = Some(kappa);
        self.derivative_k = Some(derivative_k);
    }

    fn build_factors(&self, h: &Hamiltonian, key: Key, tau_mid: f64, alpha: f64, dtau: f64) -> Result<Factors, PropagatorError> {
        let grid = h.grid();
        let model = h.model();
        let dims = grid.dims();
        let z = z_of(key.mode, dtau);
        let z2 = z * z;
        let z3 = z2 * z;
        let n = grid.len();
        let mut prefactor = Vec::with_capacity(n);
        let mut shift = if key.order == Order::First {
            Vec::new()
        } else {
            vec![vec![0.0; n]; dims]
        };
        let mut laplacian = Vec::new();
        let mut mixed: Vec<((usize, usize), Vec<f64>)> = Vec::new();
        if key.order == Order::Third {
            laplacian.reserve(n);
            for j in 0..dims {
                for k in 0..j {
                    mixed.push(((j, k), Vec::with_capacity(n)));
                }
            }
        }
        let located = |p: [f64; 3], e: DslError| {
            PropagatorError::Dsl(DslError::AtPoint {
                point: p,
                source: alloc::boxed::Box::new(e),
            })
        };
        for i in 0..n {
            let p = grid.point(i);
            let at = Point::new(p, tau_mid);
            let v0 = alpha * model.value(&at).map_err(|e| located(p, e))?;
            if key.order == Order::First {
                prefactor.push(if v0 >= WALL_THRESHOLD {
                    wall_factor(key.mode, dtau, v0)
                } else {
                    (-I * z * v0).exp()
                });
                continue;
            }
            let g = model.gradient(&at).map_err(|e| located(p, e))?;
            let mut shifted = p;
            for d in 0..dims {
                shifted[d] += z2.re * alpha * g[d];
            }
            let at_s = Point::new(shifted, tau_mid);
            let vs = alpha * model.value(&at_s).map_err(|e| located(shifted, e))?;
            if key.order == Order::Third {
                laplacian.push(alpha * model.laplacian(&at).map_err(|e| located(p, e))?);
                for ((j, k), field) in mixed.iter_mut() {
                    field.push(alpha * model.second(*j, *k, &at).map_err(|e| located(p, e))?);
                }
            }
            let v_max = v0.max(vs);
            if v_max >= WALL_THRESHOLD {
                prefactor.push(wall_factor(key.mode, dtau, v_max));
                continue;
            }
            for d in 0..dims {
                shift[d][i] = z2.re * alpha * g[d];
            }
            let lap_s = alpha * model.laplacian(&at_s).map_err(|e| located(shifted, e))?;
            let mut exponent = 0.5 * z2 * lap_s - I * z * vs;
            if key.order == Order::Third {
                let gs = model.gradient(&at_s).map_err(|e| located(shifted, e))?;
                let gg: f64 = gs[..dims].iter().map(|c| alpha * alpha * c * c).sum();
                let bilap = alpha * model.bilaplacian(&at_s).map_err(|e| located(shifted, e))?;
                exponent += I * z3 * (2.0 / 3.0 * gg + bilap / 6.0);
            }
            prefactor.push(exponent.exp());
        }
        let kinetic = if key.order == Order::Third {
            None
        } else {
            let k2: Vec<f64> = grid.kinetic_symbol();
            Some(k2.iter().map(|k2| (-I * z * k2).exp()).collect())
        };
        Ok(Factors {
            key,
            prefactor,
            shift,
            kinetic,
            laplacian,
            mixed,
        })
    }

    /// One step from `tau` to `tau + dtau`.
    pub fn step(
        &mut self,
        psi: &Wavefunction,
        h: &Hamiltonian,
        tau: f64,
        dtau: f64,
        order: Order,
        mode: Mode,
    ) -> Result<Wavefunction, PropagatorError> {
        if psi.representation() != Representation::Position {
            return Err(PropagatorError::NotPosition);
        }
        if !(dtau >= 0.0 && dtau.is_finite()) {
            return Err(PropagatorError::BadTimestep(dtau));
        }
        let grid = h.grid().clone();
        if !Arc::ptr_eq(psi.grid(), &grid) && **psi.grid() != *grid {
            return Err(WavefunctionError::GridMismatch.into());
        }
        if dtau == 0.0 {
            return Ok(psi.clone());
        }
        let tau_mid = tau + 0.5 * dtau;
        let alpha = h.alpha_at(tau_mid)?;
        let key = Key {
            order,
            mode,
            dtau: dtau.to_bits(),
            alpha: alpha.to_bits(),
            tau: if h.model().is_time_dependent() {
                tau_mid.to_bits()
            } else {
                0
            },
        };
        if self.factors.as_ref().map(|f| f.key) != Some(key) {
            self.factors = Some(self.build_factors(h, key, tau_mid, alpha, dtau)?);
        }
        let z = z_of(mode, dtau);
        let n = grid.len();
        let inv_n = 1.0 / n as f64;

        self.ensure_grid_tables(&grid);
        let kinetic_owned = match self.factors.as_ref().unwrap().kinetic {
            Some(_) => None,
            None => Some(self.third_order_kinetic(psi, z)),
        };
        let factors = self.factors.as_ref().unwrap();
        let kinetic: &[Complex64] = kinetic_owned
            .as_deref()
            .or(factors.kinetic.as_deref())
            .expect("kinetic factor");

        let mut spectrum = psi.amplitudes().to_vec();
        grid.fft().forward(&mut spectrum);
        for (s, k) in spectrum.iter_mut().zip(kinetic) {
            *s *= k;
        }
        let mut phi = spectrum.clone();
        grid.fft().inverse(&mut phi);

        if order != Order::First {
            let dk = self.derivative_k.as_ref().unwrap();
            let mut grad = vec![Complex64::new(0.0, 0.0); n];
            for (d, kd) in dk.iter().enumerate() {
                for ((g, s), k) in grad.iter_mut().zip(&spectrum).zip(kd) {
                    *g = s * I * k;
                }
                grid.fft().inverse(&mut grad);
                for ((p, g), sh) in phi.iter_mut().zip(&grad).zip(&factors.shift[d]) {
                    *p += g * sh;
                }
            }
        }
        for (p, f) in phi.iter_mut().zip(&factors.prefactor) {
            *p *= f * inv_n;
        }
        Ok(Wavefunction::new(grid, phi)?)
    }

    fn third_order_kinetic(&self, psi: &Wavefunction, z: Complex64) -> Vec<Complex64> {
        let factors = self.factors.as_ref().unwrap();
        let density = psi.density();
        let total: f64 = density.iter().sum();
        let mean = |field: &[f64]| -> f64 {
            if total > 0.0 {
                density.iter().zip(field).map(|(w, f)| w * f).sum::<f64>() / total
            } else {
                0.0
            }
        };
        let c = mean(&factors.laplacian);
        let c_jk: Vec<((usize, usize), f64)> = factors.mixed.iter().map(|(jk, f)| (*jk, mean(f))).collect();
        let z3 = z * z * z;
        self.kappa
            .as_ref()
            .expect("grid tables built")
            .iter()
            .map(|k| {
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                let cross: f64 = c_jk.iter().map(|((j, kk), c)| c * k[*j] * k[*kk]).sum();
                (-(4.0 / 3.0) * I * z3 * cross - ((2.0 / 3.0) * c * I * z3 + I * z) * k2).exp()
            })
            .collect()
    }
}

pub fn step_order1(psi: &Wavefunction, h: &Hamiltonian, tau: f64, dtau: f64, mode: Mode) -> Result<Wavefunction, PropagatorError> {
    Stepper::new().step(psi, h, tau, dtau, Order::First, mode)
}

pub fn step_order2(psi: &Wavefunction, h: &Hamiltonian, tau: f64, dtau: f64, mode: Mode) -> Result<Wavefunction, PropagatorError> {
    Stepper::new().step(psi, h, tau, dtau, Order::Second, mode)
}

pub fn step_order3(psi: &Wavefunction, h: &Hamiltonian, tau: f64, dtau: f64, mode: Mode) -> Result<Wavefunction, PropagatorError> {
    Stepper::new().step(psi, h, tau, dtau, Order::Third, mode)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolvePlan {
    pub t_start: f64,
    pub t_end: f64,
    pub config: StepConfig,
    /// Sorted, within `[t_start, t_end]`.
    pub snapshot_times: Vec<f64>,
    pub record_amplitudes: bool,
}

impl EvolvePlan {
    pub fn new(t_start: f64, t_end: f64, config: StepConfig) -> Self {
        Self {
            t_start,
            t_end,
            config,
            snapshot_times: Vec::new(),
            record_amplitudes: false,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    /// `t_end == t_start` is allowed and yields a zero-step run.
    pub fn validate(&self) -> Result<(), PropagatorError> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) || self.t_end < self.t_start {
            return Err(PropagatorError::BadPlan("need finite t_start <= t_end"));
        }
        if !(self.config.dtau_base > 0.0 && self.config.dtau_base.is_finite()) {
            return Err(PropagatorError::BadPlan("dtau_base must be positive"));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(PropagatorError::BadPlan("snapshot times must be sorted"));
        }
        if self
            .snapshot_times
            .iter()
            .any(|s| *s < self.t_start || *s > self.t_end)
        {
            return Err(PropagatorError::BadPlan("snapshot times must lie in [t_start, t_end]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub final_state: Wavefunction,
    pub final_tau: f64,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    /// Energy after each step (imaginary mode only).
    pub energy_trace: Vec<f64>,
    pub min_dtau: f64,
    /// Largest single-step relative norm change before any renormalization.
    pub max_norm_drift: f64,
}

pub fn evolve(psi0: &Wavefunction, h: &Hamiltonian, plan: &EvolvePlan) -> Result<EvolveOutcome, PropagatorError> {
    evolve_with(psi0, h, plan, |_, _, _| Ok(()))
}

/// Like [`evolve`]; `observer(step_index, tau, state)` sees the initial state
/// and the state after every step.
pub fn evolve_with<F>(
    psi0: &Wavefunction,
    h: &Hamiltonian,
    plan: &EvolvePlan,
    mut observer: F,
) -> Result<EvolveOutcome, PropagatorError>
where
    F: FnMut(usize, f64, &Wavefunction) -> Result<(), PropagatorError>,
{
    plan.validate()?;
    if psi0.representation() != Representation::Position {
        return Err(PropagatorError::NotPosition);
    }
    let cfg = plan.config;
    let mut stepper = Stepper::new();
    let static_field = if h.is_static() {
        Some(h.potential_field(plan.t_start)?)
    } else {
        None
    };
    let field_at = |tau: f64| -> Result<Vec<f64>, PropagatorError> {
        match &static_field {
            Some(v) => Ok(v.clone()),
            None => h.potential_field(tau),
        }
    };

    let mut psi = if cfg.renormalizes() {
        psi0.normalize()?.0
    } else {
        psi0.clone()
    };
    let mut tau = plan.t_start;
    let mut pending = plan.snapshot_times.iter().copied().peekable();
    let mut snapshots = Vec::new();
    let mut energy_trace = Vec::new();
    let mut steps = 0usize;
    let mut min_dtau = f64::INFINITY;
    let mut max_norm_drift: f64 = 0.0;
    observer(0, tau, &psi)?;

    let span = plan.t_end - plan.t_start;
    let end_slack = 1e-12 * span.abs().max(1.0);
    while tau < plan.t_end - end_slack {
        let mut dtau = choose_timestep(h.alpha_at(tau)?, &cfg);
        let remaining = plan.t_end - tau;
        if dtau >= remaining * (1.0 - 1e-9) {
            dtau = remaining;
        }
        while let Some(s) = pending.peek().copied() {
            if s < tau + 0.5 * dtau {
                snapshots.push(Snapshot::capture_with_field(&psi, &field_at(tau)?, tau, plan.record_amplitudes)?);
                pending.next();
            } else {
                break;
            }
        }

        let before = psi.norm();
        let mut halvings = 0;
        let (next, drift) = loop {
            let next = stepper.step(&psi, h, tau, dtau, cfg.order, cfg.mode)?;
            let drift = ((next.norm() - before) / before).abs();
            if cfg.dynamic && cfg.mode == Mode::Real && drift > DRIFT_LIMIT && halvings < MAX_HALVINGS {
                dtau *= 0.5;
                halvings += 1;
                continue;
            }
            break (next, drift);
        };
        if !next.is_finite() {
            return Err(PropagatorError::NonFinite { tau: tau + dtau });
        }
        max_norm_drift = max_norm_drift.max(drift);
        psi = if cfg.renormalizes() { next.normalize()?.0 } else { next };
        tau = if dtau == remaining { plan.t_end } else { tau + dtau };
        steps += 1;
        min_dtau = min_dtau.min(dtau);
        if cfg.mode == Mode::Imaginary {
            energy_trace.push(energy_with_field(&psi, &field_at(tau)?)?);
        }
        observer(steps, tau, &psi)?;
    }
    for _ in pending {
        snapshots.push(Snapshot::capture_with_field(&psi, &field_at(tau)?, tau, plan.record_amplitudes)?);
    }
    Ok(EvolveOutcome {
        final_state: psi,
        final_tau: tau,
        snapshots,
        steps,
        energy_trace,
        min_dtau,
        max_norm_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_potential;
    use crate::grid::{make_grid, AxisSpec};
    use crate::observables::moments;
    use core::f64::consts::PI;

    fn ham(grid: &Arc<Grid>, u: &str, alpha: &str) -> Hamiltonian {
        Hamiltonian::new(grid.clone(), &parse_potential(u).unwrap(), &parse_potential(alpha).unwrap()).unwrap()
    }

    fn packet(grid: Arc<Grid>, x0: f64, sigma: f64, k0: f64) -> Wavefunction {
        Wavefunction::from_fn(grid, |p| {
            let amp = (1.0 / (2.0 * PI * sigma * sigma)).powf(0.25) * (-(p[0] - x0).powi(2) / (4.0 * sigma * sigma)).exp();
            Complex64::from_polar(amp, k0 * p[0])
        })
    }

    #[test]
    fn timestep_rule() {
        let cfg = StepConfig::default();
        assert!((choose_timestep(100.0, &cfg) - 0.001).abs() < 1e-15);
        assert_eq!(choose_timestep(0.4, &cfg), 0.01);
    }

    #[test]
    fn zero_step_is_identity() {
        let g = Arc::new(make_grid(64, 1.0, &[AxisSpec::alpha_scaled()]).unwrap());
        let h = ham(&g, "x^2", "1");
        let psi = packet(g, 0.5, 1.0, 1.0);
        for order in [Order::First, Order::Second, Order::Third] {
            let out = Stepper::new().step(&psi, &h, 0.0, 0.0, order, Mode::Real).unwrap();
            assert_eq!(out.amplitudes(), psi.amplitudes());
        }
    }

    #[test]
    fn constant_potential_orders_agree() {
        let g = Arc::new(make_grid(64, 1.0, &[AxisSpec::boxed(20.0)]).unwrap());
        let h = ham(&g, "3", "1");
        let psi = packet(g, 0.0, 1.0, 2.0);
        let a = step_order1(&psi, &h, 0.0, 0.01, Mode::Real).unwrap();
        let b = step_order2(&psi, &h, 0.0, 0.01, Mode::Real).unwrap();
        let c = step_order3(&psi, &h, 0.0, 0.01, Mode::Real).unwrap();
        for i in 0..a.amplitudes().len() {
            assert!((a.amplitudes()[i] - b.amplitudes()[i]).norm() < 1e-14);
            assert!((a.amplitudes()[i] - c.amplitudes()[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn free_step_matches_analytic_packet() {
        // ψ(β, τ) for σ0 = 1/√2, k0 = 4 under i∂τψ = −∂²ψ.
        let g = Arc::new(make_grid(1024, 1.0, &[AxisSpec::boxed(32.0)]).unwrap());
        let h = ham(&g, "0", "1");
        let s0 = 1.0 / 2.0f64.sqrt();
        let psi = packet(g.clone(), 0.0, s0, 4.0);
        let dt = 0.05;
        let out = step_order1(&psi, &h, 0.0, dt, Mode::Real).unwrap();
        let st = (s0 * s0 + (dt / s0).powi(2)).sqrt();
        for (i, a) in out.amplitudes().iter().enumerate() {
            let x = g.point(i)[0];
            let exact = (-(x - 8.0 * dt).powi(2) / (2.0 * st * st)).exp() / (2.0 * PI * st * st).sqrt();
            assert!((a.norm_sqr() - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn order1_is_unitary() {
        let g = Arc::new(make_grid(128, 1.0, &[AxisSpec::alpha_scaled()]).unwrap());
        let h = ham(&g, "x^2 + 0.3*x^4", "1");
        let mut psi = packet(g, 1.0, 0.8, 0.5).normalize().unwrap().0;
        let mut stepper = Stepper::new();
        for i in 0..2000 {
            psi = stepper.step(&psi, &h, i as f64 * 1e-3, 1e-3, Order::First, Mode::Real).unwrap();
        }
        assert!((psi.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn parity_is_preserved() {
        let g = Arc::new(make_grid(128, 1.0, &[AxisSpec::boxed(12.0)]).unwrap());
        let h = ham(&g, "x^2 - 2*cos(x)", "1");
        let even = Wavefunction::from_fn(g.clone(), |p| Complex64::new((-(p[0] * p[0])).exp() * (1.0 + p[0] * p[0]), 0.0));
        for order in [Order::First, Order::Second, Order::Third] {
            let mut psi = even.clone();
            let mut stepper = Stepper::new();
            for i in 0..200 {
                psi = stepper.step(&psi, &h, i as f64 * 0.005, 0.005, order, Mode::Real).unwrap();
            }
            for i in 0..g.len() {
                let m = g.mirror_index(i);
                assert!((psi.amplitudes()[i] - psi.amplitudes()[m]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn imaginary_evolution_renormalizes_and_projects() {
        let g = Arc::new(make_grid(64, 1.0, &[AxisSpec::alpha_scaled()]).unwrap());
        let h = ham(&g, "x^2", "1");
        let psi = packet(g, 0.7, 1.3, 0.0);
        let mut cfg = StepConfig::default();
        cfg.mode = Mode::Imaginary;
        let mut plan = EvolvePlan::new(0.0, 6.0, cfg);
        plan.snapshot_times = vec![0.0, 1.0, 3.0, 6.0];
        let mut norms = Vec::new();
        let out = evolve_with(&psi, &h, &plan, |_, _, s| {
            norms.push(s.norm());
            Ok(())
        })
        .unwrap();
        assert!(norms.iter().all(|n| (n - 1.0).abs() < 1e-12));
        assert_eq!(out.snapshots.len(), 4);
        assert!((out.final_tau - 6.0).abs() < 1e-12);
        assert!((out.energy_trace.last().unwrap() - 1.0).abs() < 1e-3);
        assert_eq!(out.steps, 600);
    }

    #[test]
    fn zero_length_plan() {
        let g = Arc::new(make_grid(32, 1.0, &[AxisSpec::boxed(10.0)]).unwrap());
        let h = ham(&g, "x^2", "1");
        let psi = packet(g, 0.0, 1.0, 0.0);
        let plan = EvolvePlan::new(2.0, 2.0, StepConfig::default()).with_snapshots(vec![2.0]);
        let out = evolve(&psi, &h, &plan).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.final_state.amplitudes(), psi.amplitudes());
        assert!(EvolvePlan::new(1.0, 0.0, StepConfig::default()).validate().is_err());
    }

    #[test]
    fn dynamic_stepping_halves_on_drift() {
        let g = Arc::new(make_grid(128, 1.0, &[AxisSpec::alpha_scaled()]).unwrap());
        let h = ham(&g, "x^2 + x^4", "1");
        let psi = packet(g, 1.5, 0.5, 0.0).normalize().unwrap().0;
        let cfg = StepConfig {
            order: Order::Second,
            dynamic: true,
            dtau_base: 0.05,
            ..StepConfig::default()
        };
        let out = evolve(&psi, &h, &EvolvePlan::new(0.0, 0.2, cfg)).unwrap();
        assert!(out.min_dtau < 0.05);
        assert!(out.max_norm_drift <= DRIFT_LIMIT || out.min_dtau <= 0.05 / 2f64.powi(MAX_HALVINGS as i32));
    }

    #[test]
    fn time_dependent_alpha_is_sampled() {
        let g = Arc::new(make_grid(64, 1.0, &[AxisSpec::alpha_scaled()]).unwrap());
        let h = ham(&g, "x^2", "1 + t");
        assert!(!h.is_static());
        assert_eq!(h.alpha_at(2.0).unwrap(), 3.0);
        let f = h.frozen(2.0).unwrap();
        assert!(f.is_static());
        let bad = ham(&g, "x^2", "1 - t");
        assert!(matches!(bad.alpha_at(2.0), Err(PropagatorError::NonPositiveAlpha { .. })));
        assert!(matches!(
            Hamiltonian::new(g.clone(), &parse_potential("x").unwrap(), &parse_potential("x").unwrap()),
            Err(PropagatorError::AlphaNotTimeOnly)
        ));
        assert!(matches!(
            Hamiltonian::new(g, &parse_potential("y").unwrap(), &parse_potential("1").unwrap()),
            Err(PropagatorError::PotentialDims { .. })
        ));
    }

    #[test]
    fn snapshot_moments_follow_free_packet() {
        let g = Arc::new(make_grid(1024, 1.0, &[AxisSpec::boxed(32.0)]).unwrap());
        let h = ham(&g, "0", "1");
        let s0 = 1.0 / 2.0f64.sqrt();
        let psi = packet(g, 0.0, s0, 4.0);
        let plan = EvolvePlan::new(0.0, 0.5, StepConfig::default()).with_snapshots(vec![0.5]);
        let out = evolve(&psi, &h, &plan).unwrap();
        let (mean, spread) = moments(&out.final_state).unwrap();
        assert!((mean[0] - 4.0).abs() < 1e-3);
        // σ(τ) = √(σ0² + (τ/σ0)²) = √(0.5 + 0.5) = 1.
        assert!((spread[0] - 1.0).abs() < 1e-3, "{}", spread[0]);
        assert!((out.snapshots[0].tau - 0.5).abs() < 1e-12);
    }
}
