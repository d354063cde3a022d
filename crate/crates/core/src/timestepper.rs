//! Integrating-factor RK4 time integration.
//!
//! Each evolved field `v` obeys `dv̂/dt = λ(|k|²) v̂ + N(v)` with a diagonal
//! diffusive symbol `λ`. The linear part is propagated exactly with
//! `e^{λh}`; the nonlinear part is advanced with the classical four-stage
//! scheme:
//!
//! ```text
//! a  = E½ (v + h/2 N(v))
//! b  = E½ v + h/2 N(a)
//! c  = E v + h E½ N(b)
//! v' = E v + h/6 (E N(v) + 2 E½ (N(a) + N(b)) + N(c))
//! ```

use std::sync::Arc;

use thiserror::Error;

use crate::diagnostics::{self, DiagnosticRecord};
use crate::dynamics::{linear_rates, nonlinear_terms, DynamicsError, PhysParams, RhsKind, SystemState};
use crate::spectral::{curl, dealias, leray_project, Grid, SpectralVectorField};

/// Hard upper bound on [`suggest_dt`].
pub const MAX_DT: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),
    #[error("state belongs to a different system than {0:?}")]
    KindMismatch(RhsKind),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("non-finite coefficients at t = {t}; last finite blow-up indicator α‖∇u‖ = {indicator:.6e}")]
    NonFinite { t: f64, indicator: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between diagnostic samples.
    pub record_every: usize,
    /// Safety fraction used by [`suggest_dt`].
    pub cfl_safety: f64,
    /// Keep a copy of the state at every recorded time.
    pub retain_snapshots: bool,
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64, record_every: usize) -> Result<Self, StepError> {
        let config = Self {
            dt,
            t_end,
            record_every,
            cfl_safety: 0.5,
            retain_snapshots: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), StepError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(StepError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(StepError::InvalidConfig(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.record_every < 1 {
            return Err(StepError::InvalidConfig("record_every must be at least 1".into()));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(StepError::InvalidConfig(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }
}

/// Precomputed integrating factors for one system, parameter set and step.
pub struct Integrator {
    kind: RhsKind,
    params: PhysParams,
    dt: f64,
    full: Vec<Vec<f64>>,
    half: Vec<Vec<f64>>,
}

impl Integrator {
    pub fn new(grid: &Arc<Grid>, kind: RhsKind, params: PhysParams, dt: f64) -> Result<Self, StepError> {
        params.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(StepError::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        let n = grid.n();
        let mut full = Vec::new();
        let mut half = Vec::new();
        for rate in linear_rates(kind, &params) {
            let mut f = Vec::with_capacity(grid.points());
            let mut h = Vec::with_capacity(grid.points());
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let lambda = rate(grid.k_squared(i, j, l));
                        f.push((lambda * dt).exp());
                        h.push((lambda * dt * 0.5).exp());
                    }
                }
            }
            full.push(f);
            half.push(h);
        }
        Ok(Self {
            kind,
            params,
            dt,
            full,
            half,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kind(&self) -> RhsKind {
        self.kind
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    /// Advances `state` by one step of size `dt`.
    pub fn step(&self, state: &SystemState) -> Result<SystemState, StepError> {
        if !state.matches(self.kind) {
            return Err(StepError::KindMismatch(self.kind));
        }
        state.validate()?;
        let h = self.dt;
        let v: Vec<SpectralVectorField> = state.fields().into_iter().map(dealias).collect();
        let nl = |fields: &[SpectralVectorField]| {
            let refs: Vec<&SpectralVectorField> = fields.iter().collect();
            nonlinear_terms(&refs, self.kind, &self.params)
        };
        let apply = |factors: &[Vec<f64>], fields: &[SpectralVectorField]| -> Vec<SpectralVectorField> {
            fields.iter().zip(factors).map(|(f, e)| scale_modes(f, e)).collect()
        };

        let k1 = nl(&v)?;
        let e_half_v = apply(&self.half, &v);
        let e_full_v = apply(&self.full, &v);

        let a: Vec<_> = apply(&self.half, &combine(&v, &[(0.5 * h, &k1)]));
        let k2 = nl(&a)?;
        let b = combine(&e_half_v, &[(0.5 * h, &k2)]);
        let k3 = nl(&b)?;
        let c = combine(&e_full_v, &[(h, &apply(&self.half, &k3))]);
        let k4 = nl(&c)?;

        let e_k1 = apply(&self.full, &k1);
        let k23 = combine(&k2, &[(1.0, &k3)]);
        let e_k23 = apply(&self.half, &k23);
        let next = combine(&e_full_v, &[(h / 6.0, &e_k1), (h / 3.0, &e_k23), (h / 6.0, &k4)]);

        let next: Vec<SpectralVectorField> = next
            .iter()
            .map(|f| {
                let projected = leray_project(f);
                SpectralVectorField::from_coefficients(projected.grid(), projected.components().clone())
                    .expect("grid-sized components")
            })
            .collect();
        let out = state.with_fields(next, state.t() + h);
        if !out.is_finite() {
            return Err(StepError::NonFinite {
                t: out.t(),
                indicator: blowup_value(state, &self.params),
            });
        }
        Ok(out)
    }
}

fn scale_modes(field: &SpectralVectorField, factors: &[f64]) -> SpectralVectorField {
    let comps = [0, 1, 2].map(|c| {
        field
            .component(c)
            .iter()
            .zip(factors)
            .map(|(z, &e)| z * e)
            .collect::<Vec<_>>()
    });
    SpectralVectorField::from_raw(field.grid(), comps)
}

fn combine(base: &[SpectralVectorField], terms: &[(f64, &Vec<SpectralVectorField>)]) -> Vec<SpectralVectorField> {
    base.iter()
        .enumerate()
        .map(|(idx, f)| {
            let mut out = f.clone();
            for (s, fields) in terms {
                out.axpy(*s, &fields[idx]);
            }
            out
        })
        .collect()
}

fn blowup_value(state: &SystemState, params: &PhysParams) -> f64 {
    let alpha = match state {
        SystemState::VvvMhd(_) => params.alpha,
        SystemState::Mhd(_) => 0.0,
    };
    alpha * crate::spectral::norm(state.velocity(), crate::spectral::NormOrder::H1)
}

/// One integrating-factor RK4 step of size `dt`.
pub fn step(state: &SystemState, params: &PhysParams, kind: RhsKind, dt: f64) -> Result<SystemState, StepError> {
    Integrator::new(state.grid(), kind, *params, dt)?.step(state)
}

/// Reads a state at a recorded time and adds diagnostics to its record.
pub trait Observer {
    fn observe(&mut self, state: &SystemState, record: &mut DiagnosticRecord);
}

impl<F: FnMut(&SystemState, &mut DiagnosticRecord)> Observer for F {
    fn observe(&mut self, state: &SystemState, record: &mut DiagnosticRecord) {
        self(state, record)
    }
}

/// Diagnostic records at the sampled times, with optional state snapshots.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub records: Vec<DiagnosticRecord>,
    pub snapshots: Option<Vec<SystemState>>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn last(&self) -> Option<&DiagnosticRecord> {
        self.records.last()
    }
}

#[derive(Debug, Error)]
#[error("integration aborted: {source}")]
pub struct IntegrateError {
    #[source]
    pub source: StepError,
    pub partial: Trajectory,
    /// Last finite state reached.
    pub last_state: Option<Box<SystemState>>,
}

/// Outcome of a successful [`integrate`] call.
#[derive(Debug)]
pub struct Integration {
    pub trajectory: Trajectory,
    pub final_state: SystemState,
}

/// Integrates from `initial.t()` to `initial.t() + config.t_end`, recording
/// at the start, every `record_every` steps, and at the end.
///
/// The last step is shortened if `t_end` is not a multiple of `dt`.
pub fn integrate(
    initial: &SystemState,
    params: &PhysParams,
    kind: RhsKind,
    config: &StepperConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Integration, IntegrateError> {
    let fail = |source: StepError, partial: Trajectory, last: Option<SystemState>| IntegrateError {
        source,
        partial,
        last_state: last.map(Box::new),
    };
    let mut trajectory = Trajectory {
        records: Vec::new(),
        snapshots: config.retain_snapshots.then(Vec::new),
    };
    if let Err(e) = config.validate() {
        return Err(fail(e, trajectory, None));
    }
    if !initial.matches(kind) {
        return Err(fail(StepError::KindMismatch(kind), trajectory, None));
    }
    if let Err(e) = initial.validate() {
        return Err(fail(e.into(), trajectory, None));
    }
    let integrator = match Integrator::new(initial.grid(), kind, *params, config.dt) {
        Ok(i) => i,
        Err(e) => return Err(fail(e, trajectory, None)),
    };

    let t0 = initial.t();
    let steps = step_count(config.t_end, config.dt);
    let shortened_last = steps > 0 && (config.t_end - steps as f64 * config.dt).abs() > 1e-9 * config.dt;
    // Times sit on multiples of dt when the start does, so a run restarted
    // from a checkpoint reproduces the times of an unbroken run.
    let ratio = t0 / config.dt;
    let anchor = (ratio - ratio.round()).abs() <= 1e-9 * ratio.abs().max(1.0);
    let time_at = |s: usize| {
        if anchor {
            (ratio.round() + s as f64) * config.dt
        } else {
            t0 + s as f64 * config.dt
        }
    };
    let record = |state: &SystemState, trajectory: &mut Trajectory, observers: &mut [&mut dyn Observer]| {
        let mut rec = diagnostics::norms_record(state);
        for obs in observers.iter_mut() {
            obs.observe(state, &mut rec);
        }
        trajectory.records.push(rec);
        if let Some(snaps) = trajectory.snapshots.as_mut() {
            snaps.push(state.clone());
        }
    };

    let mut state = initial.clone();
    record(&state, &mut trajectory, observers);
    for s in 1..=steps {
        let is_last = s == steps;
        let (target, result) = if is_last && shortened_last {
            let target = t0 + config.t_end;
            let h = target - state.t();
            (target, Integrator::new(state.grid(), kind, *params, h).and_then(|i| i.step(&state)))
        } else {
            (time_at(s), integrator.step(&state))
        };
        let mut next = match result {
            Ok(next) => next,
            Err(e) => return Err(fail(e, trajectory, Some(state))),
        };
        next = next.with_time(target);
        state = next;
        if s % config.record_every == 0 || is_last {
            record(&state, &mut trajectory, observers);
        }
    }
    Ok(Integration {
        trajectory,
        final_state: state,
    })
}

/// Number of steps needed to cover `t_end` with step `dt` (last one possibly
/// shorter).
pub fn step_count(t_end: f64, dt: f64) -> usize {
    if t_end <= 0.0 {
        return 0;
    }
    let ratio = t_end / dt;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
        rounded as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Advective time-step bound `safety · min(Δx/max|u|, Δx/max|b|, 1/max|w|)`,
/// capped at [`MAX_DT`]. For MHD states `w` is the vorticity `∇×U`.
pub fn suggest_dt(state: &SystemState, cfl_safety: f64) -> f64 {
    let grid = state.grid();
    let dx = grid.spacing();
    let vorticity = match state {
        SystemState::VvvMhd(s) => s.vorticity.clone(),
        SystemState::Mhd(s) => curl(&s.velocity),
    };
    let mut bound = f64::INFINITY;
    let u_max = state.velocity().to_physical().max_magnitude();
    if u_max > 0.0 {
        bound = bound.min(dx / u_max);
    }
    let b_max = state.magnetic().to_physical().max_magnitude();
    if b_max > 0.0 {
        bound = bound.min(dx / b_max);
    }
    let w_max = vorticity.to_physical().max_magnitude();
    if w_max > 0.0 {
        bound = bound.min(1.0 / w_max);
    }
    (cfl_safety * bound).min(MAX_DT)
}

impl SystemState {
    pub fn with_time(self, t: f64) -> Self {
        match self {
            SystemState::Mhd(mut s) => {
                s.t = t;
                SystemState::Mhd(s)
            }
            SystemState::VvvMhd(mut s) => {
                s.t = t;
                SystemState::VvvMhd(s)
            }
        }
    }
}
