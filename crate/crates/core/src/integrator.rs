//! Integrating-factor SSP-RK2 time stepping with CFL control.
//!
//! Dissipation is applied exactly per mode through `E = exp(−κ|k|^γ dt)`;
//! the advection term `−u·∇θ` is advanced by the two-stage SSP scheme
//!
//! ```text
//! θ₁      = E (θ + dt N(θ))
//! θ_{n+1} = ½ E θ + ½ (θ₁ + dt N(θ₁))
//! ```

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, ValidatedConfig};
use crate::diagnostics::{DiagnosticsRecord, ShiftSet};
use crate::error::{Error, Result};
use crate::operators::{velocity, ModelParams};
use crate::spectral::{self, apply_real_multiplier, ScalarField, TorusGrid, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepPolicy {
    pub cfl_safety: f64,
    pub dt_max: f64,
    /// Steps shorter than this end the run with [`Termination::DtFloor`].
    pub dt_min: f64,
    pub advection_on: bool,
    pub dealias_on: bool,
    /// `sup|∇θ|` above this is reported as blow-up.
    pub grad_ceiling: Option<f64>,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            cfl_safety: 0.5,
            dt_max: 1e-2,
            dt_min: 1e-9,
            advection_on: true,
            dealias_on: true,
            grad_ceiling: None,
        }
    }
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config("stepper.cfl_safety must lie in (0,1]".into()));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max && self.dt_max.is_finite()) {
            return Err(Error::Config("stepper needs 0 < dt_min < dt_max".into()));
        }
        if let Some(c) = self.grad_ceiling {
            if !(c > 0.0) {
                return Err(Error::Config("stepper.grad_ceiling must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub theta: ScalarField,
    pub t: f64,
    pub step_count: u64,
    /// Left-endpoint accumulation of `∫ ‖∇θ‖_sup dt`.
    pub bkm_integral: f64,
}

impl SimState {
    pub fn new(theta: ScalarField) -> Self {
        Self {
            theta,
            t: 0.0,
            step_count: 0,
            bkm_integral: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    BlowUp,
    DtFloor,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowUp => "blow-up",
            Termination::DtFloor => "dt-floor",
        }
    }
}

/// `min(dt_max, safety·Δx / max(‖u‖_sup, 1e−30))`.
pub fn cfl_dt(u: &VectorField, grid: &TorusGrid, policy: &StepPolicy) -> f64 {
    let speed = u.sup_norm().max(1e-30);
    policy.dt_max.min(policy.cfl_safety * grid.dx() / speed)
}

fn advection_term(theta: &ScalarField, params: &ModelParams, policy: &StepPolicy) -> Result<ScalarField> {
    let u = velocity(theta, params.alpha())?;
    let grad = spectral::gradient(theta);
    let adv = u.dot(&grad)?;
    let adv = if policy.dealias_on { spectral::dealias(&adv) } else { adv };
    Ok(adv.scaled(-1.0))
}

fn propagate(f: &ScalarField, params: &ModelParams, dt: f64) -> Result<ScalarField> {
    let (kappa, gamma) = (params.kappa(), params.gamma());
    if kappa == 0.0 {
        return Ok(f.clone());
    }
    apply_real_multiplier(f, |k| {
        let mag = k.iter().map(|v| v * v).sum::<f64>().sqrt();
        (-kappa * mag.powf(gamma) * dt).exp()
    })
}

/// One step of length `dt`.
pub fn step(state: &SimState, params: &ModelParams, policy: &StepPolicy, dt: f64) -> Result<SimState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let theta = &state.theta;
    let grad_sup = spectral::gradient(theta).sup_norm();
    let next = if policy.advection_on {
        let n0 = advection_term(theta, params, policy)?;
        let stage = propagate(&theta.combine(1.0, &n0, dt)?, params, dt)?;
        let n1 = advection_term(&stage, params, policy)?;
        let half = propagate(theta, params, dt)?;
        half.combine(0.5, &stage.combine(1.0, &n1, dt)?, 0.5)?
    } else {
        propagate(theta, params, dt)?
    };
    if next.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUpSuspected(format!("non-finite values at t = {}", state.t + dt)));
    }
    if let Some(ceiling) = policy.grad_ceiling {
        let g = spectral::gradient(&next).sup_norm();
        if g > ceiling {
            return Err(Error::BlowUpSuspected(format!(
                "sup|grad theta| = {g:e} exceeds {ceiling:e} at t = {}",
                state.t + dt
            )));
        }
    }
    Ok(SimState {
        theta: next,
        t: state.t + dt,
        step_count: state.step_count + 1,
        bkm_integral: state.bkm_integral + dt * grad_sup,
    })
}

/// Advances to `t_end`, calling `observe(state, dt)` after every accepted
/// step. Blow-up is an outcome, not an error.
pub fn run_until(
    mut state: SimState,
    params: &ModelParams,
    policy: &StepPolicy,
    t_end: f64,
    mut observe: impl FnMut(&SimState, f64) -> Result<()>,
) -> Result<(SimState, Termination)> {
    policy.validate()?;
    let eps = 1e-12 * t_end.abs().max(1.0);
    while state.t < t_end - eps {
        let dt_cfl = if policy.advection_on {
            cfl_dt(&velocity(&state.theta, params.alpha())?, state.theta.grid(), policy)
        } else {
            policy.dt_max
        };
        if dt_cfl < policy.dt_min {
            return Ok((state, Termination::DtFloor));
        }
        let dt = dt_cfl.min(t_end - state.t);
        match step(&state, params, policy, dt) {
            Ok(next) => state = next,
            Err(Error::BlowUpSuspected(_)) => return Ok((state, Termination::BlowUp)),
            Err(e) => return Err(e),
        }
        observe(&state, dt)?;
    }
    Ok((state, Termination::Completed))
}

/// Result of a configured run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: SimState,
    pub termination: Termination,
}

/// Runs a configuration from its seeded initial condition.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let v = config.validate()?;
    let theta = v.initial.generate(&v.grid, v.seed)?;
    run_from(&v, SimState::new(theta))
}

/// Runs a validated configuration from a given state, recording diagnostics
/// at the first state, every `cadence` steps, and the last state.
pub fn run_from(v: &ValidatedConfig, state: SimState) -> Result<RunOutcome> {
    let shifts = ShiftSet::dyadic(&v.grid);
    let settings = &v.diagnostics;
    let measure = |s: &SimState, dt: f64| {
        DiagnosticsRecord::measure(&s.theta, s.t, dt, s.bkm_integral, settings, &shifts)
    };
    let mut records = vec![measure(&state, 0.0)?];
    let mut last_recorded = state.step_count;
    let mut last_dt = 0.0;
    let (final_state, termination) = run_until(state, &v.params, &v.policy, v.t_end, |s, dt| {
        last_dt = dt;
        if s.step_count % settings.cadence as u64 == 0 {
            records.push(measure(s, dt)?);
            last_recorded = s.step_count;
        }
        Ok(())
    })?;
    if final_state.step_count != last_recorded {
        records.push(measure(&final_state, last_dt)?);
    }
    Ok(RunOutcome {
        records,
        final_state,
        termination,
    })
}

/// `λ^{γ−2α} θ(λx)` on the same grid.
pub fn rescale_solution(theta: &ScalarField, lambda: usize, alpha: f64, gamma: f64) -> Result<ScalarField> {
    let grid = theta.grid();
    let n = grid.points_per_dim();
    if lambda == 0 || !n.is_multiple_of(lambda) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must divide N = {n}")));
    }
    let factor = (lambda as f64).powf(gamma - 2.0 * alpha);
    let v = theta.values();
    let values = (0..grid.len())
        .map(|idx| {
            let m = grid.unflatten(idx);
            let mut target = [0usize; 2];
            for i in 0..grid.dim() {
                target[i] = (m[i] * lambda) % n;
            }
            factor * v[grid.flatten(&target[..grid.dim()])]
        })
        .collect();
    ScalarField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn cfl_examples() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        let p = StepPolicy {
            dt_max: 1.0,
            ..StepPolicy::default()
        };
        let zero = VectorField::new(vec![ScalarField::zeros(&g), ScalarField::zeros(&g)]).unwrap();
        assert_eq!(cfl_dt(&zero, &g, &p), 1.0);
        let unit = VectorField::new(vec![ScalarField::constant(&g, 1.0), ScalarField::zeros(&g)]).unwrap();
        assert!((cfl_dt(&unit, &g, &p) - 0.5 * 2.0 * PI / 64.0).abs() < 1e-15);
    }

    #[test]
    fn linear_flow_is_exact() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let params = ModelParams::new(2, 0.5, 1.0, 1.0).unwrap();
        let policy = StepPolicy {
            advection_on: false,
            dt_max: 0.1,
            ..StepPolicy::default()
        };
        let theta = ScalarField::from_fn(&g, |x| x[0].cos()).unwrap();
        let (end, term) = run_until(SimState::new(theta), &params, &policy, 1.0, |_, _| Ok(())).unwrap();
        assert_eq!(term, Termination::Completed);
        let exact = ScalarField::from_fn(&g, |x| (-1.0f64).exp() * x[0].cos()).unwrap();
        assert!(end.theta.max_abs_diff(&exact) < 1e-10 * (-1.0f64).exp());
    }

    #[test]
    fn inviscid_constant_is_steady() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let params = ModelParams::inviscid(2, 0.5, 1.0).unwrap();
        let state = SimState::new(ScalarField::constant(&g, 2.5));
        let next = step(&state, &params, &StepPolicy::default(), 0.1).unwrap();
        assert_eq!(next.theta.values(), state.theta.values());
        assert_eq!(next.bkm_integral, 0.0);
    }

    #[test]
    fn zero_length_run() {
        let g = make_grid(1, 16, 2.0 * PI).unwrap();
        let params = ModelParams::new(1, 0.5, 1.0, 1.0).unwrap();
        let theta = ScalarField::from_fn(&g, |x| x[0].sin()).unwrap();
        let mut calls = 0;
        let (end, term) = run_until(SimState::new(theta.clone()), &params, &StepPolicy::default(), 0.0, |_, _| {
            calls += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!((calls, term), (0, Termination::Completed));
        assert_eq!(end.theta.values(), theta.values());
    }

    #[test]
    fn rescale_examples() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].cos()).unwrap();
        assert_eq!(rescale_solution(&f, 1, 0.5, 1.0).unwrap().values(), f.values());
        let r = rescale_solution(&f, 2, 0.5, 1.0).unwrap();
        let expect = ScalarField::from_fn(&g, |x| (2.0 * x[0]).cos()).unwrap();
        assert!(r.max_abs_diff(&expect) < 1e-14);
        assert!(rescale_solution(&f, 3, 0.5, 1.0).is_err());
    }

    #[test]
    fn gradient_ceiling_reports_blow_up() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let params = ModelParams::new(2, 0.5, 1.0, 0.1).unwrap();
        let policy = StepPolicy {
            grad_ceiling: Some(0.5),
            ..StepPolicy::default()
        };
        let theta = ScalarField::from_fn(&g, |x| x[0].cos()).unwrap();
        let (_, term) = run_until(SimState::new(theta), &params, &policy, 1.0, |_, _| Ok(())).unwrap();
        assert_eq!(term, Termination::BlowUp);
    }
}
