use std::f64::consts::PI;

use fracflow::blowup::{asymmetry, center_index};
use fracflow::diagnostics::{eta_of_t, holder_seminorm, vartheta_sup, EventualRegularityParams, ShiftSet};
use fracflow::initial::InitialCondition;
use fracflow::integrator::{self, run_until, step, SimState, StepPolicy, Termination};
use fracflow::operators::velocity;
use fracflow::presets::preset;
use fracflow::spectral::upsample;
use fracflow::{lab, make_grid, ModelParams, ScalarField};

fn evolve_fixed_dt(points: usize, steps: usize, dt: f64) -> ScalarField {
    let grid = make_grid(2, points, 2.0 * PI).unwrap();
    let theta = ScalarField::from_fn(&grid, |x| 1.0 + x[0].cos() * x[1].sin() + 0.5 * (2.0 * x[0] + x[1]).cos())
        .unwrap();
    let params = ModelParams::new(2, 0.5, 0.8, 0.1).unwrap();
    let policy = StepPolicy::default();
    let mut state = SimState::new(theta);
    for _ in 0..steps {
        state = step(&state, &params, &policy, dt).unwrap();
    }
    state.theta
}

fn restricted_error(coarse: &ScalarField, fine: &ScalarField) -> f64 {
    let factor = fine.grid().points_per_dim() / coarse.grid().points_per_dim();
    let cg = coarse.grid();
    (0..cg.len())
        .map(|idx| {
            let m = cg.unflatten(idx);
            let f = fine.grid().flatten(&[m[0] * factor, m[1] * factor]);
            (coarse.values()[idx] - fine.values()[f]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn nonlinear_step_self_converges() {
    let (steps, dt) = (100, 2e-3);
    let reference = evolve_fixed_dt(128, steps, dt);
    let e32 = restricted_error(&evolve_fixed_dt(32, steps, dt), &reference);
    let e64 = restricted_error(&evolve_fixed_dt(64, steps, dt), &reference);
    assert!(e64 <= e32 / 4.0, "{e32:e} -> {e64:e}");
}

#[test]
fn upsampled_state_evolves_consistently() {
    let coarse = evolve_fixed_dt(32, 10, 1e-3);
    let fine = evolve_fixed_dt(64, 10, 1e-3);
    let lifted = upsample(&coarse, 2).unwrap();
    assert!(lifted.max_abs_diff(&fine) < 1e-3);
}

#[test]
fn subcritical_preset_is_bounded_and_monotone() {
    let mut cfg = preset("subcritical").unwrap();
    cfg.run.t_end = 5.0;
    let out = integrator::run(&cfg).unwrap();
    assert_eq!(out.termination, Termination::Completed);
    let (bounded, _, _) = lab::gradient_bounded(&out.records);
    assert!(bounded);
    let report = lab::check_principles(&out.records, 1e-6);
    assert!(report.holds(), "{report:?}");
}

#[test]
fn inviscid_radial_bump_shows_blow_up() {
    let report = lab::blowup_probe(&preset("blowup-inviscid").unwrap()).unwrap();
    assert!(matches!(report.termination, Termination::BlowUp | Termination::DtFloor));
    assert!(report.termination_time < 1.0);
    assert!(report.j_increasing);
}

#[test]
fn blowup_probe_regression() {
    let report = lab::blowup_probe(&preset("blowup-probe").unwrap()).unwrap();
    assert_eq!(report.termination, Termination::BlowUp);
    assert!(report.j_increasing);
    let j0 = report.records[0].j_value.unwrap();
    assert!((j0 - 63.69743673886205).abs() < 1e-9 * j0);
    assert!((report.termination_time - 0.042297975193334).abs() < 1e-3 * report.termination_time);
    assert!(report.threshold_ratio > 1.0);
}

#[test]
fn small_bump_completes_below_threshold() {
    let report = lab::blowup_probe(&preset("blowup-control").unwrap()).unwrap();
    assert_eq!(report.termination, Termination::Completed);
    let horizon = report.termination_time;
    assert!(report.predicted_time.is_none_or(|t| t > horizon));
}

#[test]
fn probe_rejects_non_radial_or_subcritical_setups() {
    let mut cfg = preset("blowup-probe").unwrap();
    cfg.model.gamma = 0.7;
    assert!(lab::blowup_probe(&cfg).is_err());
    let mut cfg = preset("blowup-probe").unwrap();
    cfg.initial = fracflow::config::InitialSection::from_condition(
        &InitialCondition::GaussianBump {
            amplitude: 1.0,
            width: 0.5,
            count: 3,
            background: 0.0,
        },
        2,
    );
    assert!(matches!(lab::blowup_probe(&cfg), Err(fracflow::Error::NotRadial(_))));
}

#[test]
fn radial_symmetry_is_preserved() {
    let grid = make_grid(2, 64, 2.0 * PI).unwrap();
    let theta0 = InitialCondition::RadialBump {
        amplitude: 2.0,
        width: 0.8,
    }
    .generate(&grid, 0)
    .unwrap();
    let scale = theta0.sup_norm();
    let params = ModelParams::new(2, 0.5, 0.4, 0.2).unwrap();
    let mut worst = 0.0f64;
    let (state, term) = run_until(SimState::new(theta0), &params, &StepPolicy::default(), 0.5, |s, _| {
        worst = worst.max(asymmetry(&s.theta));
        Ok(())
    })
    .unwrap();
    assert_eq!(term, Termination::Completed);
    assert!(worst < 1e-8 * scale, "{worst:e}");

    let u = velocity(&state.theta, 0.5).unwrap();
    let c = center_index(&grid);
    let uc = (u.component(0).values()[c].powi(2) + u.component(1).values()[c].powi(2)).sqrt();
    assert!(uc < 1e-6 * u.sup_norm());
}

#[test]
fn holder_mechanism_after_vanishing_time() {
    let (alpha, gamma, beta, eta0) = (0.5, 0.5, 0.75, 0.01);
    let params = EventualRegularityParams::new(alpha, gamma, beta, eta0, 1.0).unwrap();
    let t_star = params.vanishing_time(gamma);
    let mut cfg = preset("supercritical").unwrap();
    cfg.grid.points = 32;
    cfg.run.t_end = 1.25 * t_star;
    let v = cfg.validate().unwrap();
    let theta0 = v.initial.generate(&v.grid, v.seed).unwrap();
    let shifts = ShiftSet::dyadic(&v.grid);
    let sup0 = theta0.sup_norm();
    let ceiling = 4.0 * sup0 / eta0.powf(beta);
    assert!(vartheta_sup(&theta0, eta0, beta, &shifts) <= ceiling);
    let mut below = true;
    let mut after = Vec::new();
    run_until(SimState::new(theta0), &v.params, &v.policy, v.t_end, |s, _| {
        let eta = eta_of_t(s.t, &params, gamma);
        below &= vartheta_sup(&s.theta, eta, beta, &shifts) <= ceiling * (1.0 + 1e-12);
        if s.t > t_star {
            after.push(holder_seminorm(&s.theta, beta, &shifts));
        }
        Ok(())
    })
    .unwrap();
    assert!(!after.is_empty());
    assert!(below);
    assert!(after.iter().all(|h| h.is_finite() && *h <= ceiling));
}
