use std::f64::consts::PI;

use proptest::prelude::*;

use fracflow::blowup::{j_functional, j_functional_composite, riccati_envelope, RadialProfile};
use fracflow::diagnostics::{holder_seminorm, ShiftSet};
use fracflow::initial::InitialCondition;
use fracflow::operators::{
    d_gamma_spectral, fractional_laplacian, velocity, QuadratureParams, SingularQuadrature,
};
use fracflow::oracles::{
    d_gamma_direct, dft_direct, fd_gradient, holder_dense, riccati_blowup_rk4, tolerance, OracleBudget,
};
use fracflow::spectral::{apply_real_multiplier, upsample};
use fracflow::{make_grid, ScalarField};

fn random_field(values: Vec<f64>, points: usize) -> ScalarField {
    let grid = make_grid(2, points, 2.0 * PI).unwrap();
    ScalarField::new(&grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fft_matches_direct_dft(v in proptest::collection::vec(-1.0f64..1.0, 256)) {
        let f = random_field(v, 16);
        let direct = dft_direct(&f, &OracleBudget::default()).unwrap();
        let scale = direct.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let worst = f
            .spectrum()
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        prop_assert!(worst <= tolerance::DFT * scale);
    }

    #[test]
    fn fractional_multiplier_matches_direct_sum(v in proptest::collection::vec(-1.0f64..1.0, 256)) {
        let f = random_field(v, 16);
        let grid = f.grid().clone();
        let fast = apply_real_multiplier(&f, |k| k.iter().map(|x| x * x).sum::<f64>().powf(0.35)).unwrap();
        let coeffs = dft_direct(&f, &OracleBudget::default()).unwrap();
        let scale = fast.sup_norm();
        for idx in 0..grid.len() {
            let x = grid.coords(idx);
            let mut acc = 0.0;
            for (m, c) in coeffs.iter().enumerate() {
                let k = grid.wavevector(m);
                let mult = (k[0] * k[0] + k[1] * k[1]).powf(0.35);
                let phase = k[0] * x[0] + k[1] * x[1];
                acc += mult * (c.re * phase.cos() - c.im * phase.sin());
            }
            prop_assert!((acc - fast.values()[idx]).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn velocity_matches_refined_finite_differences() {
    let grid = make_grid(2, 32, 2.0 * PI).unwrap();
    let theta = ScalarField::from_fn(&grid, |x| x[0].cos() + 0.5 * (x[0] + 2.0 * x[1]).sin()).unwrap();
    let alpha = 0.5;
    let u = velocity(&theta, alpha).unwrap();
    let psi = fractional_laplacian(&theta, 2.0 * alpha - 2.0).unwrap();
    let factor = 16;
    let fine = upsample(&psi, factor).unwrap();
    let fd = fd_gradient(&fine, 4).unwrap();
    let scale = u.sup_norm();
    for idx in 0..grid.len() {
        let m = grid.unflatten(idx);
        let fine_idx = fine.grid().flatten(&[m[0] * factor, m[1] * factor]);
        for axis in 0..2 {
            let diff = (u.component(axis).values()[idx] - fd.component(axis).values()[fine_idx]).abs();
            assert!(diff <= tolerance::VELOCITY_FD * scale, "node {idx} axis {axis}: {diff:e}");
        }
    }
}

#[test]
fn fourth_order_differences_beat_second_order() {
    let grid = make_grid(2, 64, 2.0 * PI).unwrap();
    let f = InitialCondition::MultiMode {
        amplitude: 1.0,
        modes: 6,
        max_wavenumber: 4,
    }
    .generate(&grid, 8)
    .unwrap();
    let exact = fracflow::spectral::gradient(&f);
    let err = |order| {
        let fd = fd_gradient(&f, order).unwrap();
        (0..2)
            .map(|i| fd.component(i).max_abs_diff(exact.component(i)))
            .fold(0.0, f64::max)
    };
    assert!(err(4) < err(2));
}

#[test]
fn direct_d_gamma_agrees_with_quadrature() {
    let grid = make_grid(2, 16, 2.0 * PI).unwrap();
    let f = ScalarField::from_fn(&grid, |x| x[0].cos() + 0.3 * (2.0 * x[1]).sin()).unwrap();
    let budget = OracleBudget::default();
    for gamma in [0.5, 1.0, 1.5] {
        let quad = SingularQuadrature::new(&grid, gamma, QuadratureParams::default_for(&grid)).unwrap();
        for idx in [0, 37, 120, 201] {
            let fast = quad.d_gamma_at(&f, idx).unwrap().value;
            let slow = d_gamma_direct(&f, gamma, idx, 2, 4, &budget).unwrap();
            assert!(
                (fast - slow).abs() <= tolerance::D_GAMMA * slow.abs(),
                "gamma {gamma} node {idx}: {fast} vs {slow}"
            );
        }
    }
}

#[test]
fn oracle_budget_blocks_large_grids() {
    let grid = make_grid(2, 128, 2.0 * PI).unwrap();
    let f = ScalarField::zeros(&grid);
    assert!(dft_direct(&f, &OracleBudget::default()).is_err());
    assert!(holder_dense(&f, 0.5, &OracleBudget::default()).is_err());
}

#[test]
fn quadrature_d_gamma_of_cosine() {
    let grid = make_grid(2, 32, 2.0 * PI).unwrap();
    let f = ScalarField::from_fn(&grid, |x| x[0].cos()).unwrap();
    let quad = SingularQuadrature::new(&grid, 1.0, QuadratureParams::default_for(&grid)).unwrap();
    let spectral = d_gamma_spectral(&f, 1.0).unwrap().field;
    let field = quad.d_gamma_field(&f).unwrap();
    assert!(field.min() >= 0.0);
    let scale = spectral.sup_norm();
    for idx in (0..grid.len()).step_by(grid.len() / 16) {
        let (a, b) = (field.values()[idx], spectral.values()[idx]);
        assert!((a - b).abs() <= 1e-2 * scale, "node {idx}: {a} vs {b}");
    }
    let at_origin = quad.d_gamma_at(&f, 0).unwrap().value;
    assert!((at_origin - spectral.values()[0]).abs() <= 1e-2 * spectral.values()[0]);
}

#[test]
fn dyadic_holder_is_a_close_lower_estimate() {
    let grid = make_grid(2, 16, 2.0 * PI).unwrap();
    for seed in 0..6 {
        let f = InitialCondition::MultiMode {
            amplitude: 1.0,
            modes: 5,
            max_wavenumber: 3,
        }
        .generate(&grid, seed)
        .unwrap();
        let dyadic = holder_seminorm(&f, 0.5, &ShiftSet::dyadic(&grid));
        let dense = holder_dense(&f, 0.5, &OracleBudget::default()).unwrap();
        assert!(dyadic <= dense * (1.0 + 1e-12));
        assert!(dyadic >= (1.0 - tolerance::HOLDER_DYADIC) * dense, "seed {seed}: {dyadic} vs {dense}");
    }
}

#[test]
fn j_quadratures_agree() {
    for g in [|r: f64| (-r * r).exp(), |r: f64| 1.0 / (1.0 + r * r).powi(2)] {
        let p = RadialProfile::from_fn(2, g, 40.0, 800).unwrap();
        let (a, b) = (j_functional(&p).unwrap(), j_functional_composite(&p).unwrap());
        assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} vs {b}");
    }
}

#[test]
fn riccati_closed_form_matches_rk4() {
    for (j0, c7, c8, m) in [(3.0, 0.8, 0.5, 1.5), (10.0, 0.1, 2.0, 1.2), (2.0, 0.5, 0.0, 1.0)] {
        let closed = riccati_envelope(j0, c7, c8, m, f64::INFINITY).unwrap();
        let rk4 = riccati_blowup_rk4(j0, c7, c8, m, 20_000).unwrap();
        assert!((closed - rk4).abs() <= 1e-8 * closed, "{closed} vs {rk4}");
    }
    assert!(riccati_envelope(1.0, 1.0, 4.0, 1.0, f64::INFINITY).is_none());
    assert!(riccati_blowup_rk4(1.0, 1.0, 4.0, 1.0, 1000).is_none());
}
