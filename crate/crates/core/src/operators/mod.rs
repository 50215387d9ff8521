//! Fractional and nonlocal operators of the transport model.

mod quadrature;

pub use quadrature::{
    d_gamma_quadrature, fractional_laplacian_quadrature, read_calibrations, textbook_constant,
    write_calibrations, CalibrationRecord, QuadratureEstimate, QuadratureParams,
    SingularQuadrature,
};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, apply_real_multiplier, ScalarField, VectorField};

/// Tolerance used when deciding `γ = 2α`.
pub const REGIME_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }
}

/// Scaling regime: the sign of `γ − 2α`.
pub fn classify_regime(alpha: f64, gamma: f64) -> Regime {
    let gap = gamma - 2.0 * alpha;
    if gap.abs() <= REGIME_EPS {
        Regime::Critical
    } else if gap > 0.0 {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    }
}

/// Model exponents and viscosity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    dim: usize,
    alpha: f64,
    gamma: f64,
    kappa: f64,
}

impl ModelParams {
    pub fn new(dim: usize, alpha: f64, gamma: f64, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa must be > 0, got {kappa}")));
        }
        Self::checked(dim, alpha, gamma, kappa)
    }

    /// The `κ = 0` model, admitted only through this explicit constructor.
    pub fn inviscid(dim: usize, alpha: f64, gamma: f64) -> Result<Self> {
        Self::checked(dim, alpha, gamma, 0.0)
    }

    fn checked(dim: usize, alpha: f64, gamma: f64, kappa: f64) -> Result<Self> {
        if !(1..=spectral::MAX_DIM).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension {dim} not supported")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if !(gamma > 0.0 && gamma < 2.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0,2), got {gamma}")));
        }
        Ok(Self {
            dim,
            alpha,
            gamma,
            kappa,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self.alpha, self.gamma)
    }
}

fn power_multiplier(k: &[f64], s: f64) -> f64 {
    let mag = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    if mag == 0.0 {
        if s == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        mag.powf(s)
    }
}

/// `Λ^s f` with multiplier `|k|^s`; the zero mode is annihilated for `s ≠ 0`.
pub fn fractional_laplacian(f: &ScalarField, s: f64) -> Result<ScalarField> {
    let grid = f.grid();
    let kmax = grid.max_wavenumber();
    let kmin = 2.0 * std::f64::consts::PI / grid.period();
    if !kmax.powf(s).is_finite() || !kmin.powf(s).is_finite() || kmax.powf(s) == 0.0 {
        return Err(Error::InvalidParameter(format!("|k|^{s} overflows on this grid")));
    }
    apply_real_multiplier(f, |k| power_multiplier(k, s))
}

/// Velocity `u = ∇Λ^{2α−2}θ`: component `j` has multiplier `i k_j |k|^{2α−2}`.
pub fn velocity(theta: &ScalarField, alpha: f64) -> Result<VectorField> {
    let grid = theta.grid().clone();
    let mut comps = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let coeffs: Vec<Complex64> = theta
            .spectrum()
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                let k = grid.wavevector(idx);
                let mag = grid.wavenumber(idx);
                if mag == 0.0 || grid.is_nyquist(idx, axis) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k[axis] * mag.powf(2.0 * alpha - 2.0)) * c
                }
            })
            .collect();
        comps.push(ScalarField::from_spectrum(&grid, coeffs)?);
    }
    VectorField::new(comps)
}

/// Spectral divergence of a vector field.
pub fn divergence(u: &VectorField) -> Result<ScalarField> {
    let grid = u.grid();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (axis, comp) in u.components().iter().enumerate() {
        for (idx, c) in comp.spectrum().iter().enumerate() {
            if !grid.is_nyquist(idx, axis) {
                acc[idx] += Complex64::new(0.0, grid.wavevector(idx)[axis]) * c;
            }
        }
    }
    ScalarField::from_spectrum(grid, acc)
}

/// `Λ^γ(f²)` evaluated without aliasing: the square is formed on a grid
/// twice as fine and the result sampled back on the original nodes.
fn fractional_laplacian_of_square(f: &ScalarField, gamma: f64) -> Result<ScalarField> {
    let fine = spectral::upsample(f, 2)?;
    let square = fine.product(&fine)?;
    let lap = fractional_laplacian(&square, gamma)?;
    let grid = f.grid();
    let values = (0..grid.len())
        .map(|idx| {
            let m = grid.unflatten(idx);
            let fm: Vec<usize> = m[..grid.dim()].iter().map(|i| 2 * i).collect();
            lap.values()[lap.grid().flatten(&fm)]
        })
        .collect();
    ScalarField::new(grid, values)
}

/// Output of the spectral dissipation remainder.
#[derive(Clone, Debug)]
pub struct DissipationRemainder {
    pub field: ScalarField,
    /// Most negative nodal value.
    pub min_value: f64,
    /// Set when `min_value < −1e−6‖f‖²_sup`, a sign of under-resolution.
    pub under_resolved: bool,
}

/// `D_γ(f) = 2fΛ^γf − Λ^γ(f²)`.
pub fn d_gamma_spectral(f: &ScalarField, gamma: f64) -> Result<DissipationRemainder> {
    let lap = fractional_laplacian(f, gamma)?;
    let lap_sq = fractional_laplacian_of_square(f, gamma)?;
    let values: Vec<f64> = f
        .values()
        .iter()
        .zip(lap.values())
        .zip(lap_sq.values())
        .map(|((v, l), q)| 2.0 * v * l - q)
        .collect();
    let field = ScalarField::new(f.grid(), values)?;
    let min_value = field.min();
    let tol = 1e-6 * f.sup_norm().powi(2);
    Ok(DissipationRemainder {
        under_resolved: min_value < -tol,
        min_value,
        field,
    })
}

/// Sup over all nodes of `|fΛ^γf − ½Λ^γ(f²) − ½D_γ(f)| / ‖f‖²_sup`, with
/// `D_γ` supplied by the caller (quadrature or spectral).
pub fn identity_residual_with(f: &ScalarField, gamma: f64, d_gamma: &ScalarField) -> Result<f64> {
    let norm = f.sup_norm().powi(2);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let lap = fractional_laplacian(f, gamma)?;
    let lap_sq = fractional_laplacian_of_square(f, gamma)?;
    let worst = f
        .values()
        .iter()
        .zip(lap.values())
        .zip(lap_sq.values())
        .zip(d_gamma.values())
        .map(|(((v, l), q), d)| (v * l - 0.5 * q - 0.5 * d).abs())
        .fold(0.0, f64::max);
    Ok(worst / norm)
}

/// Pointwise-identity residual with the quadrature `D_γ` at every node.
pub fn pointwise_identity_residual(f: &ScalarField, gamma: f64) -> Result<f64> {
    let quad = SingularQuadrature::new(f.grid(), gamma, QuadratureParams::default_for(f.grid()))?;
    let d = quad.d_gamma_field(f)?;
    identity_residual_with(f, gamma, &d)
}

/// `D_γ(∇f) = Σ_j D_γ(∂_j f)` by quadrature at every node.
pub fn d_gamma_of_gradient(quad: &SingularQuadrature, f: &ScalarField) -> Result<ScalarField> {
    let grad = spectral::gradient(f);
    let mut total = ScalarField::zeros(f.grid());
    for comp in grad.components() {
        let d = quad.d_gamma_field(comp)?;
        total = total.combine(1.0, &d, 1.0)?;
    }
    Ok(total)
}

/// `min_x D_γ(∇f)(x)‖f‖^γ_sup / |∇f(x)|^{2+γ}` over nodes where
/// `|∇f(x)| ≥ ½ sup|∇f|`.
pub fn nonlinear_lower_bound_ratio_with(quad: &SingularQuadrature, f: &ScalarField) -> Result<f64> {
    let gamma = quad.gamma();
    let grad_mag = spectral::gradient(f).magnitude();
    let sup = grad_mag.iter().cloned().fold(0.0, f64::max);
    if sup == 0.0 {
        return Err(Error::InvalidParameter("field is constant".into()));
    }
    let d = d_gamma_of_gradient(quad, f)?;
    let scale = f.sup_norm().powf(gamma);
    Ok(grad_mag
        .iter()
        .zip(d.values())
        .filter(|(g, _)| **g >= 0.5 * sup)
        .map(|(g, dv)| dv * scale / g.powf(2.0 + gamma))
        .fold(f64::INFINITY, f64::min))
}

pub fn nonlinear_lower_bound_ratio(f: &ScalarField, gamma: f64) -> Result<f64> {
    let quad = SingularQuadrature::new(f.grid(), gamma, QuadratureParams::default_for(f.grid()))?;
    nonlinear_lower_bound_ratio_with(&quad, f)
}

/// `δ_hθ(x) = θ(x+h) − θ(x)` for a lattice shift `h` (in grid steps).
pub fn lattice_difference(theta: &ScalarField, shift: &[i64]) -> Result<ScalarField> {
    let grid = theta.grid();
    let v = theta.values();
    let values = (0..grid.len())
        .map(|i| v[grid.shifted(i, shift)] - v[i])
        .collect();
    ScalarField::new(grid, values)
}

/// Normalized finite-difference lower-bound ratio
/// `D_γ(δ_hθ)(x)|h|^γ‖θ‖^γ_sup / |δ_hθ(x)|^{γ+2}`, minimized over nodes where
/// `|δ_hθ(x)| ≥ ½ max|δ_hθ|`. Returns `None` when `δ_hθ ≡ 0`.
pub fn finite_difference_ratio(
    quad: &SingularQuadrature,
    theta: &ScalarField,
    shift: &[i64],
) -> Result<Option<f64>> {
    let gamma = quad.gamma();
    let grid = theta.grid();
    let diff = lattice_difference(theta, shift)?;
    let peak = diff.sup_norm();
    if peak <= 1e-14 * theta.sup_norm().max(f64::MIN_POSITIVE) {
        return Ok(None);
    }
    let h = grid.dx() * shift.iter().map(|s| (*s as f64).powi(2)).sum::<f64>().sqrt();
    let scale = h.powf(gamma) * theta.sup_norm().powf(gamma);
    let d = quad.d_gamma_field(&diff)?;
    Ok(Some(
        diff.values()
            .iter()
            .zip(d.values())
            .filter(|(g, _)| g.abs() >= 0.5 * peak)
            .map(|(g, dv)| dv * scale / g.abs().powf(gamma + 2.0))
            .fold(f64::INFINITY, f64::min),
    ))
}
