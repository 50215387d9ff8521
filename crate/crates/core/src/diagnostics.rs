//! Monitored quantities: norms, Hölder and OSS estimators, and the closed-form
//! time scales of the regularity theory.

use serde::{Deserialize, Serialize};

use crate::blowup;
use crate::error::{Error, Result};
use crate::operators::{classify_regime, Regime};
use crate::spectral::{self, ScalarField, TorusGrid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub sup: f64,
    pub inf: f64,
    pub l2: f64,
    pub hs: f64,
    pub grad_sup: f64,
}

/// Sup/inf, `L²`, `Ḣ^s` and `sup|∇θ|` of a field.
pub fn norms(theta: &ScalarField, s: f64) -> Result<Norms> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("Sobolev order must be >= 0, got {s}")));
    }
    let grid = theta.grid();
    let l2 = (theta.values().iter().map(|v| v * v).sum::<f64>() * grid.cell_volume()).sqrt();
    Ok(Norms {
        sup: theta.max(),
        inf: theta.min(),
        l2,
        hs: homogeneous_sobolev(theta, s),
        grad_sup: spectral::gradient(theta).sup_norm(),
    })
}

/// `‖θ‖_{Ḣ^s} = (L^n Σ_k |k|^{2s} |θ̂_k|²)^{1/2}`; `s = 0` includes the mean.
pub fn homogeneous_sobolev(theta: &ScalarField, s: f64) -> f64 {
    let grid = theta.grid();
    let spec = theta.spectrum();
    let sum: f64 = spec
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let k = grid.wavenumber(idx);
            let w = if s == 0.0 { 1.0 } else if k == 0.0 { 0.0 } else { k.powf(2.0 * s) };
            w * c.norm_sqr()
        })
        .sum();
    (grid.volume() * sum).sqrt()
}

/// Lattice offsets used by the increment-based estimators.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSet {
    shifts: Vec<Vec<i64>>,
}

impl ShiftSet {
    /// `2^j` grid steps along the axes and diagonals (8 directions in 2-D,
    /// both signs in 1-D), up to half the period.
    pub fn dyadic(grid: &TorusGrid) -> Self {
        let half = grid.points_per_dim() as i64 / 2;
        let dirs: Vec<Vec<i64>> = if grid.dim() == 1 {
            vec![vec![1], vec![-1]]
        } else {
            vec![
                vec![1, 0],
                vec![-1, 0],
                vec![0, 1],
                vec![0, -1],
                vec![1, 1],
                vec![-1, -1],
                vec![1, -1],
                vec![-1, 1],
            ]
        };
        let mut shifts = Vec::new();
        let mut step = 1;
        while step <= half {
            for d in &dirs {
                shifts.push(d.iter().map(|c| c * step).collect());
            }
            step *= 2;
        }
        Self { shifts }
    }

    /// Every nonzero offset with all components in `[-radius, radius]`.
    pub fn dense(grid: &TorusGrid, radius: i64) -> Self {
        let side = (2 * radius + 1) as usize;
        let shifts = (0..side.pow(grid.dim() as u32))
            .map(|flat| {
                let mut rest = flat;
                (0..grid.dim())
                    .map(|_| {
                        let c = (rest % side) as i64 - radius;
                        rest /= side;
                        c
                    })
                    .collect::<Vec<i64>>()
            })
            .filter(|s| s.iter().any(|c| *c != 0))
            .collect();
        Self { shifts }
    }

    pub fn from_shifts(shifts: Vec<Vec<i64>>) -> Self {
        Self { shifts }
    }

    pub fn union(&self, other: &ShiftSet) -> Self {
        let mut shifts = self.shifts.clone();
        for s in &other.shifts {
            if !shifts.contains(s) {
                shifts.push(s.clone());
            }
        }
        Self { shifts }
    }

    pub fn shifts(&self) -> &[Vec<i64>] {
        &self.shifts
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }
}

fn shift_length_sq(grid: &TorusGrid, shift: &[i64]) -> f64 {
    shift.iter().map(|c| (*c as f64 * grid.dx()).powi(2)).sum()
}

fn max_increment(theta: &ScalarField, shift: &[i64]) -> f64 {
    let grid = theta.grid();
    let v = theta.values();
    (0..grid.len())
        .map(|idx| (v[grid.shifted(idx, shift)] - v[idx]).abs())
        .fold(0.0, f64::max)
}

/// `max |δ_hθ(x)| / (η² + |h|²)^{β/2}` over the shift set.
pub fn vartheta_sup(theta: &ScalarField, eta: f64, beta: f64, shifts: &ShiftSet) -> f64 {
    let grid = theta.grid();
    shifts
        .shifts()
        .iter()
        .map(|s| {
            let denom = (eta * eta + shift_length_sq(grid, s)).powf(0.5 * beta);
            max_increment(theta, s) / denom
        })
        .fold(0.0, f64::max)
}

/// Lower estimate of `[θ]_{C^β}` from the sampled increments.
pub fn holder_seminorm(theta: &ScalarField, beta: f64, shifts: &ShiftSet) -> f64 {
    vartheta_sup(theta, 0.0, beta, shifts)
}

/// Largest radius in the dyadic ladder `Δx, 2Δx, …` (capped by the torus
/// diameter) on which the sampled oscillation stays within `delta`.
pub fn oss_length(theta: &ScalarField, delta: f64) -> f64 {
    let grid = theta.grid();
    let shifts = ShiftSet::dyadic(grid);
    let increments: Vec<(f64, f64)> = shifts
        .shifts()
        .iter()
        .map(|s| (shift_length_sq(grid, s).sqrt(), max_increment(theta, s)))
        .collect();
    let diameter = grid.diameter();
    let mut radii = Vec::new();
    let mut r = grid.dx();
    while r < diameter {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(diameter);

    let tol = 1e-12 * diameter;
    let mut best = 0.0;
    for r in radii {
        let osc = increments
            .iter()
            .filter(|(len, _)| *len <= r + tol)
            .map(|(_, inc)| *inc)
            .fold(0.0, f64::max);
        if osc > delta {
            break;
        }
        best = r;
    }
    best
}

/// `1 / (‖θ₀‖_{L²}^{1−p} ‖θ₀‖_{Ḣ^s}^p)` with `p = (n + 4α)/(2s)`.
pub fn existence_time_scale(theta0: &ScalarField, s: f64, alpha: f64) -> Result<f64> {
    let n = theta0.grid().dim() as f64;
    if s <= 0.5 * n + 1.0 {
        return Err(Error::InvalidParameter(format!("need s > n/2 + 1, got {s}")));
    }
    let nm = norms(theta0, s)?;
    if nm.l2 == 0.0 || nm.hs == 0.0 {
        return Err(Error::InvalidParameter("degenerate initial data".into()));
    }
    let p = (n + 4.0 * alpha) / (2.0 * s);
    Ok(1.0 / (nm.l2.powf(1.0 - p) * nm.hs.powf(p)))
}

fn check_beta_window(alpha: f64, gamma: f64, beta: f64) -> Result<()> {
    if classify_regime(alpha, gamma) != Regime::Supercritical {
        return Err(Error::InvalidParameter(format!(
            "needs gamma < 2 alpha, got alpha={alpha}, gamma={gamma}"
        )));
    }
    if !(beta > 2.0 * alpha - gamma && beta < 2.0 * alpha) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in ({}, {}), got {beta}",
            2.0 * alpha - gamma,
            2.0 * alpha
        )));
    }
    Ok(())
}

/// `β^{2α/(2α−γ)} ‖θ₀‖^{γ/(2α−γ)}`.
pub fn eventual_regularity_time(theta0_sup: f64, alpha: f64, gamma: f64, beta: f64) -> Result<f64> {
    check_beta_window(alpha, gamma, beta)?;
    let gap = 2.0 * alpha - gamma;
    Ok(beta.powf(2.0 * alpha / gap) * theta0_sup.powf(gamma / gap))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventualRegularityParams {
    pub beta: f64,
    pub eta0: f64,
    pub c0: f64,
}

impl EventualRegularityParams {
    pub fn new(alpha: f64, gamma: f64, beta: f64, eta0: f64, c0: f64) -> Result<Self> {
        check_beta_window(alpha, gamma, beta)?;
        if !(eta0 > 0.0 && c0 > 0.0) {
            return Err(Error::InvalidParameter("eta0 and c0 must be positive".into()));
        }
        Ok(Self { beta, eta0, c0 })
    }

    /// Time at which `η` reaches zero: `16 c₀ β η₀^γ / γ`.
    pub fn vanishing_time(&self, gamma: f64) -> f64 {
        16.0 * self.c0 * self.beta * self.eta0.powf(gamma) / gamma
    }
}

/// `(η₀^γ − γt/(16c₀β))^{1/γ}`, clamped at zero.
pub fn eta_of_t(t: f64, params: &EventualRegularityParams, gamma: f64) -> f64 {
    let base = params.eta0.powf(gamma) - gamma * t / (16.0 * params.c0 * params.beta);
    if base <= 0.0 {
        0.0
    } else {
        base.powf(1.0 / gamma)
    }
}

/// What to record and how often.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSettings {
    /// Record every `cadence` steps (plus the first and last state).
    pub cadence: usize,
    /// Sobolev order; `n/2 + 1.5` when absent.
    pub hs_order: Option<f64>,
    pub holder_beta: f64,
    pub oss_delta: f64,
    /// Track the weighted blow-up functional about the box centre.
    pub j_functional: bool,
}

impl Default for DiagnosticsSettings {
    fn default() -> Self {
        Self {
            cadence: 1,
            hs_order: None,
            holder_beta: 0.5,
            oss_delta: 0.1,
            j_functional: false,
        }
    }
}

impl DiagnosticsSettings {
    pub fn sobolev_order(&self, dim: usize) -> f64 {
        self.hs_order.unwrap_or(0.5 * dim as f64 + 1.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cadence == 0 {
            return Err(Error::Config("diagnostics.cadence must be >= 1".into()));
        }
        if let Some(s) = self.hs_order {
            if !(s >= 0.0) {
                return Err(Error::Config("diagnostics.hs_order must be >= 0".into()));
            }
        }
        if !(self.holder_beta > 0.0 && self.holder_beta < 1.0) {
            return Err(Error::Config("diagnostics.holder_beta must lie in (0,1)".into()));
        }
        if !(self.oss_delta > 0.0) {
            return Err(Error::Config("diagnostics.oss_delta must be > 0".into()));
        }
        Ok(())
    }
}

/// One row of `diagnostics.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt_used: f64,
    pub sup_theta: f64,
    pub inf_theta: f64,
    pub l2_norm: f64,
    pub hs_norm: f64,
    pub grad_sup: f64,
    pub holder_seminorm: f64,
    pub oss_length: f64,
    pub bkm_integral: f64,
    pub j_value: Option<f64>,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "t,dt,sup_theta,inf_theta,l2_norm,hs_norm,grad_sup,\
holder_seminorm,oss_length,bkm_integral,j_value";

    pub fn measure(
        theta: &ScalarField,
        t: f64,
        dt_used: f64,
        bkm_integral: f64,
        settings: &DiagnosticsSettings,
        shifts: &ShiftSet,
    ) -> Result<Self> {
        let nm = norms(theta, settings.sobolev_order(theta.grid().dim()))?;
        let j_value = if settings.j_functional {
            Some(blowup::j_on_grid(theta)?)
        } else {
            None
        };
        Ok(Self {
            t,
            dt_used,
            sup_theta: nm.sup,
            inf_theta: nm.inf,
            l2_norm: nm.l2,
            hs_norm: nm.hs,
            grad_sup: nm.grad_sup,
            holder_seminorm: holder_seminorm(theta, settings.holder_beta, shifts),
            oss_length: oss_length(theta, settings.oss_delta),
            bkm_integral,
            j_value,
        })
    }

    /// CSV row in header order; floats in shortest round-trip form.
    pub fn csv_row(&self) -> String {
        let j = self.j_value.map(|v| format!("{v:e}")).unwrap_or_default();
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.t,
            self.dt_used,
            self.sup_theta,
            self.inf_theta,
            self.l2_norm,
            self.hs_norm,
            self.grad_sup,
            self.holder_seminorm,
            self.oss_length,
            self.bkm_integral,
            j
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.dt_used,
            self.sup_theta,
            self.inf_theta,
            self.l2_norm,
            self.hs_norm,
            self.grad_sup,
            self.holder_seminorm,
            self.oss_length,
            self.bkm_integral,
        ]
        .iter()
        .chain(self.j_value.iter())
        .all(|v| v.is_finite())
    }
}
