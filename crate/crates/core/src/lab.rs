//! Experiment drivers shared by the command line and the test suites.

use std::io::Write;

use rayon::prelude::*;

use crate::blowup::{
    self, asymmetry, fit_riccati, radial_corpus, RiccatiFit, WeightedIntegralReport, ASYMMETRY_GATE,
};
use crate::config::RunConfig;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::initial::InitialCondition;
use crate::integrator::{rescale_solution, run_from, run_until, SimState, Termination};
use crate::operators::{
    finite_difference_ratio, velocity, QuadratureParams, SingularQuadrature,
};
use crate::spectral::{ScalarField, TorusGrid};

/// Largest excess of a quantity over its allowed drift `rate·(t_j − t_i)`
/// across all record pairs `i < j`; `≤ 0` means the principle holds.
pub fn monotone_excess(samples: &[(f64, f64)], rate: f64, increasing: bool) -> f64 {
    let mut best = f64::INFINITY;
    let mut worst = f64::NEG_INFINITY;
    for &(t, v) in samples {
        let x = if increasing { -v } else { v } - rate * t;
        if best.is_finite() {
            worst = worst.max(x - best);
        }
        best = best.min(x);
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipleReport {
    pub max_excess: f64,
    pub min_excess: f64,
    pub l2_excess: f64,
    pub slack_rate: f64,
}

impl PrincipleReport {
    pub fn holds(&self) -> bool {
        self.max_excess <= 0.0 && self.min_excess <= 0.0 && self.l2_excess <= 0.0
    }
}

/// Maximum principle and `L²` decay along a trajectory, with slack
/// `slack · ‖θ₀‖` per unit time (the `L²` slack uses `‖θ₀‖_{L²}`).
pub fn check_principles(records: &[DiagnosticsRecord], slack: f64) -> PrincipleReport {
    let first = &records[0];
    let sup0 = first.sup_theta.abs().max(first.inf_theta.abs());
    let rate = slack * sup0;
    let col = |f: fn(&DiagnosticsRecord) -> f64| -> Vec<(f64, f64)> {
        records.iter().map(|r| (r.t, f(r))).collect()
    };
    PrincipleReport {
        max_excess: monotone_excess(&col(|r| r.sup_theta), rate, false),
        min_excess: monotone_excess(&col(|r| r.inf_theta), rate, true),
        l2_excess: monotone_excess(&col(|r| r.l2_norm), slack * first.l2_norm, false),
        slack_rate: rate,
    }
}

/// No sustained growth: final `sup|∇θ|` at most twice the running maximum
/// over the first half of the run.
pub fn gradient_bounded(records: &[DiagnosticsRecord]) -> (bool, f64, f64) {
    let t_end = records.last().map_or(0.0, |r| r.t);
    let first_half = records
        .iter()
        .filter(|r| r.t <= 0.5 * t_end)
        .map(|r| r.grad_sup)
        .fold(0.0, f64::max);
    let last = records.last().map_or(0.0, |r| r.grad_sup);
    (last <= 2.0 * first_half, last, first_half)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub lambda: usize,
    pub points: usize,
    /// Max discrepancy over the checkpoints, relative to `‖θ₀‖_sup`, at `N`.
    pub discrepancy_coarse: f64,
    /// Same at `2N`.
    pub discrepancy_fine: f64,
}

impl ScalingReport {
    /// Tolerance from the two-resolution study: the discrepancy must at
    /// least halve under refinement (or vanish).
    pub fn passed(&self) -> bool {
        self.discrepancy_fine == 0.0 || self.discrepancy_fine <= 0.5 * self.discrepancy_coarse
    }

    pub fn tolerance(&self) -> f64 {
        0.5 * self.discrepancy_coarse
    }
}

fn scaling_discrepancy(config: &RunConfig, points: usize, lambda: usize, checkpoints: usize) -> Result<f64> {
    let mut cfg = config.clone();
    cfg.grid.points = points;
    let v = cfg.validate()?;
    let (alpha, gamma) = (v.params.alpha(), v.params.gamma());
    let theta0 = v.initial.generate(&v.grid, v.seed)?;
    let stretch = (lambda as f64).powf(gamma);
    let mut base = SimState::new(theta0.clone());
    let mut scaled = SimState::new(rescale_solution(&theta0, lambda, alpha, gamma)?);
    let scale = theta0.sup_norm().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for k in 1..=checkpoints {
        let t = v.t_end * k as f64 / checkpoints as f64;
        let (b, tb) = run_until(base, &v.params, &v.policy, stretch * t, |_, _| Ok(()))?;
        let (s, ts) = run_until(scaled, &v.params, &v.policy, t, |_, _| Ok(()))?;
        if tb != Termination::Completed || ts != Termination::Completed {
            return Err(Error::InvalidParameter("scaling runs must complete".into()));
        }
        let mapped = rescale_solution(&b.theta, lambda, alpha, gamma)?;
        worst = worst.max(mapped.max_abs_diff(&s.theta) / scale);
        base = b;
        scaled = s;
    }
    Ok(worst)
}

/// Compares `evolve(θ_λ, t)` with `(evolve(θ, λ^γ t))_λ` at four checkpoints
/// on the configured grid and on the grid refined by two.
pub fn scaling_study(config: &RunConfig, lambda: usize) -> Result<ScalingReport> {
    let n = config.grid.points;
    if lambda == 0 || !n.is_multiple_of(lambda) {
        return Err(Error::Config(format!("lambda = {lambda} must divide N = {n}")));
    }
    Ok(ScalingReport {
        lambda,
        points: n,
        discrepancy_coarse: scaling_discrepancy(config, n, lambda, 4)?,
        discrepancy_fine: scaling_discrepancy(config, 2 * n, lambda, 4)?,
    })
}

#[derive(Clone, Debug)]
pub struct BlowupProbeReport {
    pub termination: Termination,
    pub termination_time: f64,
    pub records: Vec<DiagnosticsRecord>,
    /// `J` strictly increasing over all recorded states.
    pub j_increasing: bool,
    /// `ln(J_end/J_0)/t_end`.
    pub j_growth_rate: f64,
    pub fit: Option<RiccatiFit>,
    /// Riccati-envelope blow-up time from the fitted coefficients.
    pub predicted_time: Option<f64>,
    /// `J(0)/(1 + ‖θ₀‖_sup)`.
    pub threshold_ratio: f64,
    pub initial_asymmetry: f64,
    /// `|u(centre)| / ‖u‖_sup` at the last state.
    pub center_velocity_ratio: f64,
}

impl BlowupProbeReport {
    /// Ratio of predicted to observed termination time.
    pub fn prediction_ratio(&self) -> Option<f64> {
        self.predicted_time.map(|p| p / self.termination_time)
    }
}

/// Runs a radial configuration with `J(t)` tracking and fits the Riccati
/// envelope to the recorded trajectory.
pub fn blowup_probe(config: &RunConfig) -> Result<BlowupProbeReport> {
    let mut cfg = config.clone();
    cfg.diagnostics.j_functional = true;
    let v = cfg.validate()?;
    if v.params.gamma() >= v.params.alpha() {
        return Err(Error::Config("the blow-up probe needs gamma < alpha".into()));
    }
    let theta0 = v.initial.generate(&v.grid, v.seed)?;
    let asym = asymmetry(&theta0);
    if asym > ASYMMETRY_GATE {
        return Err(Error::NotRadial(asym));
    }
    let outcome = run_from(&v, SimState::new(theta0.clone()))?;
    let records = outcome.records;
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let j: Vec<f64> = records.iter().map(|r| r.j_value.unwrap_or(f64::NAN)).collect();
    let j_increasing = j.windows(2).all(|w| w[1] > w[0]);
    let t_end = outcome.final_state.t;
    let j_growth_rate = if t_end > 0.0 { (j[j.len() - 1] / j[0]).ln() / t_end } else { 0.0 };
    let m = 1.0 + theta0.sup_norm();
    let fit = fit_riccati(&times, &j).ok();
    let predicted_time = fit.and_then(|f| f.predicted_blowup(j[0], m, f64::INFINITY));
    let u = velocity(&outcome.final_state.theta, v.params.alpha())?;
    let c = blowup::center_index(&v.grid);
    let u_c = u
        .components()
        .iter()
        .map(|comp| comp.values()[c].powi(2))
        .sum::<f64>()
        .sqrt();
    let u_sup = u.sup_norm();
    Ok(BlowupProbeReport {
        termination: outcome.termination,
        termination_time: t_end,
        records,
        j_increasing,
        j_growth_rate,
        fit,
        predicted_time,
        threshold_ratio: j[0] / m,
        initial_asymmetry: asym,
        center_velocity_ratio: if u_sup > 0.0 { u_c / u_sup } else { 0.0 },
    })
}

/// One row of the inequality corpus report.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityRow {
    pub profile_id: usize,
    /// `"dissipation"` (parameter γ) or `"nonlinear"` (parameter α).
    pub kind: &'static str,
    pub parameter: f64,
    pub report: WeightedIntegralReport,
    /// `‖f‖²_sup`, used by the nonlinear constant fit.
    pub sup_sq: f64,
}

/// Empirical constants making `lhs + c2·‖f‖² ≥ c1·rhs` hold on a corpus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlinearFit {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub violations: usize,
}

#[derive(Clone, Debug)]
pub struct InequalityLabReport {
    pub seed: u64,
    pub corpus_size: usize,
    pub rows: Vec<InequalityRow>,
}

impl InequalityLabReport {
    fn counted(&self, kind: &str, parameter: f64, limit: usize) -> impl Iterator<Item = &InequalityRow> + '_ {
        let kind = kind.to_string();
        self.rows.iter().filter(move |r| {
            r.kind == kind && r.parameter == parameter && r.profile_id < limit && !r.report.is_degenerate()
        })
    }

    /// Largest dissipation ratio among the first `limit` profiles.
    pub fn max_dissipation_ratio(&self, gamma: f64, limit: usize) -> f64 {
        self.counted("dissipation", gamma, limit)
            .map(|r| r.report.ratio)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.report.ratio.is_finite())
    }

    /// Fits `c2 = 2·max(0, max(−lhs/‖f‖²))` and `c1 = min (lhs + c2‖f‖²)/rhs`
    /// over the first `limit` profiles, then counts violations.
    pub fn nonlinear_fit(&self, alpha: f64, limit: usize) -> Option<NonlinearFit> {
        let rows: Vec<&InequalityRow> = self.counted("nonlinear", alpha, limit).collect();
        if rows.is_empty() {
            return None;
        }
        let c2 = 2.0
            * rows
                .iter()
                .map(|r| -r.report.lhs_value / r.sup_sq)
                .fold(0.0, f64::max);
        let c1 = rows
            .iter()
            .map(|r| (r.report.lhs_value + c2 * r.sup_sq) / r.report.rhs_value)
            .fold(f64::INFINITY, f64::min);
        let violations = rows
            .iter()
            .filter(|r| r.report.lhs_value + c2 * r.sup_sq < c1 * r.report.rhs_value * (1.0 - 1e-12))
            .count();
        Some(NonlinearFit {
            alpha,
            c1,
            c2,
            violations,
        })
    }

    /// CSV with a commented header recording the seed.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "# seed = {}", self.seed)?;
        writeln!(out, "# corpus_size = {}", self.corpus_size)?;
        writeln!(out, "profile_id,kind,parameter,lhs,rhs,ratio,error_estimate,degenerate")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:e},{:e},{:e},{:e},{}",
                r.profile_id,
                r.kind,
                r.parameter,
                r.report.lhs_value,
                r.report.rhs_value,
                r.report.ratio,
                r.report.quadrature_error_estimate,
                r.report.is_degenerate()
            )?;
        }
        Ok(())
    }
}

/// Box used for the whole-space checks: side `16π`, `N = 512`.
pub fn default_inequality_grid() -> TorusGrid {
    TorusGrid::new(2, 512, 16.0 * std::f64::consts::PI).expect("valid grid")
}

/// Evaluates both weighted inequalities over a seeded radial corpus.
/// With `include_zero` a zero profile is appended as the last member.
pub fn inequality_lab(
    corpus_size: usize,
    seed: u64,
    alphas: &[f64],
    gammas: &[f64],
    grid: &TorusGrid,
    include_zero: bool,
) -> Result<InequalityLabReport> {
    if corpus_size == 0 {
        return Err(Error::Config("corpus size must be >= 1".into()));
    }
    let mut profiles = radial_corpus(corpus_size, seed)
        .iter()
        .map(|b| b.profile(2))
        .collect::<Result<Vec<_>>>()?;
    if include_zero {
        profiles.push(blowup::RadialProfile::from_fn(2, |_| 0.0, 1.0, 8)?);
    }
    let rows: Vec<Vec<InequalityRow>> = profiles
        .par_iter()
        .enumerate()
        .map(|(id, p)| {
            let sup_sq = p.sup_norm().powi(2);
            let mut out = Vec::new();
            if !gammas.is_empty() {
                let reports = blowup::weighted_dissipation_checks(p, gammas, grid)?;
                for (&g, report) in gammas.iter().zip(reports) {
                    out.push(InequalityRow {
                        profile_id: id,
                        kind: "dissipation",
                        parameter: g,
                        report,
                        sup_sq,
                    });
                }
            }
            for &a in alphas {
                out.push(InequalityRow {
                    profile_id: id,
                    kind: "nonlinear",
                    parameter: a,
                    report: blowup::weighted_nonlinear_check(p, a, grid)?,
                    sup_sq,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(InequalityLabReport {
        seed,
        corpus_size,
        rows: rows.into_iter().flatten().collect(),
    })
}

/// `(ρ, lhs, rhs)` on a log-spaced sweep of `[lo, hi]`.
pub fn exp_integral_sweep(lo: f64, hi: f64, points: usize) -> Result<Vec<(f64, f64, f64)>> {
    (0..points)
        .map(|i| {
            let s = i as f64 / (points - 1) as f64;
            let rho = (lo.ln() + s * (hi.ln() - lo.ln())).exp();
            let (l, r) = blowup::exp_integral_bound(rho)?;
            Ok((rho, l, r))
        })
        .collect()
}

/// Minimum of the normalized finite-difference ratio over a seeded corpus
/// of smooth fields on `N = points`, per `γ`, for the first `limit` members.
#[derive(Clone, Debug)]
pub struct FiniteDifferenceCorpus {
    pub gammas: Vec<f64>,
    /// `ratios[g][member]`: minimum over shifts and admissible points.
    pub ratios: Vec<Vec<f64>>,
}

impl FiniteDifferenceCorpus {
    pub fn minimum(&self, limit: usize) -> f64 {
        self.ratios
            .iter()
            .flat_map(|r| r.iter().take(limit))
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Shifts used for the finite-difference corpus.
pub const FD_SHIFTS: [[i64; 2]; 4] = [[1, 0], [0, 1], [1, 1], [2, -1]];

pub fn finite_difference_corpus(
    size: usize,
    seed: u64,
    gammas: &[f64],
    points: usize,
) -> Result<FiniteDifferenceCorpus> {
    let grid = TorusGrid::new(2, points, 2.0 * std::f64::consts::PI)?;
    let fields = (0..size)
        .map(|i| {
            InitialCondition::MultiMode {
                amplitude: 1.0,
                modes: 4,
                max_wavenumber: 2,
            }
            .generate(&grid, seed.wrapping_add(i as u64))
        })
        .collect::<Result<Vec<ScalarField>>>()?;
    let ratios = gammas
        .iter()
        .map(|&g| {
            let quad = SingularQuadrature::new(&grid, g, QuadratureParams::default_for(&grid))?;
            fields
                .par_iter()
                .map(|f| {
                    let mut best = f64::INFINITY;
                    for s in FD_SHIFTS {
                        if let Some(r) = finite_difference_ratio(&quad, f, &s)? {
                            best = best.min(r);
                        }
                    }
                    Ok(best)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FiniteDifferenceCorpus {
        gammas: gammas.to_vec(),
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_excess_detects_increase() {
        let down = [(0.0, 1.0), (1.0, 0.9), (2.0, 0.8)];
        assert!(monotone_excess(&down, 0.0, false) < 0.0);
        let bump = [(0.0, 1.0), (1.0, 0.9), (2.0, 0.95)];
        assert!((monotone_excess(&bump, 0.0, false) - 0.05).abs() < 1e-12);
        assert!(monotone_excess(&bump, 0.1, false) <= 0.0);
    }

    #[test]
    fn sweep_is_log_spaced() {
        let s = exp_integral_sweep(1e-2, 1e2, 5).unwrap();
        assert!((s[2].0 - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|(_, l, r)| l <= r));
    }
}
