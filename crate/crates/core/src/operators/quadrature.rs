//! Direct singular-integral evaluation of `Λ^γ` and `D_γ` on the torus.
//!
//! The periodized kernel `Σ_k |y − Lk|^{−n−γ}` is sampled on a lattice
//! `samples_per_cell` times finer than the grid (field values come from
//! trigonometric interpolation). Near `y = 0` the integrand is replaced by its
//! quadratic Taylor model times a Gaussian window; the windowed model is
//! integrated in closed form and only the smooth remainder is summed. Odd
//! Taylor terms cancel on the symmetric lattice, so the remainder sum
//! converges like `h^{4−γ}`. Image shells beyond the last one are replaced by
//! `mean(g)·∫_{|y|_∞ > a} |y|^{−n−γ} dy`.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::quad1d;
use crate::spectral::{self, ScalarField, TorusGrid, MAX_DIM};

const CALIBRATION_HEADER: &str = "# fracflow quadrature calibration v1";

/// Closed-form normalization making `c PV∫ (f(x) − f(x+y))|y|^{−n−γ} dy`
/// equal to the multiplier `|k|^γ`.
pub fn textbook_constant(dim: usize, gamma: f64) -> f64 {
    let n = dim as f64;
    gamma * 2f64.powf(gamma - 1.0) * gamma_fn(0.5 * (n + gamma))
        / (std::f64::consts::PI.powf(0.5 * n) * gamma_fn(1.0 - 0.5 * gamma))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureParams {
    /// Periodic-image shells summed explicitly (`|k|_∞ ≤ image_shells`).
    pub image_shells: usize,
    /// Lattice offsets closer than this to the origin are left to the
    /// analytic Taylor term.
    pub inner_cutoff: f64,
    /// Quadrature points per grid cell and dimension (power of two).
    pub samples_per_cell: usize,
    /// Width of the Gaussian window around the Taylor model.
    pub taylor_window: f64,
}

impl QuadratureParams {
    pub fn default_for(grid: &TorusGrid) -> Self {
        let samples = 2;
        let dx = grid.dx();
        Self {
            image_shells: 2,
            inner_cutoff: 0.5 * dx / samples as f64,
            samples_per_cell: samples,
            taylor_window: (grid.period() / 12.0).min(8.0 * dx),
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.inner_cutoff *= self.samples_per_cell as f64 / samples as f64;
        self.samples_per_cell = samples;
        self
    }

    pub fn with_shells(mut self, shells: usize) -> Self {
        self.image_shells = shells;
        self
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        if self.image_shells < 1 {
            return Err(Error::InvalidParameter("image_shells must be >= 1".into()));
        }
        let diag = grid.dx() * (grid.dim() as f64).sqrt();
        if !(self.inner_cutoff > 0.0 && self.inner_cutoff < diag) {
            return Err(Error::InvalidParameter(format!(
                "inner_cutoff must lie in (0, {diag}), got {}",
                self.inner_cutoff
            )));
        }
        if self.samples_per_cell == 0 || !self.samples_per_cell.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "samples_per_cell must be a power of two".into(),
            ));
        }
        let w = self.taylor_window;
        if !(w > 0.0 && w <= grid.period() / 8.0) {
            return Err(Error::InvalidParameter(format!(
                "taylor_window must lie in (0, L/8], got {w}"
            )));
        }
        Ok(())
    }
}

/// A quadrature value with its image-shell bookkeeping.
#[derive(Clone, Debug)]
pub struct QuadratureEstimate {
    pub value: f64,
    /// Size of the last explicitly summed shell.
    pub truncation_error: f64,
    /// Contribution of each shell, central copy first (normalized by `c`).
    pub shell_contributions: Vec<f64>,
}

/// One row of the persisted calibration file.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationRecord {
    pub dim: usize,
    pub gamma: f64,
    pub points: usize,
    pub c_value: f64,
    pub residual: f64,
}

pub fn write_calibrations(path: &Path, records: &[CalibrationRecord]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "{CALIBRATION_HEADER}")?;
    writeln!(out, "# n gamma N c_value residual")?;
    for r in records {
        writeln!(out, "{} {} {} {} {}", r.dim, r.gamma, r.points, r.c_value, r.residual)?;
    }
    Ok(())
}

pub fn read_calibrations(path: &Path) -> Result<Vec<CalibrationRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(CALIBRATION_HEADER) {
        return Err(Error::Format("missing calibration header".into()));
    }
    let bad = |l: &str| Error::Format(format!("bad calibration line: {l}"));
    lines
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 5 {
                return Err(bad(l));
            }
            Ok(CalibrationRecord {
                dim: parts[0].parse().map_err(|_| bad(l))?,
                gamma: parts[1].parse().map_err(|_| bad(l))?,
                points: parts[2].parse().map_err(|_| bad(l))?,
                c_value: parts[3].parse().map_err(|_| bad(l))?,
                residual: parts[4].parse().map_err(|_| bad(l))?,
            })
        })
        .collect()
}

/// Field data needed to evaluate the integrals at coarse nodes.
struct Prepared {
    fine: Vec<f64>,
    fine_mean: f64,
    coarse: Vec<f64>,
    gradient: Vec<Vec<f64>>,
    hessian: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy)]
enum Integrand {
    Difference,
    SquaredDifference,
}

/// Precomputed kernel tables for one `(grid, γ, params)`.
#[derive(Clone, Debug)]
pub struct SingularQuadrature {
    grid: TorusGrid,
    fine: TorusGrid,
    gamma: f64,
    params: QuadratureParams,
    kernel: Vec<f64>,
    shells: Vec<Vec<f64>>,
    moment: [[f64; MAX_DIM]; MAX_DIM],
    window_integral: f64,
    tail_integral: f64,
    constant: f64,
    residual: f64,
}

impl SingularQuadrature {
    /// Builds the tables and calibrates `c` by least squares over eigenmodes.
    pub fn new(grid: &TorusGrid, gamma: f64, params: QuadratureParams) -> Result<Self> {
        let mut quad = Self::uncalibrated(grid, gamma, params)?;
        let (c, residual) = quad.calibrate()?;
        quad.constant = c;
        quad.residual = residual;
        Ok(quad)
    }

    /// Builds the tables with a known normalization constant.
    pub fn with_constant(
        grid: &TorusGrid,
        gamma: f64,
        params: QuadratureParams,
        constant: f64,
    ) -> Result<Self> {
        let mut quad = Self::uncalibrated(grid, gamma, params)?;
        quad.constant = constant;
        quad.residual = f64::NAN;
        Ok(quad)
    }

    fn uncalibrated(grid: &TorusGrid, gamma: f64, params: QuadratureParams) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 2.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0,2), got {gamma}")));
        }
        params.validate(grid)?;
        let dim = grid.dim();
        let n = dim as f64;
        let s = params.samples_per_cell;
        let fine = TorusGrid::new(dim, grid.points_per_dim() * s, grid.period())?;
        let h = fine.dx();
        let period = grid.period();
        let power = -(n + gamma);
        let shells_n = params.image_shells;
        let sigma = params.taylor_window;

        let mut shells = vec![vec![0.0; fine.len()]; shells_n + 1];
        let mut window = vec![0.0; fine.len()];
        for a in 0..fine.len() {
            let mut y = [0.0; MAX_DIM];
            for (axis, m) in fine.mode(a).iter().enumerate() {
                y[axis] = *m as f64 * h;
            }
            let r = y[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            let included = r >= params.inner_cutoff;
            if included {
                shells[0][a] = r.powf(power);
                window[a] = (-(r / sigma).powi(2)).exp() * r.powf(power);
            }
            for (shell, table) in shells.iter_mut().enumerate().skip(1) {
                table[a] = image_shell_sum(&y[..dim], shell as i64, period, power);
            }
        }
        let kernel: Vec<f64> = (0..fine.len())
            .map(|a| shells.iter().map(|t| t[a]).sum())
            .collect();

        let vol = h.powi(dim as i32);
        let mut moment = [[0.0; MAX_DIM]; MAX_DIM];
        for (a, w) in window.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let m = fine.mode(a);
            for i in 0..dim {
                for j in 0..dim {
                    moment[i][j] += vol * (m[i] as f64 * h) * (m[j] as f64 * h) * w;
                }
            }
        }

        // ∫ (e·y)² e^{−|y|²/σ²} |y|^{−n−γ} dy for a unit vector e.
        let sphere_over_n = if dim == 1 { 2.0 } else { std::f64::consts::PI };
        let window_integral =
            sphere_over_n * 0.5 * sigma.powf(2.0 - gamma) * gamma_fn(1.0 - 0.5 * gamma);

        let half_side = (2 * shells_n + 1) as f64 * 0.5 * period;
        let tail_integral = if dim == 1 {
            2.0 * half_side.powf(-gamma) / gamma
        } else {
            let angular = quad1d::composite(
                |phi: f64| phi.cos().powf(gamma),
                &[0.0, std::f64::consts::FRAC_PI_8, std::f64::consts::FRAC_PI_4],
                20,
            );
            8.0 * half_side.powf(-gamma) / gamma * angular
        };

        Ok(Self {
            grid: grid.clone(),
            fine,
            gamma,
            params,
            kernel,
            shells,
            moment,
            window_integral,
            tail_integral,
            constant: 1.0,
            residual: 0.0,
        })
    }

    fn calibrate(&self) -> Result<(f64, f64)> {
        let dim = self.grid.dim();
        let mmax = (self.grid.points_per_dim() as i64 / 16).max(2);
        let mut modes = Vec::new();
        if dim == 1 {
            for m in 1..=mmax {
                modes.push([m, 0]);
            }
        } else {
            for m0 in 0..=mmax {
                for m1 in -mmax..=mmax {
                    if (m0 > 0 || m1 > 0) && m0.abs().max(m1.abs()) <= mmax {
                        modes.push([m0, m1]);
                    }
                }
            }
        }
        let scale = 2.0 * std::f64::consts::PI / self.grid.period();
        let (mut num, mut den, mut target) = (0.0, 0.0, 0.0);
        let mut pairs = Vec::with_capacity(modes.len());
        for m in modes {
            let k = [m[0] as f64 * scale, m[1] as f64 * scale];
            let f = ScalarField::from_fn(&self.grid, |x| {
                x.iter().zip(&k).map(|(xi, ki)| xi * ki).sum::<f64>().cos()
            })?;
            let prep = self.prepare(&f)?;
            let raw = self.raw_at(&prep, 0, Integrand::Difference, &self.kernel);
            let expected = k[..dim].iter().map(|v| v * v).sum::<f64>().sqrt().powf(self.gamma);
            num += raw * expected;
            den += raw * raw;
            target += expected * expected;
            pairs.push((raw, expected));
        }
        let c = num / den;
        let err: f64 = pairs.iter().map(|(r, e)| (c * r - e).powi(2)).sum();
        Ok((c, (err / target).sqrt()))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn params(&self) -> &QuadratureParams {
        &self.params
    }

    /// Normalization constant `c_{n,γ}` in use.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Relative RMS misfit of the eigenmode calibration (NaN if not fitted).
    pub fn calibration_residual(&self) -> f64 {
        self.residual
    }

    pub fn calibration_record(&self) -> CalibrationRecord {
        CalibrationRecord {
            dim: self.grid.dim(),
            gamma: self.gamma,
            points: self.grid.points_per_dim(),
            c_value: self.constant,
            residual: self.residual,
        }
    }

    fn prepare(&self, f: &ScalarField) -> Result<Prepared> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let fine = spectral::upsample(f, self.params.samples_per_cell)?.into_values();
        let fine_mean = fine.iter().sum::<f64>() / fine.len() as f64;
        let dim = self.grid.dim();
        let grads: Vec<ScalarField> = (0..dim).map(|i| spectral::partial(f, i)).collect();
        let hessian = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| spectral::partial(&grads[i], j).into_values())
                    .collect()
            })
            .collect();
        Ok(Prepared {
            fine,
            fine_mean,
            coarse: f.values().to_vec(),
            gradient: grads.into_iter().map(|g| g.into_values()).collect(),
            hessian,
        })
    }

    /// Lattice sum `h^n Σ_y g(y) K(y)` and `mean_y g(y)` at coarse node `idx`.
    fn lattice_sum(&self, prep: &Prepared, idx: usize, kind: Integrand, kernel: &[f64]) -> (f64, f64) {
        let s = self.params.samples_per_cell;
        let nf = self.fine.points_per_dim();
        let m = self.grid.unflatten(idx);
        let fx = prep.coarse[idx];
        let g = |fy: f64| match kind {
            Integrand::Difference => fx - fy,
            Integrand::SquaredDifference => (fx - fy) * (fx - fy),
        };
        let (mut sum, mut mean) = (0.0, 0.0);
        if self.grid.dim() == 1 {
            let x0 = m[0] * s;
            for (a, kv) in kernel.iter().enumerate() {
                let gy = g(prep.fine[(x0 + a) % nf]);
                sum += gy * kv;
                mean += gy;
            }
        } else {
            let (x0, x1) = (m[0] * s, m[1] * s);
            for a0 in 0..nf {
                let row = ((x0 + a0) % nf) * nf;
                let krow = &kernel[a0 * nf..(a0 + 1) * nf];
                for (a1, kv) in krow.iter().enumerate() {
                    let gy = g(prep.fine[row + (x1 + a1) % nf]);
                    sum += gy * kv;
                    mean += gy;
                }
            }
        }
        let vol = self.fine.cell_volume();
        (sum * vol, mean / self.fine.len() as f64)
    }

    /// Windowed Taylor correction `A_T − S_T` at node `idx`.
    fn taylor_correction(&self, prep: &Prepared, idx: usize, kind: Integrand) -> f64 {
        let dim = self.grid.dim();
        match kind {
            Integrand::Difference => {
                // T(y) = −½ yᵀ H y
                let mut lattice = 0.0;
                let mut trace = 0.0;
                for i in 0..dim {
                    trace += prep.hessian[i][i][idx];
                    for j in 0..dim {
                        lattice += prep.hessian[i][j][idx] * self.moment[i][j];
                    }
                }
                -0.5 * trace * self.window_integral + 0.5 * lattice
            }
            Integrand::SquaredDifference => {
                // T(y) = (∇f·y)²
                let a: Vec<f64> = (0..dim).map(|i| prep.gradient[i][idx]).collect();
                let mut lattice = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        lattice += a[i] * a[j] * self.moment[i][j];
                    }
                }
                a.iter().map(|v| v * v).sum::<f64>() * self.window_integral - lattice
            }
        }
    }

    /// Unnormalized integral (without `c`) using the given kernel table.
    fn raw_at(&self, prep: &Prepared, idx: usize, kind: Integrand, kernel: &[f64]) -> f64 {
        let (sum, _) = self.lattice_sum(prep, idx, kind, kernel);
        let mean_g = match kind {
            Integrand::Difference => prep.coarse[idx] - prep.fine_mean,
            Integrand::SquaredDifference => self.lattice_sum(prep, idx, kind, kernel).1,
        };
        sum + self.taylor_correction(prep, idx, kind) + mean_g * self.tail_integral
    }

    fn estimate_at(&self, prep: &Prepared, idx: usize, kind: Integrand) -> Result<QuadratureEstimate> {
        let mut contributions = Vec::with_capacity(self.shells.len());
        let mut mean_g = 0.0;
        for (shell, table) in self.shells.iter().enumerate() {
            let (sum, mean) = self.lattice_sum(prep, idx, kind, table);
            let mut part = sum;
            if shell == 0 {
                part += self.taylor_correction(prep, idx, kind);
                mean_g = mean;
            }
            contributions.push(self.constant * part);
        }
        let tail = self.constant * mean_g * self.tail_integral;
        let value = contributions.iter().sum::<f64>() + tail;
        let floor = 1e-12 * value.abs().max(f64::MIN_POSITIVE);
        for shell in 2..contributions.len() {
            let (prev, cur) = (contributions[shell - 1].abs(), contributions[shell].abs());
            if cur >= prev && cur > floor {
                return Err(Error::Divergence {
                    shell,
                    previous: prev,
                    current: cur,
                });
            }
        }
        Ok(QuadratureEstimate {
            value,
            truncation_error: contributions.last().map_or(0.0, |c| c.abs()),
            shell_contributions: contributions,
        })
    }

    /// `Λ^γ f` at node `idx` with shell diagnostics.
    pub fn fractional_laplacian_at(&self, f: &ScalarField, idx: usize) -> Result<QuadratureEstimate> {
        let prep = self.prepare(f)?;
        self.estimate_at(&prep, idx, Integrand::Difference)
    }

    /// `D_γ f` at node `idx` with shell diagnostics.
    pub fn d_gamma_at(&self, f: &ScalarField, idx: usize) -> Result<QuadratureEstimate> {
        let prep = self.prepare(f)?;
        self.estimate_at(&prep, idx, Integrand::SquaredDifference)
    }

    fn field(&self, f: &ScalarField, kind: Integrand) -> Result<ScalarField> {
        let prep = self.prepare(f)?;
        let values: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map(|idx| self.constant * self.raw_at(&prep, idx, kind, &self.kernel))
            .collect();
        ScalarField::new(&self.grid, values)
    }

    /// `Λ^γ f` at every node.
    pub fn fractional_laplacian_field(&self, f: &ScalarField) -> Result<ScalarField> {
        self.field(f, Integrand::Difference)
    }

    /// `D_γ f` at every node.
    pub fn d_gamma_field(&self, f: &ScalarField) -> Result<ScalarField> {
        self.field(f, Integrand::SquaredDifference)
    }
}

/// `Σ_{|k|_∞ = shell} |y − Lk|^{power}`.
fn image_shell_sum(y: &[f64], shell: i64, period: f64, power: f64) -> f64 {
    let mut total = 0.0;
    if y.len() == 1 {
        for k in [-shell, shell] {
            total += (y[0] - period * k as f64).abs().powf(power);
        }
        return total;
    }
    for k0 in -shell..=shell {
        for k1 in -shell..=shell {
            if k0.abs().max(k1.abs()) != shell {
                continue;
            }
            let d0 = y[0] - period * k0 as f64;
            let d1 = y[1] - period * k1 as f64;
            total += (d0 * d0 + d1 * d1).sqrt().powf(power);
        }
    }
    total
}

/// `D_γ f(x)` at node `idx` by direct quadrature.
pub fn d_gamma_quadrature(
    f: &ScalarField,
    gamma: f64,
    idx: usize,
    params: QuadratureParams,
) -> Result<QuadratureEstimate> {
    SingularQuadrature::new(f.grid(), gamma, params)?.d_gamma_at(f, idx)
}

/// `Λ^γ f(x)` at node `idx` by direct quadrature.
pub fn fractional_laplacian_quadrature(
    f: &ScalarField,
    gamma: f64,
    idx: usize,
    params: QuadratureParams,
) -> Result<QuadratureEstimate> {
    SingularQuadrature::new(f.grid(), gamma, params)?.fractional_laplacian_at(f, idx)
}
