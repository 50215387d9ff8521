//! Radial whole-space functionals, the weighted inequalities behind the
//! blow-up argument, and the Riccati comparison envelope.
//!
//! Whole-space operators are realized by embedding a compactly supported
//! profile in a large periodic box; the `e^{−|x|}` weight keeps the
//! boundary contribution exponentially small and it is reported.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operators::{fractional_laplacian, velocity};
use crate::quad1d::{self, CubicSpline};
use crate::spectral::{self, ScalarField, TorusGrid};

/// Relative asymmetry accepted by [`extract_radial_profile`].
pub const ASYMMETRY_GATE: f64 = 1e-4;

/// Surface measure of the unit sphere in `ℝⁿ`.
fn sphere_measure(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        2.0 * PI
    }
}

/// A radial function `g(|x|)` on `ℝⁿ` given at nodes and interpolated by a
/// cubic spline with zero slope at the origin.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    dim: usize,
    spline: CubicSpline,
    values: Vec<f64>,
    support_radius: f64,
}

impl RadialProfile {
    /// `support_radius` may be infinite for profiles without compact support.
    pub fn new(dim: usize, r_nodes: Vec<f64>, values: Vec<f64>, support_radius: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter(format!("radial profiles need n in {{1,2}}, got {dim}")));
        }
        if r_nodes.first() != Some(&0.0) {
            return Err(Error::InvalidParameter("radial nodes must start at 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("radial profile"));
        }
        if !(support_radius > 0.0) {
            return Err(Error::InvalidParameter("support radius must be positive".into()));
        }
        if r_nodes
            .iter()
            .zip(&values)
            .any(|(r, v)| *r >= support_radius && *v != 0.0)
        {
            return Err(Error::InvalidParameter("profile must vanish beyond its support".into()));
        }
        let spline = CubicSpline::clamped_left(r_nodes, values.clone(), 0.0)?;
        Ok(Self {
            dim,
            spline,
            values,
            support_radius,
        })
    }

    /// Samples `g` on `nodes + 1` radii graded like `j²` towards the origin.
    pub fn from_fn(dim: usize, g: impl Fn(f64) -> f64, support_radius: f64, nodes: usize) -> Result<Self> {
        let r: Vec<f64> = (0..=nodes)
            .map(|j| support_radius * (j as f64 / nodes as f64).powi(2))
            .collect();
        let mut v: Vec<f64> = r.iter().map(|&x| g(x)).collect();
        *v.last_mut().unwrap() = 0.0;
        Self::new(dim, r, v, support_radius)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r_nodes(&self) -> &[f64] {
        self.spline.nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Value at the origin.
    pub fn center_value(&self) -> f64 {
        self.values[0]
    }

    fn last_radius(&self) -> f64 {
        *self.r_nodes().last().unwrap()
    }

    /// Value beyond the last node.
    fn far_value(&self) -> f64 {
        if self.support_radius.is_finite() {
            0.0
        } else {
            *self.values.last().unwrap()
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.support_radius {
            0.0
        } else if r >= self.last_radius() {
            self.far_value()
        } else {
            self.spline.eval(r)
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let v = self.values.iter().map(|x| x * factor).collect();
        Self::new(self.dim, self.r_nodes().to_vec(), v, self.support_radius)
    }

    /// Coefficient of the linear term of a quadratic fit through the first
    /// three nodes; nonzero for profiles with a corner at the origin.
    fn origin_slope(&self) -> f64 {
        let r = self.r_nodes();
        let g = &self.values;
        if r.len() < 3 {
            return 0.0;
        }
        let (r1, r2) = (r[1], r[2]);
        let (d1, d2) = (g[1] - g[0], g[2] - g[0]);
        (d1 * r2 * r2 - d2 * r1 * r1) / (r1 * r2 * r2 - r2 * r1 * r1)
    }
}

/// `∫_ρ^∞ e^{−r}/r dr`, integrated in `s = ln r`.
pub fn exp_integral(rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let scale = (-rho).exp() / (rho + 1.0);
    let tol = (1e-13 * scale).max(f64::MIN_POSITIVE);
    let lo = rho.ln();
    let hi = (rho + 750.0).ln();
    // Split at s = 0 where the integrand turns over.
    let f = |s: f64| (-s.exp()).exp();
    if lo < 0.0 {
        let a = quad1d::adaptive(f, lo, 0.0, tol)?;
        let b = quad1d::adaptive(f, 0.0, hi, tol)?;
        Ok(a.value + b.value)
    } else {
        Ok(quad1d::adaptive(f, lo, hi, tol)?.value)
    }
}

/// `(∫_ρ^∞ e^{−r}/r dr, 2 ln(e + 1/ρ))`.
pub fn exp_integral_bound(rho: f64) -> Result<(f64, f64)> {
    let lhs = exp_integral(rho)?;
    Ok((lhs, 2.0 * (std::f64::consts::E + 1.0 / rho).ln()))
}

/// `J = ω_{n−1} ∫_0^∞ (g(0) − g(r))/r · e^{−r} dr`.
pub fn j_functional(profile: &RadialProfile) -> Result<f64> {
    let g0 = profile.center_value();
    let scale = profile.sup_norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let reach = profile.last_radius().min(profile.support_radius);
    if profile.origin_slope().abs() * reach.min(1.0) > 1e-3 * scale {
        return Err(Error::InvalidParameter("profile has a corner at the origin".into()));
    }
    let integrand = |r: f64| (g0 - profile.eval(r)) / r * (-r).exp();
    let body = quad1d::adaptive(integrand, 0.0, reach, 1e-13 * scale)?.value;
    let tail = (g0 - profile.far_value()) * exp_integral(reach)?;
    Ok(sphere_measure(profile.dim) * (body + tail))
}

/// Same functional by composite Gauss–Legendre on the node intervals, each
/// split in two. Used as the cross-check of [`j_functional`].
pub fn j_functional_composite(profile: &RadialProfile) -> Result<f64> {
    let g0 = profile.center_value();
    let r = profile.r_nodes();
    let mut breaks = Vec::with_capacity(2 * r.len());
    for w in r.windows(2) {
        breaks.push(w[0]);
        breaks.push(0.5 * (w[0] + w[1]));
    }
    breaks.push(profile.last_radius());
    let body = quad1d::composite(|x| (g0 - profile.eval(x)) / x * (-x).exp(), &breaks, 10);
    let tail = (g0 - profile.far_value()) * exp_integral(profile.last_radius())?;
    Ok(sphere_measure(profile.dim) * (body + tail))
}

/// Index of the box centre node (`N/2` along each axis).
pub fn center_index(grid: &TorusGrid) -> usize {
    let c = grid.points_per_dim() / 2;
    grid.flatten(&vec![c; grid.dim()])
}

/// Displacement from the box centre node.
fn offset_from_center(grid: &TorusGrid, idx: usize) -> [f64; 2] {
    let m = grid.unflatten(idx);
    let c = (grid.points_per_dim() / 2) as f64;
    let mut out = [0.0; 2];
    for i in 0..grid.dim() {
        out[i] = (m[i] as f64 - c) * grid.dx();
    }
    out
}

/// `Δf` at one node, summed from the spectrum (Nyquist modes dropped as in
/// [`spectral::partial`]).
fn laplacian_at(f: &ScalarField, idx: usize) -> f64 {
    let grid = f.grid();
    let x = grid.coords(idx);
    let mut acc = 0.0;
    for (m, c) in f.spectrum().iter().enumerate() {
        if (0..grid.dim()).any(|i| grid.is_nyquist(m, i)) {
            continue;
        }
        let k = grid.wavevector(m);
        let phase: f64 = (0..grid.dim()).map(|i| k[i] * x[i]).sum();
        let k2: f64 = k.iter().map(|v| v * v).sum();
        acc -= k2 * (c.re * phase.cos() - c.im * phase.sin());
    }
    acc
}

/// `Σ_{x≠c} (h(c) − h(x)) |x−c|^{−n} e^{−|x−c|} ΔV` plus the centre cell
/// from the local quadratic model.
fn weighted_difference_sum(h: &ScalarField) -> f64 {
    let grid = h.grid();
    let c = center_index(grid);
    let hc = h.values()[c];
    let n = grid.dim() as i32;
    let mut sum = 0.0;
    for (idx, v) in h.values().iter().enumerate() {
        if idx == c {
            continue;
        }
        let y = offset_from_center(grid, idx);
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        sum += (hc - v) * r.powi(-n) * (-r).exp();
    }
    sum *= grid.cell_volume();
    let lap = laplacian_at(h, c);
    let centre = if grid.dim() == 2 {
        -0.25 * lap * grid.cell_volume()
    } else {
        -0.125 * lap * grid.dx() * grid.dx()
    };
    sum + centre
}

/// `J` of a torus field about the box centre.
pub fn j_on_grid(theta: &ScalarField) -> Result<f64> {
    Ok(weighted_difference_sum(theta))
}

/// Carrier for one weighted-inequality evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedIntegralReport {
    pub lhs_value: f64,
    pub rhs_value: f64,
    pub ratio: f64,
    /// Relative error estimate of the ratio (radial quadrature plus
    /// periodization).
    pub quadrature_error_estimate: f64,
    /// Set when the box-boundary contribution exceeds `1e−6·|lhs|`.
    pub periodization_flag: bool,
}

impl WeightedIntegralReport {
    fn new(lhs: f64, rhs: f64, rhs_err: f64, periodization: f64) -> Self {
        let ratio = if rhs == 0.0 && lhs == 0.0 { 0.0 } else { lhs / rhs };
        let rel = |e: f64, v: f64| if v == 0.0 { 0.0 } else { (e / v).abs() };
        Self {
            lhs_value: lhs,
            rhs_value: rhs,
            ratio,
            quadrature_error_estimate: rel(rhs_err, rhs) + rel(periodization, lhs),
            periodization_flag: periodization > 1e-6 * lhs.abs() && lhs != 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.rhs_value == 0.0
    }
}

/// Embeds a compactly supported profile about the centre of `grid`.
pub fn embed(profile: &RadialProfile, grid: &TorusGrid) -> Result<ScalarField> {
    if grid.dim() != profile.dim {
        return Err(Error::GridMismatch);
    }
    if !(grid.period() >= 8.0 * profile.support_radius) {
        return Err(Error::InvalidParameter(format!(
            "box side {} is below 8x the support radius {}",
            grid.period(),
            profile.support_radius
        )));
    }
    let values = (0..grid.len())
        .map(|idx| {
            let y = offset_from_center(grid, idx);
            profile.eval((y[0] * y[0] + y[1] * y[1]).sqrt())
        })
        .collect();
    ScalarField::new(grid, values)
}

/// `ω ∫_0^R w(r) dr` on the mesh `r_j = R (j/m)²` with 8-point Gauss rules.
fn graded_integral(w: impl Fn(f64) -> f64, support: f64, intervals: usize) -> f64 {
    let breaks: Vec<f64> = (0..=intervals)
        .map(|j| support * (j as f64 / intervals as f64).powi(2))
        .collect();
    quad1d::composite(w, &breaks, 8)
}

/// Boundary contribution estimate `2 sup|h| ω E₁(L/2)`.
fn periodization_estimate(h: &ScalarField) -> Result<f64> {
    let grid = h.grid();
    Ok(2.0 * h.sup_norm() * sphere_measure(grid.dim()) * exp_integral(0.5 * grid.period())?)
}

fn require_compact(profile: &RadialProfile) -> Result<f64> {
    let r = profile.support_radius;
    if !r.is_finite() {
        return Err(Error::InvalidParameter("profile must have compact support".into()));
    }
    Ok(r)
}

/// Dissipative weighted inequality:
/// `|∫ (Λ^γf(0) − Λ^γf(x)) |x|^{−n} e^{−|x|} dx|` against
/// `∫ |f(0) − f(x)| |x|^{−n−γ} ln(e + 1/|x|) dx`.
pub fn weighted_dissipation_check(
    profile: &RadialProfile,
    gamma: f64,
    grid: &TorusGrid,
) -> Result<WeightedIntegralReport> {
    Ok(weighted_dissipation_checks(profile, &[gamma], grid)?[0])
}

/// [`weighted_dissipation_check`] for several `γ`, sharing one embedding.
pub fn weighted_dissipation_checks(
    profile: &RadialProfile,
    gammas: &[f64],
    grid: &TorusGrid,
) -> Result<Vec<WeightedIntegralReport>> {
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0,1), got {g}")));
    }
    let support = require_compact(profile)?;
    let f = embed(profile, grid)?;
    let g0 = profile.center_value();
    let omega = sphere_measure(profile.dim);
    gammas
        .iter()
        .map(|&gamma| {
            let lf = fractional_laplacian(&f, gamma)?;
            let lhs = weighted_difference_sum(&lf).abs();
            let w = |r: f64| {
                if r == 0.0 {
                    0.0
                } else {
                    (g0 - profile.eval(r)).abs() * r.powf(-1.0 - gamma) * (std::f64::consts::E + 1.0 / r).ln()
                }
            };
            // Beyond the support, r = R u^{−1/γ} turns the tail into a smooth integral.
            let tail = g0.abs() * support.powf(-gamma) / gamma
                * quad1d::composite(
                    |u: f64| (std::f64::consts::E + u.powf(1.0 / gamma) / support).ln(),
                    &[0.0, 0.25, 0.5, 0.75, 1.0],
                    16,
                );
            let fine = graded_integral(w, support, 400);
            let coarse = graded_integral(w, support, 200);
            let rhs = omega * (fine + tail);
            Ok(WeightedIntegralReport::new(
                lhs,
                rhs,
                omega * (fine - coarse),
                periodization_estimate(&lf)?,
            ))
        })
        .collect()
}

/// Nonlinear weighted inequality: `∫ u·∇f |x|^{−n} e^{−|x|} dx` with
/// `u = ∇Λ^{2α−2}f` against `∫ (f(0) − f(x))² |x|^{−n−2α} dx`.
pub fn weighted_nonlinear_check(
    profile: &RadialProfile,
    alpha: f64,
    grid: &TorusGrid,
) -> Result<WeightedIntegralReport> {
    if profile.dim != 2 {
        return Err(Error::InvalidParameter("the nonlinear check is implemented for n = 2".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let support = require_compact(profile)?;
    let f = embed(profile, grid)?;
    let u = velocity(&f, alpha)?;
    let grad = spectral::gradient(&f);
    let w = u.dot(&grad)?;
    let c = center_index(grid);
    let mut lhs = 0.0;
    for (idx, v) in w.values().iter().enumerate() {
        if idx == c {
            continue;
        }
        let y = offset_from_center(grid, idx);
        let r2 = y[0] * y[0] + y[1] * y[1];
        lhs += v / r2 * (-r2.sqrt()).exp();
    }
    let mut div_u = 0.0;
    for i in 0..2 {
        div_u += spectral::partial(u.component(i), i).values()[c];
    }
    lhs = (lhs + div_u * laplacian_at(&f, c) / 4.0) * grid.cell_volume();

    let g0 = profile.center_value();
    let integrand = |r: f64| {
        if r == 0.0 {
            0.0
        } else {
            (g0 - profile.eval(r)).powi(2) * r.powf(-1.0 - 2.0 * alpha)
        }
    };
    let tail = g0 * g0 * support.powf(-2.0 * alpha) / (2.0 * alpha);
    let fine = graded_integral(integrand, support, 400);
    let coarse = graded_integral(integrand, support, 200);
    let omega = sphere_measure(2);
    Ok(WeightedIntegralReport::new(
        lhs,
        omega * (fine + tail),
        omega * (fine - coarse),
        periodization_estimate(&w)?,
    ))
}

/// Blow-up time of `y′ = C₇y² − C₈M²`, `y(0) = J₀`, if it occurs before
/// `horizon`.
pub fn riccati_envelope(j0: f64, c7: f64, c8: f64, m: f64, horizon: f64) -> Option<f64> {
    if !(c7 > 0.0 && c8 >= 0.0) {
        return None;
    }
    let t = if c8 == 0.0 {
        if j0 <= 0.0 {
            return None;
        }
        1.0 / (c7 * j0)
    } else {
        let eq = m * (c8 / c7).sqrt();
        if j0 <= eq {
            return None;
        }
        // y = eq·coth(c7·eq·(T − t))
        (eq / j0).atanh() / (c7 * eq)
    };
    (t <= horizon).then_some(t)
}

/// Least-squares fit of `J′ ≈ C₇J² − K` along a sampled trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiccatiFit {
    pub c7: f64,
    /// Fitted constant `K = C₈M²`.
    pub offset: f64,
}

impl RiccatiFit {
    /// `C₈` for a given `M = 1 + ‖θ₀‖_sup`, clamped at zero.
    pub fn c8(&self, m: f64) -> f64 {
        (self.offset / (m * m)).max(0.0)
    }

    pub fn predicted_blowup(&self, j0: f64, m: f64, horizon: f64) -> Option<f64> {
        riccati_envelope(j0, self.c7, self.c8(m), m, horizon)
    }
}

/// Fits `J′ = C₇J² − K`, `K ≥ 0`, using centred differences of `(t, J)` samples.
pub fn fit_riccati(times: &[f64], j: &[f64]) -> Result<RiccatiFit> {
    if times.len() != j.len() || times.len() < 4 {
        return Err(Error::InvalidParameter("need at least 4 matching samples".into()));
    }
    let mut rows = Vec::new();
    for i in 1..times.len() - 1 {
        let dt = times[i + 1] - times[i - 1];
        if dt <= 0.0 {
            continue;
        }
        rows.push((j[i] * j[i], (j[i + 1] - j[i - 1]) / dt));
    }
    let n = rows.len() as f64;
    if n < 2.0 {
        return Err(Error::InvalidParameter("trajectory too short to fit".into()));
    }
    let mx = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let sxx: f64 = rows.iter().map(|r| (r.0 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.0 - mx) * (r.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("J is constant along the trajectory".into()));
    }
    let c7 = sxy / sxx;
    let offset = c7 * mx - my;
    if offset >= 0.0 {
        return Ok(RiccatiFit { c7, offset });
    }
    // The envelope needs K = C₈M² ≥ 0; the constrained optimum sits on K = 0.
    let sxx0: f64 = rows.iter().map(|r| r.0 * r.0).sum();
    let sxy0: f64 = rows.iter().map(|r| r.0 * r.1).sum();
    Ok(RiccatiFit {
        c7: sxy0 / sxx0,
        offset: 0.0,
    })
}

/// Average over the reflections and quarter-turns fixing the box centre.
pub fn symmetrize(theta: &ScalarField) -> ScalarField {
    let grid = theta.grid();
    let n = grid.points_per_dim();
    let v = theta.values();
    let reflect = |i: usize| (n - i) % n;
    let values = (0..grid.len())
        .map(|idx| {
            let m = grid.unflatten(idx);
            if grid.dim() == 1 {
                0.5 * (v[idx] + v[reflect(m[0])])
            } else {
                let (a, b) = (m[0], m[1]);
                let images = [
                    [a, b],
                    [reflect(a), b],
                    [a, reflect(b)],
                    [reflect(a), reflect(b)],
                    [b, a],
                    [reflect(b), a],
                    [b, reflect(a)],
                    [reflect(b), reflect(a)],
                ];
                images.iter().map(|p| v[grid.flatten(p)]).sum::<f64>() / 8.0
            }
        })
        .collect();
    ScalarField::new(grid, values).expect("average of finite values")
}

/// `‖θ − symmetrize(θ)‖_sup / ‖θ‖_sup` (zero for the zero field).
pub fn asymmetry(theta: &ScalarField) -> f64 {
    let sup = theta.sup_norm();
    if sup == 0.0 {
        return 0.0;
    }
    theta.max_abs_diff(&symmetrize(theta)) / sup
}

/// Shell-averaged profile about the box centre.
pub fn extract_radial_profile(theta: &ScalarField) -> Result<RadialProfile> {
    let grid = theta.grid();
    let asym = asymmetry(theta);
    if asym > ASYMMETRY_GATE {
        return Err(Error::NotRadial(asym));
    }
    let dx = grid.dx();
    let bins = grid.points_per_dim() / 2;
    let mut r_sum = vec![0.0; bins];
    let mut v_sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (idx, v) in theta.values().iter().enumerate() {
        let y = offset_from_center(grid, idx);
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        let b = (r / dx).round() as usize;
        if b < bins {
            r_sum[b] += r;
            v_sum[b] += v;
            count[b] += 1;
        }
    }
    let mut r_nodes = Vec::new();
    let mut values = Vec::new();
    for b in 0..bins {
        if count[b] > 0 {
            r_nodes.push(r_sum[b] / count[b] as f64);
            values.push(v_sum[b] / count[b] as f64);
        }
    }
    let mut support = f64::INFINITY;
    if let Some(last_big) = values.iter().rposition(|v| v.abs() >= 1e-10) {
        if last_big + 1 < values.len() {
            support = r_nodes[last_big + 1];
            r_nodes.truncate(last_big + 2);
            values.truncate(last_big + 2);
            *values.last_mut().unwrap() = 0.0;
        }
    } else {
        support = r_nodes[1];
        r_nodes.truncate(3);
        values = vec![0.0; r_nodes.len()];
    }
    RadialProfile::new(grid.dim(), r_nodes, values, support)
}

/// Parameters of one corpus profile `Σ a_j (1 − (r/R_j)²)₊⁴`.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpMixture {
    pub amplitudes: Vec<f64>,
    pub radii: Vec<f64>,
}

impl BumpMixture {
    pub fn support(&self) -> f64 {
        self.radii.iter().cloned().fold(0.0, f64::max)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.radii)
            .map(|(a, rr)| {
                let s = 1.0 - (r / rr).powi(2);
                if s > 0.0 {
                    a * s.powi(4)
                } else {
                    0.0
                }
            })
            .sum()
    }

    pub fn profile(&self, dim: usize) -> Result<RadialProfile> {
        RadialProfile::from_fn(dim, |r| self.eval(r), self.support(), 400)
    }
}

/// Seeded corpus of one to three nonnegative bumps with radii in `[0.75, 2]`.
/// The first `k` members do not depend on the corpus size.
pub fn radial_corpus(size: usize, seed: u64) -> Vec<BumpMixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let count = rng.gen_range(1..=3);
            let amplitudes = (0..count).map(|_| rng.gen_range(0.1..1.0)).collect();
            let radii = (0..count).map(|_| rng.gen_range(0.75..2.0)).collect();
            BumpMixture { amplitudes, radii }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn exp_integral_at_one() {
        let v = exp_integral(1.0).unwrap();
        assert!((v - 0.219_383_934_395_520_3).abs() < 1e-12, "{v}");
    }

    #[test]
    fn bound_limits() {
        let (l, r) = exp_integral_bound(1e4).unwrap();
        assert!(l < 1e-300 && (r - 2.0).abs() < 1e-3);
        let (l, r) = exp_integral_bound(0.01).unwrap();
        assert!((l - 4.0379).abs() < 1e-3 && (r - 9.26).abs() < 1e-2);
    }

    #[test]
    fn j_of_constant_profile_is_zero() {
        let p = RadialProfile::new(2, vec![0.0, 1.0, 2.0], vec![3.0; 3], f64::INFINITY).unwrap();
        assert_eq!(j_functional(&p).unwrap(), 0.0);
    }

    #[test]
    fn j_is_odd_and_rejects_corners() {
        let p = RadialProfile::from_fn(2, |r| (-r * r).exp(), 8.0, 400).unwrap();
        let j = j_functional(&p).unwrap();
        let jm = j_functional(&p.scaled(-1.0).unwrap()).unwrap();
        assert!(j > 0.0);
        assert_eq!(j, -jm);
        let cone = RadialProfile::from_fn(2, |r| (1.0 - r).max(0.0), 1.0, 100).unwrap();
        assert!(j_functional(&cone).is_err());
    }

    #[test]
    fn riccati_closed_forms() {
        assert_eq!(riccati_envelope(2.0, 0.5, 0.0, 1.0, 10.0), Some(1.0));
        assert_eq!(riccati_envelope(2.0, 1.0, 4.0, 1.0, 10.0), None);
        assert_eq!(riccati_envelope(2.0, 0.5, 0.0, 1.0, 0.5), None);
    }

    #[test]
    fn fit_recovers_exact_riccati() {
        // y = 2 coth(2(1 − t)) solves y′ = y² − 4
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.004).collect();
        let y: Vec<f64> = times.iter().map(|t| 2.0 / (2.0 * (1.0 - t)).tanh()).collect();
        let fit = fit_riccati(&times, &y).unwrap();
        assert!((fit.c7 - 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.offset - 4.0).abs() < 2e-2, "{fit:?}");
    }

    #[test]
    fn fit_clamps_negative_offset() {
        // y = 2 tan(2t + 0.3) solves y′ = y² + 4
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.002).collect();
        let y: Vec<f64> = times.iter().map(|t| 2.0 * (2.0 * t + 0.3).tan()).collect();
        let fit = fit_riccati(&times, &y).unwrap();
        assert_eq!(fit.offset, 0.0);
        assert!(fit.c7 > 1.0, "{fit:?}");
    }

    #[test]
    fn radial_extraction_round_trip() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        let c = PI;
        let f = ScalarField::from_fn(&g, |x| (-((x[0] - c).powi(2) + (x[1] - c).powi(2))).exp()).unwrap();
        let p = extract_radial_profile(&f).unwrap();
        for (r, v) in p.r_nodes().iter().zip(p.values()).take(20) {
            assert!((v - (-r * r).exp()).abs() < 5e-3, "{r} {v}");
        }
        let constant = extract_radial_profile(&ScalarField::constant(&g, 2.0)).unwrap();
        assert!(constant.values().iter().all(|v| *v == 2.0));
        let off = ScalarField::from_fn(&g, |x| (-((x[0] - 2.0).powi(2) + (x[1] - c).powi(2))).exp()).unwrap();
        assert!(matches!(extract_radial_profile(&off), Err(Error::NotRadial(_))));
    }

    #[test]
    fn j_on_grid_matches_radial_quadrature() {
        let g = make_grid(2, 256, 16.0 * PI).unwrap();
        let c = 8.0 * PI;
        let f = ScalarField::from_fn(&g, |x| (-((x[0] - c).powi(2) + (x[1] - c).powi(2))).exp()).unwrap();
        let p = RadialProfile::from_fn(2, |r| (-r * r).exp(), 8.0, 800).unwrap();
        let a = j_on_grid(&f).unwrap();
        let b = j_functional(&p).unwrap();
        assert!((a - b).abs() < 1e-3 * b, "{a} {b}");
    }
}
