//! Periodic grids, real fields with cached Fourier coefficients, and
//! Fourier-multiplier machinery.
//!
//! Coefficients use the normalization `f(x) = Σ_k f̂_k e^{i k·x}`, i.e. the
//! forward transform carries the `1/N^n` factor. With this choice
//! `Σ f² ΔV = L^n Σ |f̂_k|²` and the multiplier `|k|^s` realizes `Λ^s`
//! with `Λ² = −Δ` exactly (angular wavenumbers `k ∈ (2π/L)·ℤⁿ`).

use std::fmt;
use std::sync::{Arc, OnceLock};

pub use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Largest spatial dimension with a tested code path.
pub const MAX_DIM: usize = 2;

struct Lattice {
    modes: Vec<[i64; MAX_DIM]>,
    wavevectors: Vec<[f64; MAX_DIM]>,
    magnitudes: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// The periodic box `[0, L)^n` sampled with `N` points per dimension.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    points: usize,
    period: f64,
    lattice: Arc<Lattice>,
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points && self.period == other.period
    }
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .field("period", &self.period)
            .finish()
    }
}

/// Builds a grid with `points` nodes per dimension on a box of side `period`.
pub fn make_grid(dim: usize, points: usize, period: f64) -> Result<TorusGrid> {
    TorusGrid::new(dim, points, period)
}

impl TorusGrid {
    pub fn new(dim: usize, points: usize, period: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be a power of two >= 8, got {points}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }

        let total = points.pow(dim as u32);
        let scale = 2.0 * std::f64::consts::PI / period;
        let mut modes = Vec::with_capacity(total);
        let mut wavevectors = Vec::with_capacity(total);
        let mut magnitudes = Vec::with_capacity(total);
        for idx in 0..total {
            let mut m = [0i64; MAX_DIM];
            let mut k = [0.0; MAX_DIM];
            let mut rem = idx;
            for axis in (0..dim).rev() {
                let i = rem % points;
                rem /= points;
                m[axis] = signed_mode(i, points);
                k[axis] = scale * m[axis] as f64;
            }
            modes.push(m);
            wavevectors.push(k);
            magnitudes.push(k.iter().map(|v| v * v).sum::<f64>().sqrt());
        }

        let mut planner = FftPlanner::new();
        let lattice = Lattice {
            modes,
            wavevectors,
            magnitudes,
            forward: planner.plan_fft(points, FftDirection::Forward),
            inverse: planner.plan_fft(points, FftDirection::Inverse),
        };
        Ok(Self {
            dim,
            points,
            period,
            lattice: Arc::new(lattice),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of nodes, `N^n`.
    pub fn len(&self) -> usize {
        self.lattice.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.period / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Largest distance between two points of the torus.
    pub fn diameter(&self) -> f64 {
        0.5 * self.period * (self.dim as f64).sqrt()
    }

    /// Integer mode numbers of the coefficient stored at `idx`.
    pub fn mode(&self, idx: usize) -> &[i64] {
        &self.lattice.modes[idx][..self.dim]
    }

    /// Angular wavevector `k` of the coefficient stored at `idx`.
    pub fn wavevector(&self, idx: usize) -> &[f64] {
        &self.lattice.wavevectors[idx][..self.dim]
    }

    pub fn wavenumber(&self, idx: usize) -> f64 {
        self.lattice.magnitudes[idx]
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.lattice.magnitudes.iter().cloned().fold(0.0, f64::max)
    }

    /// Whether the mode along `axis` is the unpaired `−N/2` Nyquist mode.
    pub fn is_nyquist(&self, idx: usize, axis: usize) -> bool {
        self.lattice.modes[idx][axis] == -(self.points as i64 / 2)
    }

    /// Multi-index `(i_1, .., i_n)` of the flat row-major index.
    pub fn unflatten(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            out[axis] = rem % self.points;
            rem /= self.points;
        }
        out
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        multi[..self.dim]
            .iter()
            .fold(0, |acc, &i| acc * self.points + i % self.points)
    }

    /// Physical coordinates of node `idx`.
    pub fn coords(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.unflatten(idx);
        let dx = self.dx();
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = m[axis] as f64 * dx;
        }
        x
    }

    /// Flat index of the node displaced from `idx` by `offset` lattice steps.
    pub fn shifted(&self, idx: usize, offset: &[i64]) -> usize {
        let m = self.unflatten(idx);
        let n = self.points as i64;
        let mut out = 0usize;
        for axis in 0..self.dim {
            let i = (m[axis] as i64 + offset[axis]).rem_euclid(n) as usize;
            out = out * self.points + i;
        }
        out
    }

    /// Flat index of the coefficient of `−k`.
    pub fn negated(&self, idx: usize) -> usize {
        let m = self.unflatten(idx);
        let mut out = 0usize;
        for axis in 0..self.dim {
            out = out * self.points + (self.points - m[axis]) % self.points;
        }
        out
    }

    /// Normalized forward transform of real nodal values.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.len());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.lattice.forward);
        let norm = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|c| *c *= norm);
        buf
    }

    /// Inverse transform; returns complex nodal values.
    pub fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.len());
        self.transform(&mut coeffs, &self.lattice.inverse);
        coeffs
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        plan.process(buf);
        if self.dim == 2 {
            transpose_square(buf, self.points);
            plan.process(buf);
            transpose_square(buf, self.points);
        }
    }

    /// Projects arbitrary coefficients onto those of a real field.
    pub fn hermitian_part(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        (0..self.len())
            .map(|i| 0.5 * (coeffs[i] + coeffs[self.negated(i)].conj()))
            .collect()
    }
}

fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

/// A real scalar field stored by nodal values with a lazily computed spectrum.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl ScalarField {
    pub fn new(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ScalarField::new"));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
            spectrum: OnceLock::new(),
        }
    }

    /// Samples `f` at every node; `f` receives the node's coordinates.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| f(&grid.coords(i)[..grid.dim()]))
            .collect();
        Self::new(grid, values)
    }

    /// Builds a field from Fourier coefficients. Non-Hermitian input is
    /// projected onto its real part.
    pub fn from_spectrum(grid: &TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        let coeffs = grid.hermitian_part(&coeffs);
        let values: Vec<f64> = grid.inverse(coeffs.clone()).iter().map(|c| c.re).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("inverse transform"));
        }
        let spectrum = OnceLock::new();
        let _ = spectrum.set(coeffs);
        Ok(Self {
            grid: grid.clone(),
            values,
            spectrum,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable nodal access; drops the cached spectrum.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.spectrum.take();
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn has_cached_spectrum(&self) -> bool {
        self.spectrum.get().is_some()
    }

    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.forward(&self.values))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let values = self.values.iter().map(|v| factor * v).collect();
        Self {
            grid: self.grid.clone(),
            values,
            spectrum: OnceLock::new(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(&self.grid, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Nodewise product.
    pub fn product(&self, other: &ScalarField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect();
        Self::new(&self.grid, values)
    }

    /// Largest nodal difference from `other`.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `n` scalar components on a shared grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidParameter("vector field needs components".into()));
        };
        if components.len() != first.grid().dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} components, got {}",
                first.grid().dim(),
                components.len()
            )));
        }
        if components.iter().any(|c| c.grid() != first.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { components })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.components[0].grid()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.components[axis]
    }

    /// Euclidean length at each node.
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid().len())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.values()[i].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.magnitude().into_iter().fold(0.0, f64::max)
    }

    /// Nodewise `self · other`.
    pub fn dot(&self, other: &VectorField) -> Result<ScalarField> {
        if self.grid() != other.grid() {
            return Err(Error::GridMismatch);
        }
        let values = (0..self.grid().len())
            .map(|i| {
                self.components
                    .iter()
                    .zip(&other.components)
                    .map(|(a, b)| a.values()[i] * b.values()[i])
                    .sum()
            })
            .collect();
        ScalarField::new(self.grid(), values)
    }
}

/// Multiplies the spectrum of `f` by `m(k)` and returns the real field.
pub fn apply_multiplier(
    f: &ScalarField,
    m: impl Fn(&[f64]) -> Complex64,
) -> Result<ScalarField> {
    let grid = f.grid();
    let spec = f.spectrum();
    let mut out = Vec::with_capacity(grid.len());
    for (idx, c) in spec.iter().enumerate() {
        let factor = m(grid.wavevector(idx));
        if !(factor.re.is_finite() && factor.im.is_finite()) {
            return Err(Error::NonFinite("multiplier"));
        }
        out.push(factor * c);
    }
    ScalarField::from_spectrum(grid, out)
}

/// Real-valued multiplier variant of [`apply_multiplier`].
pub fn apply_real_multiplier(f: &ScalarField, m: impl Fn(&[f64]) -> f64) -> Result<ScalarField> {
    apply_multiplier(f, |k| Complex64::new(m(k), 0.0))
}

/// Whether mode `idx` survives the 2/3 truncation.
pub fn retained_by_dealias(grid: &TorusGrid, idx: usize) -> bool {
    let n = grid.points_per_dim() as i64;
    grid.mode(idx).iter().all(|&m| 3 * m.abs() <= n)
}

/// Zeroes every coefficient with some `|m_i| > N/3`.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let coeffs: Vec<Complex64> = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(idx, &c)| if retained_by_dealias(grid, idx) { c } else { Complex64::new(0.0, 0.0) })
        .collect();
    // Projection of a finite field cannot produce non-finite values.
    ScalarField::from_spectrum(grid, coeffs).expect("dealias of finite field")
}

/// Spectral `∂f/∂x_axis`. The unpaired Nyquist mode is dropped so the
/// result stays real.
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = f.grid();
    let coeffs: Vec<Complex64> = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            if grid.is_nyquist(idx, axis) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, grid.wavevector(idx)[axis]) * c
            }
        })
        .collect();
    ScalarField::from_spectrum(grid, coeffs).expect("derivative of finite field")
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let comps = (0..f.grid().dim()).map(|axis| partial(f, axis)).collect();
    VectorField::new(comps).expect("gradient components share a grid")
}

/// Trigonometric interpolation of `f` onto a grid `factor` times finer.
pub fn upsample(f: &ScalarField, factor: usize) -> Result<ScalarField> {
    if factor == 1 {
        return Ok(f.clone());
    }
    let coarse = f.grid();
    let fine = TorusGrid::new(coarse.dim(), coarse.points_per_dim() * factor, coarse.period())?;
    let half = coarse.points_per_dim() as i64 / 2;
    let nf = fine.points_per_dim() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
    for (idx, &c) in f.spectrum().iter().enumerate() {
        let m = coarse.mode(idx);
        // Nyquist modes are split evenly between +N/2 and −N/2.
        let mut targets: Vec<(Vec<i64>, f64)> = vec![(Vec::new(), 1.0)];
        for &mi in m {
            let mut next = Vec::with_capacity(targets.len() * 2);
            for (t, w) in targets {
                if mi == -half {
                    let mut a = t.clone();
                    a.push(-half);
                    next.push((a, 0.5 * w));
                    let mut b = t;
                    b.push(half);
                    next.push((b, 0.5 * w));
                } else {
                    let mut a = t;
                    a.push(mi);
                    next.push((a, w));
                }
            }
            targets = next;
        }
        for (t, w) in targets {
            let multi: Vec<usize> = t.iter().map(|&mi| mi.rem_euclid(nf) as usize).collect();
            out[fine.flatten(&multi)] += c * w;
        }
    }
    ScalarField::from_spectrum(&fine, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn smooth_field(grid: &TorusGrid) -> ScalarField {
        ScalarField::from_fn(grid, |x| {
            let y = if x.len() > 1 { x[1] } else { 0.0 };
            (x[0]).cos() + 0.4 * (2.0 * x[0] - y).sin() + 0.2 * (3.0 * y).cos()
        })
        .unwrap()
    }

    #[test]
    fn lattice_2d_64() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        assert_eq!(g.len(), 4096);
        let mut modes: Vec<i64> = (0..g.len()).map(|i| g.mode(i)[0]).collect();
        modes.sort();
        modes.dedup();
        assert_eq!(modes.first(), Some(&-32));
        assert_eq!(modes.last(), Some(&31));
        assert_eq!(g.wavevector(0), &[0.0, 0.0]);
    }

    #[test]
    fn lattice_1d_8() {
        let g = make_grid(1, 8, 2.0 * PI).unwrap();
        let ks: Vec<f64> = (0..8).map(|i| g.wavevector(i)[0]).collect();
        assert_eq!(ks, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(2, 6, 2.0 * PI).is_err());
        assert!(make_grid(3, 16, 2.0 * PI).is_err());
        assert!(make_grid(2, 4, 2.0 * PI).is_err());
        assert!(make_grid(1, 16, -1.0).is_err());
    }

    #[test]
    fn wavenumbers_scale_with_period() {
        let g = make_grid(1, 16, 4.0 * PI).unwrap();
        assert!((g.wavevector(1)[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_multiplier() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let f = smooth_field(&g);
        let out = apply_multiplier(&f, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(out.max_abs_diff(&f) <= 1e-12 * f.sup_norm());
        assert!(out.has_cached_spectrum());
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].cos()).unwrap();
        let out = apply_real_multiplier(&f, |k| k.iter().map(|v| v * v).sum()).unwrap();
        assert!(out.max_abs_diff(&f) < 1e-13);
    }

    #[test]
    fn rejects_nan_multiplier() {
        let g = make_grid(1, 16, 2.0 * PI).unwrap();
        let f = ScalarField::constant(&g, 1.0);
        assert!(apply_real_multiplier(&f, |_| f64::NAN).is_err());
    }

    #[test]
    fn dealias_keeps_low_modes() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].cos() + x[1].sin()).unwrap();
        assert!(dealias(&f).max_abs_diff(&f) < 1e-13);
    }

    #[test]
    fn dealias_removes_high_mode() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(&g, |x| (31.0 * x[0]).cos()).unwrap();
        assert!(dealias(&f).sup_norm() < 1e-13);
    }

    #[test]
    fn nonfinite_values_rejected() {
        let g = make_grid(1, 8, 1.0).unwrap();
        assert!(ScalarField::new(&g, vec![f64::NAN; 8]).is_err());
    }

    #[test]
    fn mutation_invalidates_spectrum() {
        let g = make_grid(1, 8, 2.0 * PI).unwrap();
        let mut f = ScalarField::constant(&g, 1.0);
        assert!((f.spectrum()[0].re - 1.0).abs() < 1e-15);
        f.values_mut()[0] = 9.0;
        assert!(!f.has_cached_spectrum());
        assert!((f.spectrum()[0].re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_of_cosine() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(&g, |x| (2.0 * x[0]).cos() * x[1].sin()).unwrap();
        let grad = gradient(&f);
        let exact0 = ScalarField::from_fn(&g, |x| -2.0 * (2.0 * x[0]).sin() * x[1].sin()).unwrap();
        let exact1 = ScalarField::from_fn(&g, |x| (2.0 * x[0]).cos() * x[1].cos()).unwrap();
        assert!(grad.component(0).max_abs_diff(&exact0) < 1e-12);
        assert!(grad.component(1).max_abs_diff(&exact1) < 1e-12);
    }

    #[test]
    fn upsample_reproduces_band_limited_function() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let f = smooth_field(&g);
        let fine = upsample(&f, 4).unwrap();
        let exact = smooth_field(fine.grid());
        assert!(fine.max_abs_diff(&exact) < 1e-12);
    }
}
