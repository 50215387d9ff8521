//! Seeded initial-condition families.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{ScalarField, TorusGrid};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// Sum of `count` periodic bumps `Π exp((cos(x_i − c_i) − 1)/w²)` on a
    /// constant background. One bump sits at the box centre; more bumps get
    /// seeded centres and amplitudes in `[0.5, 1]·amplitude`.
    GaussianBump {
        amplitude: f64,
        width: f64,
        count: usize,
        background: f64,
    },
    /// Random Fourier modes with `|m_i| ≤ max_wavenumber`, coefficients decaying
    /// like `1/(1 + |m|²)`, shifted to be nonnegative.
    MultiMode {
        amplitude: f64,
        modes: usize,
        max_wavenumber: i64,
    },
    /// `δ tanh(sin(2πx₁/L)/w)`: two fronts of height `2δ` and width `w`.
    TanhFront { delta: f64, width: f64 },
    /// `A exp(−r²/w²)` about the box centre.
    RadialBump { amplitude: f64, width: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("initial.{name} must be positive, got {v}")))
    }
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::GaussianBump { .. } => "gaussian-bump",
            InitialCondition::MultiMode { .. } => "multi-mode",
            InitialCondition::TanhFront { .. } => "tanh-front",
            InitialCondition::RadialBump { .. } => "radial-bump",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialCondition::GaussianBump {
                amplitude,
                width,
                count,
                background,
            } => {
                positive("amplitude", amplitude)?;
                positive("width", width)?;
                if count == 0 {
                    return Err(Error::Config("initial.count must be >= 1".into()));
                }
                if !background.is_finite() {
                    return Err(Error::Config("initial.background must be finite".into()));
                }
            }
            InitialCondition::MultiMode {
                amplitude,
                modes,
                max_wavenumber,
            } => {
                positive("amplitude", amplitude)?;
                if modes == 0 || max_wavenumber < 1 {
                    return Err(Error::Config("initial.modes and max_wavenumber must be >= 1".into()));
                }
            }
            InitialCondition::TanhFront { delta, width } => {
                positive("delta", delta)?;
                positive("width", width)?;
            }
            InitialCondition::RadialBump { amplitude, width } => {
                if !amplitude.is_finite() {
                    return Err(Error::Config("initial.amplitude must be finite".into()));
                }
                positive("width", width)?;
            }
        }
        Ok(())
    }

    /// Whether the family is radial about the box centre.
    pub fn is_radial(&self) -> bool {
        matches!(
            self,
            InitialCondition::RadialBump { .. } | InitialCondition::GaussianBump { count: 1, .. }
        )
    }

    pub fn generate(&self, grid: &TorusGrid, seed: u64) -> Result<ScalarField> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = grid.dim();
        let period = grid.period();
        let centre = 0.5 * period;
        let scale = 2.0 * PI / period;
        match *self {
            InitialCondition::GaussianBump {
                amplitude,
                width,
                count,
                background,
            } => {
                let bumps: Vec<(f64, [f64; 2])> = (0..count)
                    .map(|i| {
                        if i == 0 {
                            (amplitude, [centre; 2])
                        } else {
                            let a = amplitude * rng.gen_range(0.5..1.0);
                            (a, [rng.gen_range(0.0..period), rng.gen_range(0.0..period)])
                        }
                    })
                    .collect();
                let w2 = (width * scale).powi(2);
                ScalarField::from_fn(grid, |x| {
                    background
                        + bumps
                            .iter()
                            .map(|(a, c)| {
                                let e: f64 = (0..dim)
                                    .map(|i| ((scale * (x[i] - c[i])).cos() - 1.0) / w2)
                                    .sum();
                                a * e.exp()
                            })
                            .sum::<f64>()
                })
            }
            InitialCondition::MultiMode {
                amplitude,
                modes,
                max_wavenumber,
            } => {
                let terms: Vec<([f64; 2], f64, f64)> = (0..modes)
                    .map(|_| {
                        let mut m = [0i64; 2];
                        while m[..dim].iter().all(|v| *v == 0) {
                            for slot in m.iter_mut().take(dim) {
                                *slot = rng.gen_range(-max_wavenumber..=max_wavenumber);
                            }
                        }
                        let m2: i64 = m.iter().map(|v| v * v).sum();
                        let a = amplitude * rng.gen_range(0.2..1.0) / (1.0 + m2 as f64);
                        let phase = rng.gen_range(0.0..2.0 * PI);
                        ([m[0] as f64 * scale, m[1] as f64 * scale], a, phase)
                    })
                    .collect();
                let offset: f64 = terms.iter().map(|t| t.1).sum();
                ScalarField::from_fn(grid, |x| {
                    offset
                        + terms
                            .iter()
                            .map(|(k, a, p)| {
                                let arg: f64 = (0..dim).map(|i| k[i] * x[i]).sum();
                                a * (arg + p).cos()
                            })
                            .sum::<f64>()
                })
            }
            InitialCondition::TanhFront { delta, width } => {
                ScalarField::from_fn(grid, |x| delta * ((scale * x[0]).sin() / width).tanh())
            }
            InitialCondition::RadialBump { amplitude, width } => {
                let n = grid.points_per_dim();
                let dx = grid.dx();
                let values = (0..grid.len())
                    .map(|idx| {
                        let m = grid.unflatten(idx);
                        let r2: f64 = (0..dim)
                            .map(|i| ((m[i] as f64 - (n / 2) as f64) * dx).powi(2))
                            .sum();
                        amplitude * (-r2 / (width * width)).exp()
                    })
                    .collect();
                ScalarField::new(grid, values)
            }
        }
    }
}
