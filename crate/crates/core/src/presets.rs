//! Named scenario configurations.

use crate::config::{GridSection, InitialSection, ModelSection, OutputSection, RunConfig, RunSection};
use crate::diagnostics::DiagnosticsSettings;
use crate::error::{Error, Result};
use crate::initial::InitialCondition;
use crate::integrator::StepPolicy;

pub const NAMES: [&str; 7] = [
    "subcritical",
    "critical",
    "supercritical",
    "scaling",
    "blowup-probe",
    "blowup-control",
    "blowup-inviscid",
];

fn config(dim: usize, alpha: f64, gamma: f64, kappa: f64, points: usize, ic: InitialCondition, t_end: f64) -> RunConfig {
    RunConfig {
        model: ModelSection {
            dim,
            alpha,
            gamma,
            kappa,
            inviscid: kappa == 0.0,
        },
        grid: GridSection {
            points,
            period: 2.0 * std::f64::consts::PI,
        },
        initial: InitialSection::from_condition(&ic, 1),
        stepper: StepPolicy::default(),
        run: RunSection { t_end },
        diagnostics: DiagnosticsSettings::default(),
        output: OutputSection::default(),
    }
}

fn smooth_data() -> InitialCondition {
    InitialCondition::GaussianBump {
        amplitude: 2.0,
        width: 0.5,
        count: 3,
        background: 0.0,
    }
}

fn blowup(amplitude: f64, kappa: f64, t_end: f64) -> RunConfig {
    let mut c = config(
        2,
        0.5,
        0.2,
        kappa,
        128,
        InitialCondition::RadialBump { amplitude, width: 0.8 },
        t_end,
    );
    // Roughly twice the initial gradient of the large bump: past this the
    // centre cusp is no longer resolved at N = 128.
    c.stepper.grad_ceiling = Some(40.0);
    c.diagnostics.j_functional = true;
    c
}

pub fn preset(name: &str) -> Result<RunConfig> {
    Ok(match name {
        "subcritical" => config(2, 0.5, 1.5, 0.1, 64, smooth_data(), 10.0),
        "critical" => config(2, 0.5, 1.0, 0.1, 64, smooth_data(), 10.0),
        "supercritical" => config(2, 0.5, 0.5, 0.1, 64, smooth_data(), 2.0),
        "scaling" => {
            let mut c = config(
                2,
                0.5,
                1.0,
                1.0,
                32,
                InitialCondition::MultiMode {
                    amplitude: 1.0,
                    modes: 4,
                    max_wavenumber: 2,
                },
                0.25,
            );
            c.stepper.dt_max = 1.0;
            c
        }
        "blowup-probe" => blowup(20.0, 0.1, 1.0),
        "blowup-control" => blowup(0.5, 0.1, 1.0),
        "blowup-inviscid" => blowup(20.0, 0.0, 1.0),
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (known: {})",
                NAMES.join(", ")
            )))
        }
    })
}
