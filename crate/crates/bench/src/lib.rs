//! Shared inputs for the kernel benchmarks.

use fracflow::initial::InitialCondition;
use fracflow::{make_grid, ScalarField};

pub fn smooth_field(points: usize) -> ScalarField {
    let grid = make_grid(2, points, 2.0 * std::f64::consts::PI).expect("grid");
    InitialCondition::MultiMode {
        amplitude: 1.0,
        modes: 6,
        max_wavenumber: 4,
    }
    .generate(&grid, 3)
    .expect("field")
}
