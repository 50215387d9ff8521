pub mod blowup;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod initial;
pub mod integrator;
pub mod io;
pub mod lab;
pub mod operators;
pub mod oracles;
pub mod presets;
pub mod quad1d;
pub mod spectral;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use operators::ModelParams;
pub use spectral::{make_grid, ScalarField, TorusGrid, VectorField};
