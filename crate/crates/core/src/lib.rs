//! Fourier-space Navier–Stokes solver for compactly localized solutions on a
//! finite wavenumber box, with the power-series decomposition used to explain
//! the cloud structure of blow-up candidates.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! bottom fix the scalar to `f64`, which is what the CLI uses.

pub mod error;
pub mod fields;
pub mod grid;
pub mod hermite;
pub mod integrator;
pub mod io;
pub mod nonlinear;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use fields::{detect_clouds, Cloud, EnergyRecord, EnergyTrace, VectorField};
pub use grid::GridSpec;
pub use hermite::{build_initial_data, random_lambda, HermiteConvention, HermiteInitSpec, Lambda};
pub use integrator::{fit_blowup, run, BlowupFit, Outcome, RunConfig, RunOutcome, Snapshot, Stepper, Termination};
pub use nonlinear::{bilinear_term, ConvolutionPlan, Method};
pub use scalar::Scalar;
pub use series::SeriesSet;

pub type Grid = GridSpec<f64>;
pub type Field = VectorField<f64>;
pub type Field32 = VectorField<f32>;
pub type Trace = EnergyTrace<f64>;
pub type Config = RunConfig<f64>;
pub type Plan = ConvolutionPlan<f64>;
pub type Series = SeriesSet<f64>;
pub type InitSpec = HermiteInitSpec<f64>;

/// Sizes the global rayon pool from `TORNADO_THREADS` if set. Call once,
/// before any parallel work; later calls are no-ops.
pub fn init_threads() {
    if let Some(n) = std::env::var("TORNADO_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
