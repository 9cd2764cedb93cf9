//! Numerical core of the area/density cross-diffusion simulator.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the periodic
//! grid and its spectral operators, the nonlocal kernel, the evolution
//! laws, the explicit Runge–Kutta driver and the diagnostics that turn
//! positivity, `L∞` bounds, blow-up and support dynamics into measurable
//! quantities. File formats and the command-line front-end live in the
//! `xdiff` crate.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod grid;
pub mod initial;
pub mod integrator;
pub mod kernel;
pub mod model;

pub use diagnostics::{DiagnosticRecord, DiagnosticSeries, Interval};
pub use error::Error;
pub use grid::{Field, Grid, Norms};
pub use initial::InitialProfile;
pub use integrator::{
    ClipPolicy, HaltReason, Mode, RunOutcome, RunSetup, Snapshot, StepControl,
};
pub use kernel::KernelSpec;
pub use model::{EnergyReport, FluxScheme, ModelParams, State};

pub type Result<T> = core::result::Result<T, Error>;
