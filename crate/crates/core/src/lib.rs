//! Numerics for the reduced Heisenberg group `T x R x R`.
//!
//! Modules:
//! - [`group`]: group law, grids, quantization
//! - [`signal`]: sampled signals, time-frequency shifts
//! - [`repr`]: the representations `pi_k`, Gabor systems, independence certificates
//! - [`field`]: fields on the group stored as central fibers, left/right translations
//! - [`transfer`]: matrix coefficients, integral kernels, Plancherel, transfer maps
//! - [`counterexample`]: the five-point oscillatory integral and its `L^p` probe
//! - [`io`]: binary signal and field files

pub mod counterexample;
pub mod error;
pub mod field;
pub mod group;
pub mod io;
pub mod par;
pub mod phase;
pub mod repr;
pub mod signal;
pub mod transfer;

pub use error::{LabError, Result};
pub use field::{ComboSpec, HeisenbergField, Region};
pub use group::{GridParams, HeisenbergPoint};
pub use num_complex::Complex64;
pub use repr::{GaborSystem, IndependenceReport, Verdict};
pub use signal::{SampledSignal, SignalKind};
