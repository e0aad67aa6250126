//! Behavioral simulator for an analog content-addressable memory (ACAM) built
//! from complementary FeFET pairs.
//!
//! An ACAM cell stores a closed voltage interval (a "match window") using the
//! programmable threshold voltages of an NMOS/PMOS FeFET pair sharing one
//! search line. A row of cells matches a query vector when every component
//! falls inside its window, and the match line aggregates the mismatch
//! discharge current of the row. On top of the cell model this crate provides:
//!
//! * [`device`] — threshold programming and subthreshold channel currents,
//! * [`window`] / [`array`] — match windows, window programming with
//!   quantization and noise, and match-line current aggregation,
//! * [`search`] — parallel similarity search (generalized Hamming scores)
//!   plus digital Hamming and cosine baselines,
//! * [`kernel`] — exact RBF/Laplace kernels, the ACAM surrogate Gaussian
//!   kernel, kernel ridge regression, and one-step array-based prediction,
//! * [`fewshot`] — episodic few-shot classification over embedding tables,
//! * [`analysis`] — bit-density vs sense-margin trade-off, regression sweeps,
//!   residual statistics, the gamma scaling law, and operation counts.
//!
//! All stochastic operations take explicit seeds and are bit-reproducible.

pub mod analysis;
pub mod array;
pub mod device;
pub mod error;
pub mod fewshot;
pub mod kernel;
pub mod range;
pub mod search;
mod seeding;
mod solve;
pub mod window;

pub use array::{AcamArray, NoiseSpec};
pub use error::{Error, Result};
pub use range::VoltageRange;
pub use window::MatchWindow;
