//! Spectral-measure models of contraction semigroups and their cogenerators.
//!
//! The crate represents unitary and completely non-unitary contractions through
//! computable spectral data, then scans their orbits for weak-limit operators:
//!
//! - [`measure`]: circle measures with certified Fourier–Stieltjes oracles.
//! - [`model`]: cyclic unitaries, the unilateral shift, finite matrices and
//!   direct sums, with exact vector arithmetic.
//! - [`cayley`]: the passage between a unitary cogenerator and the one-parameter
//!   group generated by its Cayley preimage.
//! - [`dynamics`]: trajectories, limit-operator estimates and recurrence or
//!   stability certificates.
//! - [`algebra`]: the functional calculus on recurrent components, the
//!   projection onto them and the entanglement verdict.
//! - [`oracle`]: brute-force analysis of finite-dimensional contractions.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default). Every entry point accepts an [`Execution`] so that the
//! sequential path stays available and produces bit-identical results.

pub mod algebra;
pub mod cayley;
pub mod dynamics;
mod error;
mod exec;
pub mod measure;
pub mod model;
pub mod numeric;
pub mod oracle;

pub use error::{LabError, Result};
pub use exec::Execution;
pub use measure::{fourier_stieltjes, quadrature, wiener_atom_index, Angle, CircleMeasure, FourierValue};
pub use model::{OperatorModel, VectorRep};

pub use num_complex::Complex64;
