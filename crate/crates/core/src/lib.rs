//! Numerical simulator for two crossing laser beams, thin opaque wires in
//! their interference zone, and single-photon scattering off such a wire.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`]: the classical two-beam field at the intersection plane,
//!   fringe geometry and fringe visibility.
//! * [`obstruction`]: wire masks, the discrete Fraunhofer transform and
//!   detector counts, wire scans and calibration.
//! * [`quantum`]: the two-mode single-photon maps, detection sampling and
//!   which-way/visibility bookkeeping against `K^2 + V^2 <= 1`.
//! * [`heisenberg`]: the free-wire position uncertainty argument.
//! * [`transport`]: seeded Monte Carlo photon ensembles.
//! * [`cli`]: the `fringewire` command-line front end.

pub mod cli;
pub mod error;
mod extrema;
pub mod field;
pub mod heisenberg;
pub mod obstruction;
pub mod quantum;
pub mod transport;

pub use error::{Error, Result};
pub use field::{BeamPair, ComplexField, FringeGeometry};
pub use obstruction::{DetectorPlane, ScanResult, WireComb, WireSpec};

pub use quantum::{DualityRecord, MomentumRecord, PhaseConvention, TwoModeState};
pub use transport::{EnsembleConfig, RunReport};
