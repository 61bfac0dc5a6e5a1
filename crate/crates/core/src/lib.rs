//! Wiretap codes built from ordinary binary linear codes by hashing the
//! channel-code message with a two-universal hash family, together with the
//! Gallager-function bounds on the information an eavesdropper obtains.
//!
//! The crate is organised bottom-up:
//!
//! - [`channels`]: discrete and Gaussian memoryless channels, prefix channels;
//! - [`infofunc`]: mutual information and the exponents ψ, φ and E₀;
//! - [`optimize`]: minimization of the leakage bounds over `s`, maximization
//!   of `exp φ` over input laws, secrecy capacity and rate planning;
//! - [`hashing`]: Toeplitz and linear-surjection two-universal families;
//! - [`codes`]: binary linear codes with coset encoders and decoders;
//! - [`wiretap`]: the randomized and deterministic wiretap constructions,
//!   simulation and leakage reports;
//! - [`oracle`]: exact leakage by enumeration on tiny instances;
//! - [`spec`] and [`report`]: JSON inputs and unit-tagged outputs.

pub mod bits;
pub mod channels;
pub mod codes;
pub mod error;
pub mod hashing;
pub mod infofunc;
pub mod optimize;
pub mod oracle;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod spec;
pub mod wiretap;

pub use channels::{Channel, ChannelOutput, DiscreteChannel, GaussianChannel, PrefixChannel};
pub use codes::{CosetEncoderFamily, LinearCode};
pub use error::{Error, Result};
pub use hashing::{HashFamily, HashKind, ToeplitzHash};
pub use wiretap::{simulate, leakage_report, LeakageReport, SimulationConfig, SimulationReport, WiretapCode};
pub use infofunc::{Distribution, ExponentKind, ExponentValue, Kernel};
