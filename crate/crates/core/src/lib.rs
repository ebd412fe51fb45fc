//! Hybrid analog/digital beamforming for a full-duplex mmWave relay link.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense complex linear algebra on [`ComplexMatrix`].
//! - [`channel`]: clustered desired-link channels and the near-field + NLOS
//!   self-interference channel.
//! - [`admm`]: SI-nulling factorization of the unconstrained relay target.
//! - [`mm`]: majorization-minimization factorization into unit-modulus analog
//!   and digital beamformers.
//! - [`metrics`]: log-det spectral efficiency and fully digital reference curves.
//! - [`elm`]: extreme learning machine that maps noisy channels to relay beamformers.
//! - [`pipeline`]: end-to-end optimizer used to label data and as a baseline.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod channel;
pub mod elm;
pub mod error;
pub mod metrics;
pub mod mm;
pub mod numerics;
pub mod pipeline;
pub mod rng;
pub mod system;

pub use admm::{AdmmOutcome, AdmmParams, AdmmTrace};
pub use channel::{ChannelParams, ChannelSet, PathlossMode, SiGeometry};
pub use elm::{Activation, Dataset, ElmModel, ElmParams, Sample};
pub use error::{Error, Result};
pub use metrics::LinkBeamformers;
pub use mm::{MmOutcome, MmParams, NodeHbf, RelayHbf, Side};
pub use numerics::ComplexMatrix;
pub use pipeline::{LinkDesign, SolverParams};
pub use system::SystemConfig;
