//! Multiplexing-gain analysis for Wyner-type linear interference networks
//! with cognitive transmitters and clustered decoding.
//!
//! The crate is organised in layers:
//! - [`netmodel`]: network instances and channel matrices for the
//!   asymmetric (left-interference) and symmetric (two-sided) models
//! - [`tridiag`]: the determinant family `u_p(α) = det H_p(α)`, its roots,
//!   the normalised sequence `v_p(α)` and the banded matrices `M_p(α)`
//! - [`dofcalc`]: closed-form multiplexing-gain values and bounds
//! - [`schemes`]: constructive transmission plans and their linear-algebraic
//!   certification
//! - [`converse`]: genie-aided partitions and numerical verification of the
//!   linear reconstruction identities behind the upper bounds
//! - [`simulator`]: finite-SNR rate accounting, slope fits and the
//!   power-offset experiment
//!
//! Indices are 1-based everywhere in the public API, matching the usual
//! notation for transmitter/receiver pairs `1..=K`.

pub mod converse;
pub mod dofcalc;
pub mod error;
pub mod linalg;
pub mod netmodel;
pub mod schemes;
pub mod simulator;
pub mod tridiag;

pub use error::{Error, Result};
pub use netmodel::{ChannelModel, CrossGainAssignment, Instance, NetworkParams, SideInfo, Topology};
pub use tridiag::Alpha;
