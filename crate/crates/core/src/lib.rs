//! Preparation and verification of quantum many-body scar states on
//! Rydberg-blockaded qubit chains.
//!
//! The crate is organised bottom-up: a dense statevector engine
//! ([`qsim`]) and circuit representation ([`circuits`]); brute-force reference
//! states ([`refstates`]); three preparation strategies ([`xiprep`],
//! [`mpscompile`], [`scarprep`]); Hamiltonians and time evolution
//! ([`hamiltonians`], [`dynamics`]); and distribution metrics ([`metrics`]).

pub mod circuits;
pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod linalg;
pub mod metrics;
pub mod mpscompile;
pub mod qsim;
pub mod refstates;
pub mod scarprep;
pub mod xiprep;

pub use circuits::{Circuit, Gate, GateKind};
pub use error::{Error, Result};
pub use qsim::Statevector;
