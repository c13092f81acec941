//! Analysis toolkit for finite-dimensional quantum channels in Kraus form:
//! structural certification (CPTP, bistochastic, ergodic), spectral gaps of
//! T∘T̂ on the traceless subspace, trace-norm contraction rates, and
//! numerical verification of entropy-production and relaxation bounds.

pub mod basis;
pub mod channel;
pub mod cli;
pub mod contraction;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod mat;
pub mod qubit;
pub mod sample;
pub mod spectral;

pub use error::{Error, Result};
