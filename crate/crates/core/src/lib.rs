//! Lyapunov–LMI stability certificates for a linear ODE coupled at the
//! boundary to a damped string equation, with co-simulation and functional
//! evaluation to cross-check every certificate.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod legendre;
pub mod linalg;
pub mod lyapunov;
pub mod lmi;
pub mod sdp;
pub mod wave;

pub use error::{Error, Module, Result};
