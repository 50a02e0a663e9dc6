//! Self-similar Hele-Shaw interfaces with surface tension near a corner of
//! small turning angle `ε`: the linear profile `G`, the weighted linear solve,
//! the Picard fixed point for the perturbation `v`, and the interface `η`.

pub mod config;
pub mod error;
pub mod gprofile;
pub mod interface;
pub mod io;
pub mod linsolve;
pub mod nonlinear;
pub mod pipeline;
pub mod realline;
pub mod verify;

pub use error::{Error, Result};
