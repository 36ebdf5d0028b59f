//! Partitioned fluid-structure interaction with a modal structural solver,
//! RBF interface transfer and analytical airfoil aerodynamics.

pub mod aero;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod model_io;
pub mod postproc;
pub mod structural;
pub mod transfer;

pub use error::{Error, Result};
