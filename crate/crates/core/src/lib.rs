//! Relative-entropy stability laboratory for extremal shocks of
//! one-dimensional systems of conservation laws.

pub mod calculus;
pub mod cli;
pub mod error;
pub mod hugoniot;
pub mod interp;
pub mod lab;
pub mod quadrature;
pub mod shift;
pub mod solver;
pub mod systems;

pub use calculus::{state, ConservationLaw, Matrix, State};
pub use error::{Error, Result};
pub use systems::SystemSpec;
