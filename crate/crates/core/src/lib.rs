pub mod error;
pub mod quadrature;
pub mod reflection;
pub mod composite;
pub mod region;
pub mod eigen;
pub mod nonlinear;
pub mod cli;

pub use error::{Error, Result};
