pub mod bregman;
pub mod contour;
pub mod duality;
pub mod error;
pub mod fmt;
pub mod grid;
pub mod io;
pub mod perturbation;
pub mod poisson;
pub mod problem;
pub mod stability;

pub use error::{Error, Result};
