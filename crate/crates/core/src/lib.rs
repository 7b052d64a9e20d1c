pub mod cli;
pub mod contour;
pub mod empirics;
pub mod error;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod recursion;
pub mod spectral;
pub mod tail;
pub mod transfer;

pub use error::{Error, Result};
