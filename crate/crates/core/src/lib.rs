//! Constructive approximation of linear reservoirs by simple cycle reservoirs.

pub mod error;
pub mod binarize;
pub mod cyclic;
pub mod dilation;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod reservoir;

pub use error::{Error, Result};
