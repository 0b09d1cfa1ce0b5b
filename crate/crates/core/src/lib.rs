pub mod boundary;
pub mod convergence;
pub mod error;
pub mod experiments;
pub mod oracles;
pub mod pipeline;
pub mod quadrature;
pub mod risk_model;
pub mod vie;

pub use error::{Error, Result};
