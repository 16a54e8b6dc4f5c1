//! Prioritized federated learning with loss-matched admission of
//! non-priority clients, on an L2-regularized multinomial logistic model.

pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod federation;
pub mod objective;
pub mod rng;

pub use error::{Error, Result};
