pub mod cli;
pub mod complement;
pub mod density;
pub mod error;
pub mod json;
pub mod scalar;
pub mod search;
pub mod states;
pub mod tiles;

pub use error::{Error, Result};
