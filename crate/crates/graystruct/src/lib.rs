pub mod error;
pub mod rules;
pub mod shifted;

pub use error::{Error, Result};
