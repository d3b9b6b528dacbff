pub mod aggregate;
pub mod corpus;
pub mod econo;
pub mod emoclass;
pub mod error;
pub mod textprep;

pub use error::{Error, Result};
