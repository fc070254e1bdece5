pub mod autograd;
pub mod corpus;
pub mod corruption;
pub mod error;
pub mod eval;
pub mod losses;
pub mod model;
pub mod text;
pub mod trainer;

pub use error::{Error, Result};
