pub mod error;
pub mod inflation;
pub mod lp;
pub mod quantum;
pub mod scan;
pub mod scenario;
pub mod strategies;
pub mod witness;

pub use error::{Error, Result};
