pub mod automorphism;
pub mod corpus;
pub mod error;
pub mod fixtures;
pub mod formats;
pub mod linalg;
pub mod linearizer;
pub mod numerics;
pub mod poly;
pub mod transport;
pub mod wdg;

pub use error::{Error, Result};
