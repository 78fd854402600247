pub mod config;
pub mod division;
pub mod error;
pub mod geometry;
pub mod monomialize;
pub mod parser;
pub mod series;
mod tail;
pub mod transforms;
pub mod trees;

pub use error::{GpsError, Result};
pub use series::{q, qr, MultiExponent, Regularity, Series, Signature, Q};
