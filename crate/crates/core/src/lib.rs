//! Martingales on homogeneous spaces `G/H` of matrix Lie groups.

pub mod config;
pub mod error;
pub mod group_sde;
pub mod homog;
pub mod io;
pub mod lie;
pub mod sphere;
pub mod stoch;

pub use error::{Error, Result};
