//! Connectivity of robots attached at random to a one-dimensional boundary.
//!
//! Exact rational evaluation of connectivity probabilities and graph
//! functionals, polynomial integration over simplices, parent
//! distributions and their order statistics, seeded Monte Carlo oracles,
//! Rényi parking, and sequential-attachment dynamics.

pub mod dynamics;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod montecarlo;
pub mod parents;
pub mod polynomial;
pub mod renyi;
pub mod scalar;
pub mod simplex;

pub use error::{Error, Result};
pub use scalar::Rational;
