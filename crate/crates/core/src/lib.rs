//! Scale estimation for finite populations sampled without replacement.
//!
//! The crate compares Gini's mean difference (GMD) with the empirical
//! variance as U-statistics of degree two. It provides exact Hoeffding
//! decompositions, one-term Edgeworth expansions of the Studentized
//! statistics, sample- and auxiliary-based parameter estimators, the
//! finite-population bootstrap and a seeded Monte Carlo harness.

pub mod approx;
pub mod cli;
pub mod error;
pub mod estimate;
pub mod hoeffding;
pub mod population;
pub mod simkit;
mod spacing;
pub mod special;
pub mod ustat;

pub use error::{Error, Result};
pub use population::{build_population, PopulationFrame, StatKind};
pub use ustat::SampleDraw;

/// Binomial coefficient `C(n, 2)` as a float.
#[inline]
pub(crate) fn pairs(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}
