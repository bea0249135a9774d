//! Distributed stochastic approximation for strongly monotone stochastic
//! variational inequalities, with the distributed adaptive steplength rule
//! (DASA), the error-bound recursion that certifies it, and an experiment
//! harness around a bandwidth-sharing network game.
//!
//! The guide in `book/` walks through each part; its code listings are
//! compiled as doctests of this crate.

pub mod bandwidth;
pub mod certify;
pub mod engine;
mod error;
pub mod error_model;
pub mod experiment;
pub mod stepsize;
pub mod synthetic;
pub mod vi;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/problem.md")]
    mod problem {}
    #[doc = include_str!("../../../book/src/stepsizes.md")]
    mod stepsizes {}
    #[doc = include_str!("../../../book/src/error-bounds.md")]
    mod error_bounds {}
    #[doc = include_str!("../../../book/src/bandwidth.md")]
    mod bandwidth {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
