#![no_std]
//! Inverse statistics and dependence analysis for price indices.
//!
//! The crate is `no_std` and needs only `alloc`. It covers:
//!
//! - [`series`]: price and log-return paths and the random-permutation
//!   ("scrambled") surrogate of a path,
//! - [`fpt`]: first-passage times of a log-return barrier, their empirical
//!   distribution and the gain/loss asymmetry summary,
//! - [`gengamma`]: the shifted generalized gamma density and its least-squares
//!   fit to an empirical first-passage distribution,
//! - [`index`]: equal-weight artificial indices and their leave-one-out variants,
//! - [`dependence`]: up/down window partitions, plug-in mutual information,
//!   correlation, and their constituent averages,
//! - [`synthetic`]: seeded GBM and regime-switching panel generators.
//!
//! IO, file formats and the command-line front-end live in the `gainloss` crate.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dependence;
mod error;
pub mod fpt;
pub mod gengamma;
pub mod index;
pub mod optim;
pub mod series;
pub mod synthetic;

pub use error::{Error, Result};
