//! Multiple imputation for mixed-type survey tables and a repeated-sampling
//! harness for judging imputation methods by the inferences they support.
//!
//! Four imputers share one contract (masked [`tabular::Dataset`] in, `L`
//! completed datasets out):
//!
//! - [`mice`] with CART donor sampling or random-forest prediction,
//! - [`gain`], a generative adversarial imputation network,
//! - [`mida`], multiple imputation with denoising autoencoders,
//!
//! plus a mean/mode single-imputation baseline in [`impute`].
//! [`inference`] pools estimates with Rubin's rules, [`metrics`] scores
//! pooled estimates across simulations, and [`harness`] runs the whole
//! draw → amputate → impute → pool → score loop.

pub mod error;
pub mod gain;
pub mod harness;
pub mod impute;
pub mod inference;
pub mod metrics;
pub mod mice;
pub mod mida;
pub mod missingness;
pub mod nn;
pub mod rng;
pub mod special;
pub mod stats;
pub mod tabular;
pub mod trees;

pub use error::{Error, Result};
pub use rng::{SeedStream, SimRng};
