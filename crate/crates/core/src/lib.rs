//! Tools for analysing contrastive representation learning through the lens of
//! augmentation overlap.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`] holds the matrix types and their text formats.
//! - [`losses`] evaluates the adjusted InfoNCE and mean-classifier losses.
//! - [`bounds`] turns measured losses and graph statistics into downstream
//!   risk bounds, alongside the classical baselines.
//! - [`auggraph`] builds augmentation graphs over anchors and computes
//!   connectivity, diameters and adjacency spectra per class.
//! - [`geomsim`] samples sphere caps, adds uniform augmentation noise and
//!   evaluates the random-geometric overlap thresholds.
//! - [`trainer`] trains a small contrastive encoder on the two-cap data and
//!   evaluates it with a mean classifier.
//! - [`metrics`] implements the ACR/ARC family of label-free quality scores
//!   and a conditional-independence diagnostic.
//! - [`cli`] wires everything into the `augoverlap` command.

pub mod auggraph;
pub mod bounds;
pub mod cli;
pub mod data;
pub mod error;
pub mod geomsim;
pub mod losses;
pub mod metrics;
pub mod trainer;

pub(crate) mod rng;

pub use error::{Error, Result};
