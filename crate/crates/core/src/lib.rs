//! Single-view voxel reconstruction with unsupervised domain adaptation.
//!
//! The crate trains an encoder/decoder/refiner network that maps one RGB view
//! of an object to a `V x V x V` occupancy grid, while aligning the latent
//! features of a labeled source domain and an unlabeled target domain through
//! adversarial domain confusion (gradient reversal), covariance alignment and
//! kernel two-sample discrepancy losses. Everything runs on a small built-in
//! reverse-mode autodiff engine; no external ML framework is involved.
//!
//! Module map:
//! - [`tensor`] — dense tensors on a dynamically built computation graph.
//! - [`losses`] — reconstruction, domain, classification, CORAL and MMD losses.
//! - [`model`] — the network, parameter store and checkpoint format.
//! - [`data`] — procedural multiview dataset generator and on-disk format.
//! - [`metrics`] — thresholded voxel IoU, domain confusion, PCA embedding.
//! - [`trainer`] — Adam, the end-to-end training loop and evaluation.

pub mod data;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
