//! Optimized color-space construction and pixel-level skin detection.
//!
//! The crate searches for a 3×3 color transform with particle swarm
//! optimization, scoring candidate transforms by how well a two-cluster fuzzy
//! c-means segmentation of the transformed image agrees with a ground-truth
//! skin mask. Pixels are then classified in the learned space (or in
//! normalized RGB / CIELAB) with a small MLP, a first-order Sugeno ANFIS, or a
//! Euclidean/Mahalanobis distance model, and the resulting masks are scored
//! with the usual detection metrics (CDR/FRR/FAR, precision/recall, ROC, AUC,
//! 1−EER, RMSE).
//!
//! Module map:
//!
//! * [`dataset`] – image and mask I/O, labeled pixel sampling.
//! * [`colorspace`] – linear/quadratic transforms, RGB→Lab, display rescaling.
//! * [`fcm`] – fuzzy c-means clustering.
//! * [`pso`] – the swarm search over transform matrices.
//! * [`classifiers`] – MLP, ANFIS and distance models.
//! * [`postprocess`] – binary morphology and mask application.
//! * [`metrics`] – confusion counts, rates, ROC and summary statistics.
//! * [`pipeline`] – detection on whole images and dataset evaluation.
//! * [`synthetic`] – deterministic skin-like benchmark images.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod colorspace;
pub mod dataset;
mod error;
pub mod fcm;
pub mod metrics;
pub mod pipeline;
pub mod postprocess;
pub mod pso;
pub mod synthetic;

pub use error::{Error, Result};
