//! Benchmark toolkit for generative models on heavy-tailed targets.
//!
//! The crate compares three model families — Gaussian denoising diffusion
//! (DDPM), alpha-stable denoising diffusion (DLPM), and linear flow matching
//! (GF-Linear) — on synthetic and tabular heavy-tailed data, using
//! tail-sensitive metrics (MMD-RBF, tail-coverage error). It also ships a
//! numerical explorer for the sampling-error bounds that motivate the
//! comparison.
//!
//! Module map:
//! - [`stable`]: exact samplers and characteristic functions for univariate
//!   and isotropic multivariate alpha-stable laws, plus Hill tail-index
//!   estimation.
//! - [`data`]: synthetic heavy-tailed dataset generators, CSV ingestion,
//!   80/10/10 splitting and standardization.
//! - [`nn`]: time-conditioned MLP with exact reverse-mode gradients, AdamW
//!   and a cosine learning-rate schedule.
//! - [`models`]: forward corruption, training loss and sampler for each of
//!   the three families.
//! - [`metrics`]: MMD-RBF (unbiased U-statistic) and tail-coverage error.
//! - [`bounds`]: evaluator for the DDPM/DLPM sampling-error bounds and the
//!   initialization-vs-training trade-off table.
//! - [`bench`]: two-stage pilot/main experiment orchestration.
//! - [`report`]: Markdown/CSV report generation.

pub mod bench;
pub mod bounds;
pub mod data;
mod error;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod report;
pub mod stable;

pub use error::{Error, Result};
