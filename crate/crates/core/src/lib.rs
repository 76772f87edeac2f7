//! Information-plane analysis of autoencoders.
//!
//! * [`numkit`]: distances, symmetric eigenvalues, column statistics.
//! * [`mi`]: the matrix-based Rényi entropy / mutual information estimator
//!   and its kernel-width rules.
//! * [`nets`]: mirrored fully-connected autoencoders trained with SGD and
//!   momentum.
//! * [`data`]: MNIST IDX parsing, correlated Gaussians, batching.
//! * [`ip`]: information-plane recording, smoothing, DPI checks, the
//!   theoretical convergence targets, training runs and bottleneck sweeps.

pub mod data;
pub mod error;
pub mod ip;
pub mod mi;
pub mod nets;
pub mod numkit;

pub use error::{Error, Result};
pub use mi::{EntropySettings, MiEstimate, NormalizedGram, WidthRule};
pub use numkit::{DataMatrix, SymMatrix};
