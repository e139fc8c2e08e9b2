//! Attention-enhanced physics-informed neural networks for elliptic
//! interface problems.
//!
//! The solution of `∇·(α∇u) = f` with prescribed value and flux jumps across
//! a level-set interface is represented as a smooth fully connected network
//! plus one interface-attention network per subdomain, and trained by
//! minimizing strong-form residuals at collocation points.

pub mod baselines;
pub mod diffengine;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod networks;
pub mod problems;
pub mod sampling;
pub mod training;

pub use error::{Error, Result};
