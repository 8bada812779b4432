//! From-scratch convolutional classifier engine for binary screening of
//! fundus-style images.
//!
//! The crate covers the whole pipeline: [`tensor`] arithmetic, [`layers`]
//! with exact backward passes, the class-weighted [`loss`], the [`optim`]
//! Adam optimizer with plateau decay, the [`data`] pipeline with balanced
//! sampling and a synthetic ridge-image generator, the two [`models`], the
//! [`train`]ing loop and [`eval`]uation metrics.

pub mod data;
pub mod error;
pub mod eval;
pub mod layers;
pub mod loss;
pub mod models;
pub mod optim;
pub mod prng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use prng::Prng;
pub use tensor::Tensor;
