//! Structure-preserving model reduction for second-order systems
//! `M ẍ + D ẋ + K x = B u`, `y = C₀ x + C₁ ẋ`.
//!
//! * [`moments`]: input/output moments through second-order Sylvester equations.
//! * [`reduction`]: moment-matching reduced families, stable and passive
//!   choices, two-sided models, pole placement, derivative matching.
//! * [`loewner`]: data-driven second-order interpolants from Loewner matrices.
//! * [`system`]: the full-order model, transfer evaluation and the mass-spring-damper chain.

pub mod bode;
pub mod error;
pub mod format;
pub mod loewner;
pub mod moments;
pub mod numerics;
pub mod par;
pub mod random;
pub mod reduction;
pub mod system;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use numerics::{CMatrix, CVector};
pub use system::SecondOrderSystem;
