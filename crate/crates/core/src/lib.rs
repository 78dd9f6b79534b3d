//! Task-based lossy encoders trained against neural mutual-information
//! estimates.
//!
//! An encoder `T` is trained so that its codes keep information about a public
//! label `L` while shedding information about a private label `S`. Both
//! quantities are estimated with Donsker–Varadhan critics (see [`mi`]); the
//! encoder is updated by back-propagating through the frozen critics (see
//! [`trainer`]). [`eval`] then measures what a downstream classifier can
//! still recover from the released codes.

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod mi;
pub mod nn;
pub mod rng;
pub mod trainer;

pub use error::{Error, ParseError, Result};
pub use nn::{Activation, Matrix, Mlp};
pub use rng::Prng;
