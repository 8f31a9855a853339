//! Bivariate competing-risks models with parametric cause-specific hazards
//! and discrete non-parametric frailty.
//!
//! Hazards ([`hazards`]) and frailty laws ([`frailty`]) combine into a
//! [`model::ModelSpec`] that evaluates conditional and unconditional
//! sub-distributions. [`simulate`] draws paired observations from it and
//! [`identifiability`] compares, perturbs and refits models.
pub mod cli;
pub mod error;
pub mod frailty;
pub mod hazards;
pub mod identifiability;
pub mod io;
pub mod model;
pub mod optimize;
pub mod quadrature;
pub mod random;
pub mod roots;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
