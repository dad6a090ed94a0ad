//! Tight worst-case rates for fixed-step gradient descent on curvature classes
//! `F_{mu,L}`, with constructive lower-bound instances.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod error;
pub mod gd;
pub mod interpolation;
pub mod rates;
pub mod schedules;
pub mod tables;
pub mod thresholds;
pub mod worstcase;

pub use curvature::{CurvatureClass, NormalizedStep};
pub use error::{Error, Result};
