//! Hybrid short-term electricity load forecasting.
//!
//! Weekly averages are modelled by a penalised-spline additive model; the detrended daily
//! curves are linked day to day by a curve-on-curve linear regression that is reduced, via
//! the singular value decomposition of the cross-covariance operator, to a handful of
//! scalar least-squares fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod svdreg;
pub mod gam;
pub mod metrics;
pub mod pipeline;
pub mod datagen;
pub mod cli;
