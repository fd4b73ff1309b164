//! Real interest rates, mean-reverting rate models and long-run discounting.
//!
//! The pipeline runs from raw bond-yield and CPI series to real rates
//! ([`rates`]), calibrates an Ornstein-Uhlenbeck model by maximum likelihood
//! ([`estimation`]) and evaluates the closed-form discount function, long-run
//! rate and negative-rate probability ([`ou`]). Positive-rate alternatives
//! and the two-level OU model live in [`altmodels`]; every closed form can be
//! checked against brute-force path simulation in [`montecarlo`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod altmodels;
pub mod error;
pub mod estimation;
pub mod grid;
pub mod montecarlo;
pub mod optim;
pub mod ou;
pub mod rates;
pub mod report;
pub mod special;
pub mod timeseries;
pub mod verify;

pub use error::{Error, ErrorClass, Result};
pub use estimation::{DerivedQuantities, FellerFit, LognormalFit, OuFit};
pub use grid::TimeGrid;
pub use ou::{DiscountCurve, Dimensionless, OuParams, Regime};
pub use rates::{NegativeRateStats, RealRateSeries};
pub use timeseries::{Frequency, Observation, Period, StepDurations, TimeSeries};
