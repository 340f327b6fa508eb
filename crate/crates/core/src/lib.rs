//! Kaplan–Meier and Nelson–Aalen estimation under balanced ranked set
//! sampling with right censoring.
//!
//! The rank-aware estimator averages the within-rank product-limit curves
//! with equal weights; see [`rss::rss_kaplan_meier`]. [`sampling`] draws
//! balanced RSS and SRS samples from the superpopulations in [`models`],
//! [`bootstrap`] gives a rank-wise multiplier bootstrap, and [`harness`]
//! runs the RSS-vs-SRS relative-efficiency study.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod error;
pub mod fmt;
pub mod harness;
pub mod models;
pub mod par;
pub mod quadrature;
pub mod rng;
pub mod rss;
pub mod sampling;
pub mod survival;

pub use bootstrap::{multiplier_bootstrap, BootstrapResult, MultiplierLaw};
pub use error::{Error, Result};
pub use models::{
    AftModel, CensoringLaw, MixingMatrix, RankLaw, SuperpopulationModel, WeibullModel,
};
pub use par::Jobs;
pub use rng::RngStream;
pub use rss::{rss_kaplan_meier, RankedSetSample, RssSurvivalEstimate, ShrinkageRule};
pub use sampling::{draw_balanced_rss, draw_srs};
pub use survival::{kaplan_meier, nelson_aalen, CensoredObservation, StepSurvivalCurve};
