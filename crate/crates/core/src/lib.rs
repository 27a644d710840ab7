//! Time-dependent threshold-based weighted mean loss statistics.
//!
//! Finite-sample indices (Kakwani/Sen, Shorrocks/Thon, FGT and general rank
//! weights) over panel data, their population counterparts under parametric
//! models, the covariance of the Gaussian limit, delta-method inference on
//! index variation, and a Monte Carlo laboratory.

pub mod asymptotics;
pub mod cost;
pub mod error;
pub mod index;
pub mod inference;
pub mod montecarlo;
pub mod normal;
pub mod panel;
pub mod quadrature;

pub use cost::CostFunction;
pub use error::{Error, Result};
pub use index::{IndexKind, IndexSpec, RankVariant, WeightScheme};
pub use panel::{ColumnMapping, CrossSection, PanelDataset, ThresholdSchedule};
