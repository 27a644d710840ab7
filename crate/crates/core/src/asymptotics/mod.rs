//! Population indices, limit functions and the asymptotic covariance.

pub mod bundle;
pub mod covariance;
pub mod diagnostics;
pub mod model;
pub mod shape;

pub use bundle::{
    exact_index, k_finite_difference, kakwani_direct, kakwani_k_closed_form, kakwani_k_printed,
    r_k, theorem_one_bundle, BundleOptions, GapFactor, GtAssembly, TheoremOneBundle,
};
pub use covariance::{
    covariance_analytic, covariance_plugin, covariance_plugin_columns, plugin_influence,
    tail_square_integral, CovarianceDiagnostics, CovarianceEstimate, CovarianceMethod,
    CovarianceOptions, KappaCentering, PluginInfluence,
};
pub use diagnostics::{
    hypothesis_diagnostics_model, hypothesis_diagnostics_panel, HolderQuotient, HypothesisReport,
};
pub use model::{Dependence, DistributionModel, Marginal};
pub use shape::{CustomShape, KakwaniShape, LimitShape, RankShape, UnitShape};
