//! Delta-method inference on absolute and relative index variation.

use crate::asymptotics::{covariance_plugin, CovarianceEstimate, CovarianceOptions};
use crate::error::{Error, Result};
use crate::index::IndexSpec;
use crate::normal;
use crate::panel::{PanelDataset, ThresholdSchedule};
use serde::Serialize;
use std::fmt::Write as _;

/// Negative variances down to this value are clamped to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

/// Default MDG-style reduction target for the relative change.
pub const DEFAULT_TARGET: f64 = -0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaVariances {
    /// Variance of the absolute change.
    pub gamma4: f64,
    /// Variance of the relative change.
    pub gamma5: f64,
    pub a1: f64,
    pub a2: f64,
}

fn clamp(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -CLAMP_TOLERANCE {
        log::warn!("{name} = {v:e} clamped to 0");
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance(v))
    }
}

/// `Γ₄ = Γ(t,t) + Γ(s,s) − 2Γ(t,s)` and
/// `Γ₅ = a₁² Γ(t,t) + a₂² Γ(s,s) + 2 a₁ a₂ Γ(s,t)` with
/// `a₁ = −(1 + ΔRJ) / J(t)`, `a₂ = 1 / J(t)`.
pub fn delta_variances(
    cov: &CovarianceEstimate,
    j_t: f64,
    j_s: f64,
    t: f64,
    s: f64,
) -> Result<DeltaVariances> {
    let (gtt, gss, gts) = (cov.get(t, t)?, cov.get(s, s)?, cov.get(t, s)?);
    delta_from_entries(gtt, gss, gts, j_t, j_s)
}

/// [`delta_variances`] from the three covariance entries.
pub fn delta_from_entries(
    gtt: f64,
    gss: f64,
    gts: f64,
    j_t: f64,
    j_s: f64,
) -> Result<DeltaVariances> {
    if j_t == 0.0 {
        return Err(Error::UndefinedRelativeChange);
    }
    let rel = (j_s - j_t) / j_t;
    let a1 = -(1.0 + rel) / j_t;
    let a2 = 1.0 / j_t;
    let gamma4 = clamp("gamma4", gtt + gss - 2.0 * gts)?;
    let gamma5 = clamp("gamma5", a1 * a1 * gtt + a2 * a2 * gss + 2.0 * a1 * a2 * gts)?;
    Ok(DeltaVariances {
        gamma4,
        gamma5,
        a1,
        a2,
    })
}

/// `point ± n^{-1/2} √variance u_{1−α/2}`.
pub fn confidence_interval(point: f64, variance: f64, n: usize, alpha: f64) -> Result<(f64, f64)> {
    if variance < 0.0 || variance.is_nan() {
        return Err(Error::NegativeVariance(variance));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("level alpha = {alpha} outside (0, 1)")));
    }
    let half = half_width(variance, n, alpha);
    Ok((point - half, point + half))
}

fn half_width(variance: f64, n: usize, alpha: f64) -> f64 {
    variance.sqrt() / (n as f64).sqrt() * normal::quantile(1.0 - alpha / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Achieved,
    NotAchieved,
    Inconclusive,
}

/// Achieved iff the upper bound is at or below `target`; not achieved iff
/// the lower bound is above it.
pub fn mdg_check(interval: (f64, f64), target: f64) -> Verdict {
    if interval.1 <= target {
        Verdict::Achieved
    } else if interval.0 > target {
        Verdict::NotAchieved
    } else {
        Verdict::Inconclusive
    }
}

/// Index variation between two times with delta-method intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport {
    pub index: String,
    pub t: f64,
    pub s: f64,
    pub n: usize,
    pub j_t: f64,
    pub j_s: f64,
    /// `J_n(s) − J_n(t)`.
    pub delta_j: f64,
    /// `(J_n(s) − J_n(t)) / J_n(t)`.
    pub delta_rj: f64,
    pub gamma_tt: f64,
    pub gamma_ss: f64,
    pub gamma_ts: f64,
    pub gamma4: f64,
    pub gamma5: f64,
    pub a1: f64,
    pub a2: f64,
    pub alpha: f64,
    /// Interval for `ΔJ`.
    pub interval_absolute: (f64, f64),
    /// Interval `[J⁰(α), J¹(α)]` for `ΔRJ`.
    pub interval_relative: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl VariationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Covariance source for [`variation_report`].
#[derive(Debug, Clone)]
pub enum CovSource {
    Plugin(CovarianceOptions),
    Given(CovarianceEstimate),
}

impl Default for CovSource {
    fn default() -> Self {
        CovSource::Plugin(CovarianceOptions::default())
    }
}

/// Indices, covariance, delta variances, intervals and verdict.
#[allow(clippy::too_many_arguments)]
pub fn variation_report(
    panel: &PanelDataset,
    thresholds: &ThresholdSchedule,
    spec: &IndexSpec,
    t: f64,
    s: f64,
    alpha: f64,
    target: Option<f64>,
    cov: CovSource,
) -> Result<VariationReport> {
    if t == s {
        return Err(Error::InvalidParameter("variation needs two distinct times".into()));
    }
    let value = |time: f64| -> Result<f64> {
        let section = panel.cross_section(time)?;
        let z = thresholds.at(time)?;
        spec.evaluate(&section, z).map_err(|e| e.at_time(time))
    };
    let (j_t, j_s) = (value(t)?, value(s)?);
    let cov = match cov {
        CovSource::Plugin(options) => covariance_plugin(panel, &[t, s], thresholds, spec, options)?,
        CovSource::Given(c) => c,
    };
    build_report(spec.label(), panel.n(), t, s, j_t, j_s, &cov, alpha, target)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn build_report(
    index: String,
    n: usize,
    t: f64,
    s: f64,
    j_t: f64,
    j_s: f64,
    cov: &CovarianceEstimate,
    alpha: f64,
    target: Option<f64>,
) -> Result<VariationReport> {
    let dv = delta_variances(cov, j_t, j_s, t, s)?;
    let delta_j = j_s - j_t;
    let delta_rj = delta_j / j_t;
    let interval_absolute = confidence_interval(delta_j, dv.gamma4, n, alpha)?;
    let interval_relative = confidence_interval(delta_rj, dv.gamma5, n, alpha)?;
    Ok(VariationReport {
        index,
        t,
        s,
        n,
        j_t,
        j_s,
        delta_j,
        delta_rj,
        gamma_tt: cov.get(t, t)?,
        gamma_ss: cov.get(s, s)?,
        gamma_ts: cov.get(t, s)?,
        gamma4: dv.gamma4,
        gamma5: dv.gamma5,
        a1: dv.a1,
        a2: dv.a2,
        alpha,
        interval_absolute,
        interval_relative,
        target,
        verdict: target.map(|tau| mdg_check(interval_relative, tau)),
    })
}

/// Plain-text table with columns index, ΔJ, Γ₄ and the interval for ΔJ.
pub fn variation_table(reports: &[VariationReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>14} {:>14} {:>32}",
        "index", "delta_j", "gamma4", "ci(delta_j)"
    );
    for r in reports {
        let ci = format!("[{:.8}, {:.8}]", r.interval_absolute.0, r.interval_absolute.1);
        let _ = writeln!(
            out,
            "{:<12} {:>14.8} {:>14.8} {:>32}",
            r.index, r.delta_j, r.gamma4, ci
        );
    }
    out
}

/// One row of the published reference table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub index: &'static str,
    pub delta_j: f64,
    pub gamma4: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

/// Published variations of poverty indices between two survey waves, kept
/// verbatim. The source microdata are not available, and the printed
/// intervals are not symmetric about the printed changes, so these rows are
/// metadata and not recomputable.
pub const REFERENCE_TABLE: [ReferenceRow; 6] = [
    ReferenceRow {
        index: "SHOR",
        delta_j: -0.03024621,
        gamma4: 0.02353406,
        ci_lower: -0.04264967,
        ci_upper: -0.01985518,
    },
    ReferenceRow {
        index: "KAK(1)",
        delta_j: -0.02108905,
        gamma4: 0.01097123,
        ci_lower: -0.02982085,
        ci_upper: -0.01425729,
    },
    ReferenceRow {
        index: "KAK(2)",
        delta_j: -0.02055594,
        gamma4: 0.01007820,
        ci_lower: -0.02961271,
        ci_upper: -0.01469601,
    },
    ReferenceRow {
        index: "FGT(0)",
        delta_j: -0.05977098,
        gamma4: 0.3170756,
        ci_lower: -0.09355847,
        ci_upper: -0.009889805,
    },
    ReferenceRow {
        index: "FGT(1)",
        delta_j: -0.01859332,
        gamma4: 0.00922992,
        ci_lower: -0.02620413,
        ci_upper: -0.01192899,
    },
    ReferenceRow {
        index: "FGT(2)",
        delta_j: -0.00432289,
        gamma4: 0.0008381113,
        ci_lower: -0.007194404,
        ci_upper: -0.002892781,
    },
];

/// Sample sizes quoted alongside the reference table.
pub const REFERENCE_SAMPLE_SIZES: [usize; 2] = [116, 696];
