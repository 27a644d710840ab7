//! Finite-sample threshold-based weighted mean loss statistics.

mod weights;

pub use weights::WeightScheme;

use crate::asymptotics::shape::{KakwaniShape, LimitShape, RankShape, UnitShape};
use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::panel::{headcount, CrossSection, PanelDataset, ThresholdSchedule};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Normalisation of the rank-weighted `2n − 2j + 1` index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RankVariant {
    /// Divides by `n²`.
    Thon,
    /// Divides by `n(n + 1)`.
    Shorrocks,
}

/// Which statistic to compute.
#[derive(Clone)]
pub enum IndexKind {
    General(Arc<WeightScheme>),
    Kakwani(u32),
    Sen,
    Shorrocks,
    Thon,
    Fgt(f64),
}

impl fmt::Debug for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexKind::General(w) => write!(f, "General({})", w.name()),
            IndexKind::Kakwani(k) => write!(f, "Kakwani({k})"),
            IndexKind::Sen => write!(f, "Sen"),
            IndexKind::Shorrocks => write!(f, "Shorrocks"),
            IndexKind::Thon => write!(f, "Thon"),
            IndexKind::Fgt(a) => write!(f, "Fgt({a})"),
        }
    }
}

/// An index together with its cost function and, for general weights, the
/// limit shape used by the asymptotic computations.
#[derive(Clone, Debug)]
pub struct IndexSpec {
    kind: IndexKind,
    cost: CostFunction,
    shape: Option<Arc<dyn LimitShape>>,
}

impl IndexSpec {
    pub fn kakwani(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("Kakwani parameter k must be >= 1".into()));
        }
        Ok(Self::with_kind(IndexKind::Kakwani(k)))
    }

    pub fn sen() -> Self {
        Self::with_kind(IndexKind::Sen)
    }

    pub fn shorrocks() -> Self {
        Self::with_kind(IndexKind::Shorrocks)
    }

    pub fn thon() -> Self {
        Self::with_kind(IndexKind::Thon)
    }

    /// FGT(α) with `d(u) = u^α`.
    pub fn fgt(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("FGT exponent {alpha} must be >= 0")));
        }
        Ok(Self {
            kind: IndexKind::Fgt(alpha),
            cost: CostFunction::power_unchecked(alpha),
            shape: None,
        })
    }

    pub fn general(scheme: WeightScheme) -> Self {
        Self::with_kind(IndexKind::General(Arc::new(scheme)))
    }

    /// Spec by name: `general`, `kakwani`, `sen`, `shorrocks`, `thon` or `fgt`.
    ///
    /// `k` is the Kakwani order, `alpha_exp` the FGT exponent and `weights`
    /// the scheme of `general` (`kakwani:<k>`, `thon`, `shorrocks` or `unit`),
    /// which also fixes its limit shape.
    pub fn from_name(
        name: &str,
        k: Option<u32>,
        alpha_exp: Option<f64>,
        weights: Option<&str>,
        cost: Option<CostFunction>,
    ) -> Result<Self> {
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "kakwani" => Self::kakwani(k.unwrap_or(1))?,
            "sen" => Self::sen(),
            "shorrocks" => Self::shorrocks(),
            "thon" => Self::thon(),
            "fgt" => {
                let alpha = alpha_exp.ok_or_else(|| {
                    Error::Config("fgt needs an exponent (alpha-exp)".into())
                })?;
                let spec = Self::fgt(alpha)?;
                if cost.is_some() {
                    return Err(Error::Config("fgt does not take a cost function".into()));
                }
                return Ok(spec);
            }
            "general" => {
                let w = weights.unwrap_or("unit").trim();
                let (scheme, shape): (WeightScheme, Arc<dyn LimitShape>) =
                    match w.split_once(':') {
                        Some(("kakwani", k)) => {
                            let k: u32 = k
                                .parse()
                                .ok()
                                .filter(|&k| k >= 1)
                                .ok_or_else(|| Error::Config(format!("bad weights `{w}`")))?;
                            (WeightScheme::kakwani(k), Arc::new(KakwaniShape::new(k)))
                        }
                        None if w == "thon" => (WeightScheme::thon(), Arc::new(RankShape)),
                        None if w == "shorrocks" => {
                            (WeightScheme::shorrocks(), Arc::new(RankShape))
                        }
                        None if w == "unit" => (WeightScheme::unit(), Arc::new(UnitShape)),
                        _ => return Err(Error::Config(format!("unknown weights `{w}`"))),
                    };
                Self::general(scheme).with_shape(shape)
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown index `{other}`; expected general, kakwani, sen, shorrocks, thon or fgt"
                )))
            }
        };
        match cost {
            Some(c) => spec.with_cost(c),
            None => Ok(spec),
        }
    }

    fn with_kind(kind: IndexKind) -> Self {
        Self {
            kind,
            cost: CostFunction::identity(),
            shape: None,
        }
    }

    /// Replaces the cost function. FGT fixes its own cost.
    pub fn with_cost(mut self, cost: CostFunction) -> Result<Self> {
        if let IndexKind::Fgt(_) = self.kind {
            return Err(Error::InvalidParameter(
                "FGT fixes d(u) = u^alpha; use the exponent instead".into(),
            ));
        }
        self.cost = cost;
        Ok(self)
    }

    /// Limit shape for general weights.
    pub fn with_shape(mut self, shape: Arc<dyn LimitShape>) -> Self {
        self.shape = Some(shape);
        self
    }

    pub fn kind(&self) -> &IndexKind {
        &self.kind
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    pub fn label(&self) -> String {
        match &self.kind {
            IndexKind::General(w) => format!("general[{}]", w.name()),
            IndexKind::Kakwani(k) => format!("kakwani({k})"),
            IndexKind::Sen => "sen".into(),
            IndexKind::Shorrocks => "shorrocks".into(),
            IndexKind::Thon => "thon".into(),
            IndexKind::Fgt(a) => format!("fgt({a})"),
        }
    }

    /// The limit functions `(c, π)` of this index.
    pub fn limit_shape(&self) -> Result<Arc<dyn LimitShape>> {
        if let Some(shape) = &self.shape {
            return Ok(shape.clone());
        }
        Ok(match &self.kind {
            IndexKind::Kakwani(k) => Arc::new(KakwaniShape::new(*k)),
            IndexKind::Sen => Arc::new(KakwaniShape::new(1)),
            IndexKind::Shorrocks | IndexKind::Thon => Arc::new(RankShape),
            IndexKind::Fgt(_) => Arc::new(UnitShape),
            IndexKind::General(w) => {
                return Err(Error::InvalidParameter(format!(
                    "general weights `{}` need a supplied limit shape",
                    w.name()
                )))
            }
        })
    }

    /// `J_n` on one cross-section.
    pub fn evaluate(&self, section: &CrossSection, z: f64) -> Result<f64> {
        match &self.kind {
            IndexKind::General(w) => wmlg_general(section, z, w, &self.cost),
            IndexKind::Kakwani(k) => kakwani_index(section, z, *k, &self.cost),
            IndexKind::Sen => kakwani_index(section, z, 1, &self.cost),
            IndexKind::Shorrocks => {
                shorrocks_thon_index(section, z, RankVariant::Shorrocks, &self.cost)
            }
            IndexKind::Thon => shorrocks_thon_index(section, z, RankVariant::Thon, &self.cost),
            IndexKind::Fgt(a) => fgt_index(section, z, *a),
        }
    }
}

fn check_inputs(section: &CrossSection, z: f64) -> Result<()> {
    if section.n() == 0 {
        return Err(Error::InvalidParameter("empty cross-section".into()));
    }
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::InvalidThreshold(format!("threshold {z} must be finite and > 0")));
    }
    Ok(())
}

/// General weighted form `A(n,Q)/(n B(Q)) Σ_{j≤Q} w(μ₁n+μ₂Q−μ₃j+μ₄) d((z−Y_{j,n})/z)`.
///
/// Evaluated as `A · S / (n · B)`. Returns 0 when nobody is at or below `z`.
pub fn wmlg_general(
    section: &CrossSection,
    z: f64,
    scheme: &WeightScheme,
    cost: &CostFunction,
) -> Result<f64> {
    check_inputs(section, z)?;
    let n = section.n();
    let q = headcount(section, z);
    if q == 0 {
        return Ok(0.0);
    }
    let b = scheme.normaliser(q);
    if b == 0.0 {
        return Err(Error::DegenerateWeights { q });
    }
    let mut sum = 0.0;
    for (j, &y) in (1..=q).zip(section.sorted()) {
        let arg = scheme.argument(n, q, j);
        if arg <= 0 {
            return Err(Error::InvalidWeightIndex {
                argument: arg,
                j,
                n,
                q,
            });
        }
        sum += scheme.weight(arg as u64) * cost.eval((z - y) / z);
    }
    Ok(scheme.scale(n, q) * sum / (n as f64 * b))
}

/// Kakwani index of parameter `k`; identical to [`wmlg_general`] with
/// [`WeightScheme::kakwani`].
pub fn kakwani_index(section: &CrossSection, z: f64, k: u32, cost: &CostFunction) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("Kakwani parameter k must be >= 1".into()));
    }
    wmlg_general(section, z, &WeightScheme::kakwani(k), cost)
}

/// Thon index `n⁻² Σ_{j≤Q} (2n − 2j + 1) d(·)`, or Shorrocks with `n(n+1)`.
pub fn shorrocks_thon_index(
    section: &CrossSection,
    z: f64,
    variant: RankVariant,
    cost: &CostFunction,
) -> Result<f64> {
    check_inputs(section, z)?;
    let n = section.n();
    let q = headcount(section, z);
    let sum: f64 = section.sorted()[..q]
        .iter()
        .enumerate()
        .map(|(i, &y)| (2 * n - 2 * (i + 1) + 1) as f64 * cost.eval((z - y) / z))
        .sum();
    let nf = n as f64;
    Ok(match variant {
        RankVariant::Thon => sum / (nf * nf),
        RankVariant::Shorrocks => sum / (nf * (nf + 1.0)),
    })
}

/// FGT(α) `n⁻¹ Σ_{Y_j ≤ z} ((z − Y_j)/z)^α`, with `0⁰ = 1` so FGT(0) is the
/// headcount ratio. Identical to [`wmlg_general`] with unit weights.
pub fn fgt_index(section: &CrossSection, z: f64, alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("FGT exponent {alpha} must be >= 0")));
    }
    wmlg_general(
        section,
        z,
        &WeightScheme::unit(),
        &CostFunction::power_unchecked(alpha),
    )
}

/// `(t, J_n(t))` at every grid time, with `Z(t)` from the schedule.
pub fn index_series(
    panel: &PanelDataset,
    thresholds: &ThresholdSchedule,
    spec: &IndexSpec,
) -> Result<Vec<(f64, f64)>> {
    panel
        .times()
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let z = thresholds.at(t).map_err(|e| e.at_time(t))?;
            let section = CrossSection::new(panel.column(i).to_vec());
            spec.evaluate(&section, z)
                .map(|v| (t, v))
                .map_err(|e| e.at_time(t))
        })
        .collect()
}
