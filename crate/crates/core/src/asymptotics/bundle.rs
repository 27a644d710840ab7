//! Population index and the limit functions of the linear representation.

use super::model::{DistributionModel, Marginal};
use super::shape::LimitShape;
use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::index::{IndexKind, IndexSpec};
use crate::normal;
use crate::panel::ThresholdSchedule;
use crate::quadrature::{refine, QuadratureSettings, ScoreGrid};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Below this `H_pi` the ratio form is treated as degenerate.
const H_PI_FLOOR: f64 = 1e-14;

/// How `g_t` combines the `c` and `pi` parts in the ratio form.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GtAssembly {
    /// `g = (c γ̃ − J pi e) / H_pi + K e`.
    #[default]
    Linearized,
    /// `g = (c γ̃ − J (pi + K) e) / H_pi`.
    Literal,
}

/// Whether the gap cost multiplies `c` inside `g_t` for non-ratio shapes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapFactor {
    #[default]
    Included,
    Omitted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleOptions {
    pub assembly: GtAssembly,
    pub gap_factor: GapFactor,
}

/// Limit quantities of one index at one time under a model.
#[derive(Debug, Clone)]
pub struct TheoremOneBundle {
    pub time: f64,
    pub threshold: f64,
    /// `p = G_t(Z(t))`.
    pub marked_mass: f64,
    pub h_c: f64,
    pub h_pi: f64,
    pub k_c: f64,
    pub k_pi: f64,
    pub k: f64,
    /// `J(t)`.
    pub index: f64,
    /// `η(t) = E g_t(Y(t))`.
    pub eta: f64,
    /// `E ψ_t(Y(t)) = ∫ G_t ν_t dG_t`.
    pub tail_mean: f64,
    /// Grid size at which the integrals settled.
    pub nodes: usize,
    degenerate: bool,
    shape: Arc<dyn LimitShape>,
    cost: CostFunction,
    marginal: Marginal,
    options: BundleOptions,
}

struct Integrals {
    h_c: f64,
    h_pi: f64,
    k_c: f64,
    k_pi: f64,
}

fn integrals(
    grid: &ScoreGrid,
    p: f64,
    z: f64,
    marginal: &Marginal,
    shape: &dyn LimitShape,
    cost: &CostFunction,
) -> Integrals {
    let ratio = shape.ratio_form();
    let mut out = Integrals {
        h_c: 0.0,
        h_pi: 0.0,
        k_c: 0.0,
        k_pi: 0.0,
    };
    for node in grid.nodes.iter().filter(|n| n.marked) {
        let y = marginal.quantile_from_score(node.x);
        let gap = cost.gap_cost(z, y.min(z));
        out.h_c += node.weight * shape.c(p, node.s) * gap;
        out.k_c += node.weight * shape.c_x(p, node.s) * gap;
        if ratio {
            out.h_pi += node.weight * shape.pi(p, node.s);
            out.k_pi += node.weight * shape.pi_x(p, node.s);
        }
    }
    out
}

fn threshold_at(thresholds: &ThresholdSchedule, t: f64) -> Result<f64> {
    thresholds.at(t).map_err(|e| e.at_time(t))
}

/// Marked mass `G(Z)`; for a point mass the level scale is `(0, 1)` itself.
fn marked_mass(marginal: &Marginal, z: f64) -> f64 {
    marginal.cdf(z)
}

/// Population index `J(t)` by quadrature on the level scale.
pub fn exact_index(
    model: &DistributionModel,
    t: f64,
    thresholds: &ThresholdSchedule,
    spec: &IndexSpec,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let marginal = *model.marginal(t)?;
    let z = threshold_at(thresholds, t)?;
    let shape = spec.limit_shape()?;
    let cost = spec.cost().clone();
    let p = marked_mass(&marginal, z);
    if p <= 0.0 {
        return Ok(0.0);
    }
    let ratio = shape.ratio_form();
    let (value, _) = refine(
        settings.nodes,
        settings.rtol,
        1e-12,
        settings.max_refinements,
        |nodes| {
            let grid = ScoreGrid::new(p, nodes, settings.tail);
            let i = integrals(&grid, p, z, &marginal, shape.as_ref(), &cost);
            if ratio {
                if i.h_pi <= H_PI_FLOOR {
                    return Err(Error::DegenerateModel(format!(
                        "H_pi = {:e} at t = {t}",
                        i.h_pi
                    )));
                }
                Ok(i.h_c / i.h_pi)
            } else {
                Ok(i.h_c)
            }
        },
        |a, b| ((a - b).abs(), a.abs().max(b.abs())),
    )
    .map_err(|e| e.at_time(t))?;
    Ok(value)
}

/// `r_k(t) = ∫_0^Z (G(Z) − G(y))^k γ(y) dG(y)`.
pub fn r_k(
    model: &DistributionModel,
    t: f64,
    thresholds: &ThresholdSchedule,
    cost: &CostFunction,
    k: u32,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let marginal = *model.marginal(t)?;
    let z = threshold_at(thresholds, t)?;
    let p = marked_mass(&marginal, z);
    if p <= 0.0 {
        return Ok(0.0);
    }
    let (value, _) = refine(
        settings.nodes,
        settings.rtol,
        1e-14,
        settings.max_refinements,
        |nodes| {
            let grid = ScoreGrid::new(p, nodes, settings.tail);
            Ok(grid.integrate(|n| {
                if !n.marked {
                    return 0.0;
                }
                let y = marginal.quantile_from_score(n.x).min(z);
                (p - n.s).powi(k as i32) * cost.gap_cost(z, y)
            }))
        },
        |a, b| ((a - b).abs(), a.abs().max(b.abs())),
    )
    .map_err(|e| e.at_time(t))?;
    Ok(value)
}

/// Kakwani population index written as `(k + 1) ∫ (1 − G/G(Z))^e γ dG`
/// with a free exponent `e`; `e = k` reproduces `H_c / H_pi`.
pub fn kakwani_direct(
    model: &DistributionModel,
    t: f64,
    thresholds: &ThresholdSchedule,
    cost: &CostFunction,
    k: u32,
    exponent: u32,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let marginal = *model.marginal(t)?;
    let z = threshold_at(thresholds, t)?;
    let p = marked_mass(&marginal, z);
    if p <= 0.0 {
        return Ok(0.0);
    }
    let r = r_k(model, t, thresholds, cost, exponent, settings)?;
    Ok((k + 1) as f64 * r / p.powi(exponent as i32))
}

/// `K(t)` for Kakwani(k) in closed form,
/// `(k + 1) [k r_{k−1} G(Z)^{−k} + r_k G(Z)^{−k−1}]`.
pub fn kakwani_k_closed_form(
    model: &DistributionModel,
    t: f64,
    thresholds: &ThresholdSchedule,
    cost: &CostFunction,
    k: u32,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let (p, r_prev, r_k) = kakwani_k_parts(model, t, thresholds, cost, k, settings)?;
    let kf = k as f64;
    Ok((kf + 1.0) * (kf * r_prev / p.powi(k as i32) + r_k / p.powi(k as i32 + 1)))
}

/// `(k + 1) k [G(Z)^{−k−1} r_{k−1} + r_k]`, the alternative printed form.
pub fn kakwani_k_printed(
    model: &DistributionModel,
    t: f64,
    thresholds: &ThresholdSchedule,
    cost: &CostFunction,
    k: u32,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let (p, r_prev, r_k) = kakwani_k_parts(model, t, thresholds, cost, k, settings)?;
    let kf = k as f64;
    Ok((kf + 1.0) * kf * (r_prev / p.powi(k as i32 + 1) + r_k))
}

fn kakwani_k_parts(
    model: &DistributionModel,
    t: f64,
    thresholds: &ThresholdSchedule,
    cost: &CostFunction,
    k: u32,
    settings: &QuadratureSettings,
) -> Result<(f64, f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidParameter("Kakwani parameter k must be >= 1".into()));
    }
    let z = threshold_at(thresholds, t)?;
    let p = model.marginal(t)?.cdf(z);
    if p <= 0.0 {
        return Err(Error::DegenerateModel(format!("G(Z) = 0 at t = {t}")));
    }
    Ok((
        p,
        r_k(model, t, thresholds, cost, k - 1, settings)?,
        r_k(model, t, thresholds, cost, k, settings)?,
    ))
}

/// Derivative of `x ↦ ∫ c(x, s) γ̃ ds / ∫_0^p pi(x, s) ds` at `x = p` by
/// central differences, with the integration range held fixed.
pub fn k_finite_difference(
    model: &DistributionModel,
    t: f64,
    thresholds: &ThresholdSchedule,
    spec: &IndexSpec,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let marginal = *model.marginal(t)?;
    let z = threshold_at(thresholds, t)?;
    let shape = spec.limit_shape()?;
    let cost = spec.cost();
    let p = marginal.cdf(z);
    let grid = ScoreGrid::new(p, settings.nodes, settings.tail);
    let ratio_at = |x: f64| {
        let mut num = 0.0;
        let mut den = 0.0;
        for n in grid.nodes.iter().filter(|n| n.marked) {
            let y = marginal.quantile_from_score(n.x).min(z);
            num += n.weight * shape.c(x, n.s) * cost.gap_cost(z, y);
            den += n.weight * shape.pi(x, n.s);
        }
        if shape.ratio_form() {
            num / den
        } else {
            num
        }
    };
    let h = 1e-5 * p;
    Ok((ratio_at(p + h) - ratio_at(p - h)) / (2.0 * h))
}

/// Computes every limit quantity of `spec` at time `t`.
pub fn theorem_one_bundle(
    model: &DistributionModel,
    t: f64,
    thresholds: &ThresholdSchedule,
    spec: &IndexSpec,
    settings: &QuadratureSettings,
    options: BundleOptions,
) -> Result<TheoremOneBundle> {
    let marginal = *model.marginal(t)?;
    let z = threshold_at(thresholds, t)?;
    let shape = spec.limit_shape()?;
    if let IndexKind::General(_) = spec.kind() {
        log::debug!("general weights at t = {t} use shape {}", shape.name());
    }
    let p = marked_mass(&marginal, z);
    let mut bundle = TheoremOneBundle {
        time: t,
        threshold: z,
        marked_mass: p,
        h_c: 0.0,
        h_pi: 0.0,
        k_c: 0.0,
        k_pi: 0.0,
        k: 0.0,
        index: 0.0,
        eta: 0.0,
        tail_mean: 0.0,
        nodes: 0,
        degenerate: marginal.is_degenerate() || p <= 0.0,
        shape,
        cost: spec.cost().clone(),
        marginal,
        options,
    };
    if p <= 0.0 {
        return Ok(bundle);
    }
    let ratio = bundle.shape.ratio_form();
    let ((ints, eta, tail_mean), nodes) = refine(
        settings.nodes,
        settings.rtol,
        1e-12,
        settings.max_refinements,
        |nodes| {
            let grid = ScoreGrid::new(p, nodes, settings.tail);
            let ints = integrals(&grid, p, z, &marginal, bundle.shape.as_ref(), &bundle.cost);
            if ratio && ints.h_pi <= H_PI_FLOOR {
                return Err(Error::DegenerateModel(format!(
                    "H_pi = {:e} at t = {t}",
                    ints.h_pi
                )));
            }
            let mut probe = bundle.clone();
            probe.set_integrals(&ints);
            let (eta, tail_mean) = if probe.degenerate {
                (0.0, 0.0)
            } else {
                (
                    grid.integrate(|n| probe.g_on_node(n.x, n.s, n.marked)),
                    grid.integrate(|n| n.s * probe.nu_on_node(n.x, n.s, n.marked)),
                )
            };
            Ok((ints, eta, tail_mean))
        },
        |a, b| {
            let pairs = [
                (a.0.h_c, b.0.h_c),
                (a.0.h_pi, b.0.h_pi),
                (a.0.k_c, b.0.k_c),
                (a.0.k_pi, b.0.k_pi),
                (a.1, b.1),
                (a.2, b.2),
            ];
            pairs.iter().fold((0.0, 0.0), |(d, s), &(x, y)| {
                (f64::max(d, (x - y).abs()), f64::max(s, x.abs().max(y.abs())))
            })
        },
    )
    .map_err(|e| e.at_time(t))?;
    bundle.set_integrals(&ints);
    bundle.eta = eta;
    bundle.tail_mean = tail_mean;
    bundle.nodes = nodes;
    Ok(bundle)
}

impl TheoremOneBundle {
    fn set_integrals(&mut self, i: &Integrals) {
        self.h_c = i.h_c;
        self.h_pi = i.h_pi;
        self.k_c = i.k_c;
        self.k_pi = i.k_pi;
        if self.shape.ratio_form() {
            self.index = i.h_c / i.h_pi;
            self.k = i.k_c / i.h_pi - i.h_c * i.k_pi / (i.h_pi * i.h_pi);
        } else {
            self.index = i.h_c;
            self.k = i.k_c;
        }
    }

    /// Whether the influence functions vanish identically (point mass or
    /// empty marked set).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn shape(&self) -> &Arc<dyn LimitShape> {
        &self.shape
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    pub fn options(&self) -> BundleOptions {
        self.options
    }

    /// Level `G_t(y)` and marked flag `y <= Z`.
    pub fn level(&self, y: f64) -> (f64, bool) {
        (self.marginal.cdf(y), y <= self.threshold)
    }

    fn gap(&self, y: f64, marked: bool) -> f64 {
        if marked {
            self.cost.gap_cost(self.threshold, y.min(self.threshold))
        } else {
            0.0
        }
    }

    /// `g_{c,t}(y) = c(p, G(y)) γ(y)`.
    pub fn g_c(&self, y: f64) -> f64 {
        let (s, marked) = self.level(y);
        self.shape.c(self.marked_mass, s) * self.gap(y, marked)
    }

    /// `pi(p, G(y)) e(y)`.
    pub fn g_pi(&self, y: f64) -> f64 {
        let (s, marked) = self.level(y);
        if marked {
            self.shape.pi(self.marked_mass, s)
        } else {
            0.0
        }
    }

    /// `∂c/∂y (p, G(y)) γ(y)`.
    pub fn nu_c(&self, y: f64) -> f64 {
        let (s, marked) = self.level(y);
        self.shape.c_y(self.marked_mass, s) * self.gap(y, marked)
    }

    /// `∂pi/∂y (p, G(y)) e(y)`.
    pub fn nu_pi(&self, y: f64) -> f64 {
        let (s, marked) = self.level(y);
        if marked {
            self.shape.pi_y(self.marked_mass, s)
        } else {
            0.0
        }
    }

    /// `g_t(y)`.
    pub fn g(&self, y: f64) -> f64 {
        let (s, marked) = self.level(y);
        self.g_parts(y, s, marked)
    }

    /// `ν_t(y)`.
    pub fn nu(&self, y: f64) -> f64 {
        let (s, marked) = self.level(y);
        self.nu_parts(y, s, marked)
    }

    /// `ν_t(G⁻¹(s))` on the level scale.
    pub fn nu_at_level(&self, s: f64) -> f64 {
        let marked = s <= self.marked_mass;
        self.nu_parts(self.marginal.quantile(s), s, marked)
    }

    pub(crate) fn g_on_node(&self, x: f64, s: f64, marked: bool) -> f64 {
        self.g_parts(self.marginal.quantile_from_score(x), s, marked)
    }

    pub(crate) fn nu_on_node(&self, x: f64, s: f64, marked: bool) -> f64 {
        self.nu_parts(self.marginal.quantile_from_score(x), s, marked)
    }

    fn g_parts(&self, y: f64, s: f64, marked: bool) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let p = self.marked_mass;
        let e = if marked { 1.0 } else { 0.0 };
        let gap = self.gap(y, marked);
        if !self.shape.ratio_form() {
            let factor = match self.options.gap_factor {
                GapFactor::Included => gap,
                GapFactor::Omitted => e,
            };
            return self.shape.c(p, s) * factor + self.k * e;
        }
        let c = self.shape.c(p, s) * gap;
        let pi = self.shape.pi(p, s) * e;
        match self.options.assembly {
            GtAssembly::Linearized => (c - self.index * pi) / self.h_pi + self.k * e,
            GtAssembly::Literal => (c - self.index * (pi + self.k * e)) / self.h_pi,
        }
    }

    fn nu_parts(&self, y: f64, s: f64, marked: bool) -> f64 {
        if self.degenerate || !marked {
            return 0.0;
        }
        let p = self.marked_mass;
        let nu_c = self.shape.c_y(p, s) * self.gap(y, marked);
        if !self.shape.ratio_form() {
            return nu_c;
        }
        (nu_c - self.index * self.shape.pi_y(p, s)) / self.h_pi
    }

    /// `ψ_t(u) = ∫_{x >= u} ν_t dG_t` at every node of `grid`.
    pub(crate) fn tail_on_grid(&self, grid: &ScoreGrid) -> Vec<f64> {
        if self.degenerate {
            return vec![0.0; grid.nodes.len()];
        }
        grid.marked_tail_integrals(|x| self.nu_on_node(x, normal::cdf(x), true))
    }
}
