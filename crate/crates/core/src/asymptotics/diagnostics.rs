//! Empirical checks of the regularity hypotheses on a panel or a model.

use super::model::DistributionModel;
use crate::error::{Error, Result};
use crate::normal;
use crate::panel::{empirical_cdf, CrossSection, PanelDataset, ThresholdSchedule};
use crate::quadrature::ScoreGrid;
use serde::Serialize;

/// Largest single-individual share of a squared-increment sum before the
/// pair is flagged.
const SPIKE_SHARE: f64 = 0.5;
/// A pair is also flagged when its quotient exceeds this multiple of the
/// median quotient (with at least three pairs).
const SPIKE_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderQuotient {
    pub t: f64,
    pub s: f64,
    pub quotient: f64,
    pub flagged: bool,
    /// Individual with the largest squared increment (panels only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_id: Option<String>,
    /// That individual's share of the pair's squared increments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub r: f64,
    /// `min_t G_t(Z₁)`.
    pub beta_hat: f64,
    /// `max_t G_t(Z₂)`.
    pub xi_hat: f64,
    /// `0 < β̂ <= ξ̂ < 1`.
    pub marked_mass_bounded: bool,
    /// `|Z(s) − Z(t)|² / |t − s|^{1+r}` over adjacent times.
    pub threshold_quotients: Vec<HolderQuotient>,
    /// `E|Y(t) − Y(s)|² / |t − s|^{1+r}` over adjacent times.
    pub increment_quotients: Vec<HolderQuotient>,
    pub warnings: Vec<String>,
}

impl HypothesisReport {
    pub fn any_flagged(&self) -> bool {
        !self.marked_mass_bounded
            || self
                .increment_quotients
                .iter()
                .chain(&self.threshold_quotients)
                .any(|q| q.flagged)
    }
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Hölder exponent r = {r} must lie in (0, 1/2)")))
    }
}

fn holder(num: f64, t: f64, s: f64, r: f64) -> f64 {
    num / (s - t).abs().powf(1.0 + r)
}

fn threshold_quotients(times: &[f64], thresholds: &ThresholdSchedule, r: f64) -> Result<Vec<HolderQuotient>> {
    times
        .windows(2)
        .map(|w| {
            let dz = thresholds.at(w[1])? - thresholds.at(w[0])?;
            Ok(HolderQuotient {
                t: w[0],
                s: w[1],
                quotient: holder(dz * dz, w[0], w[1], r),
                flagged: false,
                top_id: None,
                top_share: None,
            })
        })
        .collect()
}

fn flag_outliers(quotients: &mut [HolderQuotient]) {
    if quotients.len() < 3 {
        return;
    }
    let mut sorted: Vec<f64> = quotients.iter().map(|q| q.quotient).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    for q in quotients.iter_mut() {
        if median > 0.0 && q.quotient > SPIKE_RATIO * median {
            q.flagged = true;
        }
    }
}

fn finish(
    r: f64,
    beta_hat: f64,
    xi_hat: f64,
    threshold_quotients: Vec<HolderQuotient>,
    mut increment_quotients: Vec<HolderQuotient>,
    mut warnings: Vec<String>,
) -> HypothesisReport {
    flag_outliers(&mut increment_quotients);
    let marked_mass_bounded = 0.0 < beta_hat && beta_hat <= xi_hat && xi_hat < 1.0;
    if !marked_mass_bounded {
        warnings.push(format!(
            "marked mass not bounded away from 0 and 1: beta = {beta_hat}, xi = {xi_hat}"
        ));
    }
    for q in &increment_quotients {
        if q.flagged {
            warnings.push(format!("increment spike between t = {} and t = {}", q.t, q.s));
        }
    }
    HypothesisReport {
        r,
        beta_hat,
        xi_hat,
        marked_mass_bounded,
        threshold_quotients,
        increment_quotients,
        warnings,
    }
}

/// Diagnostics from panel data with empirical CDFs.
pub fn hypothesis_diagnostics_panel(
    panel: &PanelDataset,
    thresholds: &ThresholdSchedule,
    r: f64,
) -> Result<HypothesisReport> {
    check_r(r)?;
    let times = panel.times();
    let (z1, z2) = (thresholds.lower(), thresholds.upper());
    let mut beta = f64::INFINITY;
    let mut xi = f64::NEG_INFINITY;
    for i in 0..panel.m() {
        let section = CrossSection::new(panel.column(i).to_vec());
        beta = beta.min(empirical_cdf(&section, z1));
        xi = xi.max(empirical_cdf(&section, z2));
    }
    let mut warnings = Vec::new();
    if times.len() < 2 {
        warnings.push("fewer than two times: no Hölder quotients".into());
    }
    let zq = threshold_quotients(times, thresholds, r)?;
    let mut increments = Vec::new();
    for i in 1..panel.m() {
        let (a, b) = (panel.column(i - 1), panel.column(i));
        let sq: Vec<f64> = a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).collect();
        let total: f64 = sq.iter().sum();
        let (top, &top_sq) = sq
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .expect("nonempty panel");
        let share = if total > 0.0 { top_sq / total } else { 0.0 };
        increments.push(HolderQuotient {
            t: times[i - 1],
            s: times[i],
            quotient: holder(total / sq.len() as f64, times[i - 1], times[i], r),
            flagged: sq.len() > 1 && share > SPIKE_SHARE,
            top_id: Some(panel.ids()[top].clone()),
            top_share: Some(share),
        });
    }
    Ok(finish(r, beta, xi, zq, increments, warnings))
}

/// Diagnostics from a model, with `E|Y(t) − Y(s)|²` by quadrature.
pub fn hypothesis_diagnostics_model(
    model: &DistributionModel,
    thresholds: &ThresholdSchedule,
    r: f64,
    nodes: usize,
) -> Result<HypothesisReport> {
    check_r(r)?;
    let times = model.times();
    let (z1, z2) = (thresholds.lower(), thresholds.upper());
    let beta = model
        .marginals()
        .iter()
        .map(|m| m.cdf(z1))
        .fold(f64::INFINITY, f64::min);
    let xi = model
        .marginals()
        .iter()
        .map(|m| m.cdf(z2))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut warnings = Vec::new();
    if times.len() < 2 {
        warnings.push("fewer than two times: no Hölder quotients".into());
    }
    let zq = threshold_quotients(times, thresholds, r)?;
    let grid = ScoreGrid::new(0.5, nodes, 8.5);
    let mut increments = Vec::new();
    for w in times.windows(2) {
        let (ma, mb) = (model.marginal(w[0])?, model.marginal(w[1])?);
        let rho = model.correlation(w[0], w[1]);
        let qa: Vec<f64> = grid.nodes.iter().map(|n| ma.quantile_from_score(n.x)).collect();
        let qb: Vec<f64> = grid.nodes.iter().map(|n| mb.quantile_from_score(n.x)).collect();
        let second = |q: &[f64]| grid.nodes.iter().zip(q).map(|(n, v)| n.weight * v * v).sum::<f64>();
        let cross = if rho.abs() >= 1.0 {
            grid.nodes
                .iter()
                .zip(&qa)
                .map(|(n, a)| {
                    let x = if rho > 0.0 { n.x } else { -n.x };
                    n.weight * a * mb.quantile_from_score(x)
                })
                .sum::<f64>()
        } else {
            let mut acc = 0.0;
            for (na, a) in grid.nodes.iter().zip(&qa) {
                for (nb, b) in grid.nodes.iter().zip(&qb) {
                    acc += na.rule * nb.rule * normal::bivariate_pdf(na.x, nb.x, rho) * a * b;
                }
            }
            acc
        };
        let msq = (second(&qa) + second(&qb) - 2.0 * cross).max(0.0);
        increments.push(HolderQuotient {
            t: w[0],
            s: w[1],
            quotient: holder(msq, w[0], w[1], r),
            flagged: false,
            top_id: None,
            top_share: None,
        });
    }
    Ok(finish(r, beta, xi, zq, increments, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::model::{Dependence, Marginal};

    fn panel(jump: f64) -> PanelDataset {
        let ids: Vec<String> = (0..20).map(|i| format!("p{i}")).collect();
        let base: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.1).collect();
        let mut next: Vec<f64> = base.iter().map(|v| v + 0.05).collect();
        next[3] += jump;
        PanelDataset::new(ids, vec![0.0, 0.5], vec![base, next]).unwrap()
    }

    #[test]
    fn constant_threshold_has_zero_quotients() {
        let z = ThresholdSchedule::constant(2.0, &[0.0, 0.5]).unwrap();
        let rep = hypothesis_diagnostics_panel(&panel(0.0), &z, 0.25).unwrap();
        assert!(rep.threshold_quotients.iter().all(|q| q.quotient == 0.0));
        assert!(!rep.increment_quotients[0].flagged);
        assert!(rep.marked_mass_bounded);
    }

    #[test]
    fn linear_threshold_quotient() {
        let h = 0.5;
        let z = ThresholdSchedule::from_pairs(vec![(0.0, 1.0), (h, 1.0 + h)]).unwrap();
        let rep = hypothesis_diagnostics_panel(&panel(0.0), &z, 0.25).unwrap();
        let q = rep.threshold_quotients[0].quotient;
        assert!((q - h.powf(0.75)).abs() < 1e-14);
    }

    #[test]
    fn jump_is_flagged() {
        let z = ThresholdSchedule::constant(2.0, &[0.0, 0.5]).unwrap();
        let rep = hypothesis_diagnostics_panel(&panel(10.0), &z, 0.25).unwrap();
        let q = &rep.increment_quotients[0];
        assert!(q.flagged);
        assert_eq!(q.top_id.as_deref(), Some("p3"));
        assert!(rep.any_flagged());
    }

    #[test]
    fn model_increments() {
        let z = ThresholdSchedule::constant(0.5, &[0.0, 1.0]).unwrap();
        let m = DistributionModel::stationary(
            vec![0.0, 1.0],
            Marginal::Uniform { lo: 0.0, hi: 1.0 },
            Dependence::Independent,
        )
        .unwrap();
        let rep = hypothesis_diagnostics_model(&m, &z, 0.25, 257).unwrap();
        // Independent uniforms: E|U − V|² = 1/6.
        assert!((rep.increment_quotients[0].quotient - 1.0 / 6.0).abs() < 1e-6);
        assert!((rep.beta_hat - 0.5).abs() < 1e-15);
        let como = DistributionModel::stationary(
            vec![0.0, 1.0],
            Marginal::Uniform { lo: 0.0, hi: 1.0 },
            Dependence::Exchangeable(1.0),
        )
        .unwrap();
        let rep = hypothesis_diagnostics_model(&como, &z, 0.25, 257).unwrap();
        assert!(rep.increment_quotients[0].quotient < 1e-10);
    }
}
