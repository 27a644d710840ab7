//! Covariance function `Γ(t, s)` of the Gaussian limit, analytic and plug-in.

use super::bundle::{theorem_one_bundle, BundleOptions, GapFactor, GtAssembly, TheoremOneBundle};
use super::model::DistributionModel;
use super::shape::LimitShape;
use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::index::IndexSpec;
use crate::panel::{PanelDataset, ThresholdSchedule};
use crate::quadrature::{refine, QuadratureSettings, ScoreGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Cross term `κ` with or without centering of `g`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaCentering {
    /// `κ(g_t, ν_s) = E[(g_t − η(t)) ψ_s]`.
    #[default]
    Centered,
    /// `κ(g_t, ν_s) = E[g_t ψ_s]`.
    Uncentered,
}

/// Variant switches for the covariance assembly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovarianceOptions {
    pub bundle: BundleOptions,
    pub centering: KappaCentering,
    /// Adds `Γ₂` a second time.
    pub duplicate_gamma2: bool,
}

impl CovarianceOptions {
    fn combine(&self, g1: f64, g2: f64, g3: f64) -> f64 {
        if self.duplicate_gamma2 {
            g1 + 2.0 * g2 + g3
        } else {
            g1 + g2 + g3
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceMethod {
    AnalyticQuadrature,
    PluginEmpirical,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CovarianceDiagnostics {
    /// One-dimensional grid size used on the diagonal.
    pub nodes: Option<usize>,
    /// Per-axis grid size used off the diagonal.
    pub pair_nodes: Option<usize>,
    pub sample_size: Option<usize>,
}

/// `Γ` and its components over a set of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub times: Vec<f64>,
    /// Index value at each time (population or plug-in).
    pub index: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub gamma1: Vec<Vec<f64>>,
    pub gamma2: Vec<Vec<f64>>,
    pub gamma3: Vec<Vec<f64>>,
    pub method: CovarianceMethod,
    pub options: CovarianceOptions,
    pub diagnostics: CovarianceDiagnostics,
}

impl CovarianceEstimate {
    fn position(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&x| x == t)
            .ok_or(Error::UnknownTime(t))
    }

    /// `Γ(t, s)`.
    pub fn get(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.gamma[self.position(t)?][self.position(s)?])
    }

    /// `Γ(t, t)`.
    pub fn variance(&self, t: f64) -> Result<f64> {
        self.get(t, t)
    }

    pub fn index_at(&self, t: f64) -> Result<f64> {
        Ok(self.index[self.position(t)?])
    }

    /// Matrix as CSV with time labels as row and column headers.
    pub fn to_csv(&self) -> String {
        matrix_csv(&self.times, &self.gamma)
    }

    /// Writes `Γ` to `path` as CSV.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("covariance estimate serializes")
    }
}

fn matrix_csv(times: &[f64], m: &[Vec<f64>]) -> String {
    let mut out = String::from("time");
    for t in times {
        let _ = write!(out, ",{t}");
    }
    out.push('\n');
    for (t, row) in times.iter().zip(m) {
        let _ = write!(out, "{t}");
        for v in row {
            let _ = write!(out, ",{v:e}");
        }
        out.push('\n');
    }
    out
}

#[derive(Default, Clone, Copy)]
struct Cell {
    g1: f64,
    g2: f64,
    g3: f64,
}

struct Assembled {
    cells: Vec<Vec<Cell>>,
    nodes: usize,
    pair_nodes: usize,
}

fn empty_matrix(m: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; m]; m]
}

fn finish(
    times: Vec<f64>,
    index: Vec<f64>,
    cells: &[Vec<Cell>],
    method: CovarianceMethod,
    options: CovarianceOptions,
    diagnostics: CovarianceDiagnostics,
) -> CovarianceEstimate {
    let m = times.len();
    let mut est = CovarianceEstimate {
        times,
        index,
        gamma: empty_matrix(m),
        gamma1: empty_matrix(m),
        gamma2: empty_matrix(m),
        gamma3: empty_matrix(m),
        method,
        options,
        diagnostics,
    };
    for i in 0..m {
        for j in 0..m {
            let c = cells[i.min(j)][i.max(j)];
            est.gamma1[i][j] = c.g1;
            est.gamma2[i][j] = c.g2;
            est.gamma3[i][j] = c.g3;
            est.gamma[i][j] = options.combine(c.g1, c.g2, c.g3);
        }
    }
    est
}

/// Analytic `Γ` under `model` by quadrature on normal scores.
pub fn covariance_analytic(
    model: &DistributionModel,
    times: &[f64],
    thresholds: &ThresholdSchedule,
    spec: &IndexSpec,
    settings: &QuadratureSettings,
    options: CovarianceOptions,
) -> Result<CovarianceEstimate> {
    let bundles: Vec<TheoremOneBundle> = times
        .par_iter()
        .map(|&t| theorem_one_bundle(model, t, thresholds, spec, settings, options.bundle))
        .collect::<Result<_>>()?;
    let m = times.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let computed: Vec<(Cell, usize)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                diagonal_cell(&bundles[i], settings, options.centering)
            } else {
                let rho = model.correlation(times[i], times[j]);
                pair_cell(&bundles[i], &bundles[j], rho, settings, options.centering)
            }
            .map_err(|e| e.at_time(times[i]))
        })
        .collect::<Result<_>>()?;
    let mut assembled = Assembled {
        cells: vec![vec![Cell::default(); m]; m],
        nodes: 0,
        pair_nodes: 0,
    };
    for (&(i, j), &(cell, nodes)) in pairs.iter().zip(&computed) {
        assembled.cells[i][j] = cell;
        if i == j {
            assembled.nodes = assembled.nodes.max(nodes);
        } else {
            assembled.pair_nodes = assembled.pair_nodes.max(nodes);
        }
    }
    let diagnostics = CovarianceDiagnostics {
        nodes: Some(assembled.nodes),
        pair_nodes: (m > 1).then_some(assembled.pair_nodes),
        sample_size: None,
    };
    let est = finish(
        times.to_vec(),
        bundles.iter().map(|b| b.index).collect(),
        &assembled.cells,
        CovarianceMethod::AnalyticQuadrature,
        options,
        diagnostics,
    );
    for (i, &t) in times.iter().enumerate() {
        if est.gamma[i][i] < -1e-10 && options == CovarianceOptions::default() {
            return Err(Error::Internal(format!(
                "analytic variance {} < 0 at t = {t}",
                est.gamma[i][i]
            )));
        }
    }
    Ok(est)
}

fn cell_distance(a: &Cell, b: &Cell) -> (f64, f64) {
    let d = (a.g1 - b.g1)
        .abs()
        .max((a.g2 - b.g2).abs())
        .max((a.g3 - b.g3).abs());
    let s = a.g1.abs().max(a.g2.abs()).max(a.g3.abs());
    (d, s)
}

fn diagonal_cell(
    b: &TheoremOneBundle,
    settings: &QuadratureSettings,
    centering: KappaCentering,
) -> Result<(Cell, usize)> {
    if b.is_degenerate() {
        return Ok((Cell::default(), 0));
    }
    refine(
        settings.nodes,
        settings.rtol,
        1e-12,
        settings.max_refinements,
        |nodes| {
            let grid = ScoreGrid::new(b.marked_mass, nodes, settings.tail);
            let psi = b.tail_on_grid(&grid);
            let g: Vec<f64> = grid
                .nodes
                .iter()
                .map(|n| b.g_on_node(n.x, n.s, n.marked))
                .collect();
            let mut sums = [0.0; 5];
            for ((n, &gi), &pi) in grid.nodes.iter().zip(&g).zip(&psi) {
                sums[0] += n.weight * gi;
                sums[1] += n.weight * pi;
                sums[2] += n.weight * gi * gi;
                sums[3] += n.weight * pi * pi;
                sums[4] += n.weight * gi * pi;
            }
            let [eg, ep, egg, epp, egp] = sums;
            Ok(Cell {
                g1: egg - eg * eg,
                g2: epp - ep * ep,
                g3: match centering {
                    KappaCentering::Centered => 2.0 * (egp - eg * ep),
                    KappaCentering::Uncentered => 2.0 * egp,
                },
            })
        },
        cell_distance,
    )
}

struct Nodal {
    x: Vec<f64>,
    rule: Vec<f64>,
    weight: Vec<f64>,
    g: Vec<f64>,
    psi: Vec<f64>,
}

fn nodal(b: &TheoremOneBundle, nodes: usize, tail: f64) -> Nodal {
    let grid = ScoreGrid::new(b.marked_mass, nodes, tail);
    let psi = b.tail_on_grid(&grid);
    Nodal {
        x: grid.nodes.iter().map(|n| n.x).collect(),
        rule: grid.nodes.iter().map(|n| n.rule).collect(),
        weight: grid.nodes.iter().map(|n| n.weight).collect(),
        g: grid
            .nodes
            .iter()
            .map(|n| b.g_on_node(n.x, n.s, n.marked))
            .collect(),
        psi,
    }
}

fn mean(weights: &[f64], v: &[f64]) -> f64 {
    weights.iter().zip(v).map(|(w, x)| w * x).sum()
}

fn pair_cell(
    bt: &TheoremOneBundle,
    bs: &TheoremOneBundle,
    rho: f64,
    settings: &QuadratureSettings,
    centering: KappaCentering,
) -> Result<(Cell, usize)> {
    if bt.is_degenerate() || bs.is_degenerate() {
        return Ok((Cell::default(), 0));
    }
    if rho.abs() >= 1.0 {
        return Err(Error::DegenerateModel(format!(
            "copula correlation {rho} has no joint density"
        )));
    }
    refine(
        settings.pair_nodes,
        settings.pair_rtol,
        1e-10,
        settings.max_refinements,
        |nodes| {
            let a = nodal(bt, nodes, settings.tail);
            let b = nodal(bs, nodes, settings.tail);
            let (eg_t, ep_t) = (mean(&a.weight, &a.g), mean(&a.weight, &a.psi));
            let (eg_s, ep_s) = (mean(&b.weight, &b.g), mean(&b.weight, &b.psi));
            let [egg, epp, egp, epg] = if rho == 0.0 {
                [eg_t * eg_s, ep_t * ep_s, eg_t * ep_s, ep_t * eg_s]
            } else {
                joint_moments(&a, &b, rho)
            };
            let g3 = match centering {
                KappaCentering::Centered => (egp - eg_t * ep_s) + (epg - ep_t * eg_s),
                KappaCentering::Uncentered => egp + epg,
            };
            Ok(Cell {
                g1: egg - eg_t * eg_s,
                g2: epp - ep_t * ep_s,
                g3,
            })
        },
        cell_distance,
    )
}

/// `E[g_t g_s]`, `E[ψ_t ψ_s]`, `E[g_t ψ_s]`, `E[ψ_t g_s]` under the
/// bivariate normal density of the scores.
fn joint_moments(a: &Nodal, b: &Nodal, rho: f64) -> [f64; 4] {
    let one = 1.0 - rho * rho;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * one.sqrt());
    (0..a.x.len())
        .into_par_iter()
        .map(|i| {
            let xi = a.x[i];
            let mut row = [0.0; 4];
            for j in 0..b.x.len() {
                let yj = b.x[j];
                let q = (xi * xi - 2.0 * rho * xi * yj + yj * yj) / (2.0 * one);
                if q > 745.0 {
                    continue;
                }
                let w = b.rule[j] * norm * (-q).exp();
                row[0] += w * b.g[j];
                row[1] += w * b.psi[j];
            }
            let r = a.rule[i];
            [
                r * a.g[i] * row[0],
                r * a.psi[i] * row[1],
                r * a.g[i] * row[1],
                r * a.psi[i] * row[0],
            ]
        })
        .reduce(
            || [0.0; 4],
            |x, y| [x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]],
        )
}

/// `∫ (∫_{x >= u} ν dG)² dG(u)`, computed through the identity
/// `2 ∫ s ν̃(s) ψ(s) ds` rather than by squaring `ψ`.
pub fn tail_square_integral(b: &TheoremOneBundle, settings: &QuadratureSettings) -> f64 {
    if b.is_degenerate() {
        return 0.0;
    }
    let grid = ScoreGrid::new(b.marked_mass, settings.nodes, settings.tail);
    let psi = b.tail_on_grid(&grid);
    grid.nodes
        .iter()
        .zip(&psi)
        .map(|(n, &p)| 2.0 * n.weight * n.s * b.nu_on_node(n.x, n.s, n.marked) * p)
        .sum()
}

/// Per-individual influence values at one time.
#[derive(Debug, Clone)]
pub struct PluginInfluence {
    /// Plug-in index `Ĥ_c / Ĥ_pi` (or `Ĥ_c`).
    pub index: f64,
    pub g: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Plug-in `ĝ_t` and `ψ̂_t` at each observation of one cross-section.
pub fn plugin_influence(
    values: &[f64],
    z: f64,
    shape: &dyn LimitShape,
    cost: &CostFunction,
    options: BundleOptions,
) -> Result<PluginInfluence> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    // Right-continuous empirical CDF at each observation; ties share the top rank.
    let mut level = vec![0.0; n];
    let mut group_start = vec![0usize; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            level[k] = (j + 1) as f64 / n as f64;
            group_start[k] = i;
        }
        i = j + 1;
    }
    let q = values.iter().filter(|&&y| y <= z).count();
    if q == 0 {
        return Err(Error::DegenerateCrossSection(z));
    }
    let p = q as f64 / n as f64;
    let nf = n as f64;
    let ratio = shape.ratio_form();
    let mut gap = vec![0.0; n];
    let (mut h_c, mut h_pi, mut k_c, mut k_pi) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..n {
        if values[k] <= z {
            gap[k] = cost.gap_cost(z, values[k]);
            let s = level[k];
            h_c += shape.c(p, s) * gap[k];
            k_c += shape.c_x(p, s) * gap[k];
            if ratio {
                h_pi += shape.pi(p, s);
                k_pi += shape.pi_x(p, s);
            }
        }
    }
    h_c /= nf;
    h_pi /= nf;
    k_c /= nf;
    k_pi /= nf;
    if ratio && h_pi <= 0.0 {
        return Err(Error::DegenerateCrossSection(z));
    }
    let (index, kk) = if ratio {
        (h_c / h_pi, k_c / h_pi - h_c * k_pi / (h_pi * h_pi))
    } else {
        (h_c, k_c)
    };
    let mut g = vec![0.0; n];
    let mut nu = vec![0.0; n];
    for k in 0..n {
        let marked = values[k] <= z;
        let e = if marked { 1.0 } else { 0.0 };
        let s = level[k];
        if ratio {
            let c = shape.c(p, s) * gap[k];
            let pi = shape.pi(p, s) * e;
            g[k] = match options.assembly {
                GtAssembly::Linearized => (c - index * pi) / h_pi + kk * e,
                GtAssembly::Literal => (c - index * (pi + kk * e)) / h_pi,
            };
            if marked {
                nu[k] = (shape.c_y(p, s) * gap[k] - index * shape.pi_y(p, s)) / h_pi;
            }
        } else {
            let factor = match options.gap_factor {
                GapFactor::Included => gap[k],
                GapFactor::Omitted => e,
            };
            g[k] = shape.c(p, s) * factor + kk * e;
            if marked {
                nu[k] = shape.c_y(p, s) * gap[k];
            }
        }
    }
    // ψ̂(Y_i) = n⁻¹ Σ_{Y_k >= Y_i} ν̂(Y_k), via suffix sums over the sorted order.
    let mut suffix = vec![0.0; n + 1];
    for pos in (0..n).rev() {
        suffix[pos] = suffix[pos + 1] + nu[order[pos]];
    }
    let psi = (0..n).map(|k| suffix[group_start[k]] / nf).collect();
    Ok(PluginInfluence { index, g, psi })
}

/// Covariance with divisor `n`, shifted by the first observation so that
/// constant inputs give exactly zero.
fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (a0, b0) = (a[0], b[0]);
    let ma = a.iter().map(|x| x - a0).sum::<f64>() / n;
    let mb = b.iter().map(|y| y - b0).sum::<f64>() / n;
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - a0 - ma) * (y - b0 - mb))
        .sum::<f64>()
        / n
}

fn cross_mean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// Plug-in `Γ̂` from a panel: empirical CDFs, sample averages, and the
/// headcount ratio for `G_t(Z(t))`.
pub fn covariance_plugin(
    panel: &PanelDataset,
    times: &[f64],
    thresholds: &ThresholdSchedule,
    spec: &IndexSpec,
    options: CovarianceOptions,
) -> Result<CovarianceEstimate> {
    let columns: Vec<&[f64]> = times
        .iter()
        .map(|&t| panel.time_index(t).map(|i| panel.column(i)))
        .collect::<Result<_>>()?;
    let zs: Vec<f64> = times
        .iter()
        .map(|&t| thresholds.at(t).map_err(|e| e.at_time(t)))
        .collect::<Result<_>>()?;
    covariance_plugin_columns(&columns, times, &zs, spec, options)
}

/// [`covariance_plugin`] on raw time columns sharing individual order.
pub fn covariance_plugin_columns(
    columns: &[&[f64]],
    times: &[f64],
    thresholds: &[f64],
    spec: &IndexSpec,
    options: CovarianceOptions,
) -> Result<CovarianceEstimate> {
    let n = columns.first().map_or(0, |c| c.len());
    if n == 0 {
        return Err(Error::InvalidParameter("empty panel".into()));
    }
    if n < 30 {
        log::warn!("plug-in covariance with only n = {n} individuals");
    }
    let shape = spec.limit_shape()?;
    let influence: Vec<PluginInfluence> = columns
        .iter()
        .zip(thresholds)
        .zip(times)
        .map(|((col, &z), &t)| {
            plugin_influence(col, z, shape.as_ref(), spec.cost(), options.bundle).map_err(|e| {
                match e {
                    Error::DegenerateCrossSection(_) => Error::DegenerateCrossSection(t),
                    other => other.at_time(t),
                }
            })
        })
        .collect::<Result<_>>()?;
    let m = times.len();
    let mut cells = vec![vec![Cell::default(); m]; m];
    for i in 0..m {
        for j in i..m {
            let (a, b) = (&influence[i], &influence[j]);
            let g3 = match options.centering {
                KappaCentering::Centered => covariance(&a.g, &b.psi) + covariance(&b.g, &a.psi),
                KappaCentering::Uncentered => cross_mean(&a.g, &b.psi) + cross_mean(&b.g, &a.psi),
            };
            cells[i][j] = Cell {
                g1: covariance(&a.g, &b.g),
                g2: covariance(&a.psi, &b.psi),
                g3,
            };
        }
    }
    let est = finish(
        times.to_vec(),
        influence.iter().map(|f| f.index).collect(),
        &cells,
        CovarianceMethod::PluginEmpirical,
        options,
        CovarianceDiagnostics {
            nodes: None,
            pair_nodes: None,
            sample_size: Some(n),
        },
    );
    let scale = est
        .gamma1
        .iter()
        .enumerate()
        .map(|(i, r)| r[i].abs())
        .fold(1.0, f64::max);
    for (i, &t) in times.iter().enumerate() {
        if est.gamma[i][i] < -1e-6 * scale && options == CovarianceOptions::default() {
            log::warn!("plug-in variance {} < 0 at t = {t}", est.gamma[i][i]);
        }
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::model::{Dependence, Marginal};

    fn model(dep: Dependence) -> DistributionModel {
        DistributionModel::stationary(vec![0.0, 1.0], Marginal::Uniform { lo: 0.0, hi: 1.0 }, dep)
            .unwrap()
    }

    fn z() -> ThresholdSchedule {
        ThresholdSchedule::from_pairs(vec![(0.0, 0.5), (1.0, 0.4)]).unwrap()
    }

    #[test]
    fn shorrocks_uniform_variance() {
        let est = covariance_analytic(
            &model(Dependence::Independent),
            &[0.0],
            &z(),
            &IndexSpec::shorrocks(),
            &QuadratureSettings::default(),
            CovarianceOptions::default(),
        )
        .unwrap();
        // Var(g + ψ) with g = 2(1 − y)(1 − 2y), ψ = ∫_y^{1/2} −2(1 − 2x) dx on [0, 1/2].
        assert!((est.gamma[0][0] - 0.205_555_555_6).abs() < 1e-8, "{}", est.gamma[0][0]);
        assert!(est.gamma1[0][0] >= 0.0);
    }

    #[test]
    fn independence_factorizes_and_is_symmetric() {
        let s = QuadratureSettings::default();
        let est = covariance_analytic(
            &model(Dependence::Independent),
            &[0.0, 1.0],
            &z(),
            &IndexSpec::kakwani(2).unwrap(),
            &s,
            CovarianceOptions::default(),
        )
        .unwrap();
        assert!(est.gamma[0][1].abs() < 1e-12);
        assert_eq!(est.gamma[0][1], est.gamma[1][0]);
        let dep = covariance_analytic(
            &model(Dependence::Ar1(0.6)),
            &[0.0, 1.0],
            &z(),
            &IndexSpec::kakwani(2).unwrap(),
            &s,
            CovarianceOptions::default(),
        )
        .unwrap();
        assert!(dep.gamma[0][1] > 0.0);
        assert!((dep.gamma[0][1] - dep.gamma[1][0]).abs() < 1e-10);
        assert!(dep.gamma[0][1] <= (dep.gamma[0][0] * dep.gamma[1][1]).sqrt());
    }

    #[test]
    fn tail_square_identity() {
        let s = QuadratureSettings::default();
        let m = model(Dependence::Independent);
        for spec in [IndexSpec::shorrocks(), IndexSpec::kakwani(2).unwrap()] {
            let b = theorem_one_bundle(&m, 0.0, &z(), &spec, &s, BundleOptions::default()).unwrap();
            let est =
                covariance_analytic(&m, &[0.0], &z(), &spec, &s, CovarianceOptions::default())
                    .unwrap();
            let c = tail_square_integral(&b, &s);
            let expect = est.gamma2[0][0] + b.tail_mean * b.tail_mean;
            assert!((c - expect).abs() < 1e-8, "{c} {expect}");
        }
    }

    #[test]
    fn plugin_constant_outcomes() {
        let col = vec![0.2; 40];
        let est = covariance_plugin_columns(
            &[&col],
            &[0.0],
            &[0.5],
            &IndexSpec::kakwani(1).unwrap(),
            CovarianceOptions::default(),
        )
        .unwrap();
        assert_eq!(est.gamma1[0][0], 0.0);
    }

    #[test]
    fn plugin_duplication_invariance() {
        let col: Vec<f64> = (0..57).map(|i| ((i * 37) % 57) as f64 / 57.0).collect();
        let col2: Vec<f64> = col.iter().map(|v| v * 0.9 + 0.05).collect();
        let twice: Vec<f64> = col.iter().chain(&col).copied().collect();
        let twice2: Vec<f64> = col2.iter().chain(&col2).copied().collect();
        for spec in [IndexSpec::shorrocks(), IndexSpec::kakwani(2).unwrap()] {
            let a = covariance_plugin_columns(
                &[&col, &col2],
                &[0.0, 1.0],
                &[0.5, 0.5],
                &spec,
                CovarianceOptions::default(),
            )
            .unwrap();
            let b = covariance_plugin_columns(
                &[&twice, &twice2],
                &[0.0, 1.0],
                &[0.5, 0.5],
                &spec,
                CovarianceOptions::default(),
            )
            .unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a.gamma[i][j] - b.gamma[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn plugin_rejects_empty_marked_set() {
        let col = vec![1.0; 40];
        let err = covariance_plugin_columns(
            &[&col],
            &[3.0],
            &[0.5],
            &IndexSpec::shorrocks(),
            CovarianceOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateCrossSection(t) if t == 3.0));
    }

    #[test]
    fn csv_export() {
        let est = covariance_plugin_columns(
            &[&[0.1, 0.2, 0.7], &[0.2, 0.3, 0.9]],
            &[1.0, 2.0],
            &[0.5, 0.5],
            &IndexSpec::thon(),
            CovarianceOptions::default(),
        )
        .unwrap();
        let csv = est.to_csv();
        assert!(csv.starts_with("time,1,2\n1,"));
        assert_eq!(csv.lines().count(), 3);
    }
}
