//! Simulation-based choice between competing readings of the limit formulas.
//!
//! Each ambiguity lists candidate formulas. A candidate is frozen when it
//! passes its test on every model and no other candidate does.

use super::experiments::{Check, ExperimentResult, Series, Tolerances};
use super::sampler::ProcessModel;
use super::stats;
use crate::asymptotics::{
    covariance_analytic, exact_index, kakwani_direct, BundleOptions, CovarianceOptions, GapFactor,
    GtAssembly, KappaCentering,
};
use crate::error::Result;
use crate::index::{IndexSpec, WeightScheme};
use crate::panel::{CrossSection, ThresholdSchedule};
use crate::quadrature::QuadratureSettings;
use rayon::prelude::*;
use serde::Serialize;

/// Outcome of one candidate on one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateOutcome {
    pub model: String,
    /// Analytic value the candidate predicts (an index or a variance).
    pub analytic: f64,
    /// Monte Carlo counterpart.
    pub empirical: f64,
    /// Test statistic compared with the tolerance.
    pub statistic: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub name: String,
    pub outcomes: Vec<CandidateOutcome>,
    pub passed: bool,
}

/// One flagged ambiguity and the variant frozen by simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ambiguity {
    pub name: String,
    /// `mean` compares `√n(J_n − J)` with zero, `variance` compares the
    /// Monte Carlo variance with `Γ(t,t)`.
    pub test: String,
    pub canonical: String,
    pub frozen: Option<String>,
    pub candidates: Vec<Candidate>,
    /// Variance and normality checks of the canonical spec on each model.
    pub support: Vec<Check>,
    pub passed: bool,
}

/// A named model for the arbitration runs.
#[derive(Debug, Clone)]
pub struct ArbitrationModel {
    pub name: String,
    pub process: ProcessModel,
}

/// Index `(1/n²) Σ_{j≤Q} (2n − j − 1) γ_j`.
fn printed_thon() -> IndexSpec {
    IndexSpec::general(WeightScheme::new(
        "thon-printed",
        |x| x as f64,
        [2, 0, 1, -1],
        |n, q| (q * (q + 1)) as f64 / (2 * n) as f64,
    ))
}

struct Draws {
    shorrocks: Vec<f64>,
    thon: Vec<f64>,
    thon_printed: Vec<f64>,
    kakwani: Vec<f64>,
}

fn draw(lab_pm: &ProcessModel, n: usize, reps: usize, t: f64, z: f64, k: u32) -> Result<Draws> {
    let ti = lab_pm.model.time_index(t)?;
    let specs = [
        IndexSpec::shorrocks(),
        IndexSpec::thon(),
        printed_thon(),
        IndexSpec::kakwani(k)?,
    ];
    let rows: Vec<[f64; 4]> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let section = CrossSection::new(lab_pm.simulate_column(n, r, ti));
            let mut row = [0.0; 4];
            for (slot, spec) in row.iter_mut().zip(&specs) {
                *slot = spec.evaluate(&section, z)?;
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    Ok(Draws {
        shorrocks: col(0),
        thon: col(1),
        thon_printed: col(2),
        kakwani: col(3),
    })
}

fn scaled(values: &[f64], j: f64, n: usize) -> Vec<f64> {
    let rn = (n as f64).sqrt();
    values.iter().map(|v| rn * (v - j)).collect()
}

fn mean_outcome(model: &str, values: &[f64], j: f64, n: usize, tol: &Tolerances) -> CandidateOutcome {
    let x = scaled(values, j, n);
    let m = stats::mean(&x);
    let sd = stats::variance(&x).sqrt();
    let statistic = if sd > 0.0 { m.abs() / sd } else { m.abs() };
    CandidateOutcome {
        model: model.into(),
        analytic: j,
        empirical: stats::mean(values),
        statistic,
        passed: statistic < tol.bias_sd,
    }
}

fn variance_outcome(
    model: &str,
    values: &[f64],
    j: f64,
    gamma: f64,
    n: usize,
    tol: &Tolerances,
) -> CandidateOutcome {
    let var = stats::variance(&scaled(values, j, n));
    let statistic = if gamma > 0.0 {
        (var / gamma - 1.0).abs()
    } else {
        f64::INFINITY
    };
    CandidateOutcome {
        model: model.into(),
        analytic: gamma,
        empirical: var,
        statistic,
        passed: statistic < tol.variance_rel,
    }
}

fn support_checks(model: &str, values: &[f64], j: f64, gamma: f64, n: usize, tol: &Tolerances) -> Vec<Check> {
    let x = scaled(values, j, n);
    let var = stats::variance(&x);
    let sd = gamma.max(0.0).sqrt();
    let standardized: Vec<f64> = x.iter().map(|v| v / sd).collect();
    let (_, p) = stats::ks_normal(&standardized);
    vec![
        Check::below(
            &format!("{model}:variance_rel_error"),
            (var / gamma - 1.0).abs(),
            tol.variance_rel,
        ),
        Check::above(&format!("{model}:ks_p_value"), p, tol.ks_p),
    ]
}

fn settle(
    name: &str,
    test: &str,
    canonical: &str,
    candidates: Vec<(String, Vec<CandidateOutcome>)>,
    support: Vec<Check>,
) -> Ambiguity {
    let candidates: Vec<Candidate> = candidates
        .into_iter()
        .map(|(name, outcomes)| {
            let passed = outcomes.iter().all(|o| o.passed);
            Candidate {
                name,
                outcomes,
                passed,
            }
        })
        .collect();
    let winners: Vec<&Candidate> = candidates.iter().filter(|c| c.passed).collect();
    let frozen = (winners.len() == 1).then(|| winners[0].name.clone());
    let passed = frozen.as_deref() == Some(canonical) && support.iter().all(|c| c.passed);
    Ambiguity {
        name: name.into(),
        test: test.into(),
        canonical: canonical.into(),
        frozen,
        candidates,
        support,
        passed,
    }
}

/// Runs the arbitration on every model at sample size `n` with `reps`
/// replications, time `t`, threshold schedule `thresholds` and Kakwani order `k`.
#[allow(clippy::too_many_arguments)]
pub fn arbitration_report(
    models: &[ArbitrationModel],
    n: usize,
    reps: usize,
    t: f64,
    thresholds: &ThresholdSchedule,
    k: u32,
    settings: &QuadratureSettings,
    tolerances: Tolerances,
) -> Result<ExperimentResult> {
    let z = thresholds.at(t)?;
    let shorrocks = IndexSpec::shorrocks();
    let thon = IndexSpec::thon();
    let kakwani = IndexSpec::kakwani(k)?;
    let cost = kakwani.cost().clone();
    let variance_under = |pm: &ProcessModel, spec: &IndexSpec, options: CovarianceOptions| {
        covariance_analytic(&pm.model, &[t], thresholds, spec, settings, options)
            .map(|c| c.gamma[0][0])
    };
    let omitted = CovarianceOptions {
        bundle: BundleOptions {
            gap_factor: GapFactor::Omitted,
            ..Default::default()
        },
        ..Default::default()
    };
    let uncentered = CovarianceOptions {
        centering: KappaCentering::Uncentered,
        ..Default::default()
    };
    let duplicate = CovarianceOptions {
        duplicate_gamma2: true,
        ..Default::default()
    };
    let literal = CovarianceOptions {
        bundle: BundleOptions {
            assembly: GtAssembly::Literal,
            ..Default::default()
        },
        ..Default::default()
    };

    let mut exponent = (Vec::new(), Vec::new(), Vec::new());
    let mut weight = (Vec::new(), Vec::new(), Vec::new());
    let mut gap = (Vec::new(), Vec::new(), Vec::new());
    let mut kappa = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut assembly = (Vec::new(), Vec::new(), Vec::new());
    let mut series = Vec::new();
    let mut reference = std::collections::BTreeMap::new();
    let tol = &tolerances;

    for m in models {
        let pm = &m.process;
        let name = m.name.as_str();
        let d = draw(pm, n, reps, t, z, k)?;
        let j_rank = exact_index(&pm.model, t, thresholds, &shorrocks, settings)?;
        let j_k = kakwani_direct(&pm.model, t, thresholds, &cost, k, k, settings)?;
        let j_k_prev = kakwani_direct(&pm.model, t, thresholds, &cost, k, k - 1, settings)?;
        let g_rank = variance_under(pm, &shorrocks, CovarianceOptions::default())?;
        let g_thon = variance_under(pm, &thon, CovarianceOptions::default())?;
        let g_k = variance_under(pm, &kakwani, CovarianceOptions::default())?;
        reference.insert(format!("{name}:index_rank"), j_rank);
        reference.insert(format!("{name}:index_kakwani"), j_k);
        reference.insert(format!("{name}:gamma_rank"), g_rank);
        reference.insert(format!("{name}:gamma_kakwani"), g_k);

        exponent.0.push(mean_outcome(name, &d.kakwani, j_k, n, tol));
        exponent.1.push(mean_outcome(name, &d.kakwani, j_k_prev, n, tol));
        exponent
            .2
            .extend(support_checks(name, &d.kakwani, j_k, g_k, n, tol));

        weight.0.push(mean_outcome(name, &d.thon, j_rank, n, tol));
        weight.1.push(mean_outcome(name, &d.thon_printed, j_rank, n, tol));
        weight.2.extend(support_checks(name, &d.thon, j_rank, g_thon, n, tol));

        let g_omit = variance_under(pm, &shorrocks, omitted)?;
        gap.0
            .push(variance_outcome(name, &d.shorrocks, j_rank, g_rank, n, tol));
        gap.1
            .push(variance_outcome(name, &d.shorrocks, j_rank, g_omit, n, tol));
        gap.2
            .extend(support_checks(name, &d.shorrocks, j_rank, g_rank, n, tol));

        let g_unc = variance_under(pm, &kakwani, uncentered)?;
        let g_dup = variance_under(pm, &kakwani, duplicate)?;
        kappa.0.push(variance_outcome(name, &d.kakwani, j_k, g_k, n, tol));
        kappa.1.push(variance_outcome(name, &d.kakwani, j_k, g_unc, n, tol));
        kappa.2.push(variance_outcome(name, &d.kakwani, j_k, g_dup, n, tol));
        kappa
            .3
            .extend(support_checks(name, &d.kakwani, j_k, g_k, n, tol));

        let g_lit = variance_under(pm, &kakwani, literal)?;
        assembly
            .0
            .push(variance_outcome(name, &d.kakwani, j_k, g_k, n, tol));
        assembly
            .1
            .push(variance_outcome(name, &d.kakwani, j_k, g_lit, n, tol));
        assembly
            .2
            .extend(support_checks(name, &d.kakwani, j_k, g_k, n, tol));

        series.push(Series::new(format!("{name}:shorrocks"), n, scaled(&d.shorrocks, j_rank, n)));
        series.push(Series::new(format!("{name}:thon"), n, scaled(&d.thon, j_rank, n)));
        series.push(Series::new(format!("{name}:kakwani"), n, scaled(&d.kakwani, j_k, n)));
    }

    let exp_k = format!("exponent k = {k}");
    let exp_prev = format!("exponent k - 1 = {}", k - 1);
    let entries = vec![
        settle(
            "kakwani-exponent",
            "mean",
            &exp_k,
            vec![(exp_k.clone(), exponent.0), (exp_prev, exponent.1)],
            exponent.2,
        ),
        settle(
            "thon-weight",
            "mean",
            "2n - 2j + 1",
            vec![
                ("2n - 2j + 1".into(), weight.0),
                ("2n - j - 1".into(), weight.1),
            ],
            weight.2,
        ),
        settle(
            "shorrocks-gap-factor",
            "variance",
            "with gap factor",
            vec![
                ("with gap factor".into(), gap.0),
                ("without gap factor".into(), gap.1),
            ],
            gap.2,
        ),
        settle(
            "cross-term-centering",
            "variance",
            "centered, single tail term",
            vec![
                ("centered, single tail term".into(), kappa.0),
                ("uncentered".into(), kappa.1),
                ("duplicated tail term".into(), kappa.2),
            ],
            kappa.3,
        ),
        settle(
            "ratio-assembly",
            "variance",
            "linearized",
            vec![
                ("linearized".into(), assembly.0),
                ("literal".into(), assembly.1),
            ],
            assembly.2,
        ),
    ];

    let seed = models.first().map_or(0, |m| m.process.seed);
    let mut out = ExperimentResult::new("arbitration", kakwani.label(), reps, seed, &tolerances);
    out.series = series;
    out.reference = reference;
    for e in &entries {
        out.checks.push(Check {
            name: format!("{}:frozen_is_canonical", e.name),
            value: if e.passed { 1.0 } else { 0.0 },
            bound: 1.0,
            passed: e.passed,
        });
    }
    out.arbitration = entries;
    Ok(out.finish())
}
