//! Replicated experiments against the analytic limit laws.

use super::sampler::ProcessModel;
use super::stats::{self, Summary};
use crate::asymptotics::{
    covariance_analytic, covariance_plugin_columns, exact_index, theorem_one_bundle,
    CovarianceOptions, TheoremOneBundle,
};
use crate::error::{Error, Result};
use crate::index::IndexSpec;
use crate::inference::{build_report, confidence_interval};
use crate::panel::{CrossSection, ThresholdSchedule};
use crate::quadrature::{gauss_legendre, QuadratureSettings};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Pass/fail thresholds recorded with every result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative gap between Monte Carlo and analytic variance.
    pub variance_rel: f64,
    /// Minimum KS p-value of the standardized statistics.
    pub ks_p: f64,
    pub coverage_low: f64,
    pub coverage_high: f64,
    /// Largest-n residual RMS as a fraction of `√Γ(t,t)`.
    pub representation_rms: f64,
    /// RMS gap between the two forms of `β_n` as a fraction of `√Γ(t,t)`.
    pub quantile_form_rms: f64,
    /// Largest-n median error in units of `√(Γ(t,t)/n)`.
    pub consistency_factor: f64,
    /// Largest-n median relative error of the plug-in covariance.
    pub plugin_rel: f64,
    /// Largest admissible `|mean| / sd` of `√n(J_n − J)`.
    pub bias_sd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            variance_rel: 0.10,
            ks_p: 0.01,
            coverage_low: 0.925,
            coverage_high: 0.975,
            representation_rms: 0.15,
            quantile_form_rms: 0.05,
            consistency_factor: 3.0,
            plugin_rel: 0.10,
            bias_sd: 0.2,
        }
    }
}

impl Tolerances {
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        let v = serde_json::to_value(self).expect("tolerances serialize");
        v.as_object()
            .expect("object")
            .iter()
            .map(|(k, x)| (k.clone(), x.as_f64().unwrap_or(f64::NAN)))
            .collect()
    }
}

/// One pass criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            passed: value < bound,
        }
    }

    pub fn above(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            passed: value > bound,
        }
    }

    fn flag(name: &str, passed: bool) -> Self {
        Self {
            name: name.into(),
            value: if passed { 1.0 } else { 0.0 },
            bound: 1.0,
            passed,
        }
    }
}

/// Per-replication values of one statistic at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub n: usize,
    pub values: Vec<f64>,
    pub summary: Summary,
}

impl Series {
    pub(crate) fn new(label: impl Into<String>, n: usize, values: Vec<f64>) -> Self {
        let summary = Summary::of(&values);
        Self {
            label: label.into(),
            n,
            values,
            summary,
        }
    }
}

/// Seed and configuration fingerprint of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<BTreeMap<String, String>>,
}

/// Result of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub index: String,
    pub replications: usize,
    pub series: Vec<Series>,
    pub reference: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub arbitration: Vec<super::arbitration::Ambiguity>,
    pub passed: bool,
    pub provenance: Provenance,
}

impl ExperimentResult {
    pub(crate) fn new(
        experiment: &str,
        index: String,
        replications: usize,
        seed: u64,
        tolerances: &Tolerances,
    ) -> Self {
        Self {
            experiment: experiment.into(),
            index,
            replications,
            series: Vec::new(),
            reference: BTreeMap::new(),
            tolerances: tolerances.to_map(),
            checks: Vec::new(),
            arbitration: Vec::new(),
            passed: false,
            provenance: Provenance {
                seed,
                config_hash: None,
                config: None,
            },
        }
    }

    pub(crate) fn finish(mut self) -> Self {
        self.passed = !self.checks.is_empty() && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn series(&self, label: &str, n: usize) -> Option<&Series> {
        self.series.iter().find(|s| s.label == label && s.n == n)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("result serializes")
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Experiments of one spec under one simulated model.
#[derive(Debug, Clone)]
pub struct Lab<'a> {
    pub process: &'a ProcessModel,
    pub thresholds: &'a ThresholdSchedule,
    pub spec: &'a IndexSpec,
    pub settings: QuadratureSettings,
    pub tolerances: Tolerances,
    pub options: CovarianceOptions,
}

impl<'a> Lab<'a> {
    pub fn new(
        process: &'a ProcessModel,
        thresholds: &'a ThresholdSchedule,
        spec: &'a IndexSpec,
    ) -> Self {
        Self {
            process,
            thresholds,
            spec,
            settings: QuadratureSettings::default(),
            tolerances: Tolerances::default(),
            options: CovarianceOptions::default(),
        }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn with_options(mut self, options: CovarianceOptions) -> Self {
        self.options = options;
        self
    }

    fn result(&self, experiment: &str, replications: usize) -> ExperimentResult {
        ExperimentResult::new(
            experiment,
            self.spec.label(),
            replications,
            self.process.seed,
            &self.tolerances,
        )
    }

    fn threshold(&self, t: f64) -> Result<f64> {
        self.thresholds.at(t)
    }

    fn exact(&self, t: f64) -> Result<f64> {
        exact_index(&self.process.model, t, self.thresholds, self.spec, &self.settings)
    }

    fn gamma(&self, t: f64) -> Result<f64> {
        let cov = covariance_analytic(
            &self.process.model,
            &[t],
            self.thresholds,
            self.spec,
            &self.settings,
            self.options,
        )?;
        Ok(cov.gamma[0][0])
    }

    fn bundle(&self, t: f64) -> Result<TheoremOneBundle> {
        theorem_one_bundle(
            &self.process.model,
            t,
            self.thresholds,
            self.spec,
            &self.settings,
            self.options.bundle,
        )
    }

    /// Cross-section at `t` of replication `r`.
    fn section(&self, n: usize, r: u64, t: f64) -> Result<CrossSection> {
        let ti = self.process.model.time_index(t)?;
        Ok(CrossSection::new(self.process.simulate_column(n, r, ti)))
    }

    /// Values of `√n(J_n(t) − J(t))` over replications `0..reps`.
    pub fn scaled_errors(&self, n: usize, reps: usize, t: f64, j: f64) -> Result<Vec<f64>> {
        let z = self.threshold(t)?;
        let rn = (n as f64).sqrt();
        (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let section = self.section(n, r, t)?;
                Ok(rn * (self.spec.evaluate(&section, z)? - j))
            })
            .collect()
    }

    /// Variance and normality of `√n(J_n(t) − J(t))` against `Γ(t,t)`.
    pub fn clt(&self, n: usize, reps: usize, t: f64) -> Result<ExperimentResult> {
        check_sizes(&[n], reps)?;
        let j = self.exact(t)?;
        let gamma = self.gamma(t)?;
        let values = self.scaled_errors(n, reps, t, j)?;
        let mut out = self.result("clt", reps);
        out.reference.insert("index".into(), j);
        out.reference.insert("gamma".into(), gamma);
        let mut series = Series::new("scaled_error", n, values);
        let var = series.summary.variance;
        if gamma > 0.0 {
            let sd = gamma.sqrt();
            let standardized: Vec<f64> = series.values.iter().map(|x| x / sd).collect();
            let (d, p) = stats::ks_normal(&standardized);
            series.summary.ks_statistic = Some(d);
            series.summary.ks_p_value = Some(p);
            out.checks.push(Check::below(
                "variance_rel_error",
                (var / gamma - 1.0).abs(),
                self.tolerances.variance_rel,
            ));
            out.checks.push(Check::above("ks_p_value", p, self.tolerances.ks_p));
        } else {
            let max = series.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            out.checks.push(Check::below("max_abs_error", max, 1e-9));
        }
        out.series.push(series);
        Ok(out.finish())
    }

    /// Residual of the two-term representation of `√n(J_n − J)` for each
    /// sample size in `n_list`.
    pub fn representation(&self, n_list: &[usize], reps: usize, t: f64) -> Result<ExperimentResult> {
        check_sizes(n_list, reps)?;
        let bundle = self.bundle(t)?;
        let j = self.exact(t)?;
        let gamma = self.gamma(t)?;
        let z = self.threshold(t)?;
        let mut out = self.result("representation", reps);
        out.reference.insert("index".into(), j);
        out.reference.insert("gamma".into(), gamma);
        out.reference.insert("eta".into(), bundle.eta);
        let mut rms = Vec::new();
        for (k, &n) in n_list.iter().enumerate() {
            let values: Vec<f64> = (0..reps as u64)
                .into_par_iter()
                .map(|r| {
                    let section = self.section(n, k as u64 * reps as u64 + r, t)?;
                    let j_n = self.spec.evaluate(&section, z)?;
                    let (alpha, beta) = representation_terms(&bundle, section.values());
                    Ok((n as f64).sqrt() * (j_n - j) - alpha - beta)
                })
                .collect::<Result<_>>()?;
            let s = Series::new("residual", n, values);
            rms.push(s.summary.rms);
            out.series.push(s);
        }
        if bundle.is_degenerate() {
            let max = rms.iter().fold(0.0f64, |m, x| m.max(*x));
            out.checks.push(Check::below("max_residual_rms", max, 1e-9));
        } else {
            out.checks
                .push(Check::flag("rms_strictly_decreasing", strictly_decreasing(&rms)));
            out.checks.push(Check::below(
                "final_rms_over_sd",
                rms.last().copied().unwrap_or(f64::NAN) / gamma.sqrt(),
                self.tolerances.representation_rms,
            ));
        }
        Ok(out.finish())
    }

    /// Gap between `β_n` built from the empirical CDF and its integral form
    /// over the uniform quantile process.
    pub fn quantile_form(&self, n: usize, reps: usize, t: f64) -> Result<ExperimentResult> {
        check_sizes(&[n], reps)?;
        let bundle = self.bundle(t)?;
        let gamma = self.gamma(t)?;
        let mut out = self.result("quantile-form", reps);
        out.reference.insert("gamma".into(), gamma);
        let values: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let section = self.section(n, r, t)?;
                let (_, beta) = representation_terms(&bundle, section.values());
                Ok(beta - beta_quantile_form(&bundle, section.sorted()))
            })
            .collect::<Result<_>>()?;
        let s = Series::new("beta_difference", n, values);
        let scale = if gamma > 0.0 { gamma.sqrt() } else { 1.0 };
        out.checks.push(Check::below(
            "rms_over_sd",
            s.summary.rms / scale,
            self.tolerances.quantile_form_rms,
        ));
        out.series.push(s);
        Ok(out.finish())
    }

    /// Coverage of the plug-in interval for the relative change `J(s)/J(t) − 1`.
    ///
    /// `variance_override` replaces the plug-in `Γ₅` in every replication.
    pub fn coverage(
        &self,
        n: usize,
        reps: usize,
        t: f64,
        s: f64,
        alpha: f64,
        variance_override: Option<f64>,
    ) -> Result<ExperimentResult> {
        check_sizes(&[n], reps)?;
        if t == s {
            return Err(Error::InvalidParameter("coverage needs two distinct times".into()));
        }
        let model = &self.process.model;
        let (ti, si) = (model.time_index(t)?, model.time_index(s)?);
        let (zt, zs) = (self.threshold(t)?, self.threshold(s)?);
        let (jt, js) = (self.exact(t)?, self.exact(s)?);
        if jt == 0.0 {
            return Err(Error::UndefinedRelativeChange);
        }
        let truth = js / jt - 1.0;
        let label = self.spec.label();
        let pairs: Vec<(f64, f64)> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let cols = self.process.simulate_columns(n, r);
                let (ct, cs) = (&cols[ti], &cols[si]);
                let jn_t = self.spec.evaluate(&CrossSection::new(ct.clone()), zt)?;
                let jn_s = self.spec.evaluate(&CrossSection::new(cs.clone()), zs)?;
                let interval = match variance_override {
                    Some(v) => confidence_interval(jn_s / jn_t - 1.0, v, n, alpha)?,
                    None => {
                        let cov = covariance_plugin_columns(
                            &[ct, cs],
                            &[t, s],
                            &[zt, zs],
                            self.spec,
                            self.options,
                        )?;
                        build_report(label.clone(), n, t, s, jn_t, jn_s, &cov, alpha, None)?
                            .interval_relative
                    }
                };
                let covered = interval.0 <= truth && truth <= interval.1;
                Ok((jn_s / jn_t - 1.0, if covered { 1.0 } else { 0.0 }))
            })
            .collect::<Result<_>>()?;
        let (estimates, hits): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut out = self.result("coverage", reps);
        out.reference.insert("index_t".into(), jt);
        out.reference.insert("index_s".into(), js);
        out.reference.insert("delta_rj".into(), truth);
        out.reference.insert("alpha".into(), alpha);
        if let Some(v) = variance_override {
            out.reference.insert("variance_override".into(), v);
        }
        let coverage = stats::mean(&hits);
        let mut hit_series = Series::new("covered", n, hits);
        hit_series.summary.coverage = Some(coverage);
        out.series.push(Series::new("delta_rj", n, estimates));
        out.series.push(hit_series);
        out.checks.push(Check::above(
            "coverage_above_low",
            coverage,
            self.tolerances.coverage_low,
        ));
        out.checks.push(Check::below(
            "coverage_below_high",
            coverage,
            self.tolerances.coverage_high,
        ));
        Ok(out.finish())
    }

    /// Median `|J_n − J|` over replications for each sample size.
    pub fn consistency(&self, n_list: &[usize], reps: usize, t: f64) -> Result<ExperimentResult> {
        check_sizes(n_list, reps)?;
        let j = self.exact(t)?;
        let gamma = self.gamma(t)?;
        let z = self.threshold(t)?;
        let mut out = self.result("consistency", reps);
        out.reference.insert("index".into(), j);
        out.reference.insert("gamma".into(), gamma);
        let mut medians = Vec::new();
        for (k, &n) in n_list.iter().enumerate() {
            let values: Vec<f64> = (0..reps as u64)
                .into_par_iter()
                .map(|r| {
                    let section = self.section(n, k as u64 * reps as u64 + r, t)?;
                    Ok((self.spec.evaluate(&section, z)? - j).abs())
                })
                .collect::<Result<_>>()?;
            let s = Series::new("abs_error", n, values);
            medians.push(s.summary.median);
            out.series.push(s);
        }
        let last_n = *n_list.last().expect("nonempty");
        out.checks
            .push(Check::flag("median_strictly_decreasing", strictly_decreasing(&medians)));
        out.checks.push(Check::below(
            "final_median",
            *medians.last().expect("nonempty"),
            self.tolerances.consistency_factor * (gamma / last_n as f64).sqrt(),
        ));
        Ok(out.finish())
    }

    /// Median relative error of the plug-in `Γ̂(t,t)` and `Γ̂(t,s)` against
    /// the analytic covariance.
    pub fn plugin_convergence(
        &self,
        n_list: &[usize],
        reps: usize,
        t: f64,
        s: f64,
    ) -> Result<ExperimentResult> {
        check_sizes(n_list, reps)?;
        let model = &self.process.model;
        let times = [t, s];
        let analytic = covariance_analytic(
            model,
            &times,
            self.thresholds,
            self.spec,
            &self.settings,
            self.options,
        )?;
        let (gtt, gts) = (analytic.gamma[0][0], analytic.gamma[0][1]);
        if gtt == 0.0 || gts == 0.0 {
            return Err(Error::DegenerateModel(
                "analytic covariance entry is zero; relative error undefined".into(),
            ));
        }
        let (ti, si) = (model.time_index(t)?, model.time_index(s)?);
        let zs = [self.threshold(t)?, self.threshold(s)?];
        let mut out = self.result("plugin", reps);
        out.reference.insert("gamma_tt".into(), gtt);
        out.reference.insert("gamma_ts".into(), gts);
        let mut med_tt = Vec::new();
        let mut med_ts = Vec::new();
        for (k, &n) in n_list.iter().enumerate() {
            let errs: Vec<(f64, f64)> = (0..reps as u64)
                .into_par_iter()
                .map(|r| {
                    let cols = self.process.simulate_columns(n, k as u64 * reps as u64 + r);
                    let est = covariance_plugin_columns(
                        &[&cols[ti], &cols[si]],
                        &times,
                        &zs,
                        self.spec,
                        self.options,
                    )?;
                    Ok((
                        (est.gamma[0][0] / gtt - 1.0).abs(),
                        (est.gamma[0][1] / gts - 1.0).abs(),
                    ))
                })
                .collect::<Result<_>>()?;
            let (ett, ets): (Vec<f64>, Vec<f64>) = errs.into_iter().unzip();
            let (a, b) = (Series::new("rel_error_tt", n, ett), Series::new("rel_error_ts", n, ets));
            med_tt.push(a.summary.median);
            med_ts.push(b.summary.median);
            out.series.push(a);
            out.series.push(b);
        }
        out.checks
            .push(Check::flag("tt_strictly_decreasing", strictly_decreasing(&med_tt)));
        out.checks
            .push(Check::flag("ts_strictly_decreasing", strictly_decreasing(&med_ts)));
        out.checks.push(Check::below(
            "final_median_tt",
            *med_tt.last().expect("nonempty"),
            self.tolerances.plugin_rel,
        ));
        out.checks.push(Check::below(
            "final_median_ts",
            *med_ts.last().expect("nonempty"),
            self.tolerances.plugin_rel,
        ));
        Ok(out.finish())
    }
}

fn check_sizes(n_list: &[usize], reps: usize) -> Result<()> {
    if n_list.is_empty() || n_list.contains(&0) || reps == 0 {
        return Err(Error::InvalidParameter(
            "experiments need n >= 1 and at least one replication".into(),
        ));
    }
    Ok(())
}

/// `(α_n(g), β_n(ν))` on one sample, with `G_n` right-continuous.
pub fn representation_terms(bundle: &TheoremOneBundle, values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let rn = (n as f64).sqrt();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut alpha = 0.0;
    let mut beta = 0.0;
    let mut i = 0;
    while i < n {
        let y = values[order[i]];
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == y {
            j += 1;
        }
        let count = (j - i + 1) as f64;
        let level = (j + 1) as f64 / n as f64;
        alpha += count * (bundle.g(y) - bundle.eta);
        beta += count * (level - bundle.marginal().cdf(y)) * bundle.nu(y);
        i = j + 1;
    }
    (alpha / rn, beta / rn)
}

/// `√n ∫ (s − V_n(s)) ν(G⁻¹(s)) ds` with `V_n(s) = G(Y_(⌈ns⌉))`.
///
/// `ν` vanishes above the marked mass, so only cells below it contribute.
pub fn beta_quantile_form(bundle: &TheoremOneBundle, sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let nf = n as f64;
    let p = bundle.marked_mass;
    let mut total = 0.0;
    for (i, &y) in sorted.iter().enumerate() {
        let a = i as f64 / nf;
        if a >= p {
            break;
        }
        let b = (i + 1) as f64 / nf;
        let v = bundle.marginal().cdf(y);
        let f = |s: f64| (s - v) * bundle.nu_at_level(s);
        total += if b > p {
            gauss_legendre(a, p, f) + gauss_legendre(p, b, f)
        } else {
            gauss_legendre(a, b, f)
        };
    }
    nf.sqrt() * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{Dependence, DistributionModel, Marginal};

    fn uniform_lab_parts() -> (ProcessModel, ThresholdSchedule) {
        let model = DistributionModel::stationary(
            vec![0.0, 1.0],
            Marginal::Uniform { lo: 0.0, hi: 1.0 },
            Dependence::Ar1(0.6),
        )
        .unwrap();
        (
            ProcessModel::new(model, 7),
            ThresholdSchedule::constant(0.5, &[0.0, 1.0]).unwrap(),
        )
    }

    #[test]
    fn degenerate_model_has_zero_statistics() {
        let model = DistributionModel::stationary(
            vec![0.0],
            Marginal::PointMass { at: 0.2 },
            Dependence::Independent,
        )
        .unwrap();
        let pm = ProcessModel::new(model, 3);
        let thr = ThresholdSchedule::constant(0.5, &[0.0]).unwrap();
        for spec in [IndexSpec::thon(), IndexSpec::kakwani(2).unwrap()] {
            let lab = Lab::new(&pm, &thr, &spec);
            let clt = lab.clt(40, 20, 0.0).unwrap();
            assert!(clt.passed, "{clt:?}");
            assert!(clt.series[0].values.iter().all(|x| x.abs() < 1e-12));
            let rep = lab.representation(&[10, 40], 10, 0.0).unwrap();
            assert!(rep.passed);
        }
    }

    #[test]
    fn results_are_reproducible() {
        let (pm, thr) = uniform_lab_parts();
        let spec = IndexSpec::shorrocks();
        let lab = Lab::new(&pm, &thr, &spec);
        let a = lab.consistency(&[50, 100], 8, 0.0).unwrap();
        let b = lab.consistency(&[50, 100], 8, 0.0).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| lab.consistency(&[50, 100], 8, 0.0).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn coverage_sanity_rails() {
        let (pm, thr) = uniform_lab_parts();
        let spec = IndexSpec::shorrocks();
        let lab = Lab::new(&pm, &thr, &spec);
        let wide = lab.coverage(200, 30, 0.0, 1.0, 0.05, Some(f64::INFINITY)).unwrap();
        assert_eq!(wide.series[1].summary.coverage, Some(1.0));
        let narrow = lab.coverage(200, 30, 0.0, 1.0, 0.05, Some(0.0)).unwrap();
        assert_eq!(narrow.series[1].summary.coverage, Some(0.0));
        assert!(!narrow.passed);
    }

    #[test]
    fn representation_terms_on_known_sample() {
        let (pm, thr) = uniform_lab_parts();
        let spec = IndexSpec::shorrocks();
        let b = theorem_one_bundle(
            &pm.model,
            0.0,
            &thr,
            &spec,
            &QuadratureSettings::default(),
            Default::default(),
        )
        .unwrap();
        // Shorrocks on U(0,1), Z = 0.5: g(y) = 2(1 − y)(1 − 2y), ν(y) = −2(1 − 2y).
        let ys = [0.1, 0.3, 0.7, 0.3];
        let (a, bt) = representation_terms(&b, &ys);
        let g = |y: f64| if y <= 0.5 { 2.0 * (1.0 - y) * (1.0 - 2.0 * y) } else { 0.0 };
        let nu = |y: f64| if y <= 0.5 { -2.0 * (1.0 - 2.0 * y) } else { 0.0 };
        let levels = [0.25, 0.75, 1.0, 0.75];
        let ea: f64 = ys.iter().map(|&y| g(y) - b.eta).sum::<f64>() / 2.0;
        let eb: f64 = ys
            .iter()
            .zip(levels)
            .map(|(&y, l)| (l - y) * nu(y))
            .sum::<f64>()
            / 2.0;
        assert!((a - ea).abs() < 1e-12);
        assert!((bt - eb).abs() < 1e-12);
    }

    #[test]
    fn quantile_form_on_exact_quantiles_is_small() {
        let (pm, thr) = uniform_lab_parts();
        let spec = IndexSpec::shorrocks();
        let b = theorem_one_bundle(
            &pm.model,
            0.0,
            &thr,
            &spec,
            &QuadratureSettings::default(),
            Default::default(),
        )
        .unwrap();
        // Order statistics at i/n: V_n(s) = ⌈ns⌉/n, so the integral form is
        // √n Σ ∫ (s − i/n) ν ds, of order n^{-1/2}.
        let n = 1000;
        let sorted: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let q = beta_quantile_form(&b, &sorted);
        assert!(q.abs() < 2.0 / (n as f64).sqrt());
        let (_, beta) = representation_terms(&b, &sorted);
        assert!(beta.abs() < 1e-12);
    }
}
