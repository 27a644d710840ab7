//! Subcommand implementations.

use crate::config::{read_pairs, RunConfig};
use crate::error::CliError;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use wmlg::asymptotics::{
    covariance_analytic, covariance_plugin, hypothesis_diagnostics_panel, DistributionModel,
};
use wmlg::inference::{variation_report, variation_table, CovSource};
use wmlg::montecarlo::{parse_dependence, parse_marginal, ExperimentConfig};
use wmlg::panel::{headcount, load_panel};
use wmlg::quadrature::QuadratureSettings;
use wmlg::{ColumnMapping, PanelDataset};

/// Destination and format of a report.
pub struct Output {
    pub json: bool,
    pub path: Option<PathBuf>,
}

impl Output {
    fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.path {
            Some(path) => std::fs::write(path, text).map_err(|source| CliError::Output {
                path: path.display().to_string(),
                source,
            }),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_json(&self, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
        text.push('\n');
        self.emit(&text)
    }
}

fn mapping(columns: Option<&str>) -> Result<ColumnMapping, CliError> {
    let Some(spec) = columns else {
        return Ok(ColumnMapping::default());
    };
    let names: Vec<&str> = spec.split(',').map(str::trim).collect();
    match names.as_slice() {
        [id, time, value] => Ok(ColumnMapping {
            id: id.to_string(),
            time: time.to_string(),
            value: value.to_string(),
        }),
        _ => Err(CliError::Usage(format!("--columns expects `id,time,value`, got `{spec}`"))),
    }
}

fn panel(cfg: &RunConfig) -> Result<PanelDataset, CliError> {
    Ok(load_panel(cfg.input()?, &mapping(cfg.columns.as_deref())?)?)
}

fn times_or_all(cfg: &RunConfig, panel: &PanelDataset) -> Vec<f64> {
    cfg.times.clone().unwrap_or_else(|| panel.times().to_vec())
}

fn index_rows(cfg: &RunConfig, times: Option<Vec<f64>>) -> Result<(Value, Vec<[f64; 4]>), CliError> {
    let spec = cfg.spec()?;
    let panel = panel(cfg)?;
    let times = times.unwrap_or_else(|| times_or_all(cfg, &panel));
    let thresholds = cfg.thresholds(&times)?;
    let mut rows = Vec::with_capacity(times.len());
    for &t in &times {
        let section = panel.cross_section(t)?;
        let z = thresholds.at(t)?;
        let value = spec.evaluate(&section, z).map_err(|e| wmlg::Error::AtTime {
            time: t,
            source: Box::new(e),
        })?;
        rows.push([t, z, headcount(&section, z) as f64, value]);
    }
    let values: Vec<Value> = rows
        .iter()
        .map(|r| json!({"time": r[0], "threshold": r[1], "headcount": r[2] as usize, "value": r[3]}))
        .collect();
    let doc = json!({
        "index": spec.label(),
        "cost": spec.cost().name(),
        "n": panel.n(),
        "values": values,
    });
    Ok((doc, rows))
}

pub fn compute(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (doc, rows) = index_rows(cfg, None)?;
    if out.json {
        return out.emit_json(&doc);
    }
    let mut text = format!(
        "index {} cost {} n {}\n{:>10} {:>12} {:>9} {:>14}\n",
        doc["index"].as_str().unwrap_or(""),
        doc["cost"].as_str().unwrap_or(""),
        doc["n"],
        "time",
        "threshold",
        "headcount",
        "value"
    );
    for r in &rows {
        let _ = writeln!(text, "{:>10} {:>12} {:>9} {:>14.10}", r[0], r[1], r[2], r[3]);
    }
    out.emit(&text)
}

pub fn series(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (doc, rows) = index_rows(cfg, None)?;
    if out.json {
        return out.emit_json(&doc);
    }
    let mut text = String::from("time,threshold,headcount,value\n");
    for r in &rows {
        let _ = writeln!(text, "{},{},{},{}", r[0], r[1], r[2], r[3]);
    }
    out.emit(&text)
}

fn analytic_model(cfg: &RunConfig, marginals: &str, times: &[f64]) -> Result<DistributionModel, CliError> {
    let parsed = marginals
        .split(';')
        .map(parse_marginal)
        .collect::<wmlg::Result<Vec<_>>>()?;
    let dependence = parse_dependence(cfg.dependence.as_deref().unwrap_or("independent"))?;
    let model = match parsed.as_slice() {
        [single] => DistributionModel::stationary(times.to_vec(), *single, dependence),
        _ => DistributionModel::new(times.to_vec(), parsed, dependence),
    };
    Ok(model.map_err(|e| wmlg::Error::Config(e.to_string()))?)
}

pub fn cov(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let estimate = match &cfg.marginals {
        Some(marginals) => {
            let times = cfg
                .times
                .clone()
                .ok_or_else(|| CliError::Usage("analytic covariance needs --times".into()))?;
            let model = analytic_model(cfg, marginals, &times)?;
            let thresholds = cfg.thresholds(&times)?;
            covariance_analytic(
                &model,
                &times,
                &thresholds,
                &spec,
                &QuadratureSettings::default(),
                Default::default(),
            )?
        }
        None => {
            let panel = panel(cfg)?;
            let times = times_or_all(cfg, &panel);
            let thresholds = cfg.thresholds(&times)?;
            covariance_plugin(&panel, &times, &thresholds, &spec, Default::default())?
        }
    };
    if out.json {
        out.emit_json(&estimate.to_json())
    } else {
        out.emit(&estimate.to_csv())
    }
}

pub fn variation(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let panel = panel(cfg)?;
    let times = times_or_all(cfg, &panel);
    let [t, s] = times[..] else {
        return Err(CliError::Usage(format!(
            "variation needs exactly two times, got {}",
            times.len()
        )));
    };
    let thresholds = cfg.thresholds(&times)?;
    let report = variation_report(
        &panel,
        &thresholds,
        &spec,
        t,
        s,
        cfg.level(),
        cfg.target,
        CovSource::default(),
    )?;
    if out.json {
        return out.emit_json(&report.to_json());
    }
    let mut text = variation_table(std::slice::from_ref(&report));
    let _ = writeln!(text, "t {} s {} n {}", report.t, report.s, report.n);
    let _ = writeln!(text, "j_t {:.10} j_s {:.10}", report.j_t, report.j_s);
    let _ = writeln!(
        text,
        "delta_rj {:.10} gamma5 {:.10} ci(delta_rj) [{:.8}, {:.8}]",
        report.delta_rj, report.gamma5, report.interval_relative.0, report.interval_relative.1
    );
    if let (Some(target), Some(verdict)) = (report.target, report.verdict) {
        let verdict = serde_json::to_value(verdict).expect("verdict serializes");
        let _ = writeln!(text, "target {target} verdict {}", verdict.as_str().unwrap_or(""));
    }
    out.emit(&text)
}

pub fn check(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let panel = panel(cfg)?;
    let times = panel.times().to_vec();
    let thresholds = cfg.thresholds(&times)?;
    let report = hypothesis_diagnostics_panel(&panel, &thresholds, cfg.r.unwrap_or(0.25))?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if out.json {
        return out.emit_json(&serde_json::to_value(&report).expect("report serializes"));
    }
    let mut text = format!(
        "r {} beta_hat {:.6} xi_hat {:.6} marked_mass_bounded {}\n",
        report.r, report.beta_hat, report.xi_hat, report.marked_mass_bounded
    );
    for (label, quotients) in [
        ("threshold", &report.threshold_quotients),
        ("increment", &report.increment_quotients),
    ] {
        for q in quotients {
            let _ = writeln!(
                text,
                "{label} [{}, {}] quotient {:.6e}{}",
                q.t,
                q.s,
                q.quotient,
                if q.flagged { " flagged" } else { "" }
            );
        }
    }
    for w in &report.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    out.emit(&text)
}

pub fn simulate(
    file: Option<&Path>,
    overrides: &[(String, String)],
    out: &Output,
) -> Result<(), CliError> {
    let mut config = ExperimentConfig::new();
    if let Some(path) = file {
        if !path.is_file() {
            return Err(CliError::Usage(format!("file not found: {}", path.display())));
        }
        for (k, v) in read_pairs(path)? {
            config.set(&k, &v)?;
        }
    }
    for (k, v) in overrides {
        config.set(k, v)?;
    }
    if config.get("seed").is_none() {
        return Err(CliError::Usage("simulate requires --seed".into()));
    }
    let result = config.run()?;
    if out.json {
        out.emit_json(&result.to_json())?;
    } else {
        let mut text = format!(
            "experiment {} index {} replications {} passed {}\n",
            result.experiment, result.index, result.replications, result.passed
        );
        for c in &result.checks {
            let _ = writeln!(
                text,
                "{} {}: {:.6} (bound {:.6})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.bound
            );
        }
        out.emit(&text)?;
    }
    if result.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = result
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::Failed(format!("failed checks: {}", failed.join(", "))))
    }
}
