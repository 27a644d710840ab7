//! Run configuration merged from a `key = value` file and command-line flags.

use crate::error::CliError;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use wmlg::panel::load_thresholds;
use wmlg::{CostFunction, IndexSpec, ThresholdSchedule};

/// Keys accepted in the configuration file of the data subcommands.
pub const FILE_KEYS: [&str; 15] = [
    "input", "columns", "index", "k", "alpha_exp", "weights", "cost", "z", "z_file", "times",
    "level", "target", "r", "marginals", "dependence",
];

/// Settings shared by the data subcommands; `None` means unset.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub columns: Option<String>,
    pub index: Option<String>,
    pub k: Option<u32>,
    pub alpha_exp: Option<f64>,
    pub weights: Option<String>,
    pub cost: Option<String>,
    pub z: Option<f64>,
    pub z_file: Option<PathBuf>,
    pub times: Option<Vec<f64>>,
    pub level: Option<f64>,
    pub target: Option<f64>,
    pub r: Option<f64>,
    pub marginals: Option<String>,
    pub dependence: Option<String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_pairs(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{}:{}: expected key = value", path.display(), i + 1))
        })?;
        out.insert(normalize(k), v.trim().to_string());
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value `{value}` for `{key}`")))
}

pub fn parse_times(value: &str) -> Result<Vec<f64>, CliError> {
    value.split(',').map(|v| parse("times", v)).collect()
}

impl RunConfig {
    /// Configuration from a file, resolving relative paths against its directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = RunConfig::default();
        for (k, v) in read_pairs(path)? {
            let resolve = |v: &str| {
                let p = PathBuf::from(v);
                if p.is_relative() {
                    base.join(p)
                } else {
                    p
                }
            };
            match k.as_str() {
                "input" => cfg.input = Some(resolve(&v)),
                "columns" => cfg.columns = Some(v),
                "index" => cfg.index = Some(v),
                "k" => cfg.k = Some(parse(&k, &v)?),
                "alpha_exp" => cfg.alpha_exp = Some(parse(&k, &v)?),
                "weights" => cfg.weights = Some(v),
                "cost" => cfg.cost = Some(v),
                "z" => cfg.z = Some(parse(&k, &v)?),
                "z_file" => cfg.z_file = Some(resolve(&v)),
                "times" => cfg.times = Some(parse_times(&v)?),
                "level" => cfg.level = Some(parse(&k, &v)?),
                "target" => cfg.target = Some(parse(&k, &v)?),
                "r" => cfg.r = Some(parse(&k, &v)?),
                "marginals" => cfg.marginals = Some(v),
                "dependence" => cfg.dependence = Some(v),
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown key `{other}` in {}; expected one of {}",
                        path.display(),
                        FILE_KEYS.join(", ")
                    )))
                }
            }
        }
        Ok(cfg)
    }

    /// Fields set in `flags` replace those of `self`.
    pub fn overridden_by(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            input: flags.input.or(self.input),
            columns: flags.columns.or(self.columns),
            index: flags.index.or(self.index),
            k: flags.k.or(self.k),
            alpha_exp: flags.alpha_exp.or(self.alpha_exp),
            weights: flags.weights.or(self.weights),
            cost: flags.cost.or(self.cost),
            z: flags.z.or(self.z),
            z_file: flags.z_file.or(self.z_file),
            times: flags.times.or(self.times),
            level: flags.level.or(self.level),
            target: flags.target.or(self.target),
            r: flags.r.or(self.r),
            marginals: flags.marginals.or(self.marginals),
            dependence: flags.dependence.or(self.dependence),
        }
    }

    /// Every referenced file must exist and the level must lie in (0, 1).
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(level) = self.level {
            if !(level > 0.0 && level < 1.0) {
                return Err(CliError::Usage(format!("--level {level} must lie in (0, 1)")));
            }
        }
        for p in [&self.input, &self.z_file].into_iter().flatten() {
            if !p.is_file() {
                return Err(CliError::Usage(format!("file not found: {}", p.display())));
            }
        }
        if let Some(cost) = &self.cost {
            if let Some(path) = cost.trim().strip_prefix("pwl:") {
                if !Path::new(path.trim()).is_file() {
                    return Err(CliError::Usage(format!("file not found: {}", path.trim())));
                }
            }
        }
        Ok(())
    }

    pub fn input(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Usage("missing --input".into()))
    }

    pub fn spec(&self) -> Result<IndexSpec, CliError> {
        let name = self.index.as_deref().unwrap_or("kakwani");
        let cost = match &self.cost {
            Some(c) => Some(CostFunction::from_name(c)?),
            None => None,
        };
        Ok(IndexSpec::from_name(
            name,
            self.k,
            self.alpha_exp,
            self.weights.as_deref(),
            cost,
        )?)
    }

    /// `--z` over `times`, or the schedule of `--z-file`.
    pub fn thresholds(&self, times: &[f64]) -> Result<ThresholdSchedule, CliError> {
        match (&self.z, &self.z_file) {
            (Some(_), Some(_)) => Err(CliError::Usage("give either --z or --z-file, not both".into())),
            (Some(z), None) => Ok(ThresholdSchedule::constant(*z, times)?),
            (None, Some(path)) => Ok(load_thresholds(path)?),
            (None, None) => Err(CliError::Usage("missing --z or --z-file".into())),
        }
    }

    pub fn level(&self) -> f64 {
        self.level.unwrap_or(0.05)
    }
}
