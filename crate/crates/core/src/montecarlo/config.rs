//! `key = value` experiment configurations.

use super::arbitration::{arbitration_report, ArbitrationModel};
use super::experiments::{ExperimentResult, Lab, Tolerances};
use super::sampler::ProcessModel;
use crate::asymptotics::{Dependence, DistributionModel, Marginal};
use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::index::IndexSpec;
use crate::panel::ThresholdSchedule;
use crate::quadrature::QuadratureSettings;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const EXPERIMENTS: [&str; 7] = [
    "clt",
    "representation",
    "quantile-form",
    "coverage",
    "consistency",
    "plugin",
    "arbitration",
];

const KEYS: [&str; 19] = [
    "experiment",
    "seed",
    "n",
    "n_list",
    "replications",
    "index",
    "k",
    "alpha_exp",
    "weights",
    "cost",
    "z",
    "times",
    "marginals",
    "models",
    "dependence",
    "t",
    "s",
    "alpha",
    "variance_override",
];

const TOLERANCE_KEYS: [&str; 9] = [
    "variance_rel",
    "ks_p",
    "coverage_low",
    "coverage_high",
    "representation_rms",
    "quantile_form_rms",
    "consistency_factor",
    "plugin_rel",
    "bias_sd",
];

fn defaults(experiment: &str) -> Vec<(&'static str, &'static str)> {
    let mut d = vec![
        ("index", "shorrocks"),
        ("cost", "identity"),
        ("z", "0.5"),
        ("times", "0"),
        ("marginals", "uniform:0:1"),
        ("dependence", "independent"),
        ("t", "0"),
        ("alpha", "0.05"),
    ];
    let extra: &[(&str, &str)] = match experiment {
        "clt" => &[("n", "2000"), ("replications", "2000")],
        "representation" => &[("n_list", "250,1000,4000"), ("replications", "300")],
        "quantile-form" => &[("n", "4000"), ("replications", "200")],
        "coverage" => &[
            ("n", "2000"),
            ("replications", "1000"),
            ("times", "0,1"),
            ("marginals", "uniform:0:1;uniform:0:2"),
            ("dependence", "exchangeable:0.6"),
            ("s", "1"),
        ],
        "consistency" => &[("n_list", "500,2000,8000"), ("replications", "50")],
        "plugin" => &[
            ("n_list", "500,2000,8000"),
            ("replications", "50"),
            ("times", "0,1"),
            ("dependence", "ar1:0.6"),
            ("s", "1"),
        ],
        "arbitration" => &[
            ("n", "2000"),
            ("replications", "2000"),
            ("k", "2"),
            ("models", "uniform:0:1;lognormal:-0.5:0.6"),
        ],
        _ => &[],
    };
    for &(k, v) in extra {
        match d.iter_mut().find(|(key, _)| *key == k) {
            Some(slot) => slot.1 = v,
            None => d.push((k, v)),
        }
    }
    d
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parses `uniform:lo:hi`, `lognormal:mu:sigma`, `exponential:rate` or `pointmass:at`.
pub fn parse_marginal(text: &str) -> Result<Marginal> {
    let parts: Vec<&str> = text.trim().split(':').map(str::trim).collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| config_err(format!("bad marginal `{text}`")))
    };
    let m = match (parts[0], parts.len()) {
        ("uniform", 3) => Marginal::Uniform { lo: num(1)?, hi: num(2)? },
        ("lognormal", 3) => Marginal::Lognormal { mu: num(1)?, sigma: num(2)? },
        ("exponential", 2) => Marginal::Exponential { rate: num(1)? },
        ("pointmass", 2) => Marginal::PointMass { at: num(1)? },
        _ => return Err(config_err(format!("bad marginal `{text}`"))),
    };
    m.validate().map_err(|e| config_err(e.to_string()))?;
    Ok(m)
}

/// Parses `independent`, `exchangeable:rho` or `ar1:rho`.
pub fn parse_dependence(text: &str) -> Result<Dependence> {
    let text = text.trim();
    let rho = |r: &str| {
        r.trim()
            .parse::<f64>()
            .map_err(|_| config_err(format!("bad dependence `{text}`")))
    };
    match text.split_once(':') {
        None if text == "independent" => Ok(Dependence::Independent),
        Some(("exchangeable", r)) => Ok(Dependence::Exchangeable(rho(r)?)),
        Some(("ar1", r)) => Ok(Dependence::Ar1(rho(r)?)),
        _ => Err(config_err(format!("bad dependence `{text}`"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| config_err(format!("bad value `{s}` in `{key}`")))
        })
        .collect()
}

/// An experiment described by `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Sets one key, replacing any earlier value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let known = KEYS.contains(&key)
            || key
                .strip_prefix("tol.")
                .is_some_and(|t| TOLERANCE_KEYS.contains(&t));
        if !known {
            return Err(config_err(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn experiment(&self) -> Result<&str> {
        let e = self
            .get("experiment")
            .ok_or_else(|| config_err("missing `experiment`"))?;
        if !EXPERIMENTS.contains(&e) {
            return Err(config_err(format!(
                "unknown experiment `{e}`; expected one of {}",
                EXPERIMENTS.join(", ")
            )));
        }
        Ok(e)
    }

    /// Explicit entries over the defaults of the named experiment.
    pub fn resolved(&self) -> Result<BTreeMap<String, String>> {
        let mut out: BTreeMap<String, String> = defaults(self.experiment()?)
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for (k, v) in &self.entries {
            out.insert(k.clone(), v.clone());
        }
        Ok(out)
    }

    /// Sorted `key=value` lines of the resolved configuration.
    pub fn canonical(&self) -> Result<String> {
        Ok(self
            .resolved()?
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect())
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.canonical()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Runs the experiment and attaches provenance.
    pub fn run(&self) -> Result<ExperimentResult> {
        let r = Resolved {
            map: self.resolved()?,
        };
        let mut result = r.run()?;
        result.provenance.config_hash = Some(self.hash()?);
        result.provenance.config = Some(self.resolved()?);
        Ok(result)
    }
}

struct Resolved {
    map: BTreeMap<String, String>,
}

impl Resolved {
    fn raw(&self, key: &str) -> Result<&str> {
        self.map
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| config_err(format!("missing `{key}`")))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.trim()
            .parse()
            .map_err(|_| config_err(format!("bad value `{v}` for `{key}`")))
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            Some(_) => self.num(key).map(Some),
            None => Ok(None),
        }
    }

    fn tolerances(&self) -> Result<Tolerances> {
        let mut t = Tolerances::default();
        let fields: [(&str, &mut f64); 9] = [
            ("variance_rel", &mut t.variance_rel),
            ("ks_p", &mut t.ks_p),
            ("coverage_low", &mut t.coverage_low),
            ("coverage_high", &mut t.coverage_high),
            ("representation_rms", &mut t.representation_rms),
            ("quantile_form_rms", &mut t.quantile_form_rms),
            ("consistency_factor", &mut t.consistency_factor),
            ("plugin_rel", &mut t.plugin_rel),
            ("bias_sd", &mut t.bias_sd),
        ];
        for (name, slot) in fields {
            if let Some(v) = self.opt::<f64>(&format!("tol.{name}"))? {
                *slot = v;
            }
        }
        Ok(t)
    }

    fn seed(&self) -> Result<u64> {
        if !self.map.contains_key("seed") {
            return Err(config_err("randomized experiments need an explicit `seed`"));
        }
        self.num("seed")
    }

    fn times(&self) -> Result<Vec<f64>> {
        parse_list("times", self.raw("times")?)
    }

    fn thresholds(&self, times: &[f64]) -> Result<ThresholdSchedule> {
        let z: f64 = self.num("z")?;
        ThresholdSchedule::constant(z, times).map_err(|e| config_err(e.to_string()))
    }

    fn spec(&self) -> Result<IndexSpec> {
        let name = self.raw("index")?;
        let cost = if name.trim() == "fgt" {
            None
        } else {
            Some(CostFunction::from_name(self.raw("cost")?)?)
        };
        IndexSpec::from_name(
            name,
            self.opt("k")?,
            self.opt("alpha_exp")?,
            self.map.get("weights").map(String::as_str),
            cost,
        )
    }

    fn model(&self, times: Vec<f64>) -> Result<DistributionModel> {
        let marginals: Vec<Marginal> = self
            .raw("marginals")?
            .split(';')
            .map(parse_marginal)
            .collect::<Result<_>>()?;
        let dependence = parse_dependence(self.raw("dependence")?)?;
        let built = if marginals.len() == 1 {
            DistributionModel::stationary(times, marginals[0], dependence)
        } else {
            DistributionModel::new(times, marginals, dependence)
        };
        built.map_err(|e| config_err(e.to_string()))
    }

    fn run(&self) -> Result<ExperimentResult> {
        let experiment = self.raw("experiment")?.to_string();
        let seed = self.seed()?;
        let tolerances = self.tolerances()?;
        let times = self.times()?;
        let thresholds = self.thresholds(&times)?;
        let t: f64 = self.num("t")?;
        let reps: usize = self.num("replications")?;
        if experiment == "arbitration" {
            let models = self
                .raw("models")?
                .split(';')
                .map(|m| {
                    let marginal = parse_marginal(m)?;
                    let model =
                        DistributionModel::stationary(times.clone(), marginal, Dependence::Independent)
                            .map_err(|e| config_err(e.to_string()))?;
                    Ok(ArbitrationModel {
                        name: m.trim().to_string(),
                        process: ProcessModel::new(model, seed),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return arbitration_report(
                &models,
                self.num("n")?,
                reps,
                t,
                &thresholds,
                self.num("k")?,
                &QuadratureSettings::default(),
                tolerances,
            );
        }
        let spec = self.spec()?;
        let process = ProcessModel::new(self.model(times)?, seed);
        let lab = Lab::new(&process, &thresholds, &spec).with_tolerances(tolerances);
        match experiment.as_str() {
            "clt" => lab.clt(self.num("n")?, reps, t),
            "representation" => lab.representation(&parse_list("n_list", self.raw("n_list")?)?, reps, t),
            "quantile-form" => lab.quantile_form(self.num("n")?, reps, t),
            "coverage" => lab.coverage(
                self.num("n")?,
                reps,
                t,
                self.num("s")?,
                self.num("alpha")?,
                self.opt("variance_override")?,
            ),
            "consistency" => lab.consistency(&parse_list("n_list", self.raw("n_list")?)?, reps, t),
            "plugin" => lab.plugin_convergence(
                &parse_list("n_list", self.raw("n_list")?)?,
                reps,
                t,
                self.num("s")?,
            ),
            other => Err(config_err(format!("unknown experiment `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let mut cfg = ExperimentConfig::parse(
            "# clt run\nexperiment = clt\nseed = 5\nn = 100 # small\nreplications=20\n",
        )
        .unwrap();
        assert_eq!(cfg.get("n"), Some("100"));
        cfg.set("n", "120").unwrap();
        let r = cfg.resolved().unwrap();
        assert_eq!(r["n"], "120");
        assert_eq!(r["index"], "shorrocks");
        assert!(cfg.set("bogus", "1").unwrap_err().is_config());
        cfg.set("tol.ks_p", "0.001").unwrap();
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::parse("experiment=clt\nseed=1").unwrap();
        let b = ExperimentConfig::parse("seed = 1\nexperiment = clt\nindex = shorrocks").unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let c = ExperimentConfig::parse("experiment=clt\nseed=2").unwrap();
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn config_errors() {
        let unknown = ExperimentConfig::parse("experiment=nope\nseed=1").unwrap();
        assert!(unknown.run().unwrap_err().is_config());
        let no_seed = ExperimentConfig::parse("experiment=clt").unwrap();
        assert!(no_seed.run().unwrap_err().is_config());
        assert!(ExperimentConfig::parse("no equals sign").unwrap_err().is_config());
        assert!(parse_marginal("uniform:1").is_err());
        assert!(parse_marginal("uniform:1:0").is_err());
        assert_eq!(parse_dependence("ar1:0.6").unwrap(), Dependence::Ar1(0.6));
        assert!(parse_dependence("ar1").is_err());
    }

    #[test]
    fn small_run_records_provenance() {
        let cfg = ExperimentConfig::parse(
            "experiment=clt\nseed=9\nn=200\nreplications=50\nindex=kakwani\nk=2",
        )
        .unwrap();
        let res = cfg.run().unwrap();
        assert_eq!(res.index, "kakwani(2)");
        assert_eq!(res.provenance.seed, 9);
        assert_eq!(res.provenance.config_hash, Some(cfg.hash().unwrap()));
        assert_eq!(res.series[0].values.len(), 50);
        assert_eq!(res, cfg.run().unwrap());
    }
}
