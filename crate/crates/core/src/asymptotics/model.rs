//! Parametric population models: marginal laws per time and a Gaussian copula.

use crate::error::{Error, Result};
use crate::normal;
use serde::{Deserialize, Serialize};

/// Marginal law `G_t` of the outcome at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    /// All mass at one nonnegative point.
    PointMass { at: f64 },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi,
            Marginal::Lognormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            Marginal::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Marginal::PointMass { at } => at.is_finite() && at >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid marginal {self:?}")))
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Marginal::PointMass { .. })
    }

    /// `G(y)`.
    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => ((y - lo) / (hi - lo)).clamp(0.0, 1.0),
            Marginal::Lognormal { mu, sigma } => {
                if y <= 0.0 {
                    0.0
                } else {
                    normal::cdf((y.ln() - mu) / sigma)
                }
            }
            Marginal::Exponential { rate } => {
                if y <= 0.0 {
                    0.0
                } else {
                    -(-rate * y).exp_m1()
                }
            }
            Marginal::PointMass { at } => {
                if y >= at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Density `m(y)`; zero for the point mass.
    pub fn density(&self, y: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => {
                if (lo..=hi).contains(&y) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Marginal::Lognormal { mu, sigma } => {
                if y <= 0.0 {
                    0.0
                } else {
                    normal::pdf((y.ln() - mu) / sigma) / (sigma * y)
                }
            }
            Marginal::Exponential { rate } => {
                if y < 0.0 {
                    0.0
                } else {
                    rate * (-rate * y).exp()
                }
            }
            Marginal::PointMass { .. } => 0.0,
        }
    }

    /// `G⁻¹(p)` (left-continuous inverse).
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * p.clamp(0.0, 1.0),
            Marginal::Lognormal { mu, sigma } => (mu + sigma * normal::quantile(p)).exp(),
            Marginal::Exponential { rate } => -(-p).ln_1p() / rate,
            Marginal::PointMass { at } => at,
        }
    }

    /// `G⁻¹(Phi(x))`, evaluated without the round trip through `Phi`.
    pub fn quantile_from_score(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * normal::cdf(x),
            Marginal::Lognormal { mu, sigma } => (mu + sigma * x).exp(),
            Marginal::Exponential { rate } => -normal::sf(x).ln() / rate,
            Marginal::PointMass { at } => at,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
            Marginal::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Marginal::Exponential { rate } => 1.0 / rate,
            Marginal::PointMass { at } => at,
        }
    }
}

/// Gaussian-copula dependence between times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rho", rename_all = "lowercase")]
pub enum Dependence {
    Independent,
    /// Correlation `rho` between every pair of times.
    Exchangeable(f64),
    /// Correlation `rho^|t - s|`.
    Ar1(f64),
}

impl Dependence {
    fn validate(&self) -> Result<()> {
        match *self {
            Dependence::Independent => Ok(()),
            Dependence::Exchangeable(rho) if (0.0..=1.0).contains(&rho) => Ok(()),
            Dependence::Ar1(rho) if (0.0..=1.0).contains(&rho) => Ok(()),
            other => Err(Error::InvalidParameter(format!(
                "dependence {other:?} out of range"
            ))),
        }
    }

    /// Copula correlation between times `t` and `s`.
    pub fn correlation(&self, t: f64, s: f64) -> f64 {
        if t == s {
            return 1.0;
        }
        match *self {
            Dependence::Independent => 0.0,
            Dependence::Exchangeable(rho) => rho,
            Dependence::Ar1(rho) => rho.powf((t - s).abs()),
        }
    }
}

/// Marginals on a time grid joined by a Gaussian copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionModel {
    times: Vec<f64>,
    marginals: Vec<Marginal>,
    dependence: Dependence,
}

impl DistributionModel {
    pub fn new(times: Vec<f64>, marginals: Vec<Marginal>, dependence: Dependence) -> Result<Self> {
        if times.is_empty() || times.len() != marginals.len() {
            return Err(Error::InvalidParameter(
                "need one marginal per time and at least one time".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("times must increase strictly".into()));
        }
        for m in &marginals {
            m.validate()?;
        }
        dependence.validate()?;
        Ok(Self {
            times,
            marginals,
            dependence,
        })
    }

    /// Same marginal at every time.
    pub fn stationary(times: Vec<f64>, marginal: Marginal, dependence: Dependence) -> Result<Self> {
        let marginals = vec![marginal; times.len()];
        Self::new(times, marginals, dependence)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn dependence(&self) -> Dependence {
        self.dependence
    }

    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&x| x == t)
            .ok_or(Error::UnknownTime(t))
    }

    pub fn marginal(&self, t: f64) -> Result<&Marginal> {
        Ok(&self.marginals[self.time_index(t)?])
    }

    pub fn correlation(&self, t: f64, s: f64) -> f64 {
        self.dependence.correlation(t, s)
    }

    /// `G_{t,s}(u, v)`.
    pub fn joint_cdf(&self, t: f64, s: f64, u: f64, v: f64) -> Result<f64> {
        let gt = self.marginal(t)?.cdf(u);
        let gs = self.marginal(s)?.cdf(v);
        if t == s {
            return Ok(gt.min(gs));
        }
        Ok(normal::bivariate_cdf(
            normal::quantile(gt),
            normal::quantile(gs),
            self.correlation(t, s),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        for m in [
            Marginal::Uniform { lo: 0.0, hi: 2.0 },
            Marginal::Lognormal { mu: -0.5, sigma: 0.6 },
            Marginal::Exponential { rate: 1.5 },
        ] {
            for p in [0.01, 0.2, 0.5, 0.9, 0.999] {
                let y = m.quantile(p);
                assert!((m.cdf(y) - p).abs() < 1e-12, "{m:?} {p}");
                let x = normal::quantile(p);
                assert!((m.quantile_from_score(x) - y).abs() < 1e-10 * y.max(1.0));
            }
        }
    }

    #[test]
    fn density_is_cdf_derivative() {
        let m = Marginal::Lognormal { mu: -0.5, sigma: 0.6 };
        for y in [0.2, 0.6, 1.3] {
            let h = 1e-6;
            let fd = (m.cdf(y + h) - m.cdf(y - h)) / (2.0 * h);
            assert!((fd - m.density(y)).abs() < 1e-7);
        }
    }

    #[test]
    fn joint_cdf_margins() {
        let m = DistributionModel::stationary(
            vec![0.0, 1.0],
            Marginal::Uniform { lo: 0.0, hi: 1.0 },
            Dependence::Ar1(0.6),
        )
        .unwrap();
        let v = m.joint_cdf(0.0, 1.0, 0.3, 1.0).unwrap();
        assert!((v - 0.3).abs() < 1e-9);
        let ind = DistributionModel::stationary(
            vec![0.0, 1.0],
            Marginal::Uniform { lo: 0.0, hi: 1.0 },
            Dependence::Independent,
        )
        .unwrap();
        assert!((ind.joint_cdf(0.0, 1.0, 0.3, 0.4).unwrap() - 0.12).abs() < 1e-9);
    }

    #[test]
    fn rejects_invalid() {
        assert!(Marginal::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(DistributionModel::stationary(
            vec![0.0],
            Marginal::Exponential { rate: 1.0 },
            Dependence::Exchangeable(-0.2)
        )
        .is_err());
        assert!(DistributionModel::new(
            vec![1.0, 0.0],
            vec![Marginal::PointMass { at: 1.0 }; 2],
            Dependence::Independent
        )
        .is_err());
    }
}
