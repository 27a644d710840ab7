//! Cost functions `d : [0, 1] -> [0, 1]` applied to the relative gap.

use crate::error::{Error, Result};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum CostKind {
    Identity,
    Power(f64),
    PiecewiseLinear(Vec<(f64, f64)>),
    Custom {
        name: String,
        value: ScalarFn,
        derivative: ScalarFn,
    },
}

/// A bounded cost `d` with derivative bounded by `M`.
#[derive(Clone)]
pub struct CostFunction {
    kind: CostKind,
    bound: f64,
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostFunction")
            .field("name", &self.name())
            .field("bound", &self.bound)
            .finish()
    }
}

const CHECK_POINTS: usize = 1001;

impl CostFunction {
    /// `d(u) = u`.
    pub fn identity() -> Self {
        Self {
            kind: CostKind::Identity,
            bound: 1.0,
        }
    }

    /// `d(u) = u^alpha` for `alpha = 0` (constant one) or `alpha >= 1`.
    /// Exponents in `(0, 1)` have an unbounded derivative at zero and are rejected.
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidCost(format!("power exponent {alpha} must be >= 0")));
        }
        if alpha > 0.0 && alpha < 1.0 {
            return Err(Error::InvalidCost(format!(
                "power exponent {alpha} in (0, 1) has an unbounded derivative"
            )));
        }
        Ok(Self::power_unchecked(alpha))
    }

    /// Power cost without the derivative-bound check; FGT indices accept any `alpha >= 0`.
    pub(crate) fn power_unchecked(alpha: f64) -> Self {
        if alpha == 1.0 {
            return Self::identity();
        }
        let bound = if alpha < 1.0 && alpha > 0.0 {
            f64::INFINITY
        } else {
            alpha
        };
        Self {
            kind: CostKind::Power(alpha),
            bound,
        }
    }

    /// Linear interpolation between `(u, d)` knots spanning `[0, 1]`.
    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidCost("need at least two knots".into()));
        }
        if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
            return Err(Error::InvalidCost("knots must start at u=0 and end at u=1".into()));
        }
        let mut bound: f64 = 0.0;
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidCost("knot abscissae must increase strictly".into()));
            }
            bound = bound.max(((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs());
        }
        if knots.iter().any(|k| !(0.0..=1.0).contains(&k.1)) {
            return Err(Error::InvalidCost("knot values must lie in [0, 1]".into()));
        }
        Ok(Self {
            kind: CostKind::PiecewiseLinear(knots),
            bound,
        })
    }

    /// Reads `u,d` knots, one per line; a non-numeric first line is a header.
    pub fn load_knots(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut knots = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let parsed = match (parts.next(), parts.next()) {
                (Some(a), Some(b)) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some(k) => knots.push(k),
                None if i == 0 => continue,
                None => {
                    return Err(Error::Parse {
                        row: i + 1,
                        message: format!("expected `u,d`, got `{line}`"),
                    })
                }
            }
        }
        Self::piecewise_linear(knots)
    }

    /// User-supplied `d` and `d'`, validated by sampling `[0, 1]` on a grid.
    pub fn custom<F, D>(name: &str, value: F, derivative: D, bound: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        for i in 0..CHECK_POINTS {
            let u = i as f64 / (CHECK_POINTS - 1) as f64;
            let v = value(u);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidCost(format!("d({u}) = {v} outside [0, 1]")));
            }
            let dv = derivative(u);
            if !(dv.abs() <= bound) {
                return Err(Error::InvalidCost(format!(
                    "|d'({u})| = {} exceeds the bound {bound}",
                    dv.abs()
                )));
            }
        }
        Ok(Self {
            kind: CostKind::Custom {
                name: name.to_string(),
                value: Arc::new(value),
                derivative: Arc::new(derivative),
            },
            bound,
        })
    }

    /// Named registry: `identity`, `power:<alpha>`, or `pwl:<knots file>`.
    pub fn from_name(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec.split_once(':') {
            None if spec == "identity" => Ok(Self::identity()),
            Some(("power", a)) => {
                let alpha = a
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidCost(format!("bad power exponent `{a}`")))?;
                Self::power(alpha)
            }
            Some(("pwl", path)) => Self::load_knots(path.trim()),
            _ => Err(Error::InvalidCost(format!(
                "unknown cost `{spec}`; expected identity, power:<alpha> or pwl:<path>"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            CostKind::Identity => "identity".into(),
            CostKind::Power(a) => format!("power({a})"),
            CostKind::PiecewiseLinear(k) => format!("piecewise-linear({} knots)", k.len()),
            CostKind::Custom { name, .. } => name.clone(),
        }
    }

    /// Derivative bound `M`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `d(u)`.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            CostKind::Identity => u,
            CostKind::Power(a) => {
                if *a == 0.0 {
                    1.0
                } else if *a == 2.0 {
                    u * u
                } else {
                    u.powf(*a)
                }
            }
            CostKind::PiecewiseLinear(knots) => {
                let i = segment(knots, u);
                let (u0, d0) = knots[i];
                let (u1, d1) = knots[i + 1];
                d0 + (d1 - d0) * (u - u0) / (u1 - u0)
            }
            CostKind::Custom { value, .. } => value(u),
        }
    }

    /// `d'(u)` (right derivative at piecewise-linear knots).
    pub fn derivative(&self, u: f64) -> f64 {
        match &self.kind {
            CostKind::Identity => 1.0,
            CostKind::Power(a) => {
                if *a == 0.0 {
                    0.0
                } else {
                    a * u.powf(a - 1.0)
                }
            }
            CostKind::PiecewiseLinear(knots) => {
                let i = segment(knots, u);
                (knots[i + 1].1 - knots[i].1) / (knots[i + 1].0 - knots[i].0)
            }
            CostKind::Custom { derivative, .. } => derivative(u),
        }
    }

    /// `γ(y) = d((z - y) / z)` on `{y <= z}` and 0 elsewhere.
    #[inline]
    pub fn gap_cost(&self, z: f64, y: f64) -> f64 {
        if y <= z {
            self.eval((z - y) / z)
        } else {
            0.0
        }
    }
}

fn segment(knots: &[(f64, f64)], u: f64) -> usize {
    let i = knots.partition_point(|k| k.0 <= u);
    i.saturating_sub(1).min(knots.len() - 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_rules() {
        assert_eq!(CostFunction::power(0.0).unwrap().eval(0.0), 1.0);
        assert_eq!(CostFunction::power(2.0).unwrap().eval(0.5), 0.25);
        assert!(CostFunction::power(0.5).is_err());
        assert!(CostFunction::power(-1.0).is_err());
        assert_eq!(CostFunction::power(1.0).unwrap().name(), "identity");
    }

    #[test]
    fn piecewise_linear_interpolates() {
        let d = CostFunction::piecewise_linear(vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)]).unwrap();
        assert!((d.eval(0.25) - 0.4).abs() < 1e-15);
        assert!((d.eval(0.75) - 0.9).abs() < 1e-15);
        assert_eq!(d.eval(1.0), 1.0);
        assert!((d.bound() - 1.6).abs() < 1e-15);
        assert!((d.derivative(0.6) - 0.4).abs() < 1e-15);
        assert!(CostFunction::piecewise_linear(vec![(0.0, 0.0), (0.5, 2.0), (1.0, 1.0)]).is_err());
        assert!(CostFunction::piecewise_linear(vec![(0.1, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn custom_is_checked_on_grid() {
        let ok = CostFunction::custom("sq", |u| u * u, |u| 2.0 * u, 2.0);
        assert!(ok.is_ok());
        let too_steep = CostFunction::custom("sq", |u| u * u, |u| 2.0 * u, 1.5);
        assert!(too_steep.is_err());
        let unbounded = CostFunction::custom("x2", |u| 2.0 * u, |_| 2.0, 2.0);
        assert!(unbounded.is_err());
    }

    #[test]
    fn gap_cost_vanishes_above_threshold() {
        let d = CostFunction::identity();
        assert_eq!(d.gap_cost(10.0, 2.0), 0.8);
        assert_eq!(d.gap_cost(10.0, 10.0), 0.0);
        assert_eq!(d.gap_cost(10.0, 12.0), 0.0);
        assert_eq!(CostFunction::power(0.0).unwrap().gap_cost(10.0, 10.0), 1.0);
    }
}
