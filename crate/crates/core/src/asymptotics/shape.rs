//! Limit functions `c(x, y)` and `pi(x, y)` on the probability scale.
//!
//! `x` is the marked mass `G(Z)` and `y` the level `G(u)` of an observation.

use std::fmt;
use std::sync::Arc;

/// Limit shape of a weighted index.
///
/// A ratio shape has `J = ∫ c γ̃ / ∫ π e`; otherwise `J = ∫ c γ̃` and `pi` is
/// unused.
pub trait LimitShape: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn c(&self, x: f64, y: f64) -> f64;
    fn c_x(&self, x: f64, y: f64) -> f64;
    fn c_y(&self, x: f64, y: f64) -> f64;
    fn ratio_form(&self) -> bool {
        false
    }
    fn pi(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }
    fn pi_x(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }
    fn pi_y(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }
}

/// Kakwani(k): `c = (x − y)^k`, `pi = y^k / x`.
#[derive(Debug, Clone, Copy)]
pub struct KakwaniShape {
    k: i32,
}

impl KakwaniShape {
    pub fn new(k: u32) -> Self {
        Self { k: k as i32 }
    }
}

impl LimitShape for KakwaniShape {
    fn name(&self) -> String {
        format!("kakwani({})", self.k)
    }
    fn c(&self, x: f64, y: f64) -> f64 {
        (x - y).powi(self.k)
    }
    fn c_x(&self, x: f64, y: f64) -> f64 {
        self.k as f64 * (x - y).powi(self.k - 1)
    }
    fn c_y(&self, x: f64, y: f64) -> f64 {
        -self.c_x(x, y)
    }
    fn ratio_form(&self) -> bool {
        true
    }
    fn pi(&self, x: f64, y: f64) -> f64 {
        y.powi(self.k) / x
    }
    fn pi_x(&self, x: f64, y: f64) -> f64 {
        -y.powi(self.k) / (x * x)
    }
    fn pi_y(&self, x: f64, y: f64) -> f64 {
        self.k as f64 * y.powi(self.k - 1) / x
    }
}

/// Shorrocks/Thon rank weight `c = 2(1 − y)`.
#[derive(Debug, Clone, Copy)]
pub struct RankShape;

impl LimitShape for RankShape {
    fn name(&self) -> String {
        "rank".into()
    }
    fn c(&self, _x: f64, y: f64) -> f64 {
        2.0 * (1.0 - y)
    }
    fn c_x(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }
    fn c_y(&self, _x: f64, _y: f64) -> f64 {
        -2.0
    }
}

/// Unit weight `c = 1`: the mean loss (FGT).
#[derive(Debug, Clone, Copy)]
pub struct UnitShape;

impl LimitShape for UnitShape {
    fn name(&self) -> String {
        "unit".into()
    }
    fn c(&self, _x: f64, _y: f64) -> f64 {
        1.0
    }
    fn c_x(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }
    fn c_y(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }
}

type Bivariate = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// User-supplied limit functions with their partial derivatives.
#[derive(Clone)]
pub struct CustomShape {
    name: String,
    c: [Bivariate; 3],
    pi: Option<[Bivariate; 3]>,
}

impl fmt::Debug for CustomShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomShape")
            .field("name", &self.name)
            .field("ratio", &self.pi.is_some())
            .finish()
    }
}

impl CustomShape {
    /// `c`, `∂c/∂x`, `∂c/∂y`.
    pub fn simple(name: &str, c: [Bivariate; 3]) -> Self {
        Self {
            name: name.into(),
            c,
            pi: None,
        }
    }

    /// Ratio form with `pi`, `∂pi/∂x`, `∂pi/∂y`.
    pub fn ratio(name: &str, c: [Bivariate; 3], pi: [Bivariate; 3]) -> Self {
        Self {
            name: name.into(),
            c,
            pi: Some(pi),
        }
    }
}

impl LimitShape for CustomShape {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn c(&self, x: f64, y: f64) -> f64 {
        (self.c[0])(x, y)
    }
    fn c_x(&self, x: f64, y: f64) -> f64 {
        (self.c[1])(x, y)
    }
    fn c_y(&self, x: f64, y: f64) -> f64 {
        (self.c[2])(x, y)
    }
    fn ratio_form(&self) -> bool {
        self.pi.is_some()
    }
    fn pi(&self, x: f64, y: f64) -> f64 {
        self.pi.as_ref().map_or(0.0, |p| (p[0])(x, y))
    }
    fn pi_x(&self, x: f64, y: f64) -> f64 {
        self.pi.as_ref().map_or(0.0, |p| (p[1])(x, y))
    }
    fn pi_y(&self, x: f64, y: f64) -> f64 {
        self.pi.as_ref().map_or(0.0, |p| (p[2])(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn check_partials(shape: &dyn LimitShape) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..100 {
            let x: f64 = rng.random_range(0.2..0.9);
            let y: f64 = rng.random_range(0.05..0.95) * x;
            let fd = |f: &dyn Fn(f64, f64) -> f64, dx: f64, dy: f64| {
                (f(x + dx, y + dy) - f(x - dx, y - dy)) / (2.0 * h)
            };
            let c = |a, b| shape.c(a, b);
            let pi = |a, b| shape.pi(a, b);
            assert!((fd(&c, h, 0.0) - shape.c_x(x, y)).abs() < 1e-6);
            assert!((fd(&c, 0.0, h) - shape.c_y(x, y)).abs() < 1e-6);
            assert!((fd(&pi, h, 0.0) - shape.pi_x(x, y)).abs() < 1e-6);
            assert!((fd(&pi, 0.0, h) - shape.pi_y(x, y)).abs() < 1e-6);
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        for k in 1..=3 {
            check_partials(&KakwaniShape::new(k));
        }
        check_partials(&RankShape);
        check_partials(&UnitShape);
    }

    #[test]
    fn custom_shape_dispatch() {
        let s = CustomShape::simple(
            "lin",
            [
                Arc::new(|x, y| x - y),
                Arc::new(|_, _| 1.0),
                Arc::new(|_, _| -1.0),
            ],
        );
        assert!(!s.ratio_form());
        assert_eq!(s.c(0.5, 0.2), 0.3);
        assert_eq!(s.pi(0.5, 0.2), 0.0);
        check_partials(&s);
    }
}
