use std::fmt;
use std::sync::{Arc, Mutex};

type WeightFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;
type ScaleFn = Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>;

/// Rank weights of the general threshold-based form
///
/// ```text
/// J_n = A(n, Q) / (n B(Q)) · Σ_{j=1}^{Q} w(μ₁n + μ₂Q − μ₃j + μ₄) · d((z − Y_{j,n}) / z)
/// ```
///
/// with `B(Q) = Σ_{j=1}^{Q} w(j)`. Prefix sums of `w` are cached.
pub struct WeightScheme {
    name: String,
    weight: WeightFn,
    mu: [i64; 4],
    scale: ScaleFn,
    prefix: Mutex<Vec<f64>>,
}

impl Clone for WeightScheme {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            weight: self.weight.clone(),
            mu: self.mu,
            scale: self.scale.clone(),
            prefix: Mutex::new(self.prefix.lock().expect("poisoned").clone()),
        }
    }
}

impl fmt::Debug for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightScheme")
            .field("name", &self.name)
            .field("mu", &self.mu)
            .finish()
    }
}

impl WeightScheme {
    /// `weight` must be nonnegative; `scale` is `A(n, Q)`.
    pub fn new<W, A>(name: &str, weight: W, mu: [i64; 4], scale: A) -> Self
    where
        W: Fn(u64) -> f64 + Send + Sync + 'static,
        A: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            weight: Arc::new(weight),
            mu,
            scale: Arc::new(scale),
            prefix: Mutex::new(vec![0.0]),
        }
    }

    /// Kakwani weights `w(j) = j^k`, `A = Q`, `μ = (0, 1, 1, 1)`.
    pub fn kakwani(k: u32) -> Self {
        Self::new(
            &format!("kakwani({k})"),
            move |j| (j as f64).powi(k as i32),
            [0, 1, 1, 1],
            |_, q| q as f64,
        )
    }

    /// Unit weights with `A = Q`, which gives the plain mean loss.
    pub fn unit() -> Self {
        Self::new("unit", |_| 1.0, [0, 0, 0, 1], |_, q| q as f64)
    }

    /// Thon weights `2n − 2j + 1` normalised by `n²`.
    pub fn thon() -> Self {
        Self::new(
            "thon",
            |x| x as f64,
            [2, 0, 2, 1],
            |n, q| (q * (q + 1)) as f64 / (2 * n) as f64,
        )
    }

    /// Shorrocks weights `2n − 2j + 1` normalised by `n(n + 1)`.
    pub fn shorrocks() -> Self {
        Self::new(
            "shorrocks",
            |x| x as f64,
            [2, 0, 2, 1],
            |n, q| (q * (q + 1)) as f64 / (2 * (n + 1)) as f64,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mu(&self) -> [i64; 4] {
        self.mu
    }

    /// `w(j)`.
    #[inline]
    pub fn weight(&self, j: u64) -> f64 {
        (self.weight)(j)
    }

    /// `A(n, Q)`.
    #[inline]
    pub fn scale(&self, n: usize, q: usize) -> f64 {
        (self.scale)(n, q)
    }

    /// Argument `μ₁n + μ₂Q − μ₃j + μ₄` of the `j`-th weight.
    #[inline]
    pub fn argument(&self, n: usize, q: usize, j: usize) -> i64 {
        let [m1, m2, m3, m4] = self.mu;
        m1 * n as i64 + m2 * q as i64 - m3 * j as i64 + m4
    }

    /// `B(Q) = Σ_{j=1}^{Q} w(j)`, summed in increasing `j`.
    pub fn normaliser(&self, q: usize) -> f64 {
        let mut prefix = self.prefix.lock().expect("poisoned");
        while prefix.len() <= q {
            let j = prefix.len() as u64;
            let next = prefix[prefix.len() - 1] + self.weight(j);
            prefix.push(next);
        }
        prefix[q]
    }
}
