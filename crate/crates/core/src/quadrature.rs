//! Quadrature on the normal-score scale.
//!
//! Integrals against a marginal law `dG(y)` are written on the probability
//! scale `s = G(y)` and then on the normal-score scale `s = Phi(x)`, so that
//! `∫ f(G⁻¹(s)) ds = ∫ f(G⁻¹(Phi(x))) phi(x) dx`. Integrands that are smooth
//! in `y` stay smooth in `x` for every shipped marginal, including the
//! lognormal whose quantile has unbounded slope at `s = 0`. The grid is split
//! at the threshold score `x_Z = Phi⁻¹(G(Z))`, where the marked-set indicator
//! jumps; the split node is duplicated, once on each side.

use crate::error::{Error, Result};
use crate::normal;
use serde::{Deserialize, Serialize};

/// Grid sizes and tolerances for the analytic computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Nodes of the one-dimensional Simpson grid (odd).
    pub nodes: usize,
    /// Nodes per axis of the two-dimensional grid (odd).
    pub pair_nodes: usize,
    /// Relative tolerance between successive refinements, 1-D.
    pub rtol: f64,
    /// Relative tolerance between successive refinements, 2-D.
    pub pair_rtol: f64,
    /// Maximum number of grid doublings before giving up.
    pub max_refinements: usize,
    /// Normal scores are truncated to `[-tail, tail]`.
    pub tail: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            nodes: 4097,
            pair_nodes: 513,
            rtol: 1e-8,
            pair_rtol: 1e-6,
            max_refinements: 3,
            tail: 8.5,
        }
    }
}

/// One node of a [`ScoreGrid`].
#[derive(Debug, Clone, Copy)]
pub struct ScoreNode {
    /// Normal score.
    pub x: f64,
    /// Probability level `Phi(x)`.
    pub s: f64,
    /// Composite Simpson weight in `x`.
    pub rule: f64,
    /// `rule * phi(x)`: weight for integrals against `ds`.
    pub weight: f64,
    /// Whether the node lies in the marked set `{y <= Z}`.
    pub marked: bool,
}

/// Composite Simpson grid on `[-tail, tail]`, split at the threshold score.
#[derive(Debug, Clone)]
pub struct ScoreGrid {
    pub nodes: Vec<ScoreNode>,
    /// Normal score of the threshold, when it falls inside the window.
    pub split: Option<f64>,
    /// Upper bound of the marked piece.
    marked_end: f64,
}

impl ScoreGrid {
    /// Builds a grid of about `nodes` points; `p_marked = G(Z)` locates the split.
    pub fn new(p_marked: f64, nodes: usize, tail: f64) -> Self {
        let nodes = nodes.max(5) | 1;
        let lo = -tail;
        let hi = tail;
        let x_split = normal::quantile(p_marked.clamp(0.0, 1.0));
        let mut out = Vec::with_capacity(nodes + 1);
        if x_split <= lo {
            push_piece(&mut out, lo, hi, nodes, false);
            return Self {
                nodes: out,
                split: None,
                marked_end: lo,
            };
        }
        if x_split >= hi {
            push_piece(&mut out, lo, hi, nodes, true);
            return Self {
                nodes: out,
                split: None,
                marked_end: hi,
            };
        }
        let frac = (x_split - lo) / (hi - lo);
        let mut left = ((nodes as f64 * frac).round() as usize).clamp(3, nodes - 2);
        if left.is_multiple_of(2) {
            left += 1;
        }
        let right = (nodes + 1 - left).max(3) | 1;
        push_piece(&mut out, lo, x_split, left, true);
        push_piece(&mut out, x_split, hi, right, false);
        Self {
            nodes: out,
            split: Some(x_split),
            marked_end: x_split,
        }
    }

    /// `∫ f ds` over the grid.
    pub fn integrate(&self, f: impl Fn(&ScoreNode) -> f64) -> f64 {
        self.nodes.iter().map(|n| n.weight * f(n)).sum()
    }

    /// Upper tail integrals `ψ(x_i) = ∫_{x_i}^{x_Z} nu(x) phi(x) dx` at every
    /// node, for an integrand `nu` that vanishes outside the marked set.
    /// Each inter-node interval is integrated with 5-point Gauss-Legendre.
    pub fn marked_tail_integrals(&self, nu: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        let marked: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].marked)
            .collect();
        let Some(&last) = marked.last() else {
            return out;
        };
        let mut acc = 0.0;
        // The marked piece is contiguous and ends at `marked_end`.
        debug_assert!((self.nodes[last].x - self.marked_end).abs() < 1e-12);
        for w in marked.windows(2).rev() {
            let (a, b) = (self.nodes[w[0]].x, self.nodes[w[1]].x);
            acc += gauss_legendre(a, b, |x| nu(x) * normal::pdf(x));
            out[w[0]] = acc;
        }
        out
    }
}

fn push_piece(out: &mut Vec<ScoreNode>, a: f64, b: f64, count: usize, marked: bool) {
    let panels = count - 1;
    let h = (b - a) / panels as f64;
    for i in 0..count {
        let x = if i == panels { b } else { a + h * i as f64 };
        let coef = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let rule = coef * h / 3.0;
        out.push(ScoreNode {
            x,
            s: normal::cdf(x),
            rule,
            weight: rule * normal::pdf(x),
            marked,
        });
    }
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

/// Runs `compute` on grids of increasing size until two successive results
/// agree to `rtol` (relative to their scale, floored at `abs_floor`).
pub(crate) fn refine<T>(
    start: usize,
    rtol: f64,
    abs_floor: f64,
    max_refinements: usize,
    mut compute: impl FnMut(usize) -> Result<T>,
    distance: impl Fn(&T, &T) -> (f64, f64),
) -> Result<(T, usize)> {
    let mut nodes = start;
    let mut prev = compute(nodes)?;
    for _ in 0..max_refinements {
        let next_nodes = 2 * nodes - 1;
        let next = compute(next_nodes)?;
        let (diff, scale) = distance(&prev, &next);
        if diff <= rtol * scale.max(abs_floor) {
            return Ok((next, next_nodes));
        }
        prev = next;
        nodes = next_nodes;
    }
    let (diff, scale) = distance(&prev, &compute(2 * nodes - 1)?);
    Err(Error::Quadrature(format!(
        "refinements still differ by {diff:.3e} (scale {scale:.3e}) at {nodes} nodes"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_integrates_probability_mass() {
        let g = ScoreGrid::new(0.3, 4097, 8.5);
        let total = g.integrate(|_| 1.0);
        assert!((total - 1.0).abs() < 1e-13);
        let marked = g.integrate(|n| if n.marked { 1.0 } else { 0.0 });
        assert!((marked - 0.3).abs() < 1e-11, "{marked}");
        // ∫ s ds = 1/2.
        assert!((g.integrate(|n| n.s) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn grid_without_split() {
        let g = ScoreGrid::new(0.0, 101, 8.5);
        assert!(g.split.is_none());
        assert!(g.nodes.iter().all(|n| !n.marked));
        let g = ScoreGrid::new(1.0, 101, 8.5);
        assert!(g.nodes.iter().all(|n| n.marked));
    }

    #[test]
    fn tail_integrals_match_closed_form() {
        // nu = 1 on the marked set: ψ(s) = p - s.
        let p = 0.4;
        let g = ScoreGrid::new(p, 1025, 8.5);
        let psi = g.marked_tail_integrals(|_| 1.0);
        for (node, v) in g.nodes.iter().zip(&psi) {
            let expect = if node.marked { p - node.s } else { 0.0 };
            assert!((v - expect).abs() < 1e-12, "{} {v} {expect}", node.s);
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_nine() {
        let v = gauss_legendre(0.0, 2.0, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
    }
}
