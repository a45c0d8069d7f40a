//! Clark sampling nodes: the solutions of `φ(x_n) = γ + 2πn`.
//!
//! For a meromorphic inner function with `c > 0` the phase is an
//! increasing bijection of ℝ, so every index `n` has exactly one node and
//! the normalized kernels `k_{x_n} / ‖k_{x_n}‖` form an orthonormal basis
//! of the model space (up to at most one exceptional `γ`).

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inner::{InnerFunctionSpec, TWO_PI};
use crate::kernel::kernel_norm_sq;
use crate::report::fmt_f64;

/// Largest tolerated phase residual for a node to count as belonging to a
/// spec.
pub const NODE_RESIDUAL_TOL: f64 = 1e-10;

/// Nodes `x_n`, `n_min <= n <= n_max`, and weights `‖k_{x_n}‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    gamma: f64,
    n_min: i64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SamplingGrid {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.nodes.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(n, x_n, ‖k_{x_n}‖²)` in index order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(move |(i, (x, w))| (self.n_min + i as i64, *x, *w))
    }

    /// Node target phase `γ + 2πn`.
    pub fn target(&self, n: i64) -> f64 {
        self.gamma + TWO_PI * n as f64
    }

    /// Sub-grid of indices `|n - n_c| <= half_width`, `n_c` being the index
    /// of the node nearest `center`.
    pub fn window(&self, center: f64, half_width: usize) -> SamplingGrid {
        let (lo, hi) = self.window_range(center, half_width);
        SamplingGrid {
            gamma: self.gamma,
            n_min: self.n_min + lo as i64,
            nodes: self.nodes[lo..hi].to_vec(),
            weights: self.weights[lo..hi].to_vec(),
        }
    }

    /// Position range `[lo, hi)` covered by [`SamplingGrid::window`].
    pub(crate) fn window_range(&self, center: f64, half_width: usize) -> (usize, usize) {
        if self.nodes.is_empty() {
            return (0, 0);
        }
        let pos = self.nodes.partition_point(|&x| x < center);
        let nearest = if pos == 0 {
            0
        } else if pos == self.nodes.len() {
            pos - 1
        } else if center - self.nodes[pos - 1] <= self.nodes[pos] - center {
            pos - 1
        } else {
            pos
        };
        let lo = nearest.saturating_sub(half_width);
        let hi = (nearest + half_width + 1).min(self.nodes.len());
        (lo, hi)
    }

    /// Largest `|φ(x_n) - γ - 2πn|` under `spec`.
    pub fn max_residual(&self, spec: &InnerFunctionSpec) -> f64 {
        self.iter()
            .map(|(n, x, _)| (spec.phase_value(x) - self.target(n)).abs())
            .fold(0.0, f64::max)
    }

    /// Fails with [`Error::GridMismatch`] unless every node solves the
    /// phase equation of `spec`.
    pub fn check_spec(&self, spec: &InnerFunctionSpec) -> Result<()> {
        for (n, x, _) in self.iter() {
            let residual = (spec.phase_value(x) - self.target(n)).abs();
            // the tolerance scales with the size of the target phase
            let tol = 1e-8 * (1.0 + self.target(n).abs());
            if !(residual <= tol) {
                return Err(Error::GridMismatch { index: n, residual });
            }
        }
        Ok(())
    }

    /// CSV with header `n,x_n,weight`, one row per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,x_n,weight")?;
        for (n, x, w) in self.iter() {
            writeln!(out, "{},{},{}", n, fmt_f64(x), fmt_f64(w))?;
        }
        Ok(())
    }
}

/// Solves `φ(x) = target` for an increasing phase.
///
/// The Blaschke part of the phase lies in `(-2πM, 0)`, `M` the total
/// multiplicity, so with `c > 0` the root lies in
/// `[(target - τ)/c, (target - τ + 2πM)/c]`. The bracket is bisected
/// to floating-point resolution and polished with one Newton step.
pub fn solve_phase(spec: &InnerFunctionSpec, target: f64) -> Result<f64> {
    let m = spec.total_multiplicity() as f64;
    let residual = |x: f64| spec.phase_value(x) - target;
    let (mut lo, mut hi) = if spec.c() > 0.0 {
        let x0 = (target - spec.tau()) / spec.c();
        (x0 - 1.0, x0 + TWO_PI * m / spec.c() + 1.0)
    } else {
        // Bounded phase range (τ - 2πM, τ).
        let (inf, sup) = (spec.tau() - TWO_PI * m, spec.tau());
        if !(target > inf && target < sup) {
            return Err(Error::NoNode { target });
        }
        let mut lo = -1.0;
        let mut hi = 1.0;
        while residual(lo) > 0.0 {
            lo *= 2.0;
            if !lo.is_finite() {
                return Err(Error::NoNode { target });
            }
        }
        while residual(hi) < 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NoNode { target });
            }
        }
        (lo, hi)
    };
    // widen defensively if rounding put the root outside
    while residual(lo) > 0.0 {
        lo -= 1.0 + lo.abs();
    }
    while residual(hi) < 0.0 {
        hi += 1.0 + hi.abs();
    }

    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let r = residual(x);
    let polished = x - r / spec.phase_derivative(x);
    if polished.is_finite() && residual(polished).abs() < r.abs() {
        Ok(polished)
    } else {
        Ok(x)
    }
}

/// Length `h > 0` of the interval starting (`forward`) or ending at
/// `anchor` whose phase increment equals `delta`.
///
/// Requires `c > 0`, so the increment is at least `c h` and the root lies
/// in `(0, delta / c]`. Safeguarded Newton on the cancellation-free
/// increment.
pub fn solve_increment(spec: &InnerFunctionSpec, anchor: f64, delta: f64, forward: bool) -> Result<f64> {
    if spec.c() <= 0.0 {
        return Err(Error::RequiresExponentialFactor);
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("phase increment must be > 0, got {delta}")));
    }
    let residual = |h: f64| {
        if forward {
            spec.phase_increment(anchor, anchor + h) - delta
        } else {
            spec.phase_increment(anchor - h, anchor) - delta
        }
    };
    let slope = |h: f64| spec.phase_derivative(if forward { anchor + h } else { anchor - h });
    let mut lo = 0.0;
    let mut hi = delta / spec.c();
    let mut h = (delta / spec.phase_derivative(anchor)).min(hi);
    for _ in 0..200 {
        let r = residual(h);
        if r == 0.0 {
            return Ok(h);
        }
        if r < 0.0 {
            lo = h;
        } else {
            hi = h;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let newton = h - r / slope(h);
        h = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if r.abs() <= 2.0 * f64::EPSILON * delta {
            break;
        }
    }
    Ok(h)
}

/// Clark nodes `x_n`, `n_min <= n <= n_max`, for the basis parameter `γ`.
pub fn solve_nodes(spec: &InnerFunctionSpec, gamma: f64, n_min: i64, n_max: i64) -> Result<SamplingGrid> {
    if !(0.0..TWO_PI).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in [0, 2π), got {gamma}"
        )));
    }
    if n_min > n_max {
        return Err(Error::InvalidParameter(format!(
            "empty index range [{n_min}, {n_max}]"
        )));
    }
    if spec.c() <= 0.0 {
        return Err(Error::RequiresExponentialFactor);
    }
    let nodes = (n_min..=n_max)
        .into_par_iter()
        .map(|n| solve_phase(spec, gamma + TWO_PI * n as f64))
        .collect::<Result<Vec<f64>>>()?;
    let weights = nodes.iter().map(|&x| kernel_norm_sq(spec, x)).collect();
    Ok(SamplingGrid {
        gamma,
        n_min,
        nodes,
        weights,
    })
}

/// Smallest and largest gap between consecutive nodes.
pub fn node_spacing_bounds(grid: &SamplingGrid) -> Result<(f64, f64)> {
    if grid.len() < 2 {
        return Err(Error::TooFewNodes(grid.len()));
    }
    let (lo, hi) = grid
        .nodes
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::BlaschkeZero;
    use std::f64::consts::PI;

    fn spec_one_zero() -> InnerFunctionSpec {
        InnerFunctionSpec::new(0.0, 1.0, vec![BlaschkeZero::simple(0.0, 1.0).unwrap()]).unwrap()
    }

    #[test]
    fn increment_solver_inverts_phase() {
        let spec = InnerFunctionSpec::new(
            0.0,
            1.0,
            vec![BlaschkeZero::simple(0.0, 1.0).unwrap(), BlaschkeZero::simple(2.0, 0.5).unwrap()],
        )
        .unwrap();
        for &a in &[-3.0, -0.2, 0.0, 1.7, 2.0, 9.0] {
            for &d in &[1e-3, 0.1, 1.0, 5.0] {
                let h = solve_increment(&spec, a, d, true).unwrap();
                assert!((spec.phase_increment(a, a + h) - d).abs() < 1e-13 * (1.0 + d), "a={a} d={d}");
                let g = solve_increment(&spec, a, d, false).unwrap();
                assert!((spec.phase_increment(a - g, a) - d).abs() < 1e-13 * (1.0 + d));
            }
        }
        let lin = InnerFunctionSpec::exponential(2.0).unwrap();
        assert!((solve_increment(&lin, 0.3, 1.0, true).unwrap() - 0.5).abs() < 1e-15);
        let flat = InnerFunctionSpec::new(0.0, 0.0, vec![BlaschkeZero::simple(0.0, 1.0).unwrap()]).unwrap();
        assert!(solve_increment(&flat, 0.0, 1.0, true).is_err());
        assert!(solve_increment(&lin, 0.0, 0.0, true).is_err());
    }

    #[test]
    fn paley_wiener_grid() {
        let c0 = 1.5;
        let spec = InnerFunctionSpec::exponential(2.0 * c0).unwrap();
        let g = solve_nodes(&spec, 0.0, -10, 10).unwrap();
        for (n, x, w) in g.iter() {
            assert!((x - PI * n as f64 / c0).abs() < 1e-13, "n = {n}");
            assert!((w - c0 / PI).abs() < 1e-15);
        }
    }

    #[test]
    fn shifted_linear_grid() {
        let spec = InnerFunctionSpec::exponential(1.0).unwrap();
        let g = solve_nodes(&spec, PI, -3, 3).unwrap();
        for (n, x, _) in g.iter() {
            assert!((x - (PI + 2.0 * PI * n as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn blaschke_node_residual() {
        let spec = spec_one_zero();
        let g = solve_nodes(&spec, 0.0, 0, 0).unwrap();
        let x0 = g.nodes()[0];
        assert!(spec.phase_value(x0).abs() < 1e-10);
        // x - 2 atan2(1, x) = 0
        assert!((x0 - 2.0 * 1f64.atan2(x0)).abs() < 1e-12);
        assert!(g.max_residual(&spec) < NODE_RESIDUAL_TOL);
    }

    #[test]
    fn spacing_examples() {
        let spec = InnerFunctionSpec::exponential(2.0).unwrap();
        let g = solve_nodes(&spec, 0.0, -5, 5).unwrap();
        let (lo, hi) = node_spacing_bounds(&g).unwrap();
        assert!((lo - PI).abs() < 1e-12 && (hi - PI).abs() < 1e-12);

        let s = spec_one_zero();
        let g = solve_nodes(&s, 0.0, -50, 50).unwrap();
        let (lo, hi) = node_spacing_bounds(&g).unwrap();
        assert!(lo >= 2.0 * PI / 3.0 - 1e-12);
        assert!(hi >= lo);

        let single = solve_nodes(&s, 0.0, 2, 2).unwrap();
        assert_eq!(node_spacing_bounds(&single), Err(Error::TooFewNodes(1)));
    }

    #[test]
    fn rejects_bad_requests() {
        let b = InnerFunctionSpec::new(0.0, 0.0, vec![BlaschkeZero::simple(0.0, 1.0).unwrap()]).unwrap();
        assert_eq!(solve_nodes(&b, 0.0, 0, 1), Err(Error::RequiresExponentialFactor));
        let e = InnerFunctionSpec::exponential(1.0).unwrap();
        assert!(solve_nodes(&e, 7.0, 0, 1).is_err());
        assert!(solve_nodes(&e, 0.0, 2, 1).is_err());
    }

    #[test]
    fn bounded_phase_solves_inside_range_only() {
        let b = InnerFunctionSpec::new(0.0, 0.0, vec![BlaschkeZero::simple(0.0, 1.0).unwrap()]).unwrap();
        let x = solve_phase(&b, -PI).unwrap();
        assert!(x.abs() < 1e-12);
        assert_eq!(solve_phase(&b, 0.5), Err(Error::NoNode { target: 0.5 }));
        assert!(solve_phase(&b, -7.0).is_err());
    }

    #[test]
    fn gamma_shift_interlaces() {
        let s = InnerFunctionSpec::new(
            0.2,
            1.0,
            vec![
                BlaschkeZero::simple(0.0, 1.0).unwrap(),
                BlaschkeZero::simple(2.0, 0.5).unwrap(),
            ],
        )
        .unwrap();
        let a = solve_nodes(&s, 0.5, -40, 40).unwrap();
        for shift in [0.1, 1.0, 3.0, 2.0 * PI - 0.6] {
            let b = solve_nodes(&s, 0.5 + shift, -40, 39).unwrap();
            for (i, x) in b.nodes().iter().enumerate() {
                assert!(a.nodes()[i] < *x && *x < a.nodes()[i + 1]);
            }
        }
    }

    #[test]
    fn window_selection() {
        let s = InnerFunctionSpec::exponential(2.0).unwrap();
        let g = solve_nodes(&s, 0.0, -20, 20).unwrap();
        let w = g.window(0.1, 3);
        assert_eq!(w.n_min(), -3);
        assert_eq!(w.n_max(), 3);
        let edge = g.window(1e6, 5);
        assert_eq!(edge.n_max(), 20);
        assert_eq!(edge.len(), 6);
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = InnerFunctionSpec::exponential(2.0).unwrap();
        let g = solve_nodes(&a, 0.0, -3, 3).unwrap();
        assert!(g.check_spec(&a).is_ok());
        let b = spec_one_zero();
        assert!(matches!(g.check_spec(&b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn csv_layout() {
        let s = InnerFunctionSpec::exponential(2.0).unwrap();
        let g = solve_nodes(&s, 0.0, -1, 1).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "n,x_n,weight");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("-1,"));
        assert!(lines[2].starts_with("0,0.0000000000000000e0,"));
    }
}
