//! Measures, window densities and large-sieve bounds.
//!
//! `D_μ(δ) = sup_x μ([x, x+δ]) / δ` over closed windows, and its
//! phase-adapted form `D_μ^Θ(δ) = sup μ([a, b]) / (b - a)` over intervals
//! with `φ(b) - φ(a) = δ`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clark::solve_increment;
use crate::error::{Error, Result};
use crate::harness::{golden_max, GridFunction};
use crate::inner::InnerFunctionSpec;
use crate::kernel::sinc;
use crate::quadrature::{integrate, uniform_breakpoints, QuadOptions};
use crate::report::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub x: f64,
    pub mass: f64,
}

/// Constant density `h` on `[l, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub l: f64,
    pub r: f64,
    pub h: f64,
}

/// Finitely many point masses plus a piecewise-constant density.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct MeasureSpec {
    atoms: Vec<Atom>,
    pieces: Vec<Piece>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    pieces: Vec<Piece>,
}

impl TryFrom<RawMeasure> for MeasureSpec {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        MeasureSpec::new(raw.atoms, raw.pieces)
    }
}

impl From<MeasureSpec> for RawMeasure {
    fn from(m: MeasureSpec) -> Self {
        RawMeasure {
            atoms: m.atoms,
            pieces: m.pieces,
        }
    }
}

impl MeasureSpec {
    /// Validates masses, densities and that pieces do not overlap. Atoms
    /// and pieces are kept sorted by position.
    pub fn new(mut atoms: Vec<Atom>, mut pieces: Vec<Piece>) -> Result<Self> {
        for a in &atoms {
            if !a.x.is_finite() || !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "atom at {} needs a finite position and mass > 0, got mass {}",
                    a.x, a.mass
                )));
            }
        }
        for p in &pieces {
            if !(p.l.is_finite() && p.r.is_finite() && p.l < p.r) {
                return Err(Error::InvalidMeasure(format!("piece [{}, {}] is not a bounded interval", p.l, p.r)));
            }
            if !(p.h >= 0.0 && p.h.is_finite()) {
                return Err(Error::InvalidMeasure(format!("piece height {} must be finite and >= 0", p.h)));
            }
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        pieces.sort_by(|a, b| a.l.total_cmp(&b.l));
        for w in pieces.windows(2) {
            if w[1].l < w[0].r {
                return Err(Error::InvalidMeasure(format!(
                    "pieces [{}, {}] and [{}, {}] overlap",
                    w[0].l, w[0].r, w[1].l, w[1].r
                )));
            }
        }
        Ok(Self { atoms, pieces })
    }

    /// `atoms` as `(x, mass)`, `pieces` as `(l, r, h)`.
    pub fn from_parts(atoms: Vec<(f64, f64)>, pieces: Vec<(f64, f64, f64)>) -> Result<Self> {
        Self::new(
            atoms.into_iter().map(|(x, mass)| Atom { x, mass }).collect(),
            pieces.into_iter().map(|(l, r, h)| Piece { l, r, h }).collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.pieces.iter().all(|p| p.h == 0.0)
    }

    /// `μ([a, b])`.
    pub fn mass_in_closed(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        let lo = self.atoms.partition_point(|t| t.x < a);
        let hi = self.atoms.partition_point(|t| t.x <= b);
        let atoms: f64 = self.atoms[lo..hi].iter().map(|t| t.mass).sum();
        let pieces: f64 = self
            .pieces
            .iter()
            .map(|p| p.h * (p.r.min(b) - p.l.max(a)).max(0.0))
            .sum();
        atoms + pieces
    }

    /// Smallest interval containing every atom and every piece of
    /// positive height.
    pub fn support_hull(&self) -> Option<(f64, f64)> {
        let pts = self
            .atoms
            .iter()
            .flat_map(|a| [a.x, a.x])
            .chain(self.pieces.iter().filter(|p| p.h > 0.0).flat_map(|p| [p.l, p.r]));
        pts.fold(None, |acc, x| match acc {
            None => Some((x, x)),
            Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
        })
    }

    /// Atom positions and endpoints of pieces of positive height, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| a.x)
            .chain(self.pieces.iter().filter(|p| p.h > 0.0).flat_map(|p| [p.l, p.r]))
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// `μ_α(A) = μ(A / α)` for `α > 0`.
    pub fn dilate(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("dilation factor must be > 0, got {alpha}")));
        }
        Self::new(
            self.atoms.iter().map(|a| Atom { x: alpha * a.x, mass: a.mass }).collect(),
            self.pieces
                .iter()
                .map(|p| Piece {
                    l: alpha * p.l,
                    r: alpha * p.r,
                    h: p.h / alpha,
                })
                .collect(),
        )
    }

    /// `∫ g dμ`, the density part by adaptive quadrature.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let mut total: f64 = self.atoms.iter().map(|a| a.mass * g(a.x)).sum();
        for p in self.pieces.iter().filter(|p| p.h > 0.0) {
            let r = integrate(&g, &uniform_breakpoints(p.l, p.r, 0.25), &QuadOptions::new(1e-300, 1e-12))?;
            total += p.h * r.value;
        }
        Ok(total)
    }
}

/// A density value and an interval attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityReport {
    pub delta: f64,
    pub value: f64,
    pub witness: (f64, f64),
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    Ok(())
}

/// `D_μ(δ) = sup_x μ([x, x+δ]) / δ`.
///
/// `x ↦ μ([x, x+δ])` is piecewise linear with jumps only where `x` or
/// `x + δ` meets a breakpoint, and upper semicontinuous for closed windows,
/// so the supremum is attained at one of the candidates `s` or `s - δ`.
pub fn d_mu(measure: &MeasureSpec, delta: f64) -> Result<DensityReport> {
    check_delta(delta)?;
    let bps = measure.breakpoints();
    let mut best = DensityReport {
        delta,
        value: 0.0,
        witness: (0.0, delta),
    };
    // windows pinned to the breakpoint exactly: (s - δ) + δ may round below s
    for (a, b) in bps.iter().flat_map(|&s| [(s - delta, s), (s, s + delta)]) {
        let v = measure.mass_in_closed(a, b) / delta;
        if v > best.value {
            best.value = v;
            best.witness = (a, b);
        }
    }
    Ok(best)
}

/// Ratio for the interval `[a, b]`.
fn interval_density(measure: &MeasureSpec, a: f64, b: f64) -> f64 {
    measure.mass_in_closed(a, b) / (b - a)
}

/// `D_μ^Θ(δ) = sup { μ([a,b]) / (b-a) : φ(b) - φ(a) = δ }`.
///
/// Candidates for the left endpoint `a`: measure breakpoints, the points
/// whose right endpoint lands on a breakpoint, and a uniform grid over the
/// hull `[min supp - δ/c, max supp]`, with step
/// `min(min piece width, min Im λ, δ/‖φ'‖_∞) / 8`. Grid maxima are refined
/// by golden-section search inside their breakpoint-free cell. With no
/// zeros, `b - a = δ/c` and the value is `D_μ(δ/c)`.
pub fn d_mu_theta(measure: &MeasureSpec, spec: &InnerFunctionSpec, delta: f64) -> Result<DensityReport> {
    check_delta(delta)?;
    if spec.c() <= 0.0 {
        return Err(Error::RequiresExponentialFactor);
    }
    if spec.zeros().is_empty() {
        let r = d_mu(measure, delta / spec.c())?;
        return Ok(DensityReport { delta, ..r });
    }
    let Some((smin, smax)) = measure.support_hull() else {
        return Ok(DensityReport {
            delta,
            value: 0.0,
            witness: (0.0, solve_increment(spec, 0.0, delta, true)?),
        });
    };
    let bps = measure.breakpoints();
    let right_of = |a: f64| -> Result<f64> { Ok(a + solve_increment(spec, a, delta, true)?) };

    // (a, b) candidates; preimages pin b to the breakpoint exactly
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for &s in &bps {
        candidates.push((s, right_of(s)?));
        candidates.push((s - solve_increment(spec, s, delta, false)?, s));
    }
    let mut events: Vec<f64> = candidates.iter().map(|c| c.0).collect();
    events.sort_by(f64::total_cmp);
    events.dedup();

    let sup = spec.derivative_sup_norm();
    let min_piece = measure
        .pieces()
        .iter()
        .filter(|p| p.h > 0.0)
        .map(|p| p.r - p.l)
        .fold(f64::INFINITY, f64::min);
    let min_im = spec.zeros().iter().map(|z| z.im()).fold(f64::INFINITY, f64::min);
    let step = min_piece.min(min_im).min(delta / sup) / 8.0;
    let lo = smin - delta / spec.c();
    let n = ((smax - lo) / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|k| lo + (smax - lo) * k as f64 / n as f64).collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&a| right_of(a).map(|b| interval_density(measure, a, b)))
        .collect::<Result<_>>()?;

    let objective = |a: f64| right_of(a).map(|b| interval_density(measure, a, b)).unwrap_or(0.0);
    let refined: Vec<(f64, f64)> = (0..=n)
        .into_par_iter()
        .filter(|&i| {
            let left = if i > 0 { values[i - 1] } else { 0.0 };
            let right = if i < n { values[i + 1] } else { 0.0 };
            values[i] > 0.0 && values[i] >= left && values[i] >= right
        })
        .map(|i| {
            let a = grid[i];
            let mut l = grid[i.saturating_sub(1)];
            let mut r = grid[(i + 1).min(n)];
            // stay inside the event-free cell around a
            let pos = events.partition_point(|&e| e <= a);
            if pos > 0 {
                l = l.max(events[pos - 1]);
            }
            if pos < events.len() {
                r = r.min(events[pos]);
            }
            if r - l <= 0.0 {
                return (a, values[i]);
            }
            golden_max(objective, l, r, 60)
        })
        .collect();

    let mut best = DensityReport {
        delta,
        value: 0.0,
        witness: (0.0, 0.0),
    };
    let mut consider = |a: f64, b: f64| {
        let v = interval_density(measure, a, b);
        if v > best.value {
            best.value = v;
            best.witness = (a, b);
        }
    };
    for &(a, b) in &candidates {
        consider(a, b);
    }
    for (&a, _) in grid.iter().zip(&values) {
        consider(a, right_of(a)?);
    }
    for &(a, _) in &refined {
        consider(a, right_of(a)?);
    }
    Ok(best)
}

/// `(1 + cδ/π) d`, the `p = 2` large-sieve bound for spectrum in `[-c, c]`.
pub fn donoho_logan_bound_p2(c: f64, delta: f64, d: f64) -> f64 {
    (1.0 + c * delta / PI) * d
}

/// `d / sinc(cδ/2)`, the `p = 1` bound; needs `cδ < 2π`.
pub fn donoho_logan_bound_p1(c: f64, delta: f64, d: f64) -> Result<f64> {
    let s = sinc(0.5 * c * delta);
    // sinc is positive exactly on (-π, π); sinc(π) rounds to a tiny positive value
    if !(0.5 * c * delta < PI && s > 0.0) {
        return Err(Error::Domain(format!("sinc(cδ/2) = {s} <= 0 for c = {c}, δ = {delta}")));
    }
    Ok(d / s)
}

/// `(1 + δ ‖Θ'‖_∞)^p d`.
pub fn model_sieve_bound(spec: &InnerFunctionSpec, delta: f64, d: f64, p: f64) -> f64 {
    model_sieve_bound_from_norm(spec.derivative_sup_norm(), delta, d, p)
}

/// [`model_sieve_bound`] with `‖Θ'‖_∞` supplied.
pub fn model_sieve_bound_from_norm(theta_sup: f64, delta: f64, d: f64, p: f64) -> f64 {
    (1.0 + delta * theta_sup).powf(p) * d
}

/// `sup_x 2c |T ∩ [x, x + 1/(2c)]|` for `T` a finite union of intervals.
pub fn nyquist_density(set_pieces: &[(f64, f64)], c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c must be > 0, got {c}")));
    }
    let m = MeasureSpec::from_parts(vec![], set_pieces.iter().map(|&(l, r)| (l, r, 1.0)).collect())?;
    let delta = 0.5 / c;
    Ok(2.0 * c * delta * d_mu(&m, delta)?.value)
}

/// `∫|f|^p dμ / ‖f‖_p^p`.
pub fn empirical_embedding_ratio(f: &GridFunction, measure: &MeasureSpec, p: f64) -> Result<f64> {
    if p != f.p() {
        return Err(Error::InvalidParameter(format!(
            "norm certified for p = {}, ratio requested for p = {p}",
            f.p()
        )));
    }
    if !(f.norm_pow() > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let g = f.function();
    let num = measure.integrate(|x| g.value(x).norm().powf(p))?;
    Ok(num / f.norm_pow())
}

/// Smallest `C >= 0` with `ratio <= (1 + Cδ)^p d`.
pub fn empirical_constant(ratio: f64, d: f64, delta: f64, p: f64) -> f64 {
    if ratio <= 0.0 {
        return 0.0;
    }
    if d <= 0.0 {
        return f64::INFINITY;
    }
    (((ratio / d).powf(1.0 / p) - 1.0) / delta).max(0.0)
}

/// One line of a certification report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SieveRow {
    pub delta: f64,
    pub d: f64,
    pub bound: f64,
    pub max_ratio: f64,
}

impl SieveRow {
    /// `bound - max_ratio`; negative means a violation.
    pub fn margin(&self) -> f64 {
        self.bound - self.max_ratio
    }
}

/// CSV with header `delta,D,bound,max_ratio,margin`.
pub fn write_sieve_csv<W: Write>(rows: &[SieveRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "delta,D,bound,max_ratio,margin")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.delta),
            fmt_f64(r.d),
            fmt_f64(r.bound),
            fmt_f64(r.max_ratio),
            fmt_f64(r.margin())
        )?;
    }
    Ok(())
}
