//! Meromorphic inner functions `Θ(z) = e^{iτ} e^{icz} Π ((z-λ)/(z-λ̄))^m`
//! with a finite zero set in the upper half-plane.
//!
//! On the real line `Θ(x) = exp(iφ(x))` with an increasing phase
//!
//! ```text
//! φ(x) = τ + c x - 2 Σ m_λ atan2(Im λ, x - Re λ)
//! φ'(x) = c + 2 Σ m_λ Im λ / ((x - Re λ)^2 + (Im λ)^2)
//! ```
//!
//! Each Blaschke factor's branch tends to 0 at `+∞` and to `-2π m_λ` at `-∞`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A zero `λ = re + i·im` of the Blaschke factor, `im > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawZero", into = "RawZero")]
pub struct BlaschkeZero {
    re: f64,
    im: f64,
    mult: u32,
}

#[derive(Serialize, Deserialize)]
struct RawZero {
    re: f64,
    im: f64,
    #[serde(default = "one")]
    mult: u32,
}

fn one() -> u32 {
    1
}

impl TryFrom<RawZero> for BlaschkeZero {
    type Error = Error;

    fn try_from(raw: RawZero) -> Result<Self> {
        BlaschkeZero::new(raw.re, raw.im, raw.mult)
    }
}

impl From<BlaschkeZero> for RawZero {
    fn from(z: BlaschkeZero) -> Self {
        RawZero {
            re: z.re,
            im: z.im,
            mult: z.mult,
        }
    }
}

impl BlaschkeZero {
    pub fn new(re: f64, im: f64, mult: u32) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::InvalidZero(format!("non-finite zero {re} + {im}i")));
        }
        if im <= 0.0 {
            return Err(Error::InvalidZero(format!(
                "zero {re} + {im}i is not in the open upper half-plane"
            )));
        }
        if mult == 0 {
            return Err(Error::InvalidZero("multiplicity must be at least 1".into()));
        }
        Ok(Self { re, im, mult })
    }

    /// Simple zero at `re + i·im`.
    pub fn simple(re: f64, im: f64) -> Result<Self> {
        Self::new(re, im, 1)
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn multiplicity(&self) -> u32 {
        self.mult
    }

    pub fn point(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn same_point(&self, other: &Self) -> bool {
        self.re == other.re && self.im == other.im
    }

    /// This factor's contribution to `φ'(x)`.
    fn phase_slope(&self, x: f64) -> f64 {
        let d = x - self.re;
        2.0 * self.mult as f64 * self.im / (d * d + self.im * self.im)
    }
}

/// Continuous phase `φ(x)` and its derivative `φ'(x) = |Θ'(x)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseValue {
    pub value: f64,
    pub derivative: f64,
}

/// `Θ = e^{iτ} Θ_c B_Λ` with finitely many zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct InnerFunctionSpec {
    tau: f64,
    c: f64,
    zeros: Vec<BlaschkeZero>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    tau: f64,
    #[serde(default)]
    c: f64,
    #[serde(default)]
    zeros: Vec<BlaschkeZero>,
}

impl TryFrom<RawSpec> for InnerFunctionSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        InnerFunctionSpec::new(raw.tau, raw.c, raw.zeros)
    }
}

impl From<InnerFunctionSpec> for RawSpec {
    fn from(s: InnerFunctionSpec) -> Self {
        RawSpec {
            tau: s.tau,
            c: s.c,
            zeros: s.zeros,
        }
    }
}

impl InnerFunctionSpec {
    /// Builds a spec; repeated zeros are merged by adding multiplicities.
    pub fn new(tau: f64, c: f64, zeros: Vec<BlaschkeZero>) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::InvalidSpec(format!("tau must be finite, got {tau}")));
        }
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "exponential type c must be finite and >= 0, got {c}"
            )));
        }
        let mut merged: Vec<BlaschkeZero> = Vec::with_capacity(zeros.len());
        for z in zeros {
            match merged.iter_mut().find(|m| m.same_point(&z)) {
                Some(m) => m.mult += z.mult,
                None => merged.push(z),
            }
        }
        Ok(Self {
            tau,
            c,
            zeros: merged,
        })
    }

    /// `e^{icz}`.
    pub fn exponential(c: f64) -> Result<Self> {
        Self::new(0.0, c, Vec::new())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn zeros(&self) -> &[BlaschkeZero] {
        &self.zeros
    }

    /// `Σ m_λ`; the Blaschke phase spans `(-2π·total, 0)`.
    pub fn total_multiplicity(&self) -> u32 {
        self.zeros.iter().map(|z| z.mult).sum()
    }

    /// `Θ` is a unimodular constant and its model space is `{0}`.
    pub fn is_constant(&self) -> bool {
        self.c == 0.0 && self.zeros.is_empty()
    }

    /// `Θ(z)` for `Im z >= 0`.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        let i = Complex64::i();
        let mut out = (i * (self.tau + self.c * z)).exp();
        for zero in &self.zeros {
            let lam = zero.point();
            let factor = (z - lam) / (z - lam.conj());
            out *= factor.powu(zero.mult);
        }
        out
    }

    /// Boundary value `Θ(x) = exp(iφ(x))`, computed from the phase.
    pub fn evaluate_real(&self, x: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.phase_value(x))
    }

    pub fn phase(&self, x: f64) -> PhaseValue {
        PhaseValue {
            value: self.phase_value(x),
            derivative: self.phase_derivative(x),
        }
    }

    pub fn phase_value(&self, x: f64) -> f64 {
        let blaschke: f64 = self
            .zeros
            .iter()
            .map(|z| -2.0 * z.mult as f64 * z.im.atan2(x - z.re))
            .sum();
        self.tau + self.c * x + blaschke
    }

    /// `φ'(x)`, also `|Θ'(x)|`.
    pub fn phase_derivative(&self, x: f64) -> f64 {
        self.c + self.zeros.iter().map(|z| z.phase_slope(x)).sum::<f64>()
    }

    /// `φ(y) - φ(x)` without cancellation when `y` is close to `x`.
    ///
    /// Uses `atan2(v, s) - atan2(v, t) = atan2(v (t - s), s t + v²)`, exact
    /// for `v > 0` since both angles lie in `(0, π)`.
    pub fn phase_increment(&self, x: f64, y: f64) -> f64 {
        let h = y - x;
        let blaschke: f64 = self
            .zeros
            .iter()
            .map(|z| {
                let s = x - z.re;
                let t = y - z.re;
                2.0 * z.mult as f64 * (z.im * h).atan2(s * t + z.im * z.im)
            })
            .sum();
        self.c * h + blaschke
    }

    /// `φ'` of the Blaschke part alone and its derivative.
    fn blaschke_slope_and_curvature(&self, x: f64) -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        for z in &self.zeros {
            let d = x - z.re;
            let q = d * d + z.im * z.im;
            let m = z.mult as f64;
            g += 2.0 * m * z.im / q;
            dg -= 4.0 * m * z.im * d / (q * q);
        }
        (g, dg)
    }

    /// `‖Θ'‖_∞ = sup_x φ'(x)`.
    ///
    /// Critical points of the Blaschke slope are bracketed on a grid of
    /// width `min Im λ / 4` covering `[min Re λ - 10 max Im λ, max Re λ + 10 max Im λ]`
    /// and refined by bisection; the tail limit is `c`.
    pub fn derivative_sup_norm(&self) -> f64 {
        if self.zeros.is_empty() {
            return self.c;
        }
        let min_v = self.zeros.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
        let max_v = self.zeros.iter().map(|z| z.im).fold(0.0, f64::max);
        let min_u = self.zeros.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let max_u = self.zeros.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let lo = min_u - 10.0 * max_v;
        let hi = max_u + 10.0 * max_v;
        let step = min_v / 4.0;
        let n = ((hi - lo) / step).ceil() as usize;

        let slope = |x: f64| self.blaschke_slope_and_curvature(x).0;
        let curvature = |x: f64| self.blaschke_slope_and_curvature(x).1;

        let mut best = 0.0f64;
        let mut prev_x = lo;
        let mut prev_d = curvature(lo);
        best = best.max(slope(lo));
        for k in 1..=n {
            let x = if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 };
            let d = curvature(x);
            best = best.max(slope(x));
            if prev_d > 0.0 && d <= 0.0 {
                let (mut a, mut b) = (prev_x, x);
                while b - a > 1e-12 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if curvature(m) > 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                best = best.max(slope(a)).max(slope(b));
            }
            prev_x = x;
            prev_d = d;
        }
        self.c + best
    }

    /// Spec of `Θ_{extra_c} B_{extra} Θ`; its model space contains this one.
    pub fn enlarge(&self, extra_c: f64, extra_zeros: &[BlaschkeZero]) -> Result<Self> {
        if !extra_c.is_finite() || extra_c < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "enlargement exponent must be >= 0, got {extra_c}"
            )));
        }
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(extra_zeros);
        Self::new(self.tau, self.c + extra_c, zeros)
    }
}

/// `2π`, used for phase bookkeeping.
pub const TWO_PI: f64 = 2.0 * PI;
