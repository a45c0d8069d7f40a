//! Reconstruction operators: Shannon, smoothed Paley–Wiener oversampling,
//! the Clark expansion in a model space, and model-space oversampling with
//! a `sinc^m` damping factor. All sums are truncated to a finite window.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clark::SamplingGrid;
use crate::error::{Error, Result};
use crate::inner::InnerFunctionSpec;
use crate::kernel::{pw_oversample_kernel, sinc, SincKernelSpec};
use crate::report::fmt_f64;

/// Samples `f(kπ/b)` for `|k| <= K`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSamples {
    b: f64,
    values: Vec<Complex64>,
}

impl UniformSamples {
    pub fn new(b: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("sampling band b must be > 0, got {b}")));
        }
        if values.len() % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "expected 2K+1 samples for a symmetric window, got {}",
                values.len()
            )));
        }
        Ok(Self { b, values })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(b: f64, half_window: usize, f: F) -> Result<Self> {
        let k = half_window as i64;
        let values = (-k..=k).map(|j| f(j as f64 * PI / b)).collect();
        Self::new(b, values)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn half_window(&self) -> usize {
        self.values.len() / 2
    }

    /// `(x_k, f(x_k))` with `x_k = kπ/b`.
    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        let k0 = self.half_window() as i64;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| ((i as i64 - k0) as f64 * PI / self.b, *v))
    }
}

/// `Σ_{|k|<=K} f(kπ/b) sinc(b(x - kπ/b))`.
pub fn shannon_reconstruct(samples: &UniformSamples, x: f64) -> Complex64 {
    let b = samples.b;
    samples.iter().map(|(xk, v)| v * sinc(b * (x - xk))).sum()
}

/// `Σ_{|k|<=K} f(kπ/b) · ((c+Na)/b) sinc(a(x-kπ/b))^N sinc((c+Na)(x-kπ/b))`
/// with `b = c + 2Na`.
pub fn pw_oversample_reconstruct(samples: &UniformSamples, kernel: &SincKernelSpec, x: f64) -> Result<Complex64> {
    let b = kernel.total_band();
    if ((samples.b - b) / b).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "samples taken at band {} but kernel needs b = c + 2Na = {b}",
            samples.b
        )));
    }
    Ok(samples
        .iter()
        .map(|(xk, v)| v * pw_oversample_kernel(kernel, x - xk))
        .sum())
}

/// Samples `f(x_n)` on a Clark grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    grid: SamplingGrid,
    values: Vec<Complex64>,
}

impl SampleSet {
    pub fn new(grid: SamplingGrid, values: Vec<Complex64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} nodes but {} sample values",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: SamplingGrid, f: F) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Restriction to `|n - n_c| <= half_width`, `n_c` the index nearest
    /// `center`.
    pub fn window(&self, center: f64, half_width: usize) -> SampleSet {
        let (lo, hi) = self.grid.window_range(center, half_width);
        SampleSet {
            grid: self.grid.window(center, half_width),
            values: self.values[lo..hi].to_vec(),
        }
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        self.grid
            .nodes()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.values)
            .map(|((x, w), v)| (*x, *w, *v))
    }
}

/// `k_{x_n}(x) / ‖k_{x_n}‖²` on the real line; 1 at `x = x_n`.
fn kernel_ratio(spec: &InnerFunctionSpec, node: f64, x: f64) -> Complex64 {
    let h = x - node;
    let phi_node = spec.phase_derivative(node);
    if h == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let delta = spec.phase_increment(node, x);
    Complex64::from_polar(delta / h / phi_node * sinc(0.5 * delta), 0.5 * delta)
}

/// `Σ_n f(x_n) k_{x_n}(x) / ‖k_{x_n}‖²`.
pub fn clark_reconstruct(samples: &SampleSet, spec: &InnerFunctionSpec, x: f64) -> Result<Complex64> {
    samples.grid.check_spec(spec)?;
    Ok(samples
        .terms()
        .map(|(xn, _, v)| v * kernel_ratio(spec, xn, x))
        .sum())
}

/// `Σ_n f(x_n) e^{-ic(x-x_n)/2} sinc(c(x-x_n)/(2m))^m k_{x_n}(x) / ‖k_{x_n}‖²`
/// where the kernels and nodes belong to the enlarged function `Θ_c Θ`.
pub fn model_oversample_reconstruct(
    samples: &SampleSet,
    base: &InnerFunctionSpec,
    over_c: f64,
    m: u32,
    x: f64,
) -> Result<Complex64> {
    if !(over_c > 0.0 && over_c.is_finite()) {
        return Err(Error::InvalidParameter(format!("over_c must be > 0, got {over_c}")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("oversampling order m must be >= 1".into()));
    }
    let enlarged = base.enlarge(over_c, &[])?;
    samples.grid.check_spec(&enlarged)?;
    let mf = m as f64;
    Ok(samples
        .terms()
        .map(|(xn, _, v)| {
            let d = x - xn;
            let damping = Complex64::from_polar(sinc(over_c * d / (2.0 * mf)).powi(m as i32), -0.5 * over_c * d);
            v * damping * kernel_ratio(&enlarged, xn, x)
        })
        .sum())
}

/// `sqrt(Σ_n |f(x_n)|² / ‖k_{x_n}‖²)` over the available window.
pub fn plancherel_norm(samples: &SampleSet) -> Result<f64> {
    if samples.values.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    Ok(samples
        .terms()
        .map(|(_, w, v)| v.norm_sqr() / w)
        .sum::<f64>()
        .sqrt())
}

/// Which formula a plan uses, with its method-specific parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Shannon,
    PwOversample { kernel: SincKernelSpec },
    Clark,
    ModelOversample { m: u32, over_c: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Shannon => "shannon",
            Method::PwOversample { .. } => "pw_oversample",
            Method::Clark => "clark",
            Method::ModelOversample { .. } => "model_oversample",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionPlan {
    #[serde(flatten)]
    pub method: Method,
    /// Half-width `K` of the index window.
    pub window: usize,
}

impl ReconstructionPlan {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidParameter("window K must be >= 1".into()));
        }
        if let Method::ModelOversample { m, over_c } = self.method {
            if m == 0 || !(over_c > 0.0 && over_c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "model_oversample needs m >= 1 and over_c > 0, got m = {m}, over_c = {over_c}"
                )));
            }
        }
        Ok(())
    }
}

/// Truncation error of one window size over an evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub window: usize,
    pub sup_error: f64,
    /// `sqrt(mean |e|² · L)` over the evaluation interval of length `L`,
    /// a discrete L² error.
    pub l2_error: f64,
}

impl DecayRow {
    pub fn from_errors(window: usize, errors: &[f64], interval_len: f64) -> Self {
        let sup_error = errors.iter().copied().fold(0.0, f64::max);
        let mean_sq = errors.iter().map(|e| e * e).sum::<f64>() / errors.len().max(1) as f64;
        Self {
            window,
            sup_error,
            l2_error: (mean_sq * interval_len).sqrt(),
        }
    }
}

/// CSV with header `K,sup_error,l2_error`.
pub fn write_decay_csv<W: Write>(rows: &[DecayRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "K,sup_error,l2_error")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.window, fmt_f64(r.sup_error), fmt_f64(r.l2_error))?;
    }
    Ok(())
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}
