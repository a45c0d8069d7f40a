//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature on finite intervals.
//!
//! The integrator keeps a heap of segments keyed by their error estimate
//! and bisects the worst one until the summed estimate meets
//! `max(abs_tol, rel_tol * |I|)`. Initial breakpoints let callers hand in
//! a partition matched to the integrand's oscillation scale.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1); the last entry is the centre.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_174_047_561,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd-indexed Kronrod abscissae.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Values the integrator can accumulate: reals and complex numbers.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_segments: 2_000_000,
        }
    }
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    /// Summed Gauss–Kronrod error estimate.
    pub error: f64,
    pub evaluations: usize,
    pub segments: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T> Eq for Segment<T> {}

impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One 21-point Kronrod evaluation with its embedded 10-point Gauss
/// estimate. Returns `(kronrod, error_estimate)`.
pub fn gauss_kronrod21<T, F>(f: &F, a: f64, b: f64) -> (T, f64)
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_centre = f(centre);
    let mut kronrod = f_centre * WGK[10];
    let mut gauss = T::default();
    let mut res_abs = f_centre.magnitude() * WGK[10];
    let mut values = [(T::default(), T::default()); 10];
    for (j, slot) in values.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let lo = f(centre - dx);
        let hi = f(centre + dx);
        kronrod = kronrod + (lo + hi) * WGK[j];
        res_abs += WGK[j] * (lo.magnitude() + hi.magnitude());
        if j % 2 == 1 {
            gauss = gauss + (lo + hi) * WG[j / 2];
        }
        *slot = (lo, hi);
    }
    let mean = kronrod * 0.5;
    let mut res_asc = WGK[10] * (f_centre - mean).magnitude();
    for (j, (lo, hi)) in values.iter().enumerate() {
        res_asc += WGK[j] * ((*lo - mean).magnitude() + (*hi - mean).magnitude());
    }
    let scale = half.abs();
    let err = rescale_error(
        ((kronrod - gauss) * half).magnitude(),
        res_abs * scale,
        res_asc * scale,
    );
    (kronrod * half, err)
}

/// Integrates `f` over `[breakpoints[0], breakpoints[last]]`, using the
/// interior breakpoints as the initial partition.
pub fn integrate<T, F>(f: F, breakpoints: &[f64], opts: &QuadOptions) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if breakpoints.len() < 2 {
        return Err(Error::Quadrature("need at least two breakpoints".into()));
    }
    if breakpoints.iter().any(|x| !x.is_finite()) {
        return Err(Error::Quadrature("breakpoints must be finite".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut settled: Vec<Segment<T>> = Vec::new();
    let mut evaluations = 0usize;
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b < a {
            return Err(Error::Quadrature(format!(
                "breakpoints not sorted: {a} > {b}"
            )));
        }
        if b == a {
            continue;
        }
        let (value, error) = gauss_kronrod21(&f, a, b);
        evaluations += 21;
        heap.push(Segment { a, b, value, error });
    }
    if heap.is_empty() {
        return Ok(QuadResult {
            value: T::default(),
            error: 0.0,
            evaluations,
            segments: 0,
        });
    }

    let mut total = heap.iter().fold(T::default(), |acc, s| acc + s.value);
    let mut total_err: f64 = heap.iter().map(|s| s.error).sum();
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if total_err <= target {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; keep what we have.
            settled.push(worst);
            continue;
        }
        if heap.len() + settled.len() + 2 > opts.max_segments {
            return Err(Error::Quadrature(format!(
                "segment limit {} reached with error estimate {:e}",
                opts.max_segments, total_err
            )));
        }
        let (v1, e1) = gauss_kronrod21(&f, worst.a, mid);
        let (v2, e2) = gauss_kronrod21(&f, mid, worst.b);
        evaluations += 42;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }

    // Re-sum from scratch to shed the drift of the incremental updates.
    let segments = heap.len() + settled.len();
    let all = heap.into_iter().chain(settled);
    let (value, error) = all.fold((T::default(), 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(QuadResult {
        value,
        error,
        evaluations,
        segments,
    })
}

/// Breakpoints `a = t_0 < ... < t_k = b` with spacing at most `width`.
pub fn uniform_breakpoints(a: f64, b: f64, width: f64) -> Vec<f64> {
    let n = (((b - a) / width).ceil() as usize).max(1);
    (0..=n)
        .map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 })
        .collect()
}

/// Symmetric partition of `[-radius, radius]`: uniform cells of `width`
/// on `[-core, core]`, then cells growing geometrically by `growth`.
pub fn graded_breakpoints(core: f64, radius: f64, width: f64, growth: f64) -> Vec<f64> {
    let core = core.min(radius);
    let mut right = uniform_breakpoints(0.0, core, width);
    let mut x = core;
    let mut step = width;
    while x < radius {
        step = (step * growth).max(width);
        x = (x + step).min(radius);
        right.push(x);
    }
    let mut out: Vec<f64> = right.iter().skip(1).rev().map(|x| -x).collect();
    out.extend(right);
    out
}
