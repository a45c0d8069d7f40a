//! Reproducing kernels of model spaces and the sinc-family kernels used
//! by the oversampling formulas.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::InnerFunctionSpec;
use crate::quadrature::{integrate, uniform_breakpoints, QuadOptions};

/// `sin t / t`, with the removable singularity handled by a Taylor
/// polynomial for `|t| < 1e-4`.
pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// `min(1, 1/|x|)`, the envelope every admissible `Ξ` stays under.
pub fn xi_envelope(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        1.0
    } else {
        1.0 / x.abs()
    }
}

/// `k_z(w) = (i/2π)(1 - conj(Θ(z)) Θ(w)) / (w - z̄)` for `Im z, Im w >= 0`.
///
/// Two distinct real arguments go through [`boundary_kernel`]; the same
/// real point twice is rejected (see [`kernel_norm_sq`]).
pub fn reproducing_kernel(spec: &InnerFunctionSpec, z: Complex64, w: Complex64) -> Result<Complex64> {
    if z.im < 0.0 || w.im < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kernel arguments must lie in the closed upper half-plane, got {z} and {w}"
        )));
    }
    if z.im == 0.0 && w.im == 0.0 {
        if z.re == w.re {
            return Err(Error::DegenerateDiagonal(z.re));
        }
        return Ok(boundary_kernel(spec, z.re, w.re));
    }
    if z == w {
        let t = spec.evaluate(z).norm_sqr();
        return Ok(Complex64::new((1.0 - t) / (4.0 * PI * z.im), 0.0));
    }
    let num = 1.0 - spec.evaluate(z).conj() * spec.evaluate(w);
    Ok(Complex64::i() / (2.0 * PI) * num / (w - z.conj()))
}

/// `k_x(t)` for real `x, t`, written through the phase increment
/// `Δ = φ(t) - φ(x)`:
///
/// ```text
/// k_x(t) = (Δ / (t - x)) / (2π) · sinc(Δ/2) · e^{iΔ/2}
/// ```
///
/// which is free of cancellation near the diagonal and equals
/// `φ'(x)/(2π)` at `t = x`.
pub fn boundary_kernel(spec: &InnerFunctionSpec, x: f64, t: f64) -> Complex64 {
    let h = t - x;
    let (delta, slope) = if h == 0.0 {
        (0.0, spec.phase_derivative(x))
    } else {
        let d = spec.phase_increment(x, t);
        (d, d / h)
    };
    Complex64::from_polar(slope / (2.0 * PI) * sinc(0.5 * delta), 0.5 * delta)
}

/// `‖k_x‖² = φ'(x) / (2π)`.
pub fn kernel_norm_sq(spec: &InnerFunctionSpec, x: f64) -> f64 {
    spec.phase_derivative(x) / (2.0 * PI)
}

/// Smoothing parameters of the polynomially decaying Paley–Wiener kernel:
/// `order` box convolutions of half-width `half_width` around the band
/// `[-band, band]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSincKernel", into = "RawSincKernel")]
pub struct SincKernelSpec {
    order: u32,
    half_width: f64,
    band: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSincKernel {
    #[serde(rename = "N")]
    order: u32,
    a: f64,
    c: f64,
}

impl TryFrom<RawSincKernel> for SincKernelSpec {
    type Error = Error;

    fn try_from(r: RawSincKernel) -> Result<Self> {
        SincKernelSpec::new(r.order, r.a, r.c)
    }
}

impl From<SincKernelSpec> for RawSincKernel {
    fn from(k: SincKernelSpec) -> Self {
        RawSincKernel {
            order: k.order,
            a: k.half_width,
            c: k.band,
        }
    }
}

impl SincKernelSpec {
    pub fn new(order: u32, half_width: f64, band: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothing half-width must be > 0, got {half_width}"
            )));
        }
        if !(band > 0.0 && band.is_finite()) {
            return Err(Error::InvalidParameter(format!("band must be > 0, got {band}")));
        }
        Ok(Self {
            order,
            half_width,
            band,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    /// `b = c + 2Na`, the support of the smoothed window.
    pub fn total_band(&self) -> f64 {
        self.band + 2.0 * self.order as f64 * self.half_width
    }

    /// `c + Na`, the frequency of the carrier sinc.
    pub fn carrier(&self) -> f64 {
        self.band + self.order as f64 * self.half_width
    }
}

/// Per-sample kernel `(1/2b) γ̂(t) = ((c+Na)/b) sinc(at)^N sinc((c+Na)t)`.
pub fn pw_oversample_kernel(k: &SincKernelSpec, t: f64) -> f64 {
    let carrier = k.carrier();
    carrier / k.total_band() * sinc(k.half_width * t).powi(k.order as i32) * sinc(carrier * t)
}

/// Omitted-tail budget for the sinc product integrals, both ends together.
const XI_TAIL: f64 = 1e-10;

/// `∫ sinc(x-a)^{2m} sinc(x-b)^{2m} dx` over ℝ.
///
/// Quadrature runs on `[min(a,b) - R, max(a,b) + R]` where `R` makes the
/// analytic tail `2 / ((4m-1) R^{4m-1})` (both ends) smaller than `1e-10`.
pub fn xi_power_product_integral(m: u32, a: f64, b: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("power m must be >= 1".into()));
    }
    let q = 4.0 * m as f64 - 1.0;
    let radius = (2.0 / (q * XI_TAIL)).powf(1.0 / q).max(10.0);
    let lo = a.min(b) - radius;
    let hi = a.max(b) + radius;
    let two_m = 2 * m as i32;
    let f = |x: f64| sinc(x - a).powi(two_m) * sinc(x - b).powi(two_m);
    let bp = uniform_breakpoints(lo, hi, 2.0);
    let r = integrate(f, &bp, &QuadOptions::new(1e-11, 1e-13))?;
    Ok(r.value)
}

/// `∫ sinc(x-a)² sinc(x-b)² dx`.
pub fn xi_product_integral(a: f64, b: f64) -> Result<f64> {
    xi_power_product_integral(1, a, b)
}

/// `8π / (4 + (a-b)²)`.
pub fn xi_pair_bound(a: f64, b: f64) -> f64 {
    8.0 * PI / (4.0 + (a - b).powi(2))
}

/// `max(4, 1 + 9δ²)`.
pub fn window_constant(delta: f64) -> f64 {
    4.0f64.max(1.0 + 9.0 * delta * delta)
}

/// Measure form of the pair bound:
/// `8π C_δ² / δ · M / (4 + (b-a)²)` with `M = sup_x μ([x, x+δ])`.
pub fn xi_measure_bound(a: f64, b: f64, delta: f64, window_mass: f64) -> f64 {
    let cd = window_constant(delta);
    8.0 * PI * cd * cd / delta * window_mass / (4.0 + (b - a).powi(2))
}

/// `√π 2^{2m+1} Γ(m - 1/2) / Γ(m)` reduced to a multiple of π:
/// 16π for `m = 2` and 48π for `m = 3`.
pub fn higher_power_constant(m: u32) -> Result<f64> {
    match m {
        2 => Ok(16.0 * PI),
        3 => Ok(48.0 * PI),
        _ => Err(Error::InvalidParameter(format!(
            "higher-power constant tabulated for m in {{2, 3}} only, got {m}"
        ))),
    }
}

/// `C_m / (1 + (b-a)²)^m`.
pub fn higher_power_bound(m: u32, a: f64, b: f64) -> Result<f64> {
    Ok(higher_power_constant(m)? / (1.0 + (b - a).powi(2)).powi(m as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::BlaschkeZero;
    use proptest::prelude::*;

    fn one_zero() -> InnerFunctionSpec {
        InnerFunctionSpec::new(0.0, 0.0, vec![BlaschkeZero::simple(0.0, 1.0).unwrap()]).unwrap()
    }

    fn mixed() -> InnerFunctionSpec {
        InnerFunctionSpec::new(
            0.4,
            1.0,
            vec![
                BlaschkeZero::simple(0.0, 1.0).unwrap(),
                BlaschkeZero::simple(2.0, 0.5).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn sinc_examples() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
        assert!((sinc(PI / 2.0) - 2.0 / PI).abs() < 1e-16);
        // Taylor branch joins the direct formula
        let t = 0.99e-4;
        assert!((sinc(t) - t.sin() / t).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn sinc_stays_under_envelope() {
        for k in -200_000..=200_000 {
            let x = k as f64 * 1e-3;
            assert!(sinc(x).abs() <= xi_envelope(x) + 1e-16, "x = {x}");
        }
    }

    #[test]
    fn kernel_examples() {
        let trivial = InnerFunctionSpec::new(0.0, 0.0, vec![]).unwrap();
        let v = reproducing_kernel(&trivial, Complex64::new(0.3, 1.0), Complex64::new(-1.0, 0.5)).unwrap();
        assert!(v.norm() < 1e-16);

        let b = one_zero();
        let d = reproducing_kernel(&b, Complex64::i(), Complex64::i()).unwrap();
        assert!((d.re - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(d.im, 0.0);

        let real = Complex64::new(0.5, 0.0);
        assert_eq!(
            reproducing_kernel(&b, real, real),
            Err(Error::DegenerateDiagonal(0.5))
        );
        assert!(reproducing_kernel(&b, Complex64::new(0.0, -1.0), real).is_err());
    }

    #[test]
    fn norm_examples() {
        let e = InnerFunctionSpec::exponential(2.0 * PI).unwrap();
        assert!((kernel_norm_sq(&e, 12.3) - 1.0).abs() < 1e-15);

        let b = one_zero();
        assert!((kernel_norm_sq(&b, 0.0) - 1.0 / PI).abs() < 1e-15);
        // limit of the diagonal formula from inside the half-plane
        for eps in [1e-3, 1e-4, 1e-5] {
            let z = Complex64::new(0.0, eps);
            let k = reproducing_kernel(&b, z, z).unwrap().re;
            assert!((k - 1.0 / PI).abs() < 2.0 * eps, "eps = {eps}: {k}");
        }

        let pw = InnerFunctionSpec::exponential(2.0 * 1.5).unwrap();
        assert!((kernel_norm_sq(&pw, -4.0) - 1.5 / PI).abs() < 1e-15);
    }

    #[test]
    fn boundary_kernel_agrees_with_direct_formula() {
        let s = mixed();
        for (x, t) in [(0.0, 1.0), (-3.0, 2.5), (0.7, 0.7001), (10.0, -4.0)] {
            let th_x = s.evaluate(Complex64::new(x, 0.0));
            let th_t = s.evaluate(Complex64::new(t, 0.0));
            let direct = Complex64::i() / (2.0 * PI) * (1.0 - th_x.conj() * th_t) / (t - x);
            let k = boundary_kernel(&s, x, t);
            assert!((k - direct).norm() < 1e-10 * direct.norm().max(1e-3), "{x} {t}");
        }
        assert!((boundary_kernel(&s, 0.3, 0.3).re - kernel_norm_sq(&s, 0.3)).abs() < 1e-16);
        // continuity across the diagonal
        let near = boundary_kernel(&s, 0.3, 0.3 + 1e-12);
        assert!((near - kernel_norm_sq(&s, 0.3)).norm() < 1e-11);
    }

    #[test]
    fn pw_kernel_examples() {
        let shannon = SincKernelSpec::new(0, 0.7, 1.3).unwrap();
        assert_eq!(shannon.total_band(), 1.3);
        for t in [-2.0, 0.0, 0.4, 11.0] {
            assert!((pw_oversample_kernel(&shannon, t) - sinc(1.3 * t)).abs() < 1e-16);
        }

        let k = SincKernelSpec::new(2, 1.0, 2.0).unwrap();
        assert!((pw_oversample_kernel(&k, 0.0) - 2.0 / 3.0).abs() < 1e-16);
        let bound = (4.0 / 6.0) / (1.0 * 4.0) * 10f64.powi(-3);
        assert!(pw_oversample_kernel(&k, 10.0).abs() <= bound);
        for t in [13.7, 50.2, 201.0] {
            assert!(pw_oversample_kernel(&k, t).abs() <= (4.0 / 6.0) / 4.0 * t.powi(-3));
        }

        assert!(SincKernelSpec::new(1, 0.0, 1.0).is_err());
        assert!(SincKernelSpec::new(1, 1.0, -1.0).is_err());
    }

    /// Composite Simpson on [-R, R] with two step sizes, Richardson
    /// combined, plus the analytic tail of sinc^4.
    fn sinc4_simpson_oracle() -> f64 {
        fn simpson(n: usize, r: f64) -> f64 {
            let h = 2.0 * r / n as f64;
            let f = |x: f64| sinc(x).powi(4);
            let mut s = f(-r) + f(r);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(-r + i as f64 * h);
            }
            s * h / 3.0
        }
        let r = 3000.0 * PI;
        let coarse = simpson(1_200_000, r);
        let fine = simpson(2_400_000, r);
        // mean of sin^4 is 3/8; tail ∫_R^∞ (3/8) x^-4 dx on both ends
        let tail = 2.0 * 0.375 / (3.0 * r.powi(3));
        fine + (fine - coarse) / 15.0 + tail
    }

    #[test]
    fn xi_integral_at_coincident_points() {
        let oracle = sinc4_simpson_oracle();
        assert!((oracle - 2.0 * PI / 3.0).abs() < 1e-9);
        let v = xi_product_integral(0.0, 0.0).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
        assert!(v <= xi_pair_bound(0.0, 0.0));
        // translation invariance
        let shifted = xi_product_integral(3.25, 3.25).unwrap();
        assert!((shifted - v).abs() < 1e-9);
    }

    #[test]
    fn xi_integral_far_apart() {
        let v = xi_product_integral(0.0, 20.0).unwrap();
        assert!(v > 0.0 && v <= xi_pair_bound(0.0, 20.0));
    }

    #[test]
    fn measure_bound_constant() {
        assert_eq!(window_constant(0.5), 4.0);
        assert_eq!(window_constant(1.0), 10.0);
        let b = xi_measure_bound(0.0, 0.0, 1.0, 1.0);
        assert!((b - 8.0 * PI * 100.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn higher_power_constants_match_gamma_expression() {
        // Γ(3/2) = √π/2, Γ(2) = 1, Γ(5/2) = 3√π/4, Γ(3) = 2
        let sp = PI.sqrt();
        let c2 = sp * 32.0 * (sp / 2.0) / 1.0;
        let c3 = sp * 128.0 * (3.0 * sp / 4.0) / 2.0;
        assert!((higher_power_constant(2).unwrap() - c2).abs() < 1e-12);
        assert!((higher_power_constant(3).unwrap() - c3).abs() < 1e-12);
        assert!(higher_power_constant(4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hermitian_symmetry(x1 in -5.0..5.0f64, y1 in 0.0..3.0f64, x2 in -5.0..5.0f64, y2 in 0.0..3.0f64) {
            let s = mixed();
            let z = Complex64::new(x1, y1);
            let w = Complex64::new(x2, y2);
            prop_assume!(!(y1 == 0.0 && y2 == 0.0 && x1 == x2));
            let a = reproducing_kernel(&s, z, w).unwrap();
            let b = reproducing_kernel(&s, w, z).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-12 * (1.0 + a.norm()));
        }

        #[test]
        fn pointwise_bound_on_the_line(x in -30.0..30.0f64, t in -30.0..30.0f64) {
            let s = mixed();
            let k = boundary_kernel(&s, x, t).norm();
            let bound = (s.phase_derivative(x) * s.phase_derivative(t)).sqrt() / (2.0 * PI);
            prop_assert!(k <= bound + 1e-12);
            // global form with the sup norm
            let global = (s.derivative_sup_norm() / (2.0 * PI)).sqrt();
            prop_assert!(k / kernel_norm_sq(&s, x).sqrt() <= global + 1e-12);
        }
    }
}
