//! Oscillatory quadrature for the continuous Fourier transform and the
//! weight-k Bessel transform of a smooth compactly supported weight.
//!
//! Strategy: Gauss-Legendre panels no wider than a quarter oscillation
//! period, doubled until two successive refinements agree to the requested
//! tolerance. The Bessel transform first substitutes `u = sqrt(t)`, turning
//! the chirp `J_{k-1}(4 pi sqrt(x t))` into a fixed-frequency oscillation.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;

use super::bessel::bessel_j;
use super::{SmoothWeight, TransformConfig};
use crate::error::{Error, Result};

/// 16-point Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton
/// iteration on the Legendre polynomial.
pub fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static CACHE: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    CACHE.get_or_init(|| {
        let n = 16usize;
        let mut nodes = [0.0f64; 16];
        let mut weights = [0.0f64; 16];
        for i in 0..n {
            // Chebyshev initial guess
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                // Legendre recurrence for P_n and P_n'
                let (mut p0, mut p1) = (1.0f64, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// Integrates a complex integrand over `[a, b]` with `panels` Gauss-Legendre
/// panels of order 16.
fn panel_integrate<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, panels: u32) -> Complex64 {
    let (nodes, weights) = gauss_legendre_16();
    let h = (b - a) / panels as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + h / 2.0;
        let half = h / 2.0;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..16 {
            acc += f(mid + half * nodes[i]) * weights[i];
        }
        let v = acc * half;
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Doubles the panel count until two refinements agree within
/// `rel_tol * max(|value|, floor)`.
fn refine<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    mut panels: u32,
    abs_floor: f64,
    cfg: &TransformConfig,
) -> Result<Complex64> {
    let mut prev = panel_integrate(f, a, b, panels);
    loop {
        let next_panels = panels.saturating_mul(2);
        if next_panels > cfg.max_panels {
            return Err(Error::QuadratureNotConverged {
                rel_tol: cfg.rel_tol,
                max_panels: cfg.max_panels,
            });
        }
        let cur = panel_integrate(f, a, b, next_panels);
        let scale = cur.norm().max(abs_floor);
        if (cur - prev).norm() <= cfg.rel_tol * scale {
            return Ok(cur);
        }
        prev = cur;
        panels = next_panels;
    }
}

/// Continuous Fourier transform `What(t) = int W(x) e(-x t) dx` over the
/// support of `W`; panels span at most a quarter oscillation period.
pub fn fourier_weight(w: &SmoothWeight, t: f64, cfg: &TransformConfig) -> Result<Complex64> {
    let (c1, c2) = w.support();
    let len = c2 - c1;
    let f = move |x: f64| {
        let (s, c) = (TAU * x * t).sin_cos();
        Complex64::new(c, -s) * w.eval(x)
    };
    let min_panels = ((len * 4.0 * t.abs()).ceil() as u32).clamp(4, cfg.max_panels / 2);
    let abs_floor = 1e-3 * len;
    refine(&f, c1, c2, min_panels, abs_floor, cfg)
}

/// Weight-`k` Bessel transform
/// `Vcheck(x) = 2 pi i^k int V(t) J_{k-1}(4 pi sqrt(x t)) dt`.
pub fn bessel_transform(
    v: &SmoothWeight,
    x: f64,
    k: u32,
    cfg: &TransformConfig,
) -> Result<Complex64> {
    assert!(x >= 0.0, "Bessel transform argument must be nonnegative");
    assert!(k >= 1, "weight must be positive");
    let i_pow_k = Complex64::i().powu(k % 4);
    if x == 0.0 {
        if k >= 2 {
            // J_{k-1}(0) = 0
            return Ok(Complex64::new(0.0, 0.0));
        }
        // k = 1: J_0(0) = 1, the transform degenerates to 2 pi i int V
        let (c1, c2) = v.support();
        let f = move |t: f64| Complex64::new(v.eval(t), 0.0);
        let val = refine(&f, c1, c2, 4, 1e-3 * (c2 - c1), cfg)?;
        return Ok(val * 2.0 * PI * i_pow_k);
    }
    let (c1, c2) = v.support();
    let (u1, u2) = (c1.sqrt(), c2.sqrt());
    let omega = 4.0 * PI * x.sqrt();
    let f = move |u: f64| Complex64::new(2.0 * u * v.eval(u * u) * bessel_j(k - 1, omega * u), 0.0);
    // quarter period of cos(omega u - phase) has width pi / (2 omega)
    let min_panels = (((u2 - u1) * 2.0 * omega / PI).ceil() as u32).clamp(8, cfg.max_panels / 2);
    let abs_floor = 1e-3 * (c2 - c1);
    let val = refine(&f, u1, u2, min_panels, abs_floor, cfg)?;
    Ok(val * 2.0 * PI * i_pow_k)
}
