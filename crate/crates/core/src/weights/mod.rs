//! Smooth compactly supported weights with analytic derivatives up to order
//! four, log-scale partitions of unity, and the oscillatory transforms built
//! on them.

mod bessel;
mod quad;

pub use bessel::bessel_j;
pub use quad::{bessel_transform, fourier_weight, gauss_legendre_16};

use crate::error::{Error, Result};

/// Quadrature and truncation knobs shared by the transform and identity
/// machinery.
#[derive(Debug, Clone, Copy)]
pub struct TransformConfig {
    /// Relative tolerance for transform values.
    pub rel_tol: f64,
    /// Hard panel ceiling before reporting non-convergence.
    pub max_panels: u32,
    /// Decay exponent used for truncation-tail envelopes.
    pub truncation_exponent_e: u32,
}

impl TransformConfig {
    pub fn new(rel_tol: f64, max_panels: u32, truncation_exponent_e: u32) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must lie in (0, 1e-2], got {rel_tol}"
            )));
        }
        if max_panels < 16 {
            return Err(Error::InvalidParameter(format!(
                "max_panels must be at least 16, got {max_panels}"
            )));
        }
        Ok(TransformConfig { rel_tol, max_panels, truncation_exponent_e })
    }
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig { rel_tol: 1e-7, max_panels: 1 << 15, truncation_exponent_e: 3 }
    }
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    /// Unit bump `exp(4 - 1/(s(1-s)))`, `s = (x-c1)/(c2-c1)`: the canonical
    /// `exp(-1/(s(1-s)))` normalized to peak 1 and carried to the support by
    /// the affine map, so `sup |d^j/dx^j| = C_j / (c2-c1)^j` with absolute
    /// constants.
    Bump,
    /// Piece `l` of the log-scale partition of unity with ratio
    /// `delta = exp(ln_delta)`: `rho(ln t / ln delta - l)`.
    LogPiece { ln_delta: f64, level: i64 },
}

/// A smooth weight compactly supported in an interval of positive reals, with
/// evaluable derivatives up to order 4.
#[derive(Debug, Clone, Copy)]
pub struct SmoothWeight {
    support: (f64, f64),
    shape: Shape,
    deriv_bound_q: f64,
}

/// smallest exponent argument before `exp` underflow matters; derivatives are
/// set to zero past this point
const EXP_CUTOFF: f64 = 690.0;

impl SmoothWeight {
    /// The canonical bump `exp(-1/((x-c1)(c2-x)))` normalized to peak 1.
    pub fn bump(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 > c1 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::BadInterval(c1, c2));
        }
        Ok(SmoothWeight { support: (c1, c2), shape: Shape::Bump, deriv_bound_q: 1.0 })
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn deriv_bound_q(&self) -> f64 {
        self.deriv_bound_q
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.deriv(x, 0)
    }

    /// `j`-th derivative at `x`, `j <= 4`.
    pub fn deriv(&self, x: f64, j: u32) -> f64 {
        assert!(j <= 4, "derivatives implemented up to order 4");
        let (c1, c2) = self.support;
        if x <= c1 || x >= c2 {
            return 0.0;
        }
        match self.shape {
            Shape::Bump => {
                let len = c2 - c1;
                let s = (x - c1) / len;
                unit_bump_derivs(s)[j as usize] / len.powi(j as i32)
            }
            Shape::LogPiece { ln_delta, level } => {
                log_piece_derivs(x, ln_delta, level)[j as usize]
            }
        }
    }
}

/// Value and first four derivatives of the unit bump on `[0, 1]`.
fn unit_bump_derivs(x: f64) -> [f64; 5] {
    let u = x * (1.0 - x);
    let g = 4.0 - 1.0 / u;
    if g < -EXP_CUTOFF {
        return [0.0; 5];
    }
    let f = g.exp();
    let up = 1.0 - 2.0 * x; // u'
    // derivatives of v = 1/u with u quadratic (u'' = -2, higher zero)
    let iu = 1.0 / u;
    let iu2 = iu * iu;
    let iu3 = iu2 * iu;
    let iu4 = iu3 * iu;
    let iu5 = iu4 * iu;
    let v1 = -up * iu2;
    let v2 = 2.0 * up * up * iu3 + 2.0 * iu2;
    let v3 = -6.0 * up * up * up * iu4 - 12.0 * up * iu3;
    let v4 = 24.0 * up.powi(4) * iu5 + 72.0 * up * up * iu4 + 24.0 * iu3;
    let (g1, g2, g3, g4) = (-v1, -v2, -v3, -v4);
    let d1 = g1 * f;
    let d2 = (g2 + g1 * g1) * f;
    let d3 = (g3 + 3.0 * g1 * g2 + g1.powi(3)) * f;
    let d4 = (g4 + 4.0 * g1 * g3 + 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 + g1.powi(4)) * f;
    [f, d1, d2, d3, d4]
}

/// `sigma(s) = exp(-1/s)` for `s > 0` (zero otherwise) and derivatives.
fn sigma_derivs(s: f64) -> [f64; 5] {
    if s <= 0.0 || 1.0 / s > EXP_CUTOFF {
        return [0.0; 5];
    }
    let e = (-1.0 / s).exp();
    let i = 1.0 / s;
    let i2 = i * i;
    let i3 = i2 * i;
    let i4 = i3 * i;
    let i5 = i4 * i;
    let i6 = i5 * i;
    let i7 = i6 * i;
    let i8 = i7 * i;
    [
        e,
        e * i2,
        e * (i4 - 2.0 * i3),
        e * (i6 - 6.0 * i5 + 6.0 * i4),
        e * (i8 - 12.0 * i7 + 36.0 * i6 - 24.0 * i5),
    ]
}

/// Smoothed step `H(s) = sigma(s) / (sigma(s) + sigma(1-s))`: zero for
/// `s <= 0`, one for `s >= 1`. Derivatives by Leibniz on `H (h + k) = h`.
fn step_derivs(s: f64) -> [f64; 5] {
    if s <= 0.0 {
        return [0.0; 5];
    }
    if s >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0, 0.0];
    }
    let h = sigma_derivs(s);
    let ks = sigma_derivs(1.0 - s);
    // chain through the reflection: k(s) = sigma(1-s)
    let k = [ks[0], -ks[1], ks[2], -ks[3], ks[4]];
    let d: Vec<f64> = (0..5).map(|j| h[j] + k[j]).collect();
    let mut out = [0.0; 5];
    out[0] = h[0] / d[0];
    out[1] = (h[1] - out[0] * d[1]) / d[0];
    out[2] = (h[2] - 2.0 * out[1] * d[1] - out[0] * d[2]) / d[0];
    out[3] = (h[3] - 3.0 * out[2] * d[1] - 3.0 * out[1] * d[2] - out[0] * d[3]) / d[0];
    out[4] = (h[4] - 4.0 * out[3] * d[1] - 6.0 * out[2] * d[2] - 4.0 * out[1] * d[3]
        - out[0] * d[4])
        / d[0];
    out
}

/// `rho(s) = H(s+1) - H(s)`: supported in `(-1, 1)`, and the translates
/// `rho(s - l)` sum to one.
fn rho_derivs(s: f64) -> [f64; 5] {
    let a = step_derivs(s + 1.0);
    let b = step_derivs(s);
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3], a[4] - b[4]]
}

fn log_piece_derivs(t: f64, ln_delta: f64, level: i64) -> [f64; 5] {
    let s = t.ln() / ln_delta - level as f64;
    let r = rho_derivs(s);
    // inner map a(t) = ln t / ln delta - l
    let a1 = 1.0 / (t * ln_delta);
    let a2 = -1.0 / (t * t * ln_delta);
    let a3 = 2.0 / (t * t * t * ln_delta);
    let a4 = -6.0 / (t * t * t * t * ln_delta);
    [
        r[0],
        r[1] * a1,
        r[2] * a1 * a1 + r[1] * a2,
        r[3] * a1.powi(3) + 3.0 * r[2] * a1 * a2 + r[1] * a3,
        r[4] * a1.powi(4) + 6.0 * r[3] * a1 * a1 * a2 + r[2] * (3.0 * a2 * a2 + 4.0 * a1 * a3)
            + r[1] * a4,
    ]
}

/// Log-scale partition of unity: smooth pieces `b_l` supported in
/// `[delta^{l-1}, delta^{l+1}]` with `sum_l b_l(t) = 1` on `[1, t_max]`.
pub fn fouvry_partition(t_max: f64, delta: f64) -> Vec<SmoothWeight> {
    assert!(delta > 1.0, "partition ratio must exceed 1");
    assert!(t_max >= 1.0);
    let ln_delta = delta.ln();
    let l_max = (t_max.ln() / ln_delta).floor() as i64 + 1;
    (0..=l_max)
        .map(|level| {
            let lo = delta.powi((level - 1) as i32);
            let hi = delta.powi((level + 1) as i32);
            SmoothWeight {
                support: (lo, hi),
                shape: Shape::LogPiece { ln_delta, level },
                deriv_bound_q: 1.0 / ln_delta,
            }
        })
        .collect()
}

/// Numerically measured sup of `|w^{(j)}|` over an `n`-point grid.
pub fn measured_sup_deriv(w: &SmoothWeight, j: u32, n: usize) -> f64 {
    let (c1, c2) = w.support();
    (0..=n)
        .map(|i| c1 + (c2 - c1) * i as f64 / n as f64)
        .map(|x| w.deriv(x, j).abs())
        .fold(0.0, f64::max)
}

/// One row of a transform decay profile: `t`, `|transform|`, the reference
/// envelope `scale / (1 + t * scale)^E`, and their ratio.
#[derive(Debug, Clone, Copy)]
pub struct DecayRow {
    pub t: f64,
    pub abs_transform: f64,
    pub envelope: f64,
    pub ratio: f64,
}

pub fn decay_rows_csv(rows: &[DecayRow]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("t,abs_transform,envelope,ratio\n");
    for r in rows {
        writeln!(
            out,
            "{:.14e},{:.14e},{:.14e},{:.14e}",
            r.t, r.abs_transform, r.envelope, r.ratio
        )
        .unwrap();
    }
    out
}
