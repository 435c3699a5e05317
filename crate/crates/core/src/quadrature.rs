//! Composite Gauss-Legendre helpers shared by the geometry, fourier and
//! integrate modules.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) const GL_POINTS: usize = 20;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(GL_POINTS)
            .expect("degree >= 2")
            .into_node_weight_pairs()
    })
}

/// Composite rule over `panels` equal panels of `[a, b]`.
pub(crate) fn gl_real(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for &(x, w) in rule() {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

pub(crate) fn gl_complex(
    a: f64,
    b: f64,
    panels: usize,
    mut f: impl FnMut(f64) -> Complex64,
) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        let mut s = Complex64::new(0.0, 0.0);
        for &(x, w) in rule() {
            s += f(mid + 0.5 * h * x) * w;
        }
        total += s * (0.5 * h);
    }
    total
}

/// Doubles the panel count until successive values agree to `tol`; returns the
/// finer value and the last difference as the error estimate.
pub(crate) fn adaptive_real(
    a: f64,
    b: f64,
    start: usize,
    tol: f64,
    f: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let mut panels = start.max(1);
    let mut prev = gl_real(a, b, panels, &f);
    for _ in 0..14 {
        panels *= 2;
        let next = gl_real(a, b, panels, &f);
        let diff = (next - prev).abs();
        if diff <= tol {
            return Ok((next, diff));
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "real integral on [{a}, {b}] not converged with {panels} panels"
    )))
}

pub(crate) fn adaptive_complex(
    a: f64,
    b: f64,
    start: usize,
    tol: f64,
    f: impl Fn(f64) -> Complex64,
) -> Result<(Complex64, f64)> {
    let mut panels = start.max(1);
    let mut prev = gl_complex(a, b, panels, &f);
    for _ in 0..14 {
        panels *= 2;
        let next = gl_complex(a, b, panels, &f);
        let diff = (next - prev).norm();
        if diff <= tol {
            return Ok((next, diff));
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "oscillatory integral on [{a}, {b}] not converged with {panels} panels"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = gl_real(0.0, 2.0, 1, |x| x.powi(7));
        assert!((v - 32.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_converges() {
        let (v, e) = adaptive_complex(0.0, 1.0, 1, 1e-13, |t| {
            Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * 40.5 * t)
        })
        .unwrap();
        // closed form (1 - e^{-i 81 pi}) / (i 81 pi) = 2 / (i 81 pi)
        let exact = Complex64::new(0.0, -2.0 / (81.0 * std::f64::consts::PI));
        assert!((v - exact).norm() < 1e-12, "{v} {e}");
    }
}
