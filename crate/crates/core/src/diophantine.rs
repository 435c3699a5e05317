//! Simultaneous diophantine approximation for the frequency pair `(alpha, beta)`:
//! `||n1 alpha + n2 beta||`, exponential sums, empirical field constants,
//! dyadic reciprocal sums and the certificate sum `S(N, R)`.
//!
//! Scans use 128-bit torus angles (wrapping `u128` arithmetic is exact reduction
//! mod 1); single values can be recomputed in full fixed point.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedpoint::{raw_to_f64, FixedReal, TorusAngle};
use crate::sequences::KroneckerSpec;

/// Epsilon grid for the Schmidt-type constants.
pub const EPSILONS: [f64; 3] = [0.05, 0.1, 0.2];

/// Largest certificate radius accepted without an override.
pub const MAX_CERTIFICATE_R: f64 = 4096.0;

/// `n1 alpha + n2 beta` mod 1 as a 128-bit angle.
pub fn theta_angle(spec: &KroneckerSpec, n: [i64; 2]) -> TorusAngle {
    spec.alpha_angle().mul_int(n[0]).add(spec.beta_angle().mul_int(n[1]))
}

/// `||n1 alpha + n2 beta||` in fixed point with tracked error.
pub fn torus_norm_linear(spec: &KroneckerSpec, n: [i64; 2]) -> Result<FixedReal> {
    if n == [0, 0] {
        return Err(Error::InvalidArgument("torus norm at n = 0".into()));
    }
    let v = spec.alpha().mul_int(n[0]).add(&spec.beta().mul_int(n[1]));
    Ok(v.nearest_int_dist())
}

/// Fast `||n . (alpha, beta)||` from the 128-bit angles.
pub fn torus_norm_fast(spec: &KroneckerSpec, n: [i64; 2]) -> f64 {
    theta_angle(spec, n).nearest_int_dist()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpSum {
    /// `(1/N) sum_{j=1}^N e^{2 pi i j theta}`, present for `N <= 10^5`.
    pub direct: Option<Complex64>,
    /// `|sin(pi N theta) / (N sin(pi theta))|`.
    pub closed_form_abs: f64,
    /// `1 / (N ||theta||)`.
    pub bound: f64,
}

/// Largest `N` for which the direct sum is evaluated.
pub const DIRECT_SUM_MAX: u64 = 100_000;

/// Normalized exponential sum for an explicit angle `theta`.
pub fn exp_sum_theta(theta: TorusAngle, big_n: u64) -> Result<ExpSum> {
    if big_n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let nf = big_n as f64;
    let dist = theta.nearest_int_dist();
    let closed_form_abs = if dist == 0.0 {
        1.0
    } else {
        // sin(pi N theta) only depends on N theta mod 1, taken exactly
        let n_theta = TorusAngle(theta.0.wrapping_mul(big_n as u128)).to_f64();
        ((PI * n_theta).sin() / (nf * (PI * theta.to_f64()).sin())).abs()
    };
    let direct = (big_n <= DIRECT_SUM_MAX).then(|| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut phase = TorusAngle(0);
        for _ in 0..big_n {
            phase = phase.add(theta);
            let (s, c) = (2.0 * PI * phase.to_f64()).sin_cos();
            acc += Complex64::new(c, s);
        }
        acc / nf
    });
    Ok(ExpSum {
        direct,
        closed_form_abs,
        bound: if dist == 0.0 { f64::INFINITY } else { 1.0 / (nf * dist) },
    })
}

/// Exponential sum of the Kronecker points at frequency `n`.
pub fn exp_sum(spec: &KroneckerSpec, n: [i64; 2], big_n: u64) -> Result<ExpSum> {
    if n == [0, 0] {
        return Err(Error::InvalidArgument("exponential sum at n = 0".into()));
    }
    exp_sum_theta(theta_angle(spec, n), big_n)
}

/// `|(1/N) sum_j e^{2 pi i j theta}|` via the closed form only.
pub(crate) fn exp_sum_abs(theta: TorusAngle, big_n: u64) -> f64 {
    let dist = theta.nearest_int_dist();
    if dist == 0.0 {
        return 1.0;
    }
    let n_theta = TorusAngle(theta.0.wrapping_mul(big_n as u128)).to_f64();
    ((PI * n_theta).sin() / (big_n as f64 * (PI * theta.to_f64()).sin())).abs()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaConstant {
    pub epsilon: f64,
    pub value: f64,
    pub argmin: [i64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineConstants {
    pub search_radius: i64,
    /// `min ||n . (alpha, beta)|| max(|n1|, |n2|)^2`.
    pub eta_emp: f64,
    pub eta_argmin: [i64; 2],
    pub gamma_emp: Vec<GammaConstant>,
    /// Integer relation `c0 + c1 alpha + c2 beta = 0` when the pair is dependent.
    pub relation: Option<[i64; 3]>,
}

impl DiophantineConstants {
    pub fn is_degenerate(&self) -> bool {
        self.relation.is_some()
    }

    pub fn gamma(&self, epsilon: f64) -> Option<f64> {
        self.gamma_emp
            .iter()
            .find(|g| (g.epsilon - epsilon).abs() < 1e-12)
            .map(|g| g.value)
    }
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    n: [i64; 2],
}

impl Best {
    const NONE: Best = Best {
        value: f64::INFINITY,
        n: [0, 0],
    };

    // ties go to the lexicographically first frequency
    fn merge(self, other: Best) -> Best {
        if other.value < self.value || (other.value == self.value && other.n < self.n) {
            other
        } else {
            self
        }
    }
}

/// Minimum of `||n theta|| * weight(n)` over the box `|n1| <= m1, |n2| <= m2`, `n != 0`.
fn box_min(spec: &KroneckerSpec, m1: i64, m2: i64, weight: impl Fn([i64; 2]) -> f64 + Sync) -> Best {
    (-m1..=m1)
        .into_par_iter()
        .map(|a| {
            let row = spec.alpha_angle().mul_int(a);
            let mut best = Best::NONE;
            for b in -m2..=m2 {
                if a == 0 && b == 0 {
                    continue;
                }
                let d = row.add(spec.beta_angle().mul_int(b)).nearest_int_dist();
                best = best.merge(Best {
                    value: d * weight([a, b]),
                    n: [a, b],
                });
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Best::NONE, Best::merge)
}

fn gamma_weight(n: [i64; 2], eps: f64) -> f64 {
    ((1.0 + n[0].unsigned_abs() as f64) * (1.0 + n[1].unsigned_abs() as f64)).powf(1.0 + eps)
}

/// Brute-force empirical constants over `0 < max(|n1|, |n2|) <= m`.
pub fn empirical_constants(spec: &KroneckerSpec, m: i64) -> Result<DiophantineConstants> {
    if m < 16 {
        return Err(Error::InvalidArgument(format!("search radius M = {m} must be at least 16")));
    }
    let eta = box_min(spec, m, m, |n| {
        let k = n[0].unsigned_abs().max(n[1].unsigned_abs()) as f64;
        k * k
    });
    let gamma_emp = EPSILONS
        .iter()
        .map(|&eps| {
            let b = box_min(spec, m, m, |n| gamma_weight(n, eps));
            GammaConstant {
                epsilon: eps,
                value: b.value,
                argmin: b.n,
            }
        })
        .collect();
    let relation = spec.relation().or_else(|| (eta.value == 0.0).then_some([0, 0, 0]));
    Ok(DiophantineConstants {
        search_radius: m,
        eta_emp: eta.value,
        eta_argmin: eta.n,
        gamma_emp,
        relation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicReport {
    pub i: u32,
    pub j: u32,
    /// `sum 1/||n1 alpha + n2 beta||` over the box.
    pub sum: f64,
    pub terms: u64,
    /// Interval length used for the occupancy count.
    pub gamma_tilde: f64,
    /// `gamma_emp(0.1)` over `|d1| <= 2^(i+1)`, `|d2| <= 2^(j+1)`.
    pub gamma_box: f64,
    pub max_occupancy: u32,
    pub first_interval: u32,
}

impl DyadicReport {
    /// At most two values per interval and none in the first.
    pub fn occupancy_holds(&self) -> bool {
        self.max_occupancy <= 2 && self.first_interval == 0
    }

    /// `sum / (2^{(i+j)(1+eps)} (i+j))` with `eps = 0.1` (`i+j` replaced by 1 at the origin box).
    pub fn normalized(&self) -> f64 {
        let s = (self.i + self.j) as f64;
        self.sum / ((s * 1.1).exp2() * s.max(1.0))
    }
}

/// Reciprocal sum over the dyadic box `n1 in [2^i, 2^{i+1})`, `n2 in [2^j, 2^{j+1})`
/// together with the interval-occupancy count of its values.
pub fn dyadic_sum(spec: &KroneckerSpec, i: u32, j: u32) -> Result<DyadicReport> {
    if i + j > 22 {
        return Err(Error::CostGuard(format!("dyadic box i + j = {} exceeds 22", i + j)));
    }
    let eps = 0.1;
    let (lo1, hi1) = (1i64 << i, 1i64 << (i + 1));
    let (lo2, hi2) = (1i64 << j, 1i64 << (j + 1));
    let mut vals: Vec<u128> = (lo1..hi1)
        .into_par_iter()
        .flat_map_iter(|a| {
            let row = spec.alpha_angle().mul_int(a);
            (lo2..hi2).map(move |b| row.add(spec.beta_angle().mul_int(b)).nearest_int_dist_raw())
        })
        .collect();
    if vals.iter().any(|&v| v == 0) {
        return Err(Error::Precondition(
            "a frequency in the box has ||n . (alpha, beta)|| = 0 (rationally dependent pair)".into(),
        ));
    }
    let sum = pairwise_sum(&vals.iter().map(|&v| 1.0 / raw_to_f64(v)).collect::<Vec<_>>());

    let gamma_box = box_min(spec, hi1, hi2, |n| gamma_weight(n, eps)).value;
    let gamma_tilde = gamma_box / gamma_weight([hi1, hi2], eps);
    vals.sort_unstable();
    let mut max_occupancy = 0u32;
    let mut first_interval = 0u32;
    let mut run = 0u32;
    let mut last_bucket = u64::MAX;
    for &v in &vals {
        let bucket = (raw_to_f64(v) / gamma_tilde).floor() as u64;
        if bucket == 0 {
            first_interval += 1;
        }
        if bucket == last_bucket {
            run += 1;
        } else {
            run = 1;
            last_bucket = bucket;
        }
        max_occupancy = max_occupancy.max(run);
    }
    Ok(DyadicReport {
        i,
        j,
        sum,
        terms: vals.len() as u64,
        gamma_tilde,
        gamma_box,
        max_occupancy,
        first_interval,
    })
}

/// Pairwise (tree) summation; the order is fixed by the input order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "R")]
    pub r: f64,
    pub term_const: f64,
    pub term_smooth: f64,
    pub term_product: f64,
    pub total: f64,
}

/// `1/R + sum_{0<|n|<R} (|n|^{-3/2} + (1+|n1|)^{-1}(1+|n2|)^{-1}) / (N ||n . (alpha, beta)||)`.
pub fn certificate_sum(spec: &KroneckerSpec, big_n: u64, r: f64, allow_large: bool) -> Result<CertificateReport> {
    if big_n == 0 || !(r >= 1.0) {
        return Err(Error::InvalidArgument(format!("need N >= 1 and R >= 1, got N={big_n}, R={r}")));
    }
    if r > MAX_CERTIFICATE_R && !allow_large {
        return Err(Error::CostGuard(format!(
            "R = {r} exceeds {MAX_CERTIFICATE_R}; the scan is quadratic in R"
        )));
    }
    let k = r.ceil() as i64;
    let rows: Vec<Result<(f64, f64)>> = (-k..=k)
        .into_par_iter()
        .map(|a| {
            let row = spec.alpha_angle().mul_int(a);
            let (mut smooth, mut product) = (Vec::new(), Vec::new());
            for b in -k..=k {
                let nn = ((a * a + b * b) as f64).sqrt();
                if nn == 0.0 || nn >= r {
                    continue;
                }
                let d = row.add(spec.beta_angle().mul_int(b)).nearest_int_dist();
                if d == 0.0 {
                    return Err(Error::Precondition(format!(
                        "||n . (alpha, beta)|| = 0 at n = ({a}, {b}); the pair is rationally dependent"
                    )));
                }
                smooth.push(nn.powf(-1.5) / d);
                product.push(1.0 / ((1.0 + a.unsigned_abs() as f64) * (1.0 + b.unsigned_abs() as f64) * d));
            }
            Ok((pairwise_sum(&smooth), pairwise_sum(&product)))
        })
        .collect();
    let (mut smooth, mut product) = (Vec::new(), Vec::new());
    for row in rows {
        let (s, p) = row?;
        smooth.push(s);
        product.push(p);
    }
    let nf = big_n as f64;
    let term_smooth = pairwise_sum(&smooth) / nf;
    let term_product = pairwise_sum(&product) / nf;
    let term_const = 1.0 / r;
    Ok(CertificateReport {
        n: big_n,
        r,
        term_const,
        term_smooth,
        term_product,
        total: term_const + term_smooth + term_product,
    })
}

/// `ceil(N^{2/3})`, computed without trusting `powf` at perfect cubes.
pub fn r_rule(big_n: u64) -> f64 {
    let mut r = (big_n as f64).powf(2.0 / 3.0).round() as u64;
    // smallest r with r^3 >= N^2
    let n2 = (big_n as u128) * (big_n as u128);
    while (r as u128).pow(3) < n2 {
        r += 1;
    }
    while r > 1 && ((r - 1) as u128).pow(3) >= n2 {
        r -= 1;
    }
    r as f64
}
