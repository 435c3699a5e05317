//! QMC integration of `f · chi_body` for periodic trigonometric polynomials
//! `f`, the variation functional `V(f)`, and Koksma-Hlawka error reports.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diophantine::pairwise_sum;
use crate::discrepancy::{DiscrepancyEstimate, SearchMethod};
use crate::error::{Error, Result};
use crate::fourier::chi_hat;
use crate::geometry::{BodyConfig, BoundaryPiece, ConvexBody};
use crate::sequences::PointSet;

pub const MAX_DEGREE: i64 = 64;

/// Grid used for the `L^1` norms; a half-resolution pass feeds the Richardson step.
pub const VARIATION_GRID: usize = 2048;

/// `f(t) = sum_k c_k e^{2 pi i k . t}` with `c_{-k} = conj(c_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 4]>", into = "Vec<[f64; 4]>")]
pub struct TrigPolynomial {
    coeffs: BTreeMap<[i64; 2], Complex64>,
}

impl TryFrom<Vec<[f64; 4]>> for TrigPolynomial {
    type Error = Error;

    fn try_from(rows: Vec<[f64; 4]>) -> Result<Self> {
        TrigPolynomial::from_rows(&rows)
    }
}

impl From<TrigPolynomial> for Vec<[f64; 4]> {
    fn from(f: TrigPolynomial) -> Self {
        f.rows()
    }
}

impl TrigPolynomial {
    pub fn zero() -> Self {
        Self {
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(&[([0, 0], Complex64::new(c, 0.0))]).expect("real constant")
    }

    /// Terms with equal frequencies are added. Zero coefficients are dropped.
    pub fn new(terms: &[([i64; 2], Complex64)]) -> Result<Self> {
        let mut coeffs: BTreeMap<[i64; 2], Complex64> = BTreeMap::new();
        for &(k, c) in terms {
            if k[0].abs() > MAX_DEGREE || k[1].abs() > MAX_DEGREE {
                return Err(Error::InvalidArgument(format!(
                    "frequency {k:?} exceeds degree {MAX_DEGREE}"
                )));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidArgument(format!("coefficient at {k:?} is not finite")));
            }
            *coeffs.entry(k).or_default() += c;
        }
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        let scale = coeffs.values().map(|c| c.norm()).fold(0.0, f64::max);
        for (k, c) in &coeffs {
            let partner = coeffs.get(&[-k[0], -k[1]]).copied().unwrap_or_default();
            if (partner - c.conj()).norm() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "coefficients at {k:?} and {:?} are not conjugate",
                    [-k[0], -k[1]]
                )));
            }
        }
        Ok(Self { coeffs })
    }

    /// Rows `[k1, k2, re, im]`.
    pub fn from_rows(rows: &[[f64; 4]]) -> Result<Self> {
        let mut terms = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r[0].fract() != 0.0 || r[1].fract() != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: frequency ({}, {}) is not an integer pair",
                    r[0], r[1]
                )));
            }
            terms.push(([r[0] as i64, r[1] as i64], Complex64::new(r[2], r[3])));
        }
        Self::new(&terms)
    }

    pub fn rows(&self) -> Vec<[f64; 4]> {
        self.coeffs
            .iter()
            .map(|(k, c)| [k[0] as f64, k[1] as f64, c.re, c.im])
            .collect()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = ([i64; 2], Complex64)> + '_ {
        self.coeffs.iter().map(|(k, c)| (*k, *c))
    }

    /// Torus mean, `c_0`.
    pub fn mean(&self) -> f64 {
        self.coeffs.get(&[0, 0]).map_or(0.0, |c| c.re)
    }

    pub fn eval(&self, t: [f64; 2]) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let ph = TAU * (k[0] as f64 * t[0] + k[1] as f64 * t[1]);
                c.re * ph.cos() - c.im * ph.sin()
            })
            .sum()
    }

    /// `d^{a+b} f / dt1^a dt2^b`.
    pub fn derivative(&self, a: u32, b: u32) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let f = Complex64::new(0.0, TAU * k[0] as f64).powu(a) * Complex64::new(0.0, TAU * k[1] as f64).powu(b);
                (*k, c * f)
            })
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        Self { coeffs }
    }

    pub fn scale_add(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        for (k, c) in &self.coeffs {
            *coeffs.entry(*k).or_insert(Complex64::new(0.0, 0.0)) += c * a;
        }
        for (k, c) in &other.coeffs {
            *coeffs.entry(*k).or_insert(Complex64::new(0.0, 0.0)) += c * b;
        }
        coeffs.retain(|_, c: &mut Complex64| *c != Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Midpoint-rule `||f||_1` on an `m x m` grid, evaluating `f` separably.
fn l1_midpoint(f: &TrigPolynomial, m: usize) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let nodes: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let cis = |k: i64| -> Vec<Complex64> {
        nodes
            .iter()
            .map(|&t| Complex64::from_polar(1.0, TAU * k as f64 * t))
            .collect()
    };
    // group by k2: g_{k2}(t1) = sum_{k1} c_k e^{2 pi i k1 t1}
    let mut by_k2: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
    let mut e1: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
    for (k, c) in f.coeffs() {
        let e = e1.entry(k[0]).or_insert_with(|| cis(k[0]));
        let g = by_k2.entry(k[1]).or_insert_with(|| vec![Complex64::new(0.0, 0.0); m]);
        for (gi, ei) in g.iter_mut().zip(e.iter()) {
            *gi += c * ei;
        }
    }
    let cols: Vec<(Vec<Complex64>, Vec<Complex64>)> =
        by_k2.into_iter().map(|(k2, g)| (g, cis(k2))).collect();
    let rows: Vec<f64> = (0..m)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..m {
                let v: f64 = cols.iter().map(|(g, e)| (g[i] * e[j]).re).sum();
                s += v.abs();
            }
            s
        })
        .collect();
    pairwise_sum(&rows) / (m * m) as f64
}

/// `||f||_1` with a Richardson step over the `m` and `m/2` grids; returns the
/// extrapolated value and the size of the correction.
pub fn l1_norm(f: &TrigPolynomial, m: usize) -> (f64, f64) {
    let fine = l1_midpoint(f, m);
    let coarse = l1_midpoint(f, m / 2);
    let extrap = (4.0 * fine - coarse) / 3.0;
    (extrap, (extrap - fine).abs())
}

/// `V(f) = 4||f||_1 + 2||d1 f||_1 + 2||d2 f||_1 + ||d1 d2 f||_1`.
pub fn variation(f: &TrigPolynomial) -> f64 {
    variation_parts(f).iter().zip([4.0, 2.0, 2.0, 1.0]).map(|(v, w)| w * v).sum()
}

/// The four norms `||f||_1, ||d1 f||_1, ||d2 f||_1, ||d1 d2 f||_1`.
pub fn variation_parts(f: &TrigPolynomial) -> [f64; 4] {
    let ds = [(0, 0), (1, 0), (0, 1), (1, 1)];
    ds.map(|(a, b)| l1_norm(&f.derivative(a, b), VARIATION_GRID).0)
}

/// `(1/N) sum_j f(t(j)) #{m : t(j) + m in body}`.
pub fn qmc_integrate(f: &TrigPolynomial, body: &ConvexBody, points: &PointSet) -> f64 {
    let terms: Vec<f64> = points
        .coords()
        .iter()
        .map(|&t| {
            let mult = body.translates_containing(t).count();
            if mult == 0 {
                0.0
            } else {
                f.eval(t) * mult as f64
            }
        })
        .collect();
    pairwise_sum(&terms) / points.len() as f64
}

/// `integral_body f = sum_k c_k chi_hat_body(-k)`.
pub fn reference_integral(f: &TrigPolynomial, body: &ConvexBody) -> Result<f64> {
    let c = body.center();
    let transform = |n: [i64; 2]| -> Result<Complex64> {
        let nf = [n[0] as f64, n[1] as f64];
        let phase = Complex64::from_polar(1.0, -TAU * (nf[0] * c[0] + nf[1] * c[1]));
        match body.config() {
            BodyConfig::Disk { radius, .. } => {
                let rho = nf[0].hypot(nf[1]);
                Ok(phase * (radius * libm::j1(TAU * radius * rho) / rho))
            }
            BodyConfig::Ellipse { semi_axes: [a, b], .. } => {
                // image of the unit disk under diag(a, b)
                let rho = (a * nf[0]).hypot(b * nf[1]);
                Ok(phase * (a * b * libm::j1(TAU * rho) / rho))
            }
            BodyConfig::Support { .. } => {
                let arc = BoundaryPiece::BodyArc {
                    body: Arc::new(body.clone()),
                    offset: 0.0,
                    theta: [0.0, TAU],
                };
                Ok(chi_hat(&[arc], n)?.value)
            }
        }
    };
    let mut terms = Vec::new();
    for (k, ck) in f.coeffs() {
        if k == [0, 0] {
            terms.push(ck.re * body.area());
        } else {
            terms.push((ck * transform([-k[0], -k[1]])?).re);
        }
    }
    Ok(pairwise_sum(&terms))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub qmc_value: f64,
    pub reference_value: f64,
    pub abs_error: f64,
    #[serde(rename = "V_f")]
    pub v_f: f64,
    #[serde(rename = "D_used")]
    pub d_used: f64,
    pub d_method: SearchMethod,
    pub kh_product: f64,
    /// `abs_error > V_f * D_used`; the discrepancy is a lower bound, so this
    /// asks for a better search rather than signalling a failure.
    pub violation: bool,
}

pub fn kh_certificate(
    f: &TrigPolynomial,
    body: &ConvexBody,
    points: &PointSet,
    d_est: &DiscrepancyEstimate,
) -> Result<IntegrationReport> {
    let qmc_value = qmc_integrate(f, body, points);
    let reference_value = reference_integral(f, body)?;
    let abs_error = (qmc_value - reference_value).abs();
    let v_f = variation(f);
    let kh_product = v_f * d_est.value;
    Ok(IntegrationReport {
        n: points.len(),
        qmc_value,
        reference_value,
        abs_error,
        v_f,
        d_used: d_est.value,
        d_method: d_est.method,
        kh_product,
        violation: abs_error > kh_product,
    })
}

/// `1 + cos(2 pi t1) cos(2 pi t2)`.
pub fn cos_product_plus_one() -> TrigPolynomial {
    let q = Complex64::new(0.25, 0.0);
    TrigPolynomial::new(&[
        ([0, 0], Complex64::new(1.0, 0.0)),
        ([1, 1], q),
        ([-1, -1], q),
        ([1, -1], q),
        ([-1, 1], q),
    ])
    .expect("symmetric")
}
