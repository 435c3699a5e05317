//! Fourier transforms of boundary measures, of indicators `chi_K`, and of the
//! boundary-layer kernel `H_R(x) = psi(R |delta_K(x)|)`.
//!
//! Segments are closed form. Arcs use composite Gauss-Legendre panels sized to
//! keep at least twenty nodes per oscillation, doubled until two passes agree.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{decompose_intersection, level_boundary, BoundaryPiece, ClippedPiece, ConvexBody, Point, Window};
use crate::quadrature::{adaptive_complex, gl_complex};

const ARC_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FtMethod {
    ClosedForm,
    BoundaryQuadrature,
    CoareaQuadrature,
}

/// One transform value with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSample {
    pub xi: [f64; 2],
    pub value: Complex64,
    pub method: FtMethod,
    pub est_abs_error: f64,
}

impl FourierSample {
    fn new(xi: [f64; 2], value: Complex64, method: FtMethod, est_abs_error: f64) -> Self {
        Self {
            xi,
            value,
            method,
            est_abs_error: est_abs_error.max(0.0),
        }
    }

    pub fn abs(&self) -> f64 {
        self.value.norm()
    }
}

/// Rapidly decaying profile `psi` for the boundary-layer kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiProfile {
    /// `(1 + t)^(-power)`.
    Poly { power: u32 },
    /// Identically zero; a degenerate control.
    Zero,
}

impl Default for PsiProfile {
    fn default() -> Self {
        PsiProfile::Poly { power: 12 }
    }
}

impl PsiProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PsiProfile::Poly { power } => (1.0 + t).powi(-(*power as i32)),
            PsiProfile::Zero => 0.0,
        }
    }

    /// Smallest `t` with `psi(t) < 1e-14`.
    pub fn cutoff(&self) -> f64 {
        match self {
            PsiProfile::Poly { power } => 10f64.powf(14.0 / *power as f64) - 1.0,
            PsiProfile::Zero => 0.0,
        }
    }

    /// `integral_U^inf psi(R t) 4 (1 + 2t) dt`: tail bound for one side of the
    /// coarea integral given perimeters `<= 4 (1 + 2|u|)`.
    fn tail(&self, r: f64, u: f64) -> f64 {
        match self {
            PsiProfile::Poly { power } => {
                let p = *power as f64;
                let v = 1.0 + r * u;
                4.0 * (v.powf(1.0 - p) / ((p - 1.0) * r)
                    + 2.0 / (r * r) * (v.powf(2.0 - p) / (p - 2.0) - v.powf(1.0 - p) / (p - 1.0)))
            }
            PsiProfile::Zero => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtKernelConfig {
    #[serde(default)]
    pub psi: PsiProfile,
    #[serde(rename = "R")]
    pub r: f64,
}

impl EtKernelConfig {
    pub fn new(psi: PsiProfile, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("kernel cutoff R = {r}")));
        }
        if let PsiProfile::Poly { power } = psi {
            if power < 3 {
                return Err(Error::InvalidArgument(format!(
                    "psi power {power} too small for a finite tail bound"
                )));
            }
        }
        Ok(Self { psi, r })
    }

    pub fn with_r(r: f64) -> Result<Self> {
        Self::new(PsiProfile::default(), r)
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cis(phase: f64) -> Complex64 {
    let (s, c) = phase.sin_cos();
    Complex64::new(c, s)
}

/// `integral over [x, y] of e^{-2 pi i r . xi} ds`.
pub fn segment_ft(x: Point, y: Point, xi: [f64; 2]) -> Complex64 {
    let d = [y[0] - x[0], y[1] - x[1]];
    let len = d[0].hypot(d[1]);
    let a = PI * dot(d, xi);
    let sinc = if a == 0.0 { 1.0 } else { a.sin() / a };
    let mid = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
    cis(-TAU * dot(mid, xi)) * (len * sinc)
}

/// Normal-angle range, point map and radius of curvature for an arc piece.
fn arc_geometry(piece: &BoundaryPiece) -> Option<([f64; 2], f64)> {
    match piece {
        BoundaryPiece::BodyArc { body, offset, theta } => Some((*theta, 1.0 / body.kappa_min() - offset)),
        BoundaryPiece::CornerArc { radius, theta, .. } => Some((*theta, *radius)),
        BoundaryPiece::Segment { .. } => None,
    }
}

fn arc_point(piece: &BoundaryPiece, t: f64) -> (Point, f64) {
    match piece {
        BoundaryPiece::BodyArc { body, offset, .. } => {
            (body.boundary_point(t, *offset), body.radius_of_curvature(t, *offset))
        }
        BoundaryPiece::CornerArc { center, radius, .. } => {
            ([center[0] + radius * t.cos(), center[1] + radius * t.sin()], *radius)
        }
        BoundaryPiece::Segment { .. } => unreachable!("segments are closed form"),
    }
}

/// `integral over the piece of w(nu) e^{-2 pi i x . xi} ds` where `w` is 1 or
/// `n . nu` when `normal_weight` is set.
fn piece_integral(
    piece: &BoundaryPiece,
    xi: [f64; 2],
    normal_weight: Option<[f64; 2]>,
    tol: f64,
) -> Result<(Complex64, f64)> {
    if let BoundaryPiece::Segment { from, to } = piece {
        let w = match normal_weight {
            Some(n) => {
                let nu = piece.start_normal();
                n[0] * nu.cos() + n[1] * nu.sin()
            }
            None => 1.0,
        };
        return Ok((segment_ft(*from, *to, xi) * w, 0.0));
    }
    let (theta, rho_max) = arc_geometry(piece).expect("arc");
    let span = theta[1] - theta[0];
    if span <= 0.0 {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let freq = xi[0].hypot(xi[1]);
    let start = (freq * span * rho_max).ceil() as usize + 1;
    let f = |t: f64| {
        let (p, rho) = arc_point(piece, t);
        let w = match normal_weight {
            Some(n) => n[0] * t.cos() + n[1] * t.sin(),
            None => 1.0,
        };
        cis(-TAU * dot(p, xi)) * (w * rho)
    };
    let (v, e) = adaptive_complex(theta[0], theta[1], start, tol, f)?;
    Ok((v, e.max(1e-16 * span * rho_max)))
}

/// `gamma_hat(xi) = integral_0^l e^{-2 pi i r(tau) . xi} dtau` for an arc piece.
pub fn arc_ft(arc: &BoundaryPiece, xi: [f64; 2]) -> Result<FourierSample> {
    if arc.is_segment() {
        return Err(Error::InvalidArgument("arc_ft expects an arc piece".into()));
    }
    let (v, e) = piece_integral(arc, xi, None, ARC_TOL)?;
    Ok(FourierSample::new(xi, v, FtMethod::BoundaryQuadrature, e))
}

/// Boundary-measure transform of a closed curve (sum over its pieces).
pub fn boundary_ft(pieces: &[BoundaryPiece], xi: [f64; 2]) -> Result<(Complex64, f64)> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for p in pieces {
        let (v, e) = piece_integral(p, xi, None, ARC_TOL)?;
        total += v;
        err += e;
    }
    Ok((total, err))
}

/// `chi_hat_K(n)` from the boundary by the divergence theorem, always by quadrature.
pub fn chi_hat(pieces: &[BoundaryPiece], n: [i64; 2]) -> Result<FourierSample> {
    if n == [0, 0] {
        return Err(Error::InvalidArgument(
            "chi_hat at n = 0 is the area; use clip_area".into(),
        ));
    }
    let nf = [n[0] as f64, n[1] as f64];
    let n2 = dot(nf, nf);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for p in pieces {
        let (v, e) = piece_integral(p, nf, Some(nf), ARC_TOL)?;
        total += v;
        err += e;
    }
    let scale = Complex64::new(0.0, 1.0 / (TAU * n2));
    let method = if pieces.iter().all(BoundaryPiece::is_segment) {
        FtMethod::ClosedForm
    } else {
        FtMethod::BoundaryQuadrature
    };
    Ok(FourierSample::new(nf, total * scale, method, err / (TAU * n2)))
}

/// Full disk in a piece: the only arc spans all normal angles.
fn full_disk(piece: &ClippedPiece) -> Option<(Point, f64)> {
    let r = piece.body.disk_radius()?;
    match piece.boundary.as_slice() {
        [BoundaryPiece::BodyArc { theta, .. }] if theta[1] - theta[0] >= TAU - 1e-12 => {
            Some((piece.body.center(), r - piece.offset))
        }
        _ => None,
    }
}

/// `chi_hat` of a clipped piece, closed form when it is a whole disk.
pub fn chi_hat_piece(piece: &ClippedPiece, n: [i64; 2]) -> Result<FourierSample> {
    if let Some((c, r)) = full_disk(piece) {
        if n == [0, 0] {
            return Err(Error::InvalidArgument(
                "chi_hat at n = 0 is the area; use clip_area".into(),
            ));
        }
        let nf = [n[0] as f64, n[1] as f64];
        let rho = nf[0].hypot(nf[1]);
        let v = cis(-TAU * dot(nf, c)) * (r * libm::j1(TAU * r * rho) / rho);
        return Ok(FourierSample::new(nf, v, FtMethod::ClosedForm, 1e-15));
    }
    chi_hat(&piece.boundary, n)
}

/// `H_R_hat(n)` by the coarea formula: `integral psi(R|u|) F_u(n) du` where
/// `F_u` is the boundary-measure transform of the level curve `{delta_K = u}`.
pub fn h_hat(piece: &ClippedPiece, cfg: &EtKernelConfig, n: [i64; 2]) -> Result<FourierSample> {
    let nf = [n[0] as f64, n[1] as f64];
    if matches!(cfg.psi, PsiProfile::Zero) {
        return Ok(FourierSample::new(nf, Complex64::new(0.0, 0.0), FtMethod::CoareaQuadrature, 0.0));
    }
    let r = cfg.r;
    let u_cut = cfg.psi.cutoff() / r;
    if let Some((c, rad)) = full_disk(piece) {
        // concentric circles exist for every u < rad, so nothing is truncated
        let rho = nf[0].hypot(nf[1]);
        let phase = cis(-TAU * dot(nf, c));
        let f = |u: f64| {
            let ru = rad - u;
            TAU * ru * libm::j0(TAU * ru * rho) * cfg.psi.eval(r * u.abs())
        };
        let (inner, e1) = coarea_side(r, rad.min(u_cut), |u| Ok(Complex64::new(f(u), 0.0)))?;
        let (outer, e2) = coarea_side(r, u_cut, |u| Ok(Complex64::new(f(-u), 0.0)))?;
        let err = e1 + e2 + cfg.psi.tail(r, u_cut);
        return Ok(FourierSample::new(nf, phase * (inner + outer), FtMethod::CoareaQuadrature, err));
    }

    let limit = (0.5 / piece.body.kappa_max()) * (1.0 - 1e-9);
    let u_max = u_cut.min(limit);
    let level = |u: f64| -> Result<Complex64> {
        let pieces = level_boundary(piece, u)?;
        Ok(boundary_ft(&pieces, nf)?.0 * cfg.psi.eval(r * u.abs()))
    };
    let (inner, e1) = coarea_side(r, u_max, |u| level(u))?;
    let (outer, e2) = coarea_side(r, u_max, |u| level(-u))?;
    let mut err = e1 + e2;
    if u_cut > limit {
        err += cfg.psi.tail(r, limit);
        if !level_boundary(piece, limit)?.is_empty() {
            err += cfg.psi.tail(r, limit);
        }
    }
    Ok(FourierSample::new(nf, inner + outer, FtMethod::CoareaQuadrature, err))
}

/// `integral_0^U g(u) du` on geometric panels `[0, 1/R, 2/R, 4/R, ...]`,
/// each panel split until two passes agree.
fn coarea_side(r: f64, upper: f64, g: impl Fn(f64) -> Result<Complex64>) -> Result<(Complex64, f64)> {
    if upper <= 0.0 {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let mut breaks = vec![0.0];
    let mut b = 1.0 / r;
    while b < upper {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(upper);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut failed = None;
        let mut eval = |panels: usize| {
            gl_complex(a, b, panels, |u| match g(u) {
                Ok(v) => v,
                Err(e) => {
                    failed.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            })
        };
        let mut panels = 1;
        let mut prev = eval(panels);
        let mut diff = f64::INFINITY;
        let scale = prev.norm().max(1e-300);
        while panels < 64 {
            panels *= 2;
            let next = eval(panels);
            diff = (next - prev).norm();
            prev = next;
            if diff <= 1e-10 * (b - a) || diff <= 1e-9 * scale {
                break;
            }
        }
        if let Some(e) = failed {
            return Err(e);
        }
        total += prev;
        err += diff;
    }
    Ok((total, err))
}

/// One row of a decay table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: [i64; 2],
    pub abs_chi_hat: f64,
    pub abs_h_hat: Option<f64>,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub rows: Vec<DecayRow>,
    /// Empirical constant `max |chi_hat| / bound`.
    pub max_ratio: f64,
    pub max_h_ratio: Option<f64>,
}

impl DecayProfile {
    /// CSV `n1,n2,abs_chi_hat,abs_h_hat,bound,ratio`; `abs_h_hat` blank when not computed.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n1,n2,abs_chi_hat,abs_h_hat,bound,ratio")?;
        for r in &self.rows {
            let h = r.abs_h_hat.map(|v| format!("{v:.12e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},{:.12e},{},{:.12e},{:.12e}",
                r.n[0], r.n[1], r.abs_chi_hat, h, r.bound, r.ratio
            )?;
        }
        Ok(())
    }

    /// Largest ratio among frequencies with `k - 1 < |n| <= k`, for `k = 1..`.
    pub fn ring_maxima(&self) -> Vec<f64> {
        let kmax = self
            .rows
            .iter()
            .map(|r| (r.n[0] as f64).hypot(r.n[1] as f64).ceil() as usize)
            .max()
            .unwrap_or(0);
        let mut out = vec![0.0f64; kmax];
        for r in &self.rows {
            let k = (r.n[0] as f64).hypot(r.n[1] as f64).ceil() as usize;
            out[k - 1] = out[k - 1].max(r.ratio);
        }
        out
    }
}

/// `|n|^{-3/2} + (1 + |n1|)^{-1} (1 + |n2|)^{-1}`.
pub fn decay_bound(n: [i64; 2]) -> f64 {
    let nn = (n[0] as f64).hypot(n[1] as f64);
    nn.powf(-1.5) + 1.0 / ((1.0 + n[0].unsigned_abs() as f64) * (1.0 + n[1].unsigned_abs() as f64))
}

/// Frequencies with `0 < |n| <= radius` in lexicographic order.
pub fn frequencies_in_disk(radius: f64) -> Vec<[i64; 2]> {
    let k = radius.floor() as i64;
    let mut out = Vec::new();
    for a in -k..=k {
        for b in -k..=k {
            let nn = (a as f64).hypot(b as f64);
            if nn > 0.0 && nn <= radius {
                out.push([a, b]);
            }
        }
    }
    out
}

/// Decay table of `D = I(s, x) ∩ body` over `0 < |n| <= n_max`; the kernel
/// columns are filled when `kernel` is given.
pub fn decay_profile(
    body: &ConvexBody,
    window: &Window,
    n_max: u32,
    kernel: Option<&EtKernelConfig>,
) -> Result<DecayProfile> {
    if n_max < 8 {
        return Err(Error::InvalidArgument(format!("n_max = {n_max} must be at least 8")));
    }
    let body = std::sync::Arc::new(body.clone());
    let pieces = decompose_intersection(&body, window);
    let rows = frequencies_in_disk(n_max as f64)
        .into_par_iter()
        .map(|n| -> Result<DecayRow> {
            let mut chi = Complex64::new(0.0, 0.0);
            let mut h = Complex64::new(0.0, 0.0);
            for k in &pieces {
                chi += chi_hat_piece(k, n)?.value;
                if let Some(cfg) = kernel {
                    h += h_hat(k, cfg, n)?.value;
                }
            }
            let bound = decay_bound(n);
            Ok(DecayRow {
                n,
                abs_chi_hat: chi.norm(),
                abs_h_hat: kernel.map(|_| h.norm()),
                bound,
                ratio: chi.norm() / bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let max_h_ratio = kernel.map(|_| {
        rows.iter()
            .map(|r| r.abs_h_hat.unwrap_or(0.0) / r.bound)
            .fold(0.0, f64::max)
    });
    Ok(DecayProfile {
        rows,
        max_ratio,
        max_h_ratio,
    })
}
