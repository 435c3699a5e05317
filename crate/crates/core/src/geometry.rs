//! Planar convex bodies with positively curved boundary, periodized windows,
//! and the arc/segment boundary of `(rect + m) ∩ body`.
//!
//! Every body is described by its support function `h(theta)` about a centre
//! `c`. The boundary point with outward normal `nu = (cos theta, sin theta)` is
//! `c + h nu + h' nu_perp` and the radius of curvature there is `h + h''`.
//! Offsetting inward by `u` replaces `h` with `h - u`, which is how the
//! parallel bodies used by the level-set machinery are represented.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_real, gl_real};

pub type Point = [f64; 2];

/// Smallest and largest admissible window side.
pub const S_MIN: f64 = 1e-9;
pub const S_MAX: f64 = 1.0 - 1e-9;

const SUPPORT_GRID: usize = 8192;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyConfig {
    Disk {
        center: Point,
        radius: f64,
    },
    /// Axis-aligned; `semi_axes = [a, b]` along x and y.
    Ellipse {
        center: Point,
        semi_axes: [f64; 2],
    },
    /// `h(theta) = sum_k coeffs[k] cos(k theta)`.
    Support {
        center: Point,
        coeffs: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Disk { r: f64 },
    Ellipse { a: f64, b: f64 },
    Support { coeffs: Vec<f64> },
}

/// A convex body with C^2 boundary of strictly positive curvature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyConfig", into = "BodyConfig")]
pub struct ConvexBody {
    center: Point,
    shape: Shape,
    kappa_min: f64,
    kappa_max: f64,
    perimeter: f64,
    diameter: f64,
    area: f64,
    // [xmin, xmax, ymin, ymax]
    bbox: [f64; 4],
}

impl TryFrom<BodyConfig> for ConvexBody {
    type Error = Error;

    fn try_from(cfg: BodyConfig) -> Result<Self> {
        ConvexBody::from_config(cfg)
    }
}

impl From<ConvexBody> for BodyConfig {
    fn from(b: ConvexBody) -> Self {
        b.config()
    }
}

impl ConvexBody {
    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        Self::from_config(BodyConfig::Disk { center, radius })
    }

    pub fn ellipse(center: Point, a: f64, b: f64) -> Result<Self> {
        Self::from_config(BodyConfig::Ellipse {
            center,
            semi_axes: [a, b],
        })
    }

    pub fn support(center: Point, coeffs: Vec<f64>) -> Result<Self> {
        Self::from_config(BodyConfig::Support { center, coeffs })
    }

    pub fn from_config(cfg: BodyConfig) -> Result<Self> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let (center, shape) = match cfg {
            BodyConfig::Disk { center, radius } => {
                if !(radius > 0.0) || !finite(&center) || !radius.is_finite() {
                    return Err(Error::InvalidArgument(format!("disk radius {radius}")));
                }
                (center, Shape::Disk { r: radius })
            }
            BodyConfig::Ellipse { center, semi_axes: [a, b] } => {
                if !(a > 0.0 && b > 0.0) || !finite(&[a, b]) || !finite(&center) {
                    return Err(Error::InvalidArgument(format!("ellipse semi-axes [{a}, {b}]")));
                }
                (center, Shape::Ellipse { a, b })
            }
            BodyConfig::Support { center, coeffs } => {
                if coeffs.is_empty() || !finite(&coeffs) || !finite(&center) {
                    return Err(Error::InvalidArgument("empty support series".into()));
                }
                (center, Shape::Support { coeffs })
            }
        };
        let mut body = ConvexBody {
            center,
            shape,
            kappa_min: 0.0,
            kappa_max: 0.0,
            perimeter: 0.0,
            diameter: 0.0,
            area: 0.0,
            bbox: [0.0; 4],
        };
        body.fill_cache()?;
        Ok(body)
    }

    fn fill_cache(&mut self) -> Result<()> {
        let [cx, cy] = self.center;
        match self.shape.clone() {
            Shape::Disk { r } => {
                self.kappa_min = 1.0 / r;
                self.kappa_max = 1.0 / r;
                self.perimeter = TAU * r;
                self.diameter = 2.0 * r;
                self.area = PI * r * r;
            }
            Shape::Ellipse { a, b } => {
                let (hi, lo) = (a.max(b), a.min(b));
                self.kappa_min = lo / (hi * hi);
                self.kappa_max = hi / (lo * lo);
                self.perimeter = gl_real(0.0, TAU, 16, |t| self.support_fn(t).0);
                self.diameter = 2.0 * hi;
                self.area = PI * a * b;
            }
            Shape::Support { coeffs } => {
                // certify h > 0 and h + h'' > 0 on a grid plus a Lipschitz margin
                let lip_h: f64 = coeffs.iter().enumerate().map(|(k, c)| k as f64 * c.abs()).sum();
                let lip_rho: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let k = k as f64;
                        k * (k * k - 1.0).abs() * c.abs()
                    })
                    .sum();
                let step = TAU / SUPPORT_GRID as f64;
                let (mut h_min, mut rho_min, mut rho_max) = (f64::INFINITY, f64::INFINITY, 0.0f64);
                for i in 0..SUPPORT_GRID {
                    let (h, _, h2) = self.support_fn(i as f64 * step);
                    h_min = h_min.min(h);
                    rho_min = rho_min.min(h + h2);
                    rho_max = rho_max.max(h + h2);
                }
                let rho_lower = rho_min - 0.5 * step * lip_rho;
                if h_min - 0.5 * step * lip_h <= 0.0 || rho_lower <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "support series is not a positively curved body around its centre (min h+h'' = {rho_min})"
                    )));
                }
                self.kappa_min = 1.0 / (rho_max + 0.5 * step * lip_rho);
                self.kappa_max = 1.0 / rho_lower;
                self.perimeter = TAU * coeffs[0];
                self.area = PI * coeffs[0] * coeffs[0]
                    + 0.5
                        * PI
                        * coeffs
                            .iter()
                            .enumerate()
                            .skip(1)
                            .map(|(k, c)| c * c * (1.0 - (k * k) as f64))
                            .sum::<f64>();
                let width = |t: f64| self.support_fn(t).0 + self.support_fn(t + PI).0;
                self.diameter = maximize(width, 0.0, PI, 512);
            }
        }
        self.bbox = [
            cx - self.support_fn(PI).0,
            cx + self.support_fn(0.0).0,
            cy - self.support_fn(1.5 * PI).0,
            cy + self.support_fn(0.5 * PI).0,
        ];
        Ok(())
    }

    pub fn config(&self) -> BodyConfig {
        match &self.shape {
            Shape::Disk { r } => BodyConfig::Disk {
                center: self.center,
                radius: *r,
            },
            Shape::Ellipse { a, b } => BodyConfig::Ellipse {
                center: self.center,
                semi_axes: [*a, *b],
            },
            Shape::Support { coeffs } => BodyConfig::Support {
                center: self.center,
                coeffs: coeffs.clone(),
            },
        }
    }

    pub fn center(&self) -> Point {
        self.center
    }

    /// `Some(r)` for a disk.
    pub fn disk_radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Disk { r } => Some(r),
            _ => None,
        }
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa_min
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    /// `(h, h', h'')` at normal angle `theta`.
    pub fn support_fn(&self, theta: f64) -> (f64, f64, f64) {
        match &self.shape {
            Shape::Disk { r } => (*r, 0.0, 0.0),
            Shape::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                let h = (a * a * c * c + b * b * s * s).sqrt();
                let d = b * b - a * a;
                let h1 = d * s * c / h;
                let h2 = (d * (c * c - s * s) - h1 * h1) / h;
                (h, h1, h2)
            }
            Shape::Support { coeffs } => {
                let (mut h, mut h1, mut h2) = (0.0, 0.0, 0.0);
                for (k, ck) in coeffs.iter().enumerate() {
                    let kf = k as f64;
                    let (s, c) = (kf * theta).sin_cos();
                    h += ck * c;
                    h1 -= kf * ck * s;
                    h2 -= kf * kf * ck * c;
                }
                (h, h1, h2)
            }
        }
    }

    /// Boundary point of the inner parallel body at depth `u` with normal angle `theta`.
    pub fn boundary_point(&self, theta: f64, u: f64) -> Point {
        let (h, h1, _) = self.support_fn(theta);
        let (s, c) = theta.sin_cos();
        let hu = h - u;
        [
            self.center[0] + hu * c - h1 * s,
            self.center[1] + hu * s + h1 * c,
        ]
    }

    /// Radius of curvature `h + h'' - u`.
    pub fn radius_of_curvature(&self, theta: f64, u: f64) -> f64 {
        let (h, _, h2) = self.support_fn(theta);
        h + h2 - u
    }

    /// Closed membership in the parallel body at depth `u`.
    pub fn contains_offset(&self, p: Point, u: f64) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        match &self.shape {
            Shape::Disk { r } => dx * dx + dy * dy <= (r - u) * (r - u) && r - u >= 0.0,
            Shape::Ellipse { a, b } if u == 0.0 => (dx / a).powi(2) + (dy / b).powi(2) <= 1.0,
            _ => {
                if dx == 0.0 && dy == 0.0 {
                    return true;
                }
                let q = self.radial_point(dy.atan2(dx), u);
                let (qx, qy) = (q[0] - self.center[0], q[1] - self.center[1]);
                dx * dx + dy * dy <= qx * qx + qy * qy
            }
        }
    }

    /// Boundary point of the parallel body in polar direction `phi` from the centre.
    fn radial_point(&self, phi: f64, u: f64) -> Point {
        // the polar angle of the boundary point increases with the normal angle,
        // and stays within pi/2 of it while the centre is interior
        let angle_off = |t: f64| {
            let q = self.boundary_point(t, u);
            let a = (q[1] - self.center[1]).atan2(q[0] - self.center[0]);
            wrap_pi(a - phi)
        };
        let (mut lo, mut hi) = (phi - 0.5 * PI, phi + 0.5 * PI);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if angle_off(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.boundary_point(0.5 * (lo + hi), u)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.contains_offset(p, 0.0)
    }

    /// Integer translates `m` for which `p + m` lies in the body.
    pub fn translates_containing(&self, p: Point) -> impl Iterator<Item = [i64; 2]> + '_ {
        let [x0, x1, y0, y1] = self.bbox;
        let m1 = (x0 - p[0]).ceil() as i64..=(x1 - p[0]).floor() as i64;
        let m2 = (y0 - p[1]).ceil() as i64..=(y1 - p[1]).floor() as i64;
        m1.flat_map(move |a| m2.clone().map(move |b| [a, b]))
            .filter(move |m| self.contains([p[0] + m[0] as f64, p[1] + m[1] as f64]))
    }

    /// Normal angles where the offset boundary meets the line `coord[axis] = v`.
    fn line_crossings(&self, axis: usize, v: f64, u: f64) -> Vec<f64> {
        let c = self.center[axis];
        if let Shape::Disk { r } = self.shape {
            let ru = r - u;
            let t = (v - c) / ru;
            if !(t > -1.0 && t < 1.0) {
                return Vec::new();
            }
            let a = t.acos();
            return if axis == 0 {
                vec![a, -a]
            } else {
                // sin(theta) = t
                let b = t.asin();
                vec![b, PI - b]
            };
        }
        // coordinate along `axis` as a function of theta, with extrema at
        // theta = peak (max) and peak + pi (min)
        let peak = if axis == 0 { 0.0 } else { 0.5 * PI };
        let coord = |t: f64| self.boundary_point(t, u)[axis];
        let (hi, lo) = (coord(peak), coord(peak + PI));
        if !(v > lo && v < hi) {
            return Vec::new();
        }
        let solve = |mut a: f64, mut b: f64, increasing: bool| {
            for _ in 0..64 {
                let m = 0.5 * (a + b);
                if (coord(m) < v) == increasing {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        vec![solve(peak, peak + PI, false), solve(peak - PI, peak, true)]
    }
}

fn wrap_pi(a: f64) -> f64 {
    let mut a = a % TAU;
    if a > PI {
        a -= TAU;
    } else if a < -PI {
        a += TAU;
    }
    a
}

fn maximize(f: impl Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> f64 {
    let step = (b - a) / samples as f64;
    let (mut best_t, mut best) = (a, f(a));
    for i in 1..=samples {
        let t = a + step * i as f64;
        let v = f(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let (mut lo, mut hi) = (best_t - step, best_t + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

/// Axis-aligned closed rectangle in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    pub fn new(lo: Point, hi: Point) -> Self {
        Self { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi[0] > self.lo[0] && self.hi[1] > self.lo[1])
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.lo[0] && p[0] <= self.hi[0] && p[1] >= self.lo[1] && p[1] <= self.hi[1]
    }

    pub fn translate(&self, m: [i64; 2]) -> Self {
        let d = [m[0] as f64, m[1] as f64];
        Self {
            lo: [self.lo[0] + d[0], self.lo[1] + d[1]],
            hi: [self.hi[0] + d[0], self.hi[1] + d[1]],
        }
    }

    /// Inner parallel rectangle at depth `u`.
    pub fn shrink(&self, u: f64) -> Self {
        Self {
            lo: [self.lo[0] + u, self.lo[1] + u],
            hi: [self.hi[0] - u, self.hi[1] - u],
        }
    }

    pub fn area(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
        }
    }
}

/// The anchored periodized rectangle `[0, s1] x [0, s2] + x + Z^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub s: [f64; 2],
    pub x: [f64; 2],
}

impl Window {
    /// Clamps the sides into `[S_MIN, S_MAX]` and reduces the anchor mod 1.
    pub fn new(s: [f64; 2], x: [f64; 2]) -> Self {
        let red = |v: f64| {
            let r = v.rem_euclid(1.0);
            if r >= 1.0 {
                0.0
            } else {
                r
            }
        };
        Self {
            s: [s[0].clamp(S_MIN, S_MAX), s[1].clamp(S_MIN, S_MAX)],
            x: [red(x[0]), red(x[1])],
        }
    }

    /// Nearly the whole cell, anchored at the origin.
    pub fn full() -> Self {
        Self::new([1.0, 1.0], [0.0, 0.0])
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x, [self.x[0] + self.s[0], self.x[1] + self.s[1]])
    }

    /// Closed periodized membership of a torus point.
    pub fn contains_torus(&self, t: Point) -> bool {
        (t[0] - self.x[0]).rem_euclid(1.0) <= self.s[0]
            && (t[1] - self.x[1]).rem_euclid(1.0) <= self.s[1]
    }

    /// Translates `m` with `(rect + m)` meeting the bounding box of `body`.
    pub fn candidate_translates(&self, body: &ConvexBody) -> Vec<[i64; 2]> {
        let [bx0, bx1, by0, by1] = body.bbox();
        let r = self.rect();
        let range = |lo: f64, hi: f64, b0: f64, b1: f64| {
            let first = (b0 - hi).floor() as i64;
            let last = (b1 - lo).ceil() as i64;
            first..=last
        };
        let mut out = Vec::new();
        for m1 in range(r.lo[0], r.hi[0], bx0, bx1) {
            for m2 in range(r.lo[1], r.hi[1], by0, by1) {
                let t = r.translate([m1, m2]);
                if t.hi[0] > bx0 && t.lo[0] < bx1 && t.hi[1] > by0 && t.lo[1] < by1 {
                    out.push([m1, m2]);
                }
            }
        }
        out
    }
}

/// One smooth piece of a closed, counter-clockwise boundary curve.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryPiece {
    /// Arc of the parallel body at depth `offset`, normal angles `theta[0]..theta[1]`.
    BodyArc {
        body: Arc<ConvexBody>,
        offset: f64,
        theta: [f64; 2],
    },
    Segment {
        from: Point,
        to: Point,
    },
    /// Circular arc around a vertex, normal angles `theta[0]..theta[1]`.
    CornerArc {
        center: Point,
        radius: f64,
        theta: [f64; 2],
    },
}

impl BoundaryPiece {
    pub fn start(&self) -> Point {
        self.point_at_param(0.0)
    }

    pub fn end(&self) -> Point {
        self.point_at_param(1.0)
    }

    /// Point at fraction `t` of the parameter range (not arclength).
    pub fn point_at_param(&self, t: f64) -> Point {
        match self {
            BoundaryPiece::BodyArc { body, offset, theta } => {
                body.boundary_point(theta[0] + t * (theta[1] - theta[0]), *offset)
            }
            BoundaryPiece::Segment { from, to } => {
                [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])]
            }
            BoundaryPiece::CornerArc { center, radius, theta } => {
                let a = theta[0] + t * (theta[1] - theta[0]);
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
        }
    }

    /// Outward normal angle at the start.
    pub fn start_normal(&self) -> f64 {
        match self {
            BoundaryPiece::BodyArc { theta, .. } | BoundaryPiece::CornerArc { theta, .. } => theta[0],
            BoundaryPiece::Segment { from, to } => segment_normal(*from, *to),
        }
    }

    pub fn end_normal(&self) -> f64 {
        match self {
            BoundaryPiece::BodyArc { theta, .. } | BoundaryPiece::CornerArc { theta, .. } => theta[1],
            BoundaryPiece::Segment { from, to } => segment_normal(*from, *to),
        }
    }

    pub fn is_segment(&self) -> bool {
        matches!(self, BoundaryPiece::Segment { .. })
    }

    pub fn is_axis_parallel(&self) -> bool {
        match self {
            BoundaryPiece::Segment { from, to } => from[0] == to[0] || from[1] == to[1],
            _ => false,
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            BoundaryPiece::BodyArc { body, offset, theta } => {
                if let Some(r) = body.disk_radius() {
                    return (r - offset) * (theta[1] - theta[0]);
                }
                gl_real(theta[0], theta[1], arc_panels(theta), |t| {
                    body.radius_of_curvature(t, *offset)
                })
            }
            BoundaryPiece::Segment { from, to } => (to[0] - from[0]).hypot(to[1] - from[1]),
            BoundaryPiece::CornerArc { radius, theta, .. } => radius * (theta[1] - theta[0]),
        }
    }

    /// Curvature at parameter fraction `t` (0 on segments).
    pub fn curvature_at(&self, t: f64) -> f64 {
        match self {
            BoundaryPiece::BodyArc { body, offset, theta } => {
                1.0 / body.radius_of_curvature(theta[0] + t * (theta[1] - theta[0]), *offset)
            }
            BoundaryPiece::Segment { .. } => 0.0,
            BoundaryPiece::CornerArc { radius, .. } => 1.0 / radius,
        }
    }

    /// `(1/2) * integral of (x dy - y dx)` along the piece.
    fn green_term(&self) -> f64 {
        match self {
            BoundaryPiece::Segment { from, to } => 0.5 * (from[0] * to[1] - from[1] * to[0]),
            BoundaryPiece::CornerArc { center, radius, theta } => {
                let r = *radius;
                let [t0, t1] = *theta;
                0.5 * r
                    * (center[0] * (t1.sin() - t0.sin()) - center[1] * (t1.cos() - t0.cos())
                        + r * (t1 - t0))
            }
            BoundaryPiece::BodyArc { body, offset, theta } => {
                let c = body.center();
                let f = |t: f64| {
                    let (h, _, h2) = body.support_fn(t);
                    let (s, co) = t.sin_cos();
                    0.5 * (h + h2 - offset) * (c[0] * co + c[1] * s + h - offset)
                };
                adaptive_real(theta[0], theta[1], arc_panels(theta), 1e-14, f)
                    .map(|(v, _)| v)
                    .unwrap_or_else(|_| gl_real(theta[0], theta[1], 4096, f))
            }
        }
    }

    /// Euclidean distance from `p` to the piece.
    pub fn distance(&self, p: Point) -> f64 {
        match self {
            BoundaryPiece::Segment { from, to } => {
                let d = [to[0] - from[0], to[1] - from[1]];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let t = if len2 > 0.0 {
                    (((p[0] - from[0]) * d[0] + (p[1] - from[1]) * d[1]) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                (p[0] - from[0] - t * d[0]).hypot(p[1] - from[1] - t * d[1])
            }
            BoundaryPiece::CornerArc { center, radius, theta } => {
                circle_arc_distance(*center, *radius, *theta, p)
            }
            BoundaryPiece::BodyArc { body, offset, theta } => {
                if let Some(r) = body.disk_radius() {
                    return circle_arc_distance(body.center(), r - offset, *theta, p);
                }
                let d2 = |t: f64| {
                    let q = body.boundary_point(t, *offset);
                    (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
                };
                let n = 256;
                let step = (theta[1] - theta[0]) / n as f64;
                let (mut best_i, mut best) = (0usize, d2(theta[0]));
                for i in 1..=n {
                    let v = d2(theta[0] + step * i as f64);
                    if v < best {
                        best = v;
                        best_i = i;
                    }
                }
                let c = theta[0] + step * best_i as f64;
                let (mut lo, mut hi) = ((c - step).max(theta[0]), (c + step).min(theta[1]));
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..80 {
                    let m1 = hi - g * (hi - lo);
                    let m2 = lo + g * (hi - lo);
                    if d2(m1) < d2(m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                best.min(d2(0.5 * (lo + hi))).sqrt()
            }
        }
    }
}

fn arc_panels(theta: &[f64; 2]) -> usize {
    ((theta[1] - theta[0]).abs() * 2.0).ceil().max(1.0) as usize
}

fn segment_normal(from: Point, to: Point) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0]) - 0.5 * PI
}

fn circle_arc_distance(center: Point, r: f64, theta: [f64; 2], p: Point) -> f64 {
    let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
    let rho = dx.hypot(dy);
    let a = dy.atan2(dx);
    let rel = (a - theta[0]).rem_euclid(TAU);
    if rho > 0.0 && rel <= theta[1] - theta[0] {
        return (rho - r).abs();
    }
    let end = |t: f64| (center[0] + r * t.cos() - p[0]).hypot(center[1] + r * t.sin() - p[1]);
    if rho == 0.0 {
        return r;
    }
    end(theta[0]).min(end(theta[1]))
}

/// `K = (rect + translate) ∩ body` with its counter-clockwise boundary.
#[derive(Clone, Debug)]
pub struct ClippedPiece {
    pub translate: [i64; 2],
    pub body: Arc<ConvexBody>,
    /// Depth of the parallel body (0 for the body itself).
    pub offset: f64,
    /// Already translated.
    pub rect: Rect,
    pub boundary: Vec<BoundaryPiece>,
}

impl ClippedPiece {
    pub fn contains(&self, p: Point) -> bool {
        self.rect.contains(p) && self.body.contains_offset(p, self.offset)
    }

    pub fn area(&self) -> f64 {
        self.boundary.iter().map(BoundaryPiece::green_term).sum()
    }

    pub fn arc_count(&self) -> usize {
        self.boundary.iter().filter(|p| !p.is_segment()).count()
    }

    pub fn segment_count(&self) -> usize {
        self.boundary.iter().filter(|p| p.is_segment()).count()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary.iter().map(BoundaryPiece::length).sum()
    }
}

/// Boundary of `rect ∩ body_u`, ordered counter-clockwise; empty when the
/// intersection has no interior.
pub fn clip_boundary(body: &Arc<ConvexBody>, offset: f64, rect: Rect) -> Vec<BoundaryPiece> {
    if rect.is_empty() {
        return Vec::new();
    }
    let lines = [
        (0, rect.lo[0]),
        (0, rect.hi[0]),
        (1, rect.lo[1]),
        (1, rect.hi[1]),
    ];
    let crossings: Vec<Vec<f64>> = lines
        .iter()
        .map(|&(axis, v)| body.line_crossings(axis, v, offset))
        .collect();

    let mut cuts: Vec<f64> = crossings.iter().flatten().map(|t| t.rem_euclid(TAU)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut pieces = Vec::new();
    let arc = |t0: f64, t1: f64| BoundaryPiece::BodyArc {
        body: Arc::clone(body),
        offset,
        theta: [t0, t1],
    };
    if cuts.is_empty() {
        if rect.contains(body.boundary_point(0.0, offset)) {
            pieces.push(arc(0.0, TAU));
        }
    } else {
        let n = cuts.len();
        let mut kept: Vec<[f64; 2]> = Vec::new();
        for i in 0..n {
            let t0 = cuts[i];
            let t1 = if i + 1 < n { cuts[i + 1] } else { cuts[0] + TAU };
            if t1 - t0 < 1e-14 {
                continue;
            }
            if rect.contains(body.boundary_point(0.5 * (t0 + t1), offset)) {
                kept.push([t0, t1]);
            }
        }
        // join an arc running through the wrap point with its continuation
        if kept.len() >= 2 {
            let last = kept[kept.len() - 1];
            if (last[1] - TAU - kept[0][0]).abs() < 1e-15 {
                kept[0] = [last[0] - TAU, kept[0][1]];
                kept.pop();
            }
        }
        pieces.extend(kept.into_iter().map(|[a, b]| arc(a, b)));
    }

    // edges in counter-clockwise order: bottom, right, top, left
    let [x0, y0] = rect.lo;
    let [x1, y1] = rect.hi;
    let edges = [
        (2usize, [x0, y0], [x1, y0]),
        (1, [x1, y0], [x1, y1]),
        (3, [x1, y1], [x0, y1]),
        (0, [x0, y1], [x0, y0]),
    ];
    for (line, from, to) in edges {
        let ts = &crossings[line];
        if ts.len() < 2 {
            continue;
        }
        // the coordinate that varies along this edge
        let axis = 1 - lines[line].0;
        let a = body.boundary_point(ts[0], offset)[axis];
        let b = body.boundary_point(ts[1], offset)[axis];
        let (clo, chi) = (a.min(b), a.max(b));
        let (elo, ehi) = (from[axis].min(to[axis]), from[axis].max(to[axis]));
        let (lo, hi) = (clo.max(elo), chi.min(ehi));
        if hi - lo <= 1e-15 {
            continue;
        }
        let forward = to[axis] > from[axis];
        let (s, e) = if forward { (lo, hi) } else { (hi, lo) };
        let mut p = from;
        let mut q = to;
        p[axis] = s;
        q[axis] = e;
        pieces.push(BoundaryPiece::Segment { from: p, to: q });
    }
    order_loop(pieces)
}

/// Chains pieces end-to-start into one counter-clockwise loop.
fn order_loop(mut pieces: Vec<BoundaryPiece>) -> Vec<BoundaryPiece> {
    if pieces.len() <= 1 {
        return pieces;
    }
    let mut out = Vec::with_capacity(pieces.len());
    out.push(pieces.remove(0));
    while !pieces.is_empty() {
        let end = out.last().unwrap().end();
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let s = p.start();
                (i, (s[0] - end[0]).hypot(s[1] - end[1]))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        out.push(pieces.remove(idx));
    }
    out
}

/// Largest gap between consecutive pieces (including the wrap-around).
pub fn closure_gap(pieces: &[BoundaryPiece]) -> f64 {
    let n = pieces.len();
    (0..n)
        .map(|i| {
            let e = pieces[i].end();
            let s = pieces[(i + 1) % n].start();
            (e[0] - s[0]).hypot(e[1] - s[1])
        })
        .fold(0.0, f64::max)
}

/// All nonempty `K_i = (rect + x + m_i) ∩ body` for the periodized window.
pub fn decompose_intersection(body: &Arc<ConvexBody>, window: &Window) -> Vec<ClippedPiece> {
    let base = window.rect();
    window
        .candidate_translates(body)
        .into_iter()
        .filter_map(|m| {
            let rect = base.translate(m);
            let boundary = clip_boundary(body, 0.0, rect);
            (!boundary.is_empty()).then(|| ClippedPiece {
                translate: m,
                body: Arc::clone(body),
                offset: 0.0,
                rect,
                boundary,
            })
        })
        .collect()
}

/// `|I(s, x) ∩ body|`.
pub fn clip_area(body: &ConvexBody, window: &Window) -> f64 {
    let base = window.rect();
    window
        .candidate_translates(body)
        .into_iter()
        .map(|m| rect_area(body, &base.translate(m)))
        .sum()
}

/// `|rect ∩ body|` for a rectangle in the plane.
pub fn rect_area(body: &ConvexBody, rect: &Rect) -> f64 {
    if rect.is_empty() {
        return 0.0;
    }
    let [cx, cy] = body.center;
    match &body.shape {
        Shape::Disk { r } => disk_rect_area(*r, rect.lo[0] - cx, rect.hi[0] - cx, rect.lo[1] - cy, rect.hi[1] - cy),
        Shape::Ellipse { a, b } => {
            // (x, y) -> (x b / a, y) maps the ellipse onto a disk of radius b
            let k = b / a;
            disk_rect_area(
                *b,
                (rect.lo[0] - cx) * k,
                (rect.hi[0] - cx) * k,
                rect.lo[1] - cy,
                rect.hi[1] - cy,
            ) / k
        }
        Shape::Support { .. } => {
            let [bx0, bx1, by0, by1] = body.bbox;
            if rect.hi[0] <= bx0 || rect.lo[0] >= bx1 || rect.hi[1] <= by0 || rect.lo[1] >= by1 {
                return 0.0;
            }
            let body = Arc::new(body.clone());
            clip_boundary(&body, 0.0, *rect)
                .iter()
                .map(BoundaryPiece::green_term)
                .sum::<f64>()
                .max(0.0)
        }
    }
}

fn disk_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let g = |x: f64, y: f64| disk_quadrant_area(r, x, y);
    (g(x1, y1) - g(x0, y1) - g(x1, y0) + g(x0, y0)).max(0.0)
}

/// Area of `{X <= x, Y <= y}` inside the origin-centred disk of radius `r`.
fn disk_quadrant_area(r: f64, x: f64, y: f64) -> f64 {
    if x <= -r || y <= -r {
        return 0.0;
    }
    let x = x.min(r);
    let y = y.min(r);
    let prim = |t: f64| {
        let t = t.clamp(-r, r);
        0.5 * (t * (r * r - t * t).max(0.0).sqrt() + r * r * (t / r).clamp(-1.0, 1.0).asin())
    };
    let chord = |a: f64, b: f64| if b > a { prim(b) - prim(a) } else { 0.0 };
    let ty = (r * r - y * y).max(0.0).sqrt();
    let lo = (-ty).min(x);
    let hi = ty.min(x);
    let middle = y * (hi - lo).max(0.0) + chord(lo, hi);
    if y >= 0.0 {
        2.0 * chord(-r, lo) + middle + 2.0 * chord(ty, x)
    } else {
        middle
    }
}

/// `delta_K(p)`: positive inside, negative outside.
pub fn signed_distance(piece: &ClippedPiece, p: Point) -> f64 {
    let d = piece
        .boundary
        .iter()
        .map(|b| b.distance(p))
        .fold(f64::INFINITY, f64::min);
    if piece.contains(p) {
        d
    } else {
        -d
    }
}

/// Boundary of the level set `{delta_K = u}`.
///
/// Inner levels are `body_u ∩ rect_u`; outer levels offset every piece
/// outward and round each vertex with a circular arc of radius `|u|`.
pub fn level_boundary(piece: &ClippedPiece, u: f64) -> Result<Vec<BoundaryPiece>> {
    let limit = 0.5 / piece.body.kappa_max();
    if !(u.abs() < limit) {
        return Err(Error::Precondition(format!(
            "|u| = {} must be below 1/(2 kappa_max) = {limit}",
            u.abs()
        )));
    }
    if u == 0.0 {
        return Ok(piece.boundary.clone());
    }
    if u > 0.0 {
        return Ok(clip_boundary(&piece.body, piece.offset + u, piece.rect.shrink(u)));
    }
    let w = -u;
    let n = piece.boundary.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let cur = &piece.boundary[i];
        out.push(match cur {
            BoundaryPiece::BodyArc { body, offset, theta } => BoundaryPiece::BodyArc {
                body: Arc::clone(body),
                offset: offset - w,
                theta: *theta,
            },
            BoundaryPiece::Segment { from, to } => {
                let nu = cur.start_normal();
                let d = [w * nu.cos(), w * nu.sin()];
                BoundaryPiece::Segment {
                    from: [from[0] + d[0], from[1] + d[1]],
                    to: [to[0] + d[0], to[1] + d[1]],
                }
            }
            BoundaryPiece::CornerArc { center, radius, theta } => BoundaryPiece::CornerArc {
                center: *center,
                radius: radius + w,
                theta: *theta,
            },
        });
        let next = &piece.boundary[(i + 1) % n];
        let a0 = cur.end_normal();
        let jump = (next.start_normal() - a0).rem_euclid(TAU);
        if jump > 1e-12 && jump < TAU - 1e-12 {
            out.push(BoundaryPiece::CornerArc {
                center: cur.end(),
                radius: w,
                theta: [a0, a0 + jump],
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disk() -> Arc<ConvexBody> {
        Arc::new(ConvexBody::disk([0.5, 0.5], 0.25).unwrap())
    }

    // chord-length integral with a plain composite Simpson rule
    fn oracle_disk_rect(c: Point, r: f64, rect: Rect) -> f64 {
        let n = 200_000;
        let (a, b) = (rect.lo[0].max(c[0] - r), rect.hi[0].min(c[0] + r));
        if b <= a {
            return 0.0;
        }
        let h = (b - a) / n as f64;
        let len = |x: f64| {
            let w = (r * r - (x - c[0]).powi(2)).max(0.0).sqrt();
            ((c[1] + w).min(rect.hi[1]) - (c[1] - w).max(rect.lo[1])).max(0.0)
        };
        let mut s = len(a) + len(b);
        for i in 1..n {
            s += len(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn membership_examples() {
        let d = disk();
        assert!(d.contains([0.5, 0.5]));
        assert!(d.contains([0.75, 0.5]));
        assert!(!d.contains([0.76, 0.5]));
    }

    #[test]
    fn support_and_ellipse_membership() {
        let e = ConvexBody::ellipse([0.5, 0.5], 0.3, 0.2).unwrap();
        assert!(e.contains([0.79, 0.5]) && !e.contains([0.5, 0.71]));
        let s = ConvexBody::support([0.5, 0.5], vec![0.25]).unwrap();
        assert!(s.contains([0.7499, 0.5]) && !s.contains([0.5, 0.7501]));
        let t = ConvexBody::support([0.5, 0.5], vec![0.25, 0.0, 0.02]).unwrap();
        // h(0) = 0.27, h(pi/2) = 0.23
        assert!(t.contains([0.769, 0.5]) && !t.contains([0.771, 0.5]));
        assert!(t.contains([0.5, 0.729]) && !t.contains([0.5, 0.731]));
    }

    #[test]
    fn cached_quantities() {
        let e = ConvexBody::ellipse([0.0, 0.0], 0.3, 0.2).unwrap();
        assert!((e.kappa_min() - 0.2 / 0.09).abs() < 1e-12);
        assert!((e.kappa_max() - 0.3 / 0.04).abs() < 1e-12);
        // Ramanujan's approximation is accurate to ~1e-10 at this eccentricity
        let (a, b) = (0.3f64, 0.2f64);
        let hh = ((a - b) / (a + b)).powi(2);
        let ram = PI * (a + b) * (1.0 + 3.0 * hh / (10.0 + (4.0 - 3.0 * hh).sqrt()));
        assert!((e.perimeter() - ram).abs() < 1e-8);
        let s = ConvexBody::support([0.0, 0.0], vec![0.25, 0.0, 0.02]).unwrap();
        assert!((s.diameter() - 0.54).abs() < 1e-12);
        assert!((s.kappa_max() - 1.0 / 0.19).abs() < 2e-3);
        assert!(ConvexBody::support([0.0, 0.0], vec![0.25, 0.0, 0.1]).is_err());
        assert!(ConvexBody::disk([0.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn body_config_round_trip() {
        let text = r#"body = { kind = "disk", center = [0.5, 0.5], radius = 0.25 }"#;
        #[derive(Deserialize)]
        struct Wrap {
            body: ConvexBody,
        }
        let w: Wrap = toml::from_str(text).unwrap();
        assert_eq!(w.body, *disk());
        let text = r#"body = { kind = "support", center = [0.5, 0.5], coeffs = [0.25, 0.0, 0.02] }"#;
        let w: Wrap = toml::from_str(text).unwrap();
        assert!((w.body.area() - (PI * 0.0625 - 1.5 * PI * 0.0004)).abs() < 1e-15);
        let bad = r#"body = { kind = "disk", center = [0.5, 0.5], radius = 0.0 }"#;
        assert!(toml::from_str::<Wrap>(bad).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let d = disk();
        let full = decompose_intersection(&d, &Window::new([1.0, 1.0], [0.0, 0.0]));
        assert_eq!(full.len(), 1);
        assert_eq!((full[0].arc_count(), full[0].segment_count()), (1, 0));

        let half = decompose_intersection(&d, &Window::new([0.5, 1.0], [0.0, 0.0]));
        assert_eq!(half.len(), 1);
        assert_eq!((half[0].arc_count(), half[0].segment_count()), (1, 1));
        assert!(half[0].boundary.iter().any(|p| p.is_segment() && p.is_axis_parallel()));

        // a window straddling the cell corner swallows the whole origin disk
        let corner = Arc::new(ConvexBody::disk([0.0, 0.0], 0.25).unwrap());
        let w = Window::new([0.5, 0.5], [0.75, 0.75]);
        let pieces = decompose_intersection(&corner, &w);
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].translate, [-1, -1]);
        assert!((pieces[0].area() - PI / 16.0).abs() < 1e-12);

        // four quarter-size windows around the origin give the four quarters
        for x in [[0.0, 0.0], [0.75, 0.0], [0.0, 0.75], [0.75, 0.75]] {
            let p = decompose_intersection(&corner, &Window::new([0.25, 0.25], x));
            assert_eq!(p.len(), 1);
            assert_eq!((p[0].arc_count(), p[0].segment_count()), (1, 2));
            assert!((p[0].area() - PI / 64.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundaries_close() {
        let bodies = [
            disk(),
            Arc::new(ConvexBody::ellipse([0.4, 0.6], 0.3, 0.2).unwrap()),
            Arc::new(ConvexBody::support([0.5, 0.5], vec![0.3, 0.0, 0.02, 0.005]).unwrap()),
        ];
        for body in &bodies {
            for (s, x) in [
                ([0.3, 0.7], [0.1, 0.55]),
                ([0.9, 0.2], [0.6, 0.3]),
                ([0.35, 0.35], [0.45, 0.45]),
                ([0.999, 0.999], [0.0, 0.0]),
            ] {
                for k in decompose_intersection(body, &Window::new(s, x)) {
                    assert!(closure_gap(&k.boundary) < 1e-12, "{:?}", k.boundary);
                    assert!(k.arc_count() <= 4 && k.segment_count() <= 4);
                }
            }
        }
    }

    #[test]
    fn area_examples() {
        let d = disk();
        let eps = 1e-12;
        let a = clip_area(&d, &Window::new([1.0 - eps, 1.0 - eps], [0.0, 0.0]));
        assert!((a - PI / 16.0).abs() < 1e-12);
        let a = clip_area(&d, &Window::new([0.5, 1.0 - eps], [0.0, 0.0]));
        assert!((a - PI / 32.0).abs() < 1e-12);
        let a = clip_area(&d, &Window::new([0.5, 0.5], [0.0, 0.0]));
        assert!((a - PI / 64.0).abs() < 1e-12);
    }

    #[test]
    fn disk_area_against_chord_oracle() {
        let c = [0.5, 0.5];
        let d = ConvexBody::disk(c, 0.35).unwrap();
        for rect in [
            Rect::new([0.2, 0.1], [0.6, 0.55]),
            Rect::new([0.7, 0.7], [1.2, 0.9]),
            Rect::new([0.16, 0.16], [0.84, 0.84]),
            Rect::new([0.4, 0.0], [0.45, 1.0]),
        ] {
            let want = oracle_disk_rect(c, 0.35, rect);
            assert!((rect_area(&d, &rect) - want).abs() < 1e-11, "{rect:?}");
        }
    }

    #[test]
    fn green_path_matches_closed_forms() {
        let support_disk = ConvexBody::support([0.5, 0.5], vec![0.35]).unwrap();
        let d = ConvexBody::disk([0.5, 0.5], 0.35).unwrap();
        let e = ConvexBody::ellipse([0.45, 0.5], 0.3, 0.2).unwrap();
        let arc_e = Arc::new(e.clone());
        for (s, x) in [([0.3, 0.7], [0.1, 0.55]), ([0.9, 0.2], [0.6, 0.3]), ([0.4, 0.4], [0.4, 0.4])] {
            let w = Window::new(s, x);
            let closed = clip_area(&d, &w);
            assert!((clip_area(&support_disk, &w) - closed).abs() < 1e-12);
            let green: f64 = decompose_intersection(&arc_e, &w).iter().map(ClippedPiece::area).sum();
            assert!((green - clip_area(&e, &w)).abs() < 1e-12);
        }
    }

    #[test]
    fn full_window_recovers_body_area() {
        let e = ConvexBody::ellipse([0.5, 0.5], 0.3, 0.2).unwrap();
        assert!((clip_area(&e, &Window::full()) - PI * 0.06).abs() < 1e-9);
        let s = ConvexBody::support([0.5, 0.5], vec![0.3, 0.0, 0.02, 0.005]).unwrap();
        assert!((clip_area(&s, &Window::full()) - s.area()).abs() < 1e-9);
    }

    #[test]
    fn signed_distance_examples() {
        let d = disk();
        let full = &decompose_intersection(&d, &Window::full())[0];
        assert!((signed_distance(full, [0.5, 0.5]) - 0.25).abs() < 1e-15);
        assert!((signed_distance(full, [1.0, 0.5]) + 0.25).abs() < 1e-15);

        let big = Arc::new(ConvexBody::disk([0.5, 0.5], 0.4).unwrap());
        let q = &decompose_intersection(&big, &Window::new([0.5, 0.5], [0.5, 0.5]))[0];
        assert!((signed_distance(q, [0.6, 0.6]) - 0.1).abs() < 1e-14);
    }

    #[test]
    fn level_sets_of_disk() {
        let d = disk();
        let full = &decompose_intersection(&d, &Window::full())[0];
        let inner = level_boundary(full, 0.1).unwrap();
        assert_eq!(inner.len(), 1);
        assert!((inner[0].curvature_at(0.3) - 4.0 / (1.0 - 0.1 * 4.0)).abs() < 1e-10);
        assert!((inner[0].length() - TAU * 0.15).abs() < 1e-12);
        let outer = level_boundary(full, -0.1).unwrap();
        assert!((outer[0].curvature_at(0.7) - 4.0 / 1.4).abs() < 1e-10);
        assert!(level_boundary(full, 0.2).is_err());

        // u then -u returns to the original curvature
        let k_in = ClippedPiece {
            boundary: inner,
            offset: 0.1,
            ..full.clone()
        };
        let back = level_boundary(&k_in, -0.1).unwrap();
        assert!((back[0].curvature_at(0.5) - 4.0).abs() < 1e-10);
    }

    #[test]
    fn outer_level_rounds_corners() {
        // rectangle corners outside the disk: 4 arcs, 4 segments, 8 vertices
        let d = Arc::new(ConvexBody::disk([0.5, 0.5], 0.5).unwrap());
        let w = Window::new([0.8, 0.8], [0.1, 0.1]);
        let k = &decompose_intersection(&d, &w)[0];
        assert_eq!((k.arc_count(), k.segment_count()), (4, 4));
        let lvl = level_boundary(k, -0.05).unwrap();
        let corners = lvl
            .iter()
            .filter(|p| matches!(p, BoundaryPiece::CornerArc { radius, .. } if (*radius - 0.05).abs() < 1e-15))
            .count();
        assert_eq!(corners, 8);
        assert!(closure_gap(&lvl) < 1e-12);

        // rectangle inside a larger disk: 4 segments and 4 corner arcs
        let big = Arc::new(ConvexBody::disk([0.5, 0.5], 0.6).unwrap());
        let k = &decompose_intersection(&big, &w)[0];
        assert_eq!((k.arc_count(), k.segment_count()), (0, 4));
        let lvl = level_boundary(k, -0.05).unwrap();
        assert_eq!(lvl.len(), 8);
        assert!(closure_gap(&lvl) < 1e-12);
        let len: f64 = lvl.iter().map(BoundaryPiece::length).sum();
        assert!((len - (4.0 * 0.8 + TAU * 0.05)).abs() < 1e-12);
    }

    #[test]
    fn level_set_perimeter_matches_steiner() {
        let e = Arc::new(ConvexBody::ellipse([0.5, 0.5], 0.3, 0.25).unwrap());
        let w = Window::new([0.35, 0.5], [0.3, 0.2]);
        let k = &decompose_intersection(&e, &w)[0];
        let p0 = k.perimeter();
        let lvl = level_boundary(k, -0.03).unwrap();
        let len: f64 = lvl.iter().map(BoundaryPiece::length).sum();
        assert!((len - (p0 + TAU * 0.03)).abs() < 1e-10);
        assert!(closure_gap(&lvl) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn area_monotone_in_sides(s1 in 0.01f64..0.9, s2 in 0.01f64..0.9, d1 in 0.0f64..0.09,
                                  d2 in 0.0f64..0.09, x1 in 0.0f64..1.0, x2 in 0.0f64..1.0) {
            let b = ConvexBody::support([0.5, 0.5], vec![0.3, 0.0, 0.02]).unwrap();
            let a = clip_area(&b, &Window::new([s1, s2], [x1, x2]));
            let bigger = clip_area(&b, &Window::new([s1 + d1, s2 + d2], [x1, x2]));
            prop_assert!(bigger >= a - 1e-12);
        }

        #[test]
        fn area_lipschitz_in_anchor(s1 in 0.01f64..0.99, s2 in 0.01f64..0.99, x1 in 0.0f64..1.0,
                                    x2 in 0.0f64..1.0, e1 in -0.05f64..0.05, e2 in -0.05f64..0.05) {
            let b = ConvexBody::disk([0.5, 0.5], 0.35).unwrap();
            let a = clip_area(&b, &Window::new([s1, s2], [x1, x2]));
            let c = clip_area(&b, &Window::new([s1, s2], [x1 + e1, x2 + e2]));
            let lip = 2.0 * (s1 + s2) + b.perimeter();
            prop_assert!((a - c).abs() <= lip * e1.abs().max(e2.abs()) + 1e-12);
        }

        #[test]
        fn signed_distance_is_1_lipschitz(px in 0.0f64..1.0, py in 0.0f64..1.0,
                                          qx in 0.0f64..1.0, qy in 0.0f64..1.0) {
            let b = Arc::new(ConvexBody::ellipse([0.5, 0.5], 0.3, 0.2).unwrap());
            let k = &decompose_intersection(&b, &Window::new([0.4, 0.6], [0.35, 0.2]))[0];
            let dp = signed_distance(k, [px, py]);
            let dq = signed_distance(k, [qx, qy]);
            prop_assert!((dp - dq).abs() <= (px - qx).hypot(py - qy) + 1e-9);
        }
    }
}
