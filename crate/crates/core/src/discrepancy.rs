//! Discrepancy of a point set against periodized windows intersected with a
//! convex body:
//!
//! `D = sup_{s, x} | (1/N) sum_j sum_m chi_{I(s,x) ∩ body}(t(j) + m) - |I(s,x) ∩ body| |`.
//!
//! A point `t` counts once for every translate `t + m` inside the body, and
//! `t + m` lies in `I(s, x)` exactly when `t` does, so the count term reduces
//! to multiplicities times periodized-window membership.

use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diophantine::{exp_sum_abs, theta_angle};
use crate::error::{Error, Result};
use crate::fourier::{chi_hat_piece, frequencies_in_disk, h_hat, EtKernelConfig};
use crate::geometry::{clip_area, decompose_intersection, ConvexBody, Point, Window, S_MAX, S_MIN};
use crate::sequences::{KroneckerSpec, PointSet};

/// Candidates kept per grid level.
pub const TOP_B: usize = 32;

/// Largest point count accepted by [`sup_oracle_small_n`].
pub const ORACLE_MAX_N: usize = 128;

/// Offset used to step just past a point coordinate.
pub const NUDGE: f64 = 1e-12;

const BACKGROUND: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    GridRefine,
    CriticalEnum,
}

impl SearchMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            SearchMethod::GridRefine => "grid_refine",
            SearchMethod::CriticalEnum => "critical_enum",
        }
    }
}

/// The best window found; `value` is a lower bound on the supremum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyEstimate {
    pub value: f64,
    /// Signed local discrepancy at `arg_window`.
    pub signed: f64,
    pub arg_window: Window,
    pub method: SearchMethod,
    pub grid_size: usize,
    pub refinement_depth: usize,
    pub evaluations: u64,
    /// Bound on `sup - value` where one is available (oracle only).
    pub slack: Option<f64>,
}

/// Effective points: torus coordinates repeated by their body multiplicity.
#[derive(Clone, Debug)]
pub struct Evaluator {
    body: ConvexBody,
    eff: Vec<Point>,
    n: usize,
}

impl Evaluator {
    pub fn new(points: &PointSet, body: &ConvexBody) -> Self {
        let eff = points
            .coords()
            .iter()
            .flat_map(|&t| std::iter::repeat(t).take(body.translates_containing(t).count()))
            .collect();
        Self {
            body: body.clone(),
            eff,
            n: points.len(),
        }
    }

    pub fn effective_points(&self) -> &[Point] {
        &self.eff
    }

    pub fn count(&self, w: &Window) -> usize {
        self.eff.iter().filter(|&&t| w.contains_torus(t)).count()
    }

    /// Signed local discrepancy.
    pub fn local(&self, w: &Window) -> f64 {
        self.count(w) as f64 / self.n as f64 - clip_area(&self.body, w)
    }

    /// Shrinks (positive) or expands (negative) the window to the point
    /// coordinates that bound it; the count is unchanged and `|local|` can only grow
    /// up to floating-point ties.
    fn snap(&self, w: &Window, positive: bool) -> Window {
        if positive {
            let inside: Vec<Point> = self.eff.iter().copied().filter(|&t| w.contains_torus(t)).collect();
            if inside.is_empty() {
                return *w;
            }
            let mut x = w.x;
            let mut s = w.s;
            for ax in 0..2 {
                let rel = |t: &Point| (t[ax] - w.x[ax]).rem_euclid(1.0);
                let lo = inside.iter().min_by(|a, b| rel(a).total_cmp(&rel(b))).unwrap();
                let hi = inside.iter().max_by(|a, b| rel(a).total_cmp(&rel(b))).unwrap();
                x[ax] = lo[ax];
                s[ax] = (hi[ax] - lo[ax]).rem_euclid(1.0);
            }
            Window::new(s, x)
        } else {
            let mut cur = *w;
            for ax in 0..2 {
                let other = 1 - ax;
                let blocking: Vec<Point> = self
                    .eff
                    .iter()
                    .copied()
                    .filter(|t| {
                        (t[other] - cur.x[other]).rem_euclid(1.0) <= cur.s[other]
                            && (t[ax] - cur.x[ax]).rem_euclid(1.0) > cur.s[ax]
                    })
                    .collect();
                if blocking.is_empty() {
                    let mut s = cur.s;
                    s[ax] = S_MAX;
                    cur = Window::new(s, cur.x);
                    continue;
                }
                let right_edge = cur.x[ax] + cur.s[ax];
                let left = blocking
                    .iter()
                    .min_by(|a, b| {
                        (cur.x[ax] - a[ax]).rem_euclid(1.0).total_cmp(&(cur.x[ax] - b[ax]).rem_euclid(1.0))
                    })
                    .unwrap()[ax]
                    + NUDGE;
                let right = blocking
                    .iter()
                    .min_by(|a, b| {
                        (a[ax] - right_edge).rem_euclid(1.0).total_cmp(&(b[ax] - right_edge).rem_euclid(1.0))
                    })
                    .unwrap()[ax]
                    - NUDGE;
                let mut s = cur.s;
                let mut x = cur.x;
                s[ax] = (right - left).rem_euclid(1.0);
                x[ax] = left;
                cur = Window::new(s, x);
            }
            cur
        }
    }
}

/// `(1/N) sum_j sum_m chi_{I(s,x) ∩ body}(t(j) + m) - |I(s,x) ∩ body|`.
pub fn local_discrepancy(points: &PointSet, body: &ConvexBody, window: &Window) -> f64 {
    let count: usize = points
        .coords()
        .iter()
        .filter(|&&t| window.contains_torus(t))
        .map(|&t| body.translates_containing(t).count())
        .sum();
    count as f64 / points.len() as f64 - clip_area(body, window)
}

#[derive(Clone, Copy, Debug)]
struct Scored {
    abs: f64,
    idx: u64,
}

fn by_score(a: &Scored, b: &Scored) -> Ordering {
    b.abs.total_cmp(&a.abs).then(a.idx.cmp(&b.idx))
}

/// Grid levels `8, 16, ...` up to `g`; `g` itself is always the last level.
fn levels(g: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = 8;
    while k < g {
        out.push(k);
        k *= 2;
    }
    out.push(g);
    out
}

/// Nested-grid search with top-B refinement.
///
/// Each level `g` scores all `g^4` grid windows (`s = k/g`, `x = l/g`) from a
/// cyclic histogram, keeps the best `TOP_B` cells, and refines each with
/// `depth` rounds of step halving over the 81 neighbouring windows, followed by
/// snapping the edges to the bounding point coordinates. The returned value is
/// the best exactly evaluated window over all levels.
pub fn sup_search(points: &PointSet, body: &ConvexBody, g: usize, depth: usize) -> Result<DiscrepancyEstimate> {
    if g < 8 {
        return Err(Error::InvalidArgument(format!("grid size {g} must be at least 8")));
    }
    let ev = Evaluator::new(points, body);
    let nf = points.len() as f64;
    let mut evaluations = 0u64;
    let mut best: Option<(f64, Window)> = None;
    let consider = |w: Window, v: f64, best: &mut Option<(f64, Window)>| {
        if best.map_or(true, |(b, _)| v.abs() > b.abs()) {
            *best = Some((v, w));
        }
    };

    for lv in levels(g) {
        let cells = coarse_top(&ev, body, lv, nf);
        evaluations += (lv as u64).pow(4);
        let refined: Vec<(f64, Window, u64)> = cells
            .par_iter()
            .map(|c| {
                let w0 = grid_window(c.idx, lv);
                refine(&ev, w0, 1.0 / lv as f64, depth)
            })
            .collect();
        for (v, w, evals) in refined {
            evaluations += evals;
            consider(w, v, &mut best);
        }
    }
    let (_, w) = best.expect("at least one level");
    let signed = local_discrepancy(points, body, &w);
    Ok(DiscrepancyEstimate {
        value: signed.abs(),
        signed,
        arg_window: w,
        method: SearchMethod::GridRefine,
        grid_size: g,
        refinement_depth: depth,
        evaluations,
        slack: None,
    })
}

fn grid_window(idx: u64, g: usize) -> Window {
    let g64 = g as u64;
    let (x2, rest) = (idx % g64, idx / g64);
    let (s2, rest) = (rest % g64, rest / g64);
    let (x1, s1) = (rest % g64, rest / g64);
    let gf = g as f64;
    Window::new(
        [(s1 + 1) as f64 / gf, (s2 + 1) as f64 / gf],
        [x1 as f64 / gf, x2 as f64 / gf],
    )
}

/// Scores every grid window from bin counts and returns the best `TOP_B`.
fn coarse_top(ev: &Evaluator, body: &ConvexBody, g: usize, nf: f64) -> Vec<Scored> {
    let gf = g as f64;
    let mut hist = vec![0u32; g * g];
    for t in ev.effective_points() {
        let a = ((t[0] * gf) as usize).min(g - 1);
        let b = ((t[1] * gf) as usize).min(g - 1);
        hist[a * g + b] += 1;
    }
    // prefix sums over the doubled (unwrapped) grid
    let w = 2 * g + 1;
    let mut pre = vec![0u32; w * w];
    for i in 0..2 * g {
        for j in 0..2 * g {
            pre[(i + 1) * w + j + 1] =
                hist[(i % g) * g + j % g] + pre[i * w + j + 1] + pre[(i + 1) * w + j] - pre[i * w + j];
        }
    }
    let rect_count = |i0: usize, i1: usize, j0: usize, j1: usize| {
        pre[i1 * w + j1] + pre[i0 * w + j0] - pre[i0 * w + j1] - pre[i1 * w + j0]
    };
    let g64 = g as u64;
    let mut all: Vec<Scored> = (0..g)
        .into_par_iter()
        .flat_map_iter(|s1| {
            let mut row = Vec::with_capacity(g * g * g);
            for x1 in 0..g {
                for s2 in 0..g {
                    for x2 in 0..g {
                        let idx = ((s1 as u64 * g64 + x1 as u64) * g64 + s2 as u64) * g64 + x2 as u64;
                        let c = rect_count(x1, x1 + s1 + 1, x2, x2 + s2 + 1);
                        let area = clip_area(body, &grid_window(idx, g));
                        row.push(Scored {
                            abs: (c as f64 / nf - area).abs(),
                            idx,
                        });
                    }
                }
            }
            row.into_iter()
        })
        .collect();
    let keep = TOP_B.min(all.len());
    if all.len() > keep {
        all.select_nth_unstable_by(keep - 1, by_score);
        all.truncate(keep);
    }
    all.sort_by(by_score);
    all
}

fn refine(ev: &Evaluator, start: Window, step: f64, depth: usize) -> (f64, Window, u64) {
    let mut cur = start;
    let mut val = ev.local(&cur);
    let mut evals = 1u64;
    let mut h = step;
    for _ in 0..depth {
        h *= 0.5;
        let mut best = (val, cur);
        for code in 0..81u32 {
            let d = [
                (code % 3) as f64 - 1.0,
                ((code / 3) % 3) as f64 - 1.0,
                ((code / 9) % 3) as f64 - 1.0,
                ((code / 27) % 3) as f64 - 1.0,
            ];
            if d == [0.0; 4] {
                continue;
            }
            let w = Window::new(
                [cur.s[0] + d[0] * h, cur.s[1] + d[1] * h],
                [cur.x[0] + d[2] * h, cur.x[1] + d[3] * h],
            );
            let v = ev.local(&w);
            evals += 1;
            if v.abs() > best.0.abs() {
                best = (v, w);
            }
        }
        (val, cur) = best;
    }
    let snapped = ev.snap(&cur, val > 0.0);
    let v = ev.local(&snapped);
    evals += 1;
    if v.abs() > val.abs() {
        (val, cur) = (v, snapped);
    }
    (val, cur, evals)
}

/// Semi-exact supremum for `N <= 128`.
///
/// A window with positive local discrepancy can be shrunk until every edge
/// passes through a counted point, and one with negative discrepancy can be
/// grown until every edge sits just before a point it would otherwise pick
/// up; both moves only increase `|local|`. So edges at point coordinates
/// (positive side) and at coordinates nudged by [`NUDGE`] (negative side)
/// cover the supremum, up to the nudge and the side clamp `[S_MIN, S_MAX]`.
/// A 64x64 background grid of anchors with four side lengths per axis covers
/// windows that meet no points at all.
pub fn sup_oracle_small_n(points: &PointSet, body: &ConvexBody) -> Result<DiscrepancyEstimate> {
    if points.len() > ORACLE_MAX_N {
        return Err(Error::CostGuard(format!(
            "critical enumeration is limited to N <= {ORACLE_MAX_N}, got {}",
            points.len()
        )));
    }
    let ev = Evaluator::new(points, body);
    let eff = ev.effective_points();
    let mut xs: Vec<f64> = eff.iter().map(|t| t[0]).collect();
    let mut ys: Vec<f64> = eff.iter().map(|t| t[1]).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let intervals = |c: &[f64], positive: bool| -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(c.len() * c.len());
        for &p in c {
            for &q in c {
                if positive {
                    out.push((p, (q - p).rem_euclid(1.0)));
                } else {
                    let left = p + NUDGE;
                    out.push((left, (q - NUDGE - left).rem_euclid(1.0)));
                }
            }
        }
        out
    };
    let mut windows: Vec<Window> = Vec::new();
    for positive in [true, false] {
        let ix = intervals(&xs, positive);
        let iy = intervals(&ys, positive);
        for &(x1, s1) in &ix {
            for &(x2, s2) in &iy {
                windows.push(Window::new([s1, s2], [x1, x2]));
            }
        }
    }
    let sizes = [0.25, 0.5, 0.75, S_MAX];
    for a in 0..BACKGROUND {
        for b in 0..BACKGROUND {
            for &s1 in &sizes {
                for &s2 in &sizes {
                    let x = [a as f64 / BACKGROUND as f64, b as f64 / BACKGROUND as f64];
                    windows.push(Window::new([s1, s2], x));
                }
            }
        }
    }
    let evaluations = windows.len() as u64;
    let (_, idx) = windows
        .par_iter()
        .enumerate()
        .map(|(i, w)| (ev.local(w).abs(), i))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), |a, b| match a.0.total_cmp(&b.0) {
            Ordering::Greater => a,
            Ordering::Less => b,
            Ordering::Equal => {
                if a.1 <= b.1 {
                    a
                } else {
                    b
                }
            }
        });
    let w = windows[idx];
    let signed = local_discrepancy(points, body, &w);
    let lip = 4.0 + body.perimeter();
    Ok(DiscrepancyEstimate {
        value: signed.abs(),
        signed,
        arg_window: w,
        method: SearchMethod::CriticalEnum,
        grid_size: BACKGROUND,
        refinement_depth: 0,
        evaluations,
        slack: Some(lip * 2.0 * (NUDGE + S_MIN)),
    })
}

/// The Erdős–Turán right-hand side for `D = I(s, x) ∩ body`, summed over the
/// pieces `K_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtBound {
    pub value: f64,
    /// `sum_i |H_hat_i(0)|`.
    pub h_zero: f64,
    pub frequency_sum: f64,
    pub est_abs_error: f64,
    pub pieces: usize,
    pub frequencies: usize,
}

/// Per-frequency weights `sum_i (|chi_i(n)| + |H_i(n)|)` for `0 < |n| < R`.
/// They do not depend on the point set, so one table serves every `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct EtTable {
    pub h_zero: f64,
    h_zero_err: f64,
    pieces: usize,
    rows: Vec<([i64; 2], f64, f64)>,
}

impl EtTable {
    pub fn new(body: &ConvexBody, window: &Window, cfg: &EtKernelConfig) -> Result<Self> {
        if !(cfg.r >= 1.0) {
            return Err(Error::InvalidArgument(format!("R = {} must be at least 1", cfg.r)));
        }
        let body = Arc::new(body.clone());
        let pieces = decompose_intersection(&body, window);
        let mut h_zero = 0.0;
        let mut h_zero_err = 0.0;
        for k in &pieces {
            let h0 = h_hat(k, cfg, [0, 0])?;
            h_zero += h0.abs();
            h_zero_err += h0.est_abs_error;
        }
        let freqs: Vec<[i64; 2]> = frequencies_in_disk(cfg.r)
            .into_iter()
            .filter(|n| (n[0] as f64).hypot(n[1] as f64) < cfg.r)
            .collect();
        let rows = freqs
            .par_iter()
            .map(|&n| -> Result<([i64; 2], f64, f64)> {
                let mut w = 0.0;
                let mut er = 0.0;
                for k in &pieces {
                    let c = chi_hat_piece(k, n)?;
                    let h = h_hat(k, cfg, n)?;
                    w += c.abs() + h.abs();
                    er += c.est_abs_error + h.est_abs_error;
                }
                Ok((n, w, er))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            h_zero,
            h_zero_err,
            pieces: pieces.len(),
            rows,
        })
    }

    pub fn bound(&self, spec: &KroneckerSpec, big_n: u64) -> Result<EtBound> {
        if big_n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        let mut terms = Vec::with_capacity(self.rows.len());
        let mut err = self.h_zero_err;
        for &(n, w, er) in &self.rows {
            let e = exp_sum_abs(theta_angle(spec, n), big_n);
            terms.push(w * e);
            err += er * e;
        }
        let frequency_sum = crate::diophantine::pairwise_sum(&terms);
        Ok(EtBound {
            value: self.h_zero + frequency_sum,
            h_zero: self.h_zero,
            frequency_sum,
            est_abs_error: err,
            pieces: self.pieces,
            frequencies: self.rows.len(),
        })
    }
}

/// `sum_i [ |H_i(0)| + sum_{0<|n|<R} (|chi_i(n)| + |H_i(n)|) |(1/N) sum_j e^{2 pi i n . t(j)}| ]`.
///
/// A structural diagnostic built on a surrogate `psi`; not a certified bound.
pub fn et_structural_bound(
    spec: &KroneckerSpec,
    body: &ConvexBody,
    window: &Window,
    cfg: &EtKernelConfig,
    big_n: u64,
) -> Result<EtBound> {
    if big_n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    EtTable::new(body, window, cfg)?.bound(spec, big_n)
}
