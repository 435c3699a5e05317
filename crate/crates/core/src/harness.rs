//! Experiment orchestration: configs, rate fits, CSV/JSON persistence and SVG plots.
//!
//! Output files of [`run_experiment`] (all under the configured directory):
//!
//! | file | columns |
//! |---|---|
//! | `discrepancy.csv` | `N,value,arg_s1,arg_s2,arg_x1,arg_x2,method` |
//! | `certificate.csv` | `N,R,term_const,term_smooth,term_product,total` |
//! | `integration.csv` | `N,qmc_value,reference_value,abs_error,V_f,D_used,kh_product,violation` (only with an integrand) |
//! | `summary.json` | version stamp, config echo, per-N rows, rate fits |
//! | `discrepancy.svg` | log-log plot of the discrepancy rows and fit |

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diophantine::{certificate_sum, r_rule, CertificateReport};
use crate::discrepancy::{sup_oracle_small_n, sup_search, DiscrepancyEstimate, ORACLE_MAX_N};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::integrate::{kh_certificate, IntegrationReport, TrigPolynomial};
use crate::sequences::{degenerate_golden, kronecker_block, seeded_random, KroneckerSpec, PointSet};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Bumped whenever a CSV header or JSON field changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const DISCREPANCY_HEADER: &str = "N,value,arg_s1,arg_s2,arg_x1,arg_x2,method";
pub const CERTIFICATE_HEADER: &str = "N,R,term_const,term_smooth,term_product,total";
pub const INTEGRATION_HEADER: &str = "N,qmc_value,reference_value,abs_error,V_f,D_used,kh_product,violation";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// `x^3 - x - 1` with `(alpha, beta) = (xi, xi^2)`.
    Plastic,
    /// `x^3 - 2` with `(alpha, beta) = (xi, xi^2)`.
    CubeRootTwo,
    Kronecker { spec: KroneckerSpec },
    GoldenDegenerate,
    Random { seed: u64 },
}

impl FamilyConfig {
    pub fn spec(&self) -> Option<KroneckerSpec> {
        match self {
            FamilyConfig::Plastic => Some(KroneckerSpec::plastic()),
            FamilyConfig::CubeRootTwo => Some(KroneckerSpec::cube_root_two()),
            FamilyConfig::Kronecker { spec } => Some(spec.clone()),
            FamilyConfig::GoldenDegenerate => Some(KroneckerSpec::golden_degenerate()),
            FamilyConfig::Random { .. } => None,
        }
    }

    pub fn points(&self, n: usize) -> Result<PointSet> {
        match self {
            FamilyConfig::GoldenDegenerate => degenerate_golden(n),
            FamilyConfig::Random { seed } => seeded_random(*seed, n),
            _ => kronecker_block(&self.spec().expect("kronecker family"), n),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FamilyConfig::Plastic => "plastic".into(),
            FamilyConfig::CubeRootTwo => "cube_root_two".into(),
            FamilyConfig::Kronecker { spec } => spec.describe(),
            FamilyConfig::GoldenDegenerate => "golden_degenerate".into(),
            FamilyConfig::Random { seed } => format!("random(seed={seed})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiscrepancyConfig {
    Grid {
        #[serde(rename = "G", default = "default_grid")]
        g: usize,
        #[serde(default = "default_depth")]
        depth: usize,
    },
    Oracle,
}

fn default_grid() -> usize {
    32
}

fn default_depth() -> usize {
    4
}

impl Default for DiscrepancyConfig {
    fn default() -> Self {
        DiscrepancyConfig::Grid {
            g: default_grid(),
            depth: default_depth(),
        }
    }
}

impl DiscrepancyConfig {
    pub fn estimate(&self, points: &PointSet, body: &ConvexBody) -> Result<DiscrepancyEstimate> {
        match self {
            DiscrepancyConfig::Grid { g, depth } => sup_search(points, body, *g, *depth),
            DiscrepancyConfig::Oracle => sup_oracle_small_n(points, body),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Fixed cutoff; `ceil(N^{2/3})` when absent.
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

fn yes() -> bool {
    true
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self { enabled: true, r: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Relative paths are resolved against the output root.
    pub output_dir: PathBuf,
    /// Strictly increasing powers of two.
    pub schedule: Vec<usize>,
    pub family: FamilyConfig,
    pub body: ConvexBody,
    #[serde(default)]
    pub discrepancy: DiscrepancyConfig,
    #[serde(default)]
    pub certificate: CertificateConfig,
    /// Rows `[k1, k2, re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrand: Option<TrigPolynomial>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("field `{field}`: {msg}")));
        if self.schedule.is_empty() {
            return bad("schedule", "must not be empty".into());
        }
        for (i, &n) in self.schedule.iter().enumerate() {
            if !n.is_power_of_two() {
                return bad("schedule", format!("entry {i} = {n} is not a power of two"));
            }
            if i > 0 && n <= self.schedule[i - 1] {
                return bad("schedule", format!("entry {i} = {n} does not increase"));
            }
        }
        match self.discrepancy {
            DiscrepancyConfig::Grid { g, .. } if g < 8 => {
                return bad("discrepancy.G", format!("{g} must be at least 8"));
            }
            DiscrepancyConfig::Oracle if *self.schedule.last().unwrap() > ORACLE_MAX_N => {
                return bad(
                    "discrepancy.method",
                    format!("the oracle needs N <= {ORACLE_MAX_N}"),
                );
            }
            _ => {}
        }
        if let Some(r) = self.certificate.r {
            if !(r >= 1.0) {
                return bad("certificate.R", format!("{r} must be at least 1"));
            }
        }
        if self.name.is_empty() {
            return bad("name", "must not be empty".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub residuals: Vec<f64>,
}

/// Least squares in log-log coordinates; `log_corrected` regresses
/// `log(value / log N)` on `log N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub residuals: Vec<f64>,
    pub log_corrected: Option<LinearFit>,
}

impl RateFit {
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.slope * n.ln()).exp()
    }
}

fn ols(x: &[f64], y: &[f64]) -> LinearFit {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (intercept + slope * a)).collect();
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / m).sqrt();
    LinearFit {
        slope,
        intercept,
        residual_rms,
        residuals,
    }
}

/// Fits `value ~ C N^slope` over rows `(N, value)`.
pub fn fit_rate(rows: &[(f64, f64)]) -> Result<RateFit> {
    if rows.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "a rate fit needs at least 4 rows, got {}",
            rows.len()
        )));
    }
    for (i, &(n, v)) in rows.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("row {i} (N = {n}): value {v} is not positive")));
        }
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument(format!("row {i}: N = {n} is not positive")));
        }
    }
    let x: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let plain = ols(&x, &y);
    let log_corrected = if rows.iter().all(|r| r.0 > 1.0) {
        let yc: Vec<f64> = rows.iter().map(|r| (r.1 / r.0.ln()).ln()).collect();
        Some(ols(&x, &yc))
    } else {
        None
    };
    Ok(RateFit {
        points: rows.len(),
        slope: plain.slope,
        intercept: plain.intercept,
        residual_rms: plain.residual_rms,
        residuals: plain.residuals,
        log_corrected,
    })
}

/// One family on a plot.
#[derive(Clone, Debug)]
pub struct PlotSeries {
    pub label: String,
    pub rows: Vec<(f64, f64)>,
    pub fit: Option<RateFit>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Self-contained log-log SVG with one scatter (plus fitted line) per series.
pub fn render_svg(series: &[PlotSeries]) -> Result<String> {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.rows.iter().copied()).collect();
    if all.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    if all.iter().any(|&(n, v)| !(n > 0.0 && v > 0.0)) {
        return Err(Error::InvalidArgument("log-log plot needs positive N and values".into()));
    }
    let (w, h) = (640.0, 440.0);
    let (left, right, top, bottom) = (80.0, 170.0, 30.0, 60.0);
    let lx: Vec<f64> = all.iter().map(|r| r.0.log10()).collect();
    let ly: Vec<f64> = all.iter().map(|r| r.1.log10()).collect();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = span(&lx);
    let (y0, y1) = (span(&ly).0.floor(), span(&ly).1.ceil());
    let px = |v: f64| left + (v.log10() - x0) / (x1 - x0) * (w - left - right);
    let py = |v: f64| h - bottom - (v.log10() - y0) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#).unwrap();
    let (ax0, ax1, ay0, ay1) = (left, w - right, top, h - bottom);
    writeln!(
        s,
        r#"<path d="M {ax0:.2} {ay0:.2} L {ax0:.2} {ay1:.2} L {ax1:.2} {ay1:.2}" stroke="black" fill="none"/>"#
    )
    .unwrap();
    // x ticks at the distinct N values
    let mut ns: Vec<f64> = all.iter().map(|r| r.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    for n in &ns {
        let x = px(*n);
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{ay1:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ay1 + 5.0,
            ay1 + 18.0,
            n
        )
        .unwrap();
    }
    for e in (y0 as i64)..=(y1 as i64) {
        let y = py(10f64.powi(e as i32));
        writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{ax0:.2}" y2="{y:.2}" stroke="black"/><line x1="{ax0:.2}" y1="{y:.2}" x2="{ax1:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            ax0 - 5.0,
            ax0 - 8.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">N</text>"#,
        0.5 * (ax0 + ax1),
        h - 15.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">D</text>"#,
        0.5 * (ay0 + ay1),
        0.5 * (ay0 + ay1)
    )
    .unwrap();
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        writeln!(s, r#"<g stroke="{color}" fill="{color}">"#).unwrap();
        for &(n, v) in &ser.rows {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5"/>"#, px(n), py(v)).unwrap();
        }
        if let (Some(fit), Some(lo), Some(hi)) = (
            &ser.fit,
            ser.rows.iter().map(|r| r.0).reduce(f64::min),
            ser.rows.iter().map(|r| r.0).reduce(f64::max),
        ) {
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke-width="1.5"/>"#,
                px(lo),
                py(fit.predict(lo)),
                px(hi),
                py(fit.predict(hi))
            )
            .unwrap();
        }
        writeln!(s, "</g>").unwrap();
        let ly = top + 20.0 + 18.0 * i as f64;
        let slope = ser.fit.as_ref().map(|f| format!(" (slope {:.3})", f.slope)).unwrap_or_default();
        writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/><text x="{:.2}" y="{:.2}">{}{}</text>"#,
            ax1 + 15.0,
            ly - 4.0,
            ax1 + 25.0,
            ly,
            xml_escape(&ser.label),
            slope
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(series: &[PlotSeries], path: &Path) -> Result<()> {
    fs::write(path, render_svg(series)?)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub discrepancy: DiscrepancyEstimate,
    pub certificate: Option<CertificateReport>,
    pub integration: Option<IntegrationReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub version: String,
    pub schema: u32,
    pub config: ExperimentConfig,
    pub family: String,
    pub rows: Vec<ExperimentRow>,
    pub discrepancy_fit: Option<RateFit>,
    pub certificate_fit: Option<RateFit>,
    pub integration_fit: Option<RateFit>,
    /// Certificate rows are skipped for families without a nondegenerate
    /// spec; the reason is kept here.
    pub notes: Vec<String>,
}

/// Resolves `cfg.output_dir` against `root`.
pub fn output_path(cfg: &ExperimentConfig, root: &Path) -> PathBuf {
    root.join(&cfg.output_dir)
}

fn fit_if_possible(rows: &[(f64, f64)]) -> Option<RateFit> {
    fit_rate(rows).ok()
}

/// Runs the schedule and writes the report files; returns the summary.
pub fn run_experiment(cfg: &ExperimentConfig, root: &Path) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let dir = output_path(cfg, root);
    fs::create_dir_all(&dir)?;
    let spec = cfg.family.spec();
    let mut notes = Vec::new();
    let want_cert = cfg.certificate.enabled;
    let cert_spec = match &spec {
        Some(s) if !s.is_degenerate() => Some(s.clone()),
        Some(_) if want_cert => {
            notes.push("certificate skipped: the frequency pair is rationally dependent".into());
            None
        }
        None if want_cert => {
            notes.push("certificate skipped: not a Kronecker family".into());
            None
        }
        _ => None,
    };

    let mut rows = Vec::with_capacity(cfg.schedule.len());
    for &n in &cfg.schedule {
        let points = cfg.family.points(n)?;
        let discrepancy = cfg.discrepancy.estimate(&points, &cfg.body)?;
        let certificate = match (&cert_spec, want_cert) {
            (Some(s), true) => {
                let r = cfg.certificate.r.unwrap_or_else(|| r_rule(n as u64));
                Some(certificate_sum(s, n as u64, r, false)?)
            }
            _ => None,
        };
        let integration = match &cfg.integrand {
            Some(f) => Some(kh_certificate(f, &cfg.body, &points, &discrepancy)?),
            None => None,
        };
        rows.push(ExperimentRow {
            n,
            discrepancy,
            certificate,
            integration,
        });
    }

    let mut disc = String::new();
    writeln!(disc, "{DISCREPANCY_HEADER}").unwrap();
    for r in &rows {
        let d = &r.discrepancy;
        let w = &d.arg_window;
        writeln!(
            disc,
            "{},{},{},{},{},{},{}",
            r.n,
            d.value,
            w.s[0],
            w.s[1],
            w.x[0],
            w.x[1],
            d.method.tag()
        )
        .unwrap();
    }
    write_file(&dir.join("discrepancy.csv"), &disc)?;

    let certs: Vec<&CertificateReport> = rows.iter().filter_map(|r| r.certificate.as_ref()).collect();
    if !certs.is_empty() {
        let mut out = String::new();
        writeln!(out, "{CERTIFICATE_HEADER}").unwrap();
        for c in &certs {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.n, c.r, c.term_const, c.term_smooth, c.term_product, c.total
            )
            .unwrap();
        }
        write_file(&dir.join("certificate.csv"), &out)?;
    }

    let ints: Vec<&IntegrationReport> = rows.iter().filter_map(|r| r.integration.as_ref()).collect();
    if !ints.is_empty() {
        let mut out = String::new();
        writeln!(out, "{INTEGRATION_HEADER}").unwrap();
        for i in &ints {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                i.n, i.qmc_value, i.reference_value, i.abs_error, i.v_f, i.d_used, i.kh_product, i.violation
            )
            .unwrap();
        }
        write_file(&dir.join("integration.csv"), &out)?;
    }

    let disc_rows: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.discrepancy.value)).collect();
    let discrepancy_fit = fit_if_possible(&disc_rows);
    let certificate_fit = fit_if_possible(&certs.iter().map(|c| (c.n as f64, c.total)).collect::<Vec<_>>());
    let integration_fit =
        fit_if_possible(&ints.iter().map(|i| (i.n as f64, i.abs_error)).collect::<Vec<_>>());
    if discrepancy_fit.is_none() {
        notes.push("no discrepancy fit: fewer than 4 rows or a zero value".into());
    }

    let label = cfg.family.label();
    if disc_rows.iter().all(|r| r.1 > 0.0) {
        emit_plot(
            &[PlotSeries {
                label: label.clone(),
                rows: disc_rows,
                fit: discrepancy_fit.clone(),
            }],
            &dir.join("discrepancy.svg"),
        )?;
    }

    let summary = ExperimentSummary {
        version: VERSION.to_string(),
        schema: SCHEMA_VERSION,
        config: cfg.clone(),
        family: label,
        rows,
        discrepancy_fit,
        certificate_fit,
        integration_fit,
        notes,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    write_file(&dir.join("summary.json"), &(json + "\n"))?;
    Ok(summary)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
