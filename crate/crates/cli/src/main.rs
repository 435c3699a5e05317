use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tqmc_core::diophantine::{certificate_sum, dyadic_sum, empirical_constants, exp_sum, r_rule};
use tqmc_core::discrepancy::{et_structural_bound, DiscrepancyEstimate};
use tqmc_core::fourier::{decay_profile, EtKernelConfig};
use tqmc_core::geometry::{ConvexBody, Window};
use tqmc_core::harness::{fit_rate, run_experiment, ExperimentConfig, FamilyConfig, DISCREPANCY_HEADER};
use tqmc_core::integrate::{kh_certificate, TrigPolynomial};
use tqmc_core::sequences::KroneckerSpec;
use tqmc_core::{Error, Result};

#[derive(Parser)]
#[command(name = "tqmc", version, about = "Quasi-Monte Carlo on the 2-torus with cubic Kronecker sequences")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a point set as CSV.
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(short = 'n', long = "N")]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrepancy estimates and the structural bound.
    Disc {
        #[command(subcommand)]
        mode: DiscMode,
    },
    /// Diophantine constants, dyadic sums, certificate sums, exponential sums.
    Dio {
        #[command(subcommand)]
        op: DioOp,
    },
    /// Fourier decay table of a clipped body.
    Fourier {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, default_value_t = 64)]
        n_max: u32,
        /// `s1,s2,x1,x2`; the full square by default.
        #[arg(long, value_parser = parse_window)]
        window: Option<Window>,
        /// Also tabulate the kernel transform with this cutoff.
        #[arg(long = "R")]
        r: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// QMC integration report for a trigonometric polynomial.
    Integrate {
        /// TOML file with `integrand = [[k1, k2, re, im], ...]`.
        #[arg(long)]
        integrand: PathBuf,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        body: BodyArgs,
        #[arg(short = 'n', long = "N")]
        n: usize,
        /// Use the small-N oracle instead of the grid search.
        #[arg(long)]
        oracle: bool,
        #[arg(long = "grid", default_value_t = 32)]
        g: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Run an experiment config; outputs go under the output root.
    Experiment {
        config: PathBuf,
        #[arg(long, env = "TQMC_OUTPUT_ROOT", default_value = ".")]
        output_root: PathBuf,
    },
    /// Log-log rate fit of a CSV column against `N`.
    Fit {
        csv: PathBuf,
        #[arg(long, default_value = "value")]
        column: String,
    },
}

#[derive(Subcommand)]
enum DiscMode {
    Grid {
        #[command(flatten)]
        common: DiscArgs,
        #[arg(long = "grid", default_value_t = 32)]
        g: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    Oracle {
        #[command(flatten)]
        common: DiscArgs,
    },
    Et {
        #[command(flatten)]
        common: DiscArgs,
        /// Frequency cutoff; `ceil(N^{2/3})` by default.
        #[arg(long = "R")]
        r: Option<f64>,
        #[arg(long, value_parser = parse_window)]
        window: Option<Window>,
    },
}

#[derive(Args)]
struct DiscArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    body: BodyArgs,
    #[arg(short = 'n', long = "N")]
    n: usize,
    /// Append a CSV row (header written when the file is new).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DioOp {
    Constants {
        #[command(flatten)]
        family: SpecArgs,
        #[arg(short = 'm', long = "M", default_value_t = 64)]
        m: i64,
    },
    Dyadic {
        #[command(flatten)]
        family: SpecArgs,
        #[arg(long)]
        i: u32,
        #[arg(long)]
        j: u32,
    },
    Certificate {
        #[command(flatten)]
        family: SpecArgs,
        #[arg(short = 'n', long = "N")]
        n: u64,
        #[arg(long = "R")]
        r: Option<f64>,
    },
    ExpSum {
        #[command(flatten)]
        family: SpecArgs,
        #[arg(long, allow_hyphen_values = true)]
        n1: i64,
        #[arg(long, allow_hyphen_values = true)]
        n2: i64,
        #[arg(short = 'n', long = "N")]
        n: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    Plastic,
    CubeRootTwo,
    Golden,
    Random,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "plastic")]
    family: FamilyKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl FamilyArgs {
    fn config(&self) -> FamilyConfig {
        match self.family {
            FamilyKind::Plastic => FamilyConfig::Plastic,
            FamilyKind::CubeRootTwo => FamilyConfig::CubeRootTwo,
            FamilyKind::Golden => FamilyConfig::GoldenDegenerate,
            FamilyKind::Random => FamilyConfig::Random { seed: self.seed },
        }
    }

    fn spec(&self) -> Result<KroneckerSpec> {
        self.config()
            .spec()
            .ok_or_else(|| Error::InvalidArgument("this needs a Kronecker family".into()))
    }
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, value_enum, default_value = "plastic")]
    family: FamilyKind,
}

impl SpecArgs {
    fn spec(&self) -> Result<KroneckerSpec> {
        FamilyArgs {
            family: self.family,
            seed: 0,
        }
        .spec()
    }
}

#[derive(Args)]
struct BodyArgs {
    /// TOML or JSON body file; the disk of radius 0.35 at the centre by default.
    #[arg(long)]
    body: Option<PathBuf>,
}

impl BodyArgs {
    fn load(&self) -> Result<ConvexBody> {
        match &self.body {
            None => ConvexBody::disk([0.5, 0.5], 0.35),
            Some(p) => {
                let text = fs::read_to_string(p)?;
                if p.extension().is_some_and(|e| e == "json") {
                    Ok(serde_json::from_str(&text)?)
                } else {
                    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
                }
            }
        }
    }
}

fn parse_window(s: &str) -> std::result::Result<Window, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [s1, s2, x1, x2] => Ok(Window::new([*s1, *s2], [*x1, *x2])),
        _ => Err("expected s1,s2,x1,x2".into()),
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn append_row(path: &Path, header: &str, row: &str) -> Result<()> {
    let fresh = !path.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{header}")?;
    }
    writeln!(f, "{row}")?;
    Ok(())
}

fn estimate_row(n: usize, d: &DiscrepancyEstimate) -> String {
    let w = &d.arg_window;
    format!(
        "{n},{},{},{},{},{},{}",
        d.value,
        w.s[0],
        w.s[1],
        w.x[0],
        w.x[1],
        d.method.tag()
    )
}

fn disc(mode: DiscMode) -> Result<()> {
    let (common, est) = match &mode {
        DiscMode::Grid { common, g, depth } => {
            let p = common.family.config().points(common.n)?;
            let est = tqmc_core::discrepancy::sup_search(&p, &common.body.load()?, *g, *depth)?;
            (common, est)
        }
        DiscMode::Oracle { common } => {
            let p = common.family.config().points(common.n)?;
            (common, tqmc_core::discrepancy::sup_oracle_small_n(&p, &common.body.load()?)?)
        }
        DiscMode::Et { common, r, window } => {
            let spec = common.family.spec()?;
            let r = r.unwrap_or_else(|| r_rule(common.n as u64));
            let cfg = EtKernelConfig::with_r(r)?;
            let w = window.unwrap_or_else(Window::full);
            let b = et_structural_bound(&spec, &common.body.load()?, &w, &cfg, common.n as u64)?;
            return print_json(&b);
        }
    };
    if let Some(path) = &common.csv {
        append_row(path, DISCREPANCY_HEADER, &estimate_row(common.n, &est))?;
    }
    print_json(&est)
}

fn dio(op: DioOp) -> Result<()> {
    match op {
        DioOp::Constants { family, m } => print_json(&empirical_constants(&family.spec()?, m)?),
        DioOp::Dyadic { family, i, j } => print_json(&dyadic_sum(&family.spec()?, i, j)?),
        DioOp::Certificate { family, n, r } => {
            let r = r.unwrap_or_else(|| r_rule(n));
            print_json(&certificate_sum(&family.spec()?, n, r, false)?)
        }
        DioOp::ExpSum { family, n1, n2, n } => print_json(&exp_sum(&family.spec()?, [n1, n2], n)?),
    }
}

fn read_column(csv: &Path, column: &str) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(csv)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("{}: no column `{name}`", csv.display())))
    };
    let (ni, vi) = (find("N")?, find(column)?);
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        let cell = |i: usize| -> Result<f64> {
            cells
                .get(i)
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("{}: line {}: bad cell {i}", csv.display(), k + 2)))
        };
        rows.push((cell(ni)?, cell(vi)?));
    }
    Ok(rows)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen { family, n, out } => {
            let p = family.config().points(n)?;
            match out {
                Some(path) => p.write_csv(fs::File::create(path)?),
                None => p.write_csv(io::stdout().lock()),
            }
        }
        Cmd::Disc { mode } => disc(mode),
        Cmd::Dio { op } => dio(op),
        Cmd::Fourier {
            body,
            n_max,
            window,
            r,
            csv,
        } => {
            let kernel = r.map(EtKernelConfig::with_r).transpose()?;
            let w = window.unwrap_or_else(Window::full);
            let prof = decay_profile(&body.load()?, &w, n_max, kernel.as_ref())?;
            match csv {
                Some(path) => prof.write_csv(fs::File::create(path)?)?,
                None => prof.write_csv(io::stdout().lock())?,
            }
            eprintln!("max ratio {}", prof.max_ratio);
            Ok(())
        }
        Cmd::Integrate {
            integrand,
            family,
            body,
            n,
            oracle,
            g,
            depth,
        } => {
            let text = fs::read_to_string(&integrand)?;
            let table: toml::Table =
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", integrand.display())))?;
            let rows = table
                .get("integrand")
                .cloned()
                .ok_or_else(|| Error::Config(format!("{}: missing `integrand`", integrand.display())))?;
            let f: TrigPolynomial = rows
                .try_into()
                .map_err(|e| Error::Config(format!("{}: {e}", integrand.display())))?;
            let b = body.load()?;
            let p = family.config().points(n)?;
            let est = if oracle {
                tqmc_core::discrepancy::sup_oracle_small_n(&p, &b)?
            } else {
                tqmc_core::discrepancy::sup_search(&p, &b, g, depth)?
            };
            print_json(&kh_certificate(&f, &b, &p, &est)?)
        }
        Cmd::Experiment { config, output_root } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run_experiment(&cfg, &output_root)?;
            if let Some(fit) = &summary.discrepancy_fit {
                eprintln!("discrepancy slope {:.4}", fit.slope);
            }
            eprintln!("wrote {}", output_root.join(&cfg.output_dir).display());
            Ok(())
        }
        Cmd::Fit { csv, column } => print_json(&fit_rate(&read_column(&csv, &column)?)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
