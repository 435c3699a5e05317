//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use tqmc_core::diophantine::{certificate_sum, dyadic_sum, empirical_constants, exp_sum, r_rule};
use tqmc_core::discrepancy::{sup_oracle_small_n, sup_search};
use tqmc_core::fixedpoint::FixedReal;
use tqmc_core::fourier::{arc_ft, chi_hat, decay_profile, h_hat, segment_ft, EtKernelConfig};
use tqmc_core::geometry::{decompose_intersection, BoundaryPiece, ConvexBody, Window};
use tqmc_core::harness::{fit_rate, run_experiment, ExperimentConfig};
use tqmc_core::integrate::{cos_product_plus_one, qmc_integrate, reference_integral, variation};
use tqmc_core::sequences::{degenerate_golden, kronecker_block, seeded_random, KroneckerSpec, SplitMix64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn disk() -> ConvexBody {
    ConvexBody::disk([0.5, 0.5], 0.35).unwrap()
}

fn schedule() -> Vec<usize> {
    (6..=13).map(|k| 1usize << k).collect()
}

/// `J_nu(x)` from its power series in fixed point; guard bits cover the
/// `e^x`-sized partial sums.
fn bessel_series(nu: i64, x: f64) -> f64 {
    let p = 192 + (1.5 * x) as u32;
    let half = FixedReal::from_f64(x, p).unwrap().div_int(2);
    let q = half.mul(&half);
    let mut term = FixedReal::from_int(1, p);
    for k in 1..=nu {
        term = term.mul(&half).div_int(k);
    }
    let mut sum = term.clone();
    for k in 1..(200 + 2 * x as i64) {
        term = term.mul(&q).div_int(k * (k + nu)).neg();
        sum = sum.add(&term);
        if term.is_zero() {
            break;
        }
    }
    sum.to_f64()
}

/// Discrepancy runs shared by the first three criteria.
struct RateRuns {
    kronecker: Vec<(f64, f64)>,
    random: Vec<(f64, f64)>,
    golden: Vec<(f64, f64)>,
}

fn rate_runs() -> RateRuns {
    let body = disk();
    let spec = KroneckerSpec::plastic();
    let mut runs = RateRuns {
        kronecker: Vec::new(),
        random: Vec::new(),
        golden: Vec::new(),
    };
    for n in schedule() {
        let nf = n as f64;
        let k = sup_search(&kronecker_block(&spec, n).unwrap(), &body, 32, 4).unwrap();
        let r = sup_search(&seeded_random(1, n).unwrap(), &body, 32, 4).unwrap();
        let g = sup_search(&degenerate_golden(n).unwrap(), &body, 32, 4).unwrap();
        println!(
            "    N={n:5}  kronecker {:.5e}  random {:.5e}  golden {:.5}",
            k.value, r.value, g.value
        );
        runs.kronecker.push((nf, k.value));
        runs.random.push((nf, r.value));
        runs.golden.push((nf, g.value));
    }
    runs
}

fn c1_rate(runs: &RateRuns) -> Outcome {
    let fit = fit_rate(&runs.kronecker).unwrap();
    let lc = fit.log_corrected.unwrap().slope;
    outcome(
        (-0.85..=-0.55).contains(&lc),
        format!("log-corrected slope {lc:.4} (plain {:.4}), band [-0.85, -0.55]", fit.slope),
    )
}

fn c2_golden(runs: &RateRuns) -> Outcome {
    let min = runs.golden.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    outcome(min >= 0.05, format!("min estimate {min:.4} over the schedule, need >= 0.05"))
}

fn c3_random(runs: &RateRuns) -> Outcome {
    let r = fit_rate(&runs.random).unwrap().slope;
    let k = fit_rate(&runs.kronecker).unwrap().slope;
    outcome(
        (-0.65..=-0.35).contains(&r) && r > k,
        format!("random slope {r:.4} in [-0.65, -0.35], kronecker slope {k:.4}"),
    )
}

fn c4_certificate() -> Outcome {
    let spec = KroneckerSpec::plastic();
    let ratios: Vec<f64> = schedule()
        .iter()
        .map(|&n| {
            let nf = n as f64;
            let s = certificate_sum(&spec, n as u64, r_rule(n as u64), false).unwrap();
            s.total / (nf.powf(-2.0 / 3.0) * nf.ln())
        })
        .collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        max / min <= 20.0,
        format!("S/(N^-2/3 log N) in [{min:.3}, {max:.3}], max/min {:.3}", max / min),
    )
}

fn c5_exp_sums() -> Outcome {
    let spec = KroneckerSpec::plastic();
    let mut rng = SplitMix64::new(0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = [
            (rng.next_u64() % 401) as i64 - 200,
            (rng.next_u64() % 401) as i64 - 200,
        ];
        let n = if n == [0, 0] { [1, 0] } else { n };
        let big_n = 1 + rng.next_u64() % 10_000;
        // direct sum with phases reduced exactly on the torus
        let theta = spec.alpha_angle().mul_int(n[0]).add(spec.beta_angle().mul_int(n[1]));
        let mut acc = Complex64::new(0.0, 0.0);
        let mut phase = theta;
        for _ in 0..big_n {
            acc += Complex64::from_polar(1.0, TAU * phase.to_f64());
            phase = phase.add(theta);
        }
        let direct = acc.norm() / big_n as f64;
        let lib = exp_sum(&spec, n, big_n).unwrap();
        let t = theta.to_f64();
        let closed = ((PI * big_n as f64 * t).sin() / (big_n as f64 * (PI * t).sin())).abs();
        worst = worst
            .max((direct - closed).abs())
            .max((lib.closed_form_abs - closed).abs())
            .max((lib.direct.unwrap().norm() - closed).abs());
    }
    outcome(worst <= 1e-10, format!("max |direct - closed| {worst:.2e} over 1000 cases"))
}

fn c6_segments() -> Outcome {
    let ex = [
        (segment_ft([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]), Complex64::new(1.0, 0.0)),
        (segment_ft([0.0, 0.0], [1.0, 0.0], [1.0, 0.0]), Complex64::new(0.0, 0.0)),
        (segment_ft([0.0, 0.0], [1.0, 0.0], [0.5, 0.0]), Complex64::new(0.0, -2.0 / PI)),
    ];
    let ex_err = ex.iter().map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let rule = gauss_quad::GaussLegendre::new(40).unwrap().into_node_weight_pairs();
    let mut rng = SplitMix64::new(6);
    let mut unif = move |lo: f64, hi: f64| lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = [unif(-1.0, 1.0), unif(-1.0, 1.0)];
        let y = [unif(-1.0, 1.0), unif(-1.0, 1.0)];
        let xi = [unif(-50.0, 50.0), unif(-50.0, 50.0)];
        let len = (y[0] - x[0]).hypot(y[1] - x[1]);
        // composite Gauss-Legendre in arclength, panels finer than the oscillation
        let panels = 16 + (len * xi[0].hypot(xi[1])) as usize * 2;
        let mut q = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            for &(t, w) in &rule {
                let s = (p as f64 + 0.5 * (t + 1.0)) / panels as f64;
                let pt = [x[0] + s * (y[0] - x[0]), x[1] + s * (y[1] - x[1])];
                q += Complex64::from_polar(1.0, -TAU * (pt[0] * xi[0] + pt[1] * xi[1])) * (0.5 * w / panels as f64);
            }
        }
        q *= len;
        worst = worst.max((q - segment_ft(x, y, xi)).norm());
    }
    outcome(
        worst <= 1e-10 && ex_err <= 1e-15,
        format!("random max error {worst:.2e}, listed examples max error {ex_err:.1e}"),
    )
}

fn c7_arc_decay() -> Outcome {
    let arcs = [
        BoundaryPiece::CornerArc {
            center: [0.2, 0.3],
            radius: 0.25,
            theta: [0.0, FRAC_PI_2],
        },
        BoundaryPiece::BodyArc {
            body: Arc::new(disk()),
            offset: 0.0,
            theta: [FRAC_PI_2, PI],
        },
    ];
    let mut sup_small = 0.0f64;
    let mut sup_all = 0.0f64;
    let mut worst_err = 0.0f64;
    for arc in &arcs {
        for d in 0..16 {
            let phi = TAU * (d as f64 + 0.37) / 16.0;
            for k in 0..=120 {
                let rho = 10f64.powf(3.0 * k as f64 / 120.0);
                let s = arc_ft(arc, [rho * phi.cos(), rho * phi.sin()]).unwrap();
                let scaled = s.abs() * rho.sqrt();
                worst_err = worst_err.max(s.est_abs_error);
                sup_all = sup_all.max(scaled);
                if rho <= 100.0 {
                    sup_small = sup_small.max(scaled);
                }
            }
        }
    }
    outcome(
        sup_all.is_finite() && sup_all <= 2.0 * sup_small,
        format!(
            "sup |g(xi)||xi|^1/2: {sup_small:.4} on [1,1e2], {sup_all:.4} on [1,1e3]; max quadrature error {worst_err:.1e}"
        ),
    )
}

fn c8_chi_decay() -> Outcome {
    let body = disk();
    let windows = [
        Window::full(),
        Window::new([0.3, 0.6], [0.1, 0.2]),
        Window::new([0.5, 0.5], [0.5, 0.5]),
        Window::new([0.7, 0.4], [0.25, 0.55]),
    ];
    let mut ratios = Vec::new();
    let mut bounded = true;
    for w in &windows {
        let prof = decay_profile(&body, w, 64, None).unwrap();
        let rings = prof.ring_maxima();
        let low = rings[..32].iter().copied().fold(0.0, f64::max);
        let high = rings[32..].iter().copied().fold(0.0, f64::max);
        bounded &= prof.max_ratio.is_finite() && high <= 2.0 * low;
        ratios.push(prof.max_ratio);
    }
    // full disk by boundary quadrature against the series oracle
    let arc = BoundaryPiece::BodyArc {
        body: Arc::new(body.clone()),
        offset: 0.0,
        theta: [0.0, TAU],
    };
    let r = 0.35;
    let mut cache = std::collections::HashMap::new();
    let mut worst = 0.0f64;
    for a in -64i64..=64 {
        for b in -64i64..=64 {
            let n2 = a * a + b * b;
            if n2 == 0 || n2 > 64 * 64 {
                continue;
            }
            let rho = (n2 as f64).sqrt();
            let j1 = *cache.entry(n2).or_insert_with(|| bessel_series(1, TAU * r * rho));
            let phase = Complex64::from_polar(1.0, -TAU * 0.5 * (a + b) as f64);
            let want = phase * (r * j1 / rho);
            let got = chi_hat(&[arc.clone()], [a, b]).unwrap().value;
            worst = worst.max((got - want).norm());
        }
    }
    let shown: Vec<String> = ratios.iter().map(|v| format!("{v:.3}")).collect();
    outcome(
        bounded && worst <= 1e-8,
        format!(
            "max ratio per window [{}], outer rings within 2x inner; disk vs Bessel max error {worst:.1e}",
            shown.join(", ")
        ),
    )
}

fn c9_h_zero() -> Outcome {
    let body = Arc::new(ConvexBody::disk([0.5, 0.5], 0.25).unwrap());
    let pieces = decompose_intersection(&body, &Window::new([0.5, 0.5], [0.5, 0.5]));
    let k = &pieces[0];
    let vals: Vec<f64> = (4..=10)
        .map(|e| {
            let r = (1u32 << e) as f64;
            h_hat(k, &EtKernelConfig::with_r(r).unwrap(), [0, 0]).unwrap().abs() * r
        })
        .collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        pieces.len() == 1 && min > 0.0 && max / min <= 10.0,
        format!("|H(0)| R in [{min:.4}, {max:.4}] for R = 16..1024, max/min {:.3}", max / min),
    )
}

fn c10_koksma_hlawka() -> Outcome {
    let body = disk();
    let spec = KroneckerSpec::plastic();
    let f = cos_product_plus_one();
    let v = variation(&f);
    let reference = reference_integral(&f, &body).unwrap();
    let mut ok = true;
    let mut tight = 0.0f64;
    for n in [8usize, 16, 32, 64, 128] {
        let p = kronecker_block(&spec, n).unwrap();
        let o = sup_oracle_small_n(&p, &body).unwrap();
        let err = (qmc_integrate(&f, &body, &p) - reference).abs();
        let rhs = v * (o.value + o.slack.unwrap());
        ok &= err <= rhs;
        tight = tight.max(err / rhs);
    }
    let rows: Vec<(f64, f64)> = (6..=14)
        .map(|k| {
            let n = 1usize << k;
            let p = kronecker_block(&spec, n).unwrap();
            (n as f64, (qmc_integrate(&f, &body, &p) - reference).abs())
        })
        .collect();
    let slope = fit_rate(&rows).unwrap().slope;
    outcome(
        ok && slope <= -0.55,
        format!("V(f) = {v:.4}, max err/(V(D+slack)) {tight:.3} for N <= 128; error slope {slope:.4} up to 2^14"),
    )
}

fn c11_diophantine() -> Outcome {
    let spec = KroneckerSpec::plastic();
    let etas: Vec<f64> = [16, 64, 256]
        .iter()
        .map(|&m| empirical_constants(&spec, m).unwrap().eta_emp)
        .collect();
    let mut boxes = 0;
    let mut held = 0;
    for i in 0..=7 {
        for j in 0..=7 {
            let rep = dyadic_sum(&spec, i, j).unwrap();
            boxes += 1;
            held += rep.occupancy_holds() as usize;
        }
    }
    let ok = etas.iter().all(|&e| e > 0.0) && etas[0] / etas[2] < 4.0 && held == boxes;
    outcome(
        ok,
        format!(
            "eta(16, 64, 256) = {:.4}, {:.4}, {:.4}, drop x{:.3}; occupancy held in {held}/{boxes} boxes",
            etas[0],
            etas[1],
            etas[2],
            etas[0] / etas[2]
        ),
    )
}

fn c12_determinism() -> Outcome {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
name = "determinism"
output_dir = "run"
schedule = [64, 128, 256, 512]
integrand = [[0, 0, 1.0, 0.0], [1, 1, 0.25, 0.0], [-1, -1, 0.25, 0.0], [1, -1, 0.25, 0.0], [-1, 1, 0.25, 0.0]]

[family]
kind = "plastic"

[body]
kind = "disk"
center = [0.5, 0.5]
radius = 0.35

[discrepancy]
method = "grid"
G = 16
depth = 2
"#,
    )
    .unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    let mut identical = true;
    let mut files = 0;
    for e in fs::read_dir(a.path().join("run")).unwrap() {
        let e = e.unwrap();
        let other = b.path().join("run").join(e.file_name());
        identical &= fs::read(e.path()).unwrap() == fs::read(other).unwrap();
        files += 1;
    }

    let lo = KroneckerSpec::plastic();
    let hi = lo.with_precision(384).unwrap();
    let mut worst = 0u128;
    for j in 1..=1_000_000u64 {
        let (p, q) = (lo.point(j), hi.point(j));
        for (u, v) in [(&p.x, &q.x), (&p.y, &q.y)] {
            let d = u.torus_angle().0.wrapping_sub(v.torus_angle().0);
            worst = worst.max(d.min(d.wrapping_neg()));
        }
    }
    outcome(
        identical && files >= 5 && worst <= 1,
        format!(
            "{files} artifacts byte-identical: {identical}; P=192 vs P=384 max gap {worst} x 2^-128 over j <= 10^6"
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    println!("rate runs (G=32, depth=4, disk r=0.35):");
    let runs = rate_runs();
    results.push((1, "rate reproduction", c1_rate(&runs)));
    results.push((2, "negative control", c2_golden(&runs)));
    results.push((3, "random baseline", c3_random(&runs)));
    results.push((4, "certificate sum", c4_certificate()));
    results.push((5, "exponential-sum identity", c5_exp_sums()));
    results.push((6, "segment transform", c6_segments()));
    results.push((7, "arc decay", c7_arc_decay()));
    results.push((8, "indicator decay", c8_chi_decay()));
    results.push((9, "kernel at zero", c9_h_zero()));
    results.push((10, "Koksma-Hlawka consistency", c10_koksma_hlawka()));
    results.push((11, "diophantine floor", c11_diophantine()));
    results.push((12, "determinism", c12_determinism()));
    let mut failed = 0;
    for (id, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:2} {tag}  {name}: {}", o.detail);
        failed += !o.pass as usize;
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
