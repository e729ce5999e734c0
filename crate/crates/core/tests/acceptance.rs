//! Acceptance gate. Runs every criterion, prints one line each and exits
//! non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{enumerate_bfs, random_lp, Enumerated};
use polythresh::cli::run_with;
use polythresh::exponents::{net_exponent, Ratios, Variant};
use polythresh::lp::{solve_lp, LpStatus, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL};
use polythresh::sparse_lab::{estimate_transition, monte_carlo_sweep, SweepConfig};
use polythresh::special_fn::{erf, erfinv, gaussian_tail};
use polythresh::thresholds::{equivalence_at, weak_threshold, ThresholdPoint, THRESHOLD_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

fn thresholds(v: Variant) -> Vec<ThresholdPoint> {
    grid()
        .into_iter()
        .map(|a| weak_threshold(a, v, THRESHOLD_TOL).expect("threshold"))
        .collect()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn equivalence(v: Variant) -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for p in thresholds(v) {
        let net = net_exponent(&p.ratios(), v).expect("net exponent").psi_net;
        worst = worst.max(net.abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-8 && elapsed < Duration::from_secs(5),
        format!(
            "max |psi_net| = {worst:.3e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn guesses() -> Outcome {
    let (mut s_gap, mut y_gap, mut int_gap, mut ext_gap) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for v in Variant::ALL {
        for p in thresholds(v) {
            let r = equivalence_at(p).expect("report");
            s_gap = s_gap.max(r.s_root_gap);
            y_gap = y_gap.max(r.y_min_gap);
            int_gap = int_gap.max(r.closed_vs_numeric_int);
            ext_gap = ext_gap.max(r.closed_vs_numeric_ext);
        }
    }
    outcome(
        s_gap <= 1e-8 && y_gap <= 1e-8 && int_gap <= 1e-9 && ext_gap <= 1e-9,
        format!("s {s_gap:.2e}, y {y_gap:.2e}, psi_int {int_gap:.2e}, psi_ext {ext_gap:.2e}"),
    )
}

fn negativity() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for v in Variant::ALL {
        for p in thresholds(v) {
            let r = Ratios::new(p.alpha, 0.95 * p.beta_w).unwrap();
            worst = worst.max(net_exponent(&r, v).expect("net exponent").psi_net);
        }
    }
    outcome(
        worst < -1e-6,
        format!("max psi_net at 0.95 beta_w = {worst:.3e}"),
    )
}

fn dominance() -> Outcome {
    let general = thresholds(Variant::General);
    let nonneg = thresholds(Variant::Nonnegative);
    let margin = general
        .iter()
        .zip(&nonneg)
        .map(|(g, p)| p.beta_w - g.beta_w)
        .fold(f64::INFINITY, f64::min);
    outcome(margin > 0.0, format!("min beta_w+ - beta_w = {margin:.4e}"))
}

fn anchors() -> Outcome {
    // independent bisection oracle, tests/fixtures/threshold_oracle.txt
    let oracle_general = 0.19284483309074046;
    let oracle_nonneg = 0.27911384565708976;
    let g = weak_threshold(0.5, Variant::General, THRESHOLD_TOL)
        .unwrap()
        .beta_w;
    let p = weak_threshold(0.5, Variant::Nonnegative, THRESHOLD_TOL)
        .unwrap()
        .beta_w;
    let pass = (0.185..=0.200).contains(&g)
        && (0.270..=0.290).contains(&p)
        && (g - oracle_general).abs() <= 1e-12
        && (p - oracle_nonneg).abs() <= 1e-12;
    outcome(
        pass,
        format!("beta_w(0.5) = {g:.12}, beta_w+(0.5) = {p:.12}"),
    )
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut cfg = SweepConfig::new(
        200,
        vec![0.5],
        vec![0.6, 0.8, 1.0, 1.2, 1.4],
        100,
        Variant::General,
        20240,
    );
    cfg.threads = Some(1);
    let sweep = monte_carlo_sweep(&cfg).expect("sweep");
    let beta_w = sweep.analytic_beta_w[0].1;
    let elapsed = start.elapsed();
    let rates: Vec<f64> = sweep.cells.iter().map(|c| c.rate()).collect();
    let (first, last) = (rates[0], rates[4]);
    match estimate_transition(&sweep, 0.5) {
        Ok(b) => {
            let rel = (b - beta_w).abs() / beta_w;
            outcome(
                rel <= 0.15 && first >= 0.9 && last <= 0.1 && elapsed < Duration::from_secs(600),
                format!(
                    "beta_hat_50 = {b:.4} ({:.1}% off), rates {rates:?}, {:.1} s",
                    100.0 * rel,
                    elapsed.as_secs_f64()
                ),
            )
        }
        Err(e) => outcome(false, format!("{e}, rates {rates:?}")),
    }
}

fn lp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let (mut agree, mut worst, mut infeasible) = (0, 0.0f64, 0);
    for i in 0..100 {
        let p = random_lp(&mut rng, i);
        let sol = solve_lp(&p, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL, 10_000).expect("solve");
        match enumerate_bfs(&p) {
            Enumerated::Optimal(obj) if sol.status == LpStatus::Optimal => {
                let gap = (sol.objective - obj).abs();
                worst = worst.max(gap);
                agree += (gap <= 1e-8) as usize;
            }
            Enumerated::Infeasible if sol.status == LpStatus::Infeasible => {
                infeasible += 1;
                agree += 1;
            }
            _ => {}
        }
    }
    outcome(
        agree == 100,
        format!("{agree}/100 agree ({infeasible} infeasible), max objective gap {worst:.2e}"),
    )
}

fn special_functions() -> Outcome {
    let golden = 0.618_033_988_749_894_9;
    let mut round_trip: f64 = 0.0;
    for i in 1..=1000 {
        let u = (i as f64 * golden).fract();
        let t = 0.999 * (2.0 * u - 1.0);
        round_trip = round_trip.max((erf(erfinv(t).unwrap()) - t).abs());
    }
    let mut tail: f64 = 0.0;
    for i in -800..=800 {
        let s = i as f64 * 0.01;
        tail = tail.max((gaussian_tail(s) - 0.5 * (1.0 - erf(s / std::f64::consts::SQRT_2))).abs());
    }
    outcome(
        round_trip <= 1e-12 && tail <= 1e-14,
        format!("round trip {round_trip:.2e}, tail identity {tail:.2e}"),
    )
}

fn mc_csv(threads: &str) -> (i32, Vec<u8>) {
    let args = [
        "polythresh",
        "mc",
        "--n",
        "100",
        "--alpha",
        "0.3,0.5",
        "--beta-fracs",
        "0.6,1.0,1.4",
        "--trials",
        "20",
        "--seed",
        "77",
        "--threads",
        threads,
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(args, &mut out, &mut err);
    (code, out)
}

fn determinism() -> Outcome {
    let (c1, a) = mc_csv("1");
    let (c2, b) = mc_csv("1");
    let (c3, c) = mc_csv("8");
    let pass = c1 == 0 && c2 == 0 && c3 == 0 && !a.is_empty() && a == b && a == c;
    outcome(
        pass,
        format!(
            "{} bytes, repeat equal {}, 1 vs 8 threads equal {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("general equivalence", || equivalence(Variant::General)),
        ("nonnegative equivalence", || {
            equivalence(Variant::Nonnegative)
        }),
        ("saddle point and minimizer guesses", guesses),
        ("negative below threshold", negativity),
        ("nonnegative dominance", dominance),
        ("anchor values", anchors),
        ("monte carlo transition", monte_carlo),
        ("lp vs basis enumeration", lp_oracle),
        ("special functions", special_functions),
        ("mc determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += (!o.pass) as usize;
        println!(
            "{} {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
