mod common;

use common::{objective, vertices};
use polythresh::exponents::Variant;
use polythresh::lp::{DenseMatrix, LpProblem};
use polythresh::sparse_lab::{
    estimate_transition, generate_instance, is_success, monte_carlo_sweep, recover_l1, trial_rng,
    Amplitude, SolverTolerances, SweepConfig,
};
use polythresh::thresholds::{weak_threshold, THRESHOLD_TOL};

#[test]
fn instances_are_consistent() {
    for v in Variant::ALL {
        for t in 0..20 {
            let mut rng = trial_rng(5, 0, t);
            let inst = generate_instance(60, 30, 7, v, Amplitude::Gaussian, &mut rng).unwrap();
            let y_inf = inst.measurements.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let r = inst.matrix.mul_vec(&inst.signal);
            let err = r
                .iter()
                .zip(&inst.measurements)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            assert!(err <= 1e-10 * y_inf);
            assert_eq!(inst.support.len(), 7);
            assert!(inst.support.windows(2).all(|w| w[0] < w[1]));
            let nonzero = inst.signal.iter().filter(|&&x| x != 0.0).count();
            assert_eq!(nonzero, 7);
            for (&i, &s) in inst.support.iter().zip(&inst.signs) {
                assert_eq!(inst.signal[i].signum(), s);
            }
            if v == Variant::Nonnegative {
                assert!(inst.signal.iter().all(|&x| x >= 0.0));
            }
        }
    }
}

#[test]
fn matrix_entries_are_standard_normal() {
    let mut rng = trial_rng(6, 0, 0);
    let inst = generate_instance(
        400,
        100,
        10,
        Variant::General,
        Amplitude::Gaussian,
        &mut rng,
    )
    .unwrap();
    let m = inst.m as f64;
    for j in 0..inst.n {
        let col = inst.matrix.column(j);
        let mean = col.iter().sum::<f64>() / m;
        let var = col.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (m - 1.0);
        // standard errors of the sample mean and variance
        assert!(mean.abs() <= 5.0 / m.sqrt(), "column {j}: mean {mean}");
        assert!(
            (var - 1.0).abs() <= 5.0 * (2.0 / (m - 1.0)).sqrt(),
            "column {j}: var {var}"
        );
    }
}

#[test]
fn constant_amplitude() {
    let mut rng = trial_rng(7, 0, 0);
    let inst = generate_instance(
        50,
        20,
        5,
        Variant::General,
        Amplitude::Constant(2.0),
        &mut rng,
    )
    .unwrap();
    assert!(inst.support.iter().all(|&i| inst.signal[i].abs() == 2.0));
}

/// Every optimal vertex of the basis pursuit LP, mapped back to signal space.
fn optimal_signals(
    inst: &polythresh::sparse_lab::LinearSystemInstance,
    v: Variant,
) -> (f64, Vec<Vec<f64>>) {
    let (m, n) = (inst.m, inst.n);
    let p = match v {
        Variant::General => {
            let mut a = DenseMatrix::zeros(m, 2 * n);
            for i in 0..m {
                for j in 0..n {
                    a.set(i, j, inst.matrix.get(i, j));
                    a.set(i, n + j, -inst.matrix.get(i, j));
                }
            }
            LpProblem::standard(vec![1.0; 2 * n], a, inst.measurements.clone()).unwrap()
        }
        Variant::Nonnegative => {
            LpProblem::standard(vec![1.0; n], inst.matrix.clone(), inst.measurements.clone())
                .unwrap()
        }
    };
    let verts = vertices(&p);
    let best = verts
        .iter()
        .map(|x| objective(&p, x))
        .fold(f64::INFINITY, f64::min);
    let opt = verts
        .into_iter()
        .filter(|x| objective(&p, x) <= best + 1e-9)
        .map(|x| match v {
            Variant::General => (0..n).map(|j| x[j] - x[n + j]).collect(),
            Variant::Nonnegative => x,
        })
        .collect();
    (best, opt)
}

#[test]
fn signal_is_the_unique_l1_minimizer_on_small_instances() {
    let cases = [
        (Variant::Nonnegative, 20, 12, 2),
        (Variant::General, 10, 6, 1),
    ];
    for (v, n, m, k) in cases {
        let mut recovered = 0;
        for t in 0..5 {
            let mut rng = trial_rng(8, 0, t);
            let inst = generate_instance(n, m, k, v, Amplitude::Gaussian, &mut rng).unwrap();
            let (best, opt) = optimal_signals(&inst, v);
            let l1: f64 = inst.signal.iter().map(|x| x.abs()).sum();
            assert!(best <= l1 + 1e-9, "{v} trial {t}");
            let unique = opt.iter().all(|x| is_success(x, &inst, 1e-8));
            let (xhat, _) = recover_l1(&inst, v, &SolverTolerances::default()).unwrap();
            // the solver's answer is an optimal vertex of the same LP
            let got: f64 = xhat.iter().map(|x| x.abs()).sum();
            assert!((got - best).abs() <= 1e-8, "{v} trial {t}");
            assert_eq!(unique, is_success(&xhat, &inst, 1e-6), "{v} trial {t}");
            recovered += unique as usize;
        }
        assert!(recovered >= 4, "{v}: {recovered} of 5");
    }
}

#[test]
fn clear_success_and_clear_failure() {
    let mut cfg = SweepConfig::new(200, vec![0.5], vec![0.5, 1.5], 50, Variant::General, 2024);
    cfg.threads = Some(4);
    let sweep = monte_carlo_sweep(&cfg).unwrap();
    let (lo, hi) = (&sweep.cells[0], &sweep.cells[1]);
    assert!(lo.rate() >= 0.9, "rate {} at f = 0.5", lo.rate());
    assert!(hi.rate() <= 0.1, "rate {} at f = 1.5", hi.rate());
    assert_eq!(lo.lp_failures + hi.lp_failures, 0);
}

#[test]
fn sign_information_helps() {
    let (n, alpha, trials) = (200usize, 0.5, 100usize);
    let beta_w = weak_threshold(alpha, Variant::General, THRESHOLD_TOL)
        .unwrap()
        .beta_w;
    let k = (1.2 * beta_w * n as f64).round() as usize;
    let m = (alpha * n as f64).round() as usize;
    let rate = |v: Variant| {
        let wins = (0..trials)
            .filter(|&t| {
                let mut rng = trial_rng(99, v as usize, t);
                let inst = generate_instance(n, m, k, v, Amplitude::Gaussian, &mut rng).unwrap();
                let (xhat, _) = recover_l1(&inst, v, &SolverTolerances::default()).unwrap();
                is_success(&xhat, &inst, 1e-6)
            })
            .count();
        wins as f64 / trials as f64
    };
    let (general, nonneg) = (rate(Variant::General), rate(Variant::Nonnegative));
    assert!(
        nonneg >= general + 0.2,
        "nonnegative {nonneg}, general {general}"
    );
}

#[test]
fn sweeps_do_not_depend_on_scheduling() {
    let run = |threads| {
        let mut cfg = SweepConfig::new(
            60,
            vec![0.3, 0.6],
            vec![0.8, 1.2],
            12,
            Variant::Nonnegative,
            3,
        );
        cfg.threads = Some(threads);
        monte_carlo_sweep(&cfg).unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(8));
    assert_eq!(one, run(1));
}

#[test]
fn transition_estimate_is_bracketed() {
    let mut cfg = SweepConfig::new(
        100,
        vec![0.5],
        vec![0.6, 1.0, 1.4],
        30,
        Variant::Nonnegative,
        17,
    );
    cfg.threads = Some(4);
    let sweep = monte_carlo_sweep(&cfg).unwrap();
    let b = estimate_transition(&sweep, 0.5).unwrap();
    assert!(sweep.cells[0].beta <= b && b <= sweep.cells[2].beta);
}

#[test]
fn rejects_bad_sweeps() {
    let cfg = SweepConfig::new(0, vec![0.5], vec![1.0], 1, Variant::General, 0);
    assert!(monte_carlo_sweep(&cfg).unwrap_err().is_domain());
    let cfg = SweepConfig::new(50, vec![0.5], vec![-1.0], 1, Variant::General, 0);
    assert!(monte_carlo_sweep(&cfg).unwrap_err().is_domain());
    let cfg = SweepConfig::new(50, vec![0.5], vec![1.0], 0, Variant::General, 0);
    assert!(monte_carlo_sweep(&cfg).unwrap_err().is_domain());
}
