//! Monte Carlo validation of the weak thresholds.
//!
//! Each trial draws an iid Gaussian `m x n` matrix (its null space is
//! uniformly distributed on the Grassmannian), a `k`-sparse signal with a
//! uniformly random support, and checks whether basis pursuit returns the
//! signal exactly. Every trial owns a ChaCha stream keyed by the sweep seed and
//! selected by `(cell, trial)`, so results do not depend on scheduling.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::Variant;
use crate::lp::{
    solve_lp, DenseMatrix, LpProblem, LpSolution, LpStatus, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL,
};
use crate::thresholds::{weak_threshold, THRESHOLD_TOL};

pub const MAX_DIMENSION: usize = 2000;
pub const DEFAULT_SUCCESS_TOL: f64 = 1e-6;

/// Distribution of the nonzero magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Amplitude {
    /// `|N(0, 1)|`.
    Gaussian,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystemInstance {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub matrix: DenseMatrix,
    pub signal: Vec<f64>,
    /// Sorted support indices.
    pub support: Vec<usize>,
    /// `+1` or `-1` per support entry, in support order.
    pub signs: Vec<f64>,
    pub measurements: Vec<f64>,
}

/// Per-trial random stream.
pub fn trial_rng(seed: u64, cell: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cell as u64) << 32) | trial as u64);
    rng
}

/// Draws one instance. Requires `k <= m <= n` and `m >= 1`.
pub fn generate_instance<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    k: usize,
    v: Variant,
    amplitude: Amplitude,
    rng: &mut R,
) -> Result<LinearSystemInstance> {
    if !(k <= m && m <= n && m >= 1) {
        return Err(Error::domain(format!(
            "need k <= m <= n and m >= 1, got n = {n}, m = {m}, k = {k}"
        )));
    }
    if let Amplitude::Constant(c) = amplitude {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::domain(format!(
                "constant amplitude {c} must be positive"
            )));
        }
    }

    let data: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    let matrix = DenseMatrix::from_row_major(m, n, data)?;

    let mut support = index::sample(rng, n, k).into_vec();
    support.sort_unstable();
    let mut signal = vec![0.0; n];
    let mut signs = Vec::with_capacity(k);
    for &i in &support {
        let magnitude = match amplitude {
            Amplitude::Gaussian => rng.sample::<f64, _>(StandardNormal).abs(),
            Amplitude::Constant(c) => c,
        };
        let sign = match v {
            Variant::General if rng.random::<bool>() => -1.0,
            _ => 1.0,
        };
        signs.push(sign);
        signal[i] = sign * magnitude;
    }
    let measurements = matrix.mul_vec(&signal);
    Ok(LinearSystemInstance {
        n,
        m,
        k,
        matrix,
        signal,
        support,
        signs,
        measurements,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverTolerances {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iter: usize,
    pub success_tol: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        SolverTolerances {
            feas_tol: DEFAULT_FEAS_TOL,
            opt_tol: DEFAULT_OPT_TOL,
            max_iter: 100_000,
            success_tol: DEFAULT_SUCCESS_TOL,
        }
    }
}

/// Basis pursuit: `min ||x||_1  s.t.  Ax = y` (general, split as `x = u - w`)
/// or `min sum x  s.t.  Ax = y, x >= 0` (nonnegative).
pub fn recover_l1(
    inst: &LinearSystemInstance,
    v: Variant,
    tols: &SolverTolerances,
) -> Result<(Vec<f64>, LpSolution)> {
    let (m, n) = (inst.m, inst.n);
    let problem = match v {
        Variant::General => {
            let mut data = Vec::with_capacity(m * 2 * n);
            for i in 0..m {
                let row = inst.matrix.row(i);
                data.extend_from_slice(row);
                data.extend(row.iter().map(|a| -a));
            }
            let a = DenseMatrix::from_row_major(m, 2 * n, data)?;
            LpProblem::standard(vec![1.0; 2 * n], a, inst.measurements.clone())?
        }
        Variant::Nonnegative => {
            LpProblem::standard(vec![1.0; n], inst.matrix.clone(), inst.measurements.clone())?
        }
    };
    let sol = solve_lp(&problem, tols.feas_tol, tols.opt_tol, tols.max_iter)?;
    if sol.status == LpStatus::Infeasible {
        return Err(Error::Lp(format!(
            "basis pursuit reported infeasible on a feasible instance (n = {n}, m = {m}, k = {})",
            inst.k
        )));
    }
    let xhat = match v {
        Variant::General => (0..n).map(|j| sol.x[j] - sol.x[n + j]).collect(),
        Variant::Nonnegative => sol.x.clone(),
    };
    Ok((xhat, sol))
}

/// `||xhat - signal||_inf <= tol * ||signal||_inf` (plain `tol` for a zero
/// signal). The bound is inclusive.
pub fn is_success(xhat: &[f64], inst: &LinearSystemInstance, tol: f64) -> bool {
    assert_eq!(xhat.len(), inst.signal.len());
    let scale = inst.signal.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let err = xhat
        .iter()
        .zip(&inst.signal)
        .fold(0.0f64, |a, (x, s)| a.max((x - s).abs()));
    err <= tol * scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub alphas: Vec<f64>,
    /// Sparsity levels as multiples of the analytic threshold `beta_w(alpha)`.
    pub beta_fracs: Vec<f64>,
    pub trials: usize,
    pub variant: Variant,
    pub seed: u64,
    pub amplitude: Amplitude,
    pub tolerances: SolverTolerances,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn new(
        n: usize,
        alphas: Vec<f64>,
        beta_fracs: Vec<f64>,
        trials: usize,
        variant: Variant,
        seed: u64,
    ) -> Self {
        SweepConfig {
            n,
            alphas,
            beta_fracs,
            trials,
            variant,
            seed,
            amplitude: Amplitude::Gaussian,
            tolerances: SolverTolerances::default(),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub beta_frac: f64,
    /// Realized sparsity ratio `k / n`.
    pub beta: f64,
    pub m: usize,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    /// Trials whose LP did not reach optimality; counted as failures.
    pub lp_failures: usize,
}

impl SweepCell {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub n: usize,
    pub variant: Variant,
    pub seed: u64,
    pub cells: Vec<SweepCell>,
    pub solver_tols: SolverTolerances,
    /// `(alpha, beta_w(alpha))` in input order.
    pub analytic_beta_w: Vec<(f64, f64)>,
}

/// `floor(x + 1/2)`.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

enum TrialOutcome {
    Success,
    Failure,
    LpFailure,
}

/// Runs `trials` instances per `(alpha, fraction)` cell.
///
/// `m = round(alpha n)` and `k = max(1, round(f beta_w(alpha) n))`, both
/// rounding half up. Cells are ordered by alpha, then fraction.
pub fn monte_carlo_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let n = config.n;
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::domain(format!(
            "n = {n} outside 1..={MAX_DIMENSION}"
        )));
    }
    if config.trials == 0 {
        return Err(Error::domain("need at least one trial per cell"));
    }
    if config.alphas.is_empty() || config.beta_fracs.is_empty() {
        return Err(Error::domain("empty alpha or fraction list"));
    }
    if let Some(f) = config
        .beta_fracs
        .iter()
        .find(|f| !(f.is_finite() && **f > 0.0))
    {
        return Err(Error::domain(format!("beta fraction {f} must be positive")));
    }

    let mut analytic = Vec::with_capacity(config.alphas.len());
    let mut cells = Vec::new();
    for &alpha in &config.alphas {
        let beta_w = weak_threshold(alpha, config.variant, THRESHOLD_TOL)?.beta_w;
        analytic.push((alpha, beta_w));
        let m = round_half_up(alpha * n as f64);
        for &f in &config.beta_fracs {
            let k = round_half_up(f * beta_w * n as f64).max(1);
            if m == 0 || k > m {
                return Err(Error::domain(format!(
                    "cell alpha = {alpha}, fraction = {f} gives m = {m}, k = {k}; need 1 <= k <= m"
                )));
            }
            cells.push(SweepCell {
                alpha,
                beta_frac: f,
                beta: k as f64 / n as f64,
                m,
                k,
                trials: config.trials,
                successes: 0,
                lp_failures: 0,
            });
        }
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let run = |&(c, t): &(usize, usize)| -> Result<TrialOutcome> {
        let cell = &cells[c];
        let mut rng = trial_rng(config.seed, c, t);
        let inst = generate_instance(
            n,
            cell.m,
            cell.k,
            config.variant,
            config.amplitude,
            &mut rng,
        )?;
        match recover_l1(&inst, config.variant, &config.tolerances) {
            Ok((xhat, sol)) if sol.status == LpStatus::Optimal => {
                if is_success(&xhat, &inst, config.tolerances.success_tol) {
                    Ok(TrialOutcome::Success)
                } else {
                    Ok(TrialOutcome::Failure)
                }
            }
            Ok(_) | Err(Error::Lp(_)) => Ok(TrialOutcome::LpFailure),
            Err(e) => Err(e),
        }
    };
    let outcomes: Vec<Result<TrialOutcome>> = match config.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::domain(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(run).collect()),
        None => jobs.par_iter().map(run).collect(),
    };

    for (&(c, _), outcome) in jobs.iter().zip(outcomes) {
        match outcome? {
            TrialOutcome::Success => cells[c].successes += 1,
            TrialOutcome::Failure => {}
            TrialOutcome::LpFailure => cells[c].lp_failures += 1,
        }
    }

    Ok(SweepResult {
        n,
        variant: config.variant,
        seed: config.seed,
        cells,
        solver_tols: config.tolerances,
        analytic_beta_w: analytic,
    })
}

/// Sparsity ratio at which the empirical success rate crosses one half, by
/// linear interpolation between the first pair of `beta`-adjacent cells that
/// straddle it.
pub fn estimate_transition(sweep: &SweepResult, alpha: f64) -> Result<f64> {
    let mut pts: Vec<(f64, f64)> = sweep
        .cells
        .iter()
        .filter(|c| c.alpha == alpha)
        .map(|c| (c.beta, c.rate()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::domain(format!(
            "need at least two cells at alpha = {alpha}, found {}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pts.windows(2) {
        let ((b0, r0), (b1, r1)) = (w[0], w[1]);
        if r0 == 0.5 {
            return Ok(b0);
        }
        if (r0 - 0.5) * (r1 - 0.5) < 0.0 {
            return Ok(b0 + (0.5 - r0) * (b1 - b0) / (r1 - r0));
        }
    }
    match pts.last() {
        Some(&(b, r)) if r == 0.5 => Ok(b),
        _ => Err(Error::NotBracketed { alpha }),
    }
}
