//! Dense bounded-variable revised simplex.
//!
//! Solves `min c'x  s.t.  Ax = b,  l <= x <= u` with `l` possibly `-inf` and
//! `u` possibly `+inf`. Phase one drives per-row artificials to zero, phase
//! two optimizes the true cost. The basis inverse is held explicitly, updated
//! by rank-one pivots and rebuilt by Gauss-Jordan elimination every
//! [`REFACTOR_EVERY`] iterations. Pricing is Dantzig's most negative reduced
//! cost; after `3 N` consecutive pivots without objective progress it switches
//! to Bland's lowest-index rule until progress resumes.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_FEAS_TOL: f64 = 1e-9;
pub const DEFAULT_OPT_TOL: f64 = 1e-9;
pub const REFACTOR_EVERY: usize = 64;

const PIVOT_TOL: f64 = 1e-9;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::domain("ragged matrix rows"));
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub eq_matrix: DenseMatrix,
    pub eq_rhs: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    pub upper_bounds: Vec<f64>,
}

impl LpProblem {
    /// Standard form: all variables in `[0, inf)`.
    pub fn standard(cost: Vec<f64>, eq_matrix: DenseMatrix, eq_rhs: Vec<f64>) -> Result<Self> {
        let n = cost.len();
        Self::new(
            cost,
            eq_matrix,
            eq_rhs,
            vec![0.0; n],
            vec![f64::INFINITY; n],
        )
    }

    pub fn new(
        cost: Vec<f64>,
        eq_matrix: DenseMatrix,
        eq_rhs: Vec<f64>,
        lower_bounds: Vec<f64>,
        upper_bounds: Vec<f64>,
    ) -> Result<Self> {
        let n = cost.len();
        if eq_matrix.cols() != n || eq_matrix.rows() != eq_rhs.len() {
            return Err(Error::domain(format!(
                "matrix is {}x{}, cost has {n} entries, rhs has {}",
                eq_matrix.rows(),
                eq_matrix.cols(),
                eq_rhs.len()
            )));
        }
        if lower_bounds.len() != n || upper_bounds.len() != n {
            return Err(Error::domain("bound vectors must match the cost length"));
        }
        for j in 0..n {
            let (l, u) = (lower_bounds[j], upper_bounds[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::domain(format!("invalid bounds [{l}, {u}] on x{j}")));
            }
        }
        if cost
            .iter()
            .chain(&eq_rhs)
            .chain(&eq_matrix.data)
            .any(|v| !v.is_finite())
        {
            return Err(Error::domain("non-finite cost, matrix or rhs entry"));
        }
        Ok(LpProblem {
            cost,
            eq_matrix,
            eq_rhs,
            lower_bounds,
            upper_bounds,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rhs.len()
    }

    /// `||Ax - b||_inf`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.eq_matrix
            .mul_vec(x)
            .iter()
            .zip(&self.eq_rhs)
            .map(|(ax, b)| (ax - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Phase-two reduced costs of the structural variables (zero for basic
    /// ones). Only meaningful when `status` is `Optimal`.
    pub reduced_costs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    /// Free nonbasic variable resting at zero.
    Free,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Simplex<'a> {
    p: &'a LpProblem,
    m: usize,
    /// Structural plus artificial variable count.
    total: usize,
    /// Column-major copy of `[A | diag(sign)]`.
    cols: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    /// Row-major `m x m` basis inverse.
    binv: Vec<f64>,
    feas_tol: f64,
    opt_tol: f64,
    iterations: usize,
    max_iter: usize,
    since_refactor: usize,
}

impl<'a> Simplex<'a> {
    fn new(p: &'a LpProblem, feas_tol: f64, opt_tol: f64, max_iter: usize) -> Self {
        let (m, n) = (p.num_rows(), p.num_vars());
        let total = n + m;
        let mut lower = p.lower_bounds.clone();
        let mut upper = p.upper_bounds.clone();
        let mut value = vec![0.0; total];
        let mut state = vec![State::Basic; total];
        for j in 0..n {
            let (v, s) = if lower[j].is_finite() {
                (lower[j], State::AtLower)
            } else if upper[j].is_finite() {
                (upper[j], State::AtUpper)
            } else {
                (0.0, State::Free)
            };
            value[j] = v;
            state[j] = s;
        }

        let mut cols = vec![0.0; total * m];
        for j in 0..n {
            for i in 0..m {
                cols[j * m + i] = p.eq_matrix.get(i, j);
            }
        }
        let ax = p.eq_matrix.mul_vec(&value[..n]);
        let mut binv = vec![0.0; m * m];
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let r = p.eq_rhs[i] - ax[i];
            let sign = if r >= 0.0 { 1.0 } else { -1.0 };
            let a = n + i;
            cols[a * m + i] = sign;
            binv[i * m + i] = sign;
            value[a] = r.abs();
            lower.push(0.0);
            upper.push(f64::INFINITY);
            basis.push(a);
        }

        Simplex {
            p,
            m,
            total,
            cols,
            lower,
            upper,
            value,
            state,
            basis,
            binv,
            feas_tol,
            opt_tol,
            iterations: 0,
            max_iter,
            since_refactor: 0,
        }
    }

    fn n(&self) -> usize {
        self.p.num_vars()
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    /// `B^-1 a`.
    fn ftran(&self, a: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|i| {
                self.binv[i * m..(i + 1) * m]
                    .iter()
                    .zip(a)
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect()
    }

    /// Rebuilds `B^-1` by Gauss-Jordan elimination with partial pivoting and
    /// recomputes the basic values from the nonbasic ones.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let width = 2 * m;
        let mut work = vec![0.0; m * width];
        for (r, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                work[i * width + r] = self.cols[j * m + i];
            }
        }
        for i in 0..m {
            work[i * width + m + i] = 1.0;
        }
        for c in 0..m {
            let (mut piv, mut best) = (c, work[c * width + c].abs());
            for i in c + 1..m {
                let v = work[i * width + c].abs();
                if v > best {
                    piv = i;
                    best = v;
                }
            }
            if best < 1e-13 {
                return Err(Error::Lp(format!(
                    "singular basis at column {c} (pivot {best:e})"
                )));
            }
            if piv != c {
                for k in 0..width {
                    work.swap(c * width + k, piv * width + k);
                }
            }
            let d = work[c * width + c];
            for k in 0..width {
                work[c * width + k] /= d;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = work[i * width + c];
                if f != 0.0 {
                    for k in 0..width {
                        work[i * width + k] -= f * work[c * width + k];
                    }
                }
            }
        }
        for i in 0..m {
            self.binv[i * m..(i + 1) * m].copy_from_slice(&work[i * width + m..(i + 1) * width]);
        }

        let mut rhs = self.p.eq_rhs.clone();
        for j in 0..self.total {
            if self.state[j] != State::Basic && self.value[j] != 0.0 {
                let v = self.value[j];
                for (r, a) in rhs.iter_mut().zip(self.column(j)) {
                    *r -= a * v;
                }
            }
        }
        let xb = self.ftran(&rhs);
        for (r, &j) in self.basis.iter().enumerate() {
            self.value[j] = xb[r];
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn refactor_with_retry(&mut self) -> Result<()> {
        match self.refactor() {
            Ok(()) => Ok(()),
            Err(_) => self.refactor(),
        }
    }

    /// Runs simplex iterations on `cost` (indexed over all variables).
    fn optimize(&mut self, cost: &[f64]) -> Result<Outcome> {
        let m = self.m;
        let n_struct = self.n();
        let mut stalled = 0usize;
        let mut bland = false;
        let mut objective = self.objective(cost);

        loop {
            if self.iterations >= self.max_iter {
                return Ok(Outcome::IterationLimit);
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor_with_retry()?;
            }

            // pi = c_B' B^-1
            let mut pi = vec![0.0; m];
            for (r, &j) in self.basis.iter().enumerate() {
                let cb = cost[j];
                if cb != 0.0 {
                    for (p, b) in pi.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                        *p += cb * b;
                    }
                }
            }

            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.total {
                let st = self.state[j];
                if st == State::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = cost[j]
                    - pi.iter()
                        .zip(self.column(j))
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                let dir = match st {
                    State::AtLower if d < -self.opt_tol => 1.0,
                    State::AtUpper if d > self.opt_tol => -1.0,
                    State::Free if d.abs() > self.opt_tol => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir, d));
                    break;
                }
                if entering.is_none_or(|(_, _, best)| d.abs() > best.abs()) {
                    entering = Some((j, dir, d));
                }
            }
            let Some((q, dir, _)) = entering else {
                return Ok(Outcome::Optimal);
            };

            let alpha = self.ftran(self.column(q));
            // x_B moves by -dir * theta * alpha
            let mut theta = self.upper[q] - self.lower[q];
            let mut leave: Option<usize> = None;
            let mut best_pivot = 0.0;
            for r in 0..m {
                let rate = -dir * alpha[r];
                let b = self.basis[r];
                let room = if rate < -PIVOT_TOL {
                    if !self.lower[b].is_finite() {
                        continue;
                    }
                    (self.value[b] - self.lower[b]).max(0.0) / -rate
                } else if rate > PIVOT_TOL {
                    if !self.upper[b].is_finite() {
                        continue;
                    }
                    (self.upper[b] - self.value[b]).max(0.0) / rate
                } else {
                    continue;
                };
                let tie = 1e-12 * (1.0 + room);
                let better = match leave {
                    None => room < theta,
                    Some(_) if room < theta - tie => true,
                    Some(l) if room <= theta + tie => {
                        if bland {
                            b < self.basis[l]
                        } else {
                            alpha[r].abs() > best_pivot
                        }
                    }
                    Some(_) => false,
                };
                if better {
                    theta = room;
                    leave = Some(r);
                    best_pivot = alpha[r].abs();
                }
            }

            if !theta.is_finite() {
                return Ok(Outcome::Unbounded);
            }

            self.iterations += 1;
            for r in 0..m {
                let b = self.basis[r];
                self.value[b] -= dir * theta * alpha[r];
            }
            self.value[q] += dir * theta;

            match leave {
                None => {
                    // bound flip
                    self.state[q] = if dir > 0.0 {
                        State::AtUpper
                    } else {
                        State::AtLower
                    };
                    self.value[q] = if dir > 0.0 {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    };
                }
                Some(r) => {
                    let out = self.basis[r];
                    let rate = -dir * alpha[r];
                    if rate < 0.0 {
                        self.state[out] = State::AtLower;
                        self.value[out] = self.lower[out];
                    } else {
                        self.state[out] = State::AtUpper;
                        self.value[out] = self.upper[out];
                    }
                    if out >= n_struct {
                        // artificials never re-enter
                        self.upper[out] = 0.0;
                        self.value[out] = 0.0;
                        self.state[out] = State::AtLower;
                    }
                    self.state[q] = State::Basic;
                    self.basis[r] = q;
                    self.pivot(r, &alpha);
                }
            }

            let next = self.objective(cost);
            if next < objective - 1e-12 * (1.0 + objective.abs()) {
                stalled = 0;
                bland = false;
            } else {
                stalled += 1;
                if stalled >= 3 * n_struct.max(1) {
                    bland = true;
                }
            }
            objective = next;
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let inv = 1.0 / alpha[r];
        for k in 0..m {
            self.binv[r * m + k] *= inv;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (row_r, after) = rest.split_at_mut(m);
        for (i, chunk) in before.chunks_mut(m).chain(after.chunks_mut(m)).enumerate() {
            let ai = alpha[if i < r { i } else { i + 1 }];
            if ai != 0.0 {
                for (x, y) in chunk.iter_mut().zip(row_r.iter()) {
                    *x -= ai * y;
                }
            }
        }
        self.since_refactor += 1;
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        cost.iter().zip(&self.value).map(|(c, x)| c * x).sum()
    }

    /// Swaps zero-valued basic artificials for structural columns where some
    /// pivot is available; rows with none are redundant and keep theirs.
    fn drive_out_artificials(&mut self) -> Result<()> {
        let n = self.n();
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < n {
                continue;
            }
            let row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n {
                if self.state[j] == State::Basic {
                    continue;
                }
                let a: f64 = row.iter().zip(self.column(j)).map(|(x, y)| x * y).sum();
                if a.abs() > 1e-7 && best.is_none_or(|(_, b)| a.abs() > b) {
                    best = Some((j, a.abs()));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.ftran(self.column(q));
                let out = self.basis[r];
                self.upper[out] = 0.0;
                self.value[out] = 0.0;
                self.state[out] = State::AtLower;
                self.state[q] = State::Basic;
                self.basis[r] = q;
                self.pivot(r, &alpha);
            }
        }
        for j in n..self.total {
            self.upper[j] = 0.0;
        }
        self.refactor_with_retry()
    }

    fn solution(&self, status: LpStatus, reduced_costs: Vec<f64>) -> LpSolution {
        let n = self.n();
        let mut x = self.value[..n].to_vec();
        for (j, xj) in x.iter_mut().enumerate() {
            // snap to bounds within tolerance
            if (*xj - self.lower[j]).abs() <= self.feas_tol {
                *xj = self.lower[j];
            } else if (*xj - self.upper[j]).abs() <= self.feas_tol {
                *xj = self.upper[j];
            }
        }
        let objective = self.p.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpSolution {
            status,
            x,
            objective,
            iterations: self.iterations,
            reduced_costs,
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            for (p, b) in pi.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                *p += cost[j] * b;
            }
        }
        (0..self.n())
            .map(|j| {
                if self.state[j] == State::Basic {
                    0.0
                } else {
                    cost[j]
                        - pi.iter()
                            .zip(self.column(j))
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                }
            })
            .collect()
    }
}

/// Solves `p`. Infeasible, unbounded and iteration-limited runs are statuses;
/// `Err` is reserved for invalid tolerances and a basis that cannot be
/// refactored.
pub fn solve_lp(p: &LpProblem, feas_tol: f64, opt_tol: f64, max_iter: usize) -> Result<LpSolution> {
    if !(feas_tol > 0.0 && opt_tol > 0.0) {
        return Err(Error::domain("tolerances must be positive"));
    }
    let n = p.num_vars();
    let mut s = Simplex::new(p, feas_tol, opt_tol, max_iter);

    let mut phase_one = vec![0.0; s.total];
    phase_one[n..].fill(1.0);
    match s.optimize(&phase_one)? {
        Outcome::IterationLimit => {
            return Ok(s.solution(LpStatus::IterationLimit, vec![0.0; n]));
        }
        // Phase one is bounded below by zero.
        Outcome::Unbounded | Outcome::Optimal => {}
    }
    s.refactor_with_retry()?;
    let scale = 1.0 + p.eq_rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let infeasibility: f64 = s.value[n..].iter().sum();
    if infeasibility > feas_tol * scale {
        return Ok(s.solution(LpStatus::Infeasible, vec![0.0; n]));
    }
    s.drive_out_artificials()?;

    let mut phase_two = p.cost.clone();
    phase_two.resize(s.total, 0.0);
    let status = match s.optimize(&phase_two)? {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterationLimit => LpStatus::IterationLimit,
    };
    s.refactor_with_retry()?;
    let rc = s.reduced_costs(&phase_two);
    Ok(s.solution(status, rc))
}
