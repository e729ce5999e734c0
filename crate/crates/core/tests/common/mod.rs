#![allow(dead_code)]

use polythresh::lp::{DenseMatrix, LpProblem};
use rand::Rng;
use rand_distr::StandardNormal;

/// Outcome of enumerating every basis of a small standard-form LP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Enumerated {
    Infeasible,
    Optimal(f64),
}

/// Solves `b x = rhs` by Gaussian elimination with partial pivoting.
fn solve_square(mut b: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let m = rhs.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| b[i][col].abs().total_cmp(&b[j][col].abs()))?;
        if b[piv][col].abs() < 1e-10 {
            return None;
        }
        b.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..m {
            let f = b[r][col] / b[col][col];
            for c in col..m {
                b[r][c] -= f * b[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| b[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / b[r][r];
    }
    Some(x)
}

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for j in start..n {
        cur.push(j);
        subsets(n, k, j + 1, cur, out);
        cur.pop();
    }
}

/// Every basic feasible solution of `A x = b, x >= 0`, as full vectors.
/// Assumes `A` has full row rank.
pub fn vertices(p: &LpProblem) -> Vec<Vec<f64>> {
    let (m, n) = (p.num_rows(), p.num_vars());
    let mut all = Vec::new();
    subsets(n, m, 0, &mut Vec::new(), &mut all);
    let mut out = Vec::new();
    for basis in all {
        let b: Vec<Vec<f64>> = (0..m)
            .map(|i| basis.iter().map(|&j| p.eq_matrix.get(i, j)).collect())
            .collect();
        let Some(xb) = solve_square(b, p.eq_rhs.clone()) else {
            continue;
        };
        if xb.iter().any(|&v| v < -1e-11) {
            continue;
        }
        let mut x = vec![0.0; n];
        for (&j, v) in basis.iter().zip(xb) {
            x[j] = v;
        }
        out.push(x);
    }
    out
}

pub fn objective(p: &LpProblem, x: &[f64]) -> f64 {
    p.cost.iter().zip(x).map(|(c, v)| c * v).sum()
}

/// Minimum of `c x` over the basic feasible solutions; valid when the LP is
/// bounded below.
pub fn enumerate_bfs(p: &LpProblem) -> Enumerated {
    vertices(p)
        .iter()
        .map(|x| objective(p, x))
        .min_by(f64::total_cmp)
        .map_or(Enumerated::Infeasible, Enumerated::Optimal)
}

/// Random bounded LP with `n <= 8`, `m <= 5`. The cost is `A^T y + r` with
/// `r >= 0`, so the objective is bounded below on the feasible set. Every
/// fourth problem takes an unconstrained right-hand side, which is often
/// infeasible.
pub fn random_lp<R: Rng>(rng: &mut R, index: usize) -> LpProblem {
    let m = rng.random_range(1..=5);
    let n = rng.random_range(m..=8);
    let a: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    let a = DenseMatrix::from_row_major(m, n, a).unwrap();
    let rhs = if index % 4 == 3 {
        (0..m).map(|_| rng.sample(StandardNormal)).collect()
    } else {
        let x0: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    rng.random_range(0.0..2.0)
                } else {
                    0.0
                }
            })
            .collect();
        a.mul_vec(&x0)
    };
    let y: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let cost = (0..n)
        .map(|j| {
            let aty: f64 = (0..m).map(|i| a.get(i, j) * y[i]).sum();
            aty + rng.random_range(0.0..1.0)
        })
        .collect();
    LpProblem::standard(cost, a, rhs).unwrap()
}
