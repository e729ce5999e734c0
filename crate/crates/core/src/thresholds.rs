//! Closed-form weak thresholds and the check that they zero the net exponent.
//!
//! For general signals the threshold `beta_w(alpha)` solves
//!
//! ```text
//! (1 - beta) / alpha * sqrt(2 / pi) * exp(-e^2) / (sqrt(2) e) = 1,   e = erfinv((1 - alpha) / (1 - beta))
//! ```
//!
//! and for nonnegative signals the same equation holds with `sqrt(1 / (2 pi))`
//! and `e = erfinv(2 (1 - alpha) / (1 - beta) - 1)`.

use std::f64::consts::{LN_2, PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{net_exponent, ExponentBreakdown, Ratios, Variant};
use crate::special_fn::{erf, erfinv, INV_SQRT_2PI, SQRT_2_OVER_PI};

/// Default bound on `|lhs - 1|` at a returned threshold.
pub const THRESHOLD_TOL: f64 = 1e-11;
/// Default bound on `|psi_net|` at the threshold.
pub const NET_TOL: f64 = 1e-8;
/// Bound on every numeric-versus-closed-form gap in an [`EquivalenceReport`].
pub const GAP_TOL: f64 = 1e-8;

const SCAN_POINTS: usize = 256;
const SCAN_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdPoint {
    pub alpha: f64,
    pub beta_w: f64,
    pub variant: Variant,
    /// Threshold equation left side minus one.
    pub residual: f64,
}

impl ThresholdPoint {
    pub fn ratios(&self) -> Ratios {
        Ratios::new(self.alpha, self.beta_w).expect("threshold lies inside (0, alpha)")
    }
}

/// Outcome of comparing the numeric exponent route with the closed forms at
/// the weak threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub point: ThresholdPoint,
    pub breakdown: ExponentBreakdown,
    pub psi_net_at_threshold: f64,
    /// `|s_root - sqrt(2) erfinv(t)|`.
    pub s_root_gap: f64,
    /// `|y_min - erfinv(t)|`.
    pub y_min_gap: f64,
    pub closed_vs_numeric_int: f64,
    pub closed_vs_numeric_ext: f64,
}

impl EquivalenceReport {
    pub fn max_gap(&self) -> f64 {
        self.s_root_gap
            .max(self.y_min_gap)
            .max(self.closed_vs_numeric_int)
            .max(self.closed_vs_numeric_ext)
    }

    pub fn passes(&self, tol_net: f64) -> bool {
        self.psi_net_at_threshold.abs() <= tol_net && self.max_gap() <= GAP_TOL
    }

    pub fn summary(&self) -> String {
        format!(
            "beta_w = {}, psi_net = {:e}, s gap = {:e}, y gap = {:e}, int gap = {:e}, ext gap = {:e}",
            self.point.beta_w,
            self.psi_net_at_threshold,
            self.s_root_gap,
            self.y_min_gap,
            self.closed_vs_numeric_int,
            self.closed_vs_numeric_ext,
        )
    }
}

/// The `erfinv` argument `t` (general) or `t+` (nonnegative).
pub fn erfinv_argument(alpha: f64, beta: f64, v: Variant) -> f64 {
    let ratio = (1.0 - alpha) / (1.0 - beta);
    match v {
        Variant::General => ratio,
        Variant::Nonnegative => 2.0 * ratio - 1.0,
    }
}

/// `erfinv` of [`erfinv_argument`], rejecting the zero argument where the
/// threshold equation divides by zero.
fn guess(alpha: f64, beta: f64, v: Variant) -> Result<f64> {
    Ratios::new(alpha, beta)?;
    let t = erfinv_argument(alpha, beta, v);
    if t == 0.0 {
        return Err(Error::domain(format!(
            "erfinv argument vanishes at alpha = {alpha}, beta = {beta}"
        )));
    }
    erfinv(t)
}

fn equation_constant(v: Variant) -> f64 {
    match v {
        Variant::General => SQRT_2_OVER_PI,
        Variant::Nonnegative => INV_SQRT_2PI,
    }
}

/// Left side of the threshold equation; equals 1 on the weak threshold curve.
pub fn threshold_equation_lhs(alpha: f64, beta: f64, v: Variant) -> Result<f64> {
    let e = guess(alpha, beta, v)?;
    Ok((1.0 - beta) / alpha * equation_constant(v) * (-e * e).exp() / (SQRT_2 * e))
}

/// Lower end of the `beta` range on which the `erfinv` argument lies in
/// `(0, 1)`.
fn solvable_floor(alpha: f64, v: Variant) -> f64 {
    match v {
        Variant::General => 0.0,
        Variant::Nonnegative => (2.0 * alpha - 1.0).max(0.0),
    }
}

/// Solves the threshold equation in `beta` for fixed `alpha`.
///
/// A log-spaced scan of `beta` looks for the sign change of `lhs - 1`; more
/// than one sign change is reported rather than resolved.
pub fn weak_threshold(alpha: f64, v: Variant, tol: f64) -> Result<ThresholdPoint> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha = {alpha} outside (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance {tol} must be positive")));
    }
    let floor = solvable_floor(alpha, v);
    let width = alpha - floor;
    let (lo_off, hi_off) = (SCAN_MARGIN * width, (1.0 - SCAN_MARGIN) * width);
    let ratio = (hi_off / lo_off).ln();
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| floor + lo_off * (ratio * i as f64 / (SCAN_POINTS - 1) as f64).exp())
        .collect();

    let f = |beta: f64| threshold_equation_lhs(alpha, beta, v).map(|l| l - 1.0);
    let values = grid.iter().map(|&b| f(b)).collect::<Result<Vec<_>>>()?;

    let brackets: Vec<usize> = (1..grid.len())
        .filter(|&i| (values[i - 1] > 0.0) != (values[i] > 0.0))
        .collect();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let i = match brackets.as_slice() {
        [] => return Err(Error::NoSignChange { alpha, lo, hi }),
        [i] => *i,
        many => {
            return Err(Error::MultipleSignChanges {
                alpha,
                lo,
                hi,
                count: many.len(),
            })
        }
    };

    let (mut a, mut b) = (grid[i - 1], grid[i]);
    let positive_at_a = values[i - 1] > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if (fm > 0.0) == positive_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    let (ra, rb) = (f(a)?, f(b)?);
    let (beta_w, residual) = if ra.abs() <= rb.abs() {
        (a, ra)
    } else {
        (b, rb)
    };
    if residual.abs() > tol {
        return Err(Error::Convergence {
            what: "weak threshold",
            iterations: 200,
            detail: format!("alpha = {alpha}, beta = {beta_w}, residual = {residual:e}"),
        });
    }
    Ok(ThresholdPoint {
        alpha,
        beta_w,
        variant: v,
        residual,
    })
}

/// Internal-angle exponent with the saddle point replaced by
/// `sqrt(2) erfinv(t)`.
pub fn closed_internal_exponent(alpha: f64, beta: f64, v: Variant) -> Result<f64> {
    let s = SQRT_2 * guess(alpha, beta, v)?;
    let d = alpha - beta;
    Ok(
        -0.5 * beta * s * s - 0.5 * d * (2.0 / PI).ln() + d * alpha.ln() - d * d.ln()
            + d * s.ln()
            + d * LN_2,
    )
}

/// External-angle objective evaluated at the guess `y = erfinv(t)`.
pub fn closed_external_exponent(alpha: f64, beta: f64, v: Variant) -> Result<f64> {
    let y = guess(alpha, beta, v)?;
    let mass = match v {
        Variant::General => erf(y),
        Variant::Nonnegative => 0.5 * (1.0 + erf(y)),
    };
    Ok(alpha * y * y - (1.0 - alpha) * mass.ln())
}

/// Computes the weak threshold, then checks the fully numeric exponents there
/// against zero and against the closed forms.
///
/// Returns the report on success and [`Error::Equivalence`] carrying the same
/// report when any bound is violated.
pub fn verify_equivalence(alpha: f64, v: Variant, tol_net: f64) -> Result<EquivalenceReport> {
    let point = weak_threshold(alpha, v, THRESHOLD_TOL)?;
    let report = equivalence_at(point)?;
    if report.passes(tol_net) {
        Ok(report)
    } else {
        Err(Error::Equivalence(Box::new(report)))
    }
}

/// Gap computations at a given threshold point, without pass/fail judgement.
pub fn equivalence_at(point: ThresholdPoint) -> Result<EquivalenceReport> {
    let (alpha, beta, v) = (point.alpha, point.beta_w, point.variant);
    let breakdown = net_exponent(&point.ratios(), v)?;
    let e = guess(alpha, beta, v)?;
    Ok(EquivalenceReport {
        point,
        breakdown,
        psi_net_at_threshold: breakdown.psi_net,
        s_root_gap: (breakdown.s_root - SQRT_2 * e).abs(),
        y_min_gap: (breakdown.y_min - e).abs(),
        closed_vs_numeric_int: (closed_internal_exponent(alpha, beta, v)? - breakdown.psi_int)
            .abs(),
        closed_vs_numeric_ext: (closed_external_exponent(alpha, beta, v)? - breakdown.psi_ext)
            .abs(),
    })
}

/// Weak thresholds over a strictly increasing `alpha` grid. Failures are kept
/// per point; output order follows `alphas`.
pub fn threshold_curve(alphas: &[f64], v: Variant) -> Result<Vec<Result<ThresholdPoint>>> {
    if alphas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("alpha grid must be strictly increasing"));
    }
    Ok(alphas
        .par_iter()
        .map(|&a| weak_threshold(a, v, THRESHOLD_TOL))
        .collect())
}
