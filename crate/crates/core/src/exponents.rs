//! Growth exponents of the expected face count of a randomly projected
//! cross-polytope (general signals) or simplex (nonnegative signals).
//!
//! Everything here is computed numerically from the defining equations: the
//! internal-angle saddle point comes from a bracketed root solve, the
//! external-angle exponent from a one-dimensional convex minimization. No
//! `erfinv` closed forms are used, so these values serve as the independent
//! side of the equivalence check in [`crate::thresholds`].

use std::f64::consts::{FRAC_2_SQRT_PI, LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special_fn::{entropy, erf, erfc, gaussian_pdf, gaussian_tail, Probability};

/// Which recovery program, and therefore which polytope, is analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Signed sparse vectors, plain `min ||x||_1`; cross-polytope.
    General,
    /// Nonnegative sparse vectors, `min ||x||_1` with `x >= 0`; simplex.
    Nonnegative,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::General, Variant::Nonnegative];

    pub fn name(self) -> &'static str {
        match self {
            Variant::General => "general",
            Variant::Nonnegative => "nonnegative",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "general" | "signed" => Ok(Variant::General),
            "nonnegative" | "nonneg" => Ok(Variant::Nonnegative),
            other => Err(Error::domain(format!("unknown variant `{other}`"))),
        }
    }
}

/// Undersampling ratio `alpha = m/n` and sparsity ratio `beta = k/n`, with
/// `0 < beta < alpha < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratios {
    alpha: f64,
    beta: f64,
}

impl Ratios {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite ratios alpha = {alpha}, beta = {beta}"
            )));
        }
        if !(0.0 < beta && beta < alpha && alpha < 1.0) {
            return Err(Error::domain(format!(
                "need 0 < beta < alpha < 1, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Ratios { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `beta / alpha`.
    pub fn gamma(&self) -> f64 {
        self.beta / self.alpha
    }
}

/// All exponents at one `(alpha, beta)`, in nats per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentBreakdown {
    pub alpha: f64,
    pub beta: f64,
    pub variant: Variant,
    pub psi_com: f64,
    pub psi_int: f64,
    pub psi_ext: f64,
    /// `psi_com - psi_int - psi_ext`.
    pub psi_net: f64,
    /// Saddle point `s` of the internal-angle equation.
    pub s_root: f64,
    /// Minimizer of the external-angle objective.
    pub y_min: f64,
}

/// Residual bound on the internal-angle root equation.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-13;
/// Bound on the external objective's derivative at an interior minimizer.
pub const STATIONARITY_TOL: f64 = 1e-10;
const MAX_ITER: usize = 200;

/// Fraction inside the binary entropy of the combinatorial term.
fn face_fraction(r: &Ratios) -> f64 {
    (r.alpha - r.beta) / (1.0 - r.beta)
}

/// Exponent of the face-count prefactor, `n^-1 log C`.
pub fn combinatorial_exponent(r: &Ratios, v: Variant) -> f64 {
    // face_fraction is in (0, 1) for valid ratios
    let h = entropy(Probability::new(face_fraction(r)).expect("valid ratios"));
    let base = (1.0 - r.beta) * h;
    match v {
        Variant::General => (r.alpha - r.beta) * LN_2 + base,
        Variant::Nonnegative => base,
    }
}

/// The combinatorial exponent with the entropy written out term by term.
pub fn combinatorial_exponent_expanded(r: &Ratios, v: Variant) -> f64 {
    let (a, b) = (r.alpha, r.beta);
    let base = -(a - b) * ((a - b) / (1.0 - b)).ln() - (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln();
    match v {
        Variant::General => (a - b) * LN_2 + base,
        Variant::Nonnegative => base,
    }
}

/// `s Phi(s) - (1 - gamma) phi(s)`; negative at 0, positive for large `s`.
pub fn internal_root_residual(s: f64, gamma: f64) -> f64 {
    s * gaussian_tail(s) - (1.0 - gamma) * gaussian_pdf(s)
}

/// Solves `Phi(s) = (1 - gamma) phi(s) / s` for `s > 0`.
///
/// The equation is used in the product form [`internal_root_residual`], which
/// stays finite at `s = 0`. The upper bracket grows geometrically from 1.
pub fn solve_internal_root(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::domain(format!("gamma = {gamma} outside (0, 1)")));
    }
    let g = |s: f64| internal_root_residual(s, gamma);

    let mut hi = 1.0;
    let mut expansions = 0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        expansions += 1;
        // Both terms underflow near s = 38.
        if hi > 32.0 || expansions > MAX_ITER {
            return Err(Error::Convergence {
                what: "internal-angle root bracket",
                iterations: expansions,
                detail: format!("gamma = {gamma}, no sign change up to s = {hi}"),
            });
        }
    }

    let changes = count_sign_changes(&g, 0.0, hi, 64);
    if changes != 1 {
        return Err(Error::MultipleRoots {
            what: "internal-angle root equation",
            count: changes,
        });
    }

    let s = bisect(&g, 0.0, hi).ok_or_else(|| Error::Convergence {
        what: "internal-angle root",
        iterations: MAX_ITER,
        detail: format!("gamma = {gamma}"),
    })?;
    let residual = g(s);
    if residual.abs() > ROOT_RESIDUAL_TOL || s <= 0.0 {
        return Err(Error::Convergence {
            what: "internal-angle root",
            iterations: MAX_ITER,
            detail: format!("gamma = {gamma}, s = {s}, residual = {residual:e}"),
        });
    }
    Ok(s)
}

/// Internal-angle exponent and the saddle point used to evaluate it.
///
/// Both variants use the same saddle-point recipe; only the threshold at which
/// it is evaluated differs.
pub fn internal_exponent(r: &Ratios, _v: Variant) -> Result<(f64, f64)> {
    let gamma = r.gamma();
    let s = solve_internal_root(gamma)?;
    Ok((internal_exponent_at(r, s), s))
}

/// `(alpha - beta) (xi_gamma(y_gamma) + log 2)` for a given saddle point `s`.
pub(crate) fn internal_exponent_at(r: &Ratios, s: f64) -> f64 {
    let gamma = r.gamma();
    let y = gamma / (1.0 - gamma) * s;
    let xi = -0.5 * y * y * (1.0 - gamma) / gamma - 0.5 * (2.0 / PI).ln() + (y / gamma).ln();
    (r.alpha - r.beta) * (xi + LN_2)
}

/// `log erf(y)` for `y > 0`, accurate when `erf(y)` is close to 1.
fn ln_erf(y: f64) -> f64 {
    let e = erf(y);
    if e < 0.5 {
        e.ln()
    } else {
        (-erfc(y)).ln_1p()
    }
}

/// `log((1 + erf(y)) / 2)`.
fn ln_half_one_plus_erf(y: f64) -> f64 {
    (-0.5 * erfc(y)).ln_1p()
}

/// External-angle objective `alpha y^2 - (1 - alpha) log P(y)`, with
/// `P = erf` (general) or `P = (1 + erf) / 2` (nonnegative).
pub fn external_objective(y: f64, r: &Ratios, v: Variant) -> Result<f64> {
    let a = r.alpha;
    match v {
        Variant::General => {
            if !(y > 0.0) {
                return Err(Error::domain(format!(
                    "general external objective needs y > 0, got {y}"
                )));
            }
            Ok(a * y * y - (1.0 - a) * ln_erf(y))
        }
        Variant::Nonnegative => {
            if !(y >= 0.0) {
                return Err(Error::domain(format!(
                    "nonnegative external objective needs y >= 0, got {y}"
                )));
            }
            Ok(a * y * y - (1.0 - a) * ln_half_one_plus_erf(y))
        }
    }
}

/// Analytic derivative of [`external_objective`] in `y`.
pub fn external_derivative(y: f64, r: &Ratios, v: Variant) -> f64 {
    let a = r.alpha;
    let density = FRAC_2_SQRT_PI * (-y * y).exp();
    let mass = match v {
        Variant::General => erf(y),
        Variant::Nonnegative => 1.0 + erf(y),
    };
    2.0 * a * y - (1.0 - a) * density / mass
}

/// Minimum of the external objective over `y >= 0` and its minimizer.
///
/// Golden-section search narrows a bracket around the minimizer; bisection on
/// the analytic derivative then pins it to full precision.
pub fn external_exponent(r: &Ratios, v: Variant) -> Result<(f64, f64)> {
    let d = |y: f64| external_derivative(y, r, v);
    let f = |y: f64| external_objective(y, r, v).unwrap_or(f64::INFINITY);

    if v == Variant::Nonnegative && d(0.0) >= 0.0 {
        return Ok((external_objective(0.0, r, v)?, 0.0));
    }

    let mut hi = 1.0;
    let mut expansions = 0;
    while d(hi) <= 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 64 {
            return Err(Error::Convergence {
                what: "external-angle bracket",
                iterations: expansions,
                detail: format!("alpha = {}, derivative still negative at y = {hi}", r.alpha),
            });
        }
    }

    let (mut lo, mut up) = golden_section(&f, 0.0, hi, 1e-3 * hi);
    if !(d(lo) < 0.0 && d(up) > 0.0) {
        // The golden bracket is only approximate near flat regions.
        lo = 0.0;
        up = hi;
    }
    if lo == 0.0 && v == Variant::General {
        // derivative diverges to -inf at 0
        lo = f64::MIN_POSITIVE;
    }

    let y = bisect(&d, lo, up).ok_or_else(|| Error::Convergence {
        what: "external-angle minimizer",
        iterations: MAX_ITER,
        detail: format!("alpha = {}, bracket [{lo}, {up}]", r.alpha),
    })?;
    let slope = d(y);
    if slope.abs() > STATIONARITY_TOL {
        return Err(Error::Convergence {
            what: "external-angle minimizer",
            iterations: MAX_ITER,
            detail: format!(
                "alpha = {}, y = {y}, derivative = {slope:e}, bracket [{lo}, {up}]",
                r.alpha
            ),
        });
    }
    Ok((external_objective(y, r, v)?, y))
}

/// Net exponent with all of its parts; negative means recovery succeeds with
/// overwhelming probability.
pub fn net_exponent(r: &Ratios, v: Variant) -> Result<ExponentBreakdown> {
    let psi_com = combinatorial_exponent(r, v);
    let (psi_int, s_root) = internal_exponent(r, v)?;
    let (psi_ext, y_min) = external_exponent(r, v)?;
    Ok(ExponentBreakdown {
        alpha: r.alpha,
        beta: r.beta,
        variant: v,
        psi_com,
        psi_int,
        psi_ext,
        psi_net: psi_com - psi_int - psi_ext,
        s_root,
        y_min,
    })
}

fn count_sign_changes(g: &impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> usize {
    let mut prev = g(lo) > 0.0;
    let mut changes = 0;
    for i in 1..=samples {
        let x = lo + (hi - lo) * i as f64 / samples as f64;
        let cur = g(x) > 0.0;
        if cur != prev {
            changes += 1;
        }
        prev = cur;
    }
    changes
}

/// Bisection of a function with `g(lo) < 0 < g(hi)` until the bracket cannot
/// shrink further. `None` if the bracket is invalid or the cap is hit.
pub(crate) fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    if !(g(lo) < 0.0 && g(hi) > 0.0) {
        return None;
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Some(if g(lo).abs() <= g(hi).abs() { lo } else { hi });
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Some(mid);
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    None
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`;
/// returns the final bracket once it is narrower than `width`.
fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..MAX_ITER {
        if b - a <= width {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    (a, b)
}
