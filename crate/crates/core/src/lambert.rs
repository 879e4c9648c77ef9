//! The two real branches of the Lambert W function and their asymptotic
//! expansions.
//!
//! `W_p` (principal) solves `w e^w = x` with `w >= -1` for `x >= -1/e`;
//! `W_m` (secondary) is the other real solution, `w <= -1`, on `[-1/e, 0)`.
//! Both are computed by a bracketed Halley iteration that falls back to
//! bisection whenever a step leaves the bracket.

use std::f64::consts::E;

use crate::error::{Result, VexpError};

/// `-1/e`, the common endpoint of the two real branches.
pub const BRANCH_POINT: f64 = -1.0 / E;

/// Arguments within this distance of `-1/e` are answered with exactly `-1`.
const BRANCH_SNAP: f64 = 1e-12;
/// Arguments this far below `-1/e` are clamped rather than rejected.
const BELOW_BRANCH_TOL: f64 = 1e-15;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Principal,
    Secondary,
}

/// A computed branch value together with its defining-equation residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchValue {
    pub x: f64,
    pub w: f64,
    pub branch: Branch,
    /// `|w e^w − x|`.
    pub residual: f64,
}

/// Evaluates the requested branch and reports the residual.
pub fn lambert_w(x: f64, branch: Branch) -> Result<BranchValue> {
    let w = match branch {
        Branch::Principal => w_principal(x)?,
        Branch::Secondary => w_secondary(x)?,
    };
    Ok(BranchValue {
        x,
        w,
        branch,
        residual: (w * w.exp() - x).abs(),
    })
}

/// Principal branch `W_p(x)`, `x >= -1/e`.
pub fn w_principal(x: f64) -> Result<f64> {
    if x.is_nan() || x < BRANCH_POINT - BELOW_BRANCH_TOL {
        return Err(VexpError::domain(format!("W_p is defined for x >= -1/e, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if (x - BRANCH_POINT).abs() <= BRANCH_SNAP {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // f(w) = w e^w - x is increasing on [-1, inf)
    let lo = -1.0;
    let hi = if x > E { x.ln() } else { 1.0 };
    let seed = if x > E {
        principal_series(x.ln(), 3)
    } else if x < -0.25 {
        branch_point_series(x, 1.0)
    } else {
        x.ln_1p()
    };
    Ok(halley(x, seed, lo, hi, true))
}

/// Secondary branch `W_m(x)`, `-1/e <= x < 0`.
pub fn w_secondary(x: f64) -> Result<f64> {
    if !(BRANCH_POINT - BELOW_BRANCH_TOL..0.0).contains(&x) {
        return Err(VexpError::domain(format!("W_m is defined for -1/e <= x < 0, got {x}")));
    }
    if (x - BRANCH_POINT).abs() <= BRANCH_SNAP {
        return Ok(-1.0);
    }
    // f(w) = w e^w - x is decreasing on (-inf, -1]: f(-1) < 0, f(-inf) = -x > 0
    let mut lo: f64 = -2.0;
    while lo * lo.exp() < x {
        lo *= 2.0;
    }
    let hi = -1.0;
    let seed = if x > -0.25 {
        secondary_series((-1.0 / x).ln(), 3)
    } else {
        branch_point_series(x, -1.0)
    };
    Ok(halley(x, seed, lo, hi, false))
}

/// `-1 ± p - p²/3 + 11p³/72` with `p = sqrt(2(ex + 1))`.
fn branch_point_series(x: f64, sign: f64) -> f64 {
    let p = sign * (2.0 * (E * x + 1.0)).max(0.0).sqrt();
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
}

/// Safeguarded Halley iteration on `w e^w = x` within `[lo, hi]`.
/// `increasing` states the sign of `f' ` on the bracket.
fn halley(x: f64, seed: f64, mut lo: f64, mut hi: f64, increasing: bool) -> f64 {
    let f = |w: f64| w * w.exp() - x;
    let mut w = if seed.is_finite() && seed > lo && seed < hi {
        seed
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let fw = w * ew - x;
        if fw == 0.0 {
            return w;
        }
        // shrink the bracket using the sign of f
        if (fw > 0.0) == increasing {
            hi = w;
        } else {
            lo = w;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * fw / (2.0 * wp1);
        let mut next = w - fw / denom;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= 4.0 * f64::EPSILON * w.abs().max(1.0) {
            w = next;
            break;
        }
        w = next;
    }
    // pick the better of w and its immediate neighbours
    let mut best = w;
    let mut best_r = f(w).abs();
    for cand in [w.next_up(), w.next_down()] {
        if cand >= lo.min(hi) && cand <= hi.max(lo) {
            let r = f(cand).abs();
            if r < best_r {
                best = cand;
                best_r = r;
            }
        }
    }
    best
}

fn check_terms(terms: usize) -> Result<()> {
    if !(1..=5).contains(&terms) {
        return Err(VexpError::invalid(format!(
            "expansion terms must be in 1..=5, got {terms}"
        )));
    }
    Ok(())
}

/// Partial sum of `ξ − ln ξ + ln ξ/ξ + (ln ξ)²/(2ξ²) − ln ξ/ξ²`, `ξ = ln x`.
fn principal_series(xi: f64, terms: usize) -> f64 {
    let l = xi.ln();
    let parts = [xi, -l, l / xi, l * l / (2.0 * xi * xi), -l / (xi * xi)];
    parts[..terms].iter().sum()
}

/// Partial sum of `−μ − ln μ − ln μ/μ + (ln μ)²/(2μ²) − ln μ/μ²`, `μ = ln(−1/x)`.
fn secondary_series(mu: f64, terms: usize) -> f64 {
    let l = mu.ln();
    let parts = [-mu, -l, -l / mu, l * l / (2.0 * mu * mu), -l / (mu * mu)];
    parts[..terms].iter().sum()
}

/// Large-`x` expansion of `W_p` truncated after `terms` (1 to 5) terms.
/// Requires `ξ = ln x > 1`.
pub fn w_principal_asymptotic(x: f64, terms: usize) -> Result<f64> {
    check_terms(terms)?;
    let xi = x.ln();
    if !(xi > 1.0) {
        return Err(VexpError::domain(format!("expansion needs ln x > 1, got x = {x}")));
    }
    Ok(principal_series(xi, terms))
}

/// Small-`|x|` expansion of `W_m` truncated after `terms` (1 to 5) terms.
/// Requires `μ = ln(−1/x) > 1`.
pub fn w_secondary_asymptotic(x: f64, terms: usize) -> Result<f64> {
    check_terms(terms)?;
    if !(x < 0.0) {
        return Err(VexpError::domain(format!("expansion needs x < 0, got {x}")));
    }
    let mu = (-1.0 / x).ln();
    if !(mu > 1.0) {
        return Err(VexpError::domain(format!("expansion needs ln(-1/x) > 1, got x = {x}")));
    }
    Ok(secondary_series(mu, terms))
}

/// Leading remainder `(ln s)³/s³` of either expansion in its variable `s`.
pub fn expansion_remainder(s: f64) -> f64 {
    let l = s.ln();
    (l / s).powi(3)
}
