//! Variable-exponent modulars, Luxemburg and Orlicz norms, and the
//! rearrangement form of the `exp(L^α)` norm.
//!
//! All modulars are evaluated in log space cell by cell, so cells of
//! measure `10^-3000` and exponents near `10^4` contribute correctly.

use std::f64::consts::E;

use crate::error::{Result, VexpError};
use crate::exponents::ExponentFunction;
use crate::grid::{common_refinement, SampledFunction};
use crate::numeric::{bisect_predicate, LogSum};

/// Default relative tolerance for norm bisection.
pub const NORM_TOL: f64 = 1e-8;

const MAX_ITER: usize = 200;

/// Outcome of a Luxemburg-type bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormResult {
    pub value: f64,
    /// The modular evaluated at `value` (1 up to tolerance for `f ≠ 0`).
    pub modular_at_value: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

impl NormResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            modular_at_value: 0.0,
            iterations: 0,
            bracket: (0.0, 0.0),
        }
    }
}

fn check_same_cells(f: &SampledFunction, p: &ExponentFunction) -> Result<()> {
    if !f.mesh().same_cells(p.mesh()) {
        return Err(VexpError::invalid("function and exponent live on different meshes"));
    }
    Ok(())
}

/// `ln ρ_λ(f) = ln Σ μ_i (|f_i|/λ)^{p_i}`.
pub fn ln_modular(f: &SampledFunction, p: &ExponentFunction, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(VexpError::invalid(format!("modular needs λ > 0, got {lambda}")));
    }
    check_same_cells(f, p)?;
    Ok(ln_modular_unchecked(f, p, lambda.ln()))
}

fn ln_modular_unchecked(f: &SampledFunction, p: &ExponentFunction, ln_lambda: f64) -> f64 {
    f.mesh()
        .ln_measures()
        .iter()
        .zip(f.values())
        .zip(p.values())
        .filter(|((_, v), _)| **v != 0.0)
        .map(|((m, v), q)| m + q * (v.abs().ln() - ln_lambda))
        .collect::<LogSum>()
        .ln_value()
}

/// `ρ_λ(f) = ∫ (|f|/λ)^{p(x)} dx`.
pub fn modular(f: &SampledFunction, p: &ExponentFunction, lambda: f64) -> Result<f64> {
    Ok(ln_modular(f, p, lambda)?.exp())
}

/// Finds `inf{λ : ρ(λ) ≤ 1}` for a strictly decreasing, continuous
/// `λ ↦ ρ(λ)` given through `ln ρ`.
fn unit_level(ln_rho: impl Fn(f64) -> f64, start: f64, tol: f64) -> Result<NormResult> {
    let mut hi = start.max(f64::MIN_POSITIVE);
    let mut guard = 0;
    while ln_rho(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return Err(VexpError::Resource("could not bracket the norm from above".into()));
        }
    }
    let mut lo = hi;
    guard = 0;
    while ln_rho(lo) <= 0.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 2000 || lo == 0.0 {
            return Err(VexpError::Resource("could not bracket the norm from below".into()));
        }
    }
    let mut iterations = 0;
    let mut rho_hi = ln_rho(hi).exp();
    while iterations < MAX_ITER {
        if hi - lo <= tol * hi && (rho_hi - 1.0).abs() <= tol {
            break;
        }
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let r = ln_rho(mid);
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            rho_hi = r.exp();
        }
    }
    Ok(NormResult {
        value: hi,
        modular_at_value: rho_hi,
        iterations,
        bracket: (lo, hi),
    })
}

/// `‖f‖_{p(·)} = inf{λ > 0 : ρ_λ(f) ≤ 1}`.
pub fn luxemburg_norm(f: &SampledFunction, p: &ExponentFunction, tol: f64) -> Result<NormResult> {
    check_same_cells(f, p)?;
    if f.sup_abs() == 0.0 {
        return Ok(NormResult::zero());
    }
    let start = f.sup_abs() * f.mesh().total_measure() + 1.0;
    unit_level(|l| ln_modular_unchecked(f, p, l.ln()), start, tol)
}

/// Orlicz generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YoungFunction {
    /// `M(t) = t (ln(e + t))^α`, the `L(log L)^α` generator.
    LogLogPower { alpha: f64 },
    /// `M(t) = exp(t^α) − 1`, the `exp(L^α)` generator.
    ExpPower { alpha: f64 },
}

/// Result of a sampled convexity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub convex: bool,
    /// Most negative normalised second difference seen (0 if none).
    pub worst: f64,
    pub at: f64,
}

impl YoungFunction {
    pub fn log_log_power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(VexpError::invalid(format!("α must be positive, got {alpha}")));
        }
        Ok(Self::LogLogPower { alpha })
    }

    pub fn exp_power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(VexpError::invalid(format!("α must be positive, got {alpha}")));
        }
        Ok(Self::ExpPower { alpha })
    }

    /// `ln M(t)` for `t ≥ 0` (−∞ at 0).
    pub fn ln_eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::LogLogPower { alpha } => t.ln() + alpha * (E + t).ln().ln(),
            Self::ExpPower { alpha } => {
                let s = t.powf(alpha);
                if s > 30.0 {
                    s + (-(-s).exp()).ln_1p()
                } else {
                    s.exp_m1().ln()
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.ln_eval(t).exp()
    }

    /// `M⁻¹(y)` for `y ≥ 0`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(VexpError::domain(format!("M⁻¹ needs y >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if let Self::ExpPower { alpha } = *self {
            return Ok(y.ln_1p().powf(1.0 / alpha));
        }
        let ln_y = y.ln();
        let mut hi = y.max(1.0);
        while self.ln_eval(hi) < ln_y {
            hi *= 2.0;
        }
        let (lo, hi) = bisect_predicate(0.0, hi, 0.0, 2000, |t| self.ln_eval(t) >= ln_y);
        Ok(0.5 * (lo + hi))
    }

    /// Checks second differences of `M` on `[0, t_max]`.
    pub fn convexity_report(&self, t_max: f64, samples: usize) -> ConvexityReport {
        let samples = samples.max(3);
        let h = t_max / (samples - 1) as f64;
        let mut worst = 0.0;
        let mut at = 0.0;
        for k in 1..samples - 1 {
            let t = h * k as f64;
            let (a, b, c) = (self.eval(t - h), self.eval(t), self.eval(t + h));
            let d2 = (a - 2.0 * b + c) / (a.abs() + 2.0 * b.abs() + c.abs()).max(f64::MIN_POSITIVE);
            if d2 < worst {
                worst = d2;
                at = t;
            }
        }
        ConvexityReport {
            convex: worst >= -1e-12,
            worst,
            at,
        }
    }
}

/// `ln ∫ M(|f|/λ)`.
pub fn ln_orlicz_modular(f: &SampledFunction, m: &YoungFunction, lambda: f64) -> f64 {
    f.mesh()
        .ln_measures()
        .iter()
        .zip(f.values())
        .filter(|(_, v)| **v != 0.0)
        .map(|(mu, v)| mu + m.ln_eval(v.abs() / lambda))
        .collect::<LogSum>()
        .ln_value()
}

/// `‖f‖_{L_M} = inf{λ : ∫ M(|f|/λ) ≤ 1}`.
pub fn orlicz_norm(f: &SampledFunction, m: &YoungFunction, tol: f64) -> Result<NormResult> {
    if f.sup_abs() == 0.0 {
        return Ok(NormResult::zero());
    }
    let start = f.sup_abs() * f.mesh().total_measure() + 1.0;
    unit_level(|l| ln_orlicz_modular(f, m, l), start, tol)
}

/// `sup_{0<t≤|Ω|} (ln(|Ω|e/t))^{−1/α} f*(t)`.
///
/// On each cell of `f*` the weight increases in `t`, so the supremum is
/// attained at right endpoints.
pub fn exp_zygmund_norm(f: &SampledFunction, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(VexpError::invalid(format!("α must be positive, got {alpha}")));
    }
    let fs = f.decreasing_rearrangement();
    let ln_total = f.mesh().total_measure().ln();
    let mesh = fs.mesh();
    let n = mesh.len();
    Ok((0..n)
        .map(|i| {
            let ln_t = if i + 1 == n {
                ln_total
            } else {
                mesh.ln_right()[i].min(ln_total)
            };
            let weight = (ln_total + 1.0 - ln_t).powf(-1.0 / alpha);
            weight * fs.values()[i]
        })
        .fold(0.0, f64::max))
}

/// Both sides of `‖f‖_{p(·)} ≤ (1 + |Ω|)‖f*‖_{p*(·)}`.
///
/// `f*` and `p*` are rearranged independently and then placed on a common
/// refinement of their meshes.
pub fn rearrangement_norm_bound_check(f: &SampledFunction, p: &ExponentFunction) -> Result<(f64, f64)> {
    let lhs = luxemburg_norm(f, p, NORM_TOL)?.value;
    let fs = f.decreasing_rearrangement();
    let ps = p.decreasing_rearrangement();
    let (mesh, ia, ib) = common_refinement(fs.mesh(), ps.mesh())?;
    let fv = ia.iter().map(|&i| fs.values()[i]).collect();
    let pv = ib.iter().map(|&j| ps.excess()[j]).collect();
    let f_ref = SampledFunction::new(mesh.clone(), fv)?;
    let p_ref = ExponentFunction::from_excess(mesh, pv)?;
    let inner = luxemburg_norm(&f_ref, &p_ref, NORM_TOL)?.value;
    Ok((lhs, (1.0 + f.mesh().total_measure()) * inner))
}
