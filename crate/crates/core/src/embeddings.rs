//! Embedding conditions for `L^{p(·)} ⊂ L(log L)^α` and
//! `exp(L^α) ⊂ L^{q(·)}`, with numerical witnesses for both directions.
//!
//! The conditions are statements about `λ → 0` (or `λ → ∞`); a finite grid
//! can only certify trends. Every checker therefore reports the per-λ
//! values, their behaviour under a 2× refinement of the λ-grid and the
//! growth over the last two decades, and derives a verdict from those.

use std::f64::consts::{E, LN_10};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, VexpError};
use crate::exponents::{sampled_increasing, ExponentFunction, LambdaGrid, ThetaSpec};
use crate::grid::{Mesh, SampledFunction};
use crate::norms::{luxemburg_norm, orlicz_norm, YoungFunction, NORM_TOL};
use crate::numeric::{bisect_predicate, ln_gauss_legendre, ln_gauss_legendre_panels, LogSum};

/// Relative drift of the supremum under refinement accepted as stable.
pub const STABILITY_TOL: f64 = 0.05;

/// Fraction of the critical growth `κ·Δ lnln` above which `ln C` counts as
/// growing without bound.
pub const GROWTH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `|{p ≤ 1+λ}| ≤ C^{1/λ} λ^{α/λ} ln^{−α/λ}(1/λ)` as `λ → 0`.
    LevelSetsNearOne,
    /// `|{q ≥ λ}| ≤ C^λ λ^{−λ/α} (ln λ)^{−λ/α}` as `λ → ∞`.
    ExpLevelSets,
}

/// One grid point of a condition check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionRow {
    pub lambda: f64,
    /// `ln` of the level-set measure.
    pub ln_measure: f64,
    /// `ln C(λ)`; `−∞` where the level set is empty.
    pub ln_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingReport {
    pub condition: Condition,
    pub alpha: f64,
    pub rows: Vec<ConditionRow>,
    /// `sup ln C` on the grid and on its 2× refinement.
    pub sup_ln_c: f64,
    pub sup_ln_c_refined: f64,
    /// `|C_sup' / C_sup − 1|`.
    pub drift: f64,
    /// Increments of `ln C` over the second-to-last and last decade.
    pub increments: (f64, f64),
    /// Last-decade increment divided by `κ·Δ lnln`.
    pub growth_rate: f64,
    pub verdict: Verdict,
}

impl EmbeddingReport {
    pub fn sup_c(&self) -> f64 {
        self.sup_ln_c.exp()
    }
}

fn ln_c_level_sets(ln_m: f64, lambda: f64, alpha: f64) -> f64 {
    if ln_m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    lambda * ln_m - alpha * lambda.ln() + alpha * (1.0 / lambda).ln().ln()
}

fn ln_c_exp(ln_m: f64, big: f64, alpha: f64) -> f64 {
    if ln_m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    ln_m / big + (big.ln() + big.ln().ln()) / alpha
}

/// `u` is the asymptotic variable (`ln 1/λ` or `ln Λ`), increasing toward
/// the limit; `kappa` the coefficient of `lnln` in `ln C`.
fn growth(rows: &[(f64, f64)], kappa: f64) -> ((f64, f64), f64) {
    let (u_end, c_end) = *rows.last().expect("non-empty grid");
    let nearest = |u: f64| {
        rows.iter()
            .min_by(|a, b| (a.0 - u).abs().partial_cmp(&(b.0 - u).abs()).unwrap())
            .copied()
            .unwrap()
    };
    let (u_mid, c_mid) = nearest(u_end - LN_10);
    let (_, c_far) = nearest(u_end - 2.0 * LN_10);
    let inc = (c_mid - c_far, c_end - c_mid);
    let scale = kappa * (u_end.ln() - u_mid.ln());
    let rate = if scale > 0.0 { inc.1 / scale } else { f64::NAN };
    (inc, rate)
}

fn finite_sup(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

fn assemble(
    condition: Condition,
    alpha: f64,
    rows: Vec<ConditionRow>,
    refined_sup: f64,
    asymptotic: Vec<(f64, f64)>,
    kappa: f64,
) -> EmbeddingReport {
    let sup = finite_sup(rows.iter().map(|r| r.ln_c));
    let (increments, growth_rate) = growth(&asymptotic, kappa);
    let drift = if sup == f64::NEG_INFINITY && refined_sup == f64::NEG_INFINITY {
        0.0
    } else {
        ((refined_sup - sup).exp() - 1.0).abs()
    };
    let verdict = if sup == f64::NEG_INFINITY && refined_sup == f64::NEG_INFINITY {
        Verdict::Satisfied
    } else if increments.0 > 0.0 && increments.1 > 0.0 && growth_rate >= GROWTH_THRESHOLD {
        Verdict::Violated
    } else if sup.is_finite() && drift <= STABILITY_TOL {
        Verdict::Satisfied
    } else {
        Verdict::Inconclusive
    };
    EmbeddingReport {
        condition,
        alpha,
        rows,
        sup_ln_c: sup,
        sup_ln_c_refined: refined_sup,
        drift,
        increments,
        growth_rate,
        verdict,
    }
}

fn check_small_grid(grid: &LambdaGrid) -> Result<()> {
    if grid.values()[0] >= (-1.0f64).exp() {
        return Err(VexpError::invalid(format!(
            "λ-grid must lie in (0, 1/e); largest value is {}",
            grid.values()[0]
        )));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(VexpError::invalid(format!("α must be positive, got {alpha}")));
    }
    Ok(())
}

/// Default grid for the near-one checks: `0.3 ≥ λ ≥ 10⁻³`, 50 per decade.
pub fn default_small_grid() -> LambdaGrid {
    LambdaGrid::geometric(0.3, 1e-3, 50).expect("valid grid")
}

/// Default grid for the exponential check: `4 ≤ Λ ≤ 10³`, 50 per decade.
pub fn default_large_grid() -> LambdaGrid {
    LambdaGrid::geometric(1e3, 4.0, 50).expect("valid grid")
}

fn rows_level_sets(p: &ExponentFunction, alpha: f64, grid: &LambdaGrid) -> Vec<ConditionRow> {
    grid.values()
        .par_iter()
        .map(|&lambda| {
            let ln_measure = p.ln_sublevel_measure(lambda);
            ConditionRow {
                lambda,
                ln_measure,
                ln_c: ln_c_level_sets(ln_measure, lambda, alpha),
            }
        })
        .collect()
}

/// Checks `m(λ) ≤ C^{1/λ} λ^{α/λ} ln^{−α/λ}(1/λ)` on a grid inside `(0, 1/e)`.
pub fn check_condition_a(p: &ExponentFunction, alpha: f64, grid: &LambdaGrid) -> Result<EmbeddingReport> {
    check_alpha(alpha)?;
    check_small_grid(grid)?;
    let rows = rows_level_sets(p, alpha, grid);
    let refined_sup = finite_sup(rows_level_sets(p, alpha, &grid.refined()).iter().map(|r| r.ln_c));
    // grid is decreasing in λ, i.e. increasing in ln(1/λ)
    let asymptotic = rows.iter().map(|r| (-r.lambda.ln(), r.ln_c)).collect();
    Ok(assemble(
        Condition::LevelSetsNearOne,
        alpha,
        rows,
        refined_sup,
        asymptotic,
        alpha,
    ))
}

fn rows_exp(q: &ExponentFunction, alpha: f64, values: &[f64]) -> Vec<ConditionRow> {
    values
        .par_iter()
        .map(|&big| {
            let ln_measure = q.ln_superlevel_measure(big);
            ConditionRow {
                lambda: big,
                ln_measure,
                ln_c: ln_c_exp(ln_measure, big, alpha),
            }
        })
        .collect()
}

/// Checks `|{q ≥ Λ}| ≤ C^Λ Λ^{−Λ/α} (ln Λ)^{−Λ/α}` on a grid inside
/// `(e, ∞)`.
pub fn check_exp_embedding_condition(q: &ExponentFunction, alpha: f64, grid: &LambdaGrid) -> Result<EmbeddingReport> {
    check_alpha(alpha)?;
    if *grid.values().last().unwrap() <= E {
        return Err(VexpError::invalid(format!(
            "Λ-grid must lie in (e, ∞); smallest value is {}",
            grid.values().last().unwrap()
        )));
    }
    // ascending Λ
    let values: Vec<f64> = grid.values().iter().rev().copied().collect();
    let rows = rows_exp(q, alpha, &values);
    let refined: Vec<f64> = grid.refined().values().to_vec();
    let refined_sup = finite_sup(rows_exp(q, alpha, &refined).iter().map(|r| r.ln_c));
    let asymptotic = rows.iter().map(|r| (r.lambda.ln(), r.ln_c)).collect();
    Ok(assemble(
        Condition::ExpLevelSets,
        alpha,
        rows,
        refined_sup,
        asymptotic,
        1.0 / alpha,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiminfVerdict {
    /// The liminf expression stays bounded away from 0.
    PositiveStable,
    /// The expression decays toward 0.
    TendsToZero,
    Inconclusive,
}

impl fmt::Display for LiminfVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LiminfVerdict::PositiveStable => "positive-stable",
            LiminfVerdict::TendsToZero => "tends-to-zero",
            LiminfVerdict::Inconclusive => "inconclusive",
        })
    }
}

/// Outcome of the liminf check.
#[derive(Debug, Clone, PartialEq)]
pub struct LiminfReport {
    /// `(λ, ln E(λ))` on the grid.
    pub rows: Vec<(f64, f64)>,
    /// Minimum of `ln E` over the smallest decade, and on the refined grid.
    pub min_ln: f64,
    pub min_ln_refined: f64,
    /// `ln E(λ_min) − ln E(10 λ_min)`.
    pub trend: f64,
    pub verdict: LiminfVerdict,
    pub note: &'static str,
}

impl LiminfReport {
    /// `exp(min ln E)`; may underflow to 0 when the expression decays.
    pub fn estimate(&self) -> f64 {
        self.min_ln.exp()
    }
}

pub const LIMINF_NOTE: &str = "non-embedding certified for the rearranged exponent class";

fn ln_liminf_expression(ln_m: f64, lambda: f64, alpha: f64, theta: &ThetaSpec) -> f64 {
    if ln_m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let inv = 1.0 / lambda;
    ln_m - inv * theta.ln_theta(inv) - alpha * inv * lambda.ln() + alpha * inv * inv.ln().ln()
}

/// Estimates `liminf m(λ) θ(1/λ)^{−1/λ} λ^{−α/λ} ln^{α/λ}(1/λ)` as `λ → 0`.
///
/// Requires `θ` increasing and `θ(1/λ) λ^α (ln 1/λ)^{−α}` increasing in `λ`
/// over the grid range, both checked by sampling.
pub fn check_condition_b(
    p: &ExponentFunction,
    alpha: f64,
    theta: &ThetaSpec,
    grid: &LambdaGrid,
) -> Result<LiminfReport> {
    check_alpha(alpha)?;
    check_small_grid(grid)?;
    let lo = *grid.values().last().unwrap();
    let hi = grid.values()[0];
    if !theta.is_increasing_on(1.0 / hi, 1.0 / lo, 400) {
        return Err(VexpError::Precondition(format!(
            "θ = {} is not increasing on [{}, {}]",
            theta.label(),
            1.0 / hi,
            1.0 / lo
        )));
    }
    // ln(θ(1/λ) λ^α (ln 1/λ)^{−α})
    let weight = |l: f64| theta.ln_theta(1.0 / l) + alpha * l.ln() - alpha * (1.0 / l).ln().ln();
    if !sampled_increasing(weight, lo, hi, 400) {
        return Err(VexpError::Precondition(format!(
            "θ(1/λ)·λ^α·ln^(-α)(1/λ) is not increasing in λ for θ = {}",
            theta.label()
        )));
    }
    let eval = |g: &LambdaGrid| -> Vec<(f64, f64)> {
        g.values()
            .par_iter()
            .map(|&l| (l, ln_liminf_expression(p.ln_sublevel_measure(l), l, alpha, theta)))
            .collect()
    };
    let rows = eval(grid);
    let refined = eval(&grid.refined());
    let last_decade_min = |rs: &[(f64, f64)]| {
        rs.iter()
            .filter(|(l, _)| *l <= lo * 10.0 * (1.0 + 1e-12))
            .map(|r| r.1)
            .fold(f64::INFINITY, f64::min)
    };
    let min_ln = last_decade_min(&rows);
    let min_ln_refined = last_decade_min(&refined);
    let at = |target: f64| {
        rows.iter()
            .min_by(|a, b| {
                (a.0.ln() - target.ln())
                    .abs()
                    .partial_cmp(&(b.0.ln() - target.ln()).abs())
                    .unwrap()
            })
            .unwrap()
            .1
    };
    let trend = at(lo) - at(10.0 * lo);
    let verdict = if min_ln.is_finite()
        && min_ln_refined.is_finite()
        && ((min_ln_refined - min_ln).exp() - 1.0).abs() <= STABILITY_TOL
        && trend >= -STABILITY_TOL
    {
        LiminfVerdict::PositiveStable
    } else if min_ln == f64::NEG_INFINITY || trend < -std::f64::consts::LN_2 {
        LiminfVerdict::TendsToZero
    } else {
        LiminfVerdict::Inconclusive
    };
    Ok(LiminfReport {
        rows,
        min_ln,
        min_ln_refined,
        trend,
        verdict,
        note: LIMINF_NOTE,
    })
}

/// `F(x) = C₁^x (x ln x)^{−αx}` and its inverse on the range where `F`
/// decreases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FInverse {
    pub c1: f64,
    pub alpha: f64,
    pub x0: f64,
}

impl FInverse {
    /// Uses `x0 = (largest zero of F') + 1`, or 2 when `F' < 0` on `(1, ∞)`.
    pub fn new(c1: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(c1 > 0.0) {
            return Err(VexpError::invalid(format!("C₁ must be positive, got {c1}")));
        }
        let d = |x: f64| c1.ln() - alpha * ((x * x.ln()).ln() + 1.0 + 1.0 / x.ln());
        let xs: Vec<f64> = (0..4000).map(|k| 1.0 + 1e-4 * 1.006f64.powi(k)).collect();
        let last_pos = xs.iter().rposition(|&x| d(x) >= 0.0);
        let x0 = match last_pos {
            None => 2.0,
            Some(k) if k + 1 == xs.len() => {
                return Err(VexpError::invalid("F does not decrease on the sampled range"));
            }
            Some(k) => {
                let (_, root) = bisect_predicate(xs[k], xs[k + 1], 1e-12, 200, |x| d(x) < 0.0);
                root + 1.0
            }
        };
        Ok(Self { c1, alpha, x0 })
    }

    pub fn ln_f(&self, x: f64) -> f64 {
        x * self.c1.ln() - self.alpha * x * (x * x.ln()).ln()
    }

    /// `ln t₀ = ln F(x0)`, the top of the domain of `l = F⁻¹`.
    pub fn ln_t0(&self) -> f64 {
        self.ln_f(self.x0)
    }

    /// `l(t)` from `ln t`; clamps to `x0` for `t ≥ t₀`.
    pub fn eval_ln(&self, ln_t: f64) -> f64 {
        if ln_t >= self.ln_t0() {
            return self.x0;
        }
        let mut hi = 2.0 * self.x0;
        while self.ln_f(hi) > ln_t {
            hi *= 2.0;
        }
        let (lo, hi) = bisect_predicate(self.x0, hi, 1e-12 * hi, 200, |x| self.ln_f(x) <= ln_t);
        0.5 * (lo + hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralOutcome {
    Finite { value: f64, ln_value: f64 },
    Overflow { ln_partial: f64, w_reached: f64 },
}

impl IntegralOutcome {
    pub fn is_finite(&self) -> bool {
        matches!(self, IntegralOutcome::Finite { .. })
    }

    pub fn ln_value(&self) -> f64 {
        match *self {
            IntegralOutcome::Finite { ln_value, .. } => ln_value,
            IntegralOutcome::Overflow { ln_partial, .. } => ln_partial,
        }
    }
}

/// Largest `w = ln(e/t)` the quadrature walks before declaring divergence.
const W_LIMIT: f64 = 1e8;

/// `I_λ = ∫₀^{t₀} (ln^α(e/t)/λ)^{l(t)} dt`, with `l` given as a function of
/// `ln t`.
///
/// Integrates in `w = ln(e/t)` over panels that widen geometrically, and
/// stops once the panels are negligible and the integrand is decaying.
pub fn i_lambda_integral(l: impl Fn(f64) -> f64, alpha: f64, lambda: f64, ln_t0: f64) -> Result<IntegralOutcome> {
    check_alpha(alpha)?;
    if !(lambda > 0.0) {
        return Err(VexpError::invalid(format!("λ must be positive, got {lambda}")));
    }
    let ln_lambda = lambda.ln();
    let ln_integrand = |w: f64| {
        let ln_t = 1.0 - w;
        l(ln_t) * (alpha * w.ln() - ln_lambda) + ln_t
    };
    let mut acc = LogSum::new();
    let mut w = 1.0 - ln_t0;
    if !(w > 0.0) {
        return Err(VexpError::invalid(format!("t₀ must be below e, got ln t₀ = {ln_t0}")));
    }
    let mut quiet = 0;
    while w < W_LIMIT {
        let width = (0.05 * w).max(0.25);
        let piece = ln_gauss_legendre(w, w + width, &ln_integrand);
        acc.add_ln(piece);
        w += width;
        let total = acc.ln_value();
        if total > 700.0 {
            return Ok(IntegralOutcome::Overflow {
                ln_partial: total,
                w_reached: w,
            });
        }
        let decaying = ln_integrand(w) < ln_integrand(w - 0.5 * width);
        if piece < total - 40.0 && decaying {
            quiet += 1;
            if quiet >= 5 {
                return Ok(IntegralOutcome::Finite {
                    value: total.exp(),
                    ln_value: total,
                });
            }
        } else {
            quiet = 0;
        }
    }
    Ok(IntegralOutcome::Overflow {
        ln_partial: acc.ln_value(),
        w_reached: w,
    })
}

/// Truncated witness integrals `I(t) = ∫_t^1 (c⁻¹ ln^α(e/s))^{q*(s)} ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessTrace {
    /// `ln t`, strictly decreasing.
    pub ln_t: Vec<f64>,
    pub ln_values: Vec<f64>,
    pub growth_flag: bool,
    pub cap_exceeded: bool,
}

impl WitnessTrace {
    pub fn values(&self) -> Vec<f64> {
        self.ln_values.iter().map(|v| v.exp()).collect()
    }

    /// `ln(I(t_min)/I(t_max))`.
    pub fn ln_growth(&self) -> f64 {
        self.ln_values.last().unwrap() - self.ln_values[0]
    }

    pub fn strictly_increasing(&self) -> bool {
        self.ln_values.windows(2).all(|w| w[1] > w[0])
    }
}

/// Default witness truncations `t = 10⁻², 10⁻⁴, …, 10⁻¹²` (as `ln t`).
pub fn default_truncations() -> Vec<f64> {
    (1..=6).map(|k| -2.0 * k as f64 * LN_10).collect()
}

/// Growth factor above which a witness trace is flagged.
pub const WITNESS_GROWTH: f64 = 1e3;

/// Absolute cap on `ln I` above which a trace is flagged.
pub const WITNESS_LN_CAP: f64 = 230.0;

/// Integrates the witness modular on the decreasing rearrangement of `q`,
/// with the domain rescaled to `(0, 1]`.
pub fn divergence_witness(q: &ExponentFunction, alpha: f64, c: f64, ln_truncations: &[f64]) -> Result<WitnessTrace> {
    check_alpha(alpha)?;
    if !(c > 0.0) {
        return Err(VexpError::invalid(format!("c must be positive, got {c}")));
    }
    if ln_truncations.is_empty()
        || ln_truncations.iter().any(|&l| !(l <= 0.0) || l.is_infinite())
        || ln_truncations.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(VexpError::invalid(
            "truncations must be strictly decreasing values in (0, 1]",
        ));
    }
    let qs = q.decreasing_rearrangement();
    let ln_total = q.mesh().total_measure().ln();
    // cell k covers w ∈ [w_right[k], w_left[k]) with w = 1 − ln s
    let n = qs.len();
    let w_right: Vec<f64> = (0..n)
        .map(|k| {
            if k + 1 == n {
                1.0
            } else {
                1.0 - (qs.mesh().ln_right()[k] - ln_total).min(0.0)
            }
        })
        .collect();
    let w_left = |k: usize| if k == 0 { f64::INFINITY } else { w_right[k - 1] };
    let ln_c = c.ln();
    let cell_integral = |k: usize, a: f64, b: f64| {
        let qv = qs.values()[k];
        let ln_f = |w: f64| qv * (alpha * w.ln() - ln_c) + 1.0 - w;
        let slope = (qv * alpha / a - 1.0).abs().max((qv * alpha / b - 1.0).abs());
        ln_gauss_legendre_panels(a, b, (4.0 / slope.max(1e-9)).min(b - a).max(1e-12), &ln_f)
    };
    let full: Vec<f64> = (1..n)
        .into_par_iter()
        .map(|k| cell_integral(k, w_right[k], w_left(k)))
        .collect();
    let mut ln_values = Vec::with_capacity(ln_truncations.len());
    for &ln_t in ln_truncations {
        let w_t = 1.0 - ln_t;
        let mut acc = LogSum::new();
        for k in 0..n {
            if w_right[k] >= w_t {
                continue;
            }
            let top = w_left(k);
            if top <= w_t {
                acc.add_ln(full[k - 1]);
            } else {
                acc.add_ln(cell_integral(k, w_right[k], w_t));
            }
        }
        ln_values.push(acc.ln_value());
    }
    let cap_exceeded = ln_values.iter().any(|&v| v > WITNESS_LN_CAP);
    let growth = ln_values.last().unwrap() - ln_values[0];
    Ok(WitnessTrace {
        ln_t: ln_truncations.to_vec(),
        growth_flag: growth > WITNESS_GROWTH.ln() || cap_exceeded,
        ln_values,
        cap_exceeded,
    })
}

/// Test functions for [`embedding_constant_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct TestFamily {
    /// Levels `k` of `g_k = min(ln^α(e/x), k)`.
    pub truncation_levels: Vec<f64>,
    /// `ln` of the lengths `h` of indicators `χ_{(0,h]}`, relative to `|Ω|`.
    pub indicator_ln_fractions: Vec<f64>,
    pub random_count: usize,
    pub seed: u64,
}

impl Default for TestFamily {
    fn default() -> Self {
        Self {
            truncation_levels: (1..=6).map(|j| 2f64.powi(j)).collect(),
            indicator_ln_fractions: (1..=4).map(|j| -(j as f64) * 3.0 * LN_10).collect(),
            random_count: 4,
            seed: 7,
        }
    }
}

impl TestFamily {
    /// Materialises the family on a mesh.
    pub fn members(&self, mesh: &std::sync::Arc<Mesh>, alpha: f64) -> Result<Vec<(String, SampledFunction)>> {
        let mut out = Vec::new();
        for &k in &self.truncation_levels {
            let f = SampledFunction::from_ln_fn(mesh.clone(), |ln_x| (1.0 - ln_x).powf(alpha).min(k))?;
            out.push((format!("g_{k}"), f));
        }
        let ln_total = mesh.total_measure().ln();
        for &frac in &self.indicator_ln_fractions {
            let cut = ln_total + frac;
            let values: Vec<f64> = (0..mesh.len())
                .map(|i| if mesh.ln_mid(i) <= cut { 1.0 } else { 0.0 })
                .collect();
            if values.iter().any(|&v| v > 0.0) {
                out.push((
                    format!("indicator_{frac:.3}"),
                    SampledFunction::new(mesh.clone(), values)?,
                ));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for r in 0..self.random_count {
            let pieces = 8;
            let levels: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.0..4.0)).collect();
            let values = (0..mesh.len()).map(|i| levels[i * pieces / mesh.len()]).collect();
            out.push((format!("random_{r}"), SampledFunction::new(mesh.clone(), values)?));
        }
        let out: Vec<_> = out.into_iter().filter(|(_, f)| f.sup_abs() > 0.0).collect();
        if out.is_empty() {
            return Err(VexpError::invalid("test family is empty"));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    pub constant: f64,
    /// `(member, ‖f‖_{L(log L)^α} / ‖f‖_{p(·)})`.
    pub ratios: Vec<(String, f64)>,
}

/// Empirical `sup ‖f‖_{L(log L)^α} / ‖f‖_{p(·)}` over a family.
pub fn embedding_constant_estimate(p: &ExponentFunction, alpha: f64, family: &TestFamily) -> Result<ConstantEstimate> {
    let m = YoungFunction::log_log_power(alpha)?;
    let members = family.members(p.mesh(), alpha)?;
    let ratios = members
        .into_par_iter()
        .map(|(name, f)| {
            let top = orlicz_norm(&f, &m, NORM_TOL)?.value;
            let bottom = luxemburg_norm(&f, p, NORM_TOL)?.value;
            Ok((name, top / bottom))
        })
        .collect::<Result<Vec<_>>>()?;
    let constant = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(ConstantEstimate { constant, ratios })
}
