//! Exponent functions `p(·)` and their near-1 level sets.
//!
//! Everything interesting about an exponent for the embedding questions is
//! encoded in `m(λ) = |{p ≤ 1 + λ}|` as `λ → 0`, and for the examples in
//! this module `m(λ)` is of order `λ^{α/λ}`, i.e. far below the smallest
//! `f64`. Exponents therefore live on meshes whose cells are described by
//! logarithms (see [`ExponentGrid`]) and store `p − 1` directly so that
//! duals and level sets near `p = 1` keep full relative precision.

use std::f64::consts::{E, LN_10};
use std::fmt;
use std::sync::Arc;

use crate::error::{Result, VexpError};
use crate::grid::{DomainKind, Mesh, SampledFunction};
use crate::lambert::{w_principal, w_secondary};
use crate::numeric::{bisect_predicate, LogSum};

/// Value assigned to `q = p/(p − 1)` on cells where `p = 1`.
pub const Q_MAX: f64 = 1e16;

/// Relative slack for level-set comparisons, far below any cell spacing
/// the constructors produce but above the rounding of `1/(p − 1)`.
const LEVEL_RTOL: f64 = 1e-10;

/// Anchor of every geometric λ-grid; grids with nested densities share
/// points exactly.
pub const LAMBDA_ANCHOR: f64 = 0.5;

/// A strictly decreasing list of λ values.
///
/// Anchored grids are `λ_k = 0.5 · 10^{−k/d}`, so a grid with density `2d`
/// contains every point of the grid with density `d` bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
    per_decade: Option<usize>,
    range: (f64, f64),
}

impl LambdaGrid {
    /// Anchored geometric grid covering `[lo, hi]`.
    pub fn geometric(hi: f64, lo: f64, per_decade: usize) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || per_decade == 0 {
            return Err(VexpError::invalid(format!(
                "λ-grid needs 0 < lo <= hi and a positive density, got [{lo}, {hi}] at {per_decade}/decade"
            )));
        }
        let d = per_decade as f64;
        let k_lo = ((LAMBDA_ANCHOR / hi).log10() * d - 1e-9).ceil() as i64;
        let k_hi = ((LAMBDA_ANCHOR / lo).log10() * d + 1e-9).floor() as i64;
        let values: Vec<f64> = (k_lo..=k_hi).map(|k| anchored(k, per_decade)).collect();
        if values.is_empty() {
            return Err(VexpError::invalid(format!(
                "λ-grid [{lo}, {hi}] contains no anchored point"
            )));
        }
        Ok(Self {
            values,
            per_decade: Some(per_decade),
            range: (lo, hi),
        })
    }

    /// The default profile grid: 0.5 down to 10⁻³, 50 points per decade.
    pub fn default_profile() -> Self {
        Self::geometric(0.5, 1e-3, 50).expect("valid default grid")
    }

    /// Arbitrary positive values (sorted and deduplicated).
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(VexpError::invalid("λ-grid values must be positive and finite"));
        }
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        values.dedup();
        let range = (*values.last().unwrap(), values[0]);
        Ok(Self {
            values,
            per_decade: None,
            range,
        })
    }

    /// Twice the density over the same range.
    pub fn refined(&self) -> Self {
        match self.per_decade {
            Some(d) => Self::geometric(self.range.1, self.range.0, 2 * d).expect("refinement of a valid grid"),
            None => {
                let mut v = self.values.clone();
                for w in self.values.windows(2) {
                    v.push((w[0] * w[1]).sqrt());
                }
                Self::from_values(v).expect("refinement of a valid grid")
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn per_decade(&self) -> Option<usize> {
        self.per_decade
    }
}

fn anchored(k: i64, per_decade: usize) -> f64 {
    LAMBDA_ANCHOR * 10f64.powf(-(k as f64) / per_decade as f64)
}

/// Log-graded mesh for exponents that approach 1 at `x = 0`.
///
/// The first `decades` decades below `x0` get `per_decade` geometric cells
/// each; below that the cells are geometric in `v = ln(1/x)` with ratio
/// `tail_ratio` until `v` reaches `max_log_inverse`. The tail is what lets
/// the level-set law be observed at `λ = 10⁻³`, where it lives near
/// `x ≈ 10^{-3000}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentGrid {
    pub per_decade: usize,
    pub decades: usize,
    pub tail_ratio: f64,
    pub max_log_inverse: f64,
}

impl Default for ExponentGrid {
    fn default() -> Self {
        Self {
            per_decade: 1000,
            decades: 12,
            tail_ratio: 1.001,
            max_log_inverse: 3.0e4,
        }
    }
}

impl ExponentGrid {
    /// Plain log-spaced grid without the doubly-logarithmic tail.
    pub fn decades_only(per_decade: usize, decades: usize) -> Self {
        Self {
            per_decade,
            decades,
            tail_ratio: 1.0,
            max_log_inverse: 0.0,
        }
    }

    /// Logs of the right endpoints, ascending, ending at `ln x0`.
    pub fn ln_right_endpoints(&self, x0: f64) -> Result<Vec<f64>> {
        if !(x0 > 0.0 && x0.is_finite()) || self.per_decade == 0 {
            return Err(VexpError::invalid(format!("invalid exponent grid for x0 = {x0}")));
        }
        let ln_x0 = x0.ln();
        let step = LN_10 / self.per_decade as f64;
        let mut pts: Vec<f64> = (0..=self.decades * self.per_decade)
            .map(|k| ln_x0 - step * k as f64)
            .collect();
        if self.tail_ratio > 1.0 {
            let mut v = -*pts.last().unwrap();
            loop {
                let dv = ((self.tail_ratio - 1.0) * v.abs()).max(step);
                v += dv;
                if v > self.max_log_inverse {
                    break;
                }
                pts.push(-v);
            }
        }
        pts.reverse();
        Ok(pts)
    }

    pub fn mesh(&self, x0: f64) -> Result<Arc<Mesh>> {
        Mesh::from_ln_right(self.ln_right_endpoints(x0)?)
    }
}

/// A sampled exponent `p(·) ≥ 1` with `p₊ < ∞`.
#[derive(Debug, Clone)]
pub struct ExponentFunction {
    sampled: SampledFunction,
    excess: Vec<f64>,
    p_minus: f64,
    p_plus: f64,
}

impl ExponentFunction {
    /// Builds from `p − 1` per cell.
    pub fn from_excess(mesh: Arc<Mesh>, excess: Vec<f64>) -> Result<Self> {
        if let Some(i) = excess.iter().position(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(VexpError::invalid(format!(
                "exponent must satisfy 1 <= p < inf; cell {i} has p - 1 = {}",
                excess[i]
            )));
        }
        let values = excess.iter().map(|e| 1.0 + e).collect();
        let sampled = SampledFunction::new(mesh, values)?;
        let p_minus = 1.0 + excess.iter().copied().fold(f64::INFINITY, f64::min);
        let p_plus = 1.0 + excess.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            sampled,
            excess,
            p_minus,
            p_plus,
        })
    }

    /// Builds from `p` values.
    pub fn from_values(mesh: Arc<Mesh>, p: Vec<f64>) -> Result<Self> {
        Self::from_excess(mesh, p.into_iter().map(|v| v - 1.0).collect())
    }

    pub fn constant(mesh: Arc<Mesh>, p: f64) -> Result<Self> {
        let n = mesh.len();
        Self::from_excess(mesh, vec![p - 1.0; n])
    }

    pub fn sampled(&self) -> &SampledFunction {
        &self.sampled
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.sampled.mesh()
    }

    pub fn values(&self) -> &[f64] {
        self.sampled.values()
    }

    /// `p − 1` per cell.
    pub fn excess(&self) -> &[f64] {
        &self.excess
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn len(&self) -> usize {
        self.excess.len()
    }

    pub fn is_empty(&self) -> bool {
        self.excess.is_empty()
    }

    /// `ln |{p ≤ 1 + λ}|` (−∞ for an empty set).
    pub fn ln_sublevel_measure(&self, lambda: f64) -> f64 {
        let cut = lambda * (1.0 + LEVEL_RTOL);
        self.mesh()
            .ln_measures()
            .iter()
            .zip(&self.excess)
            .filter(|(_, e)| **e <= cut)
            .map(|(m, _)| *m)
            .collect::<LogSum>()
            .ln_value()
    }

    /// `|{p ≤ 1 + λ}|`.
    pub fn sublevel_measure(&self, lambda: f64) -> f64 {
        self.ln_sublevel_measure(lambda).exp()
    }

    /// `ln |{p ≥ t}|` (−∞ for an empty set).
    pub fn ln_superlevel_measure(&self, t: f64) -> f64 {
        let cut = (t - 1.0) * (1.0 - LEVEL_RTOL);
        self.mesh()
            .ln_measures()
            .iter()
            .zip(&self.excess)
            .filter(|(_, e)| **e >= cut)
            .map(|(m, _)| *m)
            .collect::<LogSum>()
            .ln_value()
    }

    /// `p*` on `(0, |Ω|]`.
    pub fn decreasing_rearrangement(&self) -> ExponentFunction {
        let order = self.sampled.rearrangement_order();
        let sampled = self.sampled.permuted(&order, false);
        let excess: Vec<f64> = order.iter().map(|&i| self.excess[i]).collect();
        ExponentFunction {
            sampled,
            excess,
            p_minus: self.p_minus,
            p_plus: self.p_plus,
        }
    }

    /// Same cells, new mesh (used to carry an exponent onto a rescaled or
    /// rearranged copy of its mesh).
    pub fn on_mesh(&self, mesh: Arc<Mesh>) -> Result<ExponentFunction> {
        Self::from_excess(mesh, self.excess.clone())
    }

    /// Level-set profile on a λ-grid.
    pub fn level_set_profile(&self, grid: &LambdaGrid) -> LevelSetProfile {
        level_set_profile(self, grid)
    }
}

/// `m(λ) = |{p ≤ 1 + λ}|` sampled on a λ-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetProfile {
    /// Decreasing toward 0.
    pub lambdas: Vec<f64>,
    pub ln_measures: Vec<f64>,
    pub total_measure: f64,
}

impl LevelSetProfile {
    pub fn measures(&self) -> Vec<f64> {
        self.ln_measures.iter().map(|l| l.exp()).collect()
    }
}

/// Computes `m(λ)` for every λ on the grid by summing cell measures.
pub fn level_set_profile(p: &ExponentFunction, grid: &LambdaGrid) -> LevelSetProfile {
    LevelSetProfile {
        lambdas: grid.values().to_vec(),
        ln_measures: grid.values().iter().map(|&l| p.ln_sublevel_measure(l)).collect(),
        total_measure: p.mesh().total_measure(),
    }
}

/// The conjugate exponent `q = p/(p − 1)`, cellwise; `p = 1` maps to
/// [`Q_MAX`].
pub fn dual_exponent(p: &ExponentFunction) -> ExponentFunction {
    let excess = p
        .excess()
        .iter()
        .map(|&e| if e == 0.0 { Q_MAX - 1.0 } else { 1.0 / e })
        .collect();
    ExponentFunction::from_excess(p.mesh().clone(), excess).expect("dual of a valid exponent")
}

fn check_lambda_params(a: f64, r0: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(VexpError::invalid(format!("Λ needs a > 0, got {a}")));
    }
    if !(r0 > 0.0 && r0 < (-E).exp()) {
        return Err(VexpError::invalid(format!("Λ needs 0 < r0 < e^-e, got {r0}")));
    }
    Ok(())
}

/// `Λ(r, a, b) = 1 + a·lnln(1/r)/ln(1/r) + b/ln(1/r)` for `r < r0`, frozen
/// at `Λ(r0)` above.
pub fn lambda_exponent(r: f64, a: f64, b: f64, r0: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(VexpError::domain(format!("Λ is defined for r > 0, got {r}")));
    }
    lambda_exponent_ln(r.ln(), a, b, r0)
}

/// [`lambda_exponent`] taking `ln r`, for radii below the `f64` range.
pub fn lambda_exponent_ln(ln_r: f64, a: f64, b: f64, r0: f64) -> Result<f64> {
    check_lambda_params(a, r0)?;
    if ln_r.is_nan() || ln_r == f64::INFINITY {
        return Err(VexpError::domain(format!("Λ needs a finite radius, got ln r = {ln_r}")));
    }
    let u = -ln_r.min(r0.ln());
    Ok(1.0 + (a * u.ln() + b) / u)
}

/// `ln r` for the radius solving `Λ(r, a, b) − 1 = x` on the small-r branch:
/// `ln r = (a/x)·W_m(−x/(ak))`, `k = e^{b/a}`.
pub fn lambda_level_set_ln_radius(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(x > 0.0) || !(a > 0.0) {
        return Err(VexpError::domain(format!(
            "inverse of Λ needs x > 0 and a > 0, got x={x}, a={a}"
        )));
    }
    let k = (b / a).exp();
    let arg = -x / (a * k);
    if !(arg > crate::lambert::BRANCH_POINT && arg < 0.0) {
        return Err(VexpError::domain(format!("W_m argument {arg} outside (-1/e, 0)")));
    }
    Ok(a / x * w_secondary(arg)?)
}

/// `r = (x/(ak))^{a/x} · (−W_m(−x/(ak)))^{−a/x}`.
pub fn lambda_level_set_radius(x: f64, a: f64, b: f64) -> Result<f64> {
    Ok(lambda_level_set_ln_radius(x, a, b)?.exp())
}

/// `p₀(x) = α W_p(ln(1/x)/α)/ln(1/x)` given `v = ln(1/x) ≥ 0`.
fn nonembedding_excess(alpha: f64, v: f64) -> f64 {
    let y = v / alpha;
    if y < 1e-8 {
        // W_p(y) = y - y² + O(y³)
        return 1.0 - y;
    }
    alpha * w_principal(y).expect("argument is nonnegative") / v
}

/// `p(x) = 1 + p₀(x)` on `(0, x0]`, whose level sets are exactly
/// `|{p ≤ 1 + λ}| = λ^{α/λ}` (up to one cell of the mesh).
///
/// Cell values are taken at right endpoints, where the increasing exponent
/// attains its supremum on the cell.
pub fn nonembedding_example_exponent(alpha: f64, x0: f64, grid: &ExponentGrid) -> Result<ExponentFunction> {
    if !(alpha > 0.0) {
        return Err(VexpError::invalid(format!("α must be positive, got {alpha}")));
    }
    if !(x0 > 0.0 && x0 <= 1.0) {
        return Err(VexpError::invalid(format!("x0 must lie in (0, 1], got {x0}")));
    }
    let mesh = grid.mesh(x0)?;
    let excess = mesh
        .ln_right()
        .iter()
        .map(|&l| nonembedding_excess(alpha, -l))
        .collect();
    ExponentFunction::from_excess(mesh, excess)
}

/// Default `x0 = 0.2^{α/0.2}` for [`nonembedding_example_exponent`].
pub fn nonembedding_default_x0(alpha: f64) -> f64 {
    0.2f64.powf(alpha / 0.2)
}

/// The level-set law `ln m(λ) = (α/λ) ln λ` of the non-embedding example.
pub fn nonembedding_ln_level_set(alpha: f64, lambda: f64) -> f64 {
    alpha / lambda * lambda.ln()
}

/// `p(x) = 1 + α·ln(ln(1/x)/α)/ln(1/x)` on `(0, x0]`, `x0 < e^{−eα}`.
pub fn embedding_example_exponent(alpha: f64, x0: f64, grid: &ExponentGrid) -> Result<ExponentFunction> {
    if !(alpha > 0.0) {
        return Err(VexpError::invalid(format!("α must be positive, got {alpha}")));
    }
    if !(x0 > 0.0 && x0 < (-E * alpha).exp()) {
        return Err(VexpError::invalid(format!("x0 must lie in (0, e^(-eα)), got {x0}")));
    }
    let mesh = grid.mesh(x0)?;
    let excess = mesh
        .ln_right()
        .iter()
        .map(|&l| {
            let v = -l;
            alpha * (v / alpha).ln() / v
        })
        .collect();
    ExponentFunction::from_excess(mesh, excess)
}

/// Default `x0 = e^{−eα}/2` for [`embedding_example_exponent`].
pub fn embedding_default_x0(alpha: f64) -> f64 {
    0.5 * (-E * alpha).exp()
}

/// `ln m(λ) = (α/λ)(ln λ − ln(−W_m(−λ)))`, the level-set law of the
/// embedding example, valid for `λ < 1/e`.
pub fn embedding_ln_level_set(alpha: f64, lambda: f64) -> Result<f64> {
    let w = w_secondary(-lambda)?;
    Ok(alpha / lambda * (lambda.ln() - (-w).ln()))
}

/// A prescribed level-set law `λ ↦ ln m(λ)` on `[lambda_min, lambda_max]`.
pub struct LevelSetTarget {
    ln_measure: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    label: String,
}

impl fmt::Debug for LevelSetTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelSetTarget")
            .field("label", &self.label)
            .field("lambda_min", &self.lambda_min)
            .field("lambda_max", &self.lambda_max)
            .finish()
    }
}

impl LevelSetTarget {
    pub fn new(
        label: impl Into<String>,
        lambda_min: f64,
        lambda_max: f64,
        ln_measure: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lambda_min > 0.0 && lambda_max > lambda_min) {
            return Err(VexpError::invalid(format!(
                "target needs 0 < λ_min < λ_max, got [{lambda_min}, {lambda_max}]"
            )));
        }
        Ok(Self {
            ln_measure: Box::new(ln_measure),
            lambda_min,
            lambda_max,
            label: label.into(),
        })
    }

    /// `m(λ) = λ^{α/λ}`.
    pub fn nonembedding(alpha: f64) -> Self {
        Self::new("nonembedding", 1e-3, 0.5, move |l| nonembedding_ln_level_set(alpha, l)).expect("valid range")
    }

    /// `m(λ) = λ^{α/λ} ln^{−ε/λ}(1/λ)`.
    pub fn example_one(alpha: f64, eps: f64) -> Self {
        Self::new("example-1", 1e-3, 0.3, move |l: f64| {
            (alpha * l.ln() - eps * (1.0 / l).ln().ln()) / l
        })
        .expect("valid range")
    }

    /// `m(λ) = λ^{ε/λ} ln^{−α/λ}(1/λ)`.
    pub fn example_three(alpha: f64, eps: f64) -> Self {
        Self::new("example-3", 1e-3, 0.3, move |l: f64| {
            (eps * l.ln() - alpha * (1.0 / l).ln().ln()) / l
        })
        .expect("valid range")
    }

    pub fn ln_measure(&self, lambda: f64) -> f64 {
        (self.ln_measure)(lambda)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Builds the decreasing-toward-0 exponent on `(0, x0]` realising a
/// prescribed level-set law: `p(x) = 1 + inf{λ : m(λ) ≥ x}`.
///
/// Cell boundaries are placed at `m(λ_k)` for the anchored λ-grid of the
/// given density, so [`level_set_profile`] reproduces the target exactly at
/// every anchored λ of that density or any divisor of it.
pub fn levelset_prescribed_exponent(target: &LevelSetTarget, x0: f64, per_decade: usize) -> Result<ExponentFunction> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(VexpError::invalid(format!("x0 must be positive, got {x0}")));
    }
    let grid = LambdaGrid::geometric(target.lambda_max, target.lambda_min, per_decade)?;
    // ascending λ
    let lambdas: Vec<f64> = grid.values().iter().rev().copied().collect();
    let ln_m: Vec<f64> = lambdas.iter().map(|&l| target.ln_measure(l)).collect();
    if let Some(i) = ln_m.iter().position(|v| v.is_nan()) {
        return Err(VexpError::invalid(format!("target is undefined at λ = {}", lambdas[i])));
    }
    if let Some(k) = ln_m.windows(2).position(|w| w[1] < w[0]) {
        return Err(VexpError::invalid(format!(
            "target level-set measure decreases between λ = {} and λ = {}",
            lambdas[k],
            lambdas[k + 1]
        )));
    }
    let ln_x0 = x0.ln();
    let mut ln_right = Vec::new();
    let mut excess = Vec::new();
    for (&l, &m) in lambdas.iter().zip(&ln_m) {
        if m > ln_x0 {
            break;
        }
        if ln_right.last().is_some_and(|&last| m <= last) {
            // flat stretch of the target: the smaller λ already owns this boundary
            continue;
        }
        ln_right.push(m);
        excess.push(l);
    }
    if ln_right.is_empty() {
        return Err(VexpError::invalid(format!(
            "target exceeds |Ω| = {x0} already at λ = {}",
            target.lambda_min
        )));
    }
    if *ln_right.last().unwrap() < ln_x0 {
        let last = *excess.last().unwrap();
        let top = if target.ln_measure(target.lambda_max) >= ln_x0 {
            let (_, hi) = bisect_predicate(last, target.lambda_max, 1e-15, 200, |l| target.ln_measure(l) >= ln_x0);
            hi
        } else {
            target.lambda_max
        };
        ln_right.push(ln_x0);
        excess.push(top);
    }
    let mesh = Mesh::from_ln_right(ln_right)?;
    ExponentFunction::from_excess(mesh, excess)
}

/// A compact set of points or segments.
#[derive(Debug, Clone, PartialEq)]
pub enum CompactSet {
    Points1D(Vec<f64>),
    Points2D(Vec<(f64, f64)>),
    Segments2D(Vec<((f64, f64), (f64, f64))>),
}

impl CompactSet {
    fn is_empty(&self) -> bool {
        match self {
            CompactSet::Points1D(v) => v.is_empty(),
            CompactSet::Points2D(v) => v.is_empty(),
            CompactSet::Segments2D(v) => v.is_empty(),
        }
    }

    /// Euclidean distance from `(x, y)` to the set.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        match self {
            CompactSet::Points1D(pts) => pts.iter().map(|p| (x - p).abs()).fold(f64::INFINITY, f64::min),
            CompactSet::Points2D(pts) => pts
                .iter()
                .map(|(px, py)| (x - px).hypot(y - py))
                .fold(f64::INFINITY, f64::min),
            CompactSet::Segments2D(segs) => segs
                .iter()
                .map(|&(a, b)| segment_distance((x, y), a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Whether the set meets the closed box `[x0, x1] × [y0, y1]`.
    fn meets_box(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
        let inside = |(px, py): (f64, f64)| px >= x0 && px <= x1 && py >= y0 && py <= y1;
        match self {
            CompactSet::Points1D(pts) => pts.iter().any(|&p| p >= x0 && p <= x1),
            CompactSet::Points2D(pts) => pts.iter().any(|&p| inside(p)),
            CompactSet::Segments2D(segs) => segs.iter().any(|&(a, b)| segment_meets_box(a, b, x0, x1, y0, y1)),
        }
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Liang–Barsky clipping of a segment against a closed box.
fn segment_meets_box(a: (f64, f64), b: (f64, f64), x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [(-dx, a.0 - x0), (dx, x1 - a.0), (-dy, a.1 - y0), (dy, y1 - a.1)] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// `p(x) = Λ(δ_K(x), a, b)` on a mesh, with `p = 1` on cells meeting `K`.
/// Distances are measured from cell midpoints (centres on a 2-D torus).
pub fn exponent_from_compact_set(k: &CompactSet, a: f64, b: f64, r0: f64, mesh: Arc<Mesh>) -> Result<ExponentFunction> {
    if k.is_empty() {
        return Err(VexpError::invalid("compact set K is empty"));
    }
    check_lambda_params(a, r0)?;
    let excess = match mesh.domain().kind {
        DomainKind::Interval { x0 } => {
            let pts = match k {
                CompactSet::Points1D(p) => p,
                _ => return Err(VexpError::invalid("an interval mesh needs a 1-D compact set")),
            };
            if pts.iter().any(|&p| !(0.0..=x0).contains(&p)) {
                return Err(VexpError::invalid(format!("K must lie in [0, {x0}]")));
            }
            (0..mesh.len())
                .map(|i| {
                    let left = mesh.ln_left(i).exp();
                    let right = mesh.ln_right()[i].exp();
                    if k.meets_box(left, right, 0.0, 0.0) {
                        Ok(0.0)
                    } else {
                        let d = k.distance(mesh.ln_mid(i).exp(), 0.0);
                        Ok(lambda_exponent(d, a, b, r0)? - 1.0)
                    }
                })
                .collect::<Result<Vec<f64>>>()?
        }
        DomainKind::Torus { n, dim: 2 } => {
            if matches!(k, CompactSet::Points1D(_)) {
                return Err(VexpError::invalid("a 2-D mesh needs a 2-D compact set"));
            }
            let h = 1.0 / n as f64;
            (0..mesh.len())
                .map(|i| {
                    let (r, c) = (i / n, i % n);
                    let (x0, y0) = (c as f64 * h, r as f64 * h);
                    if k.meets_box(x0, x0 + h, y0, y0 + h) {
                        Ok(0.0)
                    } else {
                        let (cx, cy) = mesh.torus_center(i);
                        Ok(lambda_exponent(k.distance(cx, cy), a, b, r0)? - 1.0)
                    }
                })
                .collect::<Result<Vec<f64>>>()?
        }
        DomainKind::Torus { .. } => {
            return Err(VexpError::invalid(
                "compact-set exponents need an interval or 2-D torus mesh",
            ));
        }
    };
    ExponentFunction::from_excess(mesh, excess)
}

/// `|K(r)| = |{δ_K < r}|` measured on the cells of a mesh (by midpoint).
pub fn neighbourhood_measure(k: &CompactSet, mesh: &Mesh, r: f64) -> f64 {
    (0..mesh.len())
        .filter(|&i| {
            let (x, y) = mesh.torus_center(i);
            k.distance(x, y) < r
        })
        .map(|i| mesh.measures()[i])
        .sum()
}

/// Checks on a geometric sample of `[lo, hi]` that `g` never decreases.
pub(crate) fn sampled_increasing(g: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> bool {
    let samples = samples.max(2);
    let ratio = (hi / lo).ln() / (samples - 1) as f64;
    let vals: Vec<f64> = (0..samples).map(|k| g(lo * (ratio * k as f64).exp())).collect();
    vals.iter().all(|v| !v.is_nan()) && vals.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs())
}

/// Increasing weight `θ` used by the non-embedding criterion, evaluated in
/// log form.
pub struct ThetaSpec {
    ln_theta: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
}

impl fmt::Debug for ThetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThetaSpec").field("label", &self.label).finish()
    }
}

impl ThetaSpec {
    /// Any `θ` given through `ln θ(x)`.
    pub fn from_ln(label: impl Into<String>, ln_theta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            ln_theta: Box::new(ln_theta),
            label: label.into(),
        }
    }

    /// `θ(x) = (ln x)^power`.
    pub fn log_power(power: f64) -> Self {
        Self::from_ln(format!("(ln x)^{power}"), move |x: f64| power * x.ln().ln())
    }

    /// `θ(x) = x^power`.
    pub fn power(power: f64) -> Self {
        Self::from_ln(format!("x^{power}"), move |x: f64| power * x.ln())
    }

    pub fn ln_theta(&self, x: f64) -> f64 {
        (self.ln_theta)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Samples `θ` geometrically on `[lo, hi]` and checks it never decreases.
    pub fn is_increasing_on(&self, lo: f64, hi: f64, samples: usize) -> bool {
        sampled_increasing(|x| self.ln_theta(x), lo, hi, samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> ExponentGrid {
        ExponentGrid {
            per_decade: 200,
            decades: 12,
            tail_ratio: 1.002,
            max_log_inverse: 8000.0,
        }
    }

    #[test]
    fn anchored_grids_nest() {
        let coarse = LambdaGrid::geometric(0.5, 1e-3, 50).unwrap();
        let fine = coarse.refined();
        assert_eq!(fine.per_decade(), Some(100));
        for v in coarse.values() {
            assert!(fine.values().contains(v));
        }
        assert!(coarse.values().windows(2).all(|w| w[0] > w[1]));
        assert!(*coarse.values().last().unwrap() >= 1e-3);
    }

    #[test]
    fn lambda_plateau_and_substitution() {
        let r0 = 0.01;
        let at_r0 = lambda_exponent(r0, 1.0, 0.5, r0).unwrap();
        assert_eq!(lambda_exponent(0.5, 1.0, 0.5, r0).unwrap(), at_r0);
        let ln_r = -E.powf(E);
        let v = lambda_exponent_ln(ln_r, 1.0, 0.0, r0).unwrap();
        assert!((v - (1.0 + (1.0 - E).exp())).abs() < 1e-14);
        assert!(lambda_exponent(0.0, 1.0, 0.0, r0).is_err());
        assert!(lambda_exponent(0.001, 1.0, 0.0, 0.2).is_err());
    }

    #[test]
    fn lambda_tends_to_one_monotonically() {
        let vals: Vec<f64> = (3..=12)
            .map(|k| lambda_exponent(10f64.powi(-k), 1.0, 0.0, 0.05).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(vals.iter().all(|&v| v > 1.0));
    }

    #[test]
    fn level_set_radius_round_trip() {
        for &x in &[0.05, 0.1, 0.2] {
            let ln_r = lambda_level_set_ln_radius(x, 1.0, 0.0).unwrap();
            let back = lambda_exponent_ln(ln_r, 1.0, 0.0, 0.06).unwrap() - 1.0;
            assert!((back - x).abs() < 1e-8, "x={x}: {back}");
        }
        // with b != 0 as well
        let ln_r = lambda_level_set_ln_radius(0.1, 2.0, 0.3).unwrap();
        let back = lambda_exponent_ln(ln_r, 2.0, 0.3, 0.06).unwrap() - 1.0;
        assert!((back - 0.1).abs() < 1e-8);
        assert!(lambda_level_set_radius(0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn level_set_radius_with_unit_k() {
        let (x, a) = (0.1, 1.5);
        let r = lambda_level_set_radius(x, a, 0.0).unwrap();
        let direct = (x / a).powf(a / x) * (-w_secondary(-x / a).unwrap()).powf(-a / x);
        assert!((r - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn level_set_radius_obeys_power_log_bound() {
        // a = 1 + ε: r ≤ x^{(1+ε)/x} (ln 1/x)^{-(1+ε)/x} for small x
        let a = 1.25;
        for &x in &[0.01, 0.05, 0.1] {
            let ln_r = lambda_level_set_ln_radius(x, a, 0.0).unwrap();
            let ln_bound = a / x * (x.ln() - (1.0 / x).ln().ln());
            assert!(ln_r <= ln_bound, "x={x}");
        }
    }

    #[test]
    fn dual_of_constant_two_is_two() {
        let p = ExponentFunction::constant(Mesh::uniform(1.0, 5).unwrap(), 2.0).unwrap();
        let q = dual_exponent(&p);
        assert!(q.values().iter().all(|&v| (v - 2.0).abs() < 1e-15));
    }

    #[test]
    fn dual_of_near_one_constant() {
        let lambda = 0.01;
        let p = ExponentFunction::from_excess(Mesh::uniform(1.0, 3).unwrap(), vec![lambda; 3]).unwrap();
        let q = dual_exponent(&p);
        for &v in q.values() {
            assert!((v - (1.0 + lambda) / lambda).abs() < 1e-12 * v);
        }
    }

    #[test]
    fn dual_is_an_involution_and_sentinel() {
        let mesh = Mesh::uniform(1.0, 4).unwrap();
        let p = ExponentFunction::from_values(mesh, vec![1.0, 1.5, 2.0, 7.0]).unwrap();
        let q = dual_exponent(&p);
        assert_eq!(q.values()[0], Q_MAX);
        let pp = dual_exponent(&q);
        for i in 1..4 {
            assert!((pp.values()[i] - p.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_two_profile() {
        let p = ExponentFunction::constant(Mesh::uniform(1.0, 10).unwrap(), 2.0).unwrap();
        let grid = LambdaGrid::from_values(vec![0.5, 0.9, 1.0, 1.5]).unwrap();
        let prof = p.level_set_profile(&grid);
        let m = prof.measures();
        // grid sorted descending: 1.5, 1.0, 0.9, 0.5
        assert!((m[0] - 1.0).abs() < 1e-12);
        assert!((m[1] - 1.0).abs() < 1e-12);
        assert_eq!(m[2], 0.0);
        assert_eq!(m[3], 0.0);
    }

    #[test]
    fn nonembedding_level_set_law() {
        let p = nonembedding_example_exponent(1.0, 0.25, &ExponentGrid::default()).unwrap();
        for &l in &[0.1, 0.2, 0.25, 0.3, 0.5] {
            let m = p.sublevel_measure(l);
            let expect = l.powf(1.0 / l);
            assert!((m - expect).abs() <= 0.02 * expect, "λ={l}: {m} vs {expect}");
        }
        let m = p.sublevel_measure(0.25);
        assert!((m - 0.003_906_25).abs() <= 0.01 * 0.003_906_25);
    }

    #[test]
    fn nonembedding_tends_to_one() {
        let p = nonembedding_example_exponent(1.0, nonembedding_default_x0(1.0), &small_grid()).unwrap();
        assert!(p.excess().iter().all(|&e| e > 0.0));
        // excess increases with x
        assert!(p.excess().windows(2).all(|w| w[0] <= w[1]));
        assert!(p.excess()[0] < 0.002);
    }

    #[test]
    fn nonembedding_asymptotic_form() {
        let (alpha, x) = (1.0f64, 1e-8f64);
        let v = (1.0 / x).ln();
        let exact = nonembedding_excess(alpha, v);
        let y = v / alpha;
        let approx = alpha * y.ln() / v - alpha * y.ln().ln() / v;
        let next_order = alpha * y.ln().ln() / v;
        assert!((exact - approx).abs() < next_order);
    }

    #[test]
    fn embedding_level_set_law() {
        let p = embedding_example_exponent(1.0, 0.03, &ExponentGrid::default()).unwrap();
        for &l in &[0.1, 0.2, 0.3] {
            let m = p.ln_sublevel_measure(l);
            let expect = embedding_ln_level_set(1.0, l).unwrap();
            assert!((m.exp() / expect.exp() - 1.0).abs() <= 0.02, "λ={l}");
        }
    }

    #[test]
    fn embedding_alpha_one_is_lambda_family() {
        let p = embedding_example_exponent(1.0, 0.03, &small_grid()).unwrap();
        for (i, &e) in p.excess().iter().enumerate().step_by(997) {
            let lam = lambda_exponent_ln(p.mesh().ln_right()[i], 1.0, 0.0, 0.0659).unwrap();
            assert!((1.0 + e - lam).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding_profile_is_bounded_by_the_log_law() {
        let p = embedding_example_exponent(1.0, 0.03, &ExponentGrid::default()).unwrap();
        let grid = LambdaGrid::geometric(0.3, 1e-3, 20).unwrap();
        let ratios: Vec<f64> = grid
            .values()
            .iter()
            .map(|&l| p.ln_sublevel_measure(l) - (1.0 / l) * (l.ln() - (1.0 / l).ln().ln()))
            .collect();
        // ln of m(λ) λ^{-1/λ} ln^{1/λ}(1/λ), bounded above
        assert!(ratios.iter().all(|&r| r < 1.0), "{ratios:?}");
    }

    #[test]
    fn prescribed_reproduces_nonembedding() {
        let target = LevelSetTarget::nonembedding(1.0);
        let x0 = 0.25;
        let built = levelset_prescribed_exponent(&target, x0, 400).unwrap();
        let direct = nonembedding_example_exponent(1.0, x0, &ExponentGrid::default()).unwrap();
        let grid = LambdaGrid::geometric(0.5, 0.05, 100).unwrap();
        for &l in grid.values() {
            // the direct mesh is geometric in ln(1/x) below 12 decades, so compare logs
            let a = built.ln_sublevel_measure(l);
            let b = direct.ln_sublevel_measure(l);
            assert!((a - b).abs() <= 0.002 * b.abs() + 0.01, "λ={l}: {a} vs {b}");
        }
    }

    #[test]
    fn prescribed_is_exact_on_nested_grids() {
        for target in [
            LevelSetTarget::example_one(1.0, 0.5),
            LevelSetTarget::example_three(1.0, 0.5),
        ] {
            let p = levelset_prescribed_exponent(&target, 0.05, 400).unwrap();
            let grid = LambdaGrid::geometric(0.3, 1e-3, 100).unwrap();
            for &l in grid.values() {
                let want = target.ln_measure(l);
                if want >= 0.05f64.ln() {
                    continue;
                }
                let got = p.ln_sublevel_measure(l);
                assert!(
                    (got - want).abs() < 1e-9 * want.abs().max(1.0),
                    "{}: λ={l} {got} vs {want}",
                    target.label()
                );
            }
        }
    }

    #[test]
    fn prescribed_rejects_non_monotone_target() {
        let target = LevelSetTarget::new("bad", 0.01, 0.3, |l: f64| 5.0 * (50.0 * l).sin() - 1.0 / l).unwrap();
        assert!(matches!(
            levelset_prescribed_exponent(&target, 0.5, 50),
            Err(VexpError::InvalidArgument(_))
        ));
    }

    #[test]
    fn compact_origin_reduces_to_lambda_family() {
        let mesh = Mesh::uniform(1.0, 1000).unwrap();
        let r0 = 0.05;
        let p = exponent_from_compact_set(&CompactSet::Points1D(vec![0.0]), 1.0, 0.0, r0, mesh.clone()).unwrap();
        assert_eq!(p.values()[0], 1.0);
        for i in 1..1000 {
            let x = mesh.ln_mid(i).exp();
            assert!((p.values()[i] - lambda_exponent(x, 1.0, 0.0, r0).unwrap()).abs() < 1e-14);
        }
        assert!(exponent_from_compact_set(&CompactSet::Points1D(vec![]), 1.0, 0.0, r0, mesh).is_err());
    }

    #[test]
    fn compact_midpoint_is_symmetric() {
        let n = 1000;
        let mesh = Mesh::uniform(1.0, n).unwrap();
        let p = exponent_from_compact_set(&CompactSet::Points1D(vec![0.5]), 1.0, 0.0, 0.05, mesh).unwrap();
        for i in 0..n / 2 {
            assert!((p.values()[i] - p.values()[n - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn finite_set_has_linear_neighbourhoods() {
        let mesh = Mesh::uniform(1.0, 20_000).unwrap();
        let k = CompactSet::Points1D(vec![0.1, 0.5, 0.9]);
        for &r in &[1e-1, 1e-2, 1e-3] {
            let m = neighbourhood_measure(&k, &mesh, r);
            assert!(m <= 6.0 * r + 1e-4 && m >= 5.0 * r - 2e-4, "r={r}: {m}");
        }
    }

    #[test]
    fn segment_sets_on_torus() {
        let mesh = Mesh::torus(32, 2).unwrap();
        let k = CompactSet::Segments2D(vec![((0.25, 0.5), (0.75, 0.5))]);
        let p = exponent_from_compact_set(&k, 1.0, 0.0, 0.05, mesh).unwrap();
        assert_eq!(p.p_minus(), 1.0);
        assert!(p.values().iter().filter(|&&v| v == 1.0).count() >= 16);
    }

    #[test]
    fn theta_monotonicity_sampling() {
        assert!(ThetaSpec::log_power(0.5).is_increasing_on(2.0, 1e3, 100));
        assert!(ThetaSpec::power(0.5).is_increasing_on(2.0, 1e3, 100));
        assert!(!ThetaSpec::from_ln("decreasing", |x: f64| -x).is_increasing_on(2.0, 10.0, 10));
    }

    #[test]
    fn tail_grid_reaches_deep_levels() {
        let pts = ExponentGrid::default().ln_right_endpoints(0.5).unwrap();
        assert!(pts[0] < -2.9e4);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*pts.last().unwrap(), 0.5f64.ln());
    }
}
