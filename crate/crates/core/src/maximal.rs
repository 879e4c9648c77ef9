//! Discrete Hardy–Littlewood and strong maximal operators.
//!
//! Averages are taken over grid-aligned sets only: unions of consecutive
//! cells in 1-D, squares and axis-parallel rectangles of cells on the 2-D
//! grid. Sets never leave the domain, which is equivalent to intersecting
//! larger balls with `Ω` and dividing by their full measure, since the
//! extra measure can only lower the average.

use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Result, VexpError};
use crate::exponents::ExponentFunction;
use crate::grid::{DomainKind, Mesh, SampledFunction};
use crate::norms::{luxemburg_norm, NORM_TOL};
use crate::numeric::CompensatedSum;

/// Largest grid accepted by [`strong_maximal`] by default.
pub const STRONG_MAXIMAL_CAP: usize = 256;

/// An `n × n` grid function on the unit square, row-major, with a
/// summed-area table of `|f|`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D {
    n: usize,
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl GridFunction2D {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(VexpError::invalid(format!("2-D grid needs n >= 2, got {n}")));
        }
        if values.len() != n * n {
            return Err(VexpError::invalid(format!(
                "{} values for a {n}x{n} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(VexpError::invalid("grid values must be finite"));
        }
        let w = n + 1;
        let mut prefix = vec![0.0; w * w];
        for r in 0..n {
            let mut row = CompensatedSum::new();
            for c in 0..n {
                row.add(values[r * n + c].abs());
                prefix[(r + 1) * w + c + 1] = prefix[r * w + c + 1] + row.value();
            }
        }
        Ok(Self { n, values, prefix })
    }

    /// Samples `f(x, y)` at cell centres; `x` runs along a row.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = 1.0 / n as f64;
        let values = (0..n * n)
            .map(|i| f(((i % n) as f64 + 0.5) * h, ((i / n) as f64 + 0.5) * h))
            .collect();
        Self::new(n, values)
    }

    pub fn from_sampled(f: &SampledFunction) -> Result<Self> {
        match f.domain().kind {
            DomainKind::Torus { n, dim: 2 } => Self::new(n, f.values().to_vec()),
            _ => Err(VexpError::invalid("expected a function on a 2-D torus grid")),
        }
    }

    pub fn to_sampled(&self) -> Result<SampledFunction> {
        SampledFunction::new(Mesh::torus(self.n, 2)?, self.values.clone())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    /// `Σ |f|` over rows `r0..r1` and columns `c0..c1` (half-open).
    pub fn rect_sum(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
        let w = self.n + 1;
        self.prefix[r1 * w + c1] - self.prefix[r0 * w + c1] - self.prefix[r1 * w + c0] + self.prefix[r0 * w + c0]
    }

    pub fn rect_mean(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
        self.rect_sum(r0, r1, c0, c1) / ((r1 - r0) * (c1 - c0)) as f64
    }

    /// `∫ |f|` over the unit square.
    pub fn l1_norm(&self) -> f64 {
        self.rect_sum(0, self.n, 0, self.n) / (self.n * self.n) as f64
    }
}

/// Slope between two points of the cumulative graph.
#[inline]
fn slope(x: &[f64], p: &[f64], a: usize, b: usize) -> f64 {
    (p[b] - p[a]) / (x[b] - x[a])
}

/// `(b − a) × (c − a)` sign test on the cumulative graph.
#[inline]
fn turn(x: &[f64], p: &[f64], a: usize, b: usize, c: usize) -> f64 {
    (x[b] - x[a]) * (p[c] - p[a]) - (p[b] - p[a]) * (x[c] - x[a])
}

fn upper_hull(x: &[f64], p: &[f64], idx: Range<usize>) -> Vec<usize> {
    let mut h: Vec<usize> = Vec::new();
    for i in idx {
        while h.len() >= 2 && turn(x, p, h[h.len() - 2], h[h.len() - 1], i) >= 0.0 {
            h.pop();
        }
        h.push(i);
    }
    h
}

fn lower_hull(x: &[f64], p: &[f64], idx: Range<usize>) -> Vec<usize> {
    let mut h: Vec<usize> = Vec::new();
    for i in idx {
        while h.len() >= 2 && turn(x, p, h[h.len() - 2], h[h.len() - 1], i) <= 0.0 {
            h.pop();
        }
        h.push(i);
    }
    h
}

/// Largest slope from `a` to a point of the upper hull `h`, all to the right
/// of `a`.
fn best_to_right(x: &[f64], p: &[f64], a: usize, h: &[usize]) -> f64 {
    // slope(a, h_k) increases while the hull edge out of h_k is steeper
    let (mut lo, mut hi) = (0, h.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if slope(x, p, h[mid], h[mid + 1]) > slope(x, p, a, h[mid]) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    slope(x, p, a, h[lo])
}

/// Largest slope from a point of the lower hull `h` to `b`, all to the left
/// of `b`.
fn best_from_left(x: &[f64], p: &[f64], b: usize, h: &[usize]) -> f64 {
    let (mut lo, mut hi) = (0, h.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if slope(x, p, h[mid], h[mid + 1]) < slope(x, p, h[mid], b) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    slope(x, p, h[lo], b)
}

/// Uncentred maximal function of cells with boundaries `x[0..=n]` and
/// cumulative integrals `p[0..=n]`: for each cell, the largest
/// `(p[b] − p[a])/(x[b] − x[a])` with `a ≤ i < b`.
///
/// Divide and conquer over the cells; intervals crossing the split are
/// handled with tangent queries against convex hulls of the cumulative
/// graph, giving `O(n log² n)`.
pub fn interval_maximal(x: &[f64], p: &[f64]) -> Vec<f64> {
    let n = x.len() - 1;
    let mut out: Vec<f64> = (0..n).map(|i| slope(x, p, i, i + 1)).collect();
    recurse(x, p, 0, n, &mut out);
    out
}

fn recurse(x: &[f64], p: &[f64], lo: usize, hi: usize, out: &mut [f64]) {
    if hi - lo < 2 {
        return;
    }
    let mid = (lo + hi) / 2;
    recurse(x, p, lo, mid, out);
    recurse(x, p, mid, hi, out);
    // crossing intervals: a ∈ [lo, mid), b ∈ (mid, hi]
    let right = upper_hull(x, p, mid + 1..hi + 1);
    let mut best = f64::NEG_INFINITY;
    for a in lo..mid {
        best = best.max(best_to_right(x, p, a, &right));
        out[a] = out[a].max(best);
    }
    let left = lower_hull(x, p, lo..mid);
    let mut best = f64::NEG_INFINITY;
    for b in (mid + 1..=hi).rev() {
        best = best.max(best_from_left(x, p, b, &left));
        out[b - 1] = out[b - 1].max(best);
    }
}

fn cumulative(weights: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    std::iter::once(0.0)
        .chain(weights.iter().zip(values).map(|(w, v)| {
            acc.add(w * v.abs());
            acc.value()
        }))
        .collect()
}

fn boundaries(mesh: &Mesh) -> Vec<f64> {
    match mesh.domain().kind {
        DomainKind::Interval { .. } => std::iter::once(0.0)
            .chain(mesh.ln_right().iter().map(|l| l.exp()))
            .collect(),
        _ => (0..=mesh.len()).map(|k| k as f64 / mesh.len() as f64).collect(),
    }
}

/// Hardy–Littlewood maximal function (uncentred).
///
/// Interval and 1-D torus meshes use exact interval averages; 2-D torus
/// meshes use squares of cells.
pub fn hl_maximal(f: &SampledFunction) -> Result<SampledFunction> {
    match f.domain().kind {
        DomainKind::Torus { dim: 2, .. } => hl_maximal_2d(&GridFunction2D::from_sampled(f)?).to_sampled(),
        _ => {
            let x = boundaries(f.mesh());
            let p = cumulative(f.mesh().measures(), f.values());
            if x.windows(2).all(|w| w[1] > w[0]) {
                // the cell average is |f| itself; take it exactly rather than
                // through prefix differences
                let m = interval_maximal(&x, &p);
                return f.with_values(m.iter().zip(f.values()).map(|(m, v)| m.max(v.abs())).collect());
            }
            // cells narrower than the f64 range collapse onto a point; each
            // keeps its own value and inherits the average over intervals
            // through that point
            let mut keep = vec![0];
            for k in 1..x.len() {
                if x[k] > x[*keep.last().unwrap()] {
                    keep.push(k);
                }
            }
            let xs: Vec<f64> = keep.iter().map(|&k| x[k]).collect();
            let ps: Vec<f64> = keep.iter().map(|&k| p[k]).collect();
            let merged = if xs.len() > 1 {
                interval_maximal(&xs, &ps)
            } else {
                vec![0.0]
            };
            let values = (0..f.len())
                .map(|i| {
                    let j = keep
                        .partition_point(|&k| k <= i)
                        .saturating_sub(1)
                        .min(merged.len() - 1);
                    merged[j].max(f.values()[i].abs())
                })
                .collect();
            f.with_values(values)
        }
    }
}

/// Maximal function over squares of cells containing each cell.
pub fn hl_maximal_2d(f: &GridFunction2D) -> GridFunction2D {
    let n = f.n;
    let sides: Vec<usize> = (1..=n).collect();
    let partial: Vec<Vec<f64>> = sides
        .par_iter()
        .map(|&s| {
            let m = n - s + 1;
            // mean of the s×s window with top-left corner (r, c)
            let window: Vec<f64> = (0..m * m)
                .map(|k| f.rect_mean(k / m, k / m + s, k % m, k % m + s))
                .collect();
            // cell (r, c) is covered by corners in [r−s+1, r] × [c−s+1, c]
            let rows: Vec<f64> = (0..m)
                .flat_map(|r| sliding_max(&window[r * m..(r + 1) * m], s, n))
                .collect();
            let mut out = vec![0.0; n * n];
            for c in 0..n {
                let col: Vec<f64> = (0..m).map(|r| rows[r * n + c]).collect();
                for (r, v) in sliding_max(&col, s, n).into_iter().enumerate() {
                    out[r * n + c] = v;
                }
            }
            out
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for part in partial {
        for (v, w) in values.iter_mut().zip(part) {
            *v = f64::max(*v, w);
        }
    }
    GridFunction2D::new(n, values).expect("valid grid")
}

/// For `j ∈ 0..n`, the max of `w[i]` over `i ∈ [j−s+1, j] ∩ [0, len)`.
fn sliding_max(w: &[f64], s: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for j in 0..n {
        if j < w.len() {
            while dq.back().is_some_and(|&b| w[b] <= w[j]) {
                dq.pop_back();
            }
            dq.push_back(j);
        }
        while dq.front().is_some_and(|&f| f + s <= j) {
            dq.pop_front();
        }
        out.push(w[*dq.front().expect("window never empty")]);
    }
    out
}

/// Strong maximal function over all axis-parallel rectangles of cells.
///
/// For each pair of rows the column sums reduce the problem to the exact
/// 1-D operator; a suffix maximum over the lower row then spreads each
/// result to the rows it covers, for `O(n³ log² n)` in total.
pub fn strong_maximal(f: &GridFunction2D) -> Result<GridFunction2D> {
    strong_maximal_with_cap(f, STRONG_MAXIMAL_CAP)
}

pub fn strong_maximal_with_cap(f: &GridFunction2D, cap: usize) -> Result<GridFunction2D> {
    let n = f.n;
    if n > cap {
        return Err(VexpError::Resource(format!(
            "strong maximal on a {n}x{n} grid exceeds the cap of {cap}"
        )));
    }
    let x: Vec<f64> = (0..=n).map(|k| k as f64).collect();
    let values = (0..n)
        .into_par_iter()
        .map(|top| {
            // best[bottom][c]: best mean among rectangles spanning rows top..=bottom
            let mut best = vec![0.0; (n - top) * n];
            for bottom in top..n {
                let h = (bottom + 1 - top) as f64;
                let mut p = Vec::with_capacity(n + 1);
                p.push(0.0);
                for c in 0..n {
                    p.push(f.rect_sum(top, bottom + 1, 0, c + 1) / h);
                }
                let m = interval_maximal(&x, &p);
                best[(bottom - top) * n..(bottom - top + 1) * n].copy_from_slice(&m);
            }
            // suffix maximum over bottom ≥ row
            for k in (0..n - top - 1).rev() {
                for c in 0..n {
                    let below = best[(k + 1) * n + c];
                    let here = &mut best[k * n + c];
                    *here = here.max(below);
                }
            }
            let mut out = vec![0.0; n * n];
            out[top * n..].copy_from_slice(&best);
            out
        })
        .reduce(
            || vec![0.0; n * n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.max(y);
                }
                a
            },
        );
    GridFunction2D::new(n, values)
}

/// `‖Mf‖_{L¹(B)} / ‖f‖_{p(·)}` with `B` a range of cells.
pub fn wiener_ratio(f: &SampledFunction, p: &ExponentFunction, cells: Range<usize>) -> Result<f64> {
    if cells.start >= cells.end || cells.end > f.len() {
        return Err(VexpError::invalid(format!(
            "cell range {cells:?} is empty or out of bounds"
        )));
    }
    let norm = luxemburg_norm(f, p, NORM_TOL)?.value;
    if norm == 0.0 {
        return Err(VexpError::invalid("‖f‖ is zero; the Wiener ratio is undefined"));
    }
    let mf = hl_maximal(f)?;
    let l1: CompensatedSum = cells.map(|i| mf.values()[i] * f.mesh().measures()[i]).collect();
    Ok(l1.value() / norm)
}

fn rectangles_containing(
    f: &GridFunction2D,
    row: usize,
    col: usize,
    scale: f64,
    pick: impl Fn(f64, f64) -> f64,
    init: f64,
) -> f64 {
    let n = f.n;
    let k = ((scale * n as f64).floor() as usize).clamp(1, n);
    let mut acc = init;
    for h in 1..=k {
        for w in 1..=k {
            if h > 1 || w > 1 {
                let diam = ((h * h + w * w) as f64).sqrt() / n as f64;
                if diam > scale {
                    continue;
                }
            }
            let r_lo = (row + 1).saturating_sub(h);
            let c_lo = (col + 1).saturating_sub(w);
            for r0 in r_lo..=row.min(n - h) {
                for c0 in c_lo..=col.min(n - w) {
                    acc = pick(acc, f.rect_mean(r0, r0 + h, c0, c0 + w));
                }
            }
        }
    }
    acc
}

/// Per scale, the largest mean of `|f|` over rectangles containing the cell
/// with diameter at most the scale. The cell itself is always admissible.
pub fn upper_derivative_estimate(f: &GridFunction2D, row: usize, col: usize, scales: &[f64]) -> Result<Vec<f64>> {
    check_cell(f, row, col, scales)?;
    Ok(scales
        .iter()
        .map(|&s| rectangles_containing(f, row, col, s, f64::max, f64::NEG_INFINITY))
        .collect())
}

/// Per scale, the smallest such mean.
pub fn lower_derivative_estimate(f: &GridFunction2D, row: usize, col: usize, scales: &[f64]) -> Result<Vec<f64>> {
    check_cell(f, row, col, scales)?;
    Ok(scales
        .iter()
        .map(|&s| rectangles_containing(f, row, col, s, f64::min, f64::INFINITY))
        .collect())
}

fn check_cell(f: &GridFunction2D, row: usize, col: usize, scales: &[f64]) -> Result<()> {
    if row >= f.n || col >= f.n {
        return Err(VexpError::invalid(format!(
            "cell ({row}, {col}) outside the {0}x{0} grid",
            f.n
        )));
    }
    if scales.iter().any(|s| !(*s > 0.0)) {
        return Err(VexpError::invalid("scales must be positive"));
    }
    Ok(())
}

/// Integral of a maximal function on a 1-D mesh (`‖Mf‖_{L¹}`).
pub fn maximal_l1(f: &SampledFunction) -> Result<f64> {
    Ok(hl_maximal(f)?.integrate())
}

/// Indicator of `(0, h]` on a uniform mesh of `(0, 1]`.
pub fn indicator_prefix(n: usize, h: f64) -> Result<SampledFunction> {
    let mesh: Arc<Mesh> = Mesh::uniform(1.0, n)?;
    SampledFunction::from_fn(mesh, |x| if x <= h { 1.0 } else { 0.0 })
}
