//! Piecewise-constant functions on finite-measure domains.
//!
//! A [`Mesh`] partitions the domain into cells; a [`SampledFunction`] attaches
//! one finite value to each cell. Cell measures are stored both directly and
//! as logarithms, because the exponent constructors place cells at
//! `x ~ 10^-4000` where the measure itself is not representable.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Result, VexpError};
use crate::numeric::{ln_add_exp, ln_sub_exp, CompensatedSum, LogSum};

/// Relative tolerance used when comparing total measures.
const MEASURE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    /// The interval `(0, x0]`.
    Interval { x0: f64 },
    /// The unit torus `(0,1)^dim` cut into `n^dim` equal cells.
    Torus { n: usize, dim: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub kind: DomainKind,
    pub total_measure: f64,
}

impl Domain {
    pub fn interval(x0: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(VexpError::invalid(format!(
                "interval length must be positive and finite, got {x0}"
            )));
        }
        Ok(Self {
            kind: DomainKind::Interval { x0 },
            total_measure: x0,
        })
    }

    pub fn torus(n: usize, dim: u8) -> Result<Self> {
        if n == 0 || !(dim == 1 || dim == 2) {
            return Err(VexpError::invalid(format!(
                "torus grid needs n >= 1 and dim in {{1, 2}}, got n={n}, dim={dim}"
            )));
        }
        Ok(Self {
            kind: DomainKind::Torus { n, dim },
            total_measure: 1.0,
        })
    }

    pub fn is_interval(&self) -> bool {
        matches!(self.kind, DomainKind::Interval { .. })
    }
}

/// A partition of a [`Domain`] into cells, enumerated in domain order
/// (left to right on intervals, row-major on 2-D tori).
#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Domain,
    ln_measures: Vec<f64>,
    measures: Vec<f64>,
    /// Log of each cell's right endpoint; empty for torus meshes.
    ln_right: Vec<f64>,
}

impl Mesh {
    /// `n` equal cells on `(0, x0]`.
    pub fn uniform(x0: f64, n: usize) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(VexpError::invalid("mesh needs at least one cell"));
        }
        let h = x0 / n as f64;
        let ln_right = (1..=n).map(|k| (h * k as f64).ln()).collect();
        Self::from_ln_right(ln_right)
    }

    /// Interval mesh from the logarithms of strictly increasing right
    /// endpoints; the first cell starts at 0.
    pub fn from_ln_right(ln_right: Vec<f64>) -> Result<Arc<Self>> {
        if ln_right.is_empty() {
            return Err(VexpError::invalid("mesh needs at least one cell"));
        }
        if ln_right.iter().any(|v| !v.is_finite()) {
            return Err(VexpError::invalid("cell endpoints must be positive and finite"));
        }
        if ln_right.windows(2).any(|w| w[1] <= w[0]) {
            return Err(VexpError::invalid("cell endpoints must be strictly increasing"));
        }
        let mut ln_measures = Vec::with_capacity(ln_right.len());
        ln_measures.push(ln_right[0]);
        for w in ln_right.windows(2) {
            ln_measures.push(ln_sub_exp(w[1], w[0]));
        }
        let x0 = ln_right.last().unwrap().exp();
        let domain = Domain::interval(x0)?;
        let measures = ln_measures.iter().map(|l| l.exp()).collect();
        Ok(Arc::new(Self {
            domain,
            ln_measures,
            measures,
            ln_right,
        }))
    }

    /// Interval mesh `(0, Σ measures]` from cell measures in order.
    pub fn from_measures(measures: &[f64]) -> Result<Arc<Self>> {
        let ln: Vec<f64> = measures.iter().map(|m| m.ln()).collect();
        Self::from_ln_measures(ln)
    }

    /// Interval mesh from log cell measures in order.
    pub fn from_ln_measures(ln_measures: Vec<f64>) -> Result<Arc<Self>> {
        if ln_measures.is_empty() {
            return Err(VexpError::invalid("mesh needs at least one cell"));
        }
        if ln_measures.iter().any(|m| !m.is_finite()) {
            return Err(VexpError::invalid("every cell measure must be positive and finite"));
        }
        let mut ln_right = Vec::with_capacity(ln_measures.len());
        let mut acc = f64::NEG_INFINITY;
        for &m in &ln_measures {
            acc = ln_add_exp(acc, m);
            ln_right.push(acc);
        }
        let total = acc.exp();
        let domain = Domain::interval(total)?;
        let measures = ln_measures.iter().map(|l| l.exp()).collect();
        Ok(Arc::new(Self {
            domain,
            ln_measures,
            measures,
            ln_right,
        }))
    }

    /// Uniform grid on the unit torus `(0,1)^dim`.
    pub fn torus(n: usize, dim: u8) -> Result<Arc<Self>> {
        let domain = Domain::torus(n, dim)?;
        let cells = if dim == 1 { n } else { n * n };
        let m = 1.0 / cells as f64;
        Ok(Arc::new(Self {
            domain,
            ln_measures: vec![m.ln(); cells],
            measures: vec![m; cells],
            ln_right: Vec::new(),
        }))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        self.domain.total_measure
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn ln_measures(&self) -> &[f64] {
        &self.ln_measures
    }

    /// Logs of right endpoints (interval meshes only).
    pub fn ln_right(&self) -> &[f64] {
        &self.ln_right
    }

    /// Log of the left endpoint of interval cell `i` (`-inf` for the first).
    pub fn ln_left(&self, i: usize) -> f64 {
        if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.ln_right[i - 1]
        }
    }

    /// Log of the midpoint of interval cell `i`.
    pub fn ln_mid(&self, i: usize) -> f64 {
        let right = self.ln_right[i];
        let left = self.ln_left(i);
        ln_add_exp(left, right) - std::f64::consts::LN_2
    }

    /// Cell centre on a 2-D torus mesh, `(x, y)` with `x` along rows.
    pub fn torus_center(&self, i: usize) -> (f64, f64) {
        match self.domain.kind {
            DomainKind::Torus { n, dim: 2 } => {
                let (r, c) = (i / n, i % n);
                ((c as f64 + 0.5) / n as f64, (r as f64 + 0.5) / n as f64)
            }
            DomainKind::Torus { n, .. } => ((i as f64 + 0.5) / n as f64, 0.0),
            DomainKind::Interval { .. } => (self.ln_mid(i).exp(), 0.0),
        }
    }

    /// True when both meshes describe the same cells.
    pub fn same_cells(&self, other: &Mesh) -> bool {
        if std::ptr::eq(self, other) {
            return true;
        }
        let kinds = match (self.domain.kind, other.domain.kind) {
            (DomainKind::Interval { x0: a }, DomainKind::Interval { x0: b }) => (a - b).abs() <= 1e-12 * a.max(b),
            (a, b) => a == b,
        };
        kinds
            && self.len() == other.len()
            && self
                .ln_measures
                .iter()
                .zip(&other.ln_measures)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0))
    }
}

/// A finite-valued piecewise-constant function on a [`Mesh`].
#[derive(Debug, Clone)]
pub struct SampledFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(VexpError::invalid(format!(
                "{} values supplied for a mesh of {} cells",
                values.len(),
                mesh.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(VexpError::invalid(format!(
                "cell {i} has non-finite value {}",
                values[i]
            )));
        }
        Ok(Self { mesh, values })
    }

    /// Samples `f` at the cell midpoints of an interval mesh; `f` receives
    /// the logarithm of the point.
    pub fn from_ln_fn(mesh: Arc<Mesh>, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !mesh.domain().is_interval() {
            return Err(VexpError::invalid("from_ln_fn needs an interval mesh"));
        }
        let values = (0..mesh.len()).map(|i| f(mesh.ln_mid(i))).collect();
        Self::new(mesh, values)
    }

    /// Samples `f` at the cell midpoints of an interval mesh.
    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_ln_fn(mesh, |l| f(l.exp()))
    }

    /// Constant function.
    pub fn constant(mesh: Arc<Mesh>, c: f64) -> Result<Self> {
        let n = mesh.len();
        Self::new(mesh, vec![c; n])
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn domain(&self) -> &Domain {
        self.mesh.domain()
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

    /// `(measure, value)` pairs in cell order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.mesh.measures().iter().copied().zip(self.values.iter().copied())
    }

    /// Same cells, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.mesh.clone(), values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> Self {
        Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ measure_i · value_i`.
    pub fn integrate(&self) -> f64 {
        self.cells().map(|(m, v)| m * v).collect::<CompensatedSum>().value()
    }

    /// `d_f(λ) = |{|f| > λ}|`.
    pub fn distribution(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(VexpError::invalid(format!(
                "distribution level must be >= 0, got {lambda}"
            )));
        }
        Ok(self
            .cells()
            .filter(|(_, v)| v.abs() > lambda)
            .map(|(m, _)| m)
            .collect::<CompensatedSum>()
            .value())
    }

    /// Logarithm of `d_f(λ)`, exact for cells whose measure underflows.
    pub fn ln_distribution(&self, lambda: f64) -> f64 {
        self.mesh
            .ln_measures()
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| v.abs() > lambda)
            .map(|(m, _)| *m)
            .collect::<LogSum>()
            .ln_value()
    }

    /// The full step function `λ ↦ d_f(λ)`.
    pub fn distribution_function(&self) -> DistributionFunction {
        DistributionFunction::new(self)
    }

    /// Cell order of the decreasing rearrangement: descending `|value|`,
    /// ties by original index.
    pub fn rearrangement_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.values[b]
                .abs()
                .partial_cmp(&self.values[a].abs())
                .unwrap_or(Ordering::Equal)
        });
        order
    }

    /// `f*` on `(0, |Ω|]`: the cells of `|f|` sorted by descending value.
    pub fn decreasing_rearrangement(&self) -> SampledFunction {
        let order = self.rearrangement_order();
        self.permuted(&order, true)
    }

    /// Rearranges cells into `order`, producing a function on the interval
    /// `(0, |Ω|]`.
    pub(crate) fn permuted(&self, order: &[usize], take_abs: bool) -> SampledFunction {
        let ln_measures: Vec<f64> = order.iter().map(|&i| self.mesh.ln_measures()[i]).collect();
        let values = order
            .iter()
            .map(|&i| if take_abs { self.values[i].abs() } else { self.values[i] })
            .collect();
        let mut mesh = Mesh::from_ln_measures(ln_measures).expect("permutation of a valid mesh");
        // keep the exact total; cumulative log-sums may drift in the last ulp
        let total = self.mesh.total_measure();
        let m = Arc::make_mut(&mut mesh);
        m.domain = Domain {
            kind: DomainKind::Interval { x0: total },
            total_measure: total,
        };
        SampledFunction { mesh, values }
    }
}

/// Equimeasurability test: `sup_λ |d_f(λ) − d_g(λ)| ≤ tol` over the merged
/// breakpoint set.
pub fn equimeasurable(f: &SampledFunction, g: &SampledFunction, tol: f64) -> Result<bool> {
    let (mf, mg) = (f.mesh.total_measure(), g.mesh.total_measure());
    if (mf - mg).abs() > MEASURE_RTOL * mf.max(mg) {
        return Err(VexpError::invalid(format!("total measures differ: {mf} vs {mg}")));
    }
    Ok(distribution_gap(f, g) <= tol)
}

/// `sup_λ |d_f(λ) − d_g(λ)|` over `{0} ∪` all breakpoints of both functions.
pub fn distribution_gap(f: &SampledFunction, g: &SampledFunction) -> f64 {
    let df = f.distribution_function();
    let dg = g.distribution_function();
    let mut levels: Vec<f64> = std::iter::once(0.0)
        .chain(df.levels.iter().copied())
        .chain(dg.levels.iter().copied())
        .collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    levels
        .iter()
        .map(|&l| (df.eval(l) - dg.eval(l)).abs())
        .fold(0.0, f64::max)
}

/// Step function `λ ↦ |{|f| > λ}|`.
#[derive(Debug, Clone)]
pub struct DistributionFunction {
    /// Distinct values of `|f|`, descending.
    levels: Vec<f64>,
    /// `above[k] = |{|f| ≥ levels[k]}|`.
    above: Vec<f64>,
    total: f64,
}

impl DistributionFunction {
    fn new(f: &SampledFunction) -> Self {
        let order = f.rearrangement_order();
        let mut levels = Vec::new();
        let mut above = Vec::new();
        let mut acc = CompensatedSum::new();
        for &i in &order {
            let v = f.values[i].abs();
            acc.add(f.mesh.measures()[i]);
            if levels.last() == Some(&v) {
                *above.last_mut().unwrap() = acc.value();
            } else {
                levels.push(v);
                above.push(acc.value());
            }
        }
        Self {
            levels,
            above,
            total: f.mesh.total_measure(),
        }
    }

    /// Breakpoints (distinct `|f|` values), descending.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn total_measure(&self) -> f64 {
        self.total
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        // number of levels strictly greater than lambda
        let k = self.levels.partition_point(|&v| v > lambda);
        if k == 0 {
            0.0
        } else {
            self.above[k - 1]
        }
    }
}

/// Common refinement of two interval meshes of the same total measure.
///
/// Returns the merged mesh and, per merged cell, the index of the cell of
/// `a` and of `b` containing it. Endpoints closer than `1e-12` in log are
/// identified.
pub fn common_refinement(a: &Mesh, b: &Mesh) -> Result<(Arc<Mesh>, Vec<usize>, Vec<usize>)> {
    let (ra, rb) = (a.ln_right(), b.ln_right());
    if ra.is_empty() || rb.is_empty() {
        return Err(VexpError::invalid("common refinement needs interval meshes"));
    }
    let (ta, tb) = (a.total_measure(), b.total_measure());
    if (ta - tb).abs() > MEASURE_RTOL * ta.max(tb) {
        return Err(VexpError::invalid(format!("total measures differ: {ta} vs {tb}")));
    }
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1.0);
    let (mut i, mut j) = (0, 0);
    let (mut ln_right, mut ia, mut ib) = (Vec::new(), Vec::new(), Vec::new());
    while i < ra.len() && j < rb.len() {
        let (x, y) = (ra[i], rb[j]);
        ia.push(i);
        ib.push(j);
        if close(x, y) {
            ln_right.push(x.max(y));
            i += 1;
            j += 1;
        } else if x < y {
            ln_right.push(x);
            i += 1;
        } else {
            ln_right.push(y);
            j += 1;
        }
    }
    // the two totals agree to rounding, so any leftover endpoint is a duplicate
    // of the final one
    let last = ln_right.last_mut().unwrap();
    *last = last.max(*ra.last().unwrap()).max(*rb.last().unwrap());
    Ok((Mesh::from_ln_right(ln_right)?, ia, ib))
}
