//! Small numerical kernels shared by the rest of the crate: log-space
//! accumulation, compensated summation, monotone bisection and fixed-order
//! Gauss-Legendre panels.

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a > b`. Returns `-inf` when the difference vanishes.
#[inline]
pub fn ln_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sum of `exp(ln_terms)` kept in log space.
///
/// Terms are rescaled against the running maximum so a sum of values far
/// below the smallest subnormal still has a meaningful logarithm.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    shift: f64,
    scaled: CompensatedSum,
}

impl Default for LogSum {
    fn default() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            scaled: CompensatedSum::new(),
        }
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_ln(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY || ln_term.is_nan() {
            return;
        }
        if self.shift == f64::NEG_INFINITY {
            self.shift = ln_term;
            self.scaled = CompensatedSum::new();
            self.scaled.add(1.0);
            return;
        }
        if ln_term > self.shift {
            let factor = (self.shift - ln_term).exp();
            let old = self.scaled.value() * factor;
            self.scaled = CompensatedSum::new();
            self.scaled.add(old);
            self.shift = ln_term;
        }
        self.scaled.add((ln_term - self.shift).exp());
    }

    pub fn ln_value(&self) -> f64 {
        if self.shift == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.shift + self.scaled.value().ln()
    }
}

impl FromIterator<f64> for LogSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = LogSum::new();
        for x in iter {
            s.add_ln(x);
        }
        s
    }
}

/// Bisection for the boundary of a monotone predicate.
///
/// `lo` must satisfy `!pred(lo)` and `hi` must satisfy `pred(hi)`; the
/// returned pair brackets the switch point to within `tol` (absolute) or the
/// iteration cap.
pub fn bisect_predicate(mut lo: f64, mut hi: f64, tol: f64, max_iter: usize, pred: impl Fn(f64) -> bool) -> (f64, f64) {
    for _ in 0..max_iter {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Ten-point Gauss-Legendre nodes and weights on [-1, 1].
const GL10_NODES: [f64; 5] = [
    0.148_874_338_981_631_21,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_87,
    0.269_266_719_309_996_35,
    0.219_086_362_515_982_04,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_14,
];

/// `ln ∫_a^b exp(ln_f(w)) dw` with one ten-point Gauss-Legendre panel.
pub fn ln_gauss_legendre(a: f64, b: f64, ln_f: &impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return f64::NEG_INFINITY;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = LogSum::new();
    for (x, w) in GL10_NODES.iter().zip(GL10_WEIGHTS.iter()) {
        acc.add_ln(w.ln() + ln_f(mid - half * x));
        acc.add_ln(w.ln() + ln_f(mid + half * x));
    }
    acc.ln_value() + half.ln()
}

/// Same as [`ln_gauss_legendre`] but splits `[a, b]` into panels no wider
/// than `max_width`.
pub fn ln_gauss_legendre_panels(a: f64, b: f64, max_width: f64, ln_f: &impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return f64::NEG_INFINITY;
    }
    let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let mut acc = LogSum::new();
    for k in 0..panels {
        let lo = a + width * k as f64;
        let hi = if k + 1 == panels { b } else { lo + width };
        acc.add_ln(ln_gauss_legendre(lo, hi, ln_f));
    }
    acc.ln_value()
}

/// Formats a positive number given by its logarithm as a decimal scientific
/// literal, even when the number itself is far outside the `f64` range.
pub fn format_from_ln(ln_x: f64) -> String {
    if ln_x == f64::NEG_INFINITY {
        return "0".to_string();
    }
    let x = ln_x.exp();
    if x.is_normal() {
        return format!("{x:e}");
    }
    let log10 = ln_x / std::f64::consts::LN_10;
    let exponent = log10.floor();
    let mantissa = 10f64.powf(log10 - exponent);
    format!("{mantissa:.15}e{}", exponent as i64)
}

/// Parses a decimal literal to its natural logarithm, accepting exponents
/// beyond the `f64` range (e.g. `2.5e-4000`). Only positive values are
/// meaningful; zero yields `-inf`.
pub fn parse_ln(text: &str) -> Option<f64> {
    let text = text.trim();
    if let Ok(x) = text.parse::<f64>() {
        if x > 0.0 && x.is_normal() {
            return Some(x.ln());
        }
        if x == 0.0 && !text.contains(['e', 'E']) {
            return Some(f64::NEG_INFINITY);
        }
        if x < 0.0 || x.is_nan() {
            return None;
        }
    }
    let (mantissa, exponent) = text.split_once(['e', 'E'])?;
    let mantissa: f64 = mantissa.parse().ok()?;
    let exponent: i64 = exponent.parse().ok()?;
    if mantissa < 0.0 {
        return None;
    }
    if mantissa == 0.0 {
        return Some(f64::NEG_INFINITY);
    }
    Some(mantissa.ln() + exponent as f64 * std::f64::consts::LN_10)
}
