//! Seeded randomized property suite.
//!
//! Every check draws its inputs from one ChaCha stream, so a given seed
//! always produces the same rows; the CSV it renders is byte-stable.

use std::f64::consts::E;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exponents::{dual_exponent, lambda_exponent_ln, lambda_level_set_ln_radius, ExponentFunction};
use crate::grid::{distribution_gap, Mesh, SampledFunction};
use crate::lambert::{w_principal, w_secondary, BRANCH_POINT};
use crate::maximal::{hl_maximal, strong_maximal, GridFunction2D};
use crate::norms::{luxemburg_norm, modular, rearrangement_norm_bound_check, NORM_TOL};

/// One property evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SelftestRow {
    pub check: &'static str,
    pub trial: usize,
    /// The quantity compared against its bound (residual, gap, ratio, ...).
    pub value: f64,
    pub pass: bool,
}

fn random_function(rng: &mut ChaCha8Rng, cells: usize) -> Result<SampledFunction> {
    let measures: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = measures.iter().sum();
    let mesh = Mesh::from_measures(&measures.iter().map(|m| m / total).collect::<Vec<_>>())?;
    let values = (0..cells).map(|_| rng.gen_range(-4.0..4.0)).collect();
    SampledFunction::new(mesh, values)
}

fn random_exponent(rng: &mut ChaCha8Rng, mesh: &std::sync::Arc<Mesh>) -> Result<ExponentFunction> {
    let excess = (0..mesh.len()).map(|_| rng.gen_range(0.05..3.0)).collect();
    ExponentFunction::from_excess(mesh.clone(), excess)
}

/// Runs the suite with `trials` randomized draws per check.
pub fn run_selftest(seed: u64, trials: usize) -> Result<Vec<SelftestRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut push = |check, trial, value: f64, pass| {
        rows.push(SelftestRow {
            check,
            trial,
            value,
            pass,
        })
    };

    for t in 0..trials {
        let x = rng.gen_range(BRANCH_POINT..20.0);
        let w = w_principal(x)?;
        let r = (w * w.exp() - x).abs() / x.abs().max(1.0);
        push("lambert_principal_residual", t, r, r <= 1e-12);
        let y = rng.gen_range(BRANCH_POINT..-1e-12);
        let w = w_secondary(y)?;
        let r = (w * w.exp() - y).abs() / y.abs().max(1.0);
        push("lambert_secondary_residual", t, r, r <= 1e-12 && w <= -1.0);
    }

    for t in 0..trials {
        let x = rng.gen_range(0.02..0.3);
        let ln_r = lambda_level_set_ln_radius(x, 1.0, 0.0)?;
        let back = lambda_exponent_ln(ln_r, 1.0, 0.0, (-E).exp() * 0.99)? - 1.0;
        let err = (back - x).abs();
        push("lambda_round_trip", t, err, err <= 1e-8);
    }

    for t in 0..trials {
        let cells = rng.gen_range(5..60);
        let f = random_function(&mut rng, cells)?;
        let fs = f.decreasing_rearrangement();
        let gap = distribution_gap(&f, &fs);
        push("rearrangement_equimeasurable", t, gap, gap <= 1e-12);
        let a = f.abs().integrate();
        let b = fs.integrate();
        let rel = (a - b).abs() / a.max(f64::MIN_POSITIVE);
        push("rearrangement_integral", t, rel, rel <= 1e-12);
        let fss = fs.decreasing_rearrangement();
        let same = fss.values() == fs.values();
        push("rearrangement_idempotent", t, if same { 0.0 } else { 1.0 }, same);
    }

    for t in 0..trials {
        let cells = rng.gen_range(5..60);
        let f = random_function(&mut rng, cells)?;
        let p = random_exponent(&mut rng, f.mesh())?;
        let norm = luxemburg_norm(&f, &p, NORM_TOL)?.value;
        let rho = modular(&f, &p, norm)?;
        push("unit_modular", t, (rho - 1.0).abs(), (rho - 1.0).abs() <= 1e-6);
        let (lhs, rhs) = rearrangement_norm_bound_check(&f, &p)?;
        push("rearrangement_inequality", t, lhs / rhs, lhs <= rhs * (1.0 + 1e-9));
        let q = dual_exponent(&p);
        let g = f.with_values((0..cells).map(|_| rng.gen_range(-2.0..2.0)).collect())?;
        let pairing = f
            .values()
            .iter()
            .zip(g.values())
            .zip(f.mesh().measures())
            .map(|((a, b), m)| (a * b).abs() * m)
            .sum::<f64>();
        let bound = 2.0 * norm * luxemburg_norm(&g, &q, NORM_TOL)?.value;
        push("holder_pairing", t, pairing / bound, pairing <= bound * (1.0 + 1e-9));
        let lam = rng.gen_range(0.05..2.0);
        let lhs = p.ln_sublevel_measure(lam);
        let rhs = q.ln_superlevel_measure((lam + 1.0) / lam);
        let same = lhs == rhs || (lhs - rhs).abs() <= 1e-12 * lhs.abs();
        push("dual_level_sets", t, (lhs.exp() - rhs.exp()).abs(), same);
    }

    for t in 0..trials {
        let cells = rng.gen_range(5..80);
        let f = random_function(&mut rng, cells)?;
        let g = f.with_values((0..cells).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let sum = f.with_values(f.values().iter().zip(g.values()).map(|(a, b)| a + b).collect())?;
        let (mf, mg, ms) = (hl_maximal(&f)?, hl_maximal(&g)?, hl_maximal(&sum)?);
        let excess = ms
            .values()
            .iter()
            .zip(mf.values().iter().zip(mg.values()))
            .map(|(s, (a, b))| s - a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        push("maximal_sublinear", t, excess, excess <= 1e-12);
        let c = rng.gen_range(-5.0..5.0);
        let mc = hl_maximal(&f.scale(c)?)?;
        let err = mc
            .values()
            .iter()
            .zip(mf.values())
            .map(|(a, b)| (a - c.abs() * b).abs() / b.max(1.0))
            .fold(0.0, f64::max);
        push("maximal_scaling", t, err, err <= 1e-10);
        let dominated = mf.values().iter().zip(f.values()).all(|(m, v)| *m >= v.abs());
        push("maximal_dominates", t, 0.0, dominated);
    }

    for t in 0..trials.min(5) {
        let n = rng.gen_range(4..14);
        let f = GridFunction2D::new(n, (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect())?;
        let s = strong_maximal(&f)?;
        let ok = s.values().iter().zip(f.values()).all(|(m, v)| *m + 1e-12 >= v.abs());
        let l2 = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        push("strong_maximal_l2_ratio", t, l2(s.values()) / l2(f.values()), ok);
    }
    Ok(rows)
}

/// Renders the suite as CSV with a config-echo comment line.
pub fn selftest_csv(seed: u64, trials: usize) -> Result<String> {
    let rows = run_selftest(seed, trials)?;
    let mut out = String::new();
    writeln!(out, "# command=selftest seed={seed} trials={trials}").unwrap();
    writeln!(out, "check,trial,value,pass").unwrap();
    for r in &rows {
        writeln!(out, "{},{},{:.12e},{}", r.check, r.trial, r.value, r.pass).unwrap();
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    writeln!(out, "# summary: {} checks, {failed} failed", rows.len()).unwrap();
    Ok(out)
}
