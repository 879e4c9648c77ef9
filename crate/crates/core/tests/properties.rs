use std::f64::consts::E;

use proptest::prelude::*;

use vexp::embeddings::{default_small_grid, i_lambda_integral, FInverse};
use vexp::exponents::{lambda_exponent_ln, lambda_level_set_ln_radius};
use vexp::grid::{common_refinement, distribution_gap};
use vexp::lambert::BRANCH_POINT;
use vexp::maximal::interval_maximal;
use vexp::norms::{rearrangement_norm_bound_check, NORM_TOL};
use vexp::numeric::{format_from_ln, ln_add_exp, parse_ln, LogSum};
use vexp::*;

fn mesh_and_values(max_cells: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..max_cells).prop_flat_map(|n| {
        (
            prop::collection::vec(0.01f64..1.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
        )
    })
}

fn sampled(measures: &[f64], values: Vec<f64>) -> SampledFunction {
    SampledFunction::new(Mesh::from_measures(measures).unwrap(), values).unwrap()
}

fn exponent_for(f: &SampledFunction, excess: &[f64]) -> ExponentFunction {
    ExponentFunction::from_excess(f.mesh().clone(), excess[..f.len()].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn principal_branch_identity(x in BRANCH_POINT..1e6) {
        let w = w_principal(x).unwrap();
        prop_assert!(w >= -1.0);
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0));
        if x != 0.0 {
            prop_assert!((w.exp() - x / w).abs() <= 1e-10 * (x / w).abs());
        }
    }

    #[test]
    fn secondary_branch_identity(e in -300.0f64..-std::f64::consts::LOG10_E) {
        // x = -10^e down from -1/e, spread over many scales
        let x = -(10f64.powf(e)).min(-BRANCH_POINT);
        let w = w_secondary(x).unwrap();
        prop_assert!(w <= -1.0);
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0));
        prop_assert!((w.exp() - x / w).abs() <= 1e-10 * (x / w).abs());
    }

    #[test]
    fn lambda_round_trip(x in 0.01f64..0.35, a in 0.5f64..3.0) {
        let ln_r = lambda_level_set_ln_radius(x, a, 0.0);
        prop_assume!(ln_r.is_ok());
        let ln_r = ln_r.unwrap();
        let r0 = (-E).exp() * 0.999;
        prop_assume!(ln_r < r0.ln());
        let back = lambda_exponent_ln(ln_r, a, 0.0, r0).unwrap() - 1.0;
        prop_assert!((back - x).abs() <= 1e-8);
    }

    #[test]
    fn rearrangement_invariants((m, v) in mesh_and_values(60)) {
        let f = sampled(&m, v);
        let fs = f.decreasing_rearrangement();
        prop_assert!(fs.values().windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(distribution_gap(&f, &fs), 0.0);
        let (a, b) = (f.abs().integrate(), fs.integrate());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(f64::MIN_POSITIVE));
        let fss = fs.decreasing_rearrangement();
        prop_assert_eq!(fss.values(), fs.values());
        let d = f.distribution_function();
        prop_assert!(d.eval(0.0) <= f.mesh().total_measure() * (1.0 + 1e-12));
        let mut last = f64::INFINITY;
        for lambda in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let now = f.distribution(lambda).unwrap();
            prop_assert!(now <= last);
            prop_assert_eq!(now, fs.distribution(lambda).unwrap());
            last = now;
        }
    }

    #[test]
    fn unit_modular_and_homogeneity(
        (m, v) in mesh_and_values(40),
        excess in prop::collection::vec(0.01f64..4.0, 40),
        c in 0.1f64..10.0,
    ) {
        let f = sampled(&m, v);
        prop_assume!(f.sup_abs() > 0.0);
        let p = exponent_for(&f, &excess);
        let n = luxemburg_norm(&f, &p, 1e-12).unwrap().value;
        prop_assert!((modular(&f, &p, n).unwrap() - 1.0).abs() <= 1e-6);
        prop_assert!(modular(&f, &p, n * 1.01).unwrap() < modular(&f, &p, n).unwrap());
        let nc = luxemburg_norm(&f.scale(c).unwrap(), &p, 1e-12).unwrap().value;
        prop_assert!((nc - c * n).abs() <= 1e-8 * c * n);
    }

    #[test]
    fn constant_exponent_is_lq((m, v) in mesh_and_values(40), q in 1.0f64..6.0) {
        let f = sampled(&m, v);
        prop_assume!(f.sup_abs() > 0.0);
        let p = ExponentFunction::constant(f.mesh().clone(), q).unwrap();
        let direct = f.map(|x| x.abs().powf(q)).unwrap().integrate().powf(1.0 / q);
        let n = luxemburg_norm(&f, &p, 1e-13).unwrap().value;
        prop_assert!((n - direct).abs() <= 1e-6 * direct);
    }

    #[test]
    fn rearranged_norm_bound(
        (m, v) in mesh_and_values(40),
        excess in prop::collection::vec(0.01f64..4.0, 40),
    ) {
        let f = sampled(&m, v);
        let p = exponent_for(&f, &excess);
        let (lhs, rhs) = rearrangement_norm_bound_check(&f, &p).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9));
    }

    #[test]
    fn holder_pairing(
        (m, v) in mesh_and_values(40),
        w in prop::collection::vec(-3.0f64..3.0, 40),
        excess in prop::collection::vec(0.01f64..4.0, 40),
    ) {
        let f = sampled(&m, v);
        let g = f.with_values(w[..f.len()].to_vec()).unwrap();
        let p = exponent_for(&f, &excess);
        let q = dual_exponent(&p);
        let pairing = f.map(|x| x.abs()).unwrap().values().iter()
            .zip(g.values()).zip(f.mesh().measures())
            .map(|((a, b), m)| a * b.abs() * m).sum::<f64>();
        let bound = 2.0 * luxemburg_norm(&f, &p, NORM_TOL).unwrap().value
            * luxemburg_norm(&g, &q, NORM_TOL).unwrap().value;
        prop_assert!(pairing <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn dual_level_sets_match(excess in prop::collection::vec(0.001f64..5.0, 2..50), lambda in 0.001f64..3.0) {
        let mesh = Mesh::uniform(1.0, excess.len()).unwrap();
        let p = ExponentFunction::from_excess(mesh, excess).unwrap();
        let q = dual_exponent(&p);
        prop_assert_eq!(p.ln_sublevel_measure(lambda), q.ln_superlevel_measure((lambda + 1.0) / lambda));
        for (a, b) in p.excess().iter().zip(q.excess()) {
            prop_assert!((a * b - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn profile_is_monotone(excess in prop::collection::vec(0.0001f64..1.0, 2..80)) {
        let mesh = Mesh::uniform(0.7, excess.len()).unwrap();
        let p = ExponentFunction::from_excess(mesh, excess).unwrap();
        let prof = p.level_set_profile(&LambdaGrid::default_profile());
        // λ descends along the grid, so measures do too
        prop_assert!(prof.ln_measures.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(prof.measures().iter().all(|m| *m <= 0.7 * (1.0 + 1e-12)));
    }

    #[test]
    fn condition_a_ignores_cell_order(excess in prop::collection::vec(0.001f64..0.5, 5..60), seed in 0u64..1000) {
        let mesh = Mesh::uniform(0.3, excess.len()).unwrap();
        let p = ExponentFunction::from_excess(mesh, excess.clone()).unwrap();
        let mut shuffled = excess;
        let k = (seed as usize) % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let q = ExponentFunction::from_excess(p.mesh().clone(), shuffled).unwrap();
        let grid = default_small_grid();
        let a = check_condition_a(&p, 1.0, &grid).unwrap();
        let b = check_condition_a(&q, 1.0, &grid).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert!((a.sup_ln_c - b.sup_ln_c).abs() <= 1e-12 * a.sup_ln_c.abs().max(1.0));
        prop_assert_eq!(check_condition_a(&p.decreasing_rearrangement(), 1.0, &grid).unwrap().verdict, a.verdict);
    }

    #[test]
    fn exp_norm_is_rearrangement_invariant((m, v) in mesh_and_values(60), alpha in 0.5f64..3.0) {
        let f = sampled(&m, v);
        let fs = f.decreasing_rearrangement();
        prop_assert_eq!(exp_zygmund_norm(&f, alpha).unwrap(), exp_zygmund_norm(&fs, alpha).unwrap());
    }

    #[test]
    fn interval_maximal_is_exact(v in prop::collection::vec(0.0f64..10.0, 1..40), w in prop::collection::vec(0.01f64..2.0, 40)) {
        let n = v.len();
        let mut x = vec![0.0];
        let mut p = vec![0.0];
        for i in 0..n {
            x.push(x[i] + w[i]);
            p.push(p[i] + w[i] * v[i]);
        }
        let fast = interval_maximal(&x, &p);
        for (i, got) in fast.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for a in 0..=i {
                for b in i + 1..=n {
                    best = best.max((p[b] - p[a]) / (x[b] - x[a]));
                }
            }
            prop_assert!((got - best).abs() <= 1e-12 * best.max(1.0));
        }
    }

    #[test]
    fn maximal_sublinear_scaling_dominating(
        (m, v) in mesh_and_values(80),
        w in prop::collection::vec(-5.0f64..5.0, 80),
        c in -4.0f64..4.0,
    ) {
        let f = sampled(&m, v);
        let g = f.with_values(w[..f.len()].to_vec()).unwrap();
        let sum = f.with_values(f.values().iter().zip(g.values()).map(|(a, b)| a + b).collect()).unwrap();
        let (mf, mg, ms) = (hl_maximal(&f).unwrap(), hl_maximal(&g).unwrap(), hl_maximal(&sum).unwrap());
        for i in 0..f.len() {
            prop_assert!(mf.values()[i] >= f.values()[i].abs());
            prop_assert!(ms.values()[i] <= (mf.values()[i] + mg.values()[i]) * (1.0 + 1e-10) + 1e-12);
        }
        let mc = hl_maximal(&f.scale(c).unwrap()).unwrap();
        for (a, b) in mc.values().iter().zip(mf.values()) {
            prop_assert!((a - c.abs() * b).abs() <= 1e-10 * b.max(1.0));
        }
    }

    #[test]
    fn strong_maximal_dominates(n in 2usize..12, seed in prop::collection::vec(0.0f64..1.0, 144)) {
        let f = GridFunction2D::new(n, seed[..n * n].to_vec()).unwrap();
        let s = strong_maximal(&f).unwrap();
        let h = vexp::maximal::hl_maximal_2d(&f);
        for i in 0..n * n {
            prop_assert!(s.values()[i] >= f.values()[i] - 1e-12);
            prop_assert!(s.values()[i] >= h.values()[i] - 1e-12);
        }
    }

    #[test]
    fn refinement_preserves_integrals(
        (m1, v1) in mesh_and_values(30),
        m2 in prop::collection::vec(0.01f64..1.0, 2..30),
    ) {
        let f = sampled(&m1, v1);
        let total = f.mesh().total_measure();
        let s2: f64 = m2.iter().sum();
        let other = Mesh::from_measures(&m2.iter().map(|m| m * total / s2).collect::<Vec<_>>()).unwrap();
        let (mesh, ia, ib) = common_refinement(f.mesh(), &other).unwrap();
        prop_assert_eq!(ia.len(), mesh.len());
        prop_assert_eq!(ib.len(), mesh.len());
        let g = SampledFunction::new(mesh, ia.iter().map(|&i| f.values()[i]).collect()).unwrap();
        prop_assert!((g.integrate() - f.integrate()).abs() <= 1e-12 * f.abs().integrate().max(1.0));
    }

    #[test]
    fn log_sum_matches_direct(terms in prop::collection::vec(-50.0f64..50.0, 1..50)) {
        let ls: LogSum = terms.iter().copied().collect();
        let direct: f64 = terms.iter().map(|t| t.exp()).sum();
        prop_assert!((ls.ln_value() - direct.ln()).abs() <= 1e-12 * direct.ln().abs().max(1.0));
        let pair = ln_add_exp(terms[0], terms[terms.len() - 1]);
        let want = (terms[0].exp() + terms[terms.len() - 1].exp()).ln();
        prop_assert!((pair - want).abs() <= 1e-13 * want.abs().max(1.0));
    }

    #[test]
    fn tiny_literals_round_trip(ln_x in -1e6f64..700.0) {
        let text = format_from_ln(ln_x);
        let back = parse_ln(&text).unwrap();
        prop_assert!((back - ln_x).abs() <= 1e-9 * ln_x.abs().max(1.0));
    }

    #[test]
    fn i_lambda_nonincreasing(alpha in 0.5f64..2.0, l1 in 5.0f64..50.0, dl in 0.5f64..20.0) {
        let f = FInverse::new(E, alpha).unwrap();
        let ln_t0 = f.ln_t0().min(0.0);
        let a = i_lambda_integral(|lt| f.eval_ln(lt), alpha, l1, ln_t0).unwrap();
        let b = i_lambda_integral(|lt| f.eval_ln(lt), alpha, l1 + dl, ln_t0).unwrap();
        if a.is_finite() && b.is_finite() {
            prop_assert!(b.ln_value() <= a.ln_value() + 1e-9 * a.ln_value().abs().max(1.0));
        } else {
            prop_assert!(!a.is_finite());
        }
    }
}
