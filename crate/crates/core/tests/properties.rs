use proptest::prelude::*;

use znl::dsl::{parse_expr, BinOp, Expr, Func};
use znl::field::{DriftField, Side};
use znl::integrate::{filippov_weights, reflection_map, Path};
use znl::montecarlo::{sup_error, wilson_ci};
use znl::predict::{
    arcsine_cdf, exit_prob_two_sided, occupation_fraction, selection_probabilities,
};

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-1e3f64..1e3).prop_map(Expr::num),
        Just(Expr::VarT),
        (1usize..=3).prop_map(Expr::var),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop_oneof![
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div),
                    Just(BinOp::Pow),
                ],
                inner.clone(),
                inner.clone(),
            )
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            (0..Func::ALL.len(), inner.clone(), inner).prop_map(|(i, a, b)| {
                let f = Func::ALL[i];
                let args = if f.arity() == 2 { vec![a, b] } else { vec![a] };
                Expr::call(f, args)
            }),
        ]
    })
}

fn same(a: Result<f64, impl std::fmt::Debug>, b: Result<f64, impl std::fmt::Debug>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

fn path1(xs: &[f64], dt: f64) -> Path {
    let times = (0..xs.len()).map(|k| k as f64 * dt).collect();
    Path::from_rows(times, xs.iter().map(|&x| vec![x]).collect()).unwrap()
}

proptest! {
    #[test]
    fn printed_expressions_parse_back(e in expr(), t in -2.0f64..2.0, x in prop::array::uniform3(-2.0f64..2.0)) {
        let text = e.to_string();
        let back = parse_expr(&text).unwrap();
        prop_assert!(same(e.eval(t, &x), back.eval(t, &x)), "{text}");
        prop_assert_eq!(back.to_string(), parse_expr(&back.to_string()).unwrap().to_string());
    }

    #[test]
    fn parser_never_panics(s in "[-+*/^() .,0-9a-z]{0,40}") {
        let _ = parse_expr(&s);
    }

    #[test]
    fn evaluation_is_total_on_finite_inputs(e in expr(), t in -2.0f64..2.0, x in prop::array::uniform3(-2.0f64..2.0)) {
        if let Ok(v) = e.eval(t, &x) {
            prop_assert!(v.is_finite());
        }
    }

    #[test]
    fn zero_normal_coordinate_uses_plus_half(a in -5.0f64..5.0, b in -5.0f64..5.0, y in -3.0f64..3.0) {
        let f = DriftField::new(
            vec![Expr::num(a), Expr::var(1)],
            vec![Expr::num(b), Expr::Neg(Box::new(Expr::var(1)))],
        ).unwrap();
        let mut out = [0.0; 2];
        f.eval_into(0.0, &[y, 0.0], &mut out).unwrap();
        prop_assert_eq!(out, [a, y]);
        f.eval_into(0.0, &[y, -1e-300], &mut out).unwrap();
        prop_assert_eq!(out, [b, -y]);
    }

    #[test]
    fn scaled_field_is_pointwise_multiple(lambda in -4.0f64..4.0, e in expr(), x in prop::array::uniform3(-2.0f64..2.0)) {
        let f = DriftField::new(vec![e.clone(); 3], vec![Expr::Neg(Box::new(e)); 3]).unwrap();
        let g = f.scaled(lambda);
        for side in [Side::Plus, Side::Minus] {
            let mut a = [0.0; 3];
            let mut b = [0.0; 3];
            let fa = f.eval_side_into(side, 0.5, &x, &mut a);
            let gb = g.eval_side_into(side, 0.5, &x, &mut b);
            if let (Ok(()), Ok(())) = (fa, gb) {
                for i in 0..3 {
                    prop_assert_eq!((lambda * a[i]).to_bits(), b[i].to_bits());
                }
            }
        }
    }

    #[test]
    fn sliding_weights_are_a_convex_pair(p in -10.0f64..-1e-6, m in 1e-6f64..10.0) {
        let (rp, rm) = filippov_weights(p, m).unwrap();
        prop_assert_eq!(rp + rm, 1.0);
        prop_assert!((0.0..=1.0).contains(&rp));
        prop_assert!((rp * p + rm * m).abs() <= 1e-12 * (p.abs() + m.abs()));
    }

    #[test]
    fn selection_probabilities_sum_to_one(p in 1e-6f64..10.0, m in -10.0f64..-1e-6) {
        let law = selection_probabilities(p, m).unwrap();
        prop_assert_eq!(law.p_plus + law.p_minus, 1.0);
        prop_assert!(law.p_plus > 0.0 && law.p_plus < 1.0);
    }

    #[test]
    fn symmetric_attraction_splits_time_evenly(a in 1e-6f64..1e3) {
        prop_assert_eq!(occupation_fraction(-a, a).unwrap(), 0.5);
    }

    #[test]
    fn reflection_is_nonnegative_and_vanishes_at_new_minima(steps in prop::collection::vec(-1.0f64..1.0, 1..200)) {
        let mut xi = vec![0.0];
        for s in steps {
            xi.push(xi.last().unwrap() + s);
        }
        let r = reflection_map(&xi).unwrap();
        let mut min = f64::INFINITY;
        for (k, (&v, &rv)) in xi.iter().zip(&r).enumerate() {
            prop_assert!(rv >= 0.0);
            if v <= min {
                min = v;
                prop_assert_eq!(rv, 0.0, "index {}", k);
            }
        }
    }

    #[test]
    fn exit_probability_is_diffusively_scale_invariant(
        mp in 0.05f64..5.0,
        mm in -5.0f64..-0.05,
        delta in 0.01f64..1.0,
        eps in 0.01f64..1.0,
        lambda in 0.1f64..10.0,
    ) {
        let p = exit_prob_two_sided(mp, mm, delta, eps).unwrap();
        let q = exit_prob_two_sided(mp, mm, lambda * delta, lambda.sqrt() * eps).unwrap();
        prop_assert!(p > 0.0 && p < 1.0);
        prop_assert!((p - q).abs() <= 1e-12, "{} vs {}", p, q);
    }

    #[test]
    fn exit_probability_swaps_under_reflection(mp in 0.05f64..5.0, mm in -5.0f64..-0.05, eps in 0.01f64..1.0) {
        let p = exit_prob_two_sided(mp, mm, 0.1, eps).unwrap();
        let q = exit_prob_two_sided(-mm, -mp, 0.1, eps).unwrap();
        prop_assert!((p + q - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn arcsine_cdf_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, t in 0.1f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fl, fh) = (arcsine_cdf(lo * t, t).unwrap(), arcsine_cdf(hi * t, t).unwrap());
        prop_assert!(fl <= fh);
        prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
    }

    #[test]
    fn sup_error_is_a_metric(
        a in prop::collection::vec(-5.0f64..5.0, 11),
        b in prop::collection::vec(-5.0f64..5.0, 11),
        c in prop::collection::vec(-5.0f64..5.0, 11),
    ) {
        let (pa, pb, pc) = (path1(&a, 0.1), path1(&b, 0.1), path1(&c, 0.1));
        prop_assert_eq!(sup_error(&pa, &pa).unwrap(), 0.0);
        let ab = sup_error(&pa, &pb).unwrap();
        prop_assert_eq!(ab, sup_error(&pb, &pa).unwrap());
        prop_assert!(ab <= sup_error(&pa, &pc).unwrap() + sup_error(&pc, &pb).unwrap() + 1e-12);
    }

    #[test]
    fn wilson_interval_contains_point(s in 0usize..500, extra in 0usize..500) {
        let n = s + extra + 1;
        let ci = wilson_ci(s, n, 0.95);
        prop_assert!(0.0 <= ci.lo && ci.lo <= ci.point && ci.point <= ci.hi && ci.hi <= 1.0);
    }
}
