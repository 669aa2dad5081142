use std::collections::HashMap;

use proptest::prelude::*;
use stable_sde::diagnostics::pp_data;
use stable_sde::mcmc::cpm_variance_update;
use stable_sde::model::{mean_reverting_model, parse_expr, BinaryOp, Expr, ThetaVector, UnaryOp};
use stable_sde::quasi::{rate_diagonal, QuasiLikelihood};
use stable_sde::rng::stream;
use stable_sde::simulate::{simulate_path, PathConfig};
use stable_sde::stable::{sample_positive_stable, QuadratureConfig, StableIndex};

const VARS: [&str; 3] = ["x", "a", "b"];

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-30i32..30).prop_map(|k| Expr::Const(k as f64 / 10.0)),
        prop::sample::select(VARS.to_vec()).prop_map(Expr::var),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        let unary = prop::sample::select(vec![
            UnaryOp::Neg,
            UnaryOp::Exp,
            UnaryOp::Log,
            UnaryOp::Cos,
            UnaryOp::Sin,
            UnaryOp::Tanh,
            UnaryOp::Sqrt,
            UnaryOp::Abs,
        ]);
        let binary = prop::sample::select(vec![BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div]);
        prop_oneof![
            (unary, inner.clone()).prop_map(|(op, e)| Expr::Unary(op, Box::new(e))),
            (binary, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r))),
            (inner, 1i32..4).prop_map(|(e, k)| Expr::Binary(BinaryOp::Pow, Box::new(e), Box::new(Expr::Const(k as f64)))),
        ]
    })
}

fn bindings(x: f64, a: f64, b: f64) -> HashMap<String, f64> {
    VARS.iter().map(|s| s.to_string()).zip([x, a, b]).collect()
}

fn close(u: f64, v: f64, rel: f64) -> bool {
    (u - v).abs() <= rel * (1.0 + u.abs().max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn printed_expressions_parse_back(e in expr(), x in -2.0..2.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let text = e.to_string();
        let back = parse_expr(&text, &VARS).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        let env = bindings(x, a, b);
        match (e.eval(&env), back.eval(&env)) {
            (Ok(u), Ok(v)) => prop_assert!(close(u, v, 1e-12), "{} -> {} vs {}", text, u, v),
            (Err(_), Err(_)) => {}
            (u, v) => prop_assert!(false, "{}: {:?} vs {:?}", text, u, v),
        }
    }

    #[test]
    fn derivatives_match_central_differences(e in expr(), x in -2.0..2.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64, k in 0usize..3) {
        let var = VARS[k];
        let d = e.diff(var);
        let at = |t: f64| {
            let mut env = bindings(x, a, b);
            env.insert(var.to_string(), t);
            e.eval(&env).ok()
        };
        let t0 = [x, a, b][k];
        let exact = d.eval(&bindings(x, a, b));
        let fd = |s: f64| Some((at(t0 + s)? - at(t0 - s)?) / (2.0 * s));
        let (Ok(exact), Some(f1), Some(f2)) = (exact, fd(1e-5), fd(2e-5)) else { return Ok(()) };
        // skip kinks, poles and huge values where differences are unreliable
        prop_assume!(exact.abs() < 1e4 && close(f1, f2, 1e-6));
        prop_assert!(close(exact, f1, 1e-5), "d/d{} {} = {} vs fd {}", var, e, exact, f1);
    }

}

proptest! {
    // each case tabulates a new stable law
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn score_matches_differences_of_the_quasi_likelihood(
        seed in 0u64..1000,
        beta in 1.0..1.9f64,
        a1 in -3.0..0.0f64,
        a2 in -1.0..1.0f64,
        g in -1.0..1.0f64,
        n in 20usize..120,
    ) {
        let model = mean_reverting_model(10.0);
        let b = StableIndex::new(beta).unwrap();
        let truth = ThetaVector::new(vec![a1, a2], vec![g]);
        let obs = simulate_path(&model, &truth, b, n, 1.0, &PathConfig::default(), &mut stream(seed, &[1])).unwrap();
        let ql = QuasiLikelihood::new(&model, &obs, b, QuadratureConfig::default()).unwrap();
        // evaluate away from the data-generating point
        let theta = vec![a1 + 0.3, a2 - 0.2, g + 0.1];
        let (score, _) = ql.score(&theta).unwrap();
        for k in 0..3 {
            let s = 1e-5 * (1.0 + theta[k].abs());
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[k] += s;
            dn[k] -= s;
            let fd = (ql.loglik(&up, false).unwrap() - ql.loglik(&dn, false).unwrap()) / (2.0 * s);
            prop_assert!((score[k] - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "k {} score {} fd {}", k, score[k], fd);
        }
    }

}

proptest! {
    #[test]
    fn rate_diagonal_is_exact(n in 1usize..100_000, t in 0.01..1000.0f64, beta in 1.0..1.99f64) {
        let h = t / n as f64;
        let d = rate_diagonal(n, h, StableIndex::new(beta).unwrap(), 2, 1);
        let sq = (n as f64).sqrt();
        prop_assert_eq!(d[0], sq * h.powf(1.0 - 1.0 / beta));
        prop_assert_eq!(d[0], d[1]);
        prop_assert_eq!(d[2], sq);
    }

    #[test]
    fn pp_levels_depend_only_on_ranks(xs in prop::collection::vec(-5.0..5.0f64, 5..60)) {
        let b = StableIndex::new(1.5).unwrap();
        let q = QuadratureConfig::default();
        let p = pp_data(&xs, b, &q).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let p2 = pp_data(&shifted, b, &q).unwrap();
        let e1: Vec<f64> = p.points.iter().map(|t| t.0).collect();
        let e2: Vec<f64> = p2.points.iter().map(|t| t.0).collect();
        prop_assert_eq!(e1, e2);
        prop_assert!(p.points.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}

#[test]
fn autoregressive_variance_update_keeps_the_positive_stable_law() {
    let b = StableIndex::new(1.5).unwrap();
    let n = 100_000;
    let v0 = sample_positive_stable(b, n, &mut stream(5, &[0]));
    let v1 = cpm_variance_update(&v0, 0.9, b, &mut stream(5, &[1]));
    for t in [0.5, 1.0, 2.0] {
        let ys: Vec<f64> = v1.iter().map(|v| (-t * v).exp()).collect();
        let m = ys.iter().sum::<f64>() / n as f64;
        let sd = (ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let exact = (-(2.0 * t).powf(0.75)).exp();
        assert!((m - exact).abs() < 3.0 * sd / (n as f64).sqrt(), "t {t}: {m} vs {exact}");
    }
}
