use super::*;
use crate::quantizer1d::{lloyd1d, midpoint_grid, LloydConfig};
use crate::quantizer_nd::{train_nd, Method, TrainConfig};
use crate::special::normal_pdf;
use proptest::prelude::*;

fn normal_rule(n: usize) -> (Density, QuadratureRule, Codebook1D) {
    let g = Density::std_normal();
    let cb = lloyd1d(&g, n, 2.0, &LloydConfig::default()).unwrap();
    let rule = QuadratureRule::from_codebook1d(&cb, &g).unwrap();
    (g, rule, cb)
}

fn simpson_normal<F: Fn(f64) -> f64>(f: F) -> f64 {
    let (a, b, m) = (-40.0, 40.0, 400_000);
    let h = (b - a) / m as f64;
    let g = |x: f64| f(x) * normal_pdf(x);
    let mut s = g(a) + g(b);
    for i in 1..m {
        s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn expect_examples() {
    let u = Density::uniform01();
    let rule = QuadratureRule::from_codebook1d(&midpoint_grid(4).unwrap(), &u).unwrap();
    assert!((expect(&rule, |x| x[0]).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(rule.order, Order::SecondStationary);

    let (g, rule, cb) = normal_rule(20);
    assert_eq!(rule.order, Order::SecondStationary);
    assert!(expect(&rule, |x| x[0]).unwrap().abs() < 1e-9);
    let d2 = distortion1d(&cb, &g, 2.0).unwrap();
    assert!((expect(&rule, |x| x[0] * x[0]).unwrap() - (1.0 - d2)).abs() < 1e-9);
    assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn nan_is_reported_with_index() {
    let (_, rule, _) = normal_rule(5);
    let e = expect(&rule, |x| if x[0] > 1.0 { f64::NAN } else { 0.0 }).unwrap_err();
    assert!(e.to_string().contains("atom 4"), "{e}");
}

#[test]
fn order2_examples() {
    assert!((order2_bound(1.0, 0.01).unwrap() - 0.01).abs() < 1e-18);
    assert!(order2_bound(-1.0, 0.01).is_err());

    let (g, rule, cb) = normal_rule(100);
    let f = |x: f64| (1.0 + x * x).ln();
    let truth = simpson_normal(f);
    let e2 = distortion1d(&cb, &g, 2.0).unwrap();
    let actual = (expect(&rule, |x| f(x[0])).unwrap() - truth).abs();
    assert!(actual <= order2_bound(2.0, e2).unwrap(), "{actual} vs {}", 2.0 * e2);

    let (_, _, cb2) = normal_rule(200);
    let ratio = e2 / distortion1d(&cb2, &g, 2.0).unwrap();
    assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
}

#[test]
fn holder_exponents() {
    let (p, q) = holder_split(1, 1.0).unwrap();
    assert!(p.is_infinite() && q == 1.0);
    let (p, q) = holder_split(2, 1.0).unwrap();
    assert!((p - 4.0).abs() < 1e-15 && (q - 4.0 / 3.0).abs() < 1e-15);
    assert!((1.0 / p + 1.0 / q - 1.0).abs() < 1e-15);
    assert!(holder_split(1, 0.0).is_err());
    assert!(holder_split(1, 1.5).is_err());
}

#[test]
fn battery_truths_match_quadrature() {
    for t in battery() {
        assert!((simpson_normal(t.f) - t.mean_normal).abs() < 1e-9, "{}", t.name);
        let m = 200_000;
        let mid: f64 = (0..m).map(|i| (t.f)((i as f64 + 0.5) / m as f64)).sum::<f64>() / m as f64;
        assert!((mid - t.mean_uniform).abs() < 1e-8, "{}", t.name);
        for x in [-3.0, -0.7, 0.2, 1.9, 5.0] {
            let h = (t.hessian)(x);
            assert!(h <= t.growth.a * (x.abs().powf(t.growth.exponent) + 1.0) + 1e-12, "{} at {x}", t.name);
            let e = 1e-4;
            let fd = ((t.f)(x + e) - 2.0 * (t.f)(x) + (t.f)(x - e)) / (e * e);
            assert!((fd.abs() - h).abs() < 1e-4 * (1.0 + h), "{} at {x}", t.name);
        }
    }
    assert_eq!(battery().len(), 10);
}

#[test]
fn battery_errors_within_holder_bound() {
    let u = Density::uniform01();
    let urule = QuadratureRule::from_codebook1d(&lloyd1d(&u, 200, 2.0, &LloydConfig::default()).unwrap(), &u).unwrap();
    let (g, grule, _) = normal_rule(200);
    for (d, rule) in [(&g, &grule), (&u, &urule)] {
        for t in battery() {
            let est = expect(rule, |x| (t.f)(x[0])).unwrap();
            let err = (est - t.truth(d).unwrap()).abs();
            let h = t.hessian;
            let hb = holder_split_bound(rule, d, t.growth, Some(&|x: &[f64]| h(x[0])), 0, 0).unwrap();
            assert!(err <= hb.bound + 1e-12, "{d} {}: {err} > {}", t.name, hb.bound);
            if t.growth.a == 0.0 {
                assert!(err < 1e-9, "{}", t.name);
            }
        }
    }
}

#[test]
fn holder_bound_decays_like_n_squared() {
    let t = battery().into_iter().find(|t| t.name == "abs-2.5").unwrap();
    let bounds: Vec<f64> = [50usize, 100, 200]
        .iter()
        .map(|&n| {
            let (g, rule, _) = normal_rule(n);
            holder_split_bound(&rule, &g, t.growth, None, 0, 0).unwrap().bound
        })
        .collect();
    for w in bounds.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.0 && ratio < 5.0, "{bounds:?}");
    }
}

#[test]
fn first_order_rule_is_rejected() {
    let u = Density::uniform01();
    let cb = Codebook1D::new(vec![0.1, 0.3, 0.9], &u, 2.0).unwrap();
    let rule = QuadratureRule::from_codebook1d(&cb, &u).unwrap();
    assert_eq!(rule.order, Order::First);
    assert!(holder_split_bound(&rule, &u, HessianGrowth { a: 1.0, exponent: 0.0 }, None, 0, 0).is_err());
}

#[test]
fn heavy_tail_gives_infinite_bound() {
    let p = Density::pareto(2.5).unwrap();
    let cb = lloyd1d(&p, 8, 2.0, &LloydConfig { restarts: Some(1), ..LloydConfig::default() }).unwrap();
    let rule = QuadratureRule::from_codebook1d(&cb, &p).unwrap();
    let hb = holder_split_bound(&rule, &p, HessianGrowth { a: 1.0, exponent: 0.0 }, None, 0, 0).unwrap();
    assert!(hb.bound.is_finite());
    // 2q = 6/2.1 exceeds the tail index
    let hb = holder_split_bound(&rule, &p, HessianGrowth { a: 1.0, exponent: 0.9 }, None, 0, 0).unwrap();
    assert_eq!(hb.bound, f64::INFINITY);
    assert!(hb.criterion.is_some());
}

#[test]
fn two_dimensional_bound() {
    let g = Density::normal_nd(2, 1.0, 0.0).unwrap();
    let cfg = TrainConfig { seed: 4, budget: 64_000 * 4, eval_samples: 1_000_000, ..TrainConfig::default() };
    let cb = train_nd(&g, 64, 2.0, Method::LloydMc, &cfg).unwrap();
    let rule = QuadratureRule::from_codebook_nd(&cb, &g, 400_000, 9).unwrap();
    assert_eq!(rule.order, Order::SecondStationary);
    let t = battery().into_iter().find(|t| t.name == "abs-2.5").unwrap();
    let est = expect(&rule, |x| (t.f)(x[0])).unwrap();
    let hb = holder_split_bound(&rule, &g, HessianGrowth { a: 3.75, exponent: 0.5 }, None, 400_000, 3).unwrap();
    assert!((hb.p - 8.0).abs() < 1e-12);
    assert!(hb.std_error.unwrap() < 0.05 * hb.bound);
    // the weights carry Monte-Carlo noise of order 1e-2 on this integrand
    assert!((est - t.mean_normal).abs() <= hb.bound + 0.02, "{est} vs {}: {hb:?}", t.mean_normal);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn expect_is_linear_and_monotone(a in -3.0f64..3.0, b in -3.0f64..3.0, c in 0.0f64..2.0) {
        let (_, rule, _) = normal_rule(9);
        let f = |x: &[f64]| x[0].sin();
        let h = |x: &[f64]| x[0] * x[0];
        let lhs = expect(&rule, |x| a * f(x) + b * h(x)).unwrap();
        let rhs = a * expect(&rule, f).unwrap() + b * expect(&rule, h).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!(expect(&rule, |x| h(x) + c).unwrap() >= expect(&rule, h).unwrap());
    }
}
