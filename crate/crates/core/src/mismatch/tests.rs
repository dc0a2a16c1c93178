use super::*;
use crate::quantizer1d::midpoint_grid;
use proptest::prelude::*;
use std::f64::consts::PI;

fn linear() -> Density {
    Density::linear(0.0, 1.0, 2.0 / 3.0, 2.0 / 3.0).unwrap()
}

fn qrs_linear(r: f64, s: f64) -> f64 {
    // closed form for f = (2 + 2x)/3 on [0, 1]
    let power = |t: f64| ((4.0f64 / 3.0).powf(t + 1.0) - (2.0f64 / 3.0).powf(t + 1.0)) / ((t + 1.0) * 2.0 / 3.0);
    let js = 1.0 / (2f64.powf(s) * (s + 1.0));
    js * power(1.0 / (1.0 + r)).powf(s) * power(1.0 - s / (1.0 + r))
}

#[test]
fn uniform_rate_table_is_constant() {
    let u = Density::uniform01();
    let t = rate_table(&u, 2.0, 3.0, &[4, 8, 16], RateMethod::Exact1d, &RateOptions::default()).unwrap();
    for row in &t.rows {
        assert!((row.scaled - 1.0 / 32.0).abs() < 1e-12, "{row:?}");
    }
    assert!(t.rows.windows(2).all(|w| w[1].distortion < w[0].distortion));
    assert!(t.to_csv().starts_with("n,distortion,scaled\n"));
    let c = constants(&u, 2.0, 3.0).unwrap();
    let lb = lower_bound_check(&t, &c).unwrap();
    assert!((lb.ratio_at_largest - 1.0).abs() < 1e-9);
    assert!(!lb.violation);
}

#[test]
fn normal_zador_limit() {
    let n = Density::std_normal();
    let t = rate_table(&n, 2.0, 2.0, &[50, 100, 200, 400, 800], RateMethod::Exact1d, &RateOptions::default()).unwrap();
    let want = PI * 3f64.sqrt() / 2.0;
    let last = t.rows.last().unwrap().scaled;
    assert!((last - want).abs() < 0.01 * want, "{last} vs {want}");
}

#[test]
fn scaled_column_diverges_beyond_critical_order() {
    let n = Density::std_normal();
    let t = rate_table(&n, 2.0, 3.5, &[25, 50, 100, 200, 400], RateMethod::Exact1d, &RateOptions::default()).unwrap();
    assert!(t.rows.windows(2).all(|w| w[1].scaled > w[0].scaled), "{:?}", t.scaled());
    assert!(lower_bound_check(&t, &constants(&n, 2.0, 3.5).unwrap()).is_err());
}

#[test]
fn lower_bound_trend_normal() {
    let n = Density::std_normal();
    let t = rate_table(&n, 2.0, 2.5, &[100, 200, 400, 800], RateMethod::Exact1d, &RateOptions::default()).unwrap();
    let lb = lower_bound_check(&t, &constants(&n, 2.0, 2.5).unwrap()).unwrap();
    assert!(lb.ratio_at_largest >= 0.9, "{lb:?}");
    assert!(!lb.violation);
}

#[test]
fn sharp_rate_linear_density() {
    let lin = linear();
    let cfg = LloydConfig::default();
    for (s, tol) in [(4.0, 0.02), (2.0, 0.02), (2.5, 0.02)] {
        let fit = sharp_rate_fit(&lin, 2.0, s, &[100, 200, 400, 800], &cfg).unwrap();
        let want = qrs_linear(2.0, s);
        assert!((fit.qrs - want).abs() < 1e-10 * want);
        assert!(fit.relative_error < tol, "s={s}: {fit:?}");
    }
    let u = Density::uniform01();
    let fit = sharp_rate_fit(&u, 2.0, 3.0, &[10, 20, 40], &cfg).unwrap();
    assert!((fit.limit - 1.0 / 32.0).abs() < 1e-12);
    assert!(fit.correction_slope.abs() < 1e-9);
    assert!(sharp_rate_fit(&Density::std_normal(), 2.0, 3.0, &[10, 20], &cfg).is_err());
}

#[test]
fn counterexample_codebook_examples() {
    assert_eq!(counterexample_codebook(2, 1.0).unwrap().points, vec![0.25, 0.75]);
    let p = counterexample_codebook(3, 1.0).unwrap().points;
    for (a, b) in p.iter().zip([1.0 / 6.0, 0.5, 5.0 / 6.0]) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!(counterexample_codebook(1, 1.0).is_err());
}

#[test]
fn counterexample_rejects_theta_outside_interval() {
    let e = counterexample_rates(0.5, 2.0, 4.0, &[16, 32]).unwrap_err();
    assert!(e.to_string().contains("0.666"), "{e}");
}

#[test]
fn counterexample_separation() {
    let ns: Vec<usize> = (4..=12).map(|k| 1usize << k).collect();
    let rep = counterexample_rates(0.75, 2.0, 4.0, &ns).unwrap();
    assert!((rep.target_exponent - 0.25).abs() < 1e-15);
    // the L^r rate converges to J_{r,1}
    let errs: Vec<f64> = rep.rows.iter().map(|r| (r.scaled_r / rep.j_r - 1.0).abs()).collect();
    assert!(errs[1..].windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(rep.scaled_r_relative_error < 0.1);
    // the L^s rate blows up
    assert!(rep.increasing_from.is_some());
    assert!(rep.growth_exponent > 0.1 && rep.excess_exponent > 0.2, "{rep:?}");
    let last = rep.rows.last().unwrap();
    let lower = (last.n as f64).powf(rep.target_exponent) / (2f64.powi(5) * 5.0);
    assert!(last.scaled_s >= lower * 0.99);
}

#[test]
fn counterexample_distortion_matches_riemann_sum() {
    let cb = counterexample_codebook(7, 0.7).unwrap();
    let u = Density::uniform01();
    let m = 200_000;
    for s in [2.0, 4.0] {
        let riemann = (0..m)
            .map(|i| {
                let x = (i as f64 + 0.5) / m as f64;
                cb.points.iter().map(|a| (x - a).abs()).fold(f64::INFINITY, f64::min).powf(s)
            })
            .sum::<f64>()
            / m as f64;
        let exact = distortion1d(&cb, &u, s).unwrap();
        assert!((exact - riemann).abs() < 1e-8 * exact.max(1e-6), "s={s}");
    }
}

#[test]
fn empirical_distance_examples() {
    let u = Density::uniform01();
    for n in [1usize, 4, 10] {
        let d = empirical_measure_distance(&midpoint_grid(n).unwrap(), &u, 2.0).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12, "n={n}");
    }
    let g = Density::std_normal();
    let cb = lloyd1d(&g, 500, 2.0, &LloydConfig::default()).unwrap();
    assert!(empirical_measure_distance(&cb, &g, 2.0).unwrap() < 0.05);

    let one = Codebook1D::new(vec![0.7], &g, 2.0).unwrap();
    let pd = PointDensity::new(&g, 2.0).unwrap();
    let f = pd.cdf(0.7);
    let d = empirical_measure_distance(&one, &g, 2.0).unwrap();
    assert!(d <= f.max(1.0 - f) + 1e-15);
}

#[test]
fn empirical_distance_decreases_with_n() {
    for d in [Density::std_normal(), Density::gamma(2.0, 1.0).unwrap()] {
        let seq = lloyd_sequence(&d, 2.0, &[10, 20, 40, 80], &LloydConfig::default()).unwrap();
        let dist: Vec<f64> = seq.iter().map(|cb| empirical_measure_distance(cb, &d, 2.0).unwrap()).collect();
        assert!(dist.windows(2).all(|w| w[1] < w[0]), "{d}: {dist:?}");
    }
}

#[test]
fn maximal_function_uniform() {
    let u = Density::uniform01();
    let seq: Vec<Codebook1D> = [4usize, 8, 16].iter().map(|&n| midpoint_grid(n).unwrap()).collect();
    let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
    let est = maximal_function_estimate(&u, Sequence::Scalar(&seq), 0.25, &grid, 3.0, 2.0, 0, 0).unwrap();
    for (&x, &v) in grid.iter().zip(&est.values) {
        // oracle: 2ρ over the clipped interval length
        let want = seq
            .iter()
            .map(|cb| {
                let rho = 0.25 * cb.points.iter().map(|a| (x - a).abs()).fold(f64::INFINITY, f64::min);
                if rho == 0.0 {
                    0.0
                } else {
                    2.0 * rho / ((x + rho).min(1.0) - (x - rho).max(0.0))
                }
            })
            .fold(0.0, f64::max);
        assert!((v - want).abs() < 1e-12);
        assert!((1.0 - 1e-12..=2.0).contains(&v) || v == 0.0, "x={x}: {v}");
    }
    // 0.125 is a codepoint of the n = 4 grid
    let at_point = maximal_function_estimate(&u, Sequence::Scalar(&seq[..1]), 0.25, &[0.125], 3.0, 2.0, 0, 0).unwrap();
    assert_eq!(at_point.values[0], 0.0);
    assert!(maximal_function_estimate(&u, Sequence::Scalar(&seq), 0.5, &grid, 3.0, 2.0, 0, 0).is_err());
}

#[test]
fn maximal_function_normal_is_integrable() {
    let g = Density::std_normal();
    let seq = lloyd_sequence(&g, 2.0, &[8, 16, 32, 64], &LloydConfig::default()).unwrap();
    let grid = default_grid(&g).unwrap();
    assert_eq!(grid.len(), MAXIMAL_GRID);
    let a = maximal_function_estimate(&g, Sequence::Scalar(&seq), 0.25, &grid, 2.5, 2.0, 0, 0).unwrap();
    assert!(a.values.iter().all(|&v| v >= 0.0));
    assert!(a.criterion_integral.is_finite() && a.criterion_integral < 1e3, "{}", a.criterion_integral);
    assert!(a.std_error < 0.05 * a.criterion_integral);
    let b = maximal_function_estimate(&g, Sequence::Scalar(&seq), 0.4, &grid, 2.5, 2.0, 0, 0).unwrap();
    assert!(b.criterion_integral <= a.criterion_integral * (1.0 + 1e-9) + b.std_error);
}

#[test]
fn maximal_function_vector_sequence() {
    let cube = Density::uniform_box(2, 0.0, 1.0).unwrap();
    let cb = CodebookND::new(vec![0.25, 0.25, 0.75, 0.75, 0.25, 0.75, 0.75, 0.25], 2, 2.0, Norm::Euclidean, cube.id()).unwrap();
    let grid = vec![0.5, 0.5, 0.3, 0.4];
    let est = maximal_function_estimate(&cube, Sequence::Vector(std::slice::from_ref(&cb)), 0.25, &grid, 2.5, 2.0, 400_000, 3).unwrap();
    // interior balls: λ(B)/P(B) = 1
    for v in &est.values {
        assert!((v - 1.0).abs() < 0.05, "{v}");
    }
}

#[test]
fn increments_uniform_closed_form() {
    let u = Density::uniform01();
    let ns: Vec<usize> = (1..=20).collect();
    let rep = increment_gap(&u, 2.0, &ns, &LloydConfig::default()).unwrap();
    for row in &rep.rows {
        let n = row.n as f64;
        let want = (1.0 / (n * n) - 1.0 / ((n + 1.0) * (n + 1.0))) / 12.0;
        assert!((row.increment - want).abs() < 1e-12, "{row:?}");
    }
    assert!(rep.c2 <= 1.0 / 6.0 + 1e-12);
    assert!(rep.all_positive && !rep.non_optimal);
}

#[test]
fn increments_normal_are_stable() {
    let g = Density::std_normal();
    let ns = [10, 20, 40, 80, 120, 160, 200];
    let rep = increment_gap(&g, 2.0, &ns, &LloydConfig::default()).unwrap();
    assert!(rep.all_positive);
    assert!(rep.upper_half_spread < 3.0, "{rep:?}");
}

#[test]
fn criterion_examples() {
    let g = Density::std_normal();
    let rep = criterion_check(&g, 2.0, 2.5).unwrap();
    assert_eq!(rep.verdict, Verdict::Cor3Applies { c: 1.09, half_line: false });
    let by_c: Vec<bool> = rep.c_tests.iter().map(|t| t.1.is_finite()).collect();
    assert_eq!(by_c, vec![true, true, true, false, false, false]);
    // finite iff c² s/(d+r) < 1
    for &(c, v) in &rep.c_tests {
        assert_eq!(v.is_finite(), c * c * 2.5 / 3.0 < 1.0, "c={c}");
    }

    let p = Density::pareto(3.0).unwrap();
    assert!(matches!(criterion_check(&p, 1.0, 1.4).unwrap().verdict, Verdict::Cor3Applies { half_line: true, .. }));
    assert!(matches!(criterion_check(&p, 1.0, 1.6).unwrap().verdict, Verdict::None { .. }));

    let comb = Density::poisson_comb(2.0).unwrap();
    assert_eq!(criterion_check(&comb, 2.0, 2.5).unwrap().verdict.id(), "cor4-applies");

    assert_eq!(criterion_check(&g, 2.0, 1.0).unwrap().verdict, Verdict::NotRequired);
    assert_eq!(criterion_check(&Density::uniform01(), 2.0, 2.5).unwrap().verdict, Verdict::Cor1Applies);
    assert!(matches!(criterion_check(&Density::pareto(1.5).unwrap(), 2.0, 2.5).unwrap().verdict, Verdict::None { .. }));
}

#[test]
fn supercritical_normal() {
    let g = Density::std_normal();
    let rep = criterion_check(&g, 2.0, 4.0).unwrap();
    match rep.verdict {
        Verdict::Supercritical { theta_min, rate_exponent, .. } => {
            // finite iff c²(s − ϑ)/(d + r) < 1 for some c in the grid
            let bound = 4.0 - 3.0 / (1.01f64 * 1.01);
            assert!(theta_min > bound && theta_min < bound + 0.1, "{theta_min}");
            assert!((rate_exponent - (4.0 - theta_min)).abs() < 1e-12);
        }
        v => panic!("{v:?}"),
    }
}

#[test]
fn criterion_in_two_dimensions() {
    let g = Density::normal_nd(2, 1.0, 0.0).unwrap();
    let rep = criterion_check(&g, 2.0, 3.0).unwrap();
    // finite iff c² s/(d+r) < 1, i.e. c < 1.1547
    assert_eq!(rep.verdict, Verdict::Cor3Applies { c: 1.1, half_line: false });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn counterexample_points_increase(n in 2usize..200, theta in 0.1f64..2.0) {
        let p = counterexample_codebook(n, theta).unwrap().points;
        prop_assert!(p[0] > 0.0 && p[n - 1] < 1.0);
        prop_assert!(p.windows(2).all(|w| w[1] > w[0]));
    }
}
