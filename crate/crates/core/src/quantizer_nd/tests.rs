use super::*;
use crate::quantizer1d::midpoint_grid;
use proptest::prelude::*;
use rand::Rng;

fn cfg(seed: u64, budget: usize) -> TrainConfig {
    TrainConfig { seed, budget, ..TrainConfig::default() }
}

#[test]
fn single_point_is_the_mean() {
    let cube = Density::uniform_box(2, 0.0, 1.0).unwrap();
    let cb = train_nd(&cube, 1, 2.0, Method::LloydMc, &cfg(1, 200_000)).unwrap();
    assert!(cb.point(0).iter().all(|v| (v - 0.5).abs() < 5e-3));
    let g = Density::normal_nd(2, 1.0, 0.0).unwrap();
    let cb = train_nd(&g, 1, 2.0, Method::LloydMc, &cfg(2, 200_000)).unwrap();
    assert!(cb.point(0).iter().all(|v| v.abs() < 5e-3));
}

#[test]
fn lloyd_mc_matches_midpoint_grid_in_1d() {
    let u = Density::uniform01();
    let cb = train_nd(&u, 4, 2.0, Method::LloydMc, &cfg(3, 400_000)).unwrap();
    let mut pts = cb.points().to_vec();
    pts.sort_by(f64::total_cmp);
    for (a, b) in pts.iter().zip(&midpoint_grid(4).unwrap().points) {
        assert!((a - b).abs() < 5e-3, "{pts:?}");
    }
}

#[test]
fn clvq_matches_midpoint_grid_in_1d() {
    let u = Density::uniform01();
    let cb = train_nd(&u, 4, 2.0, Method::Clvq, &cfg(4, 400_000)).unwrap();
    let mut pts = cb.points().to_vec();
    pts.sort_by(f64::total_cmp);
    for (a, b) in pts.iter().zip(&midpoint_grid(4).unwrap().points) {
        assert!((a - b).abs() < 1e-2, "{pts:?}");
    }
}

#[test]
fn clvq_small_r_runs() {
    let g = Density::normal_nd(2, 1.0, 0.0).unwrap();
    let cb = train_nd(&g, 8, 0.5, Method::Clvq, &cfg(5, 20_000)).unwrap();
    assert_eq!(cb.len(), 8);
    assert!(cb.meta.distortion.is_finite());
    assert!(train_nd(&g, 8, 0.5, Method::LloydMc, &cfg(5, 20_000)).is_err());
}

#[test]
fn budget_precondition() {
    let u = Density::uniform01();
    assert!(train_nd(&u, 10, 2.0, Method::LloydMc, &cfg(0, 5_000)).is_err());
}

#[test]
fn nearest_examples() {
    let cb = CodebookND::new(vec![0.0, 0.0, 1.0, 1.0], 2, 2.0, Norm::Euclidean, "test").unwrap();
    let (i, d) = cb.nearest(&[0.2, 0.1]).unwrap();
    assert_eq!(i, 0);
    assert!((d - 0.05f64.sqrt()).abs() < 1e-15);
    assert_eq!(cb.nearest(&[0.5, 0.5]).unwrap().0, 0);
    let cb = CodebookND::new(vec![1.0, 1.0, 0.0, 0.0], 2, 2.0, Norm::Euclidean, "test").unwrap();
    assert_eq!(cb.nearest(&[0.5, 0.5]).unwrap().0, 0);
    assert!(cb.nearest(&[0.5]).is_err());
}

#[test]
fn nearest_matches_brute_force() {
    let mut r = crate::rng::seeded(9);
    for (norm, d) in [(Norm::Euclidean, 2), (Norm::Sup, 3), (Norm::Euclidean, 3)] {
        let pts: Vec<f64> = (0..300 * d).map(|_| r.random::<f64>()).collect();
        let cb = CodebookND::new(pts.clone(), d, 2.0, norm, "test").unwrap();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..d).map(|_| r.random::<f64>() * 1.2 - 0.1).collect();
            assert_eq!(cb.nearest(&x).unwrap().0, brute_nearest(&pts, d, &x, norm).0);
        }
    }
}

#[test]
fn mc_distortion_examples() {
    let n = Density::std_normal();
    let zero = CodebookND::new(vec![0.0], 1, 2.0, Norm::Euclidean, n.id()).unwrap();
    let e = mc_distortion(&zero, &n, 2.0, 1_000_000, 1).unwrap();
    assert!((e.value - 1.0).abs() < 0.003);

    let u = Density::uniform01();
    let g = CodebookND::new(midpoint_grid(4).unwrap().points, 1, 2.0, Norm::Euclidean, u.id()).unwrap();
    let e = mc_distortion(&g, &u, 2.0, 200_000, 2).unwrap();
    assert!((e.value - 1.0 / 192.0).abs() < 3.0 * e.std_error);

    let cube = Density::uniform_box(2, 0.0, 1.0).unwrap();
    let c = CodebookND::new(vec![0.5, 0.5], 2, 2.0, Norm::Euclidean, cube.id()).unwrap();
    let e = mc_distortion(&c, &cube, 2.0, 200_000, 3).unwrap();
    assert!((e.value - 1.0 / 6.0).abs() < 3.0 * e.std_error);
}

#[test]
fn mc_distortion_is_reproducible() {
    let g = Density::normal_nd(3, 1.0, 0.3).unwrap();
    let cb = train_nd(&g, 16, 2.0, Method::LloydMc, &cfg(1, 16_000)).unwrap();
    let a = mc_distortion(&cb, &g, 2.0, 50_000, 7).unwrap();
    let b = mc_distortion(&cb, &g, 2.0, 50_000, 7).unwrap();
    assert_eq!(a, b);
    let t1 = train_nd(&g, 16, 2.0, Method::LloydMc, &cfg(1, 16_000)).unwrap();
    assert_eq!(cb.points(), t1.points());
}

#[test]
fn heavy_tail_is_flagged() {
    let p = Density::pareto(3.0).unwrap();
    let cb = CodebookND::new(vec![1.5], 1, 2.0, Norm::Euclidean, p.id()).unwrap();
    assert!(mc_distortion(&cb, &p, 3.5, 10_000, 0).unwrap().divergent_tail);
    assert!(!mc_distortion(&cb, &p, 1.0, 10_000, 0).unwrap().divergent_tail);
}

#[test]
fn stationarity_gap_examples() {
    let u = Density::uniform01();
    let g = CodebookND::new(midpoint_grid(8).unwrap().points, 1, 2.0, Norm::Euclidean, u.id()).unwrap();
    let gap = stationarity_gap(&g, &u, 400_000, 1).unwrap();
    assert!(gap.gap < 4.0 * gap.max_cell_std_error, "{gap:?}");

    let mut pts = midpoint_grid(8).unwrap().points;
    pts[3] += 0.1;
    // exact cell means of the perturbed grid
    let exact = (0..8)
        .map(|k| {
            let lo = if k == 0 { 0.0 } else { 0.5 * (pts[k - 1] + pts[k]) };
            let hi = if k == 7 { 1.0 } else { 0.5 * (pts[k] + pts[k + 1]) };
            (0.5 * (lo + hi) - pts[k]).abs()
        })
        .fold(0.0, f64::max);
    assert!(exact >= 0.05 - 1e-12);
    let bad = CodebookND::new(pts, 1, 2.0, Norm::Euclidean, u.id()).unwrap();
    let gap = stationarity_gap(&bad, &u, 400_000, 1).unwrap();
    assert!((gap.gap - exact).abs() < 4.0 * gap.max_cell_std_error, "{gap:?}");

    let cube = Density::uniform_box(2, 0.0, 1.0).unwrap();
    let cb = train_nd(&cube, 16, 2.0, Method::LloydMc, &cfg(6, 400_000)).unwrap();
    let gap = stationarity_gap(&cb, &cube, 400_000, 11).unwrap();
    assert!(gap.gap < 3.0 * gap.cell_std_error.max(1e-3) + 0.01, "{gap:?}");
}

#[test]
fn lloyd_epochs_do_not_increase_distortion() {
    let g = Density::normal_nd(2, 1.0, 0.0).unwrap();
    let cb = train_nd(&g, 32, 2.0, Method::LloydMc, &cfg(8, 64_000)).unwrap();
    let h = &cb.meta.history;
    assert!(h.len() > 2);
    for w in h.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn scaling_equivariance() {
    let g1 = Density::normal_nd(2, 1.0, 0.0).unwrap();
    let g2 = Density::normal_nd(2, 2.0, 0.0).unwrap();
    let cb = train_nd(&g1, 8, 2.0, Method::LloydMc, &cfg(3, 80_000)).unwrap();
    let scaled: Vec<f64> = cb.points().iter().map(|v| 2.0 * v).collect();
    let cb2 = CodebookND::new(scaled, 2, 2.0, Norm::Euclidean, g2.id()).unwrap();
    for s in [1.0, 2.0, 3.0] {
        let a = mc_distortion(&cb, &g1, s, 200_000, 5).unwrap();
        let b = mc_distortion(&cb2, &g2, s, 200_000, 5).unwrap();
        let want = 2f64.powf(s) * a.value;
        assert!((b.value - want).abs() < 1e-9 * want, "s={s}");
    }
}

#[test]
fn json_round_trip() {
    let g = Density::normal_nd(2, 1.0, 0.0).unwrap();
    let cb = train_nd(&g, 5, 2.0, Method::LloydMc, &cfg(1, 10_000)).unwrap();
    let text = cb.to_json().unwrap();
    let back = CodebookND::from_json(&text).unwrap();
    assert_eq!(cb, back);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["dim"], 2);
    assert_eq!(v["norm"], "euclidean");
    assert!(CodebookND::new(vec![0.0, 0.0, 0.0, 0.0], 2, 2.0, Norm::Euclidean, "x").is_err());
}

#[test]
fn weights_are_cell_frequencies() {
    let cube = Density::uniform_box(3, 0.0, 1.0).unwrap();
    let cb = train_nd(&cube, 8, 2.0, Method::LloydMc, &cfg(2, 80_000)).unwrap();
    assert!((cb.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kd_tree_is_exact(seed in 0u64..1000, n in 1usize..80, d in 1usize..4, sup in proptest::bool::ANY) {
        let mut r = crate::rng::seeded(seed);
        // coarse lattice coordinates create many exact ties
        let pts: Vec<f64> = (0..n * d).map(|_| (r.random_range(0..6) as f64) * 0.25).collect();
        let mut uniq: Vec<Vec<f64>> = pts.chunks(d).map(<[f64]>::to_vec).collect();
        uniq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        uniq.dedup();
        let pts = uniq.concat();
        let norm = if sup { Norm::Sup } else { Norm::Euclidean };
        let cb = CodebookND::new(pts.clone(), d, 2.0, norm, "t").unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..d).map(|_| (r.random_range(0..12) as f64) * 0.125).collect();
            prop_assert_eq!(cb.nearest(&x).unwrap().0, brute_nearest(&pts, d, &x, norm).0);
        }
    }
}
