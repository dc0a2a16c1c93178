use super::*;
use crate::special::normal_cdf;
use std::f64::consts::PI;

fn gaussian_power(theta: f64) -> f64 {
    theta.powf(-0.5) * (2.0 * PI).powf((1.0 - theta) / 2.0)
}

#[test]
fn j_constant_one_dimensional() {
    let j2 = j_constant(2.0, 1).unwrap();
    assert!((j2.value - 1.0 / 12.0).abs() < 1e-16);
    assert_eq!(j2.provenance, Provenance::Exact1d);
    assert!((j_constant(1.0, 1).unwrap().value - 0.25).abs() < 1e-16);
    assert!(j_constant(0.0, 1).is_err());
    assert!(j_constant(2.0, 0).is_err());
}

#[test]
fn j_external_reference() {
    let opts = JOptions { allow_external: true, ..JOptions::default() };
    let j = j_constant_with(2.0, 2, &opts).unwrap();
    assert_eq!(j.provenance, Provenance::ExternalReference);
    assert!((j.value - 5.0 / (18.0 * 3f64.sqrt())).abs() < 1e-15);
}

#[test]
fn j_estimate_two_dimensional() {
    let opts = JOptions { n_list: vec![16, 32, 64], eval_samples: 200_000, ..JOptions::default() };
    let j = j_constant_with(2.0, 2, &opts).unwrap();
    assert!(matches!(j.provenance, Provenance::Estimated { .. }));
    assert!(j.value > 0.14 && j.value < 0.18, "{j:?}");
}

#[test]
fn q_rs_uniform() {
    let u = Density::uniform01();
    assert!((q_rs(&u, 2.0, 3.0).unwrap() - 1.0 / 32.0).abs() < 1e-12);
    assert!((q_rs(&u, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn q_rs_gaussian() {
    let n = Density::std_normal();
    let want = gaussian_power(1.0 / 3.0).powf(2.5) * gaussian_power(1.0 / 6.0) / (2f64.powf(2.5) * 3.5);
    let got = q_rs(&n, 2.0, 2.5).unwrap();
    assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
    assert!((got - 4.859).abs() < 1e-3);
    assert_eq!(q_rs(&n, 2.0, 3.0).unwrap(), f64::INFINITY);
}

#[test]
fn zador_constant_factors() {
    for (d, r) in [(Density::std_normal(), 2.0), (Density::gamma(2.0, 1.0).unwrap(), 1.0), (Density::logistic(), 3.0)] {
        let c = constants(&d, r, r).unwrap();
        let want = c.j_r.value * c.point_integral.powf(1.0 + r);
        assert!((c.qr - want).abs() <= 1e-12 * want);
        assert_eq!(c.qrs, c.qs);
        assert_eq!(c.qr, c.qs);
    }
}

#[test]
fn mismatch_constant_dominates() {
    let n = Density::std_normal();
    for (r, s) in [(2.0, 1.0), (2.0, 2.5), (1.0, 1.5), (3.0, 2.0)] {
        let c = constants(&n, r, s).unwrap();
        assert!(c.qrs > c.qs * (1.0 + 1e-6), "r={r} s={s}: {} vs {}", c.qrs, c.qs);
    }
    let u = Density::uniform01();
    let c = constants(&u, 2.0, 1.0).unwrap();
    assert!((c.qrs - c.qs).abs() < 1e-12);
}

#[test]
fn finiteness_examples() {
    let n = Density::std_normal();
    assert_eq!(finiteness_class(&n, 2.0, 4.0).unwrap(), FinitenessClass::InfiniteSGeDPlusR);
    assert_eq!(finiteness_class(&n, 2.0, 2.9).unwrap(), FinitenessClass::FiniteByMoment);
    let p = Density::pareto(3.0).unwrap();
    assert_eq!(finiteness_class(&p, 1.0, 1.9).unwrap(), FinitenessClass::InfiniteNumeric);
    assert_eq!(finiteness_class(&p, 1.0, 0.5).unwrap(), FinitenessClass::FiniteByMoment);
    let u = Density::uniform01();
    assert_eq!(finiteness_class(&u, 1.0, 5.0).unwrap(), FinitenessClass::FiniteNumeric);
    assert_eq!(finiteness_class(&u, 1.0, 1.5).unwrap(), FinitenessClass::FiniteByMoment);
}

#[test]
fn quadrature_tolerance_stability() {
    let n = Density::std_normal();
    let a = constants(&n, 2.0, 2.5).unwrap();
    let loose = |theta: f64| {
        let cfg = QuadConfig { abs_tol: 1e-8, rel_tol: 1e-8, max_subdivisions: 1000 };
        crate::integrate::integrate(|x| n.pdf1(x).powf(theta), -40.0, 40.0, &cfg).value
    };
    let b = a.j_s.value * loose(1.0 / 3.0).powf(2.5) * loose(1.0 - 2.5 / 3.0);
    assert!(((a.qrs - b) / a.qrs).abs() < 1e-6);
}

#[test]
fn point_density_uniform_and_normal() {
    let u = Density::uniform01();
    let pd = PointDensity::new(&u, 2.0).unwrap();
    assert!((pd.pdf(&[0.3]).unwrap() - 1.0).abs() < 1e-14);
    assert!((pd.cdf(0.3) - 0.3).abs() < 1e-12);
    assert!((pd.quantile(0.7) - 0.7).abs() < 1e-12);

    let n = Density::std_normal();
    let pd = PointDensity::new(&n, 2.0).unwrap();
    let s3 = 3f64.sqrt();
    for x in [-4.0, -1.0, 0.0, 0.5, 2.0, 7.0] {
        let want = crate::special::normal_pdf(x / s3) / s3;
        assert!((pd.pdf(&[x]).unwrap() - want).abs() < 1e-12);
        assert!((pd.cdf(x) - normal_cdf(x / s3)).abs() < 1e-11, "x={x}");
    }
    assert!((pd.cdf(0.0) - 0.5).abs() < 1e-13);
    for p in [1e-9, 0.01, 0.3, 0.5, 0.99] {
        let q = pd.quantile(p);
        assert!((normal_cdf(q / s3) - p).abs() < 1e-11, "p={p} q={q}");
    }
}

#[test]
fn point_density_has_unit_mass() {
    for d in [Density::gamma(0.5, 1.0).unwrap(), Density::pareto(3.0).unwrap(), Density::logistic(), Density::poisson_comb(2.0).unwrap()] {
        let pd = PointDensity::new(&d, 1.0).unwrap();
        assert!((pd.cdf(1e300) - 1.0).abs() < 1e-8, "{d}");
        assert!(pd.cdf(-1e300).abs() < 1e-8, "{d}");
        let q = pd.quantile(0.4);
        assert!((pd.cdf(q) - 0.4).abs() < 1e-10, "{d}");
    }
}

#[test]
fn heavy_tails_rejected() {
    let p = Density::pareto(2.0).unwrap();
    assert!(constants(&p, 2.0, 1.0).is_err());
}

#[test]
fn linear_fit_recovers_line() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y: Vec<f64> = x.iter().map(|v| 0.5 + 2.0 * v).collect();
    let f = linear_fit(&x, &y);
    assert!((f.intercept - 0.5).abs() < 1e-12 && (f.slope - 2.0).abs() < 1e-12);
}
