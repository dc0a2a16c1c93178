use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::integrate::integrate;

fn one_d_catalog() -> Vec<Density> {
    vec![
        Density::uniform01(),
        Density::uniform(-2.0, 3.0).unwrap(),
        Density::linear(0.0, 1.0, 2.0 / 3.0, 2.0 / 3.0).unwrap(),
        Density::std_normal(),
        Density::normal(1.5, 0.3).unwrap(),
        Density::gamma(1.0, 1.0).unwrap(),
        Density::gamma(2.0, 0.5).unwrap(),
        Density::gamma(0.7, 3.0).unwrap(),
        Density::double_gamma(1.0, 1.0).unwrap(),
        Density::double_gamma(2.0, 2.5).unwrap(),
        Density::double_gamma(1.0, 0.6).unwrap(),
        Density::weibull(2.0).unwrap(),
        Density::weibull(0.8).unwrap(),
        Density::lognormal(0.0, 1.0).unwrap(),
        Density::logistic(),
        Density::pareto(3.0).unwrap(),
        Density::pareto(1.0).unwrap(),
        Density::poisson_comb(2.0).unwrap(),
        Density::stable(0.5).unwrap(),
        Density::stable(1.0).unwrap(),
        Density::stable(1.5).unwrap(),
        Density::hyper_exponential(1, 1.0, 2.0, 0.0).unwrap(),
        Density::hyper_exponential(1, 0.5, 1.5, 1.0).unwrap(),
    ]
}

#[test]
fn every_density_has_unit_mass() {
    for d in one_d_catalog() {
        let m = d.total_mass().unwrap();
        assert!((m - 1.0).abs() < 1e-8, "{d}: mass {m}");
    }
    for d in [
        Density::normal_nd(2, 1.0, 0.0).unwrap(),
        Density::normal_nd(3, 0.5, 0.3).unwrap(),
        Density::uniform_box(3, -1.0, 2.0).unwrap(),
        Density::hyper_exponential(2, 1.0, 2.0, 1.0).unwrap(),
        Density::hyper_exponential(3, 0.5, 1.0, -1.0).unwrap(),
    ] {
        let m = d.total_mass().unwrap();
        assert!((m - 1.0).abs() < 1e-12, "{d}: mass {m}");
    }
}

#[test]
fn nd_radial_mass_by_quadrature() {
    // independent check of the hyper-exponential normalisation
    let d = Density::hyper_exponential(2, 1.0, 2.0, 1.0).unwrap();
    let m = d.radial_integral(|u| d.radial_ln_h(u).exp()).unwrap().value();
    assert!((m - 1.0).abs() < 1e-9, "{m}");
    let g = Density::normal_nd(3, 0.5, 0.3).unwrap();
    let m = g.radial_integral(|u| g.radial_ln_h(u).exp()).unwrap().value();
    assert!((m - 1.0).abs() < 1e-9, "{m}");
}

#[test]
fn cdf_is_monotone_and_differentiates_to_pdf() {
    for d in one_d_catalog() {
        let lo = d.quantile(1e-4).unwrap();
        let hi = d.quantile(1.0 - 1e-4).unwrap();
        let mut prev = d.cdf(lo).unwrap();
        for i in 1..=200 {
            let x = lo + (hi - lo) * i as f64 / 200.0;
            let c = d.cdf(x).unwrap();
            assert!(c >= prev - 1e-15, "{d}: cdf decreases at {x}");
            prev = c;
            let h = 1e-5 * (1.0 + x.abs());
            let near_break = d.family.breakpoints().iter().any(|b| (b - x).abs() < 2.0 * h) || x.abs() < 2.0 * h;
            if near_break {
                continue;
            }
            let fd = (d.cdf(x + h).unwrap() - d.cdf(x - h).unwrap()) / (2.0 * h);
            let f = d.pdf(&[x]).unwrap();
            assert!((fd - f).abs() < 1e-5 * (1.0 + f), "{d}: cdf' {fd} vs pdf {f} at {x}");
        }
        assert!(d.cdf(-1e300).unwrap() < 1e-12);
        assert!((1.0 - d.cdf(1e300).unwrap()) < 1e-12 || d.sf(1e300).unwrap() < 1e-12);
    }
}

#[test]
fn sf_complements_cdf() {
    for d in one_d_catalog() {
        for &p in &[0.01, 0.3, 0.5, 0.8, 0.999] {
            let x = d.quantile(p).unwrap();
            let s = d.sf(x).unwrap();
            let c = d.cdf(x).unwrap();
            assert!((s + c - 1.0).abs() < 1e-10, "{d} at {x}: {c} + {s}");
        }
    }
}

#[test]
fn pdf_examples() {
    assert_eq!(Density::uniform01().pdf(&[0.3]).unwrap(), 1.0);
    assert!((Density::std_normal().pdf(&[0.0]).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
    assert!((Density::pareto(3.0).unwrap().pdf(&[2.0]).unwrap() - 0.1875).abs() < 1e-15);
    assert!(matches!(
        Density::std_normal().pdf(&[0.0, 1.0]),
        Err(Error::DimensionMismatch { expected: 1, got: 2 })
    ));
    assert!(Density::normal_nd(2, 1.0, 0.0).unwrap().cdf(0.0).is_err());
}

#[test]
fn moment_examples() {
    assert!((Density::uniform01().moment(2.0).unwrap().value - 1.0 / 3.0).abs() < 1e-12);
    assert!((Density::std_normal().moment(2.0).unwrap().value - 1.0).abs() < 1e-10);
    assert_eq!(Density::pareto(3.0).unwrap().moment(4.0).unwrap().value, f64::INFINITY);
    assert_eq!(Density::stable(1.5).unwrap().moment(1.5).unwrap().value, f64::INFINITY);
    let m = Density::stable(1.5).unwrap().moment(1.0).unwrap().value;
    // E|X| = 2Γ(1 − 1/α)/π for the symmetric α-stable law
    let want = 2.0 * crate::special::gamma(1.0 - 1.0 / 1.5) / PI;
    assert!((m - want).abs() < 1e-7, "{m} vs {want}");
}

#[test]
fn moment_norms_are_nondecreasing() {
    for d in one_d_catalog() {
        let mut prev = 0.0;
        for &p in &[1.0, 2.0, 4.0] {
            let m = d.moment(p).unwrap().value;
            if !m.is_finite() {
                break;
            }
            let norm = m.powf(1.0 / p);
            assert!(norm >= prev * (1.0 - 1e-10), "{d}: p={p}");
            prev = norm;
        }
    }
}

#[test]
fn nd_moment_carries_standard_error() {
    let m = Density::normal_nd(2, 1.0, 0.0).unwrap().moment(2.0).unwrap();
    let se = m.std_error.unwrap();
    assert!((m.value - 2.0).abs() < 4.0 * se, "{} ± {se}", m.value);
}

#[test]
fn power_integral_examples() {
    assert!((Density::uniform01().power_integral(1.0 / 3.0).unwrap() - 1.0).abs() < 1e-12);
    let g = Density::std_normal().power_integral(1.0 / 3.0).unwrap();
    let closed = 3f64.sqrt() * (2.0 * PI).powf(1.0 / 3.0);
    assert!((g - closed).abs() < 1e-9 * closed, "{g} vs {closed}");
    assert_eq!(Density::pareto(1.0).unwrap().power_integral(0.4).unwrap(), f64::INFINITY);
    assert!(Density::std_normal().power_integral(0.0).is_err());
    assert!(Density::std_normal().power_integral(1.5).is_err());
}

#[test]
fn power_integral_matches_closed_forms() {
    // ∫φ^θ = θ^{-1/2}(2π)^{(1−θ)/2}
    for &t in &[0.2, 0.5, 0.8, 1.0] {
        let g = Density::std_normal().power_integral(t).unwrap();
        let closed = t.powf(-0.5) * (2.0 * PI).powf(0.5 * (1.0 - t));
        assert!((g - closed).abs() < 1e-9 * closed, "θ={t}");
    }
    // pareto: ∫ b^θ x^{−θ(b+1)} = b^θ/(θ(b+1) − 1)
    let b = 3.0;
    let t = 0.5;
    let v = Density::pareto(b).unwrap().power_integral(t).unwrap();
    let closed = b.powf(t) / (t * (b + 1.0) - 1.0);
    assert!((v - closed).abs() < 1e-8 * closed);
    // quadrature agrees with the closed forms in d = 1 for the hyper-exponential law
    let h = Density::hyper_exponential(1, 1.0, 2.0, 1.0).unwrap();
    let q = h.power_integral(0.4).unwrap();
    let c = h.family.power_integral_nd(0.4).unwrap();
    assert!((q - c).abs() < 1e-8 * c, "{q} vs {c}");
}

#[test]
fn cdf_examples() {
    assert_eq!(Density::uniform01().cdf(0.25).unwrap(), 0.25);
    assert_eq!(Density::std_normal().cdf(0.0).unwrap(), 0.5);
    let g = Density::gamma(1.0, 1.0).unwrap();
    let quad = integrate(|x| g.pdf1(x), 0.0, 1.0, &QuadConfig::default()).value;
    assert!((g.cdf(1.0).unwrap() - quad).abs() < 1e-12);
    assert!((g.cdf(1.0).unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-14);
}

#[test]
fn sampling_is_deterministic() {
    let u = Density::uniform01();
    assert_eq!(u.sample(7, 3).unwrap(), u.sample(7, 3).unwrap());
    assert_ne!(u.sample(7, 3).unwrap(), u.sample(8, 3).unwrap());
    assert!(u.sample(7, 0).is_err());
}

#[test]
fn sample_mean_and_cell_mass() {
    let xs = Density::std_normal().sample(1, 100_000).unwrap();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!(mean.abs() < 0.02, "{mean}");

    let xs = Density::poisson_comb(2.0).unwrap().sample(3, 100_000).unwrap();
    let p = xs.iter().filter(|&&x| x < 1.0).count() as f64 / xs.len() as f64;
    assert!((p - (-2f64).exp()).abs() < 0.01, "{p}");
}

#[test]
fn samples_follow_cdf() {
    // Kolmogorov distance of 20 000 samples stays within a loose DKW band
    for d in one_d_catalog() {
        let mut xs = d.sample(11, 20_000).unwrap();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let c = d.cdf(*x).unwrap();
            ks = ks.max((c - i as f64 / n).abs()).max((c - (i + 1) as f64 / n).abs());
        }
        assert!(ks < 0.015, "{d}: KS {ks}");
    }
}

#[test]
fn nd_samples_have_expected_covariance() {
    let d = Density::normal_nd(2, 2.0, 0.5).unwrap();
    let xs = d.sample(5, 50_000).unwrap();
    let n = (xs.len() / 2) as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for p in xs.chunks_exact(2) {
        sxx += p[0] * p[0];
        sxy += p[0] * p[1];
    }
    assert!((sxx / n - 4.0).abs() < 0.1);
    assert!((sxy / n - 2.0).abs() < 0.1);
}

#[test]
fn radial_profiles_match_pdf() {
    let cases = vec![
        Density::std_normal(),
        Density::normal(0.0, 2.0).unwrap(),
        Density::logistic(),
        Density::stable(1.5).unwrap(),
        Density::double_gamma(1.0, 2.0).unwrap(),
        Density::hyper_exponential(1, 1.0, 2.0, 1.0).unwrap(),
        Density::normal_nd(2, 1.0, 0.4).unwrap(),
        Density::hyper_exponential(3, 1.0, 1.5, 0.5).unwrap(),
    ];
    let mut rng = crate::rng::seeded(99);
    for d in cases {
        let prof = d.tail().radial_profile.expect("radial law");
        for _ in 0..50 {
            let x: Vec<f64> = (0..d.dim()).map(|_| 4.0 * (rng.random::<f64>() - 0.5) * (1.0 + prof.radius)).collect();
            let u = d.profile_norm(&x).unwrap();
            if u <= prof.radius {
                continue;
            }
            let f = d.pdf(&x).unwrap();
            let h = d.radial_profile_value(u).unwrap();
            assert!((f - h).abs() < 1e-10 * (1.0 + f), "{d}");
            // same norm, different direction
            let y: Vec<f64> = x.iter().map(|v| -v).collect();
            assert!((d.pdf(&y).unwrap() - f).abs() < 1e-12 * (1.0 + f));
        }
        // nonincreasing beyond the radius
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let u = prof.radius + 0.1 * i as f64 + 1e-9;
            let h = d.radial_profile_value(u).unwrap();
            assert!(h <= prev * (1.0 + 1e-12), "{d}: profile increases at {u}");
            prev = h;
        }
    }
}

#[test]
fn catalog_contains_every_family() {
    for name in ["normal", "hyperexp", "gamma", "doublegamma", "weibull", "lognormal", "logistic", "pareto", "poissoncomb"] {
        assert!(CATALOG.iter().any(|(n, _)| *n == name), "{name}");
    }
}

#[test]
fn poisson_comb_growth_control_holds() {
    let d = Density::poisson_comb(2.0).unwrap();
    let gc = d.tail().growth_control.unwrap();
    assert!(gc.c > 0.0 && gc.eta > 0.0 && gc.eta < 0.5);
    let mut x = gc.m;
    while x < 60.0 {
        for j in 0..=40 {
            let y = x * (1.0 - 2.0 * gc.eta) + 4.0 * gc.eta * x * j as f64 / 40.0;
            let lhs = d.ln_pdf1(y);
            let rhs = gc.c.ln() + (1.0 + gc.epsilon) * d.ln_pdf1(x);
            assert!(lhs >= rhs - 1e-9, "x={x} y={y}");
        }
        x += 0.37;
    }
}

proptest! {
    #[test]
    fn quantile_inverts_cdf(p in 1e-6f64..(1.0 - 1e-6), which in 0usize..23) {
        let d = &one_d_catalog()[which];
        let x = d.quantile(p).unwrap();
        let back = if p > 0.5 { 1.0 - d.sf(x).unwrap() } else { d.cdf(x).unwrap() };
        prop_assert!((back - p).abs() < 1e-9, "{}: p={} x={} back={}", d, p, x, back);
    }

    #[test]
    fn pdf_is_nonnegative(x in -50.0f64..50.0, which in 0usize..23) {
        let d = &one_d_catalog()[which];
        let f = d.pdf(&[x]).unwrap();
        prop_assert!(f >= 0.0 && !f.is_nan());
    }
}
