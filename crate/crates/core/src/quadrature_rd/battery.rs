use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::gamma::gamma;

use super::HessianGrowth;
use crate::distributions::Density;
use crate::special::normal_cdf;

/// A scalar integrand with a known Hessian bound and closed-form means
/// under N(0,1) and U([0,1]).
#[derive(Debug, Clone, Copy)]
pub struct TestFunction {
    pub name: &'static str,
    pub f: fn(f64) -> f64,
    /// |f''|
    pub hessian: fn(f64) -> f64,
    pub growth: HessianGrowth,
    /// sup|f''| when finite
    pub lip_grad: Option<f64>,
    pub mean_normal: f64,
    pub mean_uniform: f64,
}

impl TestFunction {
    /// E f(X) when `density` is N(0,1) or U([0,1]).
    pub fn truth(&self, density: &Density) -> Option<f64> {
        if density.id() == Density::std_normal().id() {
            Some(self.mean_normal)
        } else if density.id() == Density::uniform01().id() {
            Some(self.mean_uniform)
        } else {
            None
        }
    }
}

fn abs_moment_normal(p: f64) -> f64 {
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / PI.sqrt()
}

fn growth(a: f64, exponent: f64) -> HessianGrowth {
    HessianGrowth { a, exponent }
}

pub fn battery() -> Vec<TestFunction> {
    let sqrt_2pi = (2.0 * PI).sqrt();
    vec![
        TestFunction {
            name: "identity",
            f: |x| x,
            hessian: |_| 0.0,
            growth: growth(0.0, 0.0),
            lip_grad: Some(0.0),
            mean_normal: 0.0,
            mean_uniform: 0.5,
        },
        TestFunction {
            name: "square",
            f: |x| x * x,
            hessian: |_| 2.0,
            growth: growth(1.0, 0.0),
            lip_grad: Some(2.0),
            mean_normal: 1.0,
            mean_uniform: 1.0 / 3.0,
        },
        TestFunction {
            name: "cos",
            f: f64::cos,
            hessian: |x| x.cos().abs(),
            growth: growth(0.5, 0.0),
            lip_grad: Some(1.0),
            mean_normal: (-0.5f64).exp(),
            mean_uniform: 1f64.sin(),
        },
        TestFunction {
            name: "cos2",
            f: |x| (2.0 * x).cos(),
            hessian: |x| 4.0 * (2.0 * x).cos().abs(),
            growth: growth(2.0, 0.0),
            lip_grad: Some(4.0),
            mean_normal: (-2f64).exp(),
            mean_uniform: 2f64.sin() / 2.0,
        },
        TestFunction {
            name: "sin-plus-x",
            f: |x| x.sin() + x,
            hessian: |x| x.sin().abs(),
            growth: growth(0.5, 0.0),
            lip_grad: Some(1.0),
            mean_normal: 0.0,
            mean_uniform: 1.5 - 1f64.cos(),
        },
        TestFunction {
            name: "abs-2.25",
            f: |x| x.abs().powf(2.25),
            hessian: |x| 2.8125 * x.abs().powf(0.25),
            growth: growth(2.8125, 0.25),
            lip_grad: None,
            mean_normal: abs_moment_normal(2.25),
            mean_uniform: 1.0 / 3.25,
        },
        TestFunction {
            name: "abs-2.5",
            f: |x| x.abs().powf(2.5),
            hessian: |x| 3.75 * x.abs().sqrt(),
            growth: growth(3.75, 0.5),
            lip_grad: None,
            mean_normal: abs_moment_normal(2.5),
            mean_uniform: 1.0 / 3.5,
        },
        TestFunction {
            name: "abs-2.75",
            f: |x| x.abs().powf(2.75),
            hessian: |x| 4.8125 * x.abs().powf(0.75),
            growth: growth(4.8125, 0.75),
            lip_grad: None,
            mean_normal: abs_moment_normal(2.75),
            mean_uniform: 1.0 / 3.75,
        },
        TestFunction {
            name: "gauss-bump",
            f: |x| (-0.5 * x * x).exp(),
            hessian: |x| ((x * x - 1.0) * (-0.5 * x * x).exp()).abs(),
            growth: growth(0.5, 0.0),
            lip_grad: Some(1.0),
            mean_normal: FRAC_1_SQRT_2,
            mean_uniform: sqrt_2pi * (normal_cdf(1.0) - 0.5),
        },
        TestFunction {
            name: "cauchy-kernel",
            f: |x| 1.0 / (1.0 + x * x),
            hessian: |x| ((6.0 * x * x - 2.0) / (1.0 + x * x).powi(3)).abs(),
            growth: growth(1.0, 0.0),
            lip_grad: Some(2.0),
            mean_normal: sqrt_2pi * 0.5f64.exp() * (1.0 - normal_cdf(1.0)),
            mean_uniform: PI / 4.0,
        },
    ]
}
