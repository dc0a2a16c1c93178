//! Symmetric ρ-stable laws with characteristic function exp(−|t|^ρ).
//!
//! Density and distribution function come from Zolotarev's integral
//! representation, which turns the oscillatory Fourier inversion into a
//! smooth integral over (0, π/2). Far tails switch to the series in
//! powers of |x|^{-ρ}.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::integrate::{integrate, QuadConfig};
use crate::special::{gamma, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stable {
    pub rho: f64,
}

fn quad_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_subdivisions: 2_000,
    }
}

/// Threshold above which the tail series is used.
fn series_threshold(rho: f64) -> f64 {
    if rho < 1.0 {
        60.0
    } else {
        40.0
    }
}

impl Stable {
    pub fn new(rho: f64) -> Self {
        Stable { rho }
    }

    /// ln g(θ) with g(θ) = x^{α/(α−1)} V(θ).
    fn ln_g(&self, x: f64, theta: f64) -> f64 {
        let a = self.rho;
        let e = a / (a - 1.0);
        e * (x.ln() + theta.cos().ln() - (a * theta).sin().ln()) + ((a - 1.0) * theta).cos().ln() - theta.cos().ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let a = self.rho;
        if (a - 1.0).abs() < 1e-12 {
            return 1.0 / (PI * (1.0 + x * x));
        }
        let x = x.abs();
        if x == 0.0 {
            return gamma(1.0 + 1.0 / a) / PI;
        }
        if x >= series_threshold(a) {
            return self.tail_pdf_series(x);
        }
        if a > 1.0 && x < 1.0 {
            return self.origin_pdf_series(x);
        }
        if a < 1.0 && x < 0.05 {
            return self.fourier_pdf(x);
        }
        let integrand = |t: f64| {
            let lg = self.ln_g(x, t);
            if lg > 700.0 {
                0.0
            } else {
                (lg - lg.exp()).exp()
            }
        };
        let i = integrate(integrand, 0.0, FRAC_PI_2, &quad_cfg()).value;
        a / (PI * (a - 1.0).abs() * x) * i
    }

    /// P(X > x) for x ≥ 0.
    fn sf_pos(&self, x: f64) -> f64 {
        let a = self.rho;
        if x == 0.0 {
            return 0.5;
        }
        if x >= series_threshold(a) {
            return self.tail_sf_series(x);
        }
        let cfg = quad_cfg();
        if a > 1.0 {
            let i = integrate(|t| (-self.ln_g(x, t).exp()).exp(), 0.0, FRAC_PI_2, &cfg).value;
            i / PI
        } else {
            let i = integrate(|t| -(-self.ln_g(x, t).exp()).exp_m1(), 0.0, FRAC_PI_2, &cfg).value;
            i / PI
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if (self.rho - 1.0).abs() < 1e-12 {
            return 0.5 + x.atan() / PI;
        }
        if x >= 0.0 {
            1.0 - self.sf_pos(x)
        } else {
            self.sf_pos(-x)
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        if (self.rho - 1.0).abs() < 1e-12 {
            return 0.5 - x.atan() / PI;
        }
        if x >= 0.0 {
            self.sf_pos(x)
        } else {
            1.0 - self.sf_pos(-x)
        }
    }

    /// Power series about the origin, convergent for ρ > 1.
    fn origin_pdf_series(&self, x: f64) -> f64 {
        let a = self.rho;
        let mut sum = 0.0;
        for k in 0..200 {
            let kf = k as f64;
            let mag = (ln_gamma((2.0 * kf + 1.0) / a) - ln_gamma(2.0 * kf + 1.0)).exp() * x.powi(2 * k);
            sum += if k % 2 == 0 { mag } else { -mag };
            if mag < 1e-18 * sum.abs() {
                break;
            }
        }
        sum / (PI * a)
    }

    /// (1/π)∫_0^∞ cos(tx) exp(−t^ρ) dt, summed over half periods.
    fn fourier_pdf(&self, x: f64) -> f64 {
        let a = self.rho;
        let cfg = quad_cfg();
        let t_max = 45f64.powf(1.0 / a);
        let step = if x > 0.0 { (PI / x).min(t_max) } else { t_max };
        let mut t0 = 0.0;
        let mut sum = 0.0;
        while t0 < t_max {
            let t1 = (t0 + step).min(t_max);
            sum += integrate(|t| (t * x).cos() * (-t.powf(a)).exp(), t0, t1, &cfg).value;
            t0 = t1;
        }
        sum / PI
    }

    fn tail_pdf_series(&self, x: f64) -> f64 {
        let a = self.rho;
        let mut sum = 0.0;
        for k in 1..=30 {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let ln_mag = ln_gamma(kf * a + 1.0) - ln_gamma(kf + 1.0) - (kf * a + 1.0) * x.ln();
            let term = sign * ln_mag.exp() * (kf * PI * a / 2.0).sin();
            sum += term;
            if ln_mag.exp() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum / PI
    }

    fn tail_sf_series(&self, x: f64) -> f64 {
        let a = self.rho;
        let mut sum = 0.0;
        for k in 1..=30 {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let ln_mag = ln_gamma(kf * a) - ln_gamma(kf + 1.0) - kf * a * x.ln();
            let term = sign * ln_mag.exp() * (kf * PI * a / 2.0).sin();
            sum += term;
            if ln_mag.exp() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum / PI
    }

    /// Chambers–Mallows–Stuck generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.rho;
        let u = PI * (rng.random::<f64>() - 0.5);
        if (a - 1.0).abs() < 1e-12 {
            return u.tan();
        }
        let w: f64 = -(1.0 - rng.random::<f64>()).ln();
        (a * u).sin() / u.cos().powf(1.0 / a) * (((1.0 - a) * u).cos() / w).powf((1.0 - a) / a)
    }
}
