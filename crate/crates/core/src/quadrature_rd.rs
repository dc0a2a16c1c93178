//! Cubature formulas built on Voronoi quantizers, with second-order error
//! bounds.

mod battery;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use battery::{battery, TestFunction};

use crate::distributions::Density;
use crate::error::{Error, Result};
use crate::integrate::QuadConfig;
use crate::mismatch::{criterion_check, CriterionReport};
use crate::norm::Norm;
use crate::quantizer1d::{distortion1d, stationarity_residual, Codebook1D};
use crate::quantizer_nd::{stationarity_gap, CodebookND};
use crate::rng;

/// Largest |residual| for which a scalar r = 2 codebook counts as stationary.
pub const STATIONARY_RESIDUAL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    First,
    SecondStationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub density: String,
    pub dim: usize,
    pub r: f64,
    pub norm: Norm,
    /// Row-major atoms.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: Order,
}

impl QuadratureRule {
    pub fn from_codebook1d(cb: &Codebook1D, density: &Density) -> Result<Self> {
        if density.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: density.dim() });
        }
        let cb = Codebook1D::new(cb.points.clone(), density, cb.r)?;
        let stationary = cb.r == 2.0
            && stationarity_residual(&cb, density, 2.0)?.iter().all(|v| v.abs() < STATIONARY_RESIDUAL);
        Ok(QuadratureRule {
            density: density.id().to_string(),
            dim: 1,
            r: cb.r,
            norm: Norm::Euclidean,
            points: cb.points,
            weights: cb.weights,
            order: if stationary { Order::SecondStationary } else { Order::First },
        })
    }

    /// Weights are taken from the codebook; stationarity is tested on `m`
    /// fresh samples.
    pub fn from_codebook_nd(cb: &CodebookND, density: &Density, m: usize, seed: u64) -> Result<Self> {
        if density.dim() != cb.dim {
            return Err(Error::DimensionMismatch { expected: cb.dim, got: density.dim() });
        }
        let stationary = cb.r == 2.0 && {
            let g = stationarity_gap(cb, density, m, seed)?;
            g.gap < 4.0 * g.max_cell_std_error + 1e-3
        };
        Ok(QuadratureRule {
            density: density.id().to_string(),
            dim: cb.dim,
            r: cb.r,
            norm: cb.norm,
            points: cb.points().to_vec(),
            weights: cb.weights.clone(),
            order: if stationary { Order::SecondStationary } else { Order::First },
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn codebook_nd(&self) -> Result<CodebookND> {
        CodebookND::new(self.points.clone(), self.dim, self.r, self.norm, &self.density)
    }
}

/// Σ_i w_i f(x_i)
pub fn expect<F: Fn(&[f64]) -> f64>(rule: &QuadratureRule, f: F) -> Result<f64> {
    let mut total = 0.0;
    for (i, w) in rule.weights.iter().enumerate() {
        let v = f(rule.point(i));
        if v.is_nan() {
            return Err(Error::invalid(format!("integrand is NaN at atom {i} ({:?})", rule.point(i))));
        }
        total += w * v;
    }
    Ok(total)
}

/// [Df]_Lip·e_{n,2}²
pub fn order2_bound(lip_grad: f64, e_n2_sq: f64) -> Result<f64> {
    if !(lip_grad >= 0.0 && e_n2_sq >= 0.0) {
        return Err(Error::invalid("order2_bound inputs must be >= 0"));
    }
    Ok(lip_grad * e_n2_sq)
}

/// ‖D²f(x)‖ ≤ a(‖x‖^exponent + 1)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianGrowth {
    pub a: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderBound {
    pub eta: f64,
    pub p: f64,
    pub q: f64,
    /// ‖sup over [X̂, X] of a(‖·‖^exponent + 1)‖_p
    pub hessian_norm: f64,
    /// E‖X − X̂‖^{2q}
    pub distortion_2q: f64,
    pub bound: f64,
    /// ½‖h(X̂)‖_p‖X − X̂‖²_{2q} with the Hessian norm h evaluated at the atoms.
    pub atom_bound: Option<f64>,
    /// Monte-Carlo standard error of `bound` (d ≥ 2).
    pub std_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionReport>,
}

/// Hölder conjugates p = (d+2)/(d−η), q = (d+2)/(2+η).
pub fn holder_split(d: usize, eta: f64) -> Result<(f64, f64)> {
    let df = d as f64;
    if !(eta > 0.0 && eta <= df) {
        return Err(Error::invalid(format!("η must lie in (0, {d}]")));
    }
    Ok(((df + 2.0) / (df - eta), (df + 2.0) / (2.0 + eta)))
}

/// ½‖D²f‖_p‖X − X̂‖²_{2q} with η = d − growth.exponent.
///
/// The Hessian factor is the L^p norm of the growth envelope maximised over
/// the segment [X̂, X], which makes the bound hold for every f with the
/// given growth. `hessian` (if given) is used for the atom-only variant.
/// In d ≥ 2 both factors are Monte-Carlo estimates over `samples` draws.
pub fn holder_split_bound(
    rule: &QuadratureRule,
    density: &Density,
    growth: HessianGrowth,
    hessian: Option<&dyn Fn(&[f64]) -> f64>,
    samples: usize,
    seed: u64,
) -> Result<HolderBound> {
    if rule.order != Order::SecondStationary {
        return Err(Error::invalid("the Hölder split bound needs a stationary quadratic rule"));
    }
    if density.dim() != rule.dim {
        return Err(Error::DimensionMismatch { expected: rule.dim, got: density.dim() });
    }
    if !(growth.a >= 0.0 && growth.exponent >= 0.0) {
        return Err(Error::invalid("Hessian growth constants must be >= 0"));
    }
    let d = rule.dim;
    let eta = d as f64 - growth.exponent;
    let (p, q) = holder_split(d, eta)?;
    let k = growth.exponent;
    let envelope = |u: f64| growth.a * (u.powf(k) + 1.0);

    let (hessian_norm, distortion_2q, std_error) = if d == 1 {
        let cb = Codebook1D::new(rule.points.clone(), density, 2.0)?;
        let dist = distortion1d(&cb, density, 2.0 * q)?;
        let h = if p.is_infinite() {
            2.0 * growth.a
        } else {
            let b = cb.boundaries();
            let cfg = QuadConfig::default().with_abs_tol(1e-13).with_rel_tol(1e-10);
            let total: f64 = (0..cb.len())
                .map(|i| {
                    let a = cb.points[i].abs();
                    let lo = if i == 0 { f64::NEG_INFINITY } else { b[i - 1] };
                    let hi = b.get(i).copied().unwrap_or(f64::INFINITY);
                    density.expect_over(|x| envelope(a.max(x.abs())).powf(p), lo, hi, &cfg).value
                })
                .sum();
            total.powf(1.0 / p)
        };
        (h, dist, None)
    } else {
        let cb = rule.codebook_nd()?;
        let norm = rule.norm;
        let parts: Vec<(f64, f64, f64, f64, usize)> = rng::batches(samples.max(2))
            .into_par_iter()
            .map(|(b, m)| {
                let xs = density.sample_with(&mut rng::stream(seed, b), m);
                let mut acc = (0.0, 0.0, 0.0, 0.0, 0);
                for x in xs.chunks_exact(d) {
                    let (i, dist) = cb.nearest(x).expect("dimension checked");
                    let u = norm.of(cb.point(i)).max(norm.of(x));
                    let hp = if p.is_infinite() { 0.0 } else { envelope(u).powf(p) };
                    let e = dist.powf(2.0 * q);
                    acc.0 += hp;
                    acc.1 += hp * hp;
                    acc.2 += e;
                    acc.3 += e * e;
                    acc.4 += 1;
                }
                acc
            })
            .collect();
        let (mut s1, mut s2, mut e1, mut e2, mut m) = (0.0, 0.0, 0.0, 0.0, 0usize);
        for t in parts {
            s1 += t.0;
            s2 += t.1;
            e1 += t.2;
            e2 += t.3;
            m += t.4;
        }
        let mf = m as f64;
        let (hm, em) = (s1 / mf, e1 / mf);
        let hse = ((s2 / mf - hm * hm).max(0.0) / mf).sqrt();
        let ese = ((e2 / mf - em * em).max(0.0) / mf).sqrt();
        let h = if p.is_infinite() { 2.0 * growth.a } else { hm.powf(1.0 / p) };
        // delta method on ½·h·e^{1/q}
        let rel_h = if p.is_infinite() || hm == 0.0 { 0.0 } else { hse / (p * hm) };
        let rel_e = if em == 0.0 { 0.0 } else { ese / (q * em) };
        let se = 0.5 * h * em.powf(1.0 / q) * (rel_h * rel_h + rel_e * rel_e).sqrt();
        (h, em, Some(se))
    };

    let criterion = if distortion_2q.is_finite() { None } else { Some(criterion_check(density, 2.0, 2.0 * q)?) };
    let bound = 0.5 * hessian_norm * distortion_2q.powf(1.0 / q);
    let atom_bound = hessian.map(|h| {
        let hn = if p.is_infinite() {
            (0..rule.len()).filter(|&i| rule.weights[i] > 0.0).map(|i| h(rule.point(i))).fold(0.0, f64::max)
        } else {
            (0..rule.len()).map(|i| rule.weights[i] * h(rule.point(i)).powf(p)).sum::<f64>().powf(1.0 / p)
        };
        0.5 * hn * distortion_2q.powf(1.0 / q)
    });
    Ok(HolderBound { eta, p, q, hessian_norm, distortion_2q, bound, atom_bound, std_error, criterion })
}

#[cfg(test)]
mod tests;
