//! Product functional quantization of Brownian motion on [0, T].

use std::f64::consts::PI;
use std::sync::Mutex;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Density;
use crate::error::{Error, Result};
use crate::quantizer1d::{distortion1d, lloyd1d, Codebook1D, LloydConfig};
use crate::rng;

pub const MAX_ATOMS: usize = 10_000;
/// Largest coordinate size considered by the allocation search.
pub const MAX_COORDINATE_SIZE: usize = 128;
pub const MIN_GRID: usize = 1 << 10;

/// λ_k = T²/(π²(k − ½)²), e_k(t) = √(2/T) sin((k − ½)πt/T), k = 1..m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlBasis {
    pub horizon: f64,
    pub m: usize,
    pub eigenvalues: Vec<f64>,
}

impl KlBasis {
    /// λ_k, k ≥ 1 (not limited to the truncation).
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let w = (k as f64 - 0.5) * PI;
        self.horizon * self.horizon / (w * w)
    }

    pub fn eigenfunction(&self, k: usize, t: f64) -> f64 {
        (2.0 / self.horizon).sqrt() * ((k as f64 - 0.5) * PI * t / self.horizon).sin()
    }

    /// ∫_0^T e_k(t) dt
    pub fn eigenfunction_integral(&self, k: usize) -> f64 {
        (2.0 * self.horizon).sqrt() / ((k as f64 - 0.5) * PI)
    }

    /// Σ_k λ_k = T²/2
    pub fn trace(&self) -> f64 {
        0.5 * self.horizon * self.horizon
    }

    pub fn partial_trace(&self, k: usize) -> f64 {
        (1..=k).map(|j| self.eigenvalue(j)).sum()
    }

    /// Σ_{j > k} λ_j
    pub fn tail(&self, k: usize) -> f64 {
        (self.trace() - self.partial_trace(k)).max(0.0)
    }

    pub fn time_grid(&self, steps: usize) -> Vec<f64> {
        (0..=steps).map(|i| self.horizon * i as f64 / steps as f64).collect()
    }
}

pub fn kl_eigensystem(horizon: f64, m: usize) -> Result<KlBasis> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("T must be a positive real"));
    }
    if m == 0 {
        return Err(Error::invalid("m must be >= 1"));
    }
    let mut b = KlBasis { horizon, m, eigenvalues: Vec::new() };
    b.eigenvalues = (1..=m).map(|k| b.eigenvalue(k)).collect();
    Ok(b)
}

static GAUSS_TABLE: Mutex<Vec<Codebook1D>> = Mutex::new(Vec::new());

/// L²-optimal quantizers of N(0,1) of sizes 1..=k (cached per process).
pub fn gaussian_codebooks(k: usize) -> Result<Vec<Codebook1D>> {
    let mut cache = GAUSS_TABLE.lock().unwrap_or_else(|e| e.into_inner());
    if cache.len() < k {
        let g = Density::std_normal();
        let cfg = LloydConfig::default();
        let more: Vec<Codebook1D> = (cache.len() + 1..=k).into_par_iter().map(|n| lloyd1d(&g, n, 2.0, &cfg)).collect::<Result<_>>()?;
        cache.extend(more);
    }
    Ok(cache[..k].to_vec())
}

/// e²_{k,2}(N(0,1)) for k = 1..=kmax
pub fn gaussian_distortion_table(kmax: usize) -> Result<Vec<f64>> {
    let g = Density::std_normal();
    gaussian_codebooks(kmax)?.iter().map(|cb| distortion1d(cb, &g, 2.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// N_1 ≥ N_2 ≥ … ≥ N_m ≥ 1
    pub sizes: Vec<usize>,
    /// Σ_{k≤m} λ_k e²_{N_k} + Σ_{k>m} λ_k
    pub objective: f64,
}

impl Allocation {
    pub fn atoms(&self) -> usize {
        self.sizes.iter().product()
    }
}

/// Exact squared quadratic distortion of a size vector.
pub fn allocation_objective(basis: &KlBasis, sizes: &[usize], table: &[f64]) -> Result<f64> {
    let mut total = basis.tail(sizes.len());
    for (k, &s) in sizes.iter().enumerate() {
        let e = table.get(s - 1).ok_or_else(|| Error::invalid(format!("distortion table has no entry for size {s}")))?;
        total += basis.eigenvalue(k + 1) * e;
    }
    Ok(total)
}

/// Exhaustive search over non-increasing size vectors with Π N_k ≤ N and
/// N_k ≤ table.len(), minimising the exact distortion. Ties go to fewer
/// coordinates, then to the lexicographically smaller vector.
pub fn optimal_allocation(n: usize, horizon: f64, table: &[f64]) -> Result<Allocation> {
    search_allocation(n, horizon, table.len(), |k| table[k - 1])
}

/// Same search with e²_{N_k} replaced by 1/N_k².
pub fn surrogate_allocation(n: usize, horizon: f64, kmax: usize) -> Result<Allocation> {
    search_allocation(n, horizon, kmax, |k| 1.0 / (k * k) as f64)
}

fn search_allocation<C: Fn(usize) -> f64>(n: usize, horizon: f64, kmax: usize, cost: C) -> Result<Allocation> {
    if n == 0 || kmax == 0 {
        return Err(Error::invalid("N and the table size must be >= 1"));
    }
    let depth = (usize::BITS - n.leading_zeros()) as usize;
    let basis = kl_eigensystem(horizon, depth.max(1))?;
    let mut best = Allocation { sizes: vec![1], objective: basis.trace() };
    let mut cur = Vec::new();
    dfs(&basis, &cost, n, kmax.min(n), 0.0, &mut cur, &mut best);
    Ok(best)
}

fn dfs<C: Fn(usize) -> f64>(basis: &KlBasis, cost: &C, budget: usize, cap: usize, acc: f64, cur: &mut Vec<usize>, best: &mut Allocation) {
    let k = cur.len() + 1;
    for s in (2..=cap.min(budget)).rev() {
        cur.push(s);
        let acc2 = acc + basis.eigenvalue(k) * cost(s);
        let obj = acc2 + basis.tail(k);
        let better = obj < best.objective
            || (obj == best.objective && (cur.len() < best.sizes.len() || (cur.len() == best.sizes.len() && *cur < best.sizes)));
        if better {
            best.sizes = cur.clone();
            best.objective = obj;
        }
        dfs(basis, cost, budget / s, s, acc2, cur, best);
        cur.pop();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductQuantizer {
    pub basis: KlBasis,
    pub allocation: Allocation,
    /// Quantizers of N(0,1), one per coordinate.
    pub codebooks: Vec<Codebook1D>,
}

/// One atom: coefficients √λ_k x_k^{(i_k)} in the K-L basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub index: usize,
    pub weight: f64,
    pub coefficients: Vec<f64>,
}

impl ProductQuantizer {
    pub fn atom_count(&self) -> usize {
        self.allocation.atoms()
    }

    /// ‖W − Ŵ‖₂² (closed form).
    pub fn squared_distortion(&self) -> f64 {
        self.allocation.objective
    }

    /// Atom by mixed-radix index (first coordinate fastest).
    pub fn atom(&self, mut index: usize) -> Atom {
        let i0 = index;
        let mut weight = 1.0;
        let mut coefficients = Vec::with_capacity(self.codebooks.len());
        for (k, cb) in self.codebooks.iter().enumerate() {
            let n = cb.len();
            let j = index % n;
            index /= n;
            weight *= cb.weights[j];
            coefficients.push(self.basis.eigenvalues[k].sqrt() * cb.points[j]);
        }
        Atom { index: i0, weight, coefficients }
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        (0..self.atom_count()).map(|i| self.atom(i))
    }

    /// Σ_k c_k e_k(t) on `times`.
    pub fn path(&self, coefficients: &[f64], times: &[f64]) -> Vec<f64> {
        times
            .iter()
            .map(|&t| coefficients.iter().enumerate().map(|(k, c)| c * self.basis.eigenfunction(k + 1, t)).sum())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Optimal product quantizer with at most N atoms.
pub fn build_product_quantizer(horizon: f64, n: usize, seed: u64) -> Result<ProductQuantizer> {
    if n == 0 {
        return Err(Error::invalid("N must be >= 1"));
    }
    if n > MAX_ATOMS {
        return Err(Error::invalid(format!("N = {n} exceeds the atom bound {MAX_ATOMS}")));
    }
    let kmax = n.min(MAX_COORDINATE_SIZE);
    let table = gaussian_distortion_table(kmax)?;
    let allocation = optimal_allocation(n, horizon, &table)?;
    let basis = kl_eigensystem(horizon, allocation.sizes.len())?;
    let all = gaussian_codebooks(kmax)?;
    let codebooks = allocation
        .sizes
        .iter()
        .map(|&s| {
            let mut cb = all[s - 1].clone();
            cb.meta.seed = Some(seed);
            cb
        })
        .collect();
    Ok(ProductQuantizer { basis, allocation, codebooks })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerMc {
    pub s: f64,
    /// E‖W − Ŵ‖^s_{L²}
    pub value: f64,
    pub std_error: f64,
    pub paths: usize,
    pub grid: usize,
}

impl WienerMc {
    /// ‖W − Ŵ‖_s = (E‖W − Ŵ‖^s)^{1/s}
    pub fn norm(&self) -> f64 {
        self.value.powf(1.0 / self.s)
    }
}

/// Monte-Carlo estimate of E‖W − Ŵ‖^s_{L²} for several s on shared paths.
///
/// W is simulated exactly on a grid of `grid` steps, projected on e_1..e_m
/// by the trapezoid rule and mapped coordinatewise to the nearest
/// codepoint; the L² norm of W − Ŵ is a trapezoid sum.
pub fn wiener_distortion_mc_multi(pq: &ProductQuantizer, s_list: &[f64], paths: usize, grid: usize, seed: u64) -> Result<Vec<WienerMc>> {
    if s_list.iter().any(|&s| !(s > 0.0 && s < 3.0)) {
        return Err(Error::invalid("s must lie in (0, 3)"));
    }
    if grid < MIN_GRID {
        return Err(Error::invalid(format!("grid must be >= {MIN_GRID}")));
    }
    if paths < 2 {
        return Err(Error::invalid("need at least 2 paths"));
    }
    let basis = &pq.basis;
    let m = pq.codebooks.len();
    let times = basis.time_grid(grid);
    let h = basis.horizon / grid as f64;
    let sqrt_h = h.sqrt();
    let efun: Vec<Vec<f64>> = (1..=m).map(|k| times.iter().map(|&t| basis.eigenfunction(k, t)).collect()).collect();
    let tw: Vec<f64> = (0..=grid).map(|i| if i == 0 || i == grid { 0.5 * h } else { h }).collect();
    let ns = s_list.len();
    let parts: Vec<(Vec<f64>, Vec<f64>)> = rng::batches(paths)
        .into_par_iter()
        .map(|(b, count)| {
            let mut r = rng::stream(seed, b);
            let mut w = vec![0.0; grid + 1];
            let mut sum = vec![0.0; ns];
            let mut sq = vec![0.0; ns];
            for _ in 0..count {
                for i in 1..=grid {
                    let z: f64 = StandardNormal.sample(&mut r);
                    w[i] = w[i - 1] + sqrt_h * z;
                }
                let mut coef = vec![0.0; m];
                for k in 0..m {
                    let proj: f64 = (0..=grid).map(|i| tw[i] * w[i] * efun[k][i]).sum();
                    let sl = basis.eigenvalues[k].sqrt();
                    let cb = &pq.codebooks[k];
                    coef[k] = sl * cb.points[cb.nearest(proj / sl)];
                }
                let l2: f64 = (0..=grid)
                    .map(|i| {
                        let hat: f64 = (0..m).map(|k| coef[k] * efun[k][i]).sum();
                        tw[i] * (w[i] - hat).powi(2)
                    })
                    .sum();
                for (j, &s) in s_list.iter().enumerate() {
                    let v = l2.powf(0.5 * s);
                    sum[j] += v;
                    sq[j] += v * v;
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; ns];
    let mut sq = vec![0.0; ns];
    for (a, b) in parts {
        for j in 0..ns {
            sum[j] += a[j];
            sq[j] += b[j];
        }
    }
    let pf = paths as f64;
    Ok(s_list
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let mean = sum[j] / pf;
            let var = (sq[j] / pf - mean * mean).max(0.0) * pf / (pf - 1.0);
            WienerMc { s, value: mean, std_error: (var / pf).sqrt(), paths, grid }
        })
        .collect())
}

pub fn wiener_distortion_mc(pq: &ProductQuantizer, s: f64, paths: usize, grid: usize, seed: u64) -> Result<WienerMc> {
    Ok(wiener_distortion_mc_multi(pq, &[s], paths, grid, seed)?.remove(0))
}

/// Discretisation bias bound T²/(2·grid) of the simulated L² norm.
pub fn grid_bias_bound(horizon: f64, grid: usize) -> f64 {
    horizon * horizon / (2.0 * grid as f64)
}

/// An atom path handed to a functional: K-L coefficients and, when a grid
/// was requested, values on it.
#[derive(Debug, Clone)]
pub struct AtomPath<'a> {
    pub basis: &'a KlBasis,
    pub coefficients: &'a [f64],
    pub times: &'a [f64],
    pub values: &'a [f64],
}

impl AtomPath<'_> {
    /// ∫_0^T ω(t) dt (exact)
    pub fn integral(&self) -> f64 {
        self.coefficients.iter().enumerate().map(|(k, c)| c * self.basis.eigenfunction_integral(k + 1)).sum()
    }

    /// ∫_0^T ω(t)² dt (exact)
    pub fn l2_squared(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }
}

/// Σ_atoms weight·F(path). `grid` = 0 skips the path values.
pub fn wiener_quadrature<F: Fn(&AtomPath<'_>) -> f64 + Sync>(pq: &ProductQuantizer, grid: usize, f: F) -> Result<f64> {
    let times = if grid == 0 { Vec::new() } else { pq.basis.time_grid(grid) };
    let terms: Vec<(usize, f64)> = (0..pq.atom_count())
        .into_par_iter()
        .map(|i| {
            let a = pq.atom(i);
            let values = if grid == 0 { Vec::new() } else { pq.path(&a.coefficients, &times) };
            let p = AtomPath { basis: &pq.basis, coefficients: &a.coefficients, times: &times, values: &values };
            (i, a.weight * f(&p))
        })
        .collect();
    if let Some(&(i, _)) = terms.iter().find(|t| t.1.is_nan()) {
        return Err(Error::invalid(format!("functional is NaN at atom {i}")));
    }
    Ok(terms.iter().map(|t| t.1).sum())
}
