//! Experiments on the (r, s)-problem: how fast do L^r-optimal quantizers
//! converge in L^s?

mod criteria;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use criteria::{criterion_check, CriterionReport, Verdict, C_GRID};

use crate::asymptotics::{constants, linear_fit, AsymptoticConstants, PointDensity};
use crate::distributions::Density;
use crate::error::{Error, Result};
use crate::norm::Norm;
use crate::quantizer1d::{distortion1d, lloyd1d, Codebook1D, LloydConfig};
use crate::quantizer_nd::{mc_distortion, train_nd, CodebookND, Method, TrainConfig};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMethod {
    Exact1d,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub distortion: f64,
    /// n^{s/d}·distortion
    pub scaled: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub density: String,
    pub d: usize,
    pub r: f64,
    pub s: f64,
    pub method: RateMethod,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn scaled(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.scaled).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,distortion,scaled\n");
        for row in &self.rows {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", row.n, row.distortion, row.scaled));
        }
        out
    }
}

/// Settings shared by the experiments that build quantizer sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct RateOptions {
    pub lloyd: LloydConfig,
    pub seed: u64,
    pub norm: Norm,
    pub train_method: Method,
    /// Training samples per codepoint (Monte-Carlo rows).
    pub budget_per_point: usize,
    pub eval_samples: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            lloyd: LloydConfig::default(),
            seed: 0,
            norm: Norm::Euclidean,
            train_method: Method::LloydMc,
            budget_per_point: 1000,
            eval_samples: 400_000,
        }
    }
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::invalid("n list is empty"));
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n list must be strictly increasing and positive"));
    }
    Ok(())
}

/// L^r-stationary quantizers of a 1-D law for every n in `n_list`.
pub fn lloyd_sequence(density: &Density, r: f64, n_list: &[usize], cfg: &LloydConfig) -> Result<Vec<Codebook1D>> {
    n_list.par_iter().map(|&n| lloyd1d(density, n, r, cfg)).collect()
}

/// n^{s/d}∫d(x, α_n)^s dP for L^r-optimal α_n.
pub fn rate_table(density: &Density, r: f64, s: f64, n_list: &[usize], method: RateMethod, opts: &RateOptions) -> Result<RateTable> {
    check_n_list(n_list)?;
    if !(s > 0.0) {
        return Err(Error::invalid("s must be > 0"));
    }
    let d = density.dim();
    let rows: Vec<RateRow> = match method {
        RateMethod::Exact1d => {
            let seq = lloyd_sequence(density, r, n_list, &opts.lloyd)?;
            rows_from_1d(&seq, density, s)?
        }
        RateMethod::Mc => n_list
            .par_iter()
            .enumerate()
            .map(|(i, &n)| {
                let cfg = TrainConfig {
                    seed: opts.seed.wrapping_add(i as u64),
                    budget: opts.budget_per_point * n,
                    norm: opts.norm,
                    ..TrainConfig::default()
                };
                let method = if r == 2.0 { opts.train_method } else { Method::Clvq };
                let cb = train_nd(density, n, r, method, &cfg)?;
                let e = mc_distortion(&cb, density, s, opts.eval_samples, opts.seed.wrapping_add(0x1000 + i as u64))?;
                let f = (n as f64).powf(s / d as f64);
                Ok(RateRow { n, distortion: e.value, scaled: f * e.value, std_error: Some(f * e.std_error) })
            })
            .collect::<Result<_>>()?,
    };
    Ok(RateTable { density: density.id().to_string(), d, r, s, method, rows })
}

/// Rate rows of given scalar codebooks (exact distortions).
pub fn rows_from_1d(seq: &[Codebook1D], density: &Density, s: f64) -> Result<Vec<RateRow>> {
    seq.iter()
        .map(|cb| {
            let v = distortion1d(cb, density, s)?;
            let n = cb.len();
            Ok(RateRow { n, distortion: v, scaled: (n as f64).powf(s) * v, std_error: None })
        })
        .collect()
}

// ---- lower bound -----------------------------------------------------------------

pub const LOWER_BOUND_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub qrs: f64,
    /// Rows in the largest quartile of n.
    pub quartile_rows: usize,
    pub scaled_min: f64,
    pub scaled_max: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratio_at_largest: f64,
    pub delta: f64,
    /// The scaled value at the largest n is below (1 − δ)·Q_{r,s}.
    pub violation: bool,
}

/// Compare the scaled column with the liminf bound Q_{r,s}(P).
pub fn lower_bound_check(table: &RateTable, c: &AsymptoticConstants) -> Result<LowerBoundReport> {
    if !c.qrs.is_finite() {
        return Err(Error::invalid("Q_{r,s} is infinite; the lower bound is void"));
    }
    if table.rows.is_empty() {
        return Err(Error::invalid("empty rate table"));
    }
    let k = table.rows.len().div_ceil(4);
    let top = &table.rows[table.rows.len() - k..];
    let scaled_min = top.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min);
    let scaled_max = top.iter().map(|r| r.scaled).fold(f64::NEG_INFINITY, f64::max);
    let last = table.rows[table.rows.len() - 1].scaled;
    Ok(LowerBoundReport {
        qrs: c.qrs,
        quartile_rows: k,
        scaled_min,
        scaled_max,
        ratio_min: scaled_min / c.qrs,
        ratio_max: scaled_max / c.qrs,
        ratio_at_largest: last / c.qrs,
        delta: LOWER_BOUND_SLACK,
        violation: last < (1.0 - LOWER_BOUND_SLACK) * c.qrs,
    })
}

// ---- sharp rate ------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpRateFit {
    /// c₀ in scaled ≈ c₀ + c₁/n
    pub limit: f64,
    pub correction_slope: f64,
    pub qrs: f64,
    pub relative_error: f64,
    pub table: RateTable,
}

/// Fit n^s∫min|x − a|^s dP ≈ c₀ + c₁/n for a Lipschitz density on [a,b].
pub fn sharp_rate_fit(density: &Density, r: f64, s: f64, n_list: &[usize], cfg: &LloydConfig) -> Result<SharpRateFit> {
    if !density.is_lipschitz_compact() {
        return Err(Error::invalid(format!(
            "{density}: the sharp rate needs a Lipschitz density bounded away from 0 on a compact interval"
        )));
    }
    if n_list.len() < 2 {
        return Err(Error::invalid("the sharp-rate fit needs at least two values of n"));
    }
    let opts = RateOptions { lloyd: cfg.clone(), ..RateOptions::default() };
    let table = rate_table(density, r, s, n_list, RateMethod::Exact1d, &opts)?;
    let x: Vec<f64> = table.rows.iter().map(|r| 1.0 / r.n as f64).collect();
    let fit = linear_fit(&x, &table.scaled());
    let qrs = constants(density, r, s)?.qrs;
    Ok(SharpRateFit {
        limit: fit.intercept,
        correction_slope: fit.slope,
        qrs,
        relative_error: (fit.intercept - qrs).abs() / qrs,
        table,
    })
}

// ---- counter-example ------------------------------------------------------------

/// {1/(2n^θ)} ∪ {n^{−θ} + (1 − n^{−θ})(2(k−1) − 1)/(2(n−1)) : 2 ≤ k ≤ n}.
pub fn counterexample_codebook(n: usize, theta: f64) -> Result<Codebook1D> {
    if n < 2 {
        return Err(Error::invalid("the counter-example needs n >= 2"));
    }
    if !(theta > 0.0) {
        return Err(Error::invalid("θ must be > 0"));
    }
    let nf = n as f64;
    let h = nf.powf(-theta);
    let mut pts = vec![0.5 * h];
    for k in 2..=n {
        pts.push(h + (1.0 - h) * (2.0 * (k as f64 - 1.0) - 1.0) / (2.0 * (nf - 1.0)));
    }
    let mut cb = Codebook1D::new(pts, &Density::uniform01(), 2.0)?;
    cb.residual = f64::NAN;
    Ok(cb)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub n: usize,
    pub distortion_r: f64,
    pub distortion_s: f64,
    pub scaled_r: f64,
    pub scaled_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub theta: f64,
    pub r: f64,
    pub s: f64,
    pub rows: Vec<CounterexampleRow>,
    /// J_{r,1} = Q_r(U([0,1]))
    pub j_r: f64,
    /// |n^r D_r / J_{r,1} − 1| at the largest n.
    pub scaled_r_relative_error: f64,
    /// log-log slope of n^s D_s over the top half of the n list.
    pub growth_exponent: f64,
    /// log-log slope of n^s D_s − J_{s,1} over the same rows.
    pub excess_exponent: f64,
    /// s − θ(s + 1)
    pub target_exponent: f64,
    /// First n from which n^s D_s increases along the list.
    pub increasing_from: Option<usize>,
}

/// Exact rates of the counter-example codebooks on U([0,1]).
pub fn counterexample_rates(theta: f64, r: f64, s: f64, n_list: &[usize]) -> Result<CounterexampleReport> {
    let lo = r / (r + 1.0);
    let hi = s / (s + 1.0);
    if !(theta > lo && theta < hi) {
        return Err(Error::invalid(format!("θ = {theta} must lie in (r/(r+1), s/(s+1)) = ({lo}, {hi})")));
    }
    check_n_list(n_list)?;
    if n_list[0] < 2 {
        return Err(Error::invalid("the counter-example needs n >= 2"));
    }
    let u = Density::uniform01();
    let rows: Vec<CounterexampleRow> = n_list
        .iter()
        .map(|&n| {
            let cb = counterexample_codebook(n, theta)?;
            let dr = distortion1d(&cb, &u, r)?;
            let ds = distortion1d(&cb, &u, s)?;
            let nf = n as f64;
            Ok(CounterexampleRow { n, distortion_r: dr, distortion_s: ds, scaled_r: nf.powf(r) * dr, scaled_s: nf.powf(s) * ds })
        })
        .collect::<Result<_>>()?;
    let j_r = 1.0 / (2f64.powf(r) * (r + 1.0));
    let j_s = 1.0 / (2f64.powf(s) * (s + 1.0));
    let last = rows[rows.len() - 1];
    let top = &rows[rows.len() / 2..];
    let lx: Vec<f64> = top.iter().map(|r| (r.n as f64).ln()).collect();
    let growth_exponent = slope_or_nan(&lx, &top.iter().map(|r| r.scaled_s.ln()).collect::<Vec<_>>());
    let excess_exponent = slope_or_nan(&lx, &top.iter().map(|r| (r.scaled_s - j_s).ln()).collect::<Vec<_>>());
    let mut increasing_from = None;
    for i in (0..rows.len()).rev() {
        if i + 1 < rows.len() && rows[i + 1].scaled_s <= rows[i].scaled_s {
            break;
        }
        increasing_from = Some(rows[i].n);
    }
    if rows.len() == 1 {
        increasing_from = None;
    }
    Ok(CounterexampleReport {
        theta,
        r,
        s,
        scaled_r_relative_error: (last.scaled_r / j_r - 1.0).abs(),
        j_r,
        rows,
        growth_exponent,
        excess_exponent,
        target_exponent: s - theta * (s + 1.0),
        increasing_from,
    })
}

fn slope_or_nan(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 || y.iter().any(|v| !v.is_finite()) {
        f64::NAN
    } else {
        linear_fit(x, y).slope
    }
}

// ---- empirical measure --------------------------------------------------------------

/// Kolmogorov distance between the codebook's empirical distribution and
/// the point density P_r.
pub fn empirical_measure_distance(cb: &Codebook1D, density: &Density, r: f64) -> Result<f64> {
    if density.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: density.dim() });
    }
    let pd = PointDensity::new(density, r)?;
    let n = cb.len() as f64;
    let mut best: f64 = 0.0;
    for (k, &a) in cb.points.iter().enumerate() {
        let f = pd.cdf(a);
        best = best.max((k as f64 / n - f).abs()).max(((k + 1) as f64 / n - f).abs());
    }
    Ok(best)
}

// ---- maximal function ---------------------------------------------------------------

/// A sequence of quantizers indexed by n.
#[derive(Debug, Clone, Copy)]
pub enum Sequence<'a> {
    Scalar(&'a [Codebook1D]),
    Vector(&'a [CodebookND]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalFunctionEstimate {
    pub b: f64,
    pub exponent: f64,
    /// Grid points, row-major (grid.len() = points × d).
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub criterion_integral: f64,
    pub std_error: f64,
}

pub const MAXIMAL_GRID: usize = 401;

/// 401 equally spaced points across the central 1 − 10⁻⁶ mass of a 1-D law.
pub fn default_grid(density: &Density) -> Result<Vec<f64>> {
    let lo = density.quantile(5e-7)?;
    let hi = density.quantile(1.0 - 5e-7)?;
    Ok((0..MAXIMAL_GRID).map(|i| lo + (hi - lo) * i as f64 / (MAXIMAL_GRID - 1) as f64).collect())
}

/// ψ̂_b(x) = max_n λ_d(B(x, ρ_n))/P(B(x, ρ_n)), ρ_n = b·d(x, α_n), on a grid,
/// and an estimate of ∫ψ̂_b^{s/(d+r)} dP.
///
/// In dimension one the grid should be increasing and the integral is a
/// trapezoid rule (error: difference with the rule on every other point).
/// In higher dimension `grid` is taken as an i.i.d. sample of P and the
/// integral is its Monte-Carlo mean; ball masses come from `ball_samples`
/// fresh draws.
pub fn maximal_function_estimate(
    density: &Density,
    seq: Sequence<'_>,
    b: f64,
    grid: &[f64],
    s: f64,
    r: f64,
    ball_samples: usize,
    seed: u64,
) -> Result<MaximalFunctionEstimate> {
    if !(b > 0.0 && b < 0.5) {
        return Err(Error::invalid("b must lie in (0, 1/2)"));
    }
    let d = density.dim();
    if grid.is_empty() || grid.len() % d != 0 {
        return Err(Error::invalid("grid must be a non-empty list of points"));
    }
    let exponent = s / (d as f64 + r);
    let values: Vec<f64> = match seq {
        Sequence::Scalar(cbs) => {
            if d != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: d });
            }
            grid.par_iter()
                .map(|&x| {
                    cbs.iter()
                        .map(|cb| {
                            let dist = (x - cb.points[cb.nearest(x)]).abs();
                            ratio(2.0 * b * dist, density.ball_mass1(x, b * dist))
                        })
                        .fold(0.0, f64::max)
                })
                .collect()
        }
        Sequence::Vector(cbs) => {
            if cbs.iter().any(|c| c.dim != d) {
                return Err(Error::DimensionMismatch { expected: d, got: cbs[0].dim });
            }
            let norm = cbs.first().map(|c| c.norm).unwrap_or_default();
            let sample: Vec<f64> = rng::batches(ball_samples.max(1))
                .into_par_iter()
                .map(|(k, m)| density.sample_with(&mut rng::stream(seed, k), m))
                .collect::<Vec<_>>()
                .concat();
            let m = (sample.len() / d) as f64;
            grid.par_chunks(d)
                .map(|x| {
                    cbs.iter()
                        .map(|cb| {
                            let (_, dist) = cb.nearest(x).expect("dimension checked");
                            let rho = b * dist;
                            let hits = sample.chunks_exact(d).filter(|y| norm.dist(x, y) <= rho).count() as f64;
                            ratio(norm.unit_ball_volume(d) * rho.powi(d as i32), hits / m)
                        })
                        .fold(0.0, f64::max)
                })
                .collect()
        }
    };
    let g: Vec<f64> = values.iter().map(|v| v.powf(exponent)).collect();
    let (criterion_integral, std_error) = if d == 1 {
        let full = trapezoid(grid, &g, density, 1);
        let half = trapezoid(grid, &g, density, 2);
        (full, (full - half).abs())
    } else {
        let n = g.len() as f64;
        let mean = g.iter().sum::<f64>() / n;
        let var = g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    };
    Ok(MaximalFunctionEstimate { b, exponent, grid: grid.to_vec(), values, criterion_integral, std_error })
}

/// λ/P with 0/0 := 0.
fn ratio(lebesgue: f64, mass: f64) -> f64 {
    if lebesgue == 0.0 {
        0.0
    } else if mass <= 0.0 {
        f64::INFINITY
    } else {
        lebesgue / mass
    }
}

fn trapezoid(x: &[f64], g: &[f64], density: &Density, stride: usize) -> f64 {
    let idx: Vec<usize> = (0..x.len()).step_by(stride).collect();
    idx.windows(2)
        .map(|w| {
            let (i, j) = (w[0], w[1]);
            let fi = g[i] * density.pdf1(x[i]);
            let fj = g[j] * density.pdf1(x[j]);
            if fi == 0.0 && fj == 0.0 {
                0.0
            } else {
                0.5 * (fi + fj) * (x[j] - x[i])
            }
        })
        .sum()
}

// ---- increments ------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementRow {
    pub n: usize,
    pub e_n: f64,
    pub e_next: f64,
    pub increment: f64,
    /// increment·n^{(d+r)/d}
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementReport {
    pub r: f64,
    pub rows: Vec<IncrementRow>,
    /// max over n of increment·n^{(d+r)/d}
    pub c2: f64,
    /// max/min of the scaled increments over the upper half of the n list.
    pub upper_half_spread: f64,
    pub all_positive: bool,
    /// Some increment is negative beyond rounding: a quantizer is not
    /// optimal.
    pub non_optimal: bool,
}

/// e_{n,r}^r − e_{n+1,r}^r from Lloyd quantizers of a 1-D law.
pub fn increment_gap(density: &Density, r: f64, n_list: &[usize], cfg: &LloydConfig) -> Result<IncrementReport> {
    check_n_list(n_list)?;
    if density.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: density.dim() });
    }
    let mut ns: Vec<usize> = n_list.iter().flat_map(|&n| [n, n + 1]).collect();
    ns.sort_unstable();
    ns.dedup();
    let seq = lloyd_sequence(density, r, &ns, cfg)?;
    let dist: Vec<f64> = seq.par_iter().map(|cb| distortion1d(cb, density, r)).collect::<Result<_>>()?;
    let at = |n: usize| dist[ns.binary_search(&n).expect("n computed")];
    let rows: Vec<IncrementRow> = n_list
        .iter()
        .map(|&n| {
            let (a, b) = (at(n), at(n + 1));
            let inc = a - b;
            IncrementRow { n, e_n: a, e_next: b, increment: inc, scaled: inc * (n as f64).powf(1.0 + r) }
        })
        .collect();
    let c2 = rows.iter().map(|r| r.scaled).fold(f64::NEG_INFINITY, f64::max);
    let upper = &rows[rows.len() / 2..];
    let umax = upper.iter().map(|r| r.scaled).fold(f64::NEG_INFINITY, f64::max);
    let umin = upper.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min);
    let all_positive = rows.iter().all(|r| r.increment > 0.0);
    let non_optimal = rows.iter().any(|r| r.increment < -1e-12 * r.e_n);
    Ok(IncrementReport { r, rows, c2, upper_half_spread: umax / umin, all_positive, non_optimal })
}

#[cfg(test)]
mod tests;
