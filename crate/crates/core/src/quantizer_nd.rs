//! Quantizers of laws on R^d trained by Monte-Carlo Lloyd iteration or by
//! competitive learning (CLVQ), with exact nearest-neighbour projection.

mod kdtree;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kdtree::KdTree;

use crate::distributions::{Density, TailClass};
use crate::error::{Error, Result};
use crate::norm::Norm;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LloydMc,
    Clvq,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lloyd-mc" | "lloyd" => Ok(Method::LloydMc),
            "clvq" => Ok(Method::Clvq),
            other => Err(Error::invalid(format!("unknown training method `{other}` (expected lloyd-mc|clvq)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    /// Total number of training samples; 0 means 1000·n.
    pub budget: usize,
    pub norm: Norm,
    /// Maximal number of Lloyd epochs.
    pub max_epochs: usize,
    /// Lloyd stops once the largest point move is below tol·scale.
    pub tol: f64,
    /// Samples used for the final distortion and weight estimates; 0 means
    /// max(10⁴, min(budget, 10⁶)).
    pub eval_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { seed: 0, budget: 0, norm: Norm::Euclidean, max_epochs: 300, tol: 1e-7, eval_samples: 0 }
    }
}

/// Training record stored with an ND codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    #[serde(rename = "tool-version")]
    pub tool_version: String,
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub samples: usize,
    pub schedule: String,
    pub epochs: usize,
    pub reseeded: usize,
    /// Distortion (order r) after each Lloyd epoch on the training sample.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
    pub distortion: f64,
    pub distortion_std_error: f64,
}

impl Default for TrainMeta {
    fn default() -> Self {
        TrainMeta {
            tool_version: crate::VERSION.to_string(),
            seed: None,
            method: None,
            samples: 0,
            schedule: String::new(),
            epochs: 0,
            reseeded: 0,
            history: Vec::new(),
            distortion: f64::NAN,
            distortion_std_error: f64::NAN,
        }
    }
}

/// A finite point set α ⊂ R^d with Monte-Carlo cell weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "WireCodebook", try_from = "WireCodebook")]
pub struct CodebookND {
    pub density: String,
    pub dim: usize,
    pub r: f64,
    pub norm: Norm,
    points: Vec<f64>,
    pub weights: Vec<f64>,
    pub meta: TrainMeta,
    tree: Option<TreeHandle>,
}

#[derive(Debug, Clone)]
struct TreeHandle(std::sync::Arc<KdTree>);

impl PartialEq for TreeHandle {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Serialize, Deserialize)]
struct WireCodebook {
    density: String,
    dim: usize,
    r: f64,
    n: usize,
    norm: Norm,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    meta: TrainMeta,
}

impl From<CodebookND> for WireCodebook {
    fn from(cb: CodebookND) -> Self {
        WireCodebook {
            n: cb.len(),
            points: cb.points.chunks_exact(cb.dim).map(<[f64]>::to_vec).collect(),
            density: cb.density,
            dim: cb.dim,
            r: cb.r,
            norm: cb.norm,
            weights: cb.weights,
            meta: cb.meta,
        }
    }
}

impl TryFrom<WireCodebook> for CodebookND {
    type Error = Error;
    fn try_from(w: WireCodebook) -> Result<Self> {
        if w.points.len() != w.n || w.points.iter().any(|p| p.len() != w.dim) {
            return Err(Error::InvalidCodebook("point list does not match n and dim".into()));
        }
        let mut cb = CodebookND {
            density: w.density,
            dim: w.dim,
            r: w.r,
            norm: w.norm,
            points: w.points.concat(),
            weights: w.weights,
            meta: w.meta,
            tree: None,
        };
        cb.check()?;
        cb.index();
        Ok(cb)
    }
}

impl CodebookND {
    /// Codebook with uniform placeholder weights.
    pub fn new(points: Vec<f64>, dim: usize, r: f64, norm: Norm, density: &str) -> Result<Self> {
        if dim == 0 || points.is_empty() || points.len() % dim != 0 {
            return Err(Error::InvalidCodebook("points must form a non-empty n × dim array".into()));
        }
        let n = points.len() / dim;
        let mut cb = CodebookND {
            density: density.to_string(),
            dim,
            r,
            norm,
            points,
            weights: vec![1.0 / n as f64; n],
            meta: TrainMeta::default(),
            tree: None,
        };
        cb.check()?;
        cb.index();
        Ok(cb)
    }

    fn check(&self) -> Result<()> {
        let n = self.len();
        if self.dim == 0 || n == 0 || self.points.len() != n * self.dim {
            return Err(Error::InvalidCodebook("points must form a non-empty n × dim array".into()));
        }
        if self.points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCodebook("non-finite coordinate".into()));
        }
        if self.weights.len() != n || self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidCodebook("weights must be n nonnegative numbers".into()));
        }
        let mut rows: Vec<&[f64]> = self.points.chunks_exact(self.dim).collect();
        rows.sort_by(|a, b| a.iter().zip(*b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
        if rows.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCodebook("points must be pairwise distinct".into()));
        }
        Ok(())
    }

    fn index(&mut self) {
        self.tree = Some(TreeHandle(std::sync::Arc::new(KdTree::new(&self.points, self.dim))));
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.points.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Row-major n × dim coordinates.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Nearest point and its distance in the codebook's norm; ties go to the
    /// lowest index.
    pub fn nearest(&self, x: &[f64]) -> Result<(usize, f64)> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.nearest_unchecked(x))
    }

    fn nearest_unchecked(&self, x: &[f64]) -> (usize, f64) {
        let (i, rank) = match &self.tree {
            Some(t) => t.0.nearest(x, self.norm),
            None => brute_nearest(&self.points, self.dim, x, self.norm),
        };
        (i, self.norm.from_rank(rank))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Linear scan nearest neighbour, lowest index on ties.
pub fn brute_nearest(points: &[f64], dim: usize, x: &[f64], norm: Norm) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.chunks_exact(dim).enumerate() {
        let d = norm.rank_dist(x, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

// ---- Monte-Carlo evaluation ------------------------------------------------------------

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    /// E‖X‖^s is infinite: the estimate does not converge.
    pub divergent_tail: bool,
}

struct CellStats {
    count: Vec<usize>,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    loss: f64,
    loss2: f64,
}

impl CellStats {
    fn new(n: usize, d: usize) -> Self {
        CellStats { count: vec![0; n], sum: vec![0.0; n * d], sumsq: vec![0.0; n], loss: 0.0, loss2: 0.0 }
    }

    fn merge(mut self, o: CellStats) -> Self {
        for (a, b) in self.count.iter_mut().zip(&o.count) {
            *a += b;
        }
        for (a, b) in self.sum.iter_mut().zip(&o.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&o.sumsq) {
            *a += b;
        }
        self.loss += o.loss;
        self.loss2 += o.loss2;
        self
    }
}

fn accumulate(cb: &CodebookND, xs: &[f64], s: f64, stats: &mut CellStats) {
    let d = cb.dim;
    for x in xs.chunks_exact(d) {
        let (i, dist) = cb.nearest_unchecked(x);
        stats.count[i] += 1;
        let mut q = 0.0;
        for k in 0..d {
            stats.sum[i * d + k] += x[k];
            q += x[k] * x[k];
        }
        stats.sumsq[i] += q;
        let l = dist.powf(s);
        stats.loss += l;
        stats.loss2 += l * l;
    }
}

/// Cell statistics over `m` fresh samples drawn in deterministic batches.
fn sample_stats(cb: &CodebookND, density: &Density, s: f64, m: usize, seed: u64) -> CellStats {
    let (n, d) = (cb.len(), cb.dim);
    rng::batches(m)
        .into_par_iter()
        .map(|(k, size)| {
            let mut r = rng::stream(seed, k);
            let xs = density.sample_with(&mut r, size);
            let mut st = CellStats::new(n, d);
            accumulate(cb, &xs, s, &mut st);
            st
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(CellStats::new(n, d), CellStats::merge)
}

fn check_density(cb: &CodebookND, density: &Density) -> Result<()> {
    if density.dim() != cb.dim {
        return Err(Error::DimensionMismatch { expected: cb.dim, got: density.dim() });
    }
    Ok(())
}

fn diverges(density: &Density, s: f64) -> bool {
    matches!(density.tail_class(), TailClass::PowerLaw { index } if s >= index)
}

/// E d(X, α)^s estimated from `m` samples.
pub fn mc_distortion(cb: &CodebookND, density: &Density, s: f64, m: usize, seed: u64) -> Result<McEstimate> {
    check_density(cb, density)?;
    if !(s > 0.0) {
        return Err(Error::invalid("distortion order s must be > 0"));
    }
    if m < 2 {
        return Err(Error::invalid("Monte-Carlo estimation needs at least 2 samples"));
    }
    let st = sample_stats(cb, density, s, m, seed);
    let mean = st.loss / m as f64;
    let var = ((st.loss2 / m as f64 - mean * mean) * m as f64 / (m - 1) as f64).max(0.0);
    Ok(McEstimate { value: mean, std_error: (var / m as f64).sqrt(), samples: m, divergent_tail: diverges(density, s) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityGap {
    /// max over retained cells of ‖cell mean − point‖.
    pub gap: f64,
    /// Standard error of the cell mean in the cell attaining the gap.
    pub cell_std_error: f64,
    /// Largest cell-mean standard error over retained cells.
    pub max_cell_std_error: f64,
    /// Cells with fewer than 30 samples.
    pub excluded: Vec<usize>,
}

pub const MIN_CELL_SAMPLES: usize = 30;

/// Distance between each point and the Monte-Carlo mean of its cell.
pub fn stationarity_gap(cb: &CodebookND, density: &Density, m: usize, seed: u64) -> Result<StationarityGap> {
    check_density(cb, density)?;
    if cb.r != 2.0 {
        return Err(Error::invalid("the stationarity gap is defined for quadratic (r = 2) codebooks"));
    }
    let st = sample_stats(cb, density, 2.0, m, seed);
    let d = cb.dim;
    let mut out = StationarityGap { gap: 0.0, cell_std_error: 0.0, max_cell_std_error: 0.0, excluded: Vec::new() };
    for i in 0..cb.len() {
        let c = st.count[i];
        if c < MIN_CELL_SAMPLES {
            out.excluded.push(i);
            continue;
        }
        let cf = c as f64;
        let mean: Vec<f64> = (0..d).map(|k| st.sum[i * d + k] / cf).collect();
        let m2 = mean.iter().map(|v| v * v).sum::<f64>();
        let var = (st.sumsq[i] / cf - m2).max(0.0) / (cf - 1.0).max(1.0);
        let se = var.sqrt();
        let g = Norm::Euclidean.dist(&mean, cb.point(i));
        out.max_cell_std_error = out.max_cell_std_error.max(se);
        if g > out.gap {
            out.gap = g;
            out.cell_std_error = se;
        }
    }
    Ok(out)
}

// ---- training ----------------------------------------------------------------------------

/// Build an n-point quantizer of `density` for the L^r criterion.
pub fn train_nd(density: &Density, n: usize, r: f64, method: Method, cfg: &TrainConfig) -> Result<CodebookND> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("r must be > 0"));
    }
    if method == Method::LloydMc && r != 2.0 {
        return Err(Error::invalid("lloyd-mc trains quadratic quantizers only (use clvq for r != 2)"));
    }
    if let TailClass::PowerLaw { index } = density.tail_class() {
        if index <= r {
            return Err(Error::invalid(format!("{density}: no finite moment of order > r = {r}")));
        }
    }
    let budget = if cfg.budget == 0 { 1000 * n } else { cfg.budget };
    if budget < 1000 * n {
        return Err(Error::invalid(format!("training budget {budget} is below 1000·n = {}", 1000 * n)));
    }
    let d = density.dim();
    let mut init_rng = rng::stream(cfg.seed, u64::MAX);
    let init = distinct_init(density, n, &mut init_rng);
    let mut meta = TrainMeta { seed: Some(cfg.seed), method: Some(method), samples: budget, ..TrainMeta::default() };
    let points = match method {
        Method::LloydMc => lloyd_mc(density, init, budget, cfg, &mut meta)?,
        Method::Clvq => clvq(density, init, r, budget, cfg, &mut meta),
    };
    let mut cb = CodebookND::new(points, d, r, cfg.norm, density.id())?;
    let m = if cfg.eval_samples == 0 { budget.clamp(10_000, 1_000_000) } else { cfg.eval_samples };
    let st = sample_stats(&cb, density, r, m, cfg.seed ^ 0x5eed_e7a1);
    cb.weights = st.count.iter().map(|&c| c as f64 / m as f64).collect();
    let mean = st.loss / m as f64;
    meta.distortion = mean;
    meta.distortion_std_error = ((st.loss2 / m as f64 - mean * mean).max(0.0) / m as f64).sqrt();
    cb.meta = meta;
    Ok(cb)
}

fn distinct_init<R: Rng>(density: &Density, n: usize, r: &mut R) -> Vec<f64> {
    let d = density.dim();
    let mut pts: Vec<f64> = Vec::with_capacity(n * d);
    while pts.len() < n * d {
        let x = density.sample_with(r, 1);
        if !pts.chunks_exact(d).any(|p| p == x.as_slice()) {
            pts.extend(x);
        }
    }
    pts
}

fn draw(density: &Density, m: usize, seed: u64) -> Vec<f64> {
    rng::batches(m)
        .into_par_iter()
        .map(|(k, size)| density.sample_with(&mut rng::stream(seed, k), size))
        .collect::<Vec<_>>()
        .concat()
}

fn lloyd_mc(density: &Density, mut pts: Vec<f64>, budget: usize, cfg: &TrainConfig, meta: &mut TrainMeta) -> Result<Vec<f64>> {
    let d = density.dim();
    let n = pts.len() / d;
    let xs = draw(density, budget, cfg.seed);
    let scale = density.scale();
    let mut reseed = rng::stream(cfg.seed, u64::MAX - 1);
    meta.schedule = format!("lloyd-mc: fixed sample of {budget}, at most {} epochs, tol {:e}", cfg.max_epochs, cfg.tol);
    for epoch in 0..cfg.max_epochs {
        let cb = CodebookND::new(pts.clone(), d, 2.0, cfg.norm, density.id())?;
        let st = xs
            .par_chunks(rng::BATCH * d)
            .map(|chunk| {
                let mut st = CellStats::new(n, d);
                accumulate(&cb, chunk, 2.0, &mut st);
                st
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(CellStats::new(n, d), CellStats::merge);
        meta.history.push(st.loss / budget as f64);
        meta.epochs = epoch + 1;
        let mut moved: f64 = 0.0;
        let mut next = pts.clone();
        for i in 0..n {
            if st.count[i] == 0 {
                let j = reseed.random_range(0..budget);
                next[i * d..(i + 1) * d].copy_from_slice(&xs[j * d..(j + 1) * d]);
                meta.reseeded += 1;
                moved = f64::INFINITY;
                continue;
            }
            for k in 0..d {
                next[i * d + k] = st.sum[i * d + k] / st.count[i] as f64;
            }
            moved = moved.max(Norm::Euclidean.dist(&next[i * d..(i + 1) * d], &pts[i * d..(i + 1) * d]));
        }
        if has_duplicates(&next, d) {
            break;
        }
        pts = next;
        if moved <= cfg.tol * scale {
            break;
        }
    }
    Ok(pts)
}

fn has_duplicates(pts: &[f64], d: usize) -> bool {
    let mut rows: Vec<&[f64]> = pts.chunks_exact(d).collect();
    rows.sort_by(|a, b| a.iter().zip(*b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    rows.windows(2).any(|w| w[0] == w[1])
}

fn clvq(density: &Density, mut pts: Vec<f64>, r: f64, budget: usize, cfg: &TrainConfig, meta: &mut TrainMeta) -> Vec<f64> {
    let d = density.dim();
    let n = pts.len() / d;
    let gamma0 = 0.5 * density.scale();
    let c = n as f64;
    meta.schedule = format!("clvq: gamma_t = {gamma0:e}/(1 + t·{gamma0:e}/{c})");
    let mut t = 0usize;
    let mut dir = vec![0.0; d];
    for (k, size) in rng::batches(budget) {
        let xs = density.sample_with(&mut rng::stream(cfg.seed, k), size);
        for x in xs.chunks_exact(d) {
            let (i, rank) = brute_nearest(&pts, d, x, cfg.norm);
            let dist = cfg.norm.from_rank(rank);
            let gamma = gamma0 / (1.0 + t as f64 * gamma0 / c);
            t += 1;
            if dist == 0.0 {
                continue;
            }
            let a = &mut pts[i * d..(i + 1) * d];
            match cfg.norm {
                Norm::Euclidean => {
                    for k in 0..d {
                        dir[k] = (x[k] - a[k]) / dist;
                    }
                }
                Norm::Sup => {
                    dir.iter_mut().for_each(|v| *v = 0.0);
                    let j = (0..d).max_by(|&p, &q| (x[p] - a[p]).abs().total_cmp(&(x[q] - a[q]).abs())).unwrap_or(0);
                    dir[j] = (x[j] - a[j]).signum();
                }
            }
            let step = (gamma * r * dist.powf(r - 1.0)).min(dist);
            for k in 0..d {
                a[k] += step * dir[k];
            }
        }
        if has_duplicates(&pts, d) {
            separate(&mut pts, d, density.scale());
        }
        meta.epochs += 1;
    }
    pts
}

fn separate(pts: &mut [f64], d: usize, scale: f64) {
    let n = pts.len() / d;
    for i in 1..n {
        for j in 0..i {
            if pts[i * d..(i + 1) * d] == pts[j * d..(j + 1) * d] {
                pts[i * d] += 1e-9 * scale * (1 + i) as f64;
            }
        }
    }
}

#[cfg(test)]
mod tests;
