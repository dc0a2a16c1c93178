use serde_json::{json, Value};

use vqlab_core::asymptotics::{constants, finiteness_class};
use vqlab_core::functional_wiener::{build_product_quantizer, wiener_distortion_mc_multi, wiener_quadrature, AtomPath, MIN_GRID};
use vqlab_core::mismatch::{counterexample_rates, criterion_check, lower_bound_check, rate_table, RateMethod, RateOptions};
use vqlab_core::quadrature_rd::{battery, expect, holder_split_bound, order2_bound, QuadratureRule};
use vqlab_core::quantizer1d::{distortion1d, lloyd1d_report, LloydConfig};
use vqlab_core::quantizer_nd::{train_nd, Method, TrainConfig};
use vqlab_core::{parse_density, Density, Norm};

use crate::config::ExperimentConfig;
use crate::output::{sidecar, tag, Cell, Sink, Table};
use crate::CliError;

/// Outcome of a command that ran to completion.
pub struct Outcome {
    pub summary: Value,
    /// Some quantizer did not meet its stopping rule.
    pub non_converged: Vec<String>,
}

enum Solver {
    Exact,
    Mc(Method),
}

fn solver(cfg: &ExperimentConfig, density: &Density) -> Result<Solver, CliError> {
    match (cfg.method.as_str(), density.dim()) {
        ("auto" | "exact", 1) => Ok(Solver::Exact),
        ("exact", d) => Err(CliError::precondition(format!("method `exact` needs a 1-D law (got d = {d})"))),
        ("auto", _) => Ok(Solver::Mc(if cfg.r == 2.0 { Method::LloydMc } else { Method::Clvq })),
        (m, _) => Ok(Solver::Mc(Method::parse(m)?)),
    }
}

fn lloyd_cfg(cfg: &ExperimentConfig) -> LloydConfig {
    LloydConfig {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        seed: cfg.seed.unwrap_or(0),
        restarts: cfg.restarts,
        ..LloydConfig::default()
    }
}

fn train_cfg(cfg: &ExperimentConfig, seed: u64, n: usize) -> Result<TrainConfig, CliError> {
    Ok(TrainConfig {
        seed,
        budget: cfg.budget_per_point * n,
        norm: Norm::parse(&cfg.norm)?,
        eval_samples: cfg.eval_samples,
        ..TrainConfig::default()
    })
}

pub fn quantize(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Outcome, CliError> {
    let density = parse_density(&cfg.density)?;
    let n_list = cfg.n_list()?;
    let mut table = Table::new(&[
        ("n", "codebook size"),
        ("distortion", "L^r quantization error e_{n,r}(P)^r of the stationary codebook"),
        ("scaled", "n^{r/d}·e_{n,r}(P)^r, tends to Q_r(P)"),
        ("residual", "largest stationarity residual (1-D) or training distortion standard error (d ≥ 2)"),
    ]);
    let mut non_converged = Vec::new();
    let d = density.dim();
    match solver(cfg, &density)? {
        Solver::Exact => {
            for &n in &n_list {
                let rep = lloyd1d_report(&density, n, cfg.r, &lloyd_cfg(cfg))?;
                if !rep.converged {
                    non_converged.push(format!("n = {n}: {} iterations", rep.iterations));
                }
                let json = rep.codebook.to_json()?;
                sink.write(&format!("quantize_n{n}.json"), &(json + "\n"))?;
                let scaled = (n as f64).powf(cfg.r) * rep.distortion;
                table.push(vec![n.into(), rep.distortion.into(), scaled.into(), rep.codebook.residual.into()]);
            }
        }
        Solver::Mc(method) => {
            let seed = cfg.require_seed("Monte-Carlo training")?;
            for (i, &n) in n_list.iter().enumerate() {
                let tc = train_cfg(cfg, seed.wrapping_add(i as u64), n)?;
                let cb = train_nd(&density, n, cfg.r, method, &tc)?;
                if method == Method::LloydMc && cb.meta.epochs >= tc.max_epochs {
                    non_converged.push(format!("n = {n}: {} epochs", cb.meta.epochs));
                }
                sink.write(&format!("quantize_n{n}.json"), &(cb.to_json()? + "\n"))?;
                let scaled = (n as f64).powf(cfg.r / d as f64) * cb.meta.distortion;
                table.push(vec![n.into(), cb.meta.distortion.into(), scaled.into(), cb.meta.distortion_std_error.into()]);
            }
        }
    }
    sink.write_table("quantize", "quantize", cfg, &table, json!({ "density": density.id(), "d": d }))?;
    Ok(Outcome { summary: json!({ "density": density.id(), "n": n_list }), non_converged })
}

pub fn constants_cmd(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Outcome, CliError> {
    let density = parse_density(&cfg.density)?;
    let mut results = Vec::new();
    for s in cfg.s_list() {
        let c = constants(&density, cfg.r, s)?;
        let criterion = if s > cfg.r { Some(criterion_check(&density, cfg.r, s)?) } else { None };
        results.push(json!({
            "s": s,
            "Qr": c.qr,
            "Qrs": c.qrs,
            "constants": c,
            "criterion": criterion,
        }));
    }
    let mut out = sidecar("constants", cfg);
    out["density"] = Value::String(density.id().to_string());
    out["results"] = Value::Array(results.clone());
    sink.write_json("constants.json", &out)?;
    Ok(Outcome { summary: json!({ "density": density.id(), "results": results }), non_converged: Vec::new() })
}

pub fn mismatch(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Outcome, CliError> {
    let density = parse_density(&cfg.density)?;
    let n_list = cfg.n_list()?;
    let d = density.dim();
    let (method, seed) = match solver(cfg, &density)? {
        Solver::Exact => (RateMethod::Exact1d, cfg.seed.unwrap_or(0)),
        Solver::Mc(_) => (RateMethod::Mc, cfg.require_seed("Monte-Carlo rate tables")?),
    };
    let opts = RateOptions {
        lloyd: lloyd_cfg(cfg),
        seed,
        norm: Norm::parse(&cfg.norm)?,
        train_method: match solver(cfg, &density)? {
            Solver::Mc(m) => m,
            Solver::Exact => Method::LloydMc,
        },
        budget_per_point: cfg.budget_per_point,
        eval_samples: cfg.eval_samples,
    };
    let mut summary = Vec::new();
    for s in cfg.s_list() {
        let rt = rate_table(&density, cfg.r, s, &n_list, method, &opts)?;
        let supercritical = s >= d as f64 + cfg.r;
        let c = constants(&density, cfg.r, s)?;
        let lower = if c.qrs.is_finite() { Some(lower_bound_check(&rt, &c)?) } else { None };
        let criterion = if s > cfg.r { Some(criterion_check(&density, cfg.r, s)?) } else { None };
        let scaled = rt.scaled();
        let increasing = scaled.windows(2).all(|w| w[1] > w[0]);
        let mut table = Table::new(&[
            ("n", "codebook size"),
            ("distortion", "L^s error E d(X, α_n)^s of the L^r-optimal codebook α_n"),
            ("scaled", "n^{s/d}·E d(X, α_n)^s, compared with Q_{r,s}(P)"),
            ("std_error", "Monte-Carlo standard error of `scaled` (empty when exact)"),
            ("supercritical", "s ≥ d + r"),
        ]);
        for row in &rt.rows {
            table.push(vec![
                row.n.into(),
                row.distortion.into(),
                row.scaled.into(),
                row.std_error.into(),
                if supercritical { "true" } else { "false" }.into(),
            ]);
        }
        let extra = json!({
            "density": density.id(),
            "d": d,
            "r": cfg.r,
            "s": s,
            "method": rt.method,
            "supercritical": supercritical,
            "finiteness": finiteness_class(&density, cfg.r, s)?,
            "Qrs": c.qrs,
            "scaled_increasing": increasing,
            "lower_bound": lower,
            "criterion": criterion,
        });
        sink.write_table(&format!("mismatch_s{}", tag(s)), "mismatch", cfg, &table, extra.clone())?;
        summary.push(extra);
    }
    Ok(Outcome { summary: Value::Array(summary), non_converged: Vec::new() })
}

pub fn counterexample(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Outcome, CliError> {
    let n_list = cfg.n_list()?;
    let s_list = cfg.s_list();
    let s = *s_list.last().expect("s list is never empty");
    let rep = counterexample_rates(cfg.theta, cfg.r, s, &n_list)?;
    let mut table = Table::new(&[
        ("n", "codebook size"),
        ("distortion_r", "L^r error of the n-point counter-example codebook"),
        ("distortion_s", "L^s error of the same codebook"),
        ("scaled_r", "n^r·L^r error, tends to J_{r,1}"),
        ("scaled_s", "n^s·L^s error, grows like n^{s−θ(s+1)}"),
    ]);
    for row in &rep.rows {
        table.push(vec![row.n.into(), row.distortion_r.into(), row.distortion_s.into(), row.scaled_r.into(), row.scaled_s.into()]);
    }
    let extra = json!({
        "theta": rep.theta,
        "r": rep.r,
        "s": rep.s,
        "j_r": rep.j_r,
        "scaled_r_relative_error": rep.scaled_r_relative_error,
        "growth_exponent": rep.growth_exponent,
        "excess_exponent": rep.excess_exponent,
        "target_exponent": rep.target_exponent,
        "increasing_from": rep.increasing_from,
    });
    sink.write_table("counterexample", "counterexample", cfg, &table, extra.clone())?;
    Ok(Outcome { summary: extra, non_converged: Vec::new() })
}

pub fn quad(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Outcome, CliError> {
    let density = parse_density(&cfg.density)?;
    let n_list = cfg.n_list()?;
    let d = density.dim();
    let mut table = Table::new(&[
        ("function", "test integrand f(x) = g(x_1)"),
        ("n", "number of atoms"),
        ("estimate", "Σ w_i f(x_i)"),
        ("truth", "closed-form E f(X) when known"),
        ("error", "|estimate − truth|"),
        ("order2_bound", "[Df]_Lip·e_{n,2}², empty when Df is not Lipschitz"),
        ("holder_bound", "½‖D²f‖_p‖X − X̂‖²_{2q} with the Hessian growth of f"),
    ]);
    let mut non_converged = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        let (rule, e2) = match solver(cfg, &density)? {
            Solver::Exact => {
                let rep = lloyd1d_report(&density, n, 2.0, &lloyd_cfg(cfg))?;
                if !rep.converged {
                    non_converged.push(format!("n = {n}"));
                }
                let e2 = distortion1d(&rep.codebook, &density, 2.0)?;
                (QuadratureRule::from_codebook1d(&rep.codebook, &density)?, e2)
            }
            Solver::Mc(method) => {
                let seed = cfg.require_seed("Monte-Carlo cubature")?;
                let tc = train_cfg(cfg, seed.wrapping_add(i as u64), n)?;
                let cb = train_nd(&density, n, 2.0, method, &tc)?;
                let e2 = cb.meta.distortion;
                (QuadratureRule::from_codebook_nd(&cb, &density, cfg.eval_samples, seed.wrapping_add(0x2000 + i as u64))?, e2)
            }
        };
        for t in battery() {
            let est = expect(&rule, |x| (t.f)(x[0]))?;
            let truth = if d == 1 { t.truth(&density) } else { None };
            let ob = t.lip_grad.map(|l| order2_bound(l, e2)).transpose()?;
            let h = t.hessian;
            let hb = holder_split_bound(&rule, &density, t.growth, Some(&|x: &[f64]| h(x[0])), cfg.samples, cfg.seed.unwrap_or(0))
                .ok()
                .map(|b| b.bound);
            table.push(vec![
                t.name.into(),
                n.into(),
                est.into(),
                truth.into(),
                truth.map(|v| (v - est).abs()).into(),
                ob.into(),
                hb.into(),
            ]);
        }
    }
    sink.write_table("quad", "quad", cfg, &table, json!({ "density": density.id(), "d": d }))?;
    Ok(Outcome { summary: json!({ "density": density.id(), "rows": table.rows.len() }), non_converged })
}

fn functional(name: &str) -> Result<fn(&AtomPath<'_>) -> f64, CliError> {
    Ok(match name {
        "sq" => |p| p.l2_squared(),
        "integral" => |p| p.integral(),
        "exp-integral" => |p| p.integral().exp(),
        "sup" => |p| p.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)),
        "terminal" => |p| p.values.last().copied().unwrap_or(f64::NAN),
        other => {
            return Err(CliError::precondition(format!(
                "unknown functional `{other}` (available: sq, integral, exp-integral, sup, terminal)"
            )))
        }
    })
}

pub fn wiener(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Outcome, CliError> {
    let n_list = cfg.n_list()?;
    let s_list = if cfg.s.is_empty() { vec![2.0] } else { cfg.s.clone() };
    let fns: Vec<(&str, fn(&AtomPath<'_>) -> f64)> =
        cfg.functionals.iter().map(|f| functional(f).map(|g| (f.as_str(), g))).collect::<Result<_, _>>()?;
    let needs_grid = cfg.functionals.iter().any(|f| f == "sup" || f == "terminal");
    let seed = if cfg.paths > 0 { Some(cfg.require_seed("Monte-Carlo path simulation")?) } else { None };
    let mut cols: Vec<(String, String)> = vec![
        ("n".into(), "atom budget N".into()),
        ("atoms".into(), "atoms actually used (product of the coordinate sizes)".into()),
        ("coordinates".into(), "number of quantized K-L coordinates".into()),
        ("squared_distortion".into(), "‖W − Ŵ‖₂² in L²([0,T]) (closed form)".into()),
        ("l2_norm".into(), "‖W − Ŵ‖₂".into()),
    ];
    if seed.is_some() {
        for s in &s_list {
            cols.push((format!("mc_norm_s{}", tag(*s)), format!("(E‖W − Ŵ‖^{s})^(1/{s}) by Monte Carlo")));
            cols.push((format!("mc_se_s{}", tag(*s)), format!("standard error of E‖W − Ŵ‖^{s}")));
        }
    }
    let col_refs: Vec<(&str, &str)> = cols.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let mut rate = Table::new(&col_refs);
    let mut fun = Table::new(&[
        ("n", "atom budget N"),
        ("functional", "F evaluated on the atoms"),
        ("value", "Σ_i w_i F(x_i), the quantization cubature of E F(W)"),
    ]);
    for &n in &n_list {
        let pq = build_product_quantizer(cfg.horizon, n, seed.unwrap_or(0))?;
        sink.write(&format!("wiener_N{n}.json"), &(pq.to_json()? + "\n"))?;
        let dist = pq.squared_distortion();
        let mut row: Vec<Cell> = vec![
            n.into(),
            pq.atom_count().into(),
            pq.allocation.sizes.len().into(),
            dist.into(),
            dist.sqrt().into(),
        ];
        if let Some(seed) = seed {
            for e in wiener_distortion_mc_multi(&pq, &s_list, cfg.paths, cfg.grid.max(MIN_GRID), seed)? {
                row.push(e.norm().into());
                row.push(e.std_error.into());
            }
        }
        rate.push(row);
        for (name, f) in &fns {
            let v = wiener_quadrature(&pq, if needs_grid { cfg.grid.max(MIN_GRID) } else { 0 }, f)?;
            fun.push(vec![n.into(), (*name).into(), v.into()]);
        }
    }
    sink.write_table("wiener_rate", "wiener", cfg, &rate, json!({ "horizon": cfg.horizon }))?;
    sink.write_table("wiener_functionals", "wiener", cfg, &fun, json!({ "horizon": cfg.horizon }))?;
    Ok(Outcome { summary: json!({ "n": n_list, "horizon": cfg.horizon }), non_converged: Vec::new() })
}
