use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Effective settings of one run. Every field has a default; a config file
/// and then command-line flags override them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub density: String,
    pub r: f64,
    /// Empty means s = r.
    pub s: Vec<f64>,
    /// Codebook sizes as written (`8`, `4,8,16` or `50..800`).
    pub n: String,
    /// `auto`, `exact`, `lloyd-mc` or `clvq`.
    pub method: String,
    pub seed: Option<u64>,
    pub norm: String,
    pub out: String,
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: Option<usize>,
    pub budget_per_point: usize,
    pub eval_samples: usize,
    /// Monte-Carlo samples for the Hölder bound in d ≥ 2.
    pub samples: usize,
    pub theta: f64,
    pub horizon: f64,
    pub paths: usize,
    pub grid: usize,
    pub functionals: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            density: "normal".into(),
            r: 2.0,
            s: Vec::new(),
            n: "8".into(),
            method: "auto".into(),
            seed: None,
            norm: "euclidean".into(),
            out: ".".into(),
            tol: 1e-10,
            max_iter: 100_000,
            restarts: None,
            budget_per_point: 1000,
            eval_samples: 400_000,
            samples: 400_000,
            theta: 0.75,
            horizon: 1.0,
            paths: 0,
            grid: 1024,
            functionals: vec!["sq".into(), "integral".into(), "exp-integral".into()],
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::precondition(format!("config key `{key}`: cannot read `{value}` as {what}"))
}

fn float(key: &str, v: &str) -> Result<f64, CliError> {
    v.trim().parse().map_err(|_| bad(key, v, "a number"))
}

fn count(key: &str, v: &str) -> Result<usize, CliError> {
    v.trim().parse().map_err(|_| bad(key, v, "a non-negative integer"))
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|x| !x.is_empty())
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "density" => self.density = v.to_string(),
            "r" => self.r = float(key, v)?,
            "s" => self.s = list(v).map(|x| float(key, x)).collect::<Result<_, _>>()?,
            "n" => self.n = v.to_string(),
            "method" => self.method = v.to_ascii_lowercase(),
            "seed" => self.seed = Some(v.parse().map_err(|_| bad(key, v, "an unsigned integer"))?),
            "norm" => self.norm = v.to_string(),
            "out" => self.out = v.to_string(),
            "tol" => self.tol = float(key, v)?,
            "max_iter" => self.max_iter = count(key, v)?,
            "restarts" => self.restarts = Some(count(key, v)?),
            "budget_per_point" => self.budget_per_point = count(key, v)?,
            "eval_samples" => self.eval_samples = count(key, v)?,
            "samples" => self.samples = count(key, v)?,
            "theta" => self.theta = float(key, v)?,
            "horizon" => self.horizon = float(key, v)?,
            "paths" => self.paths = count(key, v)?,
            "grid" => self.grid = count(key, v)?,
            "functionals" => self.functionals = list(v).map(str::to_string).collect(),
            other => return Err(CliError::precondition(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, entries: &BTreeMap<String, String>) -> Result<(), CliError> {
        for (k, v) in entries {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn n_list(&self) -> Result<Vec<usize>, CliError> {
        parse_n_list(&self.n)
    }

    pub fn s_list(&self) -> Vec<f64> {
        if self.s.is_empty() {
            vec![self.r]
        } else {
            self.s.clone()
        }
    }

    pub fn require_seed(&self, why: &str) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::precondition(format!("--seed is required for {why}")))
    }
}

/// `a..b` doubles from a while ≤ b; otherwise a comma-separated list.
pub fn parse_n_list(text: &str) -> Result<Vec<usize>, CliError> {
    let err = || CliError::precondition(format!("cannot read n list `{text}`"));
    let out: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| err())?;
        let b: usize = b.trim().parse().map_err(|_| err())?;
        if a == 0 || b < a {
            return Err(err());
        }
        std::iter::successors(Some(a), |&n| n.checked_mul(2)).take_while(|&n| n <= b).collect()
    } else {
        list(text).map(|x| x.parse().map_err(|_| err())).collect::<Result<_, _>>()?
    };
    if out.is_empty() || out[0] == 0 || out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::precondition(format!("n list `{text}` must be positive and strictly increasing")));
    }
    Ok(out)
}

/// Flat `key = value` lines (`#` starts a comment) or a JSON object.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::precondition(format!("config JSON: {e}")))?;
        let obj = v.as_object().ok_or_else(|| CliError::precondition("config JSON must be an object"))?;
        for (k, v) in obj {
            let s = match v {
                Value::String(s) => s.clone(),
                Value::Array(items) => items
                    .iter()
                    .map(|x| x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string()))
                    .collect::<Vec<_>>()
                    .join(","),
                Value::Null => continue,
                other => other.to_string(),
            };
            out.insert(k.clone(), s);
        }
        return Ok(out);
    }
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::precondition(format!("config line {}: expected key = value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_ranges() {
        assert_eq!(parse_n_list("50..800").unwrap(), vec![50, 100, 200, 400, 800]);
        assert_eq!(parse_n_list("3..20").unwrap(), vec![3, 6, 12]);
        assert_eq!(parse_n_list("8").unwrap(), vec![8]);
        assert_eq!(parse_n_list("4, 8,16").unwrap(), vec![4, 8, 16]);
        assert!(parse_n_list("8,4").is_err());
        assert!(parse_n_list("0..4").is_err());
        assert!(parse_n_list("x").is_err());
    }

    #[test]
    fn key_value_and_json_agree() {
        let kv = parse_config_text("# run\ndensity = pareto(b=3)\nr=2\ns = 1.4, 1.6\nseed=7\n").unwrap();
        let js = parse_config_text(r#"{"density": "pareto(b=3)", "r": 2, "s": [1.4, 1.6], "seed": 7}"#).unwrap();
        let (mut a, mut b) = (ExperimentConfig::default(), ExperimentConfig::default());
        a.apply(&kv).unwrap();
        b.apply(&js).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.s, vec![1.4, 1.6]);
        assert_eq!(a.seed, Some(7));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut c = ExperimentConfig::default();
        assert!(c.set("colour", "red").is_err());
        assert!(c.set("r", "two").is_err());
        c.set("max-iter", "5").unwrap();
        assert_eq!(c.max_iter, 5);
    }
}
