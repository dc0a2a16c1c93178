//! Parser for textual density ids such as `normal(d=1,sigma=1)`.

use std::collections::BTreeMap;

use super::Density;
use crate::error::{Error, Result};

/// Catalog entries: name and accepted parameters with defaults.
pub const CATALOG: &[(&str, &str)] = &[
    ("uniform", "a=0,b=1"),
    ("uniform01", ""),
    ("uniformbox", "d=2,a=0,b=1"),
    ("normal", "d=1,mu=0,sigma=1,rho=0"),
    ("hyperexp", "d=1,a=1,b=2,c=0"),
    ("gamma", "a=1,b=1"),
    ("doublegamma", "a=1,c=1"),
    ("weibull", "b=2"),
    ("lognormal", "a=0,sigma=1"),
    ("logistic", ""),
    ("pareto", "b=3"),
    ("poissoncomb", "lambda=2"),
    ("stable", "rho=1.5"),
    ("linear", "a=0,b=1,c0=2,c1=2"),
];

pub fn catalog_listing() -> String {
    CATALOG
        .iter()
        .map(|(name, params)| if params.is_empty() { name.to_string() } else { format!("{name}({params})") })
        .collect::<Vec<_>>()
        .join(", ")
}

fn unknown(id: &str) -> Error {
    Error::UnknownDensity { id: id.to_string(), catalog: catalog_listing() }
}

fn parse_params(body: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("density parameter `{item}` is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("density parameter `{item}` has a non-numeric value")))?;
        out.insert(k.trim().to_ascii_lowercase(), v);
    }
    Ok(out)
}

/// Build a catalog density from its textual id.
pub fn parse_density(spec: &str) -> Result<Density> {
    let spec = spec.trim();
    let (name, body) = match spec.find('(') {
        Some(i) => {
            let rest = spec[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::invalid(format!("unbalanced parentheses in `{spec}`")))?;
            (&spec[..i], rest)
        }
        None => (spec, ""),
    };
    let name = name.trim().to_ascii_lowercase();
    let defaults = CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| *p)
        .ok_or_else(|| unknown(spec))?;
    let mut params = parse_params(defaults)?;
    for (k, v) in parse_params(body)? {
        if !params.contains_key(&k) {
            return Err(Error::invalid(format!("`{name}` has no parameter `{k}` (accepted: {defaults})")));
        }
        params.insert(k, v);
    }
    let p = |k: &str| params[k];
    let dim = |k: &str| -> Result<usize> {
        let v = p(k);
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::invalid(format!("`{k}` must be a positive integer")))
        }
    };
    match name.as_str() {
        "uniform" => Density::uniform(p("a"), p("b")),
        "uniform01" => Ok(Density::uniform01()),
        "uniformbox" => Density::uniform_box(dim("d")?, p("a"), p("b")),
        "normal" => {
            let d = dim("d")?;
            if d == 1 {
                Density::normal(p("mu"), p("sigma"))
            } else {
                if p("mu") != 0.0 {
                    return Err(Error::unsupported("multivariate normal laws are centered"));
                }
                Density::normal_nd(d, p("sigma"), p("rho"))
            }
        }
        "hyperexp" => Density::hyper_exponential(dim("d")?, p("a"), p("b"), p("c")),
        "gamma" => Density::gamma(p("a"), p("b")),
        "doublegamma" => Density::double_gamma(p("a"), p("c")),
        "weibull" => Density::weibull(p("b")),
        "lognormal" => Density::lognormal(p("a"), p("sigma")),
        "logistic" => Ok(Density::logistic()),
        "pareto" => Density::pareto(p("b")),
        "poissoncomb" => Density::poisson_comb(p("lambda")),
        "stable" => Density::stable(p("rho")),
        "linear" => Density::linear(p("a"), p("b"), p("c0"), p("c1")),
        _ => Err(unknown(spec)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_catalog_ids() {
        assert_eq!(parse_density("normal(d=1,sigma=1)").unwrap().dim(), 1);
        assert_eq!(parse_density("normal(d=3,sigma=1,rho=0.2)").unwrap().dim(), 3);
        assert_eq!(parse_density("pareto(b=3)").unwrap().id(), "pareto(b=3)");
        assert!(parse_density("poissoncomb(lambda=2)").is_ok());
        assert!(parse_density("uniform01").is_ok());
        assert!(parse_density(" Normal ").is_ok());
        assert!(parse_density("linear").is_ok());
    }

    #[test]
    fn rejects_bad_ids() {
        assert!(matches!(parse_density("cauchy"), Err(Error::UnknownDensity { .. })));
        assert!(parse_density("pareto(k=3)").is_err());
        assert!(parse_density("pareto(b=x)").is_err());
        assert!(parse_density("normal(d=1.5)").is_err());
        assert!(parse_density("normal(sigma=1").is_err());
    }

    #[test]
    fn ids_reparse_to_same_law() {
        for (name, _) in CATALOG {
            let d = parse_density(name).unwrap();
            let again = parse_density(d.id()).unwrap();
            assert_eq!(d.id(), again.id());
        }
    }
}
