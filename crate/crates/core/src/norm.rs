use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm on R^d used for nearest-neighbour projection and distortion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Euclidean,
    Sup,
}

impl Norm {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" | "l2" | "2" => Ok(Norm::Euclidean),
            "sup" | "max" | "linf" | "inf" => Ok(Norm::Sup),
            other => Err(Error::invalid(format!("unknown norm `{other}` (expected euclidean|sup)"))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Norm::Euclidean => "euclidean",
            Norm::Sup => "sup",
        }
    }

    #[inline]
    pub fn of(&self, v: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Sup => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    #[inline]
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Norm::Sup => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        }
    }

    /// Monotone surrogate of `dist` that is cheaper to compare (squared
    /// distance for the Euclidean norm).
    #[inline]
    pub(crate) fn rank_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>(),
            Norm::Sup => self.dist(a, b),
        }
    }

    #[inline]
    pub(crate) fn from_rank(&self, r: f64) -> f64 {
        match self {
            Norm::Euclidean => r.sqrt(),
            Norm::Sup => r,
        }
    }

    /// Lebesgue measure of the unit ball of this norm in R^d.
    pub fn unit_ball_volume(&self, d: usize) -> f64 {
        match self {
            Norm::Euclidean => crate::special::unit_ball_volume(d),
            Norm::Sup => 2f64.powi(d as i32),
        }
    }
}
