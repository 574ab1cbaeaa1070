use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ScenarioMatrix, UncertaintySet};
use crate::error::{Error, Result};

/// Set families that can be built from scenario data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Interval,
    Hull,
    Ellipsoid,
    /// Interval bounds as for [`SetKind::Interval`] with a deviation budget.
    Budgeted,
}

impl SetKind {
    /// Admissible range of the size parameter λ.
    pub fn lambda_range(self) -> (f64, f64) {
        match self {
            SetKind::Ellipsoid => (0.0, 20.0),
            SetKind::Interval | SetKind::Hull | SetKind::Budgeted => (0.0, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SetKind::Interval => "interval",
            SetKind::Hull => "hull",
            SetKind::Ellipsoid => "ellipsoid",
            SetKind::Budgeted => "budgeted",
        }
    }
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(SetKind::Interval),
            "hull" => Ok(SetKind::Hull),
            "ellipsoid" => Ok(SetKind::Ellipsoid),
            "budgeted" => Ok(SetKind::Budgeted),
            other => Err(Error::invalid(format!("unknown set type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetSpec {
    pub kind: SetKind,
    pub lambda: f64,
    /// Diagonal regularization for ellipsoids; `None` means `1e-6 · trace(Σ) / n`.
    pub ridge: Option<f64>,
    /// Deviation budget, required for [`SetKind::Budgeted`].
    pub gamma: Option<usize>,
}

impl SetSpec {
    pub fn new(kind: SetKind, lambda: f64) -> Self {
        SetSpec { kind, lambda, ridge: None, gamma: None }
    }
}

/// Builds a set of the requested family scaled by λ around the scenario mean `μ`.
///
/// * interval: `lo = μ - λ(μ - min)`, `hi = μ + λ(max - μ)` columnwise;
/// * hull: the points `μ + λ(c^k - μ)`, exact duplicates removed;
/// * ellipsoid: centre `μ`, sample covariance plus a ridge, radius λ;
/// * budgeted: interval bounds with budget `gamma`.
///
/// λ = 0 collapses interval and hull sets onto the mean; λ = 1 spans the
/// observed range.
pub fn build_set(data: &ScenarioMatrix, spec: &SetSpec) -> Result<UncertaintySet> {
    let (lo_l, hi_l) = spec.kind.lambda_range();
    let lambda = spec.lambda;
    if !(lambda >= lo_l && lambda <= hi_l) {
        return Err(Error::invalid(format!("λ = {lambda} outside [{lo_l}, {hi_l}] for {} sets", spec.kind)));
    }
    let mu = data.mean();
    match spec.kind {
        SetKind::Interval | SetKind::Budgeted => {
            let (min, max) = (data.min(), data.max());
            let lo: Vec<f64> = (0..data.n()).map(|i| (mu[i] - lambda * (mu[i] - min[i])).min(mu[i])).collect();
            let hi: Vec<f64> = (0..data.n()).map(|i| (mu[i] + lambda * (max[i] - mu[i])).max(mu[i])).collect();
            if spec.kind == SetKind::Interval {
                UncertaintySet::interval(lo, hi)
            } else {
                let gamma = spec.gamma.ok_or_else(|| Error::invalid("budgeted sets need a `gamma`"))?;
                UncertaintySet::budgeted(lo, hi, gamma)
            }
        }
        SetKind::Hull => {
            let mut points: Vec<Vec<f64>> = Vec::with_capacity(data.k());
            for row in data.rows() {
                let p: Vec<f64> = row.iter().zip(&mu).map(|(c, m)| (m + lambda * (c - m)).max(0.0)).collect();
                if !points.contains(&p) {
                    points.push(p);
                }
            }
            UncertaintySet::hull(points)
        }
        SetKind::Ellipsoid => {
            if data.k() < 2 {
                return Err(Error::invalid("ellipsoids need at least 2 scenarios"));
            }
            let mut sigma = data.covariance();
            let n = data.n();
            let trace: f64 = (0..n).map(|i| sigma[i][i]).sum();
            let ridge = spec.ridge.unwrap_or(1e-6 * trace / n.max(1) as f64);
            if !(ridge >= 0.0 && ridge.is_finite()) {
                return Err(Error::invalid("ridge must be finite and nonnegative"));
            }
            for (i, row) in sigma.iter_mut().enumerate() {
                row[i] += ridge;
            }
            UncertaintySet::ellipsoid(mu, sigma, lambda)
        }
    }
}
