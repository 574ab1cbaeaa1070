//! Out-of-sample scoring: scenario splits, per-pair risk metrics,
//! scalarization, weight grids and trade-off exports.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{dot, Solution};
use crate::uncertainty::ScenarioMatrix;

/// Tail fraction used for CVaR unless told otherwise.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Disjoint train and test scenario indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..k` and puts the first `floor(ratio·k)` indices in `train`.
pub fn split_scenarios(k: usize, ratio: f64, seed: u64) -> Result<Split> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 scenarios to split, got {k}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let size = (ratio * k as f64 + 1e-9).floor() as usize;
    if size == 0 || size == k {
        return Err(Error::invalid(format!("ratio {ratio} leaves one side of a {k}-scenario split empty")));
    }
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = perm[..size].to_vec();
    let mut test = perm[size..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub avg: f64,
    pub max: f64,
    pub cvar: f64,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "avg={:.6} max={:.6} cvar={:.6}", self.avg, self.max, self.cvar)
    }
}

/// Number of scenarios in the CVaR tail: `ceil(alpha·k)`, at least one.
pub fn tail_size(alpha: f64, k: usize) -> usize {
    ((alpha * k as f64 - 1e-9).ceil() as usize).clamp(1, k)
}

fn check_pool(x: &[bool], scenarios: &ScenarioMatrix) -> Result<()> {
    if x.len() != scenarios.n() {
        return Err(Error::invalid(format!("solution has {} items, scenarios have {}", x.len(), scenarios.n())));
    }
    Ok(())
}

/// Metrics of one solution over every scenario.
pub fn score_one(x: &[bool], scenarios: &ScenarioMatrix, alpha: f64) -> Result<Metrics> {
    check_pool(x, scenarios)?;
    let mut v: Vec<f64> = scenarios.rows().iter().map(|c| dot(c, x)).collect();
    let k = v.len();
    if k == 0 {
        return Err(Error::invalid("empty scenario pool"));
    }
    let avg = v.iter().sum::<f64>() / k as f64;
    v.sort_by(|a, b| b.total_cmp(a));
    let tail = tail_size(alpha, k);
    Ok(Metrics { avg, max: v[0], cvar: v[..tail].iter().sum::<f64>() / tail as f64 })
}

/// Metrics of each pair's solution, in pair order.
pub fn score_per_pair(solutions: &[Solution], scenarios: &ScenarioMatrix, alpha: f64) -> Result<Vec<Metrics>> {
    solutions.par_iter().map(|s| score_one(&s.x, scenarios, alpha)).collect()
}

/// Averages of the per-pair metrics: mean cost, mean worst case and mean
/// of the worst `ceil(alpha·K)` costs.
pub fn score(solutions: &[Solution], scenarios: &ScenarioMatrix, alpha: f64) -> Result<Metrics> {
    if solutions.is_empty() {
        return Err(Error::invalid("no solutions to score"));
    }
    Ok(mean_metrics(&score_per_pair(solutions, scenarios, alpha)?))
}

/// Componentwise mean, summed in order.
pub fn mean_metrics(per_pair: &[Metrics]) -> Metrics {
    let m = per_pair.len() as f64;
    let (a, x, c) = per_pair.iter().fold((0.0, 0.0, 0.0), |(a, x, c), p| (a + p.avg, x + p.max, c + p.cvar));
    Metrics { avg: a / m, max: x / m, cvar: c / m }
}

/// Scalarization weights for `(avg, max, cvar)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub avg: f64,
    pub max: f64,
    pub cvar: f64,
}

impl Weights {
    pub fn new(avg: f64, max: f64, cvar: f64) -> Result<Self> {
        if [avg, max, cvar].iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(Weights { avg, max, cvar })
        } else {
            Err(Error::invalid("weights must be finite and ≥ 0"))
        }
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.avg, self.max, self.cvar)
    }
}

impl FromStr for Weights {
    type Err = Error;

    /// `a,b,c`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad weight `{p}`"))))
            .collect::<Result<_>>()?;
        match parts[..] {
            [a, b, c] => Weights::new(a, b, c),
            _ => Err(Error::invalid(format!("expected three comma-separated weights, got `{s}`"))),
        }
    }
}

pub fn scalarize(m: &Metrics, w: &Weights) -> f64 {
    w.avg * m.avg + w.max * m.max + w.cvar * m.cvar
}

/// Every weight triple on the grid with spacing `step` that sums to one,
/// in lexicographic order.
pub fn weight_grid(step: f64) -> Result<Vec<Weights>> {
    let m = (1.0 / step).round();
    if !(step > 0.0 && step <= 1.0) || (m * step - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("step {step} does not divide 1")));
    }
    let m = m as usize;
    let mut out = Vec::new();
    for a in 0..=m {
        for b in 0..=m - a {
            let c = m - a - b;
            out.push(Weights { avg: a as f64 / m as f64, max: b as f64 / m as f64, cvar: c as f64 / m as f64 });
        }
    }
    Ok(out)
}

/// One labelled solution set with its in-sample and out-of-sample metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRecord {
    pub label: String,
    pub in_sample: Metrics,
    pub out_sample: Metrics,
}

#[derive(Serialize, Deserialize)]
struct TradeoffRow {
    label: String,
    sample: String,
    avg: String,
    max: String,
    cvar: String,
}

fn row(label: &str, sample: &str, m: &Metrics) -> TradeoffRow {
    TradeoffRow {
        label: label.to_string(),
        sample: sample.to_string(),
        avg: format!("{:.6}", m.avg),
        max: format!("{:.6}", m.max),
        cvar: format!("{:.6}", m.cvar),
    }
}

/// Writes `label,sample,avg,max,cvar` with an `in` and an `out` row per
/// record; returns the number of data rows.
pub fn export_tradeoffs(records: &[TradeoffRecord], out: &Path) -> Result<usize> {
    let mut w = csv::Writer::from_path(out).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(out, io),
        other => Error::invalid(format!("{other:?}")),
    })?;
    if records.is_empty() {
        w.write_record(["label", "sample", "avg", "max", "cvar"])?;
    }
    for r in records {
        w.serialize(row(&r.label, "in", &r.in_sample))?;
        w.serialize(row(&r.label, "out", &r.out_sample))?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    Ok(2 * records.len())
}

/// Reads a file written by [`export_tradeoffs`].
pub fn read_tradeoffs(path: &Path) -> Result<Vec<TradeoffRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows: Vec<TradeoffRow> = reader.deserialize().collect::<std::result::Result<_, _>>()?;
    let metrics = |r: &TradeoffRow| -> Result<Metrics> {
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::invalid(format!("bad number `{s}`")));
        Ok(Metrics { avg: num(&r.avg)?, max: num(&r.max)?, cvar: num(&r.cvar)? })
    };
    rows.chunks(2)
        .map(|pair| match pair {
            [a, b] if a.sample == "in" && b.sample == "out" && a.label == b.label => {
                Ok(TradeoffRecord { label: a.label.clone(), in_sample: metrics(a)?, out_sample: metrics(b)? })
            }
            _ => Err(Error::invalid("trade-off rows must come in `in`/`out` pairs")),
        })
        .collect()
}
