//! Racing search over mixture configurations, and single-family baselines.
//!
//! A configuration is a [`MixtureSpec`]: up to `max_parents` set families,
//! each with its own size parameter λ and weight. It is realized on the
//! training scenarios, solved for every s-t pair and scored on the same
//! training scenarios; the scalarized score averaged over pairs is its cost.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::{scalarize, score, score_one, Metrics, Split, Weights, DEFAULT_ALPHA};
use crate::instances::{better, Graph, Instance, Solution};
use crate::solvers::{solve, solve_local_search, Method, SolveOptions};
use crate::uncertainty::{ComponentSpec, Mixture, MixtureSpec, ScenarioMatrix, SetKind};
use crate::TOL;

/// Number of λ values in a baseline grid.
pub const BASELINE_POINTS: usize = 41;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSpace {
    pub max_parents: usize,
    /// Allowed families and the λ range sampled for each.
    pub types: Vec<(SetKind, (f64, f64))>,
    pub weight_range: (f64, f64),
    /// Maximal number of (configuration, pair) evaluations.
    pub budget: usize,
    pub generation_size: usize,
    /// Number of best fully evaluated configurations carried into the next generation.
    pub elites: usize,
    /// Pairs every configuration sees before it can be eliminated.
    pub min_pairs: usize,
    /// Relative margin over the leader's mean cost that triggers elimination.
    pub margin: f64,
    /// Standard deviation of perturbations as a fraction of each range.
    pub sigma: f64,
    /// Share of each later generation drawn fresh instead of perturbed.
    pub fresh_share: f64,
    /// Node cap for branch and bound; beyond it local search also runs.
    pub node_cap: usize,
}

impl Default for ConfigSpace {
    fn default() -> Self {
        ConfigSpace {
            max_parents: 3,
            types: [SetKind::Interval, SetKind::Hull, SetKind::Ellipsoid]
                .into_iter()
                .map(|k| (k, k.lambda_range()))
                .collect(),
            weight_range: (0.0, 1.0),
            budget: 10_000,
            generation_size: 20,
            elites: 5,
            min_pairs: 5,
            margin: 0.01,
            sigma: 0.1,
            fresh_share: 0.2,
            node_cap: 2_000,
        }
    }
}

impl ConfigSpace {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if self.max_parents == 0 || self.types.is_empty() {
            return Err(Error::invalid("config space needs at least one parent and one set type"));
        }
        if self.budget == 0 || self.generation_size == 0 {
            return Err(Error::invalid("budget and generation size must be ≥ 1"));
        }
        for &(kind, range) in &self.types {
            let (lo, hi) = kind.lambda_range();
            if !range_ok(range) || range.0 < lo || range.1 > hi {
                return Err(Error::invalid(format!("λ range for {kind} must lie within [{lo}, {hi}]")));
            }
            if kind == SetKind::Budgeted {
                return Err(Error::invalid("budgeted sets are not tunable (no Γ range)"));
            }
        }
        if !range_ok(self.weight_range) || self.weight_range.0 < 0.0 {
            return Err(Error::invalid("weight range must be a nonempty subrange of [0, ∞)"));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn jitter(rng: &mut ChaCha8Rng, value: f64, (lo, hi): (f64, f64), sigma: f64) -> f64 {
    if hi > lo {
        let step = Normal::new(0.0, sigma * (hi - lo)).expect("positive deviation").sample(rng);
        (value + step).clamp(lo, hi)
    } else {
        lo
    }
}

/// Parent count, types, λ and weights all drawn uniformly.
pub fn sample_config(space: &ConfigSpace, rng: &mut ChaCha8Rng) -> MixtureSpec {
    let parents = rng.random_range(1..=space.max_parents);
    let components = (0..parents)
        .map(|_| {
            let (kind, range) = space.types[rng.random_range(0..space.types.len())];
            let lambda = uniform(rng, range);
            let weight = uniform(rng, space.weight_range);
            ComponentSpec { weight, kind, lambda, gamma: None, ridge: None }
        })
        .collect();
    MixtureSpec { components }
}

/// Same families as `base`; each λ and weight moved by a clamped Gaussian step.
pub fn perturb_config(space: &ConfigSpace, base: &MixtureSpec, rng: &mut ChaCha8Rng) -> MixtureSpec {
    let components = base
        .components
        .iter()
        .map(|c| {
            let range = space.types.iter().find(|(k, _)| *k == c.kind).map_or(c.kind.lambda_range(), |t| t.1);
            ComponentSpec {
                lambda: jitter(rng, c.lambda, range, space.sigma),
                weight: jitter(rng, c.weight, space.weight_range, space.sigma),
                ..c.clone()
            }
        })
        .collect();
    MixtureSpec { components }
}

/// Solves `mix` for one pair: the exact method chosen by [`Method::Auto`]
/// with branch and bound capped at `node_cap` nodes; if that stops early,
/// local search runs too and the better solution is kept. The flag tells
/// whether the returned solution is proven optimal.
pub fn solve_pair(inst: &Instance, mix: &Mixture, node_cap: usize) -> Result<(Solution, bool)> {
    let opts = SolveOptions { node_limit: Some(node_cap), ..SolveOptions::default() };
    let exact = solve(inst, mix, Method::Auto, &opts)?;
    if exact.optimal {
        return Ok((exact.solution, true));
    }
    let local = solve_local_search(inst, mix, 2, 0)?;
    if better(local.objective, &local.solution.x, exact.objective, &exact.solution.x, TOL) {
        Ok((local.solution, false))
    } else {
        Ok((exact.solution, false))
    }
}

/// Solutions for every pair, in pair order, with their optimality flags.
pub fn solve_pairs(graph: &Arc<Graph>, pairs: &[(usize, usize)], mix: &Mixture, node_cap: usize) -> Result<Vec<(Solution, bool)>> {
    pairs
        .par_iter()
        .map(|&(s, t)| solve_pair(&Instance::shortest_path(Arc::clone(graph), s, t)?, mix, node_cap))
        .collect()
}

/// One (configuration, pair) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub generation: usize,
    pub config_id: usize,
    /// Pairs evaluated so far for this configuration, this one included.
    pub pairs: usize,
    /// Mean scalarized cost over those pairs.
    pub cost: f64,
    /// Whether this pair was solved to proven optimality.
    pub exact: bool,
    #[serde(skip)]
    pub config: MixtureSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: MixtureSpec,
    pub best_id: usize,
    /// Mean cost of `best` over `best_pairs` pairs.
    pub best_cost: f64,
    pub best_pairs: usize,
    /// False when no configuration was evaluated on every pair.
    pub complete: bool,
    pub trace: Vec<TraceEntry>,
}

impl TuneResult {
    /// `generation,config_id,pairs,cost,solver,mixture`.
    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["generation", "config_id", "pairs", "cost", "solver", "mixture"])?;
        for e in &self.trace {
            w.write_record([
                e.generation.to_string(),
                e.config_id.to_string(),
                e.pairs.to_string(),
                format!("{:.6}", e.cost),
                if e.exact { "exact" } else { "local" }.to_string(),
                e.config.to_json(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

struct Candidate {
    id: usize,
    spec: MixtureSpec,
    mix: Mixture,
    costs: Vec<f64>,
    alive: bool,
}

impl Candidate {
    fn mean(&self, pairs: usize) -> f64 {
        self.costs[..pairs].iter().sum::<f64>() / pairs as f64
    }
}

/// Data shared by every evaluation.
pub struct TuneProblem<'a> {
    pub graph: Arc<Graph>,
    pub pairs: &'a [(usize, usize)],
    pub data: &'a ScenarioMatrix,
    pub split: &'a Split,
    pub weights: Weights,
}

/// Racing tuner.
///
/// Each generation races its configurations over the pairs in order. After
/// every pair beyond `min_pairs`, configurations whose mean cost exceeds
/// the leader's by more than `margin` (relative) drop out. Fully evaluated
/// configurations enter an archive; the best `elites` of it return in the
/// next generation with their costs cached, and the remaining slots are
/// filled by perturbing elites or, for a `fresh_share` of them, by new
/// samples. The search stops when `budget` evaluations are spent.
///
/// The best configuration is the archived one of least full cost. If none
/// finished, it is the one of least mean over the most pairs and
/// `complete` is false.
pub fn tune(space: &ConfigSpace, problem: &TuneProblem<'_>, seed: u64) -> Result<TuneResult> {
    space.validate()?;
    let pairs = problem.pairs.len();
    if pairs == 0 {
        return Err(Error::invalid("tuning needs at least one s-t pair"));
    }
    let train = problem.data.select(&problem.split.train)?;
    let instances: Vec<Instance> = problem
        .pairs
        .iter()
        .map(|&(s, t)| Instance::shortest_path(Arc::clone(&problem.graph), s, t))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next_id = 0;
    let mut make = |spec: MixtureSpec| -> Result<Candidate> {
        let mix = spec.build(&train)?;
        next_id += 1;
        Ok(Candidate { id: next_id - 1, spec, mix, costs: Vec::new(), alive: true })
    };

    let mut archive: Vec<Candidate> = Vec::new();
    let mut trace = Vec::new();
    let mut spent = 0;
    let mut generation = 0;
    let mut best_partial: Option<(usize, f64, usize)> = None;

    while spent < space.budget {
        let mut ranked: Vec<&Candidate> = archive.iter().collect();
        ranked.sort_by(|a, b| a.mean(pairs).total_cmp(&b.mean(pairs)).then(a.id.cmp(&b.id)));
        let elites: Vec<&Candidate> = ranked.into_iter().take(space.elites).collect();

        let mut pool: Vec<Candidate> = elites
            .iter()
            .map(|c| Candidate { id: c.id, spec: c.spec.clone(), mix: c.mix.clone(), costs: c.costs.clone(), alive: true })
            .collect();
        let fresh_slots = space.generation_size.saturating_sub(pool.len()).min(space.budget - spent);
        for slot in 0..fresh_slots {
            let spec = if elites.is_empty() || rng.random_bool(space.fresh_share) {
                sample_config(space, &mut rng)
            } else {
                perturb_config(space, &elites[slot % elites.len()].spec, &mut rng)
            };
            pool.push(make(spec)?);
        }

        let mut exhausted = false;
        for (r, inst) in instances.iter().enumerate() {
            let needed: Vec<usize> = (0..pool.len()).filter(|&c| pool[c].alive && pool[c].costs.len() == r).collect();
            let take = needed.len().min(space.budget - spent);
            let results: Vec<(f64, bool)> = needed[..take]
                .par_iter()
                .map(|&c| {
                    let (sol, exact) = solve_pair(inst, &pool[c].mix, space.node_cap)?;
                    let m = score_one(&sol.x, &train, DEFAULT_ALPHA)?;
                    Ok((scalarize(&m, &problem.weights), exact))
                })
                .collect::<Result<_>>()?;
            for (&c, (cost, exact)) in needed[..take].iter().zip(results) {
                let cand = &mut pool[c];
                cand.costs.push(cost);
                let mean = cand.mean(r + 1);
                trace.push(TraceEntry {
                    generation,
                    config_id: cand.id,
                    pairs: r + 1,
                    cost: mean,
                    exact,
                    config: cand.spec.clone(),
                });
                if best_partial.is_none_or(|(p, m, id)| (r + 1, -mean, usize::MAX - cand.id) > (p, -m, usize::MAX - id)) {
                    best_partial = Some((r + 1, mean, cand.id));
                }
            }
            spent += take;
            if take < needed.len() {
                exhausted = true;
                break;
            }
            if r + 1 >= space.min_pairs {
                let done: Vec<usize> = (0..pool.len()).filter(|&c| pool[c].alive && pool[c].costs.len() > r).collect();
                let leader = done.iter().map(|&c| pool[c].mean(r + 1)).fold(f64::INFINITY, f64::min);
                for c in done {
                    if pool[c].mean(r + 1) > leader + space.margin * leader.abs() {
                        pool[c].alive = false;
                    }
                }
            }
        }

        for cand in pool {
            if cand.costs.len() == pairs && !archive.iter().any(|a| a.id == cand.id) {
                archive.push(cand);
            }
        }
        generation += 1;
        if exhausted {
            break;
        }
    }

    let best = archive.iter().min_by(|a, b| a.mean(pairs).total_cmp(&b.mean(pairs)).then(a.id.cmp(&b.id)));
    Ok(match best {
        Some(c) => TuneResult {
            best: c.spec.clone(),
            best_id: c.id,
            best_cost: c.mean(pairs),
            best_pairs: pairs,
            complete: true,
            trace,
        },
        None => {
            let (p, cost, id) = best_partial.expect("budget ≥ 1 gives one evaluation");
            let spec = trace.iter().find(|e| e.config_id == id).expect("traced").config.clone();
            TuneResult { best: spec, best_id: id, best_cost: cost, best_pairs: p, complete: false, trace }
        }
    })
}

/// One point of a baseline grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePoint {
    pub lambda: f64,
    pub in_sample: Metrics,
    pub out_sample: Metrics,
}

/// The λ values of a baseline grid: 41 equidistant points from 0 to the
/// top of the family's range.
pub fn baseline_lambdas(kind: SetKind) -> Vec<f64> {
    let top = kind.lambda_range().1;
    (0..BASELINE_POINTS).map(|i| top * i as f64 / (BASELINE_POINTS - 1) as f64).collect()
}

/// In- and out-of-sample metrics of `spec` realized on the training scenarios.
pub fn evaluate_config(
    spec: &MixtureSpec,
    problem: &TuneProblem<'_>,
    node_cap: usize,
) -> Result<(Vec<Solution>, Metrics, Metrics)> {
    let train = problem.data.select(&problem.split.train)?;
    let test = problem.data.select(&problem.split.test)?;
    let mix = spec.build(&train)?;
    let sols: Vec<Solution> = solve_pairs(&problem.graph, problem.pairs, &mix, node_cap)?.into_iter().map(|s| s.0).collect();
    let in_sample = score(&sols, &train, DEFAULT_ALPHA)?;
    let out_sample = score(&sols, &test, DEFAULT_ALPHA)?;
    Ok((sols, in_sample, out_sample))
}

/// Single-family models over [`baseline_lambdas`].
pub fn baseline_grid(kind: SetKind, problem: &TuneProblem<'_>, node_cap: usize) -> Result<Vec<BaselinePoint>> {
    if kind == SetKind::Budgeted {
        return Err(Error::invalid("baseline grids cover interval, hull and ellipsoid sets"));
    }
    baseline_lambdas(kind)
        .into_iter()
        .map(|lambda| {
            let spec = MixtureSpec { components: vec![ComponentSpec { weight: 1.0, kind, lambda, gamma: None, ridge: None }] };
            let (_, in_sample, out_sample) = evaluate_config(&spec, problem, node_cap)?;
            Ok(BaselinePoint { lambda, in_sample, out_sample })
        })
        .collect()
}
