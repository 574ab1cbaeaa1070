//! Solution methods for the weighted robust problem.
//!
//! | method | mixtures | result |
//! |---|---|---|
//! | [`solve_interval_mix`] | interval only | exact, one nominal call |
//! | [`solve_budgeted_mix`] | budgeted only | exact, one nominal call per dual candidate |
//! | [`solve_ellipsoid_parametric`] | one diagonal ellipsoid + intervals | exact, dichotomic scan |
//! | [`solve_midpoint_approx`] | hull only | `K^max`-approximation |
//! | [`solve_bnb`] | anything with centers | exact within budget |
//! | [`solve_brute_force`] | anything | exact, enumerates `X` |
//! | [`solve_local_search`] | anything | heuristic |
//!
//! All reports carry the true mixture objective of the returned solution.

mod bnb;
mod brute;
mod budgeted;
mod interval;
mod local;
mod midpoint;
mod parametric;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

pub use bnb::{solve_bnb, BnbBudget};
pub use brute::solve_brute_force;
pub use budgeted::{budgeted_candidate_count, solve_budgeted_mix};
pub use interval::solve_interval_mix;
pub use local::solve_local_search;
pub use midpoint::{midpoint_costs, solve_midpoint_approx};
pub use parametric::solve_ellipsoid_parametric;

use crate::error::{Error, Result};
use crate::instances::{Instance, Solution};
use crate::uncertainty::{Mixture, UncertaintySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Auto,
    Brute,
    Bnb,
    BudgetedEnum,
    Interval,
    Midpoint,
    Parametric,
    Local,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Brute => "brute",
            Method::Bnb => "bnb",
            Method::BudgetedEnum => "budgeted-enum",
            Method::Interval => "interval",
            Method::Midpoint => "midpoint",
            Method::Parametric => "parametric",
            Method::Local => "local",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Method::Auto,
            Method::Brute,
            Method::Bnb,
            Method::BudgetedEnum,
            Method::Interval,
            Method::Midpoint,
            Method::Parametric,
            Method::Local,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// The returned solution; `solution.value` is the mixture objective.
    pub solution: Solution,
    pub objective: f64,
    pub method: Method,
    pub nodes_explored: usize,
    pub oracle_calls: usize,
    /// Set only by exact methods that ran to completion.
    pub optimal: bool,
    /// Worst-case ratio to the optimum, for approximation methods.
    pub guarantee: Option<f64>,
    /// Accepted descent moves, for local search.
    pub improving_moves: usize,
}

impl SolveReport {
    fn new(mix: &Mixture, x: Vec<bool>, method: Method, optimal: bool) -> Result<Self> {
        let objective = evaluate_wrp(mix, &x)?;
        Ok(SolveReport {
            solution: Solution { x, value: objective },
            objective,
            method,
            nodes_explored: 0,
            oracle_calls: 0,
            optimal,
            guarantee: None,
            improving_moves: 0,
        })
    }
}

/// `Σ_j p_j · max_{c ∈ U_j} c·x`, summed in component order.
pub fn evaluate_wrp(mix: &Mixture, x: &[bool]) -> Result<f64> {
    let mut total = 0.0;
    for c in mix.components() {
        total += c.weight * c.set.worst_case_value(x)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Largest number of dual candidates the budgeted enumeration may try.
    pub enum_cap: usize,
    /// Largest feasible set brute force may enumerate.
    pub brute_cap: usize,
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            enum_cap: 10_000_000,
            brute_cap: 1_000_000,
            node_limit: None,
            time_limit: None,
            restarts: 4,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn bnb_budget(&self) -> BnbBudget {
        BnbBudget { node_limit: self.node_limit, time_limit: self.time_limit }
    }
}

/// Method `auto` picks:
///
/// * all interval → [`Method::Interval`];
/// * all budgeted with few enough dual candidates → [`Method::BudgetedEnum`];
/// * all hull → [`Method::Bnb`] warm-started from the midpoint solution;
/// * one diagonal ellipsoid, otherwise intervals → [`Method::Parametric`];
/// * anything else → [`Method::Bnb`].
pub fn auto_method(mix: &Mixture, opts: &SolveOptions) -> Method {
    let comps = mix.components();
    let all = |f: fn(&UncertaintySet) -> bool| comps.iter().all(|c| f(&c.set));
    if all(|s| matches!(s, UncertaintySet::Interval(_))) {
        Method::Interval
    } else if all(|s| matches!(s, UncertaintySet::Budgeted(_)))
        && budgeted_candidate_count(mix).is_some_and(|c| c <= opts.enum_cap)
    {
        Method::BudgetedEnum
    } else if parametric::applicable(mix) {
        Method::Parametric
    } else {
        Method::Bnb
    }
}

/// Runs `method` (resolving [`Method::Auto`] first).
pub fn solve(inst: &Instance, mix: &Mixture, method: Method, opts: &SolveOptions) -> Result<SolveReport> {
    if mix.n() != inst.n() {
        return Err(Error::invalid(format!("mixture has {} items, instance has {}", mix.n(), inst.n())));
    }
    let method = if method == Method::Auto { auto_method(mix, opts) } else { method };
    match method {
        Method::Auto => unreachable!(),
        Method::Brute => solve_brute_force(inst, mix, opts.brute_cap),
        Method::Bnb => {
            let all_hull = mix.components().iter().all(|c| matches!(c.set, UncertaintySet::Hull(_)));
            let warm = if all_hull { Some(solve_midpoint_approx(inst, mix)?.solution) } else { None };
            solve_bnb(inst, mix, opts.bnb_budget(), warm.as_ref())
        }
        Method::BudgetedEnum => solve_budgeted_mix(inst, mix, opts.enum_cap),
        Method::Interval => solve_interval_mix(inst, mix),
        Method::Midpoint => solve_midpoint_approx(inst, mix),
        Method::Parametric => solve_ellipsoid_parametric(inst, mix),
        Method::Local => solve_local_search(inst, mix, opts.restarts, opts.seed),
    }
}
