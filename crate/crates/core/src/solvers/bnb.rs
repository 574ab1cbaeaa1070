use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::{evaluate_wrp, Method, SolveReport};
use crate::error::{Error, Result};
use crate::instances::{better, nominal_solve, Instance, Solution};
use crate::uncertainty::{Mixture, UncertaintySet};
use crate::TOL;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BnbBudget {
    /// Maximal number of expanded nodes; `None` is unlimited.
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
}

impl BnbBudget {
    pub fn unlimited() -> Self {
        BnbBudget::default()
    }

    pub fn nodes(limit: usize) -> Self {
        BnbBudget { node_limit: Some(limit), time_limit: None }
    }
}

/// Per-item costs whose linear value never exceeds the mixture objective:
/// upper bounds for intervals (exact), lower bounds for budgeted sets, the
/// point mean for hulls and `mu` for ellipsoids.
fn bound_costs(mix: &Mixture) -> Result<Vec<f64>> {
    let mut out = vec![0.0; mix.n()];
    for c in mix.components() {
        let costs = match &c.set {
            UncertaintySet::Interval(s) => s.hi().to_vec(),
            UncertaintySet::Budgeted(s) => s.lo().to_vec(),
            UncertaintySet::Polyhedron(_) => {
                return Err(Error::Unsupported("branch and bound cannot bound polyhedral sets; emit MIP instead".into()))
            }
            other => other.center()?,
        };
        for (o, v) in out.iter_mut().zip(costs) {
            *o += c.weight * v;
        }
    }
    Ok(out)
}

struct Node {
    bound: f64,
    seq: usize,
    forced_in: Vec<usize>,
    forced_out: Vec<usize>,
    completion: Vec<bool>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // reversed: BinaryHeap pops the smallest (bound, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

/// Best-first branch and bound on item inclusion and exclusion.
///
/// Each node's bound is the nominal optimum under [`bound_costs`] restricted
/// by its forced sets, and that nominal solution is also scored as an
/// incumbent candidate. A node whose nominal solution uses only forced-in
/// items is a leaf. Branching picks the free item of the node solution with
/// the largest `max_j p_j · spread_j(i)`.
///
/// Running out of budget is not an error: the best incumbent is returned
/// with `optimal == false`.
pub fn solve_bnb(inst: &Instance, mix: &Mixture, budget: BnbBudget, warm: Option<&Solution>) -> Result<SolveReport> {
    let start = Instant::now();
    let costs = bound_costs(mix)?;
    let weight_spread: Vec<f64> = (0..mix.n())
        .map(|i| mix.components().iter().map(|c| c.weight * c.set.spread(i)).fold(0.0, f64::max))
        .collect();

    let root = nominal_solve(inst, &costs, &[], &[])?;
    let mut oracle_calls = 1;
    let mut incumbent = (evaluate_wrp(mix, &root.x)?, root.x.clone());
    if let Some(w) = warm {
        if inst.contains(&w.x) {
            let v = evaluate_wrp(mix, &w.x)?;
            if better(v, &w.x, incumbent.0, &incumbent.1, TOL) {
                incumbent = (v, w.x.clone());
            }
        }
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    heap.push(Node { bound: root.value, seq, forced_in: vec![], forced_out: vec![], completion: root.x });
    let mut nodes = 0;
    let mut complete = true;

    while let Some(node) = heap.pop() {
        if node.bound >= incumbent.0 - TOL {
            continue;
        }
        let out_of_nodes = budget.node_limit.is_some_and(|l| nodes >= l);
        let out_of_time = budget.time_limit.is_some_and(|l| start.elapsed() >= l);
        if out_of_nodes || out_of_time {
            complete = false;
            break;
        }
        nodes += 1;

        let branch = (0..mix.n())
            .filter(|&i| node.completion[i] && !node.forced_in.contains(&i))
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if weight_spread[b] >= weight_spread[i] => Some(b),
                _ => Some(i),
            });
        let Some(item) = branch else { continue };

        // including the item keeps the node solution and bound
        let mut forced_in = node.forced_in.clone();
        forced_in.push(item);
        seq += 1;
        heap.push(Node {
            bound: node.bound,
            seq,
            forced_in,
            forced_out: node.forced_out.clone(),
            completion: node.completion.clone(),
        });

        let mut forced_out = node.forced_out;
        forced_out.push(item);
        oracle_calls += 1;
        match nominal_solve(inst, &costs, &node.forced_in, &forced_out) {
            Ok(sol) => {
                let v = evaluate_wrp(mix, &sol.x)?;
                if better(v, &sol.x, incumbent.0, &incumbent.1, TOL) {
                    incumbent = (v, sol.x.clone());
                }
                seq += 1;
                heap.push(Node { bound: sol.value, seq, forced_in: node.forced_in, forced_out, completion: sol.x });
            }
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    }

    let mut report = SolveReport::new(mix, incumbent.1, Method::Bnb, complete)?;
    report.nodes_explored = nodes;
    report.oracle_calls = oracle_calls;
    Ok(report)
}
