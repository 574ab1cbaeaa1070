use super::{Method, SolveReport};
use crate::error::{Error, Result};
use crate::instances::{nominal_solve, Instance};
use crate::uncertainty::{Mixture, UncertaintySet};

/// Interval mixtures collapse to one nominal problem with costs
/// `Σ_j p_j · hi^j_i`.
pub fn solve_interval_mix(inst: &Instance, mix: &Mixture) -> Result<SolveReport> {
    let mut costs = vec![0.0; mix.n()];
    for (j, c) in mix.components().iter().enumerate() {
        let UncertaintySet::Interval(s) = &c.set else {
            return Err(Error::invalid(format!("component {j} is {}, expected interval", c.set.kind_name())));
        };
        for (acc, hi) in costs.iter_mut().zip(s.hi()) {
            *acc += c.weight * hi;
        }
    }
    let sol = nominal_solve(inst, &costs, &[], &[])?;
    let mut report = SolveReport::new(mix, sol.x, Method::Interval, true)?;
    report.oracle_calls = 1;
    Ok(report)
}
