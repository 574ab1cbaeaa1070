use rayon::prelude::*;

use super::{Method, SolveReport};
use crate::error::{Error, Result};
use crate::instances::{better, nominal_solve, Instance};
use crate::uncertainty::{BudgetedSet, Mixture, UncertaintySet};
use crate::TOL;

const CHUNK: usize = 256;

fn budgeted_sets(mix: &Mixture) -> Result<Vec<(f64, &BudgetedSet)>> {
    mix.components()
        .iter()
        .enumerate()
        .map(|(j, c)| match &c.set {
            UncertaintySet::Budgeted(s) => Ok((c.weight, s)),
            other => Err(Error::invalid(format!("component {j} is {}, expected budgeted", other.kind_name()))),
        })
        .collect()
}

/// Candidate values for the dual variable of one budgeted set: zero and
/// every deviation, sorted and deduplicated.
fn candidates(set: &BudgetedSet) -> Vec<f64> {
    let mut c: Vec<f64> = std::iter::once(0.0).chain((0..set.lo().len()).map(|i| set.deviation(i))).collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Number of dual-candidate combinations [`solve_budgeted_mix`] would
/// enumerate, or `None` for non-budgeted mixtures and overflow.
pub fn budgeted_candidate_count(mix: &Mixture) -> Option<usize> {
    let sets = budgeted_sets(mix).ok()?;
    sets.iter().try_fold(1usize, |acc, (_, s)| acc.checked_mul(candidates(s).len()))
}

/// Exact solver for budgeted mixtures.
///
/// Some optimal dual solution sets each `π^j` to zero or to one of the
/// deviations `hi^j_i - lo^j_i`. For a fixed `π` the dualized model is a
/// nominal problem with costs `Σ_j p_j (lo^j_i + [d^j_i - π^j]_+)` plus the
/// constant `Σ_j p_j Γ^j π^j`; the best of these nominal solutions over all
/// candidate combinations is optimal.
pub fn solve_budgeted_mix(inst: &Instance, mix: &Mixture, cap: usize) -> Result<SolveReport> {
    let sets = budgeted_sets(mix)?;
    let cands: Vec<Vec<f64>> = sets.iter().map(|(_, s)| candidates(s)).collect();
    let total = budgeted_candidate_count(mix).filter(|&c| c <= cap).ok_or_else(|| {
        Error::CapExceeded(format!(
            "budgeted enumeration needs more than {cap} dual candidates; use the branch-and-bound solver (bnb)"
        ))
    })?;
    let n = mix.n();

    let evaluate = |index: usize| -> Result<(f64, Vec<bool>)> {
        let mut rest = index;
        let mut costs = vec![0.0; n];
        let mut constant = 0.0;
        for ((p, set), cand) in sets.iter().zip(&cands) {
            let pi = cand[rest % cand.len()];
            rest /= cand.len();
            constant += p * set.gamma() as f64 * pi;
            for (i, c) in costs.iter_mut().enumerate() {
                *c += p * (set.lo()[i] + (set.deviation(i) - pi).max(0.0));
            }
        }
        let sol = nominal_solve(inst, &costs, &[], &[])?;
        Ok((sol.value + constant, sol.x))
    };

    let pick = |a: Option<(f64, Vec<bool>)>, b: (f64, Vec<bool>)| match a {
        Some(a) if !better(b.0, &b.1, a.0, &a.1, TOL) => Some(a),
        _ => Some(b),
    };

    let chunk_best: Vec<Option<(f64, Vec<bool>)>> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut best = None;
            for index in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                best = pick(best, evaluate(index)?);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let (_, x) = chunk_best.into_iter().flatten().fold(None, pick).expect("at least one candidate");

    let mut report = SolveReport::new(mix, x, Method::BudgetedEnum, true)?;
    report.oracle_calls = total;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bset(lo: &[f64], hi: &[f64], gamma: usize) -> UncertaintySet {
        UncertaintySet::budgeted(lo.to_vec(), hi.to_vec(), gamma).unwrap()
    }

    #[test]
    fn single_set_tie_break() {
        let inst = Instance::selection(3, 1).unwrap();
        let mix = Mixture::single(bset(&[1.0, 2.0, 3.0], &[4.0, 3.0, 3.0], 1));
        let r = solve_budgeted_mix(&inst, &mix, 1000).unwrap();
        assert_eq!(r.objective, 3.0);
        assert_eq!(r.solution.x, vec![false, true, false]);
        // candidates {0, 3, 1, 0} dedup to three values
        assert_eq!(r.oracle_calls, 3);
    }

    #[test]
    fn two_sets() {
        let inst = Instance::selection(3, 1).unwrap();
        let mix = Mixture::from_pairs([
            (0.5, bset(&[1.0, 2.0, 3.0], &[4.0, 3.0, 3.0], 1)),
            (0.5, bset(&[0.0; 3], &[10.0, 1.0, 1.0], 1)),
        ])
        .unwrap();
        let r = solve_budgeted_mix(&inst, &mix, 1000).unwrap();
        assert_eq!(r.objective, 2.0);
        assert_eq!(r.solution.x, vec![false, true, false]);
    }

    #[test]
    fn zero_budget_is_nominal_on_lower_bounds() {
        let inst = Instance::selection(4, 2).unwrap();
        let mix = Mixture::from_pairs([
            (0.3, bset(&[1.0, 2.0, 3.0, 0.5], &[9.0, 3.0, 3.0, 8.0], 0)),
            (0.7, bset(&[2.0, 1.0, 0.0, 4.0], &[3.0, 3.0, 9.0, 4.0], 0)),
        ])
        .unwrap();
        let r = solve_budgeted_mix(&inst, &mix, 1000).unwrap();
        let costs: Vec<f64> = (0..4)
            .map(|i| 0.3 * [1.0, 2.0, 3.0, 0.5][i] + 0.7 * [2.0, 1.0, 0.0, 4.0][i])
            .collect();
        let nominal = nominal_solve(&inst, &costs, &[], &[]).unwrap();
        assert_eq!(r.solution.x, nominal.x);
        assert!((r.objective - nominal.value).abs() < 1e-12);
    }

    #[test]
    fn cap_exceeded_points_to_bnb() {
        let inst = Instance::selection(3, 1).unwrap();
        let mix = Mixture::single(bset(&[0.0; 3], &[1.0, 2.0, 3.0], 1));
        let err = solve_budgeted_mix(&inst, &mix, 2).unwrap_err();
        assert!(matches!(err, Error::CapExceeded(_)));
        assert!(err.to_string().contains("bnb"));
    }
}
