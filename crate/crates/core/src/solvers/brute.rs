use super::{evaluate_wrp, Method, SolveReport};
use crate::error::{Error, Result};
use crate::instances::{better, Instance};
use crate::uncertainty::Mixture;
use crate::TOL;

/// Evaluates every member of `X`; fails when there are more than `cap`.
pub fn solve_brute_force(inst: &Instance, mix: &Mixture, cap: usize) -> Result<SolveReport> {
    let all = inst.enumerate(cap)?;
    let mut best: Option<(f64, &Vec<bool>)> = None;
    for x in &all {
        let v = evaluate_wrp(mix, x)?;
        if best.is_none_or(|(bv, bx)| better(v, x, bv, bx, TOL)) {
            best = Some((v, x));
        }
    }
    let (_, x) = best.ok_or_else(|| Error::Infeasible("the instance has no feasible solution".into()))?;
    let mut report = SolveReport::new(mix, x.clone(), Method::Brute, true)?;
    report.oracle_calls = all.len();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::fixtures::diamond_instance;
    use crate::instances::{gen_synthetic, SyntheticSpec};
    use crate::uncertainty::UncertaintySet;

    #[test]
    fn candidate_counts() {
        let mix = Mixture::single(UncertaintySet::interval(vec![0.0; 3], vec![1.0, 2.0, 3.0]).unwrap());
        let r = solve_brute_force(&Instance::selection(3, 1).unwrap(), &mix, 100).unwrap();
        assert_eq!(r.oracle_calls, 3);
        assert_eq!(r.solution.x, vec![true, false, false]);

        let mix = Mixture::single(UncertaintySet::hull(vec![vec![1.0, 1.0, 5.0, 5.0], vec![5.0, 5.0, 1.0, 1.0]]).unwrap());
        let r = solve_brute_force(&diamond_instance(), &mix, 100).unwrap();
        assert_eq!(r.oracle_calls, 2);
        assert_eq!(r.objective, 10.0);
        assert_eq!(r.solution.items(), vec![0, 1]);

        let (g, data) = gen_synthetic(&SyntheticSpec::two_block(4, 4, 2, 3)).unwrap();
        let inst = Instance::shortest_path(g, 0, 15).unwrap();
        let mix = Mixture::single(UncertaintySet::hull(data.rows().to_vec()).unwrap());
        assert_eq!(solve_brute_force(&inst, &mix, 100).unwrap().oracle_calls, 20);
    }

    #[test]
    fn cap() {
        let mix = Mixture::single(UncertaintySet::interval(vec![0.0; 5], vec![1.0; 5]).unwrap());
        let err = solve_brute_force(&Instance::selection(5, 2).unwrap(), &mix, 9).unwrap_err();
        assert!(matches!(err, Error::CapExceeded(_)));
    }
}
