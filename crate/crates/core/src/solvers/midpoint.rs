use super::{Method, SolveReport};
use crate::error::{Error, Result};
use crate::instances::{nominal_solve, Instance};
use crate::uncertainty::{Mixture, UncertaintySet};

/// The mixed midpoint scenario `Σ_j p_j · mean(points of U_j)` and
/// `K^max = max_j K_j`.
pub fn midpoint_costs(mix: &Mixture) -> Result<(Vec<f64>, usize)> {
    let mut k_max = 0;
    for (j, c) in mix.components().iter().enumerate() {
        match &c.set {
            UncertaintySet::Hull(h) => k_max = k_max.max(h.points().len()),
            other => return Err(Error::invalid(format!("component {j} is {}, expected hull", other.kind_name()))),
        }
    }
    Ok((mix.center_costs()?, k_max))
}

/// Solves the nominal problem on the mixed midpoint scenario.
///
/// The returned solution is within a factor `K^max` of the optimum; the
/// report's objective is its true mixture value.
pub fn solve_midpoint_approx(inst: &Instance, mix: &Mixture) -> Result<SolveReport> {
    let (costs, k_max) = midpoint_costs(mix)?;
    let sol = nominal_solve(inst, &costs, &[], &[])?;
    let mut report = SolveReport::new(mix, sol.x, Method::Midpoint, false)?;
    report.oracle_calls = 1;
    report.guarantee = Some(k_max as f64);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::solve_brute_force;

    fn hull(points: &[&[f64]]) -> UncertaintySet {
        UncertaintySet::hull(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn averaging() {
        let mix = Mixture::from_pairs([(0.5, hull(&[&[1.0, 3.0], &[3.0, 1.0]])), (0.5, hull(&[&[2.0, 2.0]]))]).unwrap();
        let (c, k) = midpoint_costs(&mix).unwrap();
        assert_eq!(c, vec![2.0, 2.0]);
        assert_eq!(k, 2);
    }

    #[test]
    fn singletons_are_exact() {
        let inst = Instance::selection(3, 2).unwrap();
        let mix = Mixture::from_pairs([(0.3, hull(&[&[1.0, 5.0, 2.0]])), (0.9, hull(&[&[4.0, 1.0, 2.0]]))]).unwrap();
        let r = solve_midpoint_approx(&inst, &mix).unwrap();
        assert_eq!(r.guarantee, Some(1.0));
        assert!(!r.optimal);
        assert!((r.objective - solve_brute_force(&inst, &mix, 100).unwrap().objective).abs() < 1e-12);
    }

    #[test]
    fn true_objective_reported() {
        let inst = Instance::selection(2, 1).unwrap();
        let mix = Mixture::single(hull(&[&[0.0, 10.0], &[4.0, 0.0]]));
        let r = solve_midpoint_approx(&inst, &mix).unwrap();
        assert_eq!(midpoint_costs(&mix).unwrap().0, vec![2.0, 5.0]);
        assert_eq!(r.solution.x, vec![true, false]);
        assert_eq!(r.objective, 4.0);
        assert_eq!(solve_brute_force(&inst, &mix, 10).unwrap().objective, 4.0);
    }

    #[test]
    fn rejects_non_hull() {
        let mix = Mixture::single(UncertaintySet::interval(vec![0.0], vec![1.0]).unwrap());
        assert!(midpoint_costs(&mix).is_err());
    }
}
