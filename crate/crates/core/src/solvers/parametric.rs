use super::{Method, SolveReport};
use crate::error::{Error, Result};
use crate::instances::{better, dot, nominal_solve, Instance};
use crate::uncertainty::{EllipsoidSet, Mixture, UncertaintySet};
use crate::TOL;

pub(super) fn applicable(mix: &Mixture) -> bool {
    split(mix).is_ok_and(|(_, e)| e.is_some())
}

type Split<'a> = (Vec<f64>, Option<(f64, &'a EllipsoidSet)>);

/// Linear part `Σ p hi + p_e mu`, and the ellipsoid component if any.
fn split(mix: &Mixture) -> Result<Split<'_>> {
    let mut linear = vec![0.0; mix.n()];
    let mut ellipsoid = None;
    for (j, c) in mix.components().iter().enumerate() {
        match &c.set {
            UncertaintySet::Interval(s) => {
                for (l, h) in linear.iter_mut().zip(s.hi()) {
                    *l += c.weight * h;
                }
            }
            UncertaintySet::Ellipsoid(e) => {
                if ellipsoid.is_some() {
                    return Err(Error::invalid(
                        "parametric method handles at most one ellipsoid; use bnb for several",
                    ));
                }
                if !e.is_diagonal() {
                    return Err(Error::invalid(format!(
                        "parametric method needs a diagonal covariance, component {j} is not diagonal"
                    )));
                }
                for (l, m) in linear.iter_mut().zip(e.mu()) {
                    *l += c.weight * m;
                }
                ellipsoid = Some((c.weight, e));
            }
            other => {
                return Err(Error::invalid(format!(
                    "parametric method accepts interval and ellipsoid sets, component {j} is {}",
                    other.kind_name()
                )))
            }
        }
    }
    Ok((linear, ellipsoid))
}

/// Exact method for one diagonal ellipsoid plus interval sets.
///
/// The objective is `m(x) + w·sqrt(λ·v(x))` with `m` and `v` linear in
/// binary `x`: concave and nondecreasing in the pair `(m, v)`, so some
/// optimum is a supported point of the projected set, i.e. minimizes
/// `m + θ v` for some `θ ≥ 0`. A dichotomic scan over `θ` finds all of them.
pub fn solve_ellipsoid_parametric(inst: &Instance, mix: &Mixture) -> Result<SolveReport> {
    let (linear, ellipsoid) = split(mix)?;
    let variance: Vec<f64> = match ellipsoid {
        Some((_, e)) => (0..mix.n()).map(|i| e.sigma()[i][i]).collect(),
        None => vec![0.0; mix.n()],
    };
    let active = ellipsoid.is_some_and(|(w, e)| w > 0.0 && e.lambda() > 0.0);

    let mut scan = Scan { inst, linear: &linear, variance: &variance, found: Vec::new(), calls: 0 };
    let a = scan.solve(&linear)?;
    if active {
        let b = scan.solve(&variance)?;
        scan.refine(&a, &b, 0)?;
    }

    let mut best: Option<(f64, Vec<bool>)> = None;
    for x in &scan.found {
        let v = super::evaluate_wrp(mix, x)?;
        if best.as_ref().is_none_or(|(bv, bx)| better(v, x, *bv, bx, TOL)) {
            best = Some((v, x.clone()));
        }
    }
    let (_, x) = best.expect("scan found at least one solution");
    let mut report = SolveReport::new(mix, x, Method::Parametric, true)?;
    report.oracle_calls = scan.calls;
    Ok(report)
}

struct Scan<'a> {
    inst: &'a Instance,
    linear: &'a [f64],
    variance: &'a [f64],
    found: Vec<Vec<bool>>,
    calls: usize,
}

impl Scan<'_> {
    fn solve(&mut self, costs: &[f64]) -> Result<Vec<bool>> {
        self.calls += 1;
        let x = nominal_solve(self.inst, costs, &[], &[])?.x;
        if !self.found.contains(&x) {
            self.found.push(x.clone());
        }
        Ok(x)
    }

    fn point(&self, x: &[bool]) -> (f64, f64) {
        (dot(self.linear, x), dot(self.variance, x))
    }

    /// `left` has the lower mean, `right` the lower variance.
    fn refine(&mut self, left: &[bool], right: &[bool], depth: usize) -> Result<()> {
        let (m1, v1) = self.point(left);
        let (m2, v2) = self.point(right);
        if left == right || (m1, v1) == (m2, v2) || !(m1 < m2 && v1 > v2) || depth > 200 {
            return Ok(());
        }
        let theta = (m2 - m1) / (v1 - v2);
        let costs: Vec<f64> = self.linear.iter().zip(self.variance).map(|(l, v)| l + theta * v).collect();
        let mid = self.solve(&costs)?;
        let (m, v) = self.point(&mid);
        let line = m1 + theta * v1;
        if m + theta * v < line - 1e-12 * line.abs().max(1.0) {
            self.refine(left, &mid, depth + 1)?;
            self.refine(&mid, right, depth + 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::solve_brute_force;

    fn diag(mu: &[f64], var: &[f64], lambda: f64) -> UncertaintySet {
        let n = mu.len();
        let sigma = (0..n).map(|i| (0..n).map(|j| if i == j { var[i] } else { 0.0 }).collect()).collect();
        UncertaintySet::ellipsoid(mu.to_vec(), sigma, lambda).unwrap()
    }

    #[test]
    fn two_singletons() {
        let inst = Instance::selection(2, 1).unwrap();
        let mix = Mixture::single(diag(&[1.0, 2.0], &[9.0, 0.0], 1.0));
        let r = solve_ellipsoid_parametric(&inst, &mix).unwrap();
        assert_eq!(r.solution.x, vec![false, true]);
        assert_eq!(r.objective, 2.0);
        assert!(r.optimal);
    }

    #[test]
    fn zero_radius_is_nominal_on_mu() {
        let inst = Instance::selection(4, 2).unwrap();
        let mu = [3.0, 1.0, 2.0, 1.5];
        let mix = Mixture::single(diag(&mu, &[0.1, 50.0, 0.2, 30.0], 0.0));
        let r = solve_ellipsoid_parametric(&inst, &mix).unwrap();
        assert_eq!(r.solution.x, nominal_solve(&inst, &mu, &[], &[]).unwrap().x);
    }

    #[test]
    fn equal_variances_at_fixed_cardinality() {
        let inst = Instance::selection(5, 2).unwrap();
        let mu = [3.0, 1.0, 2.0, 1.5, 4.0];
        let mix = Mixture::single(diag(&mu, &[2.0; 5], 7.0));
        let r = solve_ellipsoid_parametric(&inst, &mix).unwrap();
        assert_eq!(r.solution.x, nominal_solve(&inst, &mu, &[], &[]).unwrap().x);
    }

    #[test]
    fn finds_interior_supported_point() {
        // optimum needs a strictly positive slope, neither endpoint
        let inst = Instance::selection(3, 1).unwrap();
        let mix = Mixture::single(diag(&[1.0, 2.0, 4.0], &[16.0, 1.0, 0.0], 1.0));
        let r = solve_ellipsoid_parametric(&inst, &mix).unwrap();
        assert_eq!(r.objective, 3.0);
        assert_eq!(r.objective, solve_brute_force(&inst, &mix, 10).unwrap().objective);
    }

    #[test]
    fn preconditions() {
        let inst = Instance::selection(2, 1).unwrap();
        let full = UncertaintySet::ellipsoid(vec![1.0, 1.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]], 1.0).unwrap();
        let err = solve_ellipsoid_parametric(&inst, &Mixture::single(full)).unwrap_err();
        assert!(err.to_string().contains("diagonal"));
        let two = Mixture::from_pairs([(1.0, diag(&[1.0, 1.0], &[1.0, 1.0], 1.0)), (1.0, diag(&[1.0, 1.0], &[1.0, 1.0], 1.0))])
            .unwrap();
        assert!(solve_ellipsoid_parametric(&inst, &two).is_err());
        let hull = Mixture::single(UncertaintySet::hull(vec![vec![1.0, 1.0]]).unwrap());
        assert!(solve_ellipsoid_parametric(&inst, &hull).is_err());
    }
}
