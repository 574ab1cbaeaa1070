//! Numerical checks of structural properties: submodularity of budgeted
//! objectives, closed-form dual certificates, and midpoint approximation
//! ratios.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instances::{dot, Instance};
use crate::solvers::{evaluate_wrp, solve_brute_force, solve_midpoint_approx};
use crate::uncertainty::{BudgetedSet, Mixture, UncertaintySet};
use crate::TOL;

/// Largest ground set [`check_submodular`] accepts.
pub const MAX_SUBMODULAR_N: usize = 16;

/// A set function `f(X) = evaluate_wrp(mixture, 1_X)` over `n` items.
#[derive(Debug, Clone)]
pub struct SetFunctionSpec {
    pub n: usize,
    pub mixture: Mixture,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubmodularCheck {
    Ok,
    /// `f(S) + f(T) < f(S ∪ T) + f(S ∩ T)`; items are 0-based.
    Violation { s: Vec<usize>, t: Vec<usize> },
}

/// Checks `f(S) + f(T) ≥ f(S ∪ T) + f(S ∩ T) - 1e-9` over every unordered
/// pair of incomparable subsets. The mixture must be budgeted.
pub fn check_submodular(spec: &SetFunctionSpec) -> Result<SubmodularCheck> {
    if spec.mixture.n() != spec.n {
        return Err(Error::invalid(format!("mixture has {} items, spec says {}", spec.mixture.n(), spec.n)));
    }
    for (j, c) in spec.mixture.components().iter().enumerate() {
        if !matches!(c.set, UncertaintySet::Budgeted(_)) {
            return Err(Error::invalid(format!("component {j} is {}, expected budgeted", c.set.kind_name())));
        }
    }
    check_submodular_fn(spec.n, |x| evaluate_wrp(&spec.mixture, x).expect("budgeted sets evaluate"))
}

/// [`check_submodular`] for an arbitrary set function on incidence vectors.
///
/// The reported violation is the first one in `(S, T)` order of bitmasks
/// (item `i` is bit `i`), independent of the thread count.
///
/// ```
/// use robustmix::analysis::{check_submodular_fn, SubmodularCheck};
///
/// let square = |x: &[bool]| (x.iter().filter(|&&b| b).count() as f64).powi(2);
/// assert_eq!(
///     check_submodular_fn(2, square).unwrap(),
///     SubmodularCheck::Violation { s: vec![0], t: vec![1] }
/// );
/// ```
pub fn check_submodular_fn(n: usize, f: impl Fn(&[bool]) -> f64 + Sync) -> Result<SubmodularCheck> {
    if n > MAX_SUBMODULAR_N {
        return Err(Error::invalid(format!("exhaustive check needs n ≤ {MAX_SUBMODULAR_N}, got {n}")));
    }
    let masks = 1usize << n;
    let values: Vec<f64> = (0..masks).into_par_iter().map(|m| f(&bits(n, m))).collect();
    let found = (0..masks).into_par_iter().find_map_first(|s| {
        (s + 1..masks).find_map(|t| {
            let (union, inter) = (s | t, s & t);
            if union == s || union == t {
                return None;
            }
            (values[s] + values[t] < values[union] + values[inter] - TOL).then_some((s, t))
        })
    });
    Ok(match found {
        None => SubmodularCheck::Ok,
        Some((s, t)) => SubmodularCheck::Violation { s: mask_items(n, s), t: mask_items(n, t) },
    })
}

fn bits(n: usize, mask: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

fn mask_items(n: usize, mask: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

/// Optimal dual variables of every budgeted component at a fixed `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub pi: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    /// `Σ_j p_j (lo^j·x + Γ^j π^j + Σ_i ρ^j_i)`.
    pub objective: f64,
}

impl DualCertificate {
    /// `π ≥ 0`, `ρ ≥ 0` and `π^j + ρ^j_i ≥ d^j_i x_i` for all `j, i`.
    pub fn is_feasible(&self, mix: &Mixture, x: &[bool]) -> bool {
        mix.components().iter().zip(self.pi.iter().zip(&self.rho)).all(|(c, (&pi, rho))| {
            let UncertaintySet::Budgeted(s) = &c.set else { return false };
            pi >= 0.0
                && rho.iter().enumerate().all(|(i, &r)| {
                    let need = if x[i] { s.deviation(i) } else { 0.0 };
                    r >= 0.0 && pi + r >= need - TOL
                })
        })
    }
}

/// `π` is the `(Γ+1)`-th largest deviation among chosen items (zero if
/// fewer are chosen) and `ρ_i = [d_i x_i - π]_+`.
pub(crate) fn budgeted_dual(set: &BudgetedSet, x: &[bool]) -> (f64, Vec<f64>) {
    let mut chosen: Vec<f64> = (0..x.len()).filter(|&i| x[i]).map(|i| set.deviation(i)).collect();
    chosen.sort_by(|a, b| b.total_cmp(a));
    let pi = chosen.get(set.gamma()).copied().unwrap_or(0.0);
    let rho = (0..x.len()).map(|i| if x[i] { (set.deviation(i) - pi).max(0.0) } else { 0.0 }).collect();
    (pi, rho)
}

/// Closed-form dual solution of the inner maximization for each budgeted
/// component; its objective equals the mixture objective at `x`.
pub fn dual_certificate(mix: &Mixture, x: &[bool]) -> Result<DualCertificate> {
    if x.len() != mix.n() {
        return Err(Error::invalid(format!("x has length {}, expected {}", x.len(), mix.n())));
    }
    let mut cert = DualCertificate { pi: Vec::new(), rho: Vec::new(), objective: 0.0 };
    for (j, c) in mix.components().iter().enumerate() {
        let UncertaintySet::Budgeted(s) = &c.set else {
            return Err(Error::invalid(format!("component {j} is {}, expected budgeted", c.set.kind_name())));
        };
        let (pi, rho) = budgeted_dual(s, x);
        cert.objective += c.weight * (dot(s.lo(), x) + s.gamma() as f64 * pi + rho.iter().sum::<f64>());
        cert.pi.push(pi);
        cert.rho.push(rho);
    }
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCheck {
    /// Midpoint solution value over the optimum (1 when both are zero).
    pub ratio: f64,
    /// `K^max`.
    pub bound: f64,
    pub ok: bool,
}

/// Compares the midpoint solution with the brute-force optimum.
pub fn check_ratio(inst: &Instance, mix: &Mixture, cap: usize) -> Result<RatioCheck> {
    let approx = solve_midpoint_approx(inst, mix)?;
    let bound = approx.guarantee.expect("midpoint reports its guarantee");
    let opt = solve_brute_force(inst, mix, cap)?.objective;
    let ratio = if opt.abs() <= TOL {
        if approx.objective.abs() <= TOL {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        approx.objective / opt
    };
    Ok(RatioCheck { ratio, bound, ok: ratio >= 1.0 - TOL && ratio <= bound + TOL })
}
