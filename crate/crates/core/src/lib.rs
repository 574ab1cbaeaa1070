//! Robust combinatorial optimization under weighted mixtures of uncertainty sets.
//!
//! Given a feasible set `X ⊆ {0,1}^n` and uncertainty sets `U_1, .., U_N`
//! with weights `p_j ≥ 0`, the weighted robust problem is
//!
//! ```text
//! min_{x ∈ X}  Σ_j p_j · max_{c ∈ U_j} c·x
//! ```
//!
//! The crate provides:
//!
//! * [`instances`]: path and selection feasible sets with a nominal oracle;
//! * [`uncertainty`]: interval, budgeted, hull, ellipsoid and polyhedral sets,
//!   built from scenario data;
//! * [`solvers`]: exact reductions, a midpoint approximation, a parametric
//!   method for diagonal ellipsoids, branch-and-bound, brute force and local search;
//! * [`analysis`]: submodularity, dual certificates and approximation ratios;
//! * [`mip_emit`]: CPLEX-LP export of the dualized mixed-integer model;
//! * [`evaluation`] and [`tuning`]: out-of-sample scoring and a racing tuner
//!   for mixture hyperparameters.
//!
//! ```
//! use robustmix::instances::Instance;
//! use robustmix::uncertainty::{Mixture, UncertaintySet};
//! use robustmix::solvers::{solve_brute_force, solve_interval_mix};
//!
//! let inst = Instance::selection(2, 1).unwrap();
//! let mix = Mixture::from_pairs([
//!     (0.5, UncertaintySet::interval(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap()),
//!     (0.5, UncertaintySet::interval(vec![0.0, 0.0], vec![3.0, 1.0]).unwrap()),
//! ]).unwrap();
//! let report = solve_interval_mix(&inst, &mix).unwrap();
//! assert_eq!(report.solution.items(), vec![1]);
//! assert_eq!(report.objective, 1.5);
//! assert_eq!(solve_brute_force(&inst, &mix, 10).unwrap().objective, 1.5);
//! ```

pub mod analysis;
pub mod error;
pub mod evaluation;
pub mod instances;
pub mod mip_emit;
pub mod solvers;
pub mod tuning;
pub mod uncertainty;

pub use error::{Error, Result};

/// Absolute tolerance for objective comparisons.
pub const TOL: f64 = 1e-9;

// Book chapters are compiled as doctests so their snippets stay in sync
// with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/uncertainty-sets.md")]
    mod uncertainty_sets {}
    #[doc = include_str!("../../../book/src/weighted-robust-problem.md")]
    mod weighted_robust_problem {}
    #[doc = include_str!("../../../book/src/budgeted-enumeration.md")]
    mod budgeted_enumeration {}
    #[doc = include_str!("../../../book/src/midpoint-approximation.md")]
    mod midpoint_approximation {}
    #[doc = include_str!("../../../book/src/ellipsoids.md")]
    mod ellipsoids {}
    #[doc = include_str!("../../../book/src/branch-and-bound.md")]
    mod branch_and_bound {}
    #[doc = include_str!("../../../book/src/submodularity.md")]
    mod submodularity {}
    #[doc = include_str!("../../../book/src/mip-emission.md")]
    mod mip_emission {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
