//! Uncertainty sets, their worst-case oracles, and the data-driven builders.
//!
//! Every set answers `max { c·x : c ∈ U }` for binary `x` through
//! [`UncertaintySet::worst_case`]. H-representation polyhedra are kept for
//! model emission only; asking them for a worst case is an error.

mod build;
mod mixture;
mod scenarios;

pub use build::{build_set, SetKind, SetSpec};
pub use mixture::{Component, ComponentSpec, Mixture, MixtureSpec};
pub use scenarios::ScenarioMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintySet {
    Interval(IntervalSet),
    Budgeted(BudgetedSet),
    Hull(HullSet),
    Ellipsoid(EllipsoidSet),
    Polyhedron(PolyhedronSet),
}

/// Box `∏ [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Costs `lo_i + z_i (hi_i - lo_i)` with at most `gamma` of the binary `z_i` set.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetedSet {
    lo: Vec<f64>,
    hi: Vec<f64>,
    gamma: usize,
}

/// Convex hull of finitely many cost vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HullSet {
    points: Vec<Vec<f64>>,
}

/// `{ c : (c - mu)ᵀ Σ⁻¹ (c - mu) ≤ lambda }`.
///
/// The nonnegativity restriction `c ≥ 0` is dropped, so the worst case is
/// the closed-form support function and may overestimate the restricted
/// set's worst case.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSet {
    mu: Vec<f64>,
    sigma: Vec<Vec<f64>>,
    lambda: f64,
}

/// `{ c ≥ 0 : V c ≤ d }` with `V` of shape `m × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedronSet {
    v: Vec<Vec<f64>>,
    d: Vec<f64>,
}

/// Result of a worst-case query: the maximal value and a cost vector attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub value: f64,
    pub argmax: Vec<f64>,
}

fn check_vec(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} contains a non-finite entry")))
    }
}

fn check_bounds(lo: &[f64], hi: &[f64]) -> Result<()> {
    if lo.len() != hi.len() {
        return Err(Error::invalid("lower and upper bounds differ in length"));
    }
    check_vec("lower bound", lo)?;
    check_vec("upper bound", hi)?;
    if let Some(i) = (0..lo.len()).find(|&i| lo[i] > hi[i]) {
        return Err(Error::invalid(format!("lo[{i}] = {} exceeds hi[{i}] = {}", lo[i], hi[i])));
    }
    Ok(())
}

impl UncertaintySet {
    pub fn interval(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_bounds(&lo, &hi)?;
        Ok(UncertaintySet::Interval(IntervalSet { lo, hi }))
    }

    pub fn budgeted(lo: Vec<f64>, hi: Vec<f64>, gamma: usize) -> Result<Self> {
        check_bounds(&lo, &hi)?;
        if gamma > lo.len() {
            return Err(Error::invalid(format!("budget {gamma} exceeds dimension {}", lo.len())));
        }
        Ok(UncertaintySet::Budgeted(BudgetedSet { lo, hi, gamma }))
    }

    pub fn hull(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::invalid("hull needs at least one point"));
        };
        let n = first.len();
        for p in &points {
            if p.len() != n {
                return Err(Error::invalid("hull points differ in length"));
            }
            check_vec("hull point", p)?;
        }
        Ok(UncertaintySet::Hull(HullSet { points }))
    }

    /// Validates that `sigma` is square, symmetric, and positive semidefinite
    /// up to an eigenvalue tolerance of `1e-9`.
    pub fn ellipsoid(mu: Vec<f64>, sigma: Vec<Vec<f64>>, lambda: f64) -> Result<Self> {
        let n = mu.len();
        check_vec("mu", &mu)?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("ellipsoid radius {lambda} must be finite and nonnegative")));
        }
        if sigma.len() != n || sigma.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("covariance must be n × n"));
        }
        for row in &sigma {
            check_vec("covariance", row)?;
        }
        let scale = sigma.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        let asymmetric = (0..n).flat_map(|i| (0..i).map(move |j| (i, j)));
        if let Some((i, j)) = asymmetric.into_iter().find(|&(i, j)| (sigma[i][j] - sigma[j][i]).abs() > 1e-9 * scale) {
            return Err(Error::invalid(format!("covariance not symmetric at ({i}, {j})")));
        }
        if !is_psd(&sigma, 1e-9) {
            return Err(Error::invalid("covariance is not positive semidefinite"));
        }
        Ok(UncertaintySet::Ellipsoid(EllipsoidSet { mu, sigma, lambda }))
    }

    pub fn polyhedron(v: Vec<Vec<f64>>, d: Vec<f64>) -> Result<Self> {
        if v.len() != d.len() || v.is_empty() {
            return Err(Error::invalid("polyhedron needs m ≥ 1 rows and matching right-hand side"));
        }
        let n = v[0].len();
        if v.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("polyhedron rows differ in length"));
        }
        for r in &v {
            check_vec("V", r)?;
        }
        check_vec("d", &d)?;
        Ok(UncertaintySet::Polyhedron(PolyhedronSet { v, d }))
    }

    /// Number of items the set is defined over.
    pub fn n(&self) -> usize {
        match self {
            UncertaintySet::Interval(s) => s.lo.len(),
            UncertaintySet::Budgeted(s) => s.lo.len(),
            UncertaintySet::Hull(s) => s.points[0].len(),
            UncertaintySet::Ellipsoid(s) => s.mu.len(),
            UncertaintySet::Polyhedron(s) => s.v[0].len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            UncertaintySet::Interval(_) => "interval",
            UncertaintySet::Budgeted(_) => "budgeted",
            UncertaintySet::Hull(_) => "hull",
            UncertaintySet::Ellipsoid(_) => "ellipsoid",
            UncertaintySet::Polyhedron(_) => "polyhedron",
        }
    }

    fn check_x(&self, x: &[bool]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::invalid(format!("solution has {} items, set has {}", x.len(), self.n())));
        }
        Ok(())
    }

    /// `max { c·x : c ∈ U }` together with a maximizing `c`.
    ///
    /// For interval, hull and budgeted sets the returned value is exactly
    /// `argmax · x`. Hull ties go to the lowest point index.
    pub fn worst_case(&self, x: &[bool]) -> Result<WorstCase> {
        self.check_x(x)?;
        let argmax = match self {
            UncertaintySet::Interval(s) => s.hi.clone(),
            UncertaintySet::Budgeted(s) => s.realization(x),
            UncertaintySet::Hull(s) => s.points[s.argmax(x)].clone(),
            UncertaintySet::Ellipsoid(s) => {
                let sx = s.sigma_x(x);
                let q = quad(&sx, x);
                if q > 0.0 {
                    let scale = (s.lambda / q).sqrt();
                    s.mu.iter().zip(&sx).map(|(m, v)| m + scale * v).collect()
                } else {
                    s.mu.clone()
                }
            }
            UncertaintySet::Polyhedron(_) => return Err(unsupported_polyhedron()),
        };
        let value = match self {
            UncertaintySet::Ellipsoid(s) => s.support(x),
            _ => crate::instances::dot(&argmax, x),
        };
        Ok(WorstCase { value, argmax })
    }

    /// Same value as [`UncertaintySet::worst_case`] without building the maximizer.
    pub fn worst_case_value(&self, x: &[bool]) -> Result<f64> {
        self.check_x(x)?;
        Ok(match self {
            UncertaintySet::Interval(s) => crate::instances::dot(&s.hi, x),
            UncertaintySet::Budgeted(s) => crate::instances::dot(&s.realization(x), x),
            UncertaintySet::Hull(s) => crate::instances::dot(&s.points[s.argmax(x)], x),
            UncertaintySet::Ellipsoid(s) => s.support(x),
            UncertaintySet::Polyhedron(_) => return Err(unsupported_polyhedron()),
        })
    }

    /// A representative member: the point mean for hulls, the box midpoint
    /// for interval and budgeted sets, `mu` for ellipsoids.
    ///
    /// Interval, hull and ellipsoid centers lie in their sets, so
    /// `center·x ≤ worst_case(x)` there. A budgeted midpoint can exceed the
    /// worst case when `Γ < n/2`.
    pub fn center(&self) -> Result<Vec<f64>> {
        Ok(match self {
            UncertaintySet::Interval(IntervalSet { lo, hi }) | UncertaintySet::Budgeted(BudgetedSet { lo, hi, .. }) => {
                lo.iter().zip(hi).map(|(l, h)| (l + h) / 2.0).collect()
            }
            UncertaintySet::Hull(s) => {
                let k = s.points.len() as f64;
                (0..self.n()).map(|i| s.points.iter().map(|p| p[i]).sum::<f64>() / k).collect()
            }
            UncertaintySet::Ellipsoid(s) => s.mu.clone(),
            UncertaintySet::Polyhedron(_) => {
                return Err(Error::Unsupported("polyhedral sets have no center; emit MIP instead".into()))
            }
        })
    }

    /// Width of the set along item `i`: how much the worst case can exceed
    /// the center on that coordinate. Used to pick branching items.
    pub fn spread(&self, i: usize) -> f64 {
        match self {
            UncertaintySet::Interval(IntervalSet { lo, hi }) | UncertaintySet::Budgeted(BudgetedSet { lo, hi, .. }) => {
                hi[i] - lo[i]
            }
            UncertaintySet::Hull(s) => {
                let (lo, hi) = s.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[i]), hi.max(p[i]))
                });
                hi - lo
            }
            UncertaintySet::Ellipsoid(s) => (s.lambda * s.sigma[i][i].max(0.0)).sqrt(),
            UncertaintySet::Polyhedron(_) => 0.0,
        }
    }
}

fn unsupported_polyhedron() -> Error {
    Error::Unsupported("worst case over an H-polyhedron needs an LP: emit MIP instead".into())
}

fn quad(sx: &[f64], x: &[bool]) -> f64 {
    crate::instances::dot(sx, x)
}

impl IntervalSet {
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
}

impl BudgetedSet {
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn deviation(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// Chosen items with the `gamma` largest deviations, ties to lower index.
    /// Fewer are returned when `x` has fewer than `gamma` items.
    pub fn top_deviations(&self, x: &[bool]) -> Vec<usize> {
        let mut chosen = crate::instances::items(x);
        chosen.sort_by(|&a, &b| self.deviation(b).total_cmp(&self.deviation(a)).then(a.cmp(&b)));
        chosen.truncate(self.gamma);
        chosen
    }

    /// The worst-case cost vector for `x`: `lo` raised to `hi` on the top deviations.
    fn realization(&self, x: &[bool]) -> Vec<f64> {
        let mut c = self.lo.clone();
        for i in self.top_deviations(x) {
            c[i] = self.hi[i];
        }
        c
    }
}

impl HullSet {
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    fn argmax(&self, x: &[bool]) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (k, p) in self.points.iter().enumerate() {
            let v = crate::instances::dot(p, x);
            if v > best_val {
                best = k;
                best_val = v;
            }
        }
        best
    }
}

impl EllipsoidSet {
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
    pub fn sigma(&self) -> &[Vec<f64>] {
        &self.sigma
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_diagonal(&self) -> bool {
        self.sigma
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| i == j || v.abs() <= 1e-12))
    }

    fn sigma_x(&self, x: &[bool]) -> Vec<f64> {
        self.sigma.iter().map(|row| crate::instances::dot(row, x)).collect()
    }

    /// `mu·x + sqrt(lambda · xᵀΣx)`, with the radicand clamped at zero.
    fn support(&self, x: &[bool]) -> f64 {
        let q = quad(&self.sigma_x(x), x);
        crate::instances::dot(&self.mu, x) + (self.lambda * q).max(0.0).sqrt()
    }
}

impl PolyhedronSet {
    pub fn v(&self) -> &[Vec<f64>] {
        &self.v
    }
    pub fn d(&self) -> &[f64] {
        &self.d
    }
}

/// Cholesky of `a + tol·I`; succeeds iff the smallest eigenvalue of `a`
/// exceeds `-tol` (up to rounding).
fn is_psd(a: &[Vec<f64>], tol: f64) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j] + if i == j { tol } else { 0.0 };
            s -= l[i][..j].iter().zip(&l[j][..j]).map(|(a, b)| a * b).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}
