//! Mixed-integer models in CPLEX LP format.
//!
//! Variables are `x_<i>` (binary, declared `General` with bounds `[0, 1]`),
//! `pi_<j>` and `rho_<j>_<i>` for budgeted components, `alpha_<j>_<r>` for
//! polyhedral ones, `y_<j>` for hull epigraphs and `one` (fixed to 1) when
//! the objective has a constant. Rows and variables appear in a fixed order:
//! components first, then the feasible-set rows.
//!
//! Shortest paths are encoded by unit flow conservation. The encoding also
//! admits a path plus disjoint cycles; with nonnegative costs these never
//! lower the objective.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::budgeted_dual;
use crate::error::{Error, Result};
use crate::instances::{dot, Instance};
use crate::solvers::evaluate_wrp;
use crate::uncertainty::{Mixture, UncertaintySet};

/// Absolute tolerance for feasibility and objective checks on parsed files.
pub const EMIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelStats {
    pub num_binary: usize,
    pub num_continuous: usize,
    pub num_constraints: usize,
    pub objective_constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Sense {
    Ge,
    Le,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Ge => ">=",
            Sense::Le => "<=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    name: String,
    terms: Vec<(f64, String)>,
    sense: Sense,
    rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Bound {
    Range(f64, f64),
    Lower(f64),
    Free,
    Fixed(f64),
}

/// In-memory LP model, as written to and parsed back from a file.
#[derive(Debug, Clone, PartialEq)]
struct LpModel {
    objective: Vec<(f64, String)>,
    rows: Vec<Row>,
    bounds: Vec<(String, Bound)>,
    general: Vec<String>,
}

fn x(i: usize) -> String {
    format!("x_{i}")
}

fn build(inst: &Instance, mix: &Mixture) -> Result<(LpModel, ModelStats)> {
    if inst.n() != mix.n() {
        return Err(Error::invalid(format!("mixture has {} items, instance has {}", mix.n(), inst.n())));
    }
    let n = mix.n();
    let mut x_coef = vec![0.0; n];
    let mut extra: Vec<(f64, String)> = Vec::new();
    let mut rows = Vec::new();
    let mut bounds: Vec<(String, Bound)> = (0..n).map(|i| (x(i), Bound::Range(0.0, 1.0))).collect();
    let mut continuous = 0;
    let constant = 0.0;

    for (j, c) in mix.components().iter().enumerate() {
        let p = c.weight;
        match &c.set {
            UncertaintySet::Interval(s) => {
                for (acc, h) in x_coef.iter_mut().zip(s.hi()) {
                    *acc += p * h;
                }
            }
            UncertaintySet::Budgeted(s) => {
                for (acc, l) in x_coef.iter_mut().zip(s.lo()) {
                    *acc += p * l;
                }
                let pi = format!("pi_{j}");
                extra.push((p * s.gamma() as f64, pi.clone()));
                bounds.push((pi.clone(), Bound::Lower(0.0)));
                for i in 0..n {
                    let rho = format!("rho_{j}_{i}");
                    extra.push((p, rho.clone()));
                    bounds.push((rho.clone(), Bound::Lower(0.0)));
                    rows.push(Row {
                        name: format!("dual_{j}_{i}"),
                        terms: vec![(1.0, pi.clone()), (1.0, rho), (-s.deviation(i), x(i))],
                        sense: Sense::Ge,
                        rhs: 0.0,
                    });
                }
                continuous += 1 + n;
            }
            UncertaintySet::Hull(s) => {
                let y = format!("y_{j}");
                extra.push((p, y.clone()));
                bounds.push((y.clone(), Bound::Free));
                for (k, point) in s.points().iter().enumerate() {
                    let mut terms = vec![(1.0, y.clone())];
                    terms.extend(point.iter().enumerate().map(|(i, &v)| (-v, x(i))));
                    rows.push(Row { name: format!("epi_{j}_{k}"), terms, sense: Sense::Ge, rhs: 0.0 });
                }
                continuous += 1;
            }
            UncertaintySet::Polyhedron(s) => {
                let m = s.d().len();
                for r in 0..m {
                    let alpha = format!("alpha_{j}_{r}");
                    extra.push((p * s.d()[r], alpha.clone()));
                    bounds.push((alpha, Bound::Lower(0.0)));
                }
                for i in 0..n {
                    let mut terms: Vec<(f64, String)> = (0..m).map(|r| (s.v()[r][i], format!("alpha_{j}_{r}"))).collect();
                    terms.push((-1.0, x(i)));
                    rows.push(Row { name: format!("poly_{j}_{i}"), terms, sense: Sense::Ge, rhs: 0.0 });
                }
                continuous += m;
            }
            UncertaintySet::Ellipsoid(_) => {
                return Err(Error::Unsupported(format!(
                    "component {j}: conic objective unsupported in LP format"
                )))
            }
        }
    }

    match inst {
        Instance::Selection { n, p } => rows.push(Row {
            name: "card".into(),
            terms: (0..*n).map(|i| (1.0, x(i))).collect(),
            sense: Sense::Eq,
            rhs: *p as f64,
        }),
        Instance::ShortestPath { graph, source, target } => {
            for v in 0..graph.num_nodes() {
                let mut terms: Vec<(f64, String)> = graph.out_arcs(v).iter().map(|&a| (1.0, x(a))).collect();
                terms.extend(graph.in_arcs(v).iter().map(|&a| (-1.0, x(a))));
                let rhs = if v == *source {
                    1.0
                } else if v == *target {
                    -1.0
                } else {
                    0.0
                };
                if terms.is_empty() {
                    if rhs != 0.0 {
                        return Err(Error::Infeasible(format!("node {v} has no arcs")));
                    }
                    continue;
                }
                terms.sort_by(|a, b| a.1.cmp(&b.1));
                rows.push(Row { name: format!("flow_{v}"), terms, sense: Sense::Eq, rhs });
            }
        }
    }

    let mut objective: Vec<(f64, String)> = x_coef.iter().enumerate().map(|(i, &c)| (c, x(i))).collect();
    objective.extend(extra);
    if constant != 0.0 {
        objective.push((constant, "one".into()));
        bounds.push(("one".into(), Bound::Fixed(1.0)));
        continuous += 1;
    }
    let stats = ModelStats {
        num_binary: n,
        num_continuous: continuous,
        num_constraints: rows.len(),
        objective_constant: constant,
    };
    let model = LpModel { objective, rows, bounds, general: (0..n).map(x).collect() };
    Ok((model, stats))
}

const TERMS_PER_LINE: usize = 6;

fn write_terms(out: &mut String, terms: &[(f64, String)]) {
    for (k, (c, v)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c.is_sign_negative() { '-' } else { '+' };
        write!(out, " {sign} {} {v}", c.abs()).unwrap();
    }
}

fn render(model: &LpModel) -> String {
    let mut out = String::from("\\ robustmix mixture model\nMinimize\n obj:");
    write_terms(&mut out, &model.objective);
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        write!(out, " {}:", row.name).unwrap();
        write_terms(&mut out, &row.terms);
        writeln!(out, " {} {}", row.sense.symbol(), row.rhs).unwrap();
    }
    out.push_str("Bounds\n");
    for (v, b) in &model.bounds {
        match b {
            Bound::Range(lo, hi) => writeln!(out, " {lo} <= {v} <= {hi}"),
            Bound::Lower(lo) => writeln!(out, " {v} >= {lo}"),
            Bound::Free => writeln!(out, " {v} free"),
            Bound::Fixed(val) => writeln!(out, " {v} = {val}"),
        }
        .unwrap();
    }
    out.push_str("General\n");
    for chunk in model.general.chunks(TERMS_PER_LINE) {
        writeln!(out, " {}", chunk.join(" ")).unwrap();
    }
    out.push_str("End\n");
    out
}

/// The LP text and its statistics, without touching the file system.
pub fn render_model(inst: &Instance, mix: &Mixture) -> Result<(String, ModelStats)> {
    let (model, stats) = build(inst, mix)?;
    Ok((render(&model), stats))
}

/// Writes the model for `min_{x ∈ X} Σ_j p_j max_{c ∈ U_j} c·x` to `out`.
///
/// Per budgeted component: `pi_j`, `n` variables `rho_j_i` and `n` dual
/// rows. Per hull component: `y_j` and one epigraph row per point. Per
/// polyhedral component: one `alpha` per row of `V` and `n` dual rows.
/// Interval components only add objective coefficients. Ellipsoids are
/// rejected.
pub fn emit_model(inst: &Instance, mix: &Mixture, out: &Path) -> Result<ModelStats> {
    let (text, stats) = render_model(inst, mix)?;
    std::fs::write(out, text).map_err(|e| Error::io(out, e))?;
    Ok(stats)
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    let v = match tok {
        "inf" | "+inf" | "infinity" | "+infinity" => f64::INFINITY,
        "-inf" | "-infinity" => f64::NEG_INFINITY,
        _ => tok.parse().map_err(|_| Error::parse(line, format!("expected a number, found `{tok}`")))?,
    };
    Ok(v)
}

/// Parses `[+|-] coef var` sequences.
fn parse_terms(tokens: &[(usize, &str)]) -> Result<Vec<(f64, String)>> {
    let mut terms = Vec::new();
    let mut k = 0;
    while k < tokens.len() {
        let (line, tok) = tokens[k];
        let sign = match tok {
            "+" => 1.0,
            "-" => -1.0,
            _ => return Err(Error::parse(line, format!("expected `+` or `-`, found `{tok}`"))),
        };
        let (Some(&(_, coef)), Some(&(_, var))) = (tokens.get(k + 1), tokens.get(k + 2)) else {
            return Err(Error::parse(line, "truncated term"));
        };
        terms.push((sign * parse_number(coef, line)?, var.to_string()));
        k += 3;
    }
    Ok(terms)
}

fn parse(text: &str) -> Result<LpModel> {
    #[derive(PartialEq)]
    enum Section {
        Start,
        Objective,
        Rows,
        Bounds,
        General,
        End,
    }
    let mut section = Section::Start;
    let mut objective: Vec<(usize, &str)> = Vec::new();
    let mut row_tokens: Vec<(usize, &str)> = Vec::new();
    let mut bounds = Vec::new();
    let mut general = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('\\').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let next = match content {
            "Minimize" => Some(Section::Objective),
            "Subject To" => Some(Section::Rows),
            "Bounds" => Some(Section::Bounds),
            "General" => Some(Section::General),
            "End" => Some(Section::End),
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        let tokens = content.split_whitespace().map(|t| (line, t));
        match section {
            Section::Start => return Err(Error::parse(line, "content before `Minimize`")),
            Section::End => return Err(Error::parse(line, "content after `End`")),
            Section::Objective => objective.extend(tokens),
            Section::Rows => row_tokens.extend(tokens),
            Section::Bounds => {
                let t: Vec<&str> = content.split_whitespace().collect();
                let b = match t.as_slice() {
                    [lo, "<=", v, "<=", hi] => (v.to_string(), Bound::Range(parse_number(lo, line)?, parse_number(hi, line)?)),
                    [v, ">=", lo] => (v.to_string(), Bound::Lower(parse_number(lo, line)?)),
                    [v, "free"] => (v.to_string(), Bound::Free),
                    [v, "=", val] => (v.to_string(), Bound::Fixed(parse_number(val, line)?)),
                    _ => return Err(Error::parse(line, format!("unrecognized bound `{content}`"))),
                };
                bounds.push(b);
            }
            Section::General => general.extend(content.split_whitespace().map(String::from)),
        }
    }
    if section != Section::End {
        return Err(Error::parse(text.lines().count(), "missing `End`"));
    }

    let Some(((line, label), obj_terms)) = objective.split_first() else {
        return Err(Error::parse(0, "empty objective"));
    };
    if !label.ends_with(':') {
        return Err(Error::parse(*line, "objective needs a label"));
    }
    let objective = parse_terms(obj_terms)?;

    let mut rows = Vec::new();
    let mut k = 0;
    while k < row_tokens.len() {
        let (line, label) = row_tokens[k];
        let Some(name) = label.strip_suffix(':') else {
            return Err(Error::parse(line, format!("expected a row label, found `{label}`")));
        };
        let rel = row_tokens[k + 1..]
            .iter()
            .position(|(_, t)| matches!(*t, ">=" | "<=" | "="))
            .ok_or_else(|| Error::parse(line, format!("row `{name}` has no relation")))?
            + k
            + 1;
        let terms = parse_terms(&row_tokens[k + 1..rel])?;
        let sense = match row_tokens[rel].1 {
            ">=" => Sense::Ge,
            "<=" => Sense::Le,
            _ => Sense::Eq,
        };
        let &(rline, rhs) = row_tokens.get(rel + 1).ok_or_else(|| Error::parse(line, "missing right-hand side"))?;
        rows.push(Row { name: name.to_string(), terms, sense, rhs: parse_number(rhs, rline)? });
        k = rel + 2;
    }
    Ok(LpModel { objective, rows, bounds, general })
}

/// Outcome of [`check_emitted`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmitCheck {
    /// Row and variable counts match the model built from `(inst, mix)`,
    /// and every referenced variable is declared.
    pub structure_ok: bool,
    /// The completed point satisfies every row and bound of the file.
    pub feasible: bool,
    pub objective_match: bool,
    /// Objective of the file at the completed point.
    pub file_objective: f64,
    /// `evaluate_wrp(mix, x)`.
    pub expected: f64,
}

impl EmitCheck {
    pub fn ok(&self) -> bool {
        self.structure_ok && self.feasible && self.objective_match
    }
}

/// Re-reads an emitted file, fixes `x`, fills in the continuous variables
/// with their optimal values (closed-form duals for budgeted rows, the
/// largest point value for epigraph rows) and compares the file's objective
/// with [`evaluate_wrp`].
///
/// A file that does not parse gives [`Error::Parse`]; a parsed file that
/// disagrees with the model gives a report with failing flags.
pub fn check_emitted(inst: &Instance, mix: &Mixture, x: &[bool], path: &Path) -> Result<EmitCheck> {
    if mix.components().iter().any(|c| matches!(c.set, UncertaintySet::Polyhedron(_))) {
        return Err(Error::Unsupported("polyhedral components have no closed-form completion".into()));
    }
    if !inst.contains(x) {
        return Err(Error::invalid("x is not a feasible solution of the instance"));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = parse(&text)?;
    let (model, stats) = build(inst, mix)?;

    let mut values: HashMap<String, f64> = (0..x.len()).map(|i| (format!("x_{i}"), if x[i] { 1.0 } else { 0.0 })).collect();
    values.insert("one".into(), 1.0);
    for (j, c) in mix.components().iter().enumerate() {
        match &c.set {
            UncertaintySet::Budgeted(s) => {
                let (pi, rho) = budgeted_dual(s, x);
                values.insert(format!("pi_{j}"), pi);
                for (i, r) in rho.into_iter().enumerate() {
                    values.insert(format!("rho_{j}_{i}"), r);
                }
            }
            UncertaintySet::Hull(s) => {
                let y = s.points().iter().map(|p| dot(p, x)).fold(f64::NEG_INFINITY, f64::max);
                values.insert(format!("y_{j}"), y);
            }
            _ => {}
        }
    }

    let declared: BTreeMap<&str, &Bound> = file.bounds.iter().map(|(v, b)| (v.as_str(), b)).collect();
    let referenced = file.objective.iter().chain(file.rows.iter().flat_map(|r| &r.terms)).map(|(_, v)| v.as_str());
    let all_declared = referenced.clone().all(|v| declared.contains_key(v));
    let binaries = file.general.len();
    let continuous = declared.len().saturating_sub(binaries);
    let names_match = file.rows.iter().map(|r| &r.name).eq(model.rows.iter().map(|r| &r.name));
    let structure_ok = all_declared
        && names_match
        && file.rows.len() == stats.num_constraints
        && binaries == stats.num_binary
        && continuous == stats.num_continuous;

    let eval = |terms: &[(f64, String)]| -> Option<f64> {
        terms.iter().map(|(c, v)| values.get(v).map(|val| c * val)).sum()
    };
    let rows_ok = file.rows.iter().all(|r| {
        eval(&r.terms).is_some_and(|lhs| match r.sense {
            Sense::Ge => lhs >= r.rhs - EMIT_TOL,
            Sense::Le => lhs <= r.rhs + EMIT_TOL,
            Sense::Eq => (lhs - r.rhs).abs() <= EMIT_TOL,
        })
    });
    let bounds_ok = file.bounds.iter().all(|(v, b)| {
        values.get(v).is_some_and(|&val| match b {
            Bound::Range(lo, hi) => val >= lo - EMIT_TOL && val <= hi + EMIT_TOL,
            Bound::Lower(lo) => val >= lo - EMIT_TOL,
            Bound::Free => true,
            Bound::Fixed(f) => (val - f).abs() <= EMIT_TOL,
        })
    });
    let expected = evaluate_wrp(mix, x)?;
    let file_objective = eval(&file.objective).unwrap_or(f64::NAN);
    Ok(EmitCheck {
        structure_ok,
        feasible: rows_ok && bounds_ok,
        objective_match: (file_objective - expected).abs() <= EMIT_TOL,
        file_objective,
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::fixtures::diamond_instance;

    fn budgeted() -> Mixture {
        Mixture::single(UncertaintySet::budgeted(vec![1.0, 2.0], vec![4.0, 2.5], 1).unwrap())
    }

    #[test]
    fn selection_budgeted_counts() {
        let (text, stats) = render_model(&Instance::selection(2, 1).unwrap(), &budgeted()).unwrap();
        assert_eq!(
            stats,
            ModelStats { num_binary: 2, num_continuous: 3, num_constraints: 3, objective_constant: 0.0 }
        );
        assert!(text.contains(" dual_0_0: + 1 pi_0 + 1 rho_0_0 - 3 x_0 >= 0\n"));
        assert!(text.contains(" card: + 1 x_0 + 1 x_1 = 1\n"));
        assert_eq!(parse(&text).unwrap(), build(&Instance::selection(2, 1).unwrap(), &budgeted()).unwrap().0);
    }

    #[test]
    fn diamond_hull_counts() {
        let mix = Mixture::single(UncertaintySet::hull(vec![vec![1.0, 1.0, 5.0, 5.0], vec![5.0, 5.0, 1.0, 1.0]]).unwrap());
        let (text, stats) = render_model(&diamond_instance(), &mix).unwrap();
        assert_eq!((stats.num_binary, stats.num_continuous, stats.num_constraints), (4, 1, 6));
        assert!(text.contains(" flow_0: + 1 x_0 + 1 x_2 = 1\n"));
        assert!(text.contains(" flow_3: - 1 x_1 - 1 x_3 = -1\n"));
        assert!(text.contains(" y_0 free\n"));
    }

    #[test]
    fn ellipsoid_rejected() {
        let e = UncertaintySet::ellipsoid(vec![1.0, 1.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0).unwrap();
        let err = render_model(&Instance::selection(2, 1).unwrap(), &Mixture::single(e)).unwrap_err();
        assert!(err.to_string().contains("conic objective unsupported in LP format"));
    }

    #[test]
    fn polyhedron_rows() {
        let poly = UncertaintySet::polyhedron(vec![vec![1.0, 1.0], vec![1.0, 0.0]], vec![5.0, 2.0]).unwrap();
        let (text, stats) = render_model(&Instance::selection(2, 1).unwrap(), &Mixture::single(poly)).unwrap();
        assert_eq!((stats.num_continuous, stats.num_constraints), (2, 3));
        assert!(text.contains(" poly_0_1: + 1 alpha_0_0 + 0 alpha_0_1 - 1 x_1 >= 0\n"));
        assert!(text.contains(" obj: + 0 x_0 + 0 x_1 + 5 alpha_0_0 + 2 alpha_0_1\n"));
    }

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.lp");
        let inst = Instance::selection(2, 1).unwrap();
        let mix = budgeted();
        emit_model(&inst, &mix, &path).unwrap();
        let check = check_emitted(&inst, &mix, &[true, false], &path).unwrap();
        assert!(check.ok(), "{check:?}");
        assert_eq!(check.expected, 4.0);

        let text = std::fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().filter(|l| !l.contains("dual_0_0")).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, cut).unwrap();
        let check = check_emitted(&inst, &mix, &[true, false], &path).unwrap();
        assert!(!check.structure_ok);

        std::fs::write(&path, text.replace("End\n", "")).unwrap();
        assert!(matches!(check_emitted(&inst, &mix, &[true, false], &path), Err(Error::Parse { .. })));
    }

    #[test]
    fn long_rows_wrap() {
        let inst = Instance::selection(20, 3).unwrap();
        let mix = Mixture::single(UncertaintySet::interval(vec![0.0; 20], (0..20).map(|i| i as f64).collect()).unwrap());
        let (text, _) = render_model(&inst, &mix).unwrap();
        assert!(text.lines().all(|l| l.len() < 255));
        assert_eq!(parse(&text).unwrap(), build(&inst, &mix).unwrap().0);
    }
}
