//! Test-side oracles and generators, written against the public data
//! accessors only.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use robustmix::instances::{Graph, Instance};
use robustmix::uncertainty::{Mixture, UncertaintySet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Grid with right and down arcs, node `(r, c)` = `r * w + c`.
pub fn grid(w: usize, h: usize) -> Arc<Graph> {
    let mut arcs = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let v = r * w + c;
            if c + 1 < w {
                arcs.push((v, v + 1));
            }
            if r + 1 < h {
                arcs.push((v, v + w));
            }
        }
    }
    Arc::new(Graph::new(w * h, arcs).unwrap())
}

pub fn random_selection(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(1..=10);
    Instance::selection(n, rng.random_range(1..=n)).unwrap()
}

/// Random grid of at most 4×4 with a source above-left of the target.
pub fn random_grid_path(rng: &mut ChaCha8Rng) -> Instance {
    let (w, h) = (rng.random_range(2..=4), rng.random_range(2..=4));
    loop {
        let (r1, c1) = (rng.random_range(0..h), rng.random_range(0..w));
        let (r2, c2) = (rng.random_range(r1..h), rng.random_range(c1..w));
        if (r1, c1) != (r2, c2) {
            return Instance::shortest_path(grid(w, h), r1 * w + c1, r2 * w + c2).unwrap();
        }
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    if rng.random_bool(0.5) {
        random_selection(rng)
    } else {
        random_grid_path(rng)
    }
}

fn vector(rng: &mut ChaCha8Rng, n: usize, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..hi)).collect()
}

pub fn interval(rng: &mut ChaCha8Rng, n: usize) -> UncertaintySet {
    let lo = vector(rng, n, 10.0);
    let hi = lo.iter().map(|l| l + rng.random_range(0.0..5.0)).collect();
    UncertaintySet::interval(lo, hi).unwrap()
}

pub fn budgeted(rng: &mut ChaCha8Rng, n: usize) -> UncertaintySet {
    let lo = vector(rng, n, 10.0);
    let hi = lo.iter().map(|l| l + rng.random_range(0.0..8.0)).collect();
    UncertaintySet::budgeted(lo, hi, rng.random_range(0..=n)).unwrap()
}

pub fn hull(rng: &mut ChaCha8Rng, n: usize) -> UncertaintySet {
    let k = rng.random_range(1..=4);
    UncertaintySet::hull((0..k).map(|_| vector(rng, n, 10.0)).collect()).unwrap()
}

pub fn diagonal_ellipsoid(rng: &mut ChaCha8Rng, n: usize) -> UncertaintySet {
    let mu = vector(rng, n, 10.0);
    let var = vector(rng, n, 4.0);
    let sigma = (0..n).map(|i| (0..n).map(|j| if i == j { var[i] } else { 0.0 }).collect()).collect();
    UncertaintySet::ellipsoid(mu, sigma, rng.random_range(0.0..5.0)).unwrap()
}

/// `Σ = A Aᵀ` with a random `n × n` factor.
pub fn full_ellipsoid(rng: &mut ChaCha8Rng, n: usize) -> UncertaintySet {
    let mu = vector(rng, n, 10.0);
    let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let sigma = (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * a[j][k]).sum()).collect()).collect();
    UncertaintySet::ellipsoid(mu, sigma, rng.random_range(0.0..5.0)).unwrap()
}

pub fn mixture(rng: &mut ChaCha8Rng, sets: Vec<UncertaintySet>) -> Mixture {
    Mixture::from_pairs(sets.into_iter().map(|s| (rng.random_range(0.1..1.0), s))).unwrap()
}

/// Feasible set by exhaustive bitmask (selection) or depth-first search (paths).
pub fn feasible_set(inst: &Instance) -> Vec<Vec<bool>> {
    match inst {
        Instance::Selection { n, p } => (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == *p)
            .map(|m| (0..*n).map(|i| m >> i & 1 == 1).collect())
            .collect(),
        Instance::ShortestPath { graph, source, target } => {
            let mut out = Vec::new();
            let mut arcs = Vec::new();
            let mut seen = HashSet::from([*source]);
            paths(graph, *source, *target, &mut seen, &mut arcs, &mut out);
            out
        }
    }
}

fn paths(g: &Graph, v: usize, t: usize, seen: &mut HashSet<usize>, arcs: &mut Vec<usize>, out: &mut Vec<Vec<bool>>) {
    if v == t {
        let mut x = vec![false; g.num_arcs()];
        for &a in arcs.iter() {
            x[a] = true;
        }
        out.push(x);
        return;
    }
    for (a, &(tail, head)) in g.arcs().iter().enumerate() {
        if tail == v && seen.insert(head) {
            arcs.push(a);
            paths(g, head, t, seen, arcs, out);
            arcs.pop();
            seen.remove(&head);
        }
    }
}

fn dot(c: &[f64], x: &[bool]) -> f64 {
    c.iter().zip(x).filter(|(_, &b)| b).map(|(v, _)| v).sum()
}

/// Worst case by definition: budgeted by trying every deviating subset of
/// the chosen items, ellipsoids by the support formula.
pub fn worst_case(set: &UncertaintySet, x: &[bool]) -> f64 {
    match set {
        UncertaintySet::Interval(s) => dot(s.hi(), x),
        UncertaintySet::Hull(s) => s.points().iter().map(|p| dot(p, x)).fold(f64::NEG_INFINITY, f64::max),
        UncertaintySet::Budgeted(s) => {
            let chosen: Vec<usize> = (0..x.len()).filter(|&i| x[i]).collect();
            let base = dot(s.lo(), x);
            (0u32..1 << chosen.len())
                .filter(|m| m.count_ones() as usize <= s.gamma())
                .map(|m| {
                    base + chosen
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| m >> k & 1 == 1)
                        .map(|(_, &i)| s.hi()[i] - s.lo()[i])
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }
        UncertaintySet::Ellipsoid(s) => {
            let idx: Vec<usize> = (0..x.len()).filter(|&i| x[i]).collect();
            let q: f64 = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| s.sigma()[i][j]).sum();
            dot(s.mu(), x) + (s.lambda() * q.max(0.0)).sqrt()
        }
        UncertaintySet::Polyhedron(_) => panic!("no closed form"),
    }
}

pub fn objective(mix: &Mixture, x: &[bool]) -> f64 {
    mix.components().iter().map(|c| c.weight * worst_case(&c.set, x)).sum()
}

/// Optimal value by exhaustive search.
pub fn optimum(inst: &Instance, mix: &Mixture) -> f64 {
    feasible_set(inst).iter().map(|x| objective(mix, x)).fold(f64::INFINITY, f64::min)
}

/// Strict reader for the LP subset the emitter produces. Checks section
/// order, line shapes, unique row names, complete rows, and that every
/// variable in the objective and rows is declared under `Bounds`.
pub fn check_lp_grammar(text: &str) -> Result<(), String> {
    let num = r"[0-9]+(?:\.[0-9]+)?(?:e[+-]?[0-9]+)?";
    let name = r"[A-Za-z_][A-Za-z0-9_]*";
    let term = format!(r" [+-] {num} {name}");
    let rel = format!(r" (?:>=|<=|=) -?{num}");
    let obj_first = Regex::new(&format!(r"^ obj:(?:{term})+$")).unwrap();
    let cont = Regex::new(&format!(r"^ +(?:{term})+(?:{rel})?$")).unwrap();
    let row_first = Regex::new(&format!(r"^ ({name}):(?:{term})+(?:{rel})?$")).unwrap();
    let bound = Regex::new(&format!(
        r"^ (?:-?{num} <= ({name}) <= -?{num}|({name}) >= -?{num}|({name}) free|({name}) = -?{num})$"
    ))
    .unwrap();
    let general = Regex::new(&format!(r"^(?: {name})+$")).unwrap();
    let var = Regex::new(&format!(r" [+-] {num} ({name})")).unwrap();
    let ends_row = Regex::new(&format!(r"{rel}$")).unwrap();

    let headers = ["Minimize", "Subject To", "Bounds", "General", "End"];
    let mut section = 0usize;
    let mut referenced = BTreeSet::new();
    let mut declared = BTreeSet::new();
    let mut generals = BTreeSet::new();
    let mut rows = HashSet::new();
    let mut open_row = false;
    let mut seen_objective = false;
    for (k, line) in text.lines().enumerate() {
        let at = |msg: &str| format!("line {}: {msg}: `{line}`", k + 1);
        if line.starts_with('\\') {
            continue;
        }
        if let Some(h) = headers.iter().position(|h| *h == line) {
            if h != section {
                return Err(at("section out of order"));
            }
            if open_row {
                return Err(at("row without relation"));
            }
            section = h + 1;
            continue;
        }
        match section {
            1 => {
                let ok = if seen_objective { cont.is_match(line) } else { obj_first.is_match(line) };
                if !ok {
                    return Err(at("bad objective line"));
                }
                seen_objective = true;
            }
            2 => {
                if open_row {
                    if !cont.is_match(line) {
                        return Err(at("bad continuation"));
                    }
                } else {
                    let Some(c) = row_first.captures(line) else { return Err(at("bad row")) };
                    if !rows.insert(c[1].to_string()) {
                        return Err(at("duplicate row name"));
                    }
                }
                open_row = !ends_row.is_match(line);
            }
            3 => {
                let Some(c) = bound.captures(line) else { return Err(at("bad bound")) };
                let v = (1..=4).find_map(|g| c.get(g)).unwrap().as_str().to_string();
                if !declared.insert(v) {
                    return Err(at("variable bounded twice"));
                }
            }
            4 => {
                if !general.is_match(line) {
                    return Err(at("bad General line"));
                }
                generals.extend(line.split_whitespace().map(String::from));
            }
            _ => return Err(at("content outside a section")),
        }
        if section <= 2 {
            referenced.extend(var.captures_iter(line).map(|c| c[1].to_string()));
        }
    }
    if section != 5 {
        return Err("missing End".into());
    }
    if !seen_objective {
        return Err("empty objective".into());
    }
    if let Some(v) = referenced.iter().find(|v| !declared.contains(*v)) {
        return Err(format!("variable {v} used but not declared"));
    }
    if let Some(v) = generals.iter().find(|v| !declared.contains(*v)) {
        return Err(format!("integer variable {v} has no bounds"));
    }
    Ok(())
}
