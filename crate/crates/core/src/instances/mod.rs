//! Combinatorial feasible sets and the nominal minimization oracle.
//!
//! Two families are supported: simple source→target paths in a directed
//! graph, and the uniform matroid "pick exactly `p` of `n` items". Every
//! solver in the crate reduces its work to calls of [`nominal_solve`].

mod graph;
mod nominal;
mod pairs;
mod synthetic;

use std::sync::Arc;

use fixedbitset::FixedBitSet;

pub use graph::Graph;
pub use nominal::nominal_solve;
pub use pairs::{hop_distances, sample_st_pairs};
pub use synthetic::{gen_synthetic, NoiseModel, SyntheticSpec};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum Instance {
    /// Simple paths from `source` to `target`; item `i` is arc `i`.
    ShortestPath { graph: Arc<Graph>, source: usize, target: usize },
    /// All subsets of `{0, .., n-1}` with exactly `p` elements.
    Selection { n: usize, p: usize },
}

impl Instance {
    pub fn shortest_path(graph: Arc<Graph>, source: usize, target: usize) -> Result<Self> {
        let nodes = graph.num_nodes();
        if source >= nodes || target >= nodes {
            return Err(Error::invalid(format!(
                "source {source} / target {target} must be below {nodes}"
            )));
        }
        if source == target {
            return Err(Error::invalid("source and target must differ"));
        }
        Ok(Instance::ShortestPath { graph, source, target })
    }

    pub fn selection(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::invalid(format!("selection needs 0 < p <= n, got n={n} p={p}")));
        }
        Ok(Instance::Selection { n, p })
    }

    /// Number of items.
    pub fn n(&self) -> usize {
        match self {
            Instance::ShortestPath { graph, .. } => graph.num_arcs(),
            Instance::Selection { n, .. } => *n,
        }
    }

    /// Membership test for the feasible set.
    pub fn contains(&self, x: &[bool]) -> bool {
        if x.len() != self.n() {
            return false;
        }
        match self {
            Instance::Selection { p, .. } => x.iter().filter(|&&b| b).count() == *p,
            Instance::ShortestPath { graph, source, target } => {
                is_simple_path(graph, *source, *target, x)
            }
        }
    }

    /// Lists every member of the feasible set, failing once more than `cap`
    /// members have been found.
    ///
    /// Selection members come out in lexicographic order of their item
    /// lists; paths in depth-first order over out-arcs.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<Vec<bool>>> {
        match self {
            Instance::Selection { n, p } => enumerate_subsets(*n, *p, cap),
            Instance::ShortestPath { graph, source, target } => {
                enumerate_paths(graph, *source, *target, cap)
            }
        }
    }
}

/// A member of the feasible set together with its cost under the vector it
/// was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<bool>,
    pub value: f64,
}

impl Solution {
    pub fn new(x: Vec<bool>, costs: &[f64]) -> Self {
        let value = dot(costs, &x);
        Solution { x, value }
    }

    pub fn items(&self) -> Vec<usize> {
        items(&self.x)
    }
}

/// Chosen item indices of an incidence vector.
pub fn items(x: &[bool]) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

pub fn incidence(n: usize, items: &[usize]) -> Vec<bool> {
    let mut x = vec![false; n];
    for &i in items {
        x[i] = true;
    }
    x
}

/// `costs · x`, summed in item order.
pub fn dot(costs: &[f64], x: &[bool]) -> f64 {
    costs.iter().zip(x).filter(|(_, &b)| b).map(|(c, _)| c).sum()
}

/// Deterministic tie-break between two feasible solutions of equal cost.
///
/// `a` precedes `b` when the smallest item in which they differ belongs to
/// `a`. For equal-size sets this is exactly "lexicographically smallest
/// sorted item list"; for sets of different size it stays consistent under
/// adding a common item, which label-setting path search relies on.
pub fn tie_precedes(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(&x, _)| x)
}

pub(crate) fn tie_precedes_bits(a: &FixedBitSet, b: &FixedBitSet) -> bool {
    // lowest differing bit, scanned block by block
    for (wa, wb) in a.as_slice().iter().zip(b.as_slice()) {
        let diff = wa ^ wb;
        if diff != 0 {
            return wa & (diff & diff.wrapping_neg()) != 0;
        }
    }
    false
}

/// `a` is strictly better than `b`: lower value beyond `tol`, or within
/// `tol` and earlier in tie order.
pub(crate) fn better(a_value: f64, a_x: &[bool], b_value: f64, b_x: &[bool], tol: f64) -> bool {
    if a_value < b_value - tol {
        true
    } else if a_value > b_value + tol {
        false
    } else {
        tie_precedes(a_x, b_x)
    }
}

fn is_simple_path(graph: &Graph, source: usize, target: usize, x: &[bool]) -> bool {
    let mut next = vec![None; graph.num_nodes()];
    let mut count = 0;
    for (i, &on) in x.iter().enumerate() {
        if on {
            let (t, _) = graph.arc(i);
            if next[t].is_some() {
                return false;
            }
            next[t] = Some(i);
            count += 1;
        }
    }
    let mut visited = vec![false; graph.num_nodes()];
    let mut node = source;
    let mut walked = 0;
    visited[node] = true;
    while node != target {
        let Some(arc) = next[node] else { return false };
        node = graph.arc(arc).1;
        if visited[node] {
            return false;
        }
        visited[node] = true;
        walked += 1;
    }
    walked == count
}

fn enumerate_subsets(n: usize, p: usize, cap: usize) -> Result<Vec<Vec<bool>>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        if out.len() == cap {
            return Err(Error::CapExceeded(format!("more than {cap} subsets of size {p} from {n}")));
        }
        out.push(incidence(n, &idx));
        // advance to the next combination in lexicographic order
        let Some(pos) = (0..p).rev().find(|&k| idx[k] < n - p + k) else {
            return Ok(out);
        };
        idx[pos] += 1;
        for k in pos + 1..p {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

fn enumerate_paths(graph: &Graph, source: usize, target: usize, cap: usize) -> Result<Vec<Vec<bool>>> {
    struct Walk<'a> {
        graph: &'a Graph,
        target: usize,
        cap: usize,
        visited: Vec<bool>,
        x: Vec<bool>,
        out: Vec<Vec<bool>>,
    }
    impl Walk<'_> {
        fn go(&mut self, node: usize) -> Result<()> {
            if node == self.target {
                if self.out.len() == self.cap {
                    return Err(Error::CapExceeded(format!("more than {} paths", self.cap)));
                }
                self.out.push(self.x.clone());
                return Ok(());
            }
            for &a in self.graph.out_arcs(node) {
                let head = self.graph.arc(a).1;
                if self.visited[head] {
                    continue;
                }
                self.visited[head] = true;
                self.x[a] = true;
                self.go(head)?;
                self.x[a] = false;
                self.visited[head] = false;
            }
            Ok(())
        }
    }
    let mut walk = Walk {
        graph,
        target,
        cap,
        visited: vec![false; graph.num_nodes()],
        x: vec![false; graph.num_arcs()],
        out: Vec::new(),
    };
    walk.visited[source] = true;
    walk.go(source)?;
    Ok(walk.out)
}
