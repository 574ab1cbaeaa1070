use std::cmp::Ordering;
use std::collections::BinaryHeap;

use fixedbitset::FixedBitSet;

use super::{tie_precedes_bits, Graph, Instance, Solution};
use crate::error::{Error, Result};

/// Forced arcs beyond this count skip order enumeration and go straight to
/// exhaustive branching.
const MAX_STITCH_ARCS: usize = 4;

/// Minimizes `costs · x` over the feasible set of `inst`, restricted to
/// solutions that contain every item of `forced_in` and none of `forced_out`.
///
/// Among optimal solutions the one earliest in [`super::tie_precedes`] order
/// is returned. For paths this guarantee holds for strictly positive arc
/// costs; with zero-cost arcs the value is still optimal.
pub fn nominal_solve(
    inst: &Instance,
    costs: &[f64],
    forced_in: &[usize],
    forced_out: &[usize],
) -> Result<Solution> {
    let n = inst.n();
    if costs.len() != n {
        return Err(Error::invalid(format!("cost vector has length {}, instance has {n} items", costs.len())));
    }
    if let Some(c) = costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(Error::invalid(format!("costs must be finite and nonnegative, got {c}")));
    }
    let mut must = FixedBitSet::with_capacity(n);
    let mut banned = FixedBitSet::with_capacity(n);
    for &i in forced_in.iter().chain(forced_out) {
        if i >= n {
            return Err(Error::invalid(format!("forced item {i} out of range")));
        }
    }
    must.extend(forced_in.iter().copied());
    banned.extend(forced_out.iter().copied());
    if must.intersection(&banned).next().is_some() {
        return Err(Error::invalid("an item is both forced in and forced out"));
    }

    let x = match inst {
        Instance::Selection { n, p } => select(*n, *p, costs, &must, &banned)?,
        Instance::ShortestPath { graph, source, target } => {
            let path = shortest_path(graph, *source, *target, costs, &must, &banned)?;
            (0..graph.num_arcs()).map(|i| path.contains(i)).collect()
        }
    };
    Ok(Solution::new(x, costs))
}

fn select(n: usize, p: usize, costs: &[f64], must: &FixedBitSet, banned: &FixedBitSet) -> Result<Vec<bool>> {
    let forced = must.count_ones(..);
    if forced > p {
        return Err(Error::Infeasible(format!("{forced} items forced in but only {p} may be chosen")));
    }
    let mut free: Vec<usize> = (0..n).filter(|&i| !must.contains(i) && !banned.contains(i)).collect();
    if free.len() < p - forced {
        return Err(Error::Infeasible(format!("only {} selectable items remain, need {}", free.len(), p - forced)));
    }
    free.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    let mut x = vec![false; n];
    for i in must.ones().chain(free.into_iter().take(p - forced)) {
        x[i] = true;
    }
    Ok(x)
}

fn shortest_path(
    graph: &Graph,
    source: usize,
    target: usize,
    costs: &[f64],
    must: &FixedBitSet,
    banned: &FixedBitSet,
) -> Result<FixedBitSet> {
    let no_path = || Error::Infeasible(format!("no admissible path from {source} to {target}"));
    let forced: Vec<usize> = must.ones().collect();
    if forced.is_empty() {
        let labels = label_search(graph, costs, banned, source);
        return labels[target].as_ref().map(|l| l.arcs.clone()).ok_or_else(no_path);
    }
    for &a in &forced {
        let (tail, head) = graph.arc(a);
        if head == source || tail == target {
            return Err(no_path());
        }
    }
    if forced.len() <= MAX_STITCH_ARCS {
        if let Some(found) = stitch(graph, source, target, costs, &forced, banned)? {
            return Ok(found);
        }
    }
    branch(graph, source, target, costs, must, banned).ok_or_else(no_path)
}

#[derive(Debug, Clone)]
struct Label {
    cost: f64,
    arcs: FixedBitSet,
    nodes: FixedBitSet,
}

impl Label {
    fn beats(&self, other: &Label) -> bool {
        match self.cost.total_cmp(&other.cost) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => tie_precedes_bits(&self.arcs, &other.arcs),
        }
    }
}

struct Queued {
    cost: f64,
    node: usize,
    version: u64,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // min-heap on cost, then node id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.node.cmp(&self.node))
            .then(other.version.cmp(&self.version))
    }
}

/// Label-correcting search from `source`. Each node keeps the best simple
/// path found so far under (cost, tie order); a node is rescanned whenever
/// its label improves, so equal-cost relabels propagate.
fn label_search(graph: &Graph, costs: &[f64], banned: &FixedBitSet, source: usize) -> Vec<Option<Label>> {
    let n_nodes = graph.num_nodes();
    let mut labels: Vec<Option<Label>> = vec![None; n_nodes];
    let mut version = vec![0u64; n_nodes];
    let mut start_nodes = FixedBitSet::with_capacity(n_nodes);
    start_nodes.insert(source);
    labels[source] = Some(Label { cost: 0.0, arcs: FixedBitSet::with_capacity(graph.num_arcs()), nodes: start_nodes });
    let mut heap = BinaryHeap::new();
    heap.push(Queued { cost: 0.0, node: source, version: 0 });

    while let Some(Queued { node, version: v, .. }) = heap.pop() {
        if v != version[node] {
            continue;
        }
        let current = labels[node].clone().expect("queued node has a label");
        for &a in graph.out_arcs(node) {
            if banned.contains(a) {
                continue;
            }
            let head = graph.arc(a).1;
            if current.nodes.contains(head) {
                continue;
            }
            let mut cand = current.clone();
            cand.cost += costs[a];
            cand.arcs.insert(a);
            cand.nodes.insert(head);
            let improves = labels[head].as_ref().is_none_or(|old| cand.beats(old));
            if improves {
                version[head] += 1;
                heap.push(Queued { cost: cand.cost, node: head, version: version[head] });
                labels[head] = Some(cand);
            }
        }
    }
    labels
}

fn canonical_cost(costs: &[f64], arcs: &FixedBitSet) -> f64 {
    arcs.ones().map(|a| costs[a]).sum()
}

/// Concatenates shortest segments through the forced arcs for every visiting
/// order. The cheapest concatenation over all orders is a lower bound on
/// any admissible path; if the best concatenations are simple paths, the
/// best of them is optimal. Returns `None` when that cannot be certified.
fn stitch(
    graph: &Graph,
    source: usize,
    target: usize,
    costs: &[f64],
    forced: &[usize],
    banned: &FixedBitSet,
) -> Result<Option<FixedBitSet>> {
    let mut cache: Vec<Option<Vec<Option<Label>>>> = vec![None; graph.num_nodes()];
    let mut from = |node: usize| -> Vec<Option<Label>> {
        cache[node].get_or_insert_with(|| label_search(graph, costs, banned, node)).clone()
    };

    // (cost, arcs, simple)
    let mut candidates: Vec<(f64, FixedBitSet, bool)> = Vec::new();
    let mut order: Vec<usize> = forced.to_vec();
    permutations(&mut order, 0, &mut |perm| {
        let mut arcs = FixedBitSet::with_capacity(graph.num_arcs());
        let mut simple = true;
        let mut at = source;
        let mut legs: Vec<(usize, Option<usize>)> = perm.iter().map(|&a| (graph.arc(a).0, Some(a))).collect();
        legs.push((target, None));
        let mut cost = 0.0;
        for (to, via) in legs {
            let Some(seg) = from(at)[to].clone() else { return };
            for a in seg.arcs.ones() {
                if arcs.put(a) {
                    simple = false;
                }
            }
            cost += seg.cost;
            at = to;
            if let Some(a) = via {
                if arcs.put(a) {
                    simple = false;
                }
                cost += costs[a];
                at = graph.arc(a).1;
            }
        }
        candidates.push((cost, arcs, simple));
    });
    if candidates.is_empty() {
        return Err(Error::Infeasible(format!("forced arcs cannot be joined into a path from {source} to {target}")));
    }

    // a repeated node also breaks simplicity; re-check on the arc set
    for cand in candidates.iter_mut().filter(|c| c.2) {
        cand.2 = arcs_form_simple_path(graph, source, target, &cand.1);
    }
    let lower = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let slack = 1e-9 * lower.abs().max(1.0);
    if candidates.iter().any(|c| !c.2 && c.0 <= lower + slack) {
        return Ok(None);
    }
    let best = candidates
        .into_iter()
        .filter(|c| c.2 && c.0 <= lower + slack)
        .map(|c| (canonical_cost(costs, &c.1), c.1))
        .min_by(|a, b| match a.0.total_cmp(&b.0) {
            Ordering::Equal if tie_precedes_bits(&a.1, &b.1) => Ordering::Less,
            Ordering::Equal if tie_precedes_bits(&b.1, &a.1) => Ordering::Greater,
            o => o,
        });
    Ok(best.map(|b| b.1))
}

fn permutations(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, f);
        v.swap(k, i);
    }
}

fn arcs_form_simple_path(graph: &Graph, source: usize, target: usize, arcs: &FixedBitSet) -> bool {
    let x: Vec<bool> = (0..graph.num_arcs()).map(|a| arcs.contains(a)).collect();
    super::is_simple_path(graph, source, target, &x)
}

/// Exhaustive depth-first branching over simple paths honoring the forcing
/// sets, pruned by exact distances to the target.
fn branch(
    graph: &Graph,
    source: usize,
    target: usize,
    costs: &[f64],
    must: &FixedBitSet,
    banned: &FixedBitSet,
) -> Option<FixedBitSet> {
    let to_target = reverse_distances(graph, costs, banned, target);
    if !to_target[source].is_finite() {
        return None;
    }
    let mut forced_out_of = vec![None; graph.num_nodes()];
    let mut forced_into = vec![None; graph.num_nodes()];
    for a in must.ones() {
        let (t, h) = graph.arc(a);
        if forced_out_of[t].is_some() || forced_into[h].is_some() {
            return None;
        }
        forced_out_of[t] = Some(a);
        forced_into[h] = Some(a);
    }

    struct Search<'a> {
        graph: &'a Graph,
        costs: &'a [f64],
        banned: &'a FixedBitSet,
        must: &'a FixedBitSet,
        target: usize,
        to_target: Vec<f64>,
        forced_out_of: Vec<Option<usize>>,
        forced_into: Vec<Option<usize>>,
        visited: FixedBitSet,
        arcs: FixedBitSet,
        best: Option<(f64, FixedBitSet)>,
    }

    impl Search<'_> {
        fn go(&mut self, node: usize, cost: f64) {
            if node == self.target {
                if !self.must.is_subset(&self.arcs) {
                    return;
                }
                let exact = canonical_cost(self.costs, &self.arcs);
                let wins = match &self.best {
                    None => true,
                    Some((c, a)) => match exact.total_cmp(c) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => tie_precedes_bits(&self.arcs, a),
                    },
                };
                if wins {
                    self.best = Some((exact, self.arcs.clone()));
                }
                return;
            }
            let graph = self.graph;
            for &a in graph.out_arcs(node) {
                if self.banned.contains(a) || self.forced_out_of[node].is_some_and(|f| f != a) {
                    continue;
                }
                let head = graph.arc(a).1;
                if self.visited.contains(head) || self.forced_into[head].is_some_and(|f| f != a) {
                    continue;
                }
                let next = cost + self.costs[a];
                if let Some((best, _)) = &self.best {
                    if next + self.to_target[head] > best + 1e-9 * best.abs().max(1.0) {
                        continue;
                    }
                }
                if !self.to_target[head].is_finite() {
                    continue;
                }
                self.visited.insert(head);
                self.arcs.insert(a);
                self.go(head, next);
                self.arcs.set(a, false);
                self.visited.set(head, false);
            }
        }
    }

    let mut visited = FixedBitSet::with_capacity(graph.num_nodes());
    visited.insert(source);
    let mut search = Search {
        graph,
        costs,
        banned,
        must,
        target,
        to_target,
        forced_out_of,
        forced_into,
        visited,
        arcs: FixedBitSet::with_capacity(graph.num_arcs()),
        best: None,
    };
    search.go(source, 0.0);
    search.best.map(|b| b.1)
}

/// Plain Dijkstra distances to `target` over reversed admissible arcs.
pub(crate) fn reverse_distances(graph: &Graph, costs: &[f64], banned: &FixedBitSet, target: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.num_nodes()];
    let mut heap = BinaryHeap::new();
    dist[target] = 0.0;
    heap.push(Queued { cost: 0.0, node: target, version: 0 });
    while let Some(Queued { cost, node, .. }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        for &a in graph.in_arcs(node) {
            if banned.contains(a) {
                continue;
            }
            let tail = graph.arc(a).0;
            let d = cost + costs[a];
            if d < dist[tail] {
                dist[tail] = d;
                heap.push(Queued { cost: d, node: tail, version: 0 });
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::fixtures::*;
    use crate::instances::{better, dot, items};
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn selection_argmin() {
        let inst = Instance::selection(3, 1).unwrap();
        let s = nominal_solve(&inst, &[2.0, 1.0, 3.0], &[], &[]).unwrap();
        assert_eq!(s.x, vec![false, true, false]);
        assert_eq!(s.value, 1.0);
    }

    #[test]
    fn selection_forcing() {
        let inst = Instance::selection(4, 2).unwrap();
        let s = nominal_solve(&inst, &[1.0, 1.0, 5.0, 1.0], &[2], &[0]).unwrap();
        assert_eq!(s.items(), vec![1, 2]);
        let err = nominal_solve(&inst, &[1.0; 4], &[0, 1, 2], &[]).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        let err = nominal_solve(&inst, &[1.0; 4], &[], &[0, 1, 2]).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn diamond_shortest() {
        let inst = diamond_instance();
        let s = nominal_solve(&inst, &[1.0, 1.0, 5.0, 5.0], &[], &[]).unwrap();
        assert_eq!(s.items(), vec![0, 1]);
        assert_eq!(s.value, 2.0);
    }

    #[test]
    fn diamond_tie_goes_to_lowest_arcs() {
        let inst = diamond_instance();
        let s = nominal_solve(&inst, &[3.0; 4], &[], &[]).unwrap();
        assert_eq!(s.items(), vec![0, 1]);
        let s = nominal_solve(&inst, &[3.0; 4], &[3], &[]).unwrap();
        assert_eq!(s.items(), vec![2, 3]);
    }

    #[test]
    fn diamond_fully_blocked() {
        let inst = diamond_instance();
        let err = nominal_solve(&inst, &[1.0, 1.0, 5.0, 5.0], &[], &[0, 2]).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn conflicting_forcing_rejected() {
        let inst = diamond_instance();
        let err = nominal_solve(&inst, &[1.0; 4], &[0], &[0]).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn forced_arcs_in_incompatible_positions() {
        let inst = diamond_instance();
        let err = nominal_solve(&inst, &[1.0; 4], &[0, 3], &[]).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }

    #[test]
    fn stitching_falls_back_when_segments_collide() {
        // 0->1->2->3 with a cheap shortcut 0->2; forcing 1->2 makes the
        // stitched s->1 leg and 2->t leg fine, but forcing 0->2 and 2->1
        // cannot be a path to 3.
        let g = Arc::new(Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 2), (2, 1), (1, 3)]).unwrap());
        let inst = Instance::shortest_path(g, 0, 3).unwrap();
        let costs = [1.0, 1.0, 1.0, 0.5, 1.0, 5.0];
        let s = nominal_solve(&inst, &costs, &[4], &[]).unwrap();
        assert_eq!(s.items(), vec![3, 4, 5]);
        let s = nominal_solve(&inst, &costs, &[1], &[]).unwrap();
        assert_eq!(s.items(), vec![0, 1, 2]);
    }

    fn brute(inst: &Instance, costs: &[f64], forced_in: &[usize], forced_out: &[usize]) -> Option<Vec<bool>> {
        let mut best: Option<Vec<bool>> = None;
        for x in inst.enumerate(1_000_000).unwrap() {
            if forced_in.iter().any(|&i| !x[i]) || forced_out.iter().any(|&i| x[i]) {
                continue;
            }
            let v = dot(costs, &x);
            if best.as_ref().is_none_or(|b| better(v, &x, dot(costs, b), b, 0.0)) {
                best = Some(x);
            }
        }
        best
    }

    fn random_graph() -> impl Strategy<Value = (Arc<Graph>, Vec<f64>, Vec<usize>, Vec<usize>)> {
        (3usize..=6)
            .prop_flat_map(|nodes| {
                let arc = (0..nodes, 0..nodes).prop_filter("no loops", |(a, b)| a != b);
                (Just(nodes), prop::collection::vec(arc, 3..=12))
            })
            .prop_flat_map(|(nodes, arcs)| {
                let m = arcs.len();
                let g = Arc::new(Graph::new(nodes, arcs).unwrap());
                (
                    Just(g),
                    prop::collection::vec(1u8..=3, m).prop_map(|v| v.into_iter().map(f64::from).collect()),
                    prop::collection::vec(0..m, 0..=2),
                    prop::collection::vec(0..m, 0..=2),
                )
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn paths_match_enumeration((g, costs, fin, fout) in random_graph()) {
            let fout: Vec<usize> = fout.into_iter().filter(|a| !fin.contains(a)).collect();
            let target = g.num_nodes() - 1;
            let inst = Instance::shortest_path(g, 0, target).unwrap();
            let expected = brute(&inst, &costs, &fin, &fout);
            match nominal_solve(&inst, &costs, &fin, &fout) {
                Ok(sol) => {
                    let exp = expected.expect("solver found a path brute force did not");
                    prop_assert!(inst.contains(&sol.x));
                    prop_assert_eq!(sol.value, dot(&costs, &sol.x));
                    prop_assert_eq!(items(&sol.x), items(&exp));
                }
                Err(Error::Infeasible(_)) => prop_assert!(expected.is_none()),
                Err(e) => prop_assert!(false, "unexpected error {}", e),
            }
        }

        #[test]
        fn selection_sums_smallest(costs in prop::collection::vec(0.0f64..10.0, 1..12), p_frac in 0.0f64..1.0) {
            let n = costs.len();
            let p = 1 + ((n - 1) as f64 * p_frac) as usize;
            let inst = Instance::selection(n, p).unwrap();
            let sol = nominal_solve(&inst, &costs, &[], &[]).unwrap();
            let mut sorted = costs.clone();
            sorted.sort_by(f64::total_cmp);
            let expected: f64 = sorted[..p].iter().sum();
            prop_assert!((sol.value - expected).abs() < 1e-9);
            prop_assert_eq!(sol.value, dot(&costs, &sol.x));
        }
    }
}
