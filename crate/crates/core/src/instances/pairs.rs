use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};

/// Unweighted hop counts from `source` along arc directions; `None` marks
/// unreachable nodes.
pub fn hop_distances(g: &Graph, source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.num_nodes()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &a in g.out_arcs(u) {
            let v = g.arc(a).1;
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Draws `count` distinct ordered pairs `(s, t)` such that `t` is reachable
/// from `s` in at least `min_hops` arcs.
pub fn sample_st_pairs(g: &Graph, count: usize, min_hops: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut qualifying = Vec::new();
    for s in 0..g.num_nodes() {
        for (t, d) in hop_distances(g, s).into_iter().enumerate() {
            if t != s && d.is_some_and(|d| d >= min_hops) {
                qualifying.push((s, t));
            }
        }
    }
    if qualifying.len() < count {
        return Err(Error::invalid(format!(
            "only {} pairs satisfy min_hops={min_hops}, {count} requested",
            qualifying.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, qualifying.len(), count)
        .into_iter()
        .map(|i| qualifying[i])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::fixtures::diamond;

    #[test]
    fn single_arc() {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        assert_eq!(sample_st_pairs(&g, 1, 1, 7).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn diamond_too_far() {
        let err = sample_st_pairs(&diamond(), 5, 3, 1).unwrap_err();
        assert!(err.to_string().contains("only 0 pairs satisfy min_hops=3"), "{err}");
    }

    #[test]
    fn empty_request() {
        assert!(sample_st_pairs(&diamond(), 0, 10, 1).unwrap().is_empty());
    }

    #[test]
    fn deterministic_distinct_and_far_enough() {
        let g = diamond();
        let a = sample_st_pairs(&g, 3, 1, 11).unwrap();
        assert_eq!(a, sample_st_pairs(&g, 3, 1, 11).unwrap());
        let mut dedup = a.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 3);
        let b = sample_st_pairs(&g, 1, 2, 3).unwrap();
        assert_eq!(b, vec![(0, 3)]);
    }
}
