use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::uncertainty::ScenarioMatrix;

/// How scenario costs are perturbed around the per-arc base cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    /// A global congestion factor per scenario, drawn from `[1 - spread, 1 + spread]`,
    /// plus independent Gaussian noise with standard deviation `sigma × base`.
    Gaussian { spread: f64, sigma: f64 },
    /// Arcs in the left half of the grid form block A, the rest block B.
    /// Even scenarios multiply block A arcs by `1 + inflate_a`, odd
    /// scenarios multiply block B arcs by `1 + inflate_b`; Gaussian noise as above.
    TwoBlock { inflate_a: f64, inflate_b: f64, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub scenarios: usize,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The two-block grid used throughout the docs and tests.
    pub fn two_block(width: usize, height: usize, scenarios: usize, seed: u64) -> Self {
        SyntheticSpec {
            width,
            height,
            scenarios,
            noise: NoiseModel::TwoBlock { inflate_a: 2.0, inflate_b: 0.6, sigma: 0.15 },
            seed,
        }
    }
}

/// Grid digraph with right and down arcs, plus a scenario matrix over its arcs.
///
/// Node `(row, col)` has id `row * width + col`; arcs are listed node by
/// node, right arc before down arc.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<(Arc<Graph>, ScenarioMatrix)> {
    let SyntheticSpec { width, height, scenarios, noise, seed } = *spec;
    if width < 2 || height < 2 {
        return Err(Error::invalid("width and height must be ≥ 2"));
    }
    if scenarios < 2 {
        return Err(Error::invalid("need at least 2 scenarios"));
    }
    let mut arcs = Vec::new();
    let mut left_block = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let id = r * width + c;
            if c + 1 < width {
                arcs.push((id, id + 1));
                left_block.push(c < width / 2);
            }
            if r + 1 < height {
                arcs.push((id, id + width));
                left_block.push(c < width / 2);
            }
        }
    }
    let graph = Graph::new(width * height, arcs)?;
    let m = graph.num_arcs();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..m).map(|_| rng.random_range(1.0..3.0)).collect();
    let sigma = match noise {
        NoiseModel::Gaussian { sigma, .. } | NoiseModel::TwoBlock { sigma, .. } => sigma,
    };
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("noise sigma must be finite and nonnegative"));
    }
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rows = Vec::with_capacity(scenarios);
    for k in 0..scenarios {
        let factors: Vec<f64> = match noise {
            NoiseModel::Gaussian { spread, .. } => {
                let f = 1.0 + rng.random_range(-spread..=spread);
                vec![f; m]
            }
            NoiseModel::TwoBlock { inflate_a, inflate_b, .. } => left_block
                .iter()
                .map(|&a| match (k % 2 == 0, a) {
                    (true, true) => 1.0 + inflate_a,
                    (false, false) => 1.0 + inflate_b,
                    _ => 1.0,
                })
                .collect(),
        };
        let row = base
            .iter()
            .zip(&factors)
            .map(|(&b, &f)| {
                let noisy = b * f + sigma * b * unit.sample(&mut rng);
                noisy.max(0.05 * b)
            })
            .collect();
        rows.push(row);
    }
    Ok((Arc::new(graph), ScenarioMatrix::new(rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::Instance;

    fn spec(w: usize, h: usize) -> SyntheticSpec {
        SyntheticSpec { width: w, height: h, scenarios: 3, noise: NoiseModel::Gaussian { spread: 0.3, sigma: 0.2 }, seed: 1 }
    }

    #[test]
    fn two_by_two_shape() {
        let (g, data) = gen_synthetic(&spec(2, 2)).unwrap();
        assert_eq!(g.num_nodes(), 4);
        assert_eq!(g.num_arcs(), 4);
        assert_eq!((data.k(), data.n()), (3, 4));
        assert!(data.rows().iter().flatten().all(|&c| c > 0.0));
    }

    #[test]
    fn deterministic() {
        let a = gen_synthetic(&spec(3, 4)).unwrap();
        let b = gen_synthetic(&spec(3, 4)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = gen_synthetic(&SyntheticSpec::two_block(6, 6, 40, 1)).unwrap();
        let d = gen_synthetic(&SyntheticSpec::two_block(6, 6, 40, 1)).unwrap();
        assert_eq!(c.1, d.1);
    }

    #[test]
    fn too_narrow() {
        let err = gen_synthetic(&spec(1, 2)).unwrap_err();
        assert!(err.to_string().contains("width and height must be ≥ 2"));
    }

    #[test]
    fn four_by_four_has_twenty_monotone_paths() {
        let (g, _) = gen_synthetic(&spec(4, 4)).unwrap();
        let inst = Instance::shortest_path(g, 0, 15).unwrap();
        assert_eq!(inst.enumerate(1000).unwrap().len(), 20);
    }
}
