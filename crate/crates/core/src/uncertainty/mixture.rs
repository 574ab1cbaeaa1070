use serde::{Deserialize, Serialize};

use super::{build_set, ScenarioMatrix, SetKind, SetSpec, UncertaintySet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub set: UncertaintySet,
}

/// Weighted list of uncertainty sets. The objective of a solution `x` is
/// `Σ_j weight_j · max_{c ∈ U_j} c·x`.
///
/// Weights need not sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    components: Vec<Component>,
}

impl Mixture {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::invalid("a mixture needs at least one component"));
        };
        let n = first.set.n();
        for (j, c) in components.iter().enumerate() {
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::invalid(format!("component {j}: weight {} must be finite and ≥ 0", c.weight)));
            }
            if c.set.n() != n {
                return Err(Error::invalid(format!("component {j} has dimension {}, expected {n}", c.set.n())));
            }
        }
        Ok(Mixture { components })
    }

    pub fn single(set: UncertaintySet) -> Self {
        Mixture { components: vec![Component { weight: 1.0, set }] }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, UncertaintySet)>) -> Result<Self> {
        Mixture::new(pairs.into_iter().map(|(weight, set)| Component { weight, set }).collect())
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn n(&self) -> usize {
        self.components[0].set.n()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Concatenation `self ⊕ other`.
    pub fn concat(&self, other: &Mixture) -> Result<Mixture> {
        Mixture::new(self.components.iter().chain(&other.components).cloned().collect())
    }

    /// Every weight multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Result<Mixture> {
        Mixture::new(
            self.components
                .iter()
                .map(|c| Component { weight: c.weight * t, set: c.set.clone() })
                .collect(),
        )
    }

    /// `Σ_j weight_j · center(U_j)`, the mixed midpoint scenario.
    pub fn center_costs(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n()];
        for c in &self.components {
            for (o, v) in out.iter_mut().zip(c.set.center()?) {
                *o += c.weight * v;
            }
        }
        Ok(out)
    }
}

/// One entry of the mixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub weight: f64,
    #[serde(rename = "type")]
    pub kind: SetKind,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
}

/// The mixture file: set families, sizes and weights, realized against
/// scenario data by [`MixtureSpec::build`].
///
/// ```
/// use robustmix::uncertainty::MixtureSpec;
///
/// let text = r#"{"components":[{"weight":0.7502,"type":"hull","lambda":0.2234},{"weight":0.9796,"type":"ellipsoid","lambda":5.4609}]}"#;
/// let spec = MixtureSpec::from_json(text).unwrap();
/// assert_eq!(spec.components.len(), 2);
/// assert_eq!(spec.to_json(), text);
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<ComponentSpec>,
}

impl MixtureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MixtureSpec = serde_json::from_str(text)?;
        if spec.components.is_empty() {
            return Err(Error::invalid("mixture file lists no components"));
        }
        Ok(spec)
    }

    /// Compact single-line JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mixture spec serializes")
    }

    pub fn build(&self, data: &ScenarioMatrix) -> Result<Mixture> {
        let comps = self
            .components
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let set = build_set(data, &SetSpec { kind: c.kind, lambda: c.lambda, ridge: c.ridge, gamma: c.gamma })
                    .map_err(|e| Error::invalid(format!("component {j}: {e}")))?;
                Ok(Component { weight: c.weight, set })
            })
            .collect::<Result<Vec<_>>>()?;
        Mixture::new(comps)
    }
}
