use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::pairs::ConductancePairIndex;
use crate::nn::{ActivationKind, LayerSpec, MlpSpec};
use crate::{Error, Result};

pub const DEFAULT_DIVERGENCE_BOUND: f64 = 10.0;

fn default_bound() -> f64 {
    DEFAULT_DIVERGENCE_BOUND
}

/// Hidden layers plus output activation of one thermal-parameter approximator.
///
/// The output width is implied by the role (m for π, pair count for γ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Approximator {
    #[serde(default)]
    pub hidden: Vec<LayerSpec>,
    pub output: ActivationKind,
    #[serde(default)]
    pub output_l2: f64,
}

impl Approximator {
    pub fn new(hidden: Vec<LayerSpec>, output: ActivationKind) -> Self {
        Self {
            hidden,
            output,
            output_l2: 0.0,
        }
    }

    /// `layers` hidden layers of `units` each, all with the same activation.
    pub fn uniform(layers: usize, units: usize, hidden: ActivationKind, output: ActivationKind) -> Self {
        Self::new(vec![LayerSpec::new(units, hidden); layers], output)
    }

    /// Zero outputs (a single node without ancillaries has no conductances)
    /// yield a network without layers.
    fn to_spec(&self, state_inputs: usize, feature_inputs: usize, outputs: usize) -> MlpSpec {
        if outputs == 0 {
            return MlpSpec::new(state_inputs, feature_inputs, Vec::new());
        }
        let mut layers = self.hidden.clone();
        layers.push(LayerSpec::new(outputs, self.output).with_l2(self.output_l2));
        MlpSpec::new(state_inputs, feature_inputs, layers)
    }
}

/// Architecture of a TNN: node counts, sample time, both approximators and
/// the conductance pruning mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnnTopology {
    /// m: modelled (state) temperatures
    pub targets: usize,
    /// n: ancillary temperatures
    pub ancillary: usize,
    /// o: exogenous observables
    pub exogenous: usize,
    pub sample_time: f64,
    /// π; with dedicated branches this is the spec of one single-output branch.
    pub pi: MlpSpec,
    pub gamma: MlpSpec,
    #[serde(default)]
    pub dedicated_branches: bool,
    /// γ slots pinned to zero conductance.
    #[serde(default)]
    pub mask: BTreeSet<usize>,
    #[serde(default = "default_bound")]
    pub divergence_bound: f64,
}

impl TnnTopology {
    pub fn new(
        targets: usize,
        ancillary: usize,
        exogenous: usize,
        sample_time: f64,
        pi: &Approximator,
        gamma: &Approximator,
    ) -> Result<Self> {
        let features = ancillary + exogenous;
        let pairs = ConductancePairIndex::new(targets + ancillary).len();
        let topo = Self {
            targets,
            ancillary,
            exogenous,
            sample_time,
            pi: pi.to_spec(targets, features, targets),
            gamma: gamma.to_spec(targets, features, pairs),
            dedicated_branches: false,
            mask: BTreeSet::new(),
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        };
        topo.validate()?;
        Ok(topo)
    }

    /// Replaces π by `m` single-output branches sharing the input.
    pub fn with_dedicated_branches(mut self, pi: &Approximator) -> Result<Self> {
        self.pi = pi.to_spec(self.targets, self.features(), 1);
        self.dedicated_branches = true;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mask(mut self, mask: impl IntoIterator<Item = usize>) -> Result<Self> {
        self.mask = mask.into_iter().collect();
        self.validate()?;
        Ok(self)
    }

    pub fn features(&self) -> usize {
        self.ancillary + self.exogenous
    }

    pub fn pairs(&self) -> ConductancePairIndex {
        ConductancePairIndex::new(self.targets + self.ancillary)
    }

    pub fn pi_branches(&self) -> usize {
        if self.dedicated_branches {
            self.targets
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets == 0 {
            return Err(Error::Shape("a TNN needs at least one target node".into()));
        }
        if !(self.sample_time.is_finite() && self.sample_time > 0.0) {
            return Err(Error::Argument(format!("sample time {} must be positive", self.sample_time)));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::Argument("divergence bound must be positive".into()));
        }
        self.pi.validate()?;
        if self.pairs().is_empty() {
            if !self.gamma.layers.is_empty() {
                return Err(Error::Shape("gamma must be empty when there are no node pairs".into()));
            }
        } else {
            self.gamma.validate()?;
        }
        let pi_out = if self.dedicated_branches { 1 } else { self.targets };
        for (name, spec, out) in [("pi", &self.pi, pi_out), ("gamma", &self.gamma, self.pairs().len())] {
            if spec.state_inputs != self.targets || spec.feature_inputs != self.features() {
                return Err(Error::Shape(format!(
                    "{name} inputs ({}, {}) do not match m={} and n+o={}",
                    spec.state_inputs,
                    spec.feature_inputs,
                    self.targets,
                    self.features()
                )));
            }
            if spec.output_width() != out && !(name == "gamma" && out == 0) {
                return Err(Error::Shape(format!(
                    "{name} output width {} should be {out}",
                    spec.output_width()
                )));
            }
        }
        if let Some(&bad) = self.mask.iter().find(|&&s| s >= self.pairs().len()) {
            return Err(Error::Argument(format!(
                "mask slot {bad} out of range ({} slots)",
                self.pairs().len()
            )));
        }
        Ok(())
    }
}

/// Trainable scalars of the topology.
///
/// Masked γ slots drop their output unit (incoming weights plus bias) from the
/// count, as that unit no longer influences the model.
pub fn count_parameters(topology: &TnnTopology) -> usize {
    let pi = topology.pi.parameter_count() * topology.pi_branches();
    let gamma = topology.gamma.parameter_count();
    let layers = &topology.gamma.layers;
    let out_fan_in = if layers.len() > 1 {
        layers[layers.len() - 2].width
    } else {
        // single-layer γ: the output unit also owns its W_r row
        topology.features() + if topology.gamma.use_recurrent_input { topology.targets } else { 0 }
    };
    let pruned = topology.mask.len() * (out_fan_in + 1);
    pi + gamma - pruned + topology.targets
}
