use serde::{Deserialize, Serialize};

use super::model::NamedArray;
use super::topology::TnnTopology;
use crate::nn::{init_parameters, MlpParameters};
use crate::{Error, Result};

/// Trainable parameters: π (one or `m` branches), γ, and θ_c with κ = 10^θ_c.
///
/// The same type doubles as the gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnnParameters {
    pub pi: Vec<MlpParameters>,
    pub gamma: MlpParameters,
    pub theta_c: Vec<f64>,
}

/// Decorrelated per-stream seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl TnnParameters {
    pub fn zeros(topology: &TnnTopology) -> Self {
        Self {
            pi: (0..topology.pi_branches())
                .map(|_| MlpParameters::zeros(&topology.pi))
                .collect(),
            gamma: MlpParameters::zeros(&topology.gamma),
            theta_c: vec![0.0; topology.targets],
        }
    }

    /// Glorot-initialized networks and θ_c set to `theta_c_init` for every node.
    pub fn init(topology: &TnnTopology, seed: u64, theta_c_init: f64) -> Self {
        Self {
            pi: (0..topology.pi_branches())
                .map(|b| init_parameters(&topology.pi, derive_seed(seed, 1 + b as u64)))
                .collect(),
            gamma: init_parameters(&topology.gamma, derive_seed(seed, 0)),
            theta_c: vec![theta_c_init; topology.targets],
        }
    }

    pub fn kappa(&self) -> Vec<f64> {
        self.theta_c.iter().map(|t| 10f64.powf(*t)).collect()
    }

    pub fn check_shapes(&self, topology: &TnnTopology) -> Result<()> {
        if self.pi.len() != topology.pi_branches() || self.theta_c.len() != topology.targets {
            return Err(Error::Shape("TNN parameters do not match the topology".into()));
        }
        for p in &self.pi {
            p.check_shapes(&topology.pi)?;
        }
        self.gamma.check_shapes(&topology.gamma)
    }

    fn pi_prefix(&self, b: usize) -> String {
        if self.pi.len() == 1 {
            "pi".to_string()
        } else {
            format!("pi[{b}]")
        }
    }

    /// Named blocks in canonical order: π branches, γ, θ_c.
    pub fn blocks(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (b, p) in self.pi.iter().enumerate() {
            let prefix = self.pi_prefix(b);
            out.extend(p.blocks().into_iter().map(|(n, d)| (format!("{prefix}.{n}"), d)));
        }
        out.extend(self.gamma.blocks().into_iter().map(|(n, d)| (format!("gamma.{n}"), d)));
        out.push(("theta_c".to_string(), self.theta_c.as_slice()));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for p in &mut self.pi {
            out.extend(p.blocks_mut());
        }
        out.extend(self.gamma.blocks_mut());
        out.push(self.theta_c.as_mut_slice());
        out
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().into_iter().flat_map(|(_, b)| b.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Shape(format!(
                "flat vector has {} entries, parameters have {}",
                flat.len(),
                self.len()
            )));
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&flat[offset..offset + block.len()]);
            offset += block.len();
        }
        Ok(())
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &TnnParameters, scale: f64) {
        let src = other.to_flat();
        let mut offset = 0;
        for block in self.blocks_mut() {
            for v in block.iter_mut() {
                *v += scale * src[offset];
                offset += 1;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for block in self.blocks_mut() {
            block.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Parameters as named arrays with shapes, for serialization.
    pub fn named_arrays(&self) -> Vec<NamedArray> {
        let mut out = Vec::new();
        let mut push_mlp = |prefix: &str, p: &MlpParameters| {
            if let Some(r) = &p.recurrent {
                out.push(NamedArray::new(format!("{prefix}.w_r"), vec![r.rows, r.cols], r.data.clone()));
            }
            for (l, layer) in p.layers.iter().enumerate() {
                let w = &layer.weights;
                out.push(NamedArray::new(format!("{prefix}.{l}.w"), vec![w.rows, w.cols], w.data.clone()));
                out.push(NamedArray::new(format!("{prefix}.{l}.b"), vec![layer.bias.len()], layer.bias.clone()));
            }
        };
        for (b, p) in self.pi.iter().enumerate() {
            push_mlp(&self.pi_prefix(b), p);
        }
        push_mlp("gamma", &self.gamma);
        out.push(NamedArray::new("theta_c", vec![self.theta_c.len()], self.theta_c.clone()));
        out
    }

    pub fn from_named_arrays(topology: &TnnTopology, arrays: &[NamedArray]) -> Result<Self> {
        let mut params = Self::zeros(topology);
        let expected = params.named_arrays();
        if expected.len() != arrays.len() {
            return Err(Error::Shape(format!(
                "expected {} parameter arrays, found {}",
                expected.len(),
                arrays.len()
            )));
        }
        let mut flat = Vec::with_capacity(params.len());
        for exp in &expected {
            let got = arrays
                .iter()
                .find(|a| a.name == exp.name)
                .ok_or_else(|| Error::Shape(format!("missing parameter array `{}`", exp.name)))?;
            if got.shape != exp.shape || got.data.len() != exp.data.len() {
                return Err(Error::Shape(format!(
                    "array `{}` has shape {:?}, expected {:?}",
                    exp.name, got.shape, exp.shape
                )));
            }
            flat.extend_from_slice(&got.data);
        }
        params.set_flat(&flat)?;
        Ok(params)
    }
}
