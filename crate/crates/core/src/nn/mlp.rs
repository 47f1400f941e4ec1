use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActivationKind, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: ActivationKind,
    /// ℓ2 rate applied to this layer's weights (not its bias).
    #[serde(default)]
    pub l2: f64,
}

impl LayerSpec {
    pub fn new(width: usize, activation: ActivationKind) -> Self {
        Self {
            width,
            activation,
            l2: 0.0,
        }
    }

    pub fn with_l2(mut self, l2: f64) -> Self {
        self.l2 = l2;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// Width of the recurrent state input (fed through `W_r`).
    pub state_inputs: usize,
    /// Width of the feature input (fed through `W_h^(0)`).
    pub feature_inputs: usize,
    pub layers: Vec<LayerSpec>,
    /// When false, layer 0 has no `W_r` and the state is not an input.
    #[serde(default = "default_true")]
    pub use_recurrent_input: bool,
}

fn default_true() -> bool {
    true
}

impl MlpSpec {
    pub fn new(state_inputs: usize, feature_inputs: usize, layers: Vec<LayerSpec>) -> Self {
        Self {
            state_inputs,
            feature_inputs,
            layers,
            use_recurrent_input: true,
        }
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.width)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape("an MLP needs at least one layer".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.width == 0 {
                return Err(Error::Shape(format!("layer {i} has zero width")));
            }
            if !(l.l2.is_finite() && l.l2 >= 0.0) {
                return Err(Error::Argument(format!("layer {i}: ℓ2 rate {} is invalid", l.l2)));
            }
        }
        Ok(())
    }

    fn layer_inputs(&self, l: usize) -> usize {
        if l == 0 {
            self.feature_inputs
        } else {
            self.layers[l - 1].width
        }
    }

    /// Number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        let recurrent = if self.use_recurrent_input {
            self.state_inputs * self.layers.first().map_or(0, |l| l.width)
        } else {
            0
        };
        recurrent
            + self
                .layers
                .iter()
                .enumerate()
                .map(|(l, layer)| layer.width * (self.layer_inputs(l) + 1))
                .sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParameters {
    pub recurrent: Option<Matrix>,
    pub layers: Vec<DenseLayer>,
}

impl MlpParameters {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let recurrent = match spec.layers.first() {
            Some(first) if spec.use_recurrent_input => Some(Matrix::zeros(first.width, spec.state_inputs)),
            _ => None,
        };
        let layers = spec
            .layers
            .iter()
            .enumerate()
            .map(|(l, layer)| DenseLayer {
                weights: Matrix::zeros(layer.width, spec.layer_inputs(l)),
                bias: vec![0.0; layer.width],
            })
            .collect();
        Self { recurrent, layers }
    }

    pub fn check_shapes(&self, spec: &MlpSpec) -> Result<()> {
        let expect = Self::zeros(spec);
        let dims = |m: &Matrix| (m.rows, m.cols);
        let ok = self.recurrent.as_ref().map(dims) == expect.recurrent.as_ref().map(dims)
            && self.layers.len() == expect.layers.len()
            && self
                .layers
                .iter()
                .zip(&expect.layers)
                .all(|(a, b)| dims(&a.weights) == dims(&b.weights) && a.bias.len() == b.bias.len());
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("MLP parameters do not match their spec".into()))
        }
    }

    /// Named parameter blocks in a fixed order: `w_r`, then `{l}.w`, `{l}.b` per layer.
    pub fn blocks(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(1 + 2 * self.layers.len());
        if let Some(r) = &self.recurrent {
            out.push(("w_r".to_string(), r.data.as_slice()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("{l}.w"), layer.weights.data.as_slice()));
            out.push((format!("{l}.b"), layer.bias.as_slice()));
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(1 + 2 * self.layers.len());
        if let Some(r) = &mut self.recurrent {
            out.push(r.data.as_mut_slice());
        }
        for layer in &mut self.layers {
            out.push(layer.weights.data.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        out
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-layer pre- and post-activations of one forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    state: Vec<f64>,
    features: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().map_or(&[], Vec::as_slice)
    }
}

pub fn mlp_forward(
    spec: &MlpSpec,
    params: &MlpParameters,
    state: &[f64],
    features: &[f64],
) -> Result<(Vec<f64>, MlpCache)> {
    spec.validate()?;
    params.check_shapes(spec)?;
    if features.len() != spec.feature_inputs || (spec.use_recurrent_input && state.len() != spec.state_inputs) {
        return Err(Error::Shape(format!(
            "MLP expects state {} / features {}, got {} / {}",
            spec.state_inputs,
            spec.feature_inputs,
            state.len(),
            features.len()
        )));
    }
    let mut pre = Vec::with_capacity(spec.layers.len());
    let mut post: Vec<Vec<f64>> = Vec::with_capacity(spec.layers.len());
    for (l, (layer_spec, layer)) in spec.layers.iter().zip(&params.layers).enumerate() {
        let mut z = layer.bias.clone();
        if l == 0 {
            layer.weights.mul_vec_add(features, &mut z);
            if let Some(r) = &params.recurrent {
                r.mul_vec_add(state, &mut z);
            }
        } else {
            layer.weights.mul_vec_add(&post[l - 1], &mut z);
        }
        let h = z.iter().map(|&x| layer_spec.activation.apply(x)).collect();
        pre.push(z);
        post.push(h);
    }
    let out = post.last().cloned().unwrap_or_default();
    let cache = MlpCache {
        state: if spec.use_recurrent_input { state.to_vec() } else { Vec::new() },
        features: features.to_vec(),
        pre,
        post,
    };
    Ok((out, cache))
}

/// Gradients of one backward pass.
#[derive(Debug, Clone)]
pub struct MlpBackward {
    pub grads: MlpParameters,
    pub d_state: Vec<f64>,
    pub d_features: Vec<f64>,
}

/// Reverse pass for the scalar objective `⟨d_output, output⟩ + Σ α_l‖W_l‖²`.
pub fn mlp_backward(
    spec: &MlpSpec,
    params: &MlpParameters,
    cache: &MlpCache,
    d_output: &[f64],
) -> Result<MlpBackward> {
    let mut grads = MlpParameters::zeros(spec);
    let (d_state, d_features) = backward_into(spec, params, cache, d_output, &mut grads)?;
    add_l2_gradient(spec, params, &mut grads);
    Ok(MlpBackward {
        grads,
        d_state,
        d_features,
    })
}

fn check_cache(spec: &MlpSpec, cache: &MlpCache) -> Result<()> {
    let widths_match = cache.pre.len() == spec.layers.len()
        && cache
            .pre
            .iter()
            .zip(&spec.layers)
            .all(|(z, l)| z.len() == l.width);
    let inputs_match = cache.features.len() == spec.feature_inputs
        && cache.state.len() == if spec.use_recurrent_input { spec.state_inputs } else { 0 };
    if widths_match && inputs_match {
        Ok(())
    } else {
        Err(Error::Contract("forward cache does not belong to this MLP".into()))
    }
}

/// Accumulates data-term gradients into `grads`; returns input cotangents.
pub(crate) fn backward_into(
    spec: &MlpSpec,
    params: &MlpParameters,
    cache: &MlpCache,
    d_output: &[f64],
    grads: &mut MlpParameters,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_cache(spec, cache)?;
    if d_output.len() != spec.output_width() {
        return Err(Error::Shape(format!(
            "output cotangent has {} entries, MLP output is {}",
            d_output.len(),
            spec.output_width()
        )));
    }
    let mut delta = d_output.to_vec();
    let mut d_state = vec![0.0; cache.state.len()];
    let mut d_features = vec![0.0; spec.feature_inputs];
    for l in (0..spec.layers.len()).rev() {
        let act = spec.layers[l].activation;
        let dz: Vec<f64> = delta
            .iter()
            .zip(&cache.pre[l])
            .zip(&cache.post[l])
            .map(|((d, &x), &y)| d * act.derivative(x, y))
            .collect();
        let g = &mut grads.layers[l];
        for (b, d) in g.bias.iter_mut().zip(&dz) {
            *b += d;
        }
        let input = if l == 0 { &cache.features } else { &cache.post[l - 1] };
        g.weights.add_outer(&dz, input);
        if l == 0 {
            params.layers[0].weights.mul_t_vec_add(&dz, &mut d_features);
            if let (Some(r), Some(gr)) = (&params.recurrent, &mut grads.recurrent) {
                gr.add_outer(&dz, &cache.state);
                r.mul_t_vec_add(&dz, &mut d_state);
            }
        } else {
            let mut next = vec![0.0; spec.layers[l - 1].width];
            params.layers[l].weights.mul_t_vec_add(&dz, &mut next);
            delta = next;
        }
    }
    Ok((d_state, d_features))
}

/// Σ_l α_l (‖W_h^(l)‖² + [l = 0]‖W_r‖²)
pub(crate) fn l2_penalty(spec: &MlpSpec, params: &MlpParameters) -> f64 {
    let mut total = 0.0;
    for (l, (s, p)) in spec.layers.iter().zip(&params.layers).enumerate() {
        if s.l2 == 0.0 {
            continue;
        }
        let mut sq = p.weights.squared_norm();
        if l == 0 {
            sq += params.recurrent.as_ref().map_or(0.0, Matrix::squared_norm);
        }
        total += s.l2 * sq;
    }
    total
}

pub(crate) fn add_l2_gradient(spec: &MlpSpec, params: &MlpParameters, grads: &mut MlpParameters) {
    for (l, s) in spec.layers.iter().enumerate() {
        if s.l2 == 0.0 {
            continue;
        }
        let scale = 2.0 * s.l2;
        for (g, w) in grads.layers[l].weights.data.iter_mut().zip(&params.layers[l].weights.data) {
            *g += scale * w;
        }
        if l == 0 {
            if let (Some(g), Some(w)) = (&mut grads.recurrent, &params.recurrent) {
                for (g, w) in g.data.iter_mut().zip(&w.data) {
                    *g += scale * w;
                }
            }
        }
    }
}

/// Glorot-uniform weights, zero biases; deterministic per seed.
///
/// For layer 0 the fan-in counts both the state and the feature inputs.
pub fn init_parameters(spec: &MlpSpec, seed: u64) -> MlpParameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = MlpParameters::zeros(spec);
    for (l, layer) in spec.layers.iter().enumerate() {
        let mut fan_in = spec.layer_inputs(l);
        if l == 0 && spec.use_recurrent_input {
            fan_in += spec.state_inputs;
        }
        let limit = (6.0 / (fan_in + layer.width).max(1) as f64).sqrt();
        if l == 0 {
            if let Some(r) = &mut params.recurrent {
                r.data.iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
            }
        }
        params.layers[l]
            .weights
            .data
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-limit..limit));
    }
    params
}
