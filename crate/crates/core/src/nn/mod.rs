//! Small dense feed-forward networks with hand-written reverse-mode gradients.
//!
//! Layer 0 optionally receives the recurrent state through its own weight
//! matrix `W_r`, next to the feature input `W_h^(0)`:
//!
//! ```text
//! h0 = σ0(W_r·state + W_h0·features + b0)
//! hl = σl(W_hl·h(l-1) + bl)
//! ```

mod activation;
mod matrix;
mod mlp;

pub use activation::ActivationKind;
pub use matrix::Matrix;
pub use mlp::{
    init_parameters, mlp_backward, mlp_forward, DenseLayer, LayerSpec, MlpBackward, MlpCache,
    MlpParameters, MlpSpec,
};
pub(crate) use mlp::{add_l2_gradient, backward_into, l2_penalty};
