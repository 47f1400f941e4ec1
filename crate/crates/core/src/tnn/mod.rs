//! The thermal neural network cell and everything that runs it.
//!
//! One step of the cell is an explicit Euler update of the LPTN node balance
//!
//! ```text
//! ϑ̂_i[k+1] = ϑ̂_i[k] + T_s·κ_i·( π_i + Σ_{j≠i} (ϑ̂_j − ϑ̂_i)·γ_ij + Σ_a (ϑ̃_a − ϑ̂_i)·γ_ia )
//! ```
//!
//! where κ = 10^θ_c are trainable inverse capacitances and π (losses) and
//! γ (conductances) are MLPs of the state estimate and the features
//! φ = [ϑ̃; ξ]. All three are made nonnegative by an elementwise absolute
//! value; pruned conductance slots are pinned to zero.

mod cell;
mod model;
mod pairs;
mod params;
mod tbptt;
mod topology;

pub use cell::{
    cell_step, evaluate_thermal_parameters, rollout, ThermalParameters, Trajectory,
};
pub use model::{NamedArray, TnnModel};
pub use pairs::ConductancePairIndex;
pub use params::{derive_seed, TnnParameters};
pub use tbptt::{tbptt_gradients, WindowGradients};
pub use topology::{count_parameters, Approximator, TnnTopology, DEFAULT_DIVERGENCE_BOUND};
