//! Ground-truth lumped-parameter thermal network used to generate synthetic data.
//!
//! Each state node obeys
//!
//! ```text
//! C_i dϑ_i/dt = P_i(ζ) + Σ_{j≠i} g_ij(ζ) (ϑ_j − ϑ_i)
//! ```
//!
//! where j ranges over state and ancillary nodes, and the conductances `g_ij`
//! and losses `P_i` are closed-form functions of the scheduling vector ζ
//! (ancillary temperatures, observables and states). Everything is expressed in
//! normalized units, matching the model side.

mod excitation;
mod simulate;
mod spec;

pub use excitation::{excite, Excitation};
pub use simulate::{simulate, simulate_dataset, write_truth_csv, SyntheticDataset, TruthTrajectory};
pub use spec::{
    default_fold_plan, default_plant, disconnected_pair_spec, reconnected_pair_spec, ConductanceFn, LossFn, PlantSpec,
    DEFAULT_DISCONNECTED_PAIR,
};
