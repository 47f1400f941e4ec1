use serde::{Deserialize, Serialize};

use super::excitation::Excitation;
use crate::data::{ChannelSchema, FoldPlan};
use crate::tnn::ConductancePairIndex;
use crate::{Error, Result};

/// Thermal conductance between two nodes as a function of ζ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConductanceFn {
    Constant { value: f64 },
    /// `offset + slope·ζ[channel]`
    Affine { channel: String, offset: f64, slope: f64 },
    /// `Σ_k coeffs[k]·ζ[channel]^k`
    Polynomial { channel: String, coeffs: Vec<f64> },
    /// Identically zero; keeps the original function for reconnection.
    Disconnected { base: Box<ConductanceFn> },
}

/// Heat loss injected into a state node as a function of ζ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossFn {
    Constant { value: f64 },
    /// `offset + coeff·ζ[channel]²`
    Quadratic { channel: String, offset: f64, coeff: f64 },
}

/// A function with its channel reference resolved to a column index.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Zero,
    Constant(f64),
    Affine(usize, f64, f64),
    Polynomial(usize, Vec<f64>),
    Quadratic(usize, f64, f64),
}

impl Compiled {
    pub(crate) fn eval(&self, zeta: &[f64]) -> f64 {
        match self {
            Compiled::Zero => 0.0,
            Compiled::Constant(v) => *v,
            Compiled::Affine(c, offset, slope) => offset + slope * zeta[*c],
            Compiled::Polynomial(c, coeffs) => coeffs.iter().rev().fold(0.0, |acc, k| acc * zeta[*c] + k),
            Compiled::Quadratic(c, offset, coeff) => offset + coeff * zeta[*c] * zeta[*c],
        }
    }
}

fn column(schema: &ChannelSchema, channel: &str) -> Result<usize> {
    schema
        .columns()
        .position(|c| c == channel)
        .ok_or_else(|| Error::Schema(format!("plant function refers to unknown channel `{channel}`")))
}

fn finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Argument(format!("{what} has non-finite coefficients")))
    }
}

impl ConductanceFn {
    pub(crate) fn compile(&self, schema: &ChannelSchema) -> Result<Compiled> {
        Ok(match self {
            ConductanceFn::Constant { value } => {
                finite(&[*value], "constant conductance")?;
                Compiled::Constant(*value)
            }
            ConductanceFn::Affine { channel, offset, slope } => {
                finite(&[*offset, *slope], "affine conductance")?;
                Compiled::Affine(column(schema, channel)?, *offset, *slope)
            }
            ConductanceFn::Polynomial { channel, coeffs } => {
                finite(coeffs, "polynomial conductance")?;
                Compiled::Polynomial(column(schema, channel)?, coeffs.clone())
            }
            ConductanceFn::Disconnected { base } => {
                base.compile(schema)?;
                Compiled::Zero
            }
        })
    }

    pub fn is_disconnected(&self) -> bool {
        matches!(self, ConductanceFn::Disconnected { .. })
    }
}

impl LossFn {
    pub(crate) fn compile(&self, schema: &ChannelSchema) -> Result<Compiled> {
        Ok(match self {
            LossFn::Constant { value } => {
                finite(&[*value], "constant loss")?;
                Compiled::Constant(*value)
            }
            LossFn::Quadratic { channel, offset, coeff } => {
                finite(&[*offset, *coeff], "quadratic loss")?;
                Compiled::Quadratic(column(schema, channel)?, *offset, *coeff)
            }
        })
    }
}

/// Full description of a ground-truth plant and its excitation.
///
/// `conductances` is indexed by [`ConductancePairIndex`] slot over the `m + n`
/// nodes (targets first, then ancillary nodes). All quantities are normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub schema: ChannelSchema,
    pub capacitances: Vec<f64>,
    pub conductances: Vec<ConductanceFn>,
    pub losses: Vec<LossFn>,
    /// One generator per ancillary and exogenous channel.
    pub excitation: Vec<Excitation>,
    /// Per-target `[low, high]` range of the initial temperature.
    pub initial: Vec<[f64; 2]>,
    pub substeps: usize,
}

pub(crate) struct CompiledPlant {
    pub conductances: Vec<Compiled>,
    pub losses: Vec<Compiled>,
    /// Excitation spec per ancillary then exogenous channel.
    pub excitation: Vec<Excitation>,
}

impl PlantSpec {
    pub fn targets(&self) -> usize {
        self.schema.targets.len()
    }

    pub fn pairs(&self) -> ConductancePairIndex {
        ConductancePairIndex::new(self.schema.targets.len() + self.schema.ancillary.len())
    }

    /// Node name for a pair-index node (targets first, then ancillary).
    pub fn node_name(&self, node: usize) -> &str {
        let m = self.targets();
        if node < m {
            &self.schema.targets[node]
        } else {
            &self.schema.ancillary[node - m]
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.compile().map(|_| ())
    }

    pub(crate) fn compile(&self) -> Result<CompiledPlant> {
        self.schema.validate()?;
        let m = self.targets();
        if m == 0 {
            return Err(Error::Argument("plant needs at least one state node".into()));
        }
        if self.capacitances.len() != m || self.capacitances.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::Argument(format!("plant needs {m} positive finite capacitances")));
        }
        if self.substeps < 1 {
            return Err(Error::Argument("substeps must be at least 1".into()));
        }
        let pairs = self.pairs();
        if self.conductances.len() != pairs.len() {
            return Err(Error::Argument(format!(
                "plant has {} conductance functions, expected {} (one per node pair)",
                self.conductances.len(),
                pairs.len()
            )));
        }
        if self.losses.len() != m {
            return Err(Error::Argument(format!("plant has {} loss functions, expected {m}", self.losses.len())));
        }
        if self.initial.len() != m || self.initial.iter().any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(Error::Argument(format!("plant needs {m} finite initial ranges [low, high]")));
        }
        let mut excitation = Vec::new();
        for name in self.schema.ancillary.iter().chain(&self.schema.exogenous) {
            let mut found = self.excitation.iter().filter(|e| &e.channel == name);
            let e = found
                .next()
                .ok_or_else(|| Error::Schema(format!("no excitation for input channel `{name}`")))?;
            if found.next().is_some() {
                return Err(Error::Schema(format!("channel `{name}` has several excitation entries")));
            }
            e.validate()?;
            excitation.push(e.clone());
        }
        for e in &self.excitation {
            if !self.schema.ancillary.contains(&e.channel) && !self.schema.exogenous.contains(&e.channel) {
                return Err(Error::Schema(format!("excitation for `{}`, which is not an input channel", e.channel)));
            }
        }
        Ok(CompiledPlant {
            conductances: self
                .conductances
                .iter()
                .map(|g| g.compile(&self.schema))
                .collect::<Result<_>>()?,
            losses: self.losses.iter().map(|p| p.compile(&self.schema)).collect::<Result<_>>()?,
            excitation,
        })
    }
}

/// Returns `base` with the conductance of `pair` forced to zero.
pub fn disconnected_pair_spec(base: &PlantSpec, pair: (usize, usize)) -> Result<PlantSpec> {
    let slot = base
        .pairs()
        .slot(pair.0, pair.1)
        .ok_or_else(|| Error::Argument(format!("invalid node pair {pair:?}")))?;
    let mut spec = base.clone();
    let g = &mut spec.conductances[slot];
    if !g.is_disconnected() {
        *g = ConductanceFn::Disconnected {
            base: Box::new(g.clone()),
        };
    }
    Ok(spec)
}

/// Inverse of [`disconnected_pair_spec`].
pub fn reconnected_pair_spec(spec: &PlantSpec, pair: (usize, usize)) -> Result<PlantSpec> {
    let slot = spec
        .pairs()
        .slot(pair.0, pair.1)
        .ok_or_else(|| Error::Argument(format!("invalid node pair {pair:?}")))?;
    let mut out = spec.clone();
    if let ConductanceFn::Disconnected { base } = &spec.conductances[slot] {
        out.conductances[slot] = (**base).clone();
    }
    Ok(out)
}

/// Pair left without heat exchange in [`default_plant`]: permanent magnet and stator winding.
pub const DEFAULT_DISCONNECTED_PAIR: (usize, usize) = (0, 2);

/// Verification plant with three state nodes and a coolant node.
///
/// Nodes: `pm`, `stator_yoke`, `stator_winding`, ancillary `coolant`; inputs
/// `i_s` and `omega_mech`. The magnet–yoke conductance rises with speed, the
/// magnet–winding pair is disconnected and all losses grow with the current.
pub fn default_plant() -> PlantSpec {
    let schema = ChannelSchema::new(
        &["i_s", "omega_mech"],
        &["coolant"],
        &["pm", "stator_yoke", "stator_winding"],
        0.5,
    )
    .expect("static schema is valid");
    let c = |value| ConductanceFn::Constant { value };
    PlantSpec {
        schema,
        capacitances: vec![45.0, 60.0, 24.0],
        // slots: (pm,yoke) (pm,winding) (pm,coolant) (yoke,winding) (yoke,coolant) (winding,coolant)
        conductances: vec![
            ConductanceFn::Affine {
                channel: "omega_mech".into(),
                offset: 0.05,
                slope: 0.25,
            },
            ConductanceFn::Disconnected {
                base: Box::new(c(0.15)),
            },
            c(0.06),
            c(0.4),
            c(0.6),
            c(0.1),
        ],
        losses: vec![
            LossFn::Quadratic {
                channel: "i_s".into(),
                offset: 0.0,
                coeff: 0.02,
            },
            LossFn::Quadratic {
                channel: "i_s".into(),
                offset: 0.0,
                coeff: 0.03,
            },
            LossFn::Quadratic {
                channel: "i_s".into(),
                offset: 0.0,
                coeff: 0.12,
            },
        ],
        excitation: vec![
            Excitation {
                channel: "coolant".into(),
                low: 0.2,
                high: 0.6,
                dwell_min: 300.0,
                dwell_max: 1200.0,
                walk_probability: 0.5,
                walk_step: 0.002,
            },
            Excitation {
                channel: "i_s".into(),
                low: 0.0,
                high: 1.2,
                dwell_min: 30.0,
                dwell_max: 300.0,
                walk_probability: 0.4,
                walk_step: 0.01,
            },
            Excitation {
                channel: "omega_mech".into(),
                low: 0.0,
                high: 1.0,
                dwell_min: 30.0,
                dwell_max: 300.0,
                walk_probability: 0.4,
                walk_step: 0.01,
            },
        ],
        initial: vec![[0.2, 0.8]; 3],
        substeps: 10,
    }
}

/// Four training, one per cross-validation fold and two generalization profiles
/// for the ids produced by `simulate_dataset(.., 8, ..)`.
pub fn default_fold_plan() -> FoldPlan {
    let ids = |r: std::ops::Range<usize>| r.map(|i| format!("p{i}")).collect();
    FoldPlan {
        train: ids(0..4),
        fold_1: ids(4..5),
        fold_2: ids(5..6),
        generalization: ids(6..8),
    }
}
