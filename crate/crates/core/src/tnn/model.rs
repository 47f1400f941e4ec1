use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::TnnParameters;
use super::topology::TnnTopology;
use crate::data::ChannelSchema;
use crate::{Error, Result};

const FORMAT: &str = "tnn-model";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            shape,
            data,
        }
    }
}

/// A trained TNN with everything needed to run it: topology (including the
/// pruning mask), parameters and the normalization schema.
#[derive(Debug, Clone, PartialEq)]
pub struct TnnModel {
    pub topology: TnnTopology,
    pub params: TnnParameters,
    pub schema: ChannelSchema,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    topology: TnnTopology,
    schema: ChannelSchema,
    parameters: Vec<NamedArray>,
}

impl TnnModel {
    pub fn new(topology: TnnTopology, params: TnnParameters, schema: ChannelSchema) -> Result<Self> {
        topology.validate()?;
        params.check_shapes(&topology)?;
        schema.validate()?;
        let dims = schema.dims();
        if dims.targets != topology.targets || dims.ancillary != topology.ancillary || dims.exogenous != topology.exogenous {
            return Err(Error::Shape("schema channel counts do not match the topology".into()));
        }
        Ok(Self { topology, params, schema })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            topology: self.topology.clone(),
            schema: self.schema.clone(),
            parameters: self.params.named_arrays(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(Error::Schema(format!(
                "unsupported model file `{}` version {}",
                file.format, file.version
            )));
        }
        let params = TnnParameters::from_named_arrays(&file.topology, &file.parameters)?;
        Self::new(file.topology, params, file.schema)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
