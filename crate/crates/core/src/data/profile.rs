use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Channel counts of a profile: `n` ancillary, `o` exogenous, `m` targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileDims {
    pub ancillary: usize,
    pub exogenous: usize,
    pub targets: usize,
}

impl ProfileDims {
    pub fn width(&self) -> usize {
        self.ancillary + self.exogenous + self.targets
    }

    /// Length of φ = [ϑ̃; ξ].
    pub fn features(&self) -> usize {
        self.ancillary + self.exogenous
    }
}

/// One contiguous drive cycle of normalized samples.
///
/// Rows are `[ancillary.., exogenous.., targets..]`; see
/// [`ChannelSchema`](super::ChannelSchema) for the layout rationale.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementProfile {
    id: String,
    dims: ProfileDims,
    values: Vec<f64>,
}

impl MeasurementProfile {
    pub fn new(id: impl Into<String>, dims: ProfileDims, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        let width = dims.width();
        if width == 0 || !values.len().is_multiple_of(width) {
            return Err(Error::Shape(format!(
                "profile `{id}`: {} values do not form rows of width {width}",
                values.len()
            )));
        }
        let len = values.len() / width;
        if len < 2 {
            return Err(Error::Argument(format!(
                "profile `{id}` has {len} samples, at least 2 are required"
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                context: format!("profile `{id}`, column {}", pos % width),
                step: pos / width,
            });
        }
        Ok(Self { id, dims, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dims(&self) -> ProfileDims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dims.width()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.dims.width();
        &self.values[k * w..(k + 1) * w]
    }

    /// φ[k] = [ϑ̃[k]; ξ[k]].
    pub fn features(&self, k: usize) -> &[f64] {
        &self.row(k)[..self.dims.features()]
    }

    pub fn ancillary(&self, k: usize) -> &[f64] {
        &self.row(k)[..self.dims.ancillary]
    }

    pub fn exogenous(&self, k: usize) -> &[f64] {
        &self.row(k)[self.dims.ancillary..self.dims.features()]
    }

    pub fn targets(&self, k: usize) -> &[f64] {
        &self.row(k)[self.dims.features()..]
    }

    /// Samples `start..end` as a new profile.
    pub fn slice(&self, id: impl Into<String>, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::Argument(format!(
                "slice {start}..{end} out of range for profile of length {}",
                self.len()
            )));
        }
        let w = self.dims.width();
        Self::new(id, self.dims, self.values[start * w..end * w].to_vec())
    }
}

/// Cuts a profile into consecutive non-overlapping windows of `length` samples.
///
/// A trailing remainder is kept when it has at least two samples.
pub fn split_subsequences(
    profile: &MeasurementProfile,
    length: usize,
) -> Result<Vec<MeasurementProfile>> {
    if length < 2 {
        return Err(Error::Argument(format!(
            "subsequence length must be at least 2, got {length}"
        )));
    }
    let k = profile.len();
    let mut out = Vec::with_capacity(k.div_ceil(length));
    let mut start = 0;
    while start < k {
        let end = (start + length).min(k);
        if end - start >= 2 {
            let id = format!("{}/{}", profile.id(), out.len());
            out.push(profile.slice(id, start, end)?);
        }
        start = end;
    }
    Ok(out)
}
