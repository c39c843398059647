//! Request and response bodies of the HTTP service.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::context::{ContextFrame, Trace, TraceScript};
use crate::harness::{Inputs, RunParams};
use crate::profile::{DocumentProfile, Placement, SpatialProfile};
use crate::tagging::KeyObjectVocabulary;

/// The three input documents of a run, inlined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInputs {
    pub spatial_profile: SpatialProfile,
    pub document_profile: DocumentProfile,
    pub trace: Trace,
    #[serde(default)]
    pub params: RunParams,
}

impl RunInputs {
    pub fn from_inputs(inputs: Inputs, params: RunParams) -> Self {
        RunInputs {
            spatial_profile: inputs.spatial,
            document_profile: inputs.document,
            trace: inputs.trace,
            params,
        }
    }

    pub fn into_inputs(self) -> crate::Result<(Inputs, RunParams)> {
        let inputs = Inputs::new(self.spatial_profile, self.document_profile, self.trace)?;
        Ok((inputs, self.params))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeRequest {
    pub run: RunInputs,
    pub step: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleRequest {
    pub run: RunInputs,
    pub step: usize,
    #[serde(default)]
    pub bound: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostRequest {
    pub run: RunInputs,
    pub step: usize,
    pub placement: Placement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagRequest {
    #[serde(default)]
    pub title: String,
    pub text: String,
    pub vocabulary: KeyObjectVocabulary,
    #[serde(default)]
    pub available: Option<BTreeSet<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsRequest {
    pub frames: Vec<ContextFrame>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsResponse {
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeRequest {
    pub spatial_profile: SpatialProfile,
    pub script: TraceScript,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}
