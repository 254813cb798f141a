//! Interface shared by the two encoder streams.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nn::{ParamLayout, ParamSet};
use crate::skeleton::SkeletonSequence;

/// An encoder with a projection head and a hand-written backward pass.
pub trait StreamModel {
    type Cache;

    fn layout(&self) -> &ParamLayout;

    /// Width of the pooled encoder representation (before the head).
    fn encoder_dim(&self) -> usize;

    fn projection_dim(&self) -> usize;

    /// Frozen-encoder features, `B x encoder_dim`.
    fn embed(&self, params: &ParamSet, batch: &[&SkeletonSequence]) -> Result<Array2<f64>>;

    /// Head outputs, `B x projection_dim`, plus what the backward pass needs.
    fn project(&self, params: &ParamSet, batch: &[&SkeletonSequence]) -> Result<(Array2<f64>, Self::Cache)>;

    /// Parameter gradients given the gradient of the head outputs.
    fn backward(&self, params: &ParamSet, cache: &Self::Cache, d_proj: &Array2<f64>) -> ParamSet;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    Spatial,
    Temporal,
}

impl StreamKind {
    pub const ALL: [StreamKind; 2] = [StreamKind::Spatial, StreamKind::Temporal];

    pub fn name(self) -> &'static str {
        match self {
            StreamKind::Spatial => "spatial",
            StreamKind::Temporal => "temporal",
        }
    }
}

impl std::str::FromStr for StreamKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spatial" => Ok(StreamKind::Spatial),
            "temporal" => Ok(StreamKind::Temporal),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown stream '{other}' (expected spatial or temporal)"
            ))),
        }
    }
}
