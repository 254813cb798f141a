//! Encoder checkpoints: one file holding the architecture and named tensors.
//!
//! Layout: the 8 magic bytes `MGCKPT01`, a little-endian `u64` header length,
//! a JSON header, then the tensor payload as little-endian `f32` values. Each
//! header entry gives a tensor's name, shape and byte offset into the payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphTopology;
use crate::model::StreamKind;
use crate::nn::{ParamSet, Tensor};
use crate::spatial::{SpatialConfig, SpatialModel};
use crate::temporal::{RecurrentEncoderConfig, TemporalModel};

pub const MAGIC: &[u8; 8] = b"MGCKPT01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stream", rename_all = "snake_case")]
pub enum Architecture {
    Spatial {
        config: SpatialConfig,
        topology: GraphTopology,
    },
    Temporal {
        config: RecurrentEncoderConfig,
    },
}

impl Architecture {
    pub fn stream(&self) -> StreamKind {
        match self {
            Architecture::Spatial { .. } => StreamKind::Spatial,
            Architecture::Temporal { .. } => StreamKind::Temporal,
        }
    }
}

/// A model rebuilt from its architecture description.
pub enum Encoder {
    Spatial(SpatialModel),
    Temporal(TemporalModel),
}

impl Encoder {
    pub fn build(arch: &Architecture) -> Result<Self> {
        Ok(match arch {
            Architecture::Spatial { config, topology } => {
                Encoder::Spatial(SpatialModel::new(config.clone(), topology.clone())?)
            }
            Architecture::Temporal { config } => Encoder::Temporal(TemporalModel::new(config.clone())?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    architecture: Architecture,
    #[serde(default)]
    metadata: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub architecture: Architecture,
    /// Free-form run information (seed, epochs, ...).
    pub metadata: serde_json::Value,
    pub params: ParamSet,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut payload = Vec::new();
        let mut tensors = Vec::new();
        for t in self.params.tensors() {
            tensors.push(TensorEntry {
                name: t.name.clone(),
                shape: t.shape.clone(),
                offset: payload.len() as u64,
            });
            for v in &t.data {
                payload.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        let header = Header {
            architecture: self.architecture.clone(),
            metadata: self.metadata.clone(),
            tensors,
        };
        let json = serde_json::to_vec(&header)
            .map_err(|e| Error::InvalidInput(format!("checkpoint header: {e}")))?;
        let mut out = Vec::with_capacity(16 + json.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(Error::InvalidInput("not a checkpoint file (bad magic)".into()));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = &bytes[16..];
        if body.len() < len {
            return Err(Error::InvalidInput("checkpoint header truncated".into()));
        }
        let header: Header = serde_json::from_slice(&body[..len])
            .map_err(|e| Error::InvalidInput(format!("checkpoint header: {e}")))?;
        let payload = &body[len..];
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for entry in &header.tensors {
            let numel: usize = entry.shape.iter().product();
            let start = entry.offset as usize;
            let end = start + 4 * numel;
            if end > payload.len() {
                return Err(Error::ShapeMismatch {
                    id: entry.name.clone(),
                    expected: numel,
                    found: payload.len().saturating_sub(start) / 4,
                });
            }
            let data = payload[start..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
                .collect();
            tensors.push(Tensor {
                name: entry.name.clone(),
                shape: entry.shape.clone(),
                data,
            });
        }
        Ok(Self {
            architecture: header.architecture,
            metadata: header.metadata,
            params: ParamSet::from_tensors(tensors),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Rebuild the encoder and check the stored tensors against its layout.
    pub fn encoder(&self) -> Result<Encoder> {
        let encoder = Encoder::build(&self.architecture)?;
        match &encoder {
            Encoder::Spatial(m) => crate::model::StreamModel::layout(m).check(&self.params)?,
            Encoder::Temporal(m) => crate::model::StreamModel::layout(m).check(&self.params)?,
        }
        Ok(encoder)
    }
}
