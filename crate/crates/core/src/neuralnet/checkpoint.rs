//! Versioned JSON records for network parameters. Values are stored as
//! shortest round-trip decimal strings, so load → save is byte-identical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{Activation, DenseLayer, Mlp};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub seed: u64,
    pub epoch: usize,
    pub config_digest: String,
}

impl CheckpointMeta {
    pub fn new(seed: u64, epoch: usize, config_digest: impl Into<String>) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            seed,
            epoch,
            config_digest: config_digest.into(),
        }
    }

    pub fn check_version(&self) -> Result<()> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {} (expected {CHECKPOINT_FORMAT_VERSION})",
                self.format_version
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub weights: Vec<String>,
    pub bias: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpRecord {
    pub layers: Vec<LayerRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub shape: Vec<usize>,
    pub values: Vec<String>,
}

pub(crate) fn encode<T: Scalar>(xs: &[T]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

pub(crate) fn decode<T: Scalar>(xs: &[String]) -> Result<Vec<T>> {
    xs.iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Checkpoint(format!("not a number: {s:?}")))
        })
        .collect()
}

impl TensorRecord {
    pub fn from_values<T: Scalar>(shape: Vec<usize>, values: &[T]) -> Self {
        Self {
            shape,
            values: encode(values),
        }
    }

    pub fn to_values<T: Scalar>(&self) -> Result<Vec<T>> {
        let expected: usize = self.shape.iter().product();
        if expected != self.values.len() {
            return Err(Error::Checkpoint(format!(
                "tensor shape {:?} holds {expected} values, found {}",
                self.shape,
                self.values.len()
            )));
        }
        decode(&self.values)
    }
}

impl MlpRecord {
    pub fn from_mlp<T: Scalar>(m: &Mlp<T>) -> Self {
        Self {
            layers: m
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    activation: l.activation(),
                    weights: encode(l.weights()),
                    bias: encode(l.bias()),
                })
                .collect(),
        }
    }

    pub fn to_mlp<T: Scalar>(&self) -> Result<Mlp<T>> {
        let layers = self
            .layers
            .iter()
            .map(|r| DenseLayer::from_parts(r.in_dim, r.out_dim, decode(&r.weights)?, decode(&r.bias)?, r.activation))
            .collect::<Result<Vec<_>>>()?;
        Mlp::new(layers)
    }
}
