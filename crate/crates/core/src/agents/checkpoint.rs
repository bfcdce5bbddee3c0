use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::neuralnet::{CheckpointMeta, MlpRecord, TensorRecord};
use crate::scalar::Scalar;

use super::{Listener, Speaker, Vocabulary};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerCheckpoint {
    pub meta: CheckpointMeta,
    pub vocabulary: Vec<String>,
    pub context_aware: bool,
    pub network: MlpRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListenerCheckpoint {
    pub meta: CheckpointMeta,
    pub vocabulary: Vec<String>,
    pub embeddings: TensorRecord,
    pub color_encoder: MlpRecord,
}

fn to_json<S: Serialize>(doc: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

/// Writes to a temporary sibling and renames it into place.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl SpeakerCheckpoint {
    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(s)?;
        doc.meta.check_version()?;
        Ok(doc)
    }
}

impl ListenerCheckpoint {
    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(s)?;
        doc.meta.check_version()?;
        Ok(doc)
    }
}

impl<T: Scalar> Speaker<T> {
    pub fn to_checkpoint(&self, meta: CheckpointMeta) -> SpeakerCheckpoint {
        SpeakerCheckpoint {
            meta,
            vocabulary: self.vocab().words().to_vec(),
            context_aware: self.context_aware(),
            network: MlpRecord::from_mlp(self.net()),
        }
    }

    pub fn from_checkpoint(ck: &SpeakerCheckpoint) -> Result<Self> {
        Speaker::from_parts(ck.network.to_mlp()?, ck.context_aware, Vocabulary::new(ck.vocabulary.clone())?)
    }

    pub fn save(&self, path: impl AsRef<Path>, meta: CheckpointMeta) -> Result<()> {
        write_atomic(path.as_ref(), self.to_checkpoint(meta).to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, CheckpointMeta)> {
        let ck = SpeakerCheckpoint::from_json(&fs::read_to_string(path)?)?;
        Ok((Self::from_checkpoint(&ck)?, ck.meta))
    }
}

impl<T: Scalar> Listener<T> {
    pub fn to_checkpoint(&self, meta: CheckpointMeta) -> ListenerCheckpoint {
        ListenerCheckpoint {
            meta,
            vocabulary: self.vocab().words().to_vec(),
            embeddings: TensorRecord::from_values(vec![self.vocab().len(), self.dim()], self.embeddings()),
            color_encoder: MlpRecord::from_mlp(self.encoder()),
        }
    }

    pub fn from_checkpoint(ck: &ListenerCheckpoint) -> Result<Self> {
        Listener::from_parts(
            ck.embeddings.to_values()?,
            ck.color_encoder.to_mlp()?,
            Vocabulary::new(ck.vocabulary.clone())?,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>, meta: CheckpointMeta) -> Result<()> {
        write_atomic(path.as_ref(), self.to_checkpoint(meta).to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, CheckpointMeta)> {
        let ck = ListenerCheckpoint::from_json(&fs::read_to_string(path)?)?;
        Ok((Self::from_checkpoint(&ck)?, ck.meta))
    }
}
