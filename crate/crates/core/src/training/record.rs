use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    SlSpeaker,
    SlListener,
    Rl,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::SlSpeaker => "sl_speaker",
            Phase::SlListener => "sl_listener",
            Phase::Rl => "rl",
        }
    }
}

/// One line of the per-epoch training curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub phase: Phase,
    pub listener_id: Option<usize>,
    pub mean_reward: Option<f64>,
    pub mean_loss_speaker: Option<f64>,
    pub mean_loss_listener: Option<f64>,
}

pub const EPOCH_CSV_HEADER: &str = "epoch,phase,listener_id,mean_reward,mean_loss_speaker,mean_loss_listener";

/// Everything one training run did, in order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub config_digest: String,
    /// Phases in the order they ran.
    pub phases: Vec<Phase>,
    pub epochs: Vec<EpochRow>,
    /// Checkpoint files relative to the run directory.
    pub checkpoints: Vec<String>,
}

impl RunRecord {
    pub fn new(seed: u64, config_digest: impl Into<String>) -> Self {
        Self {
            seed,
            config_digest: config_digest.into(),
            ..Self::default()
        }
    }

    /// Appends a phase and its per-epoch rows.
    pub fn push_phase(&mut self, phase: Phase, rows: impl IntoIterator<Item = EpochRow>) {
        self.phases.push(phase);
        self.epochs.extend(rows);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn epoch_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut out = String::from(EPOCH_CSV_HEADER);
        out.push('\n');
        for r in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch,
                r.phase.as_str(),
                r.listener_id.map(|k| k.to_string()).unwrap_or_default(),
                opt(r.mean_reward),
                opt(r.mean_loss_speaker),
                opt(r.mean_loss_listener)
            );
        }
        out
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        crate::agents::write_atomic(&dir.join("run.json"), self.to_json()?.as_bytes())?;
        crate::agents::write_atomic(&dir.join("epochs.csv"), self.epoch_csv().as_bytes())
    }
}
