//! Supervised pretraining on human labels and referential-game
//! reinforcement against one or more listeners.

mod record;
mod rl;
mod sl;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::AdamConfig;

pub use record::{EpochRow, Phase, RunRecord, EPOCH_CSV_HEADER};
pub use rl::{listener_schedule, rl_play_round, rl_train, ListenerLearner, RlHistory, RoundOutcome, SpeakerLearner};
pub use sl::{sl_train_listener, sl_train_speaker, SlHistory};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for SlConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
        }
    }
}

impl SlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("SL epochs and batch size must be positive".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("SL learning rate must be positive".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_lr(self.learning_rate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlConfig {
    pub epochs: usize,
    pub listeners: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub baseline_decay: f64,
    pub baseline_init: f64,
    pub speaker_entropy: f64,
    pub listener_entropy: f64,
    pub clip_norm: Option<f64>,
    /// Reshuffle the RL corpus every epoch.
    pub reshuffle: bool,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            listeners: 1,
            batch_size: 32,
            learning_rate: 1e-4,
            baseline_decay: 0.99,
            baseline_init: 1.0 / 3.0,
            speaker_entropy: 0.01,
            listener_entropy: 0.0,
            clip_norm: None,
            reshuffle: true,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.listeners == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("RL epochs, listeners and batch size must be positive".into()));
        }
        if !self.epochs.is_multiple_of(self.listeners) {
            return Err(Error::Config(format!(
                "RL epochs ({}) must be divisible by the number of listeners ({})",
                self.epochs, self.listeners
            )));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return Err(Error::Config("baseline decay must lie in [0, 1)".into()));
        }
        if !(self.speaker_entropy >= 0.0 && self.listener_entropy >= 0.0) {
            return Err(Error::Config("entropy coefficients must be non-negative".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("RL learning rate must be positive".into()));
        }
        if let Some(c) = self.clip_norm {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::Config("clip norm must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_lr(self.learning_rate)
    }

    pub fn epochs_per_listener(&self) -> usize {
        self.epochs / self.listeners
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divisibility_is_enforced() {
        for l in [1, 5, 30] {
            RlConfig { listeners: l, ..Default::default() }.validate().unwrap();
        }
        assert!(RlConfig { listeners: 7, ..Default::default() }.validate().is_err());
        assert!(RlConfig { baseline_decay: 1.0, ..Default::default() }.validate().is_err());
        assert!(SlConfig { epochs: 0, ..Default::default() }.validate().is_err());
    }
}
