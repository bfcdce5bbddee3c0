use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::dataset::{SchemaMode, Thresholds};
use crate::error::{Error, Result};
use crate::metrics::ChipGrouping;
use crate::training::{RlConfig, SlConfig};

/// Which training phases a matrix run covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseSelection {
    Sl,
    Rl,
    Both,
}

impl FromStr for PhaseSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sl" => Ok(Self::Sl),
            "rl" => Ok(Self::Rl),
            "both" => Ok(Self::Both),
            _ => Err(Error::Config(format!("phase must be sl, rl or both, got '{s}'"))),
        }
    }
}

impl PhaseSelection {
    pub fn includes_rl(self) -> bool {
        self != Self::Sl
    }
}

/// On-disk shape of the corpus file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// The canonical file written by `ingest`.
    Canonical,
    Raw(SchemaMode),
}

impl FromStr for CorpusFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(Self::Canonical),
            "cielab" => Ok(Self::Raw(SchemaMode::Cielab)),
            "hsl" => Ok(Self::Raw(SchemaMode::Hsl)),
            _ => Err(Error::Config(format!("corpus_format must be canonical, cielab or hsl, got '{s}'"))),
        }
    }
}

impl CorpusFormat {
    fn as_str(self) -> &'static str {
        match self {
            Self::Canonical => "canonical",
            Self::Raw(SchemaMode::Cielab) => "cielab",
            Self::Raw(SchemaMode::Hsl) => "hsl",
        }
    }
}

/// Resolved experiment configuration.
///
/// Read from a flat `key = value` file (`#` starts a comment); every key is
/// optional and falls back to the default below.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub corpus_format: CorpusFormat,
    pub seeds: Vec<u64>,
    pub listeners: Vec<usize>,
    pub upsampling: Vec<usize>,
    pub phase: PhaseSelection,
    pub out: PathBuf,
    pub workers: usize,

    pub test_size: usize,
    pub split_seed: u64,
    pub rl_train_size: usize,
    pub eval_size: usize,
    pub data_seed: u64,
    pub thresholds: Thresholds,

    pub hidden: usize,
    pub embedding: usize,
    pub context_aware: bool,
    pub sl: SlConfig,
    pub rl: RlConfig,
    pub chip_grouping: ChipGrouping,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("data/corpus.csv"),
            corpus_format: CorpusFormat::Canonical,
            seeds: (0..10).collect(),
            listeners: vec![1, 5, 30],
            upsampling: vec![0, 100, 200],
            phase: PhaseSelection::Both,
            out: PathBuf::from("out"),
            workers: 1,
            test_size: 3000,
            split_seed: 0,
            rl_train_size: 12_434,
            eval_size: 15_434,
            data_seed: 0,
            thresholds: Thresholds::default(),
            hidden: 64,
            embedding: 64,
            context_aware: true,
            sl: SlConfig::default(),
            rl: RlConfig::default(),
            chip_grouping: ChipGrouping::Exact,
        }
    }
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Config(format!("bad list item '{s}' for {key}"))))
        .collect()
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Sets one key, as from a config line or a `--set key=value` override.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "corpus" => self.corpus = PathBuf::from(v),
            "corpus_format" => self.corpus_format = v.parse()?,
            "seeds" => self.seeds = list(key, v)?,
            "listeners" => self.listeners = list(key, v)?,
            "upsampling" => self.upsampling = list(key, v)?,
            "phase" => self.phase = v.parse()?,
            "out" => self.out = PathBuf::from(v),
            "workers" => self.workers = scalar(key, v)?,
            "test_size" => self.test_size = scalar(key, v)?,
            "split_seed" => self.split_seed = scalar(key, v)?,
            "rl_train_size" => self.rl_train_size = scalar(key, v)?,
            "eval_size" => self.eval_size = scalar(key, v)?,
            "data_seed" => self.data_seed = scalar(key, v)?,
            "close_max" => self.thresholds = Thresholds::new(scalar(key, v)?, self.thresholds.far_min)?,
            "far_min" => self.thresholds = Thresholds::new(self.thresholds.close_max, scalar(key, v)?)?,
            "hidden" => self.hidden = scalar(key, v)?,
            "embedding" => self.embedding = scalar(key, v)?,
            "context_aware" => self.context_aware = scalar(key, v)?,
            "sl_epochs" => self.sl.epochs = scalar(key, v)?,
            "sl_batch" => self.sl.batch_size = scalar(key, v)?,
            "sl_lr" => self.sl.learning_rate = scalar(key, v)?,
            "rl_epochs" => self.rl.epochs = scalar(key, v)?,
            "rl_batch" => self.rl.batch_size = scalar(key, v)?,
            "rl_lr" => self.rl.learning_rate = scalar(key, v)?,
            "baseline_decay" => self.rl.baseline_decay = scalar(key, v)?,
            "baseline_init" => self.rl.baseline_init = scalar(key, v)?,
            "speaker_entropy" => self.rl.speaker_entropy = scalar(key, v)?,
            "listener_entropy" => self.rl.listener_entropy = scalar(key, v)?,
            "clip_norm" => self.rl.clip_norm = if v == "none" { None } else { Some(scalar(key, v)?) },
            "rl_reshuffle" => self.rl.reshuffle = scalar(key, v)?,
            "chip_grouping" => {
                self.chip_grouping = match v {
                    "exact" => ChipGrouping::Exact,
                    "binned" => ChipGrouping::Binned,
                    _ => return Err(Error::Config(format!("chip_grouping must be exact or binned, got '{v}'"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() || self.listeners.is_empty() || self.upsampling.is_empty() {
            return Err(Error::Config("seed, listener and upsampling grids must be non-empty".into()));
        }
        if self.workers == 0 || self.hidden == 0 || self.embedding == 0 {
            return Err(Error::Config("workers, hidden and embedding must be positive".into()));
        }
        self.sl.validate()?;
        for &l in &self.listeners {
            self.rl_for(l).validate()?;
        }
        Ok(())
    }

    pub fn rl_for(&self, listeners: usize) -> RlConfig {
        RlConfig { listeners, ..self.rl }
    }

    /// Every key that can change a cell's results, one `key=value` per line.
    /// Grids, output location and worker count are left out so a run can be
    /// extended or resumed under the same digest.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("corpus_format", self.corpus_format.as_str().into());
        kv("test_size", self.test_size.to_string());
        kv("split_seed", self.split_seed.to_string());
        kv("rl_train_size", self.rl_train_size.to_string());
        kv("eval_size", self.eval_size.to_string());
        kv("data_seed", self.data_seed.to_string());
        kv("close_max", self.thresholds.close_max.to_string());
        kv("far_min", self.thresholds.far_min.to_string());
        kv("hidden", self.hidden.to_string());
        kv("embedding", self.embedding.to_string());
        kv("context_aware", self.context_aware.to_string());
        kv("sl_epochs", self.sl.epochs.to_string());
        kv("sl_batch", self.sl.batch_size.to_string());
        kv("sl_lr", self.sl.learning_rate.to_string());
        kv("rl_epochs", self.rl.epochs.to_string());
        kv("rl_batch", self.rl.batch_size.to_string());
        kv("rl_lr", self.rl.learning_rate.to_string());
        kv("baseline_decay", self.rl.baseline_decay.to_string());
        kv("baseline_init", self.rl.baseline_init.to_string());
        kv("speaker_entropy", self.rl.speaker_entropy.to_string());
        kv("listener_entropy", self.rl.listener_entropy.to_string());
        kv("clip_norm", self.rl.clip_norm.map_or("none".into(), |c| c.to_string()));
        kv("rl_reshuffle", self.rl.reshuffle.to_string());
        kv(
            "chip_grouping",
            match self.chip_grouping {
                ChipGrouping::Exact => "exact".into(),
                ChipGrouping::Binned => "binned".into(),
            },
        );
        s
    }

    /// The full resolved configuration as a loadable config file.
    pub fn to_text(&self) -> String {
        let join = |v: &[String]| v.join(",");
        let mut s = String::new();
        let _ = writeln!(s, "corpus={}", self.corpus.display());
        let _ = writeln!(s, "seeds={}", join(&self.seeds.iter().map(u64::to_string).collect::<Vec<_>>()));
        let _ = writeln!(s, "listeners={}", join(&self.listeners.iter().map(usize::to_string).collect::<Vec<_>>()));
        let _ = writeln!(s, "upsampling={}", join(&self.upsampling.iter().map(usize::to_string).collect::<Vec<_>>()));
        let _ = writeln!(
            s,
            "phase={}",
            match self.phase {
                PhaseSelection::Sl => "sl",
                PhaseSelection::Rl => "rl",
                PhaseSelection::Both => "both",
            }
        );
        let _ = writeln!(s, "out={}", self.out.display());
        let _ = writeln!(s, "workers={}", self.workers);
        s + &self.canonical()
    }

    /// Hex SHA-256 of the canonical configuration and the corpus bytes.
    pub fn digest(&self) -> Result<String> {
        let corpus = std::fs::read(&self.corpus)?;
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        h.update(b"corpus_sha256=");
        h.update(hex::encode(Sha256::digest(&corpus)).as_bytes());
        Ok(hex::encode(h.finalize())[..16].to_string())
    }
}
