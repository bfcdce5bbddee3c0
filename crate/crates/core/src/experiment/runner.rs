use std::path::{Path, PathBuf};

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::agents::{produce_lexicon, Listener, Speaker, Vocabulary};
use crate::dataset::{generate_triplets, ingest_colors_csv, read_corpus, split_corpus, upsample, ConditionMix, Corpus, UpsamplingConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    communication_accuracy, convexity, fit_context_regression, lexical_diversity, regression_observations, semantic_drift,
    system_informativeness, BetaSummary, ConditionReport, Lexicon, RegressionOptions, ReportPhase, SeedMetrics,
};
use crate::neuralnet::CheckpointMeta;
use crate::training::{rl_train, sl_train_listener, sl_train_speaker, EpochRow, Phase, RunRecord};

use super::artifacts::{read_metrics, read_trial_log, write_metrics, write_trial_log, CellKey};
use super::config::{CorpusFormat, ExperimentConfig};

/// Whether cells are trained or only re-scored from saved checkpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Train,
    Evaluate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub mode: RunMode,
    pub resume: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mode: RunMode::Train,
            resume: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatrixOutcome {
    pub digest: String,
    pub dir: PathBuf,
    pub reports: Vec<ConditionReport>,
    pub computed_cells: Vec<CellKey>,
    pub skipped_cells: Vec<CellKey>,
}

/// Data every cell reads.
pub struct SharedData {
    pub corpus: Corpus,
    pub train: Corpus,
    pub test: Corpus,
    pub rl_train: Option<Corpus>,
    pub rl_eval: Option<Corpus>,
    pub human: Lexicon,
}

pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Corpus> {
    match cfg.corpus_format {
        CorpusFormat::Canonical => read_corpus(&cfg.corpus),
        CorpusFormat::Raw(mode) => Ok(ingest_colors_csv(&cfg.corpus, mode)?.corpus),
    }
}

impl SharedData {
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let corpus = load_corpus(cfg)?;
        let (train, test) = split_corpus(&corpus, cfg.test_size, cfg.split_seed)?;
        let (rl_train, rl_eval) = if cfg.phase.includes_rl() {
            let mix = ConditionMix::from_counts(corpus.condition_counts());
            (
                Some(generate_triplets(cfg.rl_train_size, mix, cfg.thresholds, derive_seed("rl-train", cfg.data_seed, &[]))?),
                Some(generate_triplets(cfg.eval_size, mix, cfg.thresholds, derive_seed("rl-eval", cfg.data_seed, &[]))?),
            )
        } else {
            (None, None)
        };
        let human = Lexicon::from_human(&corpus, 0)?;
        Ok(Self {
            corpus,
            train,
            test,
            rl_train,
            rl_eval,
            human,
        })
    }
}

/// Deterministic sub-seed for one purpose within a run.
pub fn derive_seed(purpose: &str, seed: u64, parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(purpose.as_bytes());
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update(p.to_le_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Seed of the `k`-th listener of a population trained under run seed `seed`.
pub fn listener_seed(seed: u64, k: usize) -> u64 {
    seed * 1000 + k as u64
}

pub fn cell_dir(root: &Path, key: &CellKey) -> PathBuf {
    let cond = match key.listeners {
        Some(l) => format!("{l}-{}", key.upsampling),
        None => format!("sl-{}", key.upsampling),
    };
    root.join(cond).join(key.seed.to_string())
}

/// True when the cell's metrics and trial log exist and carry this digest.
/// A readable metrics file with a different digest is an error.
pub fn cell_complete(dir: &Path, digest: &str) -> Result<bool> {
    let (m, t) = (dir.join("metrics.csv"), dir.join("trial_log.csv"));
    if !m.exists() || !t.exists() {
        return Ok(false);
    }
    match read_metrics(&m) {
        Ok((d, _, _)) if d == digest => Ok(read_trial_log(&t).is_ok()),
        Ok((d, _, _)) => Err(Error::Resume(format!(
            "{} was produced under config digest {d}, not {digest}; refusing to resume",
            m.display()
        ))),
        Err(_) => Ok(false),
    }
}

struct Agents {
    speaker: Speaker<f64>,
    listeners: Vec<Listener<f64>>,
}

fn meta(seed: u64, epoch: usize, digest: &str) -> CheckpointMeta {
    CheckpointMeta::new(seed, epoch, digest)
}

fn save_agents(dir: &Path, a: &Agents, seed: u64, epoch: usize, digest: &str) -> Result<Vec<String>> {
    let ck = dir.join("checkpoints");
    std::fs::create_dir_all(&ck)?;
    let mut names = vec!["checkpoints/speaker.json".to_string()];
    a.speaker.save(ck.join("speaker.json"), meta(seed, epoch, digest))?;
    for (k, l) in a.listeners.iter().enumerate() {
        l.save(ck.join(format!("listener-{k}.json")), meta(listener_seed(seed, k), epoch, digest))?;
        names.push(format!("checkpoints/listener-{k}.json"));
    }
    Ok(names)
}

fn load_agents(dir: &Path, n: usize, digest: &str) -> Result<Agents> {
    let ck = dir.join("checkpoints");
    let check = |m: &CheckpointMeta, what: &str| {
        if m.config_digest != digest {
            return Err(Error::Checkpoint(format!("{what} belongs to config {}, not {digest}", m.config_digest)));
        }
        Ok(())
    };
    let (speaker, m) = Speaker::load(ck.join("speaker.json"))?;
    check(&m, "speaker checkpoint")?;
    let listeners = (0..n)
        .map(|k| {
            let (l, m) = Listener::load(ck.join(format!("listener-{k}.json")))?;
            check(&m, "listener checkpoint")?;
            Ok(l)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Agents { speaker, listeners })
}

fn sl_rows(phase: Phase, listener: Option<usize>, losses: &[f64]) -> Vec<EpochRow> {
    losses
        .iter()
        .enumerate()
        .map(|(e, &l)| EpochRow {
            epoch: e + 1,
            phase,
            listener_id: listener,
            mean_reward: None,
            mean_loss_speaker: (phase == Phase::SlSpeaker).then_some(l),
            mean_loss_listener: (phase == Phase::SlListener).then_some(l),
        })
        .collect()
}

fn train_sl(cfg: &ExperimentConfig, data: &SharedData, n_up: usize, seed: u64, population: usize, digest: &str, dir: &Path) -> Result<Agents> {
    let sl_corpus = if n_up > 0 {
        upsample(&data.train, UpsamplingConfig::new(n_up))
    } else {
        data.train.clone()
    };
    let vocab = Vocabulary::from_corpus(&sl_corpus);
    let mut record = RunRecord::new(seed, digest);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut speaker = Speaker::new(vocab.clone(), cfg.hidden, cfg.context_aware, &mut rng)?;
    let h = sl_train_speaker(&mut speaker, &sl_corpus, &cfg.sl, &mut rng)?;
    info!("sl speaker N={n_up} seed={seed}: loss {:.4} -> {:.4}", h.initial_loss, h.epoch_loss.last().copied().unwrap_or(f64::NAN));
    record.push_phase(Phase::SlSpeaker, sl_rows(Phase::SlSpeaker, None, &h.epoch_loss));

    let mut listeners = Vec::with_capacity(population);
    for k in 0..population {
        let mut rng = ChaCha8Rng::seed_from_u64(listener_seed(seed, k));
        let mut l = Listener::new(vocab.clone(), cfg.hidden, cfg.embedding, &mut rng)?;
        let h = sl_train_listener(&mut l, &sl_corpus, &cfg.sl, &mut rng)?;
        info!("sl listener {k} N={n_up} seed={seed}: accuracy {:.3}", h.epoch_accuracy.last().copied().unwrap_or(f64::NAN));
        record.push_phase(Phase::SlListener, sl_rows(Phase::SlListener, Some(k), &h.epoch_loss));
        listeners.push(l);
    }
    let agents = Agents { speaker, listeners };
    record.checkpoints = save_agents(dir, &agents, seed, cfg.sl.epochs, digest)?;
    record.save(dir)?;
    Ok(agents)
}

/// Scores a speaker and its listener population on one evaluation set.
pub fn evaluate_agents(
    speaker: &Speaker<f64>,
    listeners: &[Listener<f64>],
    eval: &Corpus,
    human: &Lexicon,
    seed: u64,
    eval_seed: u64,
) -> Result<(SeedMetrics, Lexicon)> {
    let lex = produce_lexicon(speaker, eval, seed)?;
    let mut acc = 0.0;
    let mut per = [(0.0, 0usize); 3];
    for (k, l) in listeners.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed("eval", eval_seed, &[k as u64]));
        let a = communication_accuracy(speaker, l, eval, &mut rng)?;
        acc += a.overall;
        for (slot, v) in per.iter_mut().zip(a.per_condition) {
            if let Some(v) = v {
                slot.0 += v;
                slot.1 += 1;
            }
        }
    }
    let n = listeners.len().max(1) as f64;
    let info = system_informativeness::<f64>(&lex).ok();
    let drift = semantic_drift::<f64>(&lex, human).ok();
    let metrics = SeedMetrics {
        acc_comm: (!listeners.is_empty()).then_some(acc / n),
        acc_by_condition: per.map(|(s, c)| (c > 0).then(|| s / c as f64)),
        lexical_diversity: lexical_diversity(&lex),
        informativeness: info.map(|i| i.value),
        informativeness_skipped: info.map_or(lex.trial_log().len(), |i| i.skipped_trials),
        convexity: Some(convexity(&lex, &eval.unique_targets())?.value),
        drift: drift.as_ref().map(|d| d.value),
        drift_shared: drift.as_ref().map_or(0, |d| d.shared_words),
        drift_agent_only: drift.as_ref().map_or(0, |d| d.agent_only_words),
        drift_human_only: drift.as_ref().map_or(0, |d| d.human_only_words),
    };
    Ok((metrics, lex))
}

fn finish_cell(dir: &Path, digest: &str, key: &CellKey, m: &SeedMetrics, lex: &Lexicon) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_trial_log(&dir.join("trial_log.csv"), lex)?;
    // metrics last: its presence marks the cell complete
    write_metrics(&dir.join("metrics.csv"), digest, key, m)
}

struct GroupResult {
    computed: Vec<CellKey>,
    skipped: Vec<CellKey>,
}

fn run_group(cfg: &ExperimentConfig, data: &SharedData, root: &Path, digest: &str, opts: RunOptions, n_up: usize, seed: u64) -> Result<GroupResult> {
    let population = *cfg.listeners.iter().max().expect("validated non-empty");
    let sl_key = CellKey {
        phase: ReportPhase::Sl,
        listeners: None,
        upsampling: n_up,
        seed,
    };
    let sl_dir = cell_dir(root, &sl_key);
    let rl_keys: Vec<CellKey> = if cfg.phase.includes_rl() {
        cfg.listeners
            .iter()
            .map(|&l| CellKey {
                phase: ReportPhase::SlRl,
                listeners: Some(l),
                upsampling: n_up,
                seed,
            })
            .collect()
    } else {
        Vec::new()
    };
    let fresh = opts.mode == RunMode::Evaluate || !opts.resume;
    let done = |k: &CellKey| -> Result<bool> { Ok(!fresh && cell_complete(&cell_dir(root, k), digest)?) };

    let sl_done = done(&sl_key)?;
    let mut rl_todo = Vec::new();
    let mut result = GroupResult {
        computed: Vec::new(),
        skipped: Vec::new(),
    };
    for k in &rl_keys {
        if done(k)? {
            result.skipped.push(*k);
        } else {
            rl_todo.push(*k);
        }
    }
    if sl_done {
        result.skipped.push(sl_key);
    }
    if sl_done && rl_todo.is_empty() {
        return Ok(result);
    }

    std::fs::create_dir_all(&sl_dir)?;
    let sl_agents = match opts.mode {
        RunMode::Evaluate => load_agents(&sl_dir, population, digest)?,
        RunMode::Train => match load_agents(&sl_dir, population, digest) {
            Ok(a) if opts.resume => a,
            _ => train_sl(cfg, data, n_up, seed, population, digest, &sl_dir)?,
        },
    };

    if !sl_done {
        let (m, lex) = evaluate_agents(&sl_agents.speaker, &sl_agents.listeners[..1], &data.test, &data.human, seed, derive_seed("sl", seed, &[n_up as u64]))?;
        finish_cell(&sl_dir, digest, &sl_key, &m, &lex)?;
        info!("sl N={n_up} seed={seed}: acc {:.3} |W| {}", m.acc_comm.unwrap_or(f64::NAN), m.lexical_diversity);
        result.computed.push(sl_key);
    }

    for key in rl_todo {
        let l = key.listeners.expect("rl cells have a listener count");
        let dir = cell_dir(root, &key);
        std::fs::create_dir_all(&dir)?;
        let agents = match opts.mode {
            RunMode::Evaluate => load_agents(&dir, l, digest)?,
            RunMode::Train => {
                let mut speaker = sl_agents.speaker.clone();
                let mut listeners = sl_agents.listeners[..l].to_vec();
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed("rl", seed, &[l as u64, n_up as u64]));
                let rl_corpus = data.rl_train.as_ref().expect("rl data loaded");
                let hist = rl_train(&mut speaker, &mut listeners, rl_corpus, &cfg.rl_for(l), &mut rng)?;
                let agents = Agents { speaker, listeners };
                let mut record = RunRecord::new(seed, digest);
                record.push_phase(Phase::Rl, hist.epochs);
                record.checkpoints = save_agents(&dir, &agents, seed, cfg.sl.epochs + cfg.rl.epochs, digest)?;
                record.save(&dir)?;
                agents
            }
        };
        let eval = data.rl_eval.as_ref().expect("rl data loaded");
        let (m, lex) = evaluate_agents(&agents.speaker, &agents.listeners, eval, &data.human, seed, derive_seed("sl+rl", seed, &[l as u64, n_up as u64]))?;
        finish_cell(&dir, digest, &key, &m, &lex)?;
        info!("sl+rl L={l} N={n_up} seed={seed}: acc {:.3} |W| {}", m.acc_comm.unwrap_or(f64::NAN), m.lexical_diversity);
        result.computed.push(key);
    }
    Ok(result)
}

/// Trains (or re-scores) every cell of the grid, then aggregates.
pub fn run_matrix(cfg: &ExperimentConfig, opts: RunOptions) -> Result<MatrixOutcome> {
    cfg.validate()?;
    let digest = cfg.digest()?;
    let root = cfg.out.join(&digest);
    std::fs::create_dir_all(&root)?;
    crate::agents::write_atomic(&root.join("config.txt"), cfg.to_text().as_bytes())?;
    let data = SharedData::load(cfg)?;
    info!("run matrix {digest}: {} human trials, {} train / {} test", data.corpus.len(), data.train.len(), data.test.len());

    let groups: Vec<(usize, u64)> = cfg
        .upsampling
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<GroupResult> = pool.install(|| {
        groups
            .par_iter()
            .map(|&(n, s)| run_group(cfg, &data, &root, &digest, opts, n, s))
            .collect::<Result<Vec<_>>>()
    })?;

    let reports = aggregate(cfg, &data.corpus, &root)?;
    super::report::write_reports(&root, &reports)?;
    let mut outcome = MatrixOutcome {
        digest,
        dir: root,
        reports,
        computed_cells: Vec::new(),
        skipped_cells: Vec::new(),
    };
    for r in results {
        outcome.computed_cells.extend(r.computed);
        outcome.skipped_cells.extend(r.skipped);
    }
    outcome.computed_cells.sort();
    outcome.skipped_cells.sort();
    Ok(outcome)
}

/// Pooled context-ease regression over several seeds' trial logs.
pub fn pooled_beta(lexicons: &[Lexicon], opts: RegressionOptions) -> Option<BetaSummary> {
    let (obs, _) = regression_observations(lexicons);
    match fit_context_regression(&obs, opts) {
        Ok(r) => Some(BetaSummary::from(&r)),
        Err(e) => {
            log::warn!("context regression failed: {e}");
            None
        }
    }
}

/// The human reference row, computed with the same operations as agents.
pub fn human_report(corpus: &Corpus, grouping: crate::metrics::ChipGrouping) -> Result<ConditionReport> {
    let lex = Lexicon::from_human(corpus, 0)?;
    let info = system_informativeness::<f64>(&lex)?;
    let m = SeedMetrics {
        // only successful trials are retained, so listeners were always right
        acc_comm: Some(1.0),
        acc_by_condition: [Some(1.0); 3],
        lexical_diversity: lexical_diversity(&lex),
        informativeness: Some(info.value),
        informativeness_skipped: info.skipped_trials,
        convexity: Some(convexity(&lex, &corpus.unique_targets())?.value),
        drift: None,
        ..Default::default()
    };
    let beta = pooled_beta(std::slice::from_ref(&lex), RegressionOptions { grouping, ..Default::default() });
    Ok(ConditionReport::aggregate(ReportPhase::Human, None, None, vec![(0, m)], beta))
}

/// Builds every condition row from the persisted cells under `root`.
pub fn aggregate(cfg: &ExperimentConfig, corpus: &Corpus, root: &Path) -> Result<Vec<ConditionReport>> {
    let mut conditions: Vec<(ReportPhase, Option<usize>, usize)> = cfg.upsampling.iter().map(|&n| (ReportPhase::Sl, None, n)).collect();
    if cfg.phase.includes_rl() {
        for &l in &cfg.listeners {
            for &n in &cfg.upsampling {
                conditions.push((ReportPhase::SlRl, Some(l), n));
            }
        }
    }
    let opts = RegressionOptions {
        grouping: cfg.chip_grouping,
        ..Default::default()
    };
    let mut reports = Vec::new();
    for (phase, listeners, n) in conditions {
        let mut per_seed = Vec::new();
        let mut logs = Vec::new();
        for &seed in &cfg.seeds {
            let dir = cell_dir(root, &CellKey { phase, listeners, upsampling: n, seed });
            let (Ok((_, _, m)), Ok(lex)) = (read_metrics(&dir.join("metrics.csv")), read_trial_log(&dir.join("trial_log.csv"))) else {
                continue;
            };
            per_seed.push((seed, m));
            logs.push(lex);
        }
        if per_seed.is_empty() {
            continue;
        }
        let beta = pooled_beta(&logs, opts);
        reports.push(ConditionReport::aggregate(phase, listeners, Some(n), per_seed, beta));
    }
    reports.push(human_report(corpus, cfg.chip_grouping)?);
    Ok(reports)
}
