use rand::seq::SliceRandom;
use rand::Rng;

use crate::agents::{Decode, Listener, ListenerForward, ListenerGrads, ListenerPolicy, Presented, Speaker};
use crate::dataset::{Corpus, Trial};
use crate::error::{Error, Result};
use crate::neuralnet::{clip_global_norm, log_softmax, softmax, MlpGrads, OptimizerState, Trace};
use crate::scalar::Scalar;

use super::record::EpochRow;
use super::{Phase, RlConfig};

/// One referential game.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundOutcome<T> {
    pub reward: f64,
    pub speaker_log_prob: T,
    pub listener_log_prob: T,
    pub word: usize,
    pub choice: usize,
    pub target_index: usize,
}

/// Speaker samples a word, candidates are shuffled, listener samples a choice.
pub fn rl_play_round<T, L, R>(s: &Speaker<T>, l: &L, t: &Trial, rng: &mut R) -> Result<RoundOutcome<T>>
where
    T: Scalar,
    L: ListenerPolicy<T>,
    R: Rng,
{
    let (word, speaker_log_prob) = s.speak(t, Decode::Sample, rng)?;
    let shown = Presented::shuffled(t, rng);
    let (choice, listener_log_prob) = l.choose(word, &shown, Decode::Sample, rng)?;
    let target_index = shown.target_index().expect("shuffled keeps the target");
    Ok(RoundOutcome {
        reward: if choice == target_index { 1.0 } else { 0.0 },
        speaker_log_prob,
        listener_log_prob,
        word,
        choice,
        target_index,
    })
}

/// Gradient of `−A·log p[k] − λ·H(p)` with respect to the logits.
fn policy_grad<T: Scalar>(logits: &[T], k: usize, advantage: f64, entropy: f64, scale: T) -> (Vec<T>, f64) {
    let p = softmax(logits);
    let logp = log_softmax(logits);
    let h: T = -p.iter().zip(&logp).map(|(&a, &b)| a * b).sum::<T>();
    let a = T::lit(advantage);
    let lam = T::lit(entropy);
    let grad = p
        .iter()
        .zip(&logp)
        .enumerate()
        .map(|(j, (&pj, &lj))| {
            let onehot = if j == k { T::one() } else { T::zero() };
            (a * (pj - onehot) + lam * pj * (lj + h)) * scale
        })
        .collect();
    let loss = -advantage * logp[k].to_f64_lossy() - entropy * h.to_f64_lossy();
    (grad, loss)
}

/// Optimizer, gradient buffer and reward baseline of a learning speaker.
pub struct SpeakerLearner<T> {
    opt: OptimizerState<T>,
    grads: MlpGrads<T>,
    pub baseline: f64,
    cfg: RlConfig,
}

impl<T: Scalar> SpeakerLearner<T> {
    pub fn new(s: &Speaker<T>, cfg: &RlConfig) -> Self {
        Self {
            opt: OptimizerState::new(cfg.adam()),
            grads: MlpGrads::zeros_like(s.net()),
            baseline: cfg.baseline_init,
            cfg: *cfg,
        }
    }

    fn begin(&mut self) {
        self.grads.clear();
    }

    /// Adds one round; the advantage uses the baseline before this reward.
    fn add(&mut self, s: &Speaker<T>, trace: &Trace<T>, word: usize, reward: f64, scale: T) -> Result<f64> {
        let adv = reward - self.baseline;
        self.baseline = self.cfg.baseline_decay * self.baseline + (1.0 - self.cfg.baseline_decay) * reward;
        let (g, loss) = policy_grad(trace.output(), word, adv, self.cfg.speaker_entropy, scale);
        s.net().backward(trace, &g, &mut self.grads)?;
        Ok(loss)
    }

    fn finish(&mut self, s: &mut Speaker<T>) -> Result<()> {
        if let Some(c) = self.cfg.clip_norm {
            clip_global_norm(&mut self.grads.slices_mut(), T::lit(c));
        }
        self.opt.step(&mut s.net_mut().param_slices_mut(), &self.grads.slices())
    }

    /// Updates the speaker from a minibatch of `(trial, emitted word, reward)`.
    pub fn update(&mut self, s: &mut Speaker<T>, batch: &[(&Trial, usize, f64)]) -> Result<f64> {
        self.begin();
        let scale = T::one() / T::from_usize_lossy(batch.len());
        let mut loss = 0.0;
        for (t, w, r) in batch {
            let trace = s.trace(t)?;
            loss += self.add(s, &trace, *w, *r, scale)?;
        }
        self.finish(s)?;
        Ok(loss)
    }
}

/// Optimizer, gradient buffer and reward baseline of a learning listener.
pub struct ListenerLearner<T> {
    opt: OptimizerState<T>,
    grads: ListenerGrads<T>,
    pub baseline: f64,
    cfg: RlConfig,
}

impl<T: Scalar> ListenerLearner<T> {
    pub fn new(l: &Listener<T>, cfg: &RlConfig) -> Self {
        Self {
            opt: OptimizerState::new(cfg.adam()),
            grads: ListenerGrads::zeros_like(l),
            baseline: cfg.baseline_init,
            cfg: *cfg,
        }
    }

    fn add(&mut self, l: &Listener<T>, word: usize, fwd: &ListenerForward<T>, choice: usize, reward: f64, scale: T) -> Result<f64> {
        let adv = reward - self.baseline;
        self.baseline = self.cfg.baseline_decay * self.baseline + (1.0 - self.cfg.baseline_decay) * reward;
        let (g, loss) = policy_grad(&fwd.scores, choice, adv, self.cfg.listener_entropy, scale);
        l.accumulate(word, fwd, &[g[0], g[1], g[2]], &mut self.grads)?;
        Ok(loss)
    }

    fn finish(&mut self, l: &mut Listener<T>) -> Result<()> {
        if let Some(c) = self.cfg.clip_norm {
            clip_global_norm(&mut self.grads.slices_mut(), T::lit(c));
        }
        self.opt.step(&mut l.param_slices_mut(), &self.grads.slices())
    }
}

/// Listener index for every RL epoch: listeners in a seeded random order,
/// each for `epochs / n` consecutive epochs.
pub fn listener_schedule<R: Rng>(n: usize, epochs: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n == 0 || !epochs.is_multiple_of(n) {
        return Err(Error::Config(format!("{epochs} RL epochs cannot be split evenly over {n} listeners")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(order.iter().flat_map(|&k| std::iter::repeat_n(k, epochs / n)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RlHistory {
    pub schedule: Vec<usize>,
    pub epochs: Vec<EpochRow>,
}

/// Referential-game training of one speaker against a listener population.
pub fn rl_train<T: Scalar, R: Rng>(
    s: &mut Speaker<T>,
    listeners: &mut [Listener<T>],
    train: &Corpus,
    cfg: &RlConfig,
    rng: &mut R,
) -> Result<RlHistory> {
    cfg.validate()?;
    if listeners.len() != cfg.listeners {
        return Err(Error::Config(format!(
            "RL config expects {} listeners, got {}",
            cfg.listeners,
            listeners.len()
        )));
    }
    if train.is_empty() {
        return Err(Error::Config("RL training corpus is empty".into()));
    }
    let schedule = listener_schedule(cfg.listeners, cfg.epochs, rng)?;
    let mut speaker = SpeakerLearner::new(s, cfg);
    let mut learners: Vec<ListenerLearner<T>> = listeners.iter().map(|l| ListenerLearner::new(l, cfg)).collect();
    let trials = train.trials();
    let mut order: Vec<usize> = (0..trials.len()).collect();
    let mut rows = Vec::with_capacity(cfg.epochs);

    for (epoch, &k) in schedule.iter().enumerate() {
        if cfg.reshuffle || epoch == 0 {
            order.shuffle(rng);
        }
        let listener = &mut listeners[k];
        let learner = &mut learners[k];
        let (mut reward, mut ls, mut ll) = (0.0, 0.0, 0.0);
        for batch in order.chunks(cfg.batch_size) {
            speaker.begin();
            learner.grads.clear();
            let scale = T::one() / T::from_usize_lossy(batch.len());
            for &i in batch {
                let t = &trials[i];
                let trace = s.trace(t)?;
                let logits = trace.output();
                let word = crate::agents::sample_from_logits(logits, rng);
                let shown = Presented::shuffled(t, rng);
                let fwd = listener.forward_detail(word, shown.candidates())?;
                let choice = crate::agents::sample_from_logits(&fwd.scores, rng);
                let r = if Some(choice) == shown.target_index() { 1.0 } else { 0.0 };
                reward += r;
                ls += speaker.add(s, &trace, word, r, scale)?;
                ll += learner.add(listener, word, &fwd, choice, r, scale)?;
            }
            speaker.finish(s)?;
            learner.finish(listener)?;
        }
        if !s.net().all_finite() || !listener.all_finite() {
            return Err(Error::NonFinite(format!("agent parameters after RL epoch {}", epoch + 1)));
        }
        let n = trials.len() as f64;
        rows.push(EpochRow {
            epoch: epoch + 1,
            phase: Phase::Rl,
            listener_id: Some(k),
            mean_reward: Some(reward / n),
            mean_loss_speaker: Some(ls / n),
            mean_loss_listener: Some(ll / n),
        });
    }
    Ok(RlHistory { schedule, epochs: rows })
}
