use rand::seq::SliceRandom;
use rand::Rng;

use crate::agents::{Listener, ListenerGrads, Presented, Speaker};
use crate::dataset::{Corpus, Trial};
use crate::error::{Error, Result};
use crate::neuralnet::{argmax, log_softmax, softmax, MlpGrads, OptimizerState};
use crate::scalar::Scalar;

use super::SlConfig;

/// Cross-entropy curve of one supervised phase.
#[derive(Clone, Debug, PartialEq)]
pub struct SlHistory {
    /// Mean loss over the training set before the first update.
    pub initial_loss: f64,
    /// Running mean loss during each epoch.
    pub epoch_loss: Vec<f64>,
    /// Fraction of training trials whose argmax was correct, during each epoch.
    pub epoch_accuracy: Vec<f64>,
}

fn word_ids(vocab: &crate::agents::Vocabulary, train: &Corpus) -> Result<Vec<usize>> {
    train
        .trials()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let w = t
                .human_word
                .as_deref()
                .ok_or_else(|| Error::Config(format!("SL trial {i} has no human word")))?;
            vocab.require(w)
        })
        .collect()
}

fn check_inputs(train: &Corpus, cfg: &SlConfig) -> Result<()> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("SL training corpus is empty".into()));
    }
    Ok(())
}

fn speaker_step<T: Scalar>(s: &Speaker<T>, t: &Trial, word: usize, scale: T, grads: &mut MlpGrads<T>) -> Result<(f64, bool)> {
    let trace = s.trace(t)?;
    let logits = trace.output();
    let mut d = softmax(logits);
    let loss = -log_softmax(logits)[word];
    let hit = argmax(logits) == word;
    d[word] -= T::one();
    d.iter_mut().for_each(|x| *x *= scale);
    s.net().backward(&trace, &d, grads)?;
    Ok((loss.to_f64_lossy(), hit))
}

/// Minibatch cross-entropy on the human word of each trial.
pub fn sl_train_speaker<T: Scalar, R: Rng>(s: &mut Speaker<T>, train: &Corpus, cfg: &SlConfig, rng: &mut R) -> Result<SlHistory> {
    check_inputs(train, cfg)?;
    let words = word_ids(s.vocab(), train)?;
    let trials = train.trials();
    let initial_loss = trials
        .iter()
        .zip(&words)
        .map(|(t, &w)| Ok((-log_softmax(&s.logits(t)?)[w]).to_f64_lossy()))
        .sum::<Result<f64>>()?
        / trials.len() as f64;

    let mut opt = OptimizerState::new(cfg.adam());
    let mut grads = MlpGrads::zeros_like(s.net());
    let mut order: Vec<usize> = (0..trials.len()).collect();
    let mut history = SlHistory {
        initial_loss,
        epoch_loss: Vec::with_capacity(cfg.epochs),
        epoch_accuracy: Vec::with_capacity(cfg.epochs),
    };
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let (mut loss, mut hits) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            let scale = T::one() / T::from_usize_lossy(batch.len());
            for &i in batch {
                let (l, h) = speaker_step(s, &trials[i], words[i], scale, &mut grads)?;
                loss += l;
                hits += usize::from(h);
            }
            opt.step(&mut s.net_mut().param_slices_mut(), &grads.slices())?;
        }
        if !s.net().all_finite() {
            return Err(Error::NonFinite(format!("speaker parameters after SL epoch {}", epoch + 1)));
        }
        history.epoch_loss.push(loss / trials.len() as f64);
        history.epoch_accuracy.push(hits as f64 / trials.len() as f64);
    }
    Ok(history)
}

/// Minibatch cross-entropy on the target's position among shuffled candidates,
/// given the human word.
pub fn sl_train_listener<T: Scalar, R: Rng>(l: &mut Listener<T>, train: &Corpus, cfg: &SlConfig, rng: &mut R) -> Result<SlHistory> {
    check_inputs(train, cfg)?;
    let words = word_ids(l.vocab(), train)?;
    let trials = train.trials();
    let mut initial = 0.0;
    for (t, &w) in trials.iter().zip(&words) {
        let shown = Presented::shuffled(t, rng);
        let target = shown.target_index().expect("shuffled keeps the target");
        initial -= log_softmax(&l.scores(w, shown.candidates())?)[target].to_f64_lossy();
    }

    let mut opt = OptimizerState::new(cfg.adam());
    let mut grads = ListenerGrads::zeros_like(l);
    let mut order: Vec<usize> = (0..trials.len()).collect();
    let mut history = SlHistory {
        initial_loss: initial / trials.len() as f64,
        epoch_loss: Vec::with_capacity(cfg.epochs),
        epoch_accuracy: Vec::with_capacity(cfg.epochs),
    };
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let (mut loss, mut hits) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            let scale = T::one() / T::from_usize_lossy(batch.len());
            for &i in batch {
                let shown = Presented::shuffled(&trials[i], rng);
                let target = shown.target_index().expect("shuffled keeps the target");
                let fwd = l.forward_detail(words[i], shown.candidates())?;
                loss -= log_softmax(&fwd.scores)[target].to_f64_lossy();
                hits += usize::from(argmax(&fwd.scores) == target);
                let p = softmax(&fwd.scores);
                let mut d = [p[0], p[1], p[2]];
                d[target] -= T::one();
                let d = d.map(|x| x * scale);
                l.accumulate(words[i], &fwd, &d, &mut grads)?;
            }
            opt.step(&mut l.param_slices_mut(), &grads.slices())?;
        }
        if !l.all_finite() {
            return Err(Error::NonFinite(format!("listener parameters after SL epoch {}", epoch + 1)));
        }
        history.epoch_loss.push(loss / trials.len() as f64);
        history.epoch_accuracy.push(hits as f64 / trials.len() as f64);
    }
    Ok(history)
}
