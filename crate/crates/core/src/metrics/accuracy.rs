use rand::Rng;

use crate::agents::{Decode, ListenerPolicy, Presented, Speaker};
use crate::dataset::{Condition, Corpus};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accuracy {
    pub overall: f64,
    pub trials: usize,
    /// Indexed like [`Condition::ALL`]; `None` when a condition has no trials.
    pub per_condition: [Option<f64>; 3],
    pub condition_trials: [usize; 3],
}

/// Fraction of trials where the listener recovers the speaker's target.
/// Both agents decode greedily; candidate order is shuffled from `rng`.
pub fn communication_accuracy<T, L, R>(speaker: &Speaker<T>, listener: &L, eval: &Corpus, rng: &mut R) -> Result<Accuracy>
where
    T: Scalar,
    L: ListenerPolicy<T>,
    R: Rng,
{
    if eval.is_empty() {
        return Err(Error::Metric("evaluation corpus is empty".into()));
    }
    let mut hits = [0usize; 3];
    let mut counts = [0usize; 3];
    for trial in eval.trials() {
        let (word, _) = speaker.most_probable(trial)?;
        let shown = Presented::shuffled(trial, rng);
        let (choice, _) = listener.choose(word, &shown, Decode::Argmax, rng)?;
        let k = trial.condition.index();
        counts[k] += 1;
        if Some(choice) == shown.target_index() {
            hits[k] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let per_condition = [0, 1, 2].map(|k| (counts[k] > 0).then(|| hits[k] as f64 / counts[k] as f64));
    debug_assert_eq!(Condition::ALL.len(), 3);
    Ok(Accuracy {
        overall: hits.iter().sum::<usize>() as f64 / total as f64,
        trials: total,
        per_condition,
        condition_trials: counts,
    })
}
