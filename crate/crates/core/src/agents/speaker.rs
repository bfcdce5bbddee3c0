use rand::Rng;

use crate::colorspace::{delta_e, ColorChip};
use crate::dataset::Trial;
use crate::error::{Error, Result};
use crate::neuralnet::{argmax, log_softmax, softmax, Activation, Mlp, Trace};
use crate::scalar::Scalar;

use super::{normalize_chip, sample_index, Decode, Vocabulary};

/// Input width: normalized target followed by two normalized distractors.
pub const SPEAKER_INPUT: usize = 9;

#[derive(Clone, Debug, PartialEq)]
pub struct Speaker<T> {
    net: Mlp<T>,
    context_aware: bool,
    vocab: Vocabulary,
}

/// Distractors sorted by distance to the target, ties by chip order.
pub fn canonical_distractors(trial: &Trial) -> [ColorChip; 2] {
    let [a, b] = trial.distractors;
    let da: f64 = delta_e(&trial.target, &a);
    let db: f64 = delta_e(&trial.target, &b);
    match da.total_cmp(&db).then(a.cmp(&b)) {
        std::cmp::Ordering::Greater => [b, a],
        _ => [a, b],
    }
}

impl<T: Scalar> Speaker<T> {
    /// One hidden ReLU layer of width `hidden`; logits over `vocab`.
    pub fn new(vocab: Vocabulary, hidden: usize, context_aware: bool, rng: &mut impl Rng) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::Config("speaker vocabulary is empty".into()));
        }
        let net = Mlp::init(&[SPEAKER_INPUT, hidden, vocab.len()], Activation::Relu, Activation::Identity, rng)?;
        Self::from_parts(net, context_aware, vocab)
    }

    pub fn from_parts(net: Mlp<T>, context_aware: bool, vocab: Vocabulary) -> Result<Self> {
        if net.in_dim() != SPEAKER_INPUT || net.out_dim() != vocab.len() {
            return Err(Error::Shape(format!(
                "speaker network {}→{} does not match input {SPEAKER_INPUT} and vocabulary {}",
                net.in_dim(),
                net.out_dim(),
                vocab.len()
            )));
        }
        Ok(Self {
            net,
            context_aware,
            vocab,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn net(&self) -> &Mlp<T> {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp<T> {
        &mut self.net
    }

    pub fn context_aware(&self) -> bool {
        self.context_aware
    }

    pub fn input(&self, trial: &Trial) -> [T; SPEAKER_INPUT] {
        let mut x = [T::zero(); SPEAKER_INPUT];
        x[..3].copy_from_slice(&normalize_chip(&trial.target));
        if self.context_aware {
            let [d0, d1] = canonical_distractors(trial);
            x[3..6].copy_from_slice(&normalize_chip(&d0));
            x[6..].copy_from_slice(&normalize_chip(&d1));
        }
        x
    }

    pub fn logits(&self, trial: &Trial) -> Result<Vec<T>> {
        self.net.forward(&self.input(trial))
    }

    pub fn trace(&self, trial: &Trial) -> Result<Trace<T>> {
        self.net.forward_trace(&self.input(trial))
    }

    pub fn probabilities(&self, trial: &Trial) -> Result<Vec<T>> {
        Ok(softmax(&self.logits(trial)?))
    }

    /// Word id and its log-probability.
    pub fn speak(&self, trial: &Trial, mode: Decode, rng: &mut impl Rng) -> Result<(usize, T)> {
        let logits = self.logits(trial)?;
        let logp = log_softmax(&logits);
        let word = match mode {
            Decode::Argmax => argmax(&logits),
            Decode::Sample => sample_index(&softmax(&logits), rng),
        };
        Ok((word, logp[word]))
    }

    pub fn most_probable(&self, trial: &Trial) -> Result<(usize, T)> {
        let logits = self.logits(trial)?;
        let word = argmax(&logits);
        Ok((word, log_softmax(&logits)[word]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Condition, Source};
    use crate::neuralnet::DenseLayer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chip(l: f64, a: f64, b: f64) -> ColorChip {
        ColorChip::new(l, a, b).unwrap()
    }

    fn trial(t: ColorChip, d0: ColorChip, d1: ColorChip) -> Trial {
        Trial::new(t, [d0, d1], Condition::Far, None, Source::Generated).unwrap()
    }

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::new((0..n).map(|i| format!("w{i}")).collect()).unwrap()
    }

    /// Zero weights, fixed bias: logits independent of the input.
    fn constant_speaker(bias: Vec<f64>) -> Speaker<f64> {
        let n = bias.len();
        let net = Mlp::new(vec![
            DenseLayer::zeros(SPEAKER_INPUT, 4, Activation::Relu),
            DenseLayer::from_parts(4, n, vec![0.0; 4 * n], bias, Activation::Identity).unwrap(),
        ])
        .unwrap();
        Speaker::from_parts(net, true, vocab(n)).unwrap()
    }

    #[test]
    fn dominant_logit_always_emitted() {
        let s = constant_speaker(vec![0.0, 1000.0, 0.0]);
        let t = trial(chip(50.0, 0.0, 0.0), chip(10.0, 0.0, 0.0), chip(90.0, 0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(s.speak(&t, Decode::Sample, &mut rng).unwrap().0, 1);
        }
        assert_eq!(s.speak(&t, Decode::Argmax, &mut rng).unwrap().0, 1);
    }

    #[test]
    fn sampled_words_follow_softmax() {
        let p = [0.2f64, 0.3, 0.5];
        let s = constant_speaker(p.iter().map(|x| x.ln()).collect());
        let t = trial(chip(50.0, 0.0, 0.0), chip(10.0, 0.0, 0.0), chip(90.0, 0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            let (w, lp) = s.speak(&t, Decode::Sample, &mut rng).unwrap();
            assert!((lp - p[w].ln()).abs() < 1e-9);
            counts[w] += 1;
        }
        for (c, q) in counts.iter().zip(p) {
            assert!((*c as f64 / 10_000.0 - q).abs() <= 0.02);
        }
    }

    #[test]
    fn argmax_shift_invariant() {
        let a = constant_speaker(vec![0.5, 2.0, 1.9]);
        let b = constant_speaker(vec![100.5, 102.0, 101.9]);
        let t = trial(chip(50.0, 0.0, 0.0), chip(10.0, 0.0, 0.0), chip(90.0, 0.0, 0.0));
        assert_eq!(a.most_probable(&t).unwrap().0, b.most_probable(&t).unwrap().0);
    }

    #[test]
    fn distractor_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Speaker<f64> = Speaker::new(vocab(5), 16, true, &mut rng).unwrap();
        let (t, d0, d1) = (chip(50.0, 10.0, 10.0), chip(55.0, 10.0, 10.0), chip(20.0, -40.0, 60.0));
        let x = s.logits(&trial(t, d0, d1)).unwrap();
        let y = s.logits(&trial(t, d1, d0)).unwrap();
        assert_eq!(x, y);
        // equidistant distractors tie-break by chip order
        let (e0, e1) = (chip(60.0, 10.0, 10.0), chip(40.0, 10.0, 10.0));
        assert_eq!(canonical_distractors(&trial(t, e0, e1)), [e1, e0]);
    }

    #[test]
    fn context_blind_speaker_zeroes_distractors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s: Speaker<f64> = Speaker::new(vocab(3), 8, false, &mut rng).unwrap();
        let x = s.input(&trial(chip(50.0, 0.0, 0.0), chip(10.0, 5.0, 0.0), chip(90.0, 0.0, 3.0)));
        assert!(x[3..].iter().all(|v| *v == 0.0));
        assert_eq!(x[0], 0.5);
    }

    #[test]
    fn empty_vocabulary_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(Speaker::<f64>::new(vocab(0), 8, true, &mut rng).is_err());
    }
}
