use rand::seq::SliceRandom;
use rand::Rng;

use crate::colorspace::ColorChip;
use crate::dataset::Trial;
use crate::error::{Error, Result};
use crate::neuralnet::{argmax, log_softmax, softmax, Activation, Mlp, MlpGrads, Trace};
use crate::scalar::Scalar;

use super::{normalize_chip, sample_index, Decode, Vocabulary};

/// Candidates in the order a listener sees them. The caller keeps track of
/// where the target ended up; listeners only look at `candidates`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Presented {
    candidates: [ColorChip; 3],
    target_index: Option<usize>,
}

impl Presented {
    pub fn new(candidates: [ColorChip; 3]) -> Self {
        Self {
            candidates,
            target_index: None,
        }
    }

    /// Target and distractors in a fresh random order.
    pub fn shuffled(trial: &Trial, rng: &mut impl Rng) -> Self {
        let mut order = [0usize, 1, 2];
        order.shuffle(rng);
        let all = trial.candidates();
        let candidates = order.map(|i| all[i]);
        let target_index = order.iter().position(|&i| i == 0);
        Self {
            candidates,
            target_index,
        }
    }

    pub fn candidates(&self) -> &[ColorChip; 3] {
        &self.candidates
    }

    pub fn target_index(&self) -> Option<usize> {
        self.target_index
    }
}

/// Anything that can pick a referent given a word.
pub trait ListenerPolicy<T: Scalar> {
    /// Chosen candidate index and its log-probability.
    fn choose<R: Rng + ?Sized>(&self, word: usize, shown: &Presented, mode: Decode, rng: &mut R) -> Result<(usize, T)>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Listener<T> {
    embeddings: Vec<T>,
    encoder: Mlp<T>,
    dim: usize,
    vocab: Vocabulary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ListenerGrads<T> {
    pub embeddings: Vec<T>,
    pub encoder: MlpGrads<T>,
}

impl<T: Scalar> ListenerGrads<T> {
    pub fn zeros_like(l: &Listener<T>) -> Self {
        Self {
            embeddings: vec![T::zero(); l.embeddings.len()],
            encoder: MlpGrads::zeros_like(&l.encoder),
        }
    }

    pub fn clear(&mut self) {
        self.embeddings.iter_mut().for_each(|g| *g = T::zero());
        self.encoder.clear();
    }

    pub fn slices(&self) -> Vec<&[T]> {
        let mut out = vec![self.embeddings.as_slice()];
        out.extend(self.encoder.slices());
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = vec![self.embeddings.as_mut_slice()];
        out.extend(self.encoder.slices_mut());
        out
    }
}

/// Intermediate values of one listener forward pass, kept for training.
pub struct ListenerForward<T> {
    pub traces: [Trace<T>; 3],
    pub scores: [T; 3],
}

impl<T: Scalar> Listener<T> {
    /// Word embeddings of width `dim`; color encoder `3 → hidden → dim`.
    pub fn new(vocab: Vocabulary, hidden: usize, dim: usize, rng: &mut impl Rng) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::Config("listener vocabulary is empty".into()));
        }
        let limit = (6.0 / (vocab.len() + dim) as f64).sqrt();
        let embeddings = (0..vocab.len() * dim)
            .map(|_| T::lit(rng.random_range(-limit..=limit)))
            .collect();
        let encoder = Mlp::init(&[3, hidden, dim], Activation::Relu, Activation::Identity, rng)?;
        Self::from_parts(embeddings, encoder, vocab)
    }

    pub fn from_parts(embeddings: Vec<T>, encoder: Mlp<T>, vocab: Vocabulary) -> Result<Self> {
        let dim = encoder.out_dim();
        if encoder.in_dim() != 3 || embeddings.len() != vocab.len() * dim {
            return Err(Error::Shape(format!(
                "listener with {} embedding values for {} words and encoder {}→{}",
                embeddings.len(),
                vocab.len(),
                encoder.in_dim(),
                dim
            )));
        }
        Ok(Self {
            embeddings,
            encoder,
            dim,
            vocab,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embeddings(&self) -> &[T] {
        &self.embeddings
    }

    pub fn encoder(&self) -> &Mlp<T> {
        &self.encoder
    }

    pub fn embedding(&self, word: usize) -> &[T] {
        &self.embeddings[word * self.dim..(word + 1) * self.dim]
    }

    pub fn all_finite(&self) -> bool {
        self.encoder.all_finite() && self.embeddings.iter().all(|x| x.is_finite())
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = vec![self.embeddings.as_mut_slice()];
        out.extend(self.encoder.param_slices_mut());
        out
    }

    fn check_word(&self, word: usize) -> Result<()> {
        if word >= self.vocab.len() {
            return Err(Error::Shape(format!("word id {word} outside vocabulary of {}", self.vocab.len())));
        }
        Ok(())
    }

    fn dot(a: &[T], b: &[T]) -> T {
        a.iter().zip(b).map(|(&x, &y)| x * y).sum()
    }

    pub fn scores(&self, word: usize, candidates: &[ColorChip; 3]) -> Result<[T; 3]> {
        self.check_word(word)?;
        let e = self.embedding(word);
        let mut out = [T::zero(); 3];
        for (s, c) in out.iter_mut().zip(candidates) {
            *s = Self::dot(e, &self.encoder.forward(&normalize_chip(c))?);
        }
        Ok(out)
    }

    pub fn forward_detail(&self, word: usize, candidates: &[ColorChip; 3]) -> Result<ListenerForward<T>> {
        self.check_word(word)?;
        let e = self.embedding(word);
        let traces = [
            self.encoder.forward_trace(&normalize_chip(&candidates[0]))?,
            self.encoder.forward_trace(&normalize_chip(&candidates[1]))?,
            self.encoder.forward_trace(&normalize_chip(&candidates[2]))?,
        ];
        let scores = [0, 1, 2].map(|i| Self::dot(e, traces[i].output()));
        Ok(ListenerForward { traces, scores })
    }

    /// Accumulates gradients of `Σ_i dscores[i] · score_i`.
    pub fn accumulate(&self, word: usize, fwd: &ListenerForward<T>, dscores: &[T; 3], grads: &mut ListenerGrads<T>) -> Result<()> {
        let e = self.embedding(word);
        let ge = &mut grads.embeddings[word * self.dim..(word + 1) * self.dim];
        for (trace, &ds) in fwd.traces.iter().zip(dscores) {
            if ds == T::zero() {
                continue;
            }
            for (g, &h) in ge.iter_mut().zip(trace.output()) {
                *g += ds * h;
            }
            let upstream: Vec<T> = e.iter().map(|&x| ds * x).collect();
            self.encoder.backward(trace, &upstream, &mut grads.encoder)?;
        }
        Ok(())
    }

    pub fn listen(&self, word: usize, shown: &Presented, mode: Decode, rng: &mut (impl Rng + ?Sized)) -> Result<(usize, T)> {
        let scores = self.scores(word, shown.candidates())?;
        let choice = match mode {
            Decode::Argmax => argmax(&scores),
            Decode::Sample => sample_index(&softmax(&scores), rng),
        };
        Ok((choice, log_softmax(&scores)[choice]))
    }
}

impl<T: Scalar> ListenerPolicy<T> for Listener<T> {
    fn choose<R: Rng + ?Sized>(&self, word: usize, shown: &Presented, mode: Decode, rng: &mut R) -> Result<(usize, T)> {
        self.listen(word, shown, mode, rng)
    }
}

/// Always picks the target. Useful as an upper bound and in tests.
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleListener;

impl<T: Scalar> ListenerPolicy<T> for OracleListener {
    fn choose<R: Rng + ?Sized>(&self, _word: usize, shown: &Presented, _mode: Decode, _rng: &mut R) -> Result<(usize, T)> {
        let i = shown
            .target_index()
            .ok_or_else(|| Error::Shape("oracle listener needs a presentation with a known target".into()))?;
        Ok((i, T::zero()))
    }
}

/// Picks uniformly at random, ignoring the word.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomListener;

impl<T: Scalar> ListenerPolicy<T> for RandomListener {
    fn choose<R: Rng + ?Sized>(&self, _word: usize, _shown: &Presented, _mode: Decode, rng: &mut R) -> Result<(usize, T)> {
        Ok((rng.random_range(0..3), T::lit(-(3f64.ln()))))
    }
}
