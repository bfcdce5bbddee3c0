//! Lexicon-level evaluation: accuracy, spread and informativeness, lexical
//! diversity, convexity, drift from the human lexicon, and the context-ease
//! regression.

mod accuracy;
mod convexity;
mod regression;
mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::colorspace::{delta_e, ColorChip};
use crate::dataset::Corpus;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use accuracy::{communication_accuracy, Accuracy};
pub use convexity::{convexity, convexity_on_grid, srgb_grid_universe, ConvexityReport, HULL_EPSILON};
pub use report::{BetaSummary, ConditionReport, MeanSe, ReportPhase, SeedMetrics};
pub use regression::{
    fit_context_regression, regression_observations, ChipGrouping, Observation, RegressionOptions, RegressionResult,
};

/// One evaluation trial as named by a speaker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub word: String,
    pub target: ColorChip,
    pub e_ctx: f64,
    pub seed: u64,
}

/// Word → denotation (multiset of target chips), plus the per-trial log.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<ColorChip>>,
    trial_log: Vec<TrialRecord>,
}

impl Lexicon {
    pub fn from_records(records: Vec<TrialRecord>) -> Self {
        let mut entries: BTreeMap<String, Vec<ColorChip>> = BTreeMap::new();
        for r in &records {
            entries.entry(r.word.clone()).or_default().push(r.target);
        }
        Self {
            entries,
            trial_log: records,
        }
    }

    /// The lexicon implied by the human labels of a corpus.
    pub fn from_human(corpus: &Corpus, seed: u64) -> Result<Self> {
        let records = corpus
            .trials()
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let word = t
                    .human_word
                    .clone()
                    .ok_or_else(|| Error::Metric(format!("trial {i} has no human word")))?;
                Ok(TrialRecord {
                    word,
                    target: t.target,
                    e_ctx: t.context_ease::<f64>(),
                    seed,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_records(records))
    }

    pub fn entries(&self) -> &BTreeMap<String, Vec<ColorChip>> {
        &self.entries
    }

    pub fn trial_log(&self) -> &[TrialRecord] {
        &self.trial_log
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn denotation(&self, word: &str) -> Option<&[ColorChip]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn unique_chips(&self, word: &str) -> Vec<ColorChip> {
        let mut chips = self.denotation(word).map(<[_]>::to_vec).unwrap_or_default();
        chips.sort_unstable();
        chips.dedup();
        chips
    }

    /// Spread statistics for every word.
    pub fn word_stats<T: Scalar>(&self) -> BTreeMap<String, WordStats<T>> {
        self.entries
            .iter()
            .map(|(w, chips)| (w.clone(), word_spread(chips)))
            .collect()
    }

    /// Distinct target chips across the log.
    pub fn targets(&self) -> Vec<ColorChip> {
        let set: BTreeSet<ColorChip> = self.trial_log.iter().map(|r| r.target).collect();
        set.into_iter().collect()
    }
}

/// Spread and informativeness of one word; undefined below two unique chips.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WordStats<T> {
    pub spread: Option<T>,
    pub informativeness: Option<T>,
    pub unique_chips: usize,
}

/// Mean CIELAB distance over unordered pairs of distinct chips.
pub fn word_spread<T: Scalar>(denotation: &[ColorChip]) -> WordStats<T> {
    let mut chips = denotation.to_vec();
    chips.sort_unstable();
    chips.dedup();
    let k = chips.len();
    if k < 2 {
        return WordStats {
            spread: None,
            informativeness: None,
            unique_chips: k,
        };
    }
    // Accumulate in f64 regardless of T; the pair count can be in the millions.
    let mut total = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            total += delta_e::<f64>(&chips[i], &chips[j]);
        }
    }
    let pairs = (k * (k - 1) / 2) as f64;
    let spread = T::lit(total / pairs);
    WordStats {
        spread: Some(spread),
        informativeness: Some(T::one() / spread),
        unique_chips: k,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemInformativeness<T> {
    pub value: T,
    pub used_trials: usize,
    pub skipped_trials: usize,
}

/// Interaction-weighted mean of `I_w` over the trial log.
pub fn system_informativeness<T: Scalar>(lex: &Lexicon) -> Result<SystemInformativeness<T>> {
    let stats = lex.word_stats::<T>();
    let mut sum = 0.0f64;
    let (mut used, mut skipped) = (0usize, 0usize);
    for r in lex.trial_log() {
        match stats.get(&r.word).and_then(|s| s.informativeness) {
            Some(iw) => {
                sum += iw.to_f64_lossy();
                used += 1;
            }
            None => skipped += 1,
        }
    }
    if used == 0 {
        return Err(Error::Metric(
            "no trial uses a word with at least two distinct chips; I_L undefined".into(),
        ));
    }
    Ok(SystemInformativeness {
        value: T::lit(sum / used as f64),
        used_trials: used,
        skipped_trials: skipped,
    })
}

/// Number of distinct words used at least once.
pub fn lexical_diversity(lex: &Lexicon) -> usize {
    lex.entries.values().filter(|d| !d.is_empty()).count()
}

/// Unweighted centroid of a word's distinct chips.
pub fn prototype<T: Scalar>(lex: &Lexicon, word: &str) -> Option<[T; 3]> {
    let chips = lex.unique_chips(word);
    if chips.is_empty() {
        return None;
    }
    let mut acc = [T::zero(); 3];
    for c in &chips {
        for (a, v) in acc.iter_mut().zip(c.lab::<T>()) {
            *a += v;
        }
    }
    let n = T::from_usize_lossy(chips.len());
    Some(acc.map(|a| a / n))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Drift<T> {
    pub value: T,
    pub shared_words: usize,
    pub agent_only_words: usize,
    pub human_only_words: usize,
}

/// Mean prototype distance over words both lexicons use.
pub fn semantic_drift<T: Scalar>(agent: &Lexicon, human: &Lexicon) -> Result<Drift<T>> {
    let a: BTreeSet<&str> = agent.words().collect();
    let h: BTreeSet<&str> = human.words().collect();
    let shared: Vec<&str> = a.intersection(&h).copied().collect();
    if shared.is_empty() {
        return Err(Error::Metric("agent and human lexicons share no words".into()));
    }
    let mut total = T::zero();
    for w in &shared {
        let p = prototype::<T>(agent, w).expect("shared word has chips");
        let q = prototype::<T>(human, w).expect("shared word has chips");
        let d2: T = p.iter().zip(&q).map(|(x, y)| (*x - *y) * (*x - *y)).sum();
        total += d2.sqrt();
    }
    Ok(Drift {
        value: total / T::from_usize_lossy(shared.len()),
        shared_words: shared.len(),
        agent_only_words: a.difference(&h).count(),
        human_only_words: h.difference(&a).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chip(l: f64, a: f64, b: f64) -> ColorChip {
        ColorChip::new(l, a, b).unwrap()
    }

    fn rec(word: &str, c: ColorChip) -> TrialRecord {
        TrialRecord {
            word: word.into(),
            target: c,
            e_ctx: 10.0,
            seed: 0,
        }
    }

    #[test]
    fn two_chips_at_ten() {
        let s = word_spread::<f64>(&[chip(50.0, 0.0, 0.0), chip(60.0, 0.0, 0.0)]);
        assert_eq!(s.spread, Some(10.0));
        assert_eq!(s.informativeness, Some(0.1));
    }

    #[test]
    fn three_collinear_chips() {
        let s = word_spread::<f64>(&[chip(0.0, 0.0, 0.0), chip(1.0, 0.0, 0.0), chip(2.0, 0.0, 0.0)]);
        assert!((s.spread.unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn duplicates_collapse_and_singletons_are_undefined() {
        let a = chip(10.0, 0.0, 0.0);
        let s = word_spread::<f64>(&[a, a, a]);
        assert_eq!(s.unique_chips, 1);
        assert!(s.spread.is_none() && s.informativeness.is_none());
        let s = word_spread::<f64>(&[a, a, chip(20.0, 0.0, 0.0)]);
        assert_eq!(s.spread, Some(10.0));
    }

    fn arb_chip() -> impl Strategy<Value = ColorChip> {
        (0..=1000i32, -1280..=1280i32, -1280..=1280i32).prop_map(|(l, a, b)| ColorChip::from_tenths(l, a, b).unwrap())
    }

    proptest! {
        #[test]
        fn spread_matches_ordered_pair_double_loop(chips in proptest::collection::vec(arb_chip(), 2..60)) {
            let mut uniq = chips.clone();
            uniq.sort();
            uniq.dedup();
            prop_assume!(uniq.len() >= 2);
            // ordered pairs, divided by the ordered pair count
            let mut total = 0.0;
            let mut count = 0usize;
            for i in 0..uniq.len() {
                for j in 0..uniq.len() {
                    if i != j {
                        let d = ((uniq[i].l() - uniq[j].l()).powi(2) + (uniq[i].a() - uniq[j].a()).powi(2) + (uniq[i].b() - uniq[j].b()).powi(2)).sqrt();
                        total += d;
                        count += 1;
                    }
                }
            }
            let s = word_spread::<f64>(&chips).spread.unwrap();
            prop_assert!((s - total / count as f64).abs() <= 1e-9);
        }
    }

    #[test]
    fn informativeness_single_word() {
        let lex = Lexicon::from_records(vec![
            rec("a", chip(0.0, 0.0, 0.0)),
            rec("a", chip(2.0, 0.0, 0.0)),
            rec("a", chip(2.0, 0.0, 0.0)),
        ]);
        assert_eq!(system_informativeness::<f64>(&lex).unwrap().value, 0.5);
    }

    #[test]
    fn informativeness_is_interaction_weighted() {
        // word x: spread 10 → I 0.1, used 30 times; word y: spread 10/3 → I 0.3, used 10 times
        let mut records = Vec::new();
        for i in 0..30 {
            records.push(rec("x", if i % 2 == 0 { chip(0.0, 0.0, 0.0) } else { chip(10.0, 0.0, 0.0) }));
        }
        let y = [chip(50.0, 0.0, 0.0), chip(50.0, 0.0, 10.0 / 3.0)];
        for i in 0..10 {
            records.push(rec("y", y[i % 2]));
        }
        let lex = Lexicon::from_records(records);
        let iy = lex.word_stats::<f64>()["y"].informativeness.unwrap();
        let expected = (30.0 * 0.1 + 10.0 * iy) / 40.0;
        let got = system_informativeness::<f64>(&lex).unwrap();
        assert!((got.value - expected).abs() < 1e-12);
        assert!((iy - 0.3).abs() < 0.01);
    }

    #[test]
    fn informativeness_errors_when_all_undefined() {
        let lex = Lexicon::from_records(vec![rec("a", chip(1.0, 0.0, 0.0)), rec("b", chip(2.0, 0.0, 0.0))]);
        assert!(system_informativeness::<f64>(&lex).is_err());
        assert_eq!(lexical_diversity(&lex), 2);
        assert_eq!(lexical_diversity(&Lexicon::default()), 0);
    }

    #[test]
    fn drift_examples() {
        let human = Lexicon::from_records(vec![rec("red", chip(50.0, 60.0, 40.0)), rec("blue", chip(30.0, 20.0, -60.0))]);
        assert_eq!(semantic_drift::<f64>(&human, &human).unwrap().value, 0.0);
        let agent = Lexicon::from_records(vec![rec("red", chip(57.0, 60.0, 40.0)), rec("teal", chip(50.0, -30.0, -10.0))]);
        let d = semantic_drift::<f64>(&agent, &human).unwrap();
        assert!((d.value - 7.0).abs() < 1e-12);
        assert_eq!((d.shared_words, d.agent_only_words, d.human_only_words), (1, 1, 1));
        let back = semantic_drift::<f64>(&human, &agent).unwrap();
        assert_eq!(back.value, d.value);
        let disjoint = Lexicon::from_records(vec![rec("mauve", chip(50.0, 0.0, 0.0))]);
        assert!(semantic_drift::<f64>(&disjoint, &human).is_err());
    }
}
