//! Synthetic target/distractor triplets with a controlled context mix.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::colorspace::{delta_e, hsl_to_cielab, ColorChip, HslColor};
use crate::error::{Error, Result};

use super::{Condition, Corpus, Source, Trial};

/// Distance bands (CIELAB units) separating similar from distinct distractors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub close_max: f64,
    pub far_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            close_max: 20.0,
            far_min: 50.0,
        }
    }
}

impl Thresholds {
    pub fn new(close_max: f64, far_min: f64) -> Result<Self> {
        if !(close_max > 0.0 && close_max < far_min && far_min.is_finite()) {
            return Err(Error::Config(format!(
                "thresholds need 0 < close_max < far_min (got {close_max}, {far_min})"
            )));
        }
        Ok(Self { close_max, far_min })
    }

    fn is_close(&self, d: f64) -> bool {
        d < self.close_max
    }

    fn is_far(&self, d: f64) -> bool {
        d > self.far_min
    }

    /// Whether a pair of target-distractor distances fits `condition`.
    pub fn accepts(&self, condition: Condition, d0: f64, d1: f64) -> bool {
        match condition {
            Condition::Close => self.is_close(d0) && self.is_close(d1),
            Condition::Far => self.is_far(d0) && self.is_far(d1),
            Condition::Split => {
                (self.is_close(d0) && self.is_far(d1)) || (self.is_far(d0) && self.is_close(d1))
            }
        }
    }
}

/// Probability of each condition, ordered far/split/close.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionMix([f64; 3]);

impl ConditionMix {
    pub fn new(far: f64, split: f64, close: f64) -> Result<Self> {
        let p = [far, split, close];
        let total: f64 = p.iter().sum();
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!("condition mix {p:?} is not a probability vector")));
        }
        Ok(Self(p))
    }

    /// Proportions of the human Colors corpus (9,309 / 3,886 / 2,239).
    pub fn human() -> Self {
        Self::from_counts([9309, 3886, 2239])
    }

    pub fn from_counts(counts: [usize; 3]) -> Self {
        let total: usize = counts.iter().sum::<usize>().max(1);
        Self(counts.map(|c| c as f64 / total as f64))
    }

    pub fn probabilities(&self) -> [f64; 3] {
        self.0
    }

    /// Largest-remainder apportionment of `n` trials; each count is within 1 of `n * p`.
    pub fn apportion(&self, n: usize) -> [usize; 3] {
        let exact = self.0.map(|p| p * n as f64);
        let mut counts = exact.map(|x| x.floor() as usize);
        let mut rest = n - counts.iter().sum::<usize>();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| {
            let (ri, rj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
            rj.partial_cmp(&ri).unwrap().then(i.cmp(&j))
        });
        for i in order {
            if rest == 0 {
                break;
            }
            counts[i] += 1;
            rest -= 1;
        }
        counts
    }
}

const TARGET_DRAWS: usize = 50;
const PROPOSALS_PER_TARGET: usize = 4000;

fn random_chip(rng: &mut impl Rng) -> ColorChip {
    let hsl = HslColor::new(
        rng.random_range(0.0..360.0),
        rng.random_range(0.0..=1.0),
        rng.random_range(0.0..=1.0),
    )
    .expect("sampled HSL in range");
    hsl_to_cielab(hsl)
}

fn sample_trial(condition: Condition, th: &Thresholds, rng: &mut impl Rng) -> Result<Trial> {
    for _ in 0..TARGET_DRAWS {
        let target = random_chip(rng);
        // Split contexts need one similar and one distinct distractor; the
        // order of the two slots is randomized afterwards.
        let wants_close = match condition {
            Condition::Close => [true, true],
            Condition::Far => [false, false],
            Condition::Split => [true, false],
        };
        let mut found = [None, None];
        'slots: for (slot, &close) in wants_close.iter().enumerate() {
            for _ in 0..PROPOSALS_PER_TARGET {
                let d = random_chip(rng);
                if d == target {
                    continue;
                }
                let dist: f64 = delta_e(&target, &d);
                let ok = if close { th.is_close(dist) } else { th.is_far(dist) };
                if ok && found[..slot].iter().all(|f| *f != Some(d)) {
                    found[slot] = Some(d);
                    continue 'slots;
                }
            }
            break;
        }
        if let [Some(a), Some(b)] = found {
            let distractors = if condition == Condition::Split && rng.random_bool(0.5) {
                [b, a]
            } else {
                [a, b]
            };
            return Trial::new(target, distractors, condition, None, Source::Generated);
        }
    }
    Err(Error::SamplingBudget {
        condition: condition.to_string(),
        attempts: TARGET_DRAWS * PROPOSALS_PER_TARGET,
        close_max: th.close_max,
        far_min: th.far_min,
    })
}

/// Generates `n` unlabeled triplets whose condition counts follow `mix`.
///
/// Targets are uniform over the HSL cube (all saturation levels); distractors
/// are rejection-sampled from the same distribution until they satisfy the
/// condition's distance bands.
pub fn generate_triplets(n: usize, mix: ConditionMix, thresholds: Thresholds, seed: u64) -> Result<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = mix.apportion(n);
    let mut conditions: Vec<Condition> = Condition::ALL
        .iter()
        .zip(counts)
        .flat_map(|(c, k)| std::iter::repeat_n(*c, k))
        .collect();
    conditions.shuffle(&mut rng);
    let trials = conditions
        .into_iter()
        .map(|c| sample_trial(c, &thresholds, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus::new(trials))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

#[derive(Clone, Debug)]
pub struct Calibration {
    pub thresholds: Thresholds,
    /// KS statistic per condition (far/split/close) at the chosen thresholds.
    pub ks: [f64; 3],
    pub probes: usize,
}

impl Calibration {
    pub fn max_ks(&self) -> f64 {
        self.ks.iter().copied().fold(0.0, f64::max)
    }
}

fn ease_by_condition(corpus: &Corpus) -> [Vec<f64>; 3] {
    let mut out: [Vec<f64>; 3] = Default::default();
    for t in corpus.trials() {
        out[t.condition.index()].push(t.context_ease::<f64>());
    }
    out
}

/// Grid search over distance bands so that generated per-condition context
/// ease matches `reference`. Stops at the first setting whose worst KS
/// statistic is at most `target_ks`; otherwise returns the best found.
pub fn calibrate_thresholds(reference: &Corpus, probe_size: usize, target_ks: f64, seed: u64) -> Result<Calibration> {
    let human = ease_by_condition(reference);
    let mix = ConditionMix::from_counts(reference.condition_counts());
    let mut best: Option<Calibration> = None;
    let mut probes = 0;
    let mut candidates = Vec::new();
    for ci in 0..=14 {
        let close_max = 6.0 + 2.5 * ci as f64;
        for fi in 0..=14 {
            let far_min = close_max + 5.0 * (fi + 1) as f64;
            candidates.push(Thresholds::new(close_max, far_min)?);
        }
    }
    // Try the default first so an already-matching reference stops early.
    candidates.insert(0, Thresholds::default());
    for th in candidates {
        let Ok(generated) = generate_triplets(probe_size, mix, th, seed) else {
            continue;
        };
        probes += 1;
        let gen = ease_by_condition(&generated);
        let mut ks = [0.0; 3];
        for k in 0..3 {
            ks[k] = if human[k].is_empty() { 0.0 } else { ks_statistic(&human[k], &gen[k]) };
        }
        let cal = Calibration { thresholds: th, ks, probes };
        let better = best.as_ref().is_none_or(|b| cal.max_ks() < b.max_ks());
        if better {
            best = Some(cal);
        }
        if best.as_ref().is_some_and(|b| b.max_ks() <= target_ks) {
            break;
        }
    }
    let mut best = best.ok_or_else(|| Error::Config("no threshold setting could be sampled".into()))?;
    best.probes = probes;
    Ok(best)
}
