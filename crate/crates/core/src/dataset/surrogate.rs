//! A synthetic stand-in for the human Colors naming corpus.
//!
//! Used when the real corpus is not available: a fixed inventory of English
//! color terms, each with a CIELAB prototype, a breadth, and a usage prior.
//! A speaker picks a term for the target with probability proportional to
//! prior × typicality × (how well the term singles out the target among the
//! context), which reproduces the qualitative properties the pipeline cares
//! about: skewed frequencies, broad basic terms, and more specific terms in
//! harder contexts. Like the human corpus, only successful trials are kept:
//! a simulated listener resolves each description, and the speaker retries
//! on the same context until it does.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::colorspace::{srgb_to_cielab, ColorChip};
use crate::error::Result;

use super::{generate_triplets, ConditionMix, Corpus, Source, Thresholds, Trial};

/// (term, sRGB hex, breadth in CIELAB units, relative usage).
const TERMS: &[(&str, u32, f64, f64)] = &[
    ("green", 0x1fa01f, 24.0, 2585.0),
    ("blue", 0x2050e0, 24.0, 2300.0),
    ("purple", 0x8030b0, 22.0, 1500.0),
    ("pink", 0xf070c0, 20.0, 1200.0),
    ("red", 0xd81818, 18.0, 1100.0),
    ("grey", 0x8a8a8a, 18.0, 800.0),
    ("orange", 0xf08010, 16.0, 800.0),
    ("yellow", 0xf0e020, 16.0, 700.0),
    ("brown", 0x885028, 16.0, 650.0),
    ("teal", 0x108888, 14.0, 500.0),
    ("magenta", 0xf010e0, 12.0, 260.0),
    ("lime", 0x90f020, 12.0, 250.0),
    ("aqua", 0x20e0e0, 12.0, 220.0),
    ("olive", 0x808020, 12.0, 200.0),
    ("turquoise", 0x40e0c8, 11.0, 160.0),
    ("cyan", 0x10f0f8, 11.0, 150.0),
    ("lavender", 0xb098e0, 11.0, 150.0),
    ("navy", 0x102080, 10.0, 130.0),
    ("maroon", 0x801020, 10.0, 120.0),
    ("violet", 0x9010f0, 11.0, 110.0),
    ("tan", 0xd2b48c, 10.0, 100.0),
    ("mint", 0x98f0b8, 10.0, 90.0),
    ("gold", 0xe0b010, 10.0, 85.0),
    ("salmon", 0xf88070, 10.0, 85.0),
    ("indigo", 0x4b1090, 10.0, 80.0),
    ("peach", 0xffc098, 10.0, 80.0),
    ("sky", 0x70b0f0, 11.0, 80.0),
    ("fuchsia", 0xff20a0, 10.0, 70.0),
    ("coral", 0xff6850, 10.0, 65.0),
    ("black", 0x141414, 10.0, 60.0),
    ("forest", 0x205828, 10.0, 60.0),
    ("periwinkle", 0x8890f0, 10.0, 60.0),
    ("mustard", 0xd0b028, 9.0, 60.0),
    ("rose", 0xe04878, 9.0, 55.0),
    ("plum", 0x8e4585, 9.0, 50.0),
    ("mauve", 0xb07898, 9.0, 50.0),
    ("lilac", 0xc8a2d8, 9.0, 50.0),
    ("white", 0xf6f6f6, 9.0, 45.0),
    ("khaki", 0xc0b070, 9.0, 40.0),
    ("burgundy", 0x800028, 9.0, 40.0),
    ("rust", 0xb04818, 9.0, 40.0),
    ("seafoam", 0x70e0b0, 9.0, 40.0),
    ("chartreuse", 0xb8f000, 9.0, 40.0),
    ("beige", 0xe8dcb8, 9.0, 35.0),
    ("sage", 0x90a880, 9.0, 30.0),
    ("slate", 0x607088, 9.0, 30.0),
    ("cream", 0xfff4d0, 8.0, 30.0),
    ("royal", 0x3048d0, 9.0, 30.0),
    ("neon", 0x40ff40, 9.0, 30.0),
];

/// Strength of the context-sensitivity term.
const PRAGMATIC_WEIGHT: f64 = 1.5;

/// Preference for narrow terms when the closest distractor is near, decaying
/// with context ease on this ΔE scale.
const SPECIFICITY_WEIGHT: f64 = 3.0;
const SPECIFICITY_SCALE: f64 = 15.0;

struct Term {
    word: &'static str,
    proto: [f64; 3],
    inv_two_var: f64,
    log_breadth: f64,
    log_prior: f64,
}

fn terms() -> Vec<Term> {
    let total: f64 = TERMS.iter().map(|t| t.3).sum();
    TERMS
        .iter()
        .map(|&(word, hex, breadth, usage)| {
            let rgb = [(hex >> 16) & 0xff, (hex >> 8) & 0xff, hex & 0xff].map(|v| v as f64 / 255.0);
            let c = srgb_to_cielab(rgb);
            Term {
                word,
                proto: [c.l(), c.a(), c.b()],
                inv_two_var: 1.0 / (2.0 * breadth * breadth),
                log_breadth: breadth.ln(),
                log_prior: (usage / total).ln(),
            }
        })
        .collect()
}

/// Attempts per context before the last description is kept regardless.
const MAX_ATTEMPTS: usize = 50;

/// Number of distinct terms the surrogate speaker can use.
pub fn inventory_size() -> usize {
    TERMS.len()
}

fn fit(term: &Term, chip: &ColorChip) -> f64 {
    let d = [chip.l() - term.proto[0], chip.a() - term.proto[1], chip.b() - term.proto[2]];
    -(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) * term.inv_two_var
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn sample_index(log_weights: &[f64], rng: &mut impl Rng) -> usize {
    let norm = log_sum_exp(log_weights);
    let mut u: f64 = rng.random();
    for (i, z) in log_weights.iter().enumerate() {
        u -= (z - norm).exp();
        if u <= 0.0 {
            return i;
        }
    }
    log_weights.len() - 1
}

fn name_target(terms: &[Term], trial: &Trial, rng: &mut impl Rng) -> &'static str {
    let cands = trial.candidates();
    let hardness = (-trial.context_ease::<f64>() / SPECIFICITY_SCALE).exp();
    let logits: Vec<f64> = terms
        .iter()
        .map(|term| {
            let fits = cands.map(|c| fit(term, &c));
            let pick_target = fits[0] - log_sum_exp(&fits);
            term.log_prior + fits[0] + PRAGMATIC_WEIGHT * pick_target - SPECIFICITY_WEIGHT * hardness * term.log_breadth
        })
        .collect();
    let mut word = 0;
    for _ in 0..MAX_ATTEMPTS {
        word = sample_index(&logits, rng);
        let fits = cands.map(|c| fit(&terms[word], &c));
        if sample_index(&fits, rng) == 0 {
            break;
        }
    }
    terms[word].word
}

/// `n` human-style labeled trials with the human condition mix.
pub fn surrogate_corpus(n: usize, seed: u64) -> Result<Corpus> {
    let contexts = generate_triplets(n, ConditionMix::human(), Thresholds::default(), seed)?;
    let terms = terms();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
    let trials = contexts
        .into_trials()
        .into_iter()
        .map(|mut t| {
            t.human_word = Some(name_target(&terms, &t, &mut rng).to_string());
            t.source = Source::Human;
            t
        })
        .collect();
    Ok(Corpus::new(trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_is_unique() {
        let mut words: Vec<&str> = TERMS.iter().map(|t| t.0).collect();
        words.sort_unstable();
        words.dedup();
        assert_eq!(words.len(), TERMS.len());
    }

    #[test]
    fn labels_everything_deterministically() {
        let a = surrogate_corpus(300, 4).unwrap();
        let b = surrogate_corpus(300, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.trials().iter().all(|t| t.human_word.is_some() && t.source == Source::Human));
        // frequency skew: the most frequent term dominates the rarest used one
        let max = a.word_counts().values().max().unwrap();
        let min = a.word_counts().values().min().unwrap();
        assert!(max > &(10 * min));
    }
}
