use std::collections::BTreeMap;

use crate::colorspace::{srgb_to_cielab, ColorChip};
use crate::error::{Error, Result};
use crate::geometry::{contains, convex_hull, Hull, DEFAULT_EPSILON};

use super::Lexicon;

pub const HULL_EPSILON: f64 = DEFAULT_EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    /// Unweighted mean of the per-word degrees.
    pub value: f64,
    pub per_word: BTreeMap<String, f64>,
    pub universe_size: usize,
    /// Set when scored against a dense grid rather than the evaluation targets.
    pub dense_grid: bool,
    /// Grid variant only: words whose hull holds no grid point.
    pub skipped_words: usize,
}

fn sorted_unique(chips: &[ColorChip]) -> Vec<ColorChip> {
    let mut v = chips.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn inside<'a>(hull: &'a Hull, universe: &'a [ColorChip]) -> impl Iterator<Item = &'a ColorChip> + 'a {
    let (lo, hi) = hull.bounds();
    universe.iter().filter(move |u| {
        let t = u.tenths();
        (0..3).all(|k| t[k] >= lo[k] - 1 && t[k] <= hi[k] + 1) && contains(hull, u, HULL_EPSILON)
    })
}

/// Degree of convexity averaged over words, with the universe taken to be
/// the unique target chips of the evaluation set.
pub fn convexity(lex: &Lexicon, universe: &[ColorChip]) -> Result<ConvexityReport> {
    let universe = sorted_unique(universe);
    let mut per_word = BTreeMap::new();
    for word in lex.words() {
        let own = lex.unique_chips(word);
        if own.is_empty() {
            continue;
        }
        if let Some(c) = own.iter().find(|c| universe.binary_search(c).is_err()) {
            return Err(Error::Metric(format!("chip {c} of word '{word}' is not in the convexity universe")));
        }
        let hull = convex_hull(&own);
        let covered = inside(&hull, &universe).count();
        per_word.insert(word.to_string(), own.len() as f64 / covered as f64);
    }
    if per_word.is_empty() {
        return Err(Error::Metric("convexity of an empty lexicon".into()));
    }
    let value = per_word.values().sum::<f64>() / per_word.len() as f64;
    Ok(ConvexityReport {
        value,
        per_word,
        universe_size: universe.len(),
        dense_grid: false,
        skipped_words: 0,
    })
}

/// Chips of an evenly spaced sRGB grid with `steps` levels per channel.
pub fn srgb_grid_universe(steps: usize) -> Vec<ColorChip> {
    assert!(steps >= 2, "grid needs at least two levels per channel");
    let level = |i: usize| i as f64 / (steps - 1) as f64;
    let mut out = Vec::with_capacity(steps * steps * steps);
    for r in 0..steps {
        for g in 0..steps {
            for b in 0..steps {
                out.push(srgb_to_cielab([level(r), level(g), level(b)]));
            }
        }
    }
    sorted_unique(&out)
}

/// Sensitivity variant: grid chips take the word of their nearest
/// denotation chip, then each word is scored against the grid points its
/// hull covers.
pub fn convexity_on_grid(lex: &Lexicon, grid: &[ColorChip]) -> Result<ConvexityReport> {
    let grid = sorted_unique(grid);
    // One label per denotation chip: the word naming it most often.
    let mut votes: BTreeMap<ColorChip, BTreeMap<&str, usize>> = BTreeMap::new();
    for (w, chips) in lex.entries() {
        for c in chips {
            *votes.entry(*c).or_default().entry(w.as_str()).or_default() += 1;
        }
    }
    if votes.is_empty() {
        return Err(Error::Metric("convexity of an empty lexicon".into()));
    }
    let anchors: Vec<([i64; 3], &str)> = votes
        .iter()
        .map(|(c, ws)| {
            let best = ws.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).unwrap().0;
            (c.tenths().map(i64::from), *best)
        })
        .collect();
    let labels: BTreeMap<ColorChip, &str> = grid
        .iter()
        .map(|g| {
            let p = g.tenths().map(i64::from);
            let near = anchors
                .iter()
                .min_by_key(|(a, _)| (0..3).map(|k| (a[k] - p[k]).pow(2)).sum::<i64>())
                .unwrap();
            (*g, near.1)
        })
        .collect();

    let mut per_word = BTreeMap::new();
    let mut skipped = 0;
    for word in lex.words() {
        let own = lex.unique_chips(word);
        if own.is_empty() {
            continue;
        }
        let hull = convex_hull(&own);
        let (mut covered, mut mine) = (0usize, 0usize);
        for g in inside(&hull, &grid) {
            covered += 1;
            if labels[g] == word {
                mine += 1;
            }
        }
        if covered == 0 {
            skipped += 1;
        } else {
            per_word.insert(word.to_string(), mine as f64 / covered as f64);
        }
    }
    if per_word.is_empty() {
        return Err(Error::Metric("no word hull covers a grid point".into()));
    }
    let value = per_word.values().sum::<f64>() / per_word.len() as f64;
    Ok(ConvexityReport {
        value,
        per_word,
        universe_size: grid.len(),
        dense_grid: true,
        skipped_words: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::TrialRecord;
    use proptest::prelude::*;

    fn t(l: i32, a: i32, b: i32) -> ColorChip {
        ColorChip::from_tenths(l, a, b).unwrap()
    }

    fn lex(pairs: &[(&str, ColorChip)]) -> Lexicon {
        Lexicon::from_records(
            pairs
                .iter()
                .map(|(w, c)| TrialRecord {
                    word: w.to_string(),
                    target: *c,
                    e_ctx: 0.0,
                    seed: 0,
                })
                .collect(),
        )
    }

    #[test]
    fn single_word_over_everything() {
        let u = [t(0, 0, 0), t(100, 0, 0), t(0, 100, 0), t(0, 0, 100), t(20, 20, 20)];
        let l = lex(&u.iter().map(|c| ("x", *c)).collect::<Vec<_>>());
        assert_eq!(convexity(&l, &u).unwrap().value, 1.0);
    }

    #[test]
    fn collinear_endpoints_and_midpoint() {
        let u = [t(0, 0, 0), t(10, 0, 0), t(20, 0, 0)];
        let l = lex(&[("a", u[0]), ("a", u[2]), ("b", u[1])]);
        let r = convexity(&l, &u).unwrap();
        assert!((r.per_word["a"] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.per_word["b"], 1.0);
        assert!((r.value - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn shared_chip_lowers_a_singleton() {
        let c = t(50, 50, 50);
        let l = lex(&[("a", c), ("b", c), ("b", t(60, 50, 50))]);
        let r = convexity(&l, &[c, t(60, 50, 50)]).unwrap();
        assert_eq!(r.per_word["a"], 1.0);
        assert_eq!(r.per_word["b"], 1.0);
    }

    #[test]
    fn chip_outside_universe_errors() {
        let l = lex(&[("a", t(1, 1, 1))]);
        assert!(convexity(&l, &[t(2, 2, 2)]).is_err());
    }

    #[test]
    fn grid_variant_on_a_two_word_split() {
        let grid = srgb_grid_universe(6);
        assert_eq!(grid.len(), 216);
        // Split the grid by lightness; both words are then convex-ish.
        let pairs: Vec<(&str, ColorChip)> =
            grid.iter().map(|c| (if c.l() < 50.0 { "dark" } else { "light" }, *c)).collect();
        let r = convexity_on_grid(&lex(&pairs), &grid).unwrap();
        assert!(r.dense_grid);
        assert!(r.value > 0.9 && r.value <= 1.0, "{}", r.value);
    }

    fn arb_lexicon() -> impl Strategy<Value = Vec<(u8, (i32, i32, i32))>> {
        proptest::collection::vec((0u8..4, (0..80i32, -40..40i32, -40..40i32)), 1..40)
    }

    proptest! {
        #[test]
        fn bounded_and_invariant(raw in arb_lexicon(), shift in (0..100i32, -50..50i32, -50..50i32)) {
            let names = ["p", "q", "r", "s"];
            let pairs: Vec<(&str, ColorChip)> = raw.iter().map(|(w, (l, a, b))| (names[*w as usize], t(*l, *a, *b))).collect();
            let universe: Vec<ColorChip> = pairs.iter().map(|p| p.1).collect();
            let base = convexity(&lex(&pairs), &universe).unwrap().value;
            prop_assert!(base > 0.0 && base <= 1.0);

            let renamed: Vec<(&str, ColorChip)> = pairs.iter().map(|(w, c)| (names[(names.iter().position(|n| n == w).unwrap() + 1) % 4], *c)).collect();
            prop_assert!((convexity(&lex(&renamed), &universe).unwrap().value - base).abs() < 1e-12);

            let mv = |c: &ColorChip| { let [l, a, b] = c.tenths(); t(l + shift.0, a + shift.1, b + shift.2) };
            let moved: Vec<(&str, ColorChip)> = pairs.iter().map(|(w, c)| (*w, mv(c))).collect();
            let mu: Vec<ColorChip> = universe.iter().map(mv).collect();
            prop_assert!((convexity(&lex(&moved), &mu).unwrap().value - base).abs() < 1e-12);
        }
    }
}
