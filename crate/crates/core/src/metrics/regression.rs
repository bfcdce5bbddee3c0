//! Linear mixed model `y = β·x + α + u_seed + v_chip + e` with crossed random
//! intercepts. Fixed effects come from the mixed-model equations solved by
//! block Gauss-Seidel; variance components from ANOVA moment estimators on
//! partial residuals. The two steps alternate until the parameters settle.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::colorspace::ColorChip;
use crate::error::{Error, Result};

use super::Lexicon;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChipGrouping {
    /// One random intercept per 0.1-resolution chip.
    Exact,
    /// Chips rounded to integer CIELAB before grouping.
    Binned,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressionOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub grouping: ChipGrouping,
}

impl Default for RegressionOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-8,
            grouping: ChipGrouping::Exact,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub x: f64,
    pub seed: u64,
    pub chip: ColorChip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub beta: f64,
    pub intercept: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
    pub var_seed: f64,
    pub var_chip: f64,
    pub var_residual: f64,
    pub n_observations: usize,
    pub n_seeds: usize,
    pub n_chips: usize,
    pub iterations: usize,
    pub grouping: ChipGrouping,
    /// False when too few chips repeat to separate chip and residual variance;
    /// the chip component is then fixed at zero.
    pub chip_effect_identified: bool,
}

/// `(I_w, E_ctx)` pairs from the trial logs, skipping words with undefined `I_w`.
/// Returns the observations and the number of skipped trials.
pub fn regression_observations(lexicons: &[Lexicon]) -> (Vec<Observation>, usize) {
    let mut obs = Vec::new();
    let mut skipped = 0;
    for lex in lexicons {
        let stats = lex.word_stats::<f64>();
        for r in lex.trial_log() {
            match stats.get(&r.word).and_then(|s| s.informativeness) {
                Some(iw) => obs.push(Observation {
                    y: iw,
                    x: r.e_ctx,
                    seed: r.seed,
                    chip: r.target,
                }),
                None => skipped += 1,
            }
        }
    }
    (obs, skipped)
}

struct Design {
    y: Vec<f64>,
    x: Vec<f64>,
    seed: Vec<usize>,
    chip: Vec<usize>,
    seed_n: Vec<f64>,
    chip_n: Vec<f64>,
    xtx_inv: [[f64; 2]; 2],
}

impl Design {
    fn new(obs: &[Observation], grouping: ChipGrouping) -> Result<Self> {
        let mut seeds = BTreeMap::new();
        let mut chips = BTreeMap::new();
        let mut seed = Vec::with_capacity(obs.len());
        let mut chip = Vec::with_capacity(obs.len());
        for o in obs {
            let ns = seeds.len();
            seed.push(*seeds.entry(o.seed).or_insert(ns));
            let key = match grouping {
                ChipGrouping::Exact => o.chip.tenths(),
                ChipGrouping::Binned => o.chip.tenths().map(|t| (t as f64 / 10.0).round() as i32),
            };
            let nc = chips.len();
            chip.push(*chips.entry(key).or_insert(nc));
        }
        let count = |ids: &[usize], k: usize| {
            let mut n = vec![0.0; k];
            for &i in ids {
                n[i] += 1.0;
            }
            n
        };
        let x: Vec<f64> = obs.iter().map(|o| o.x).collect();
        let n = obs.len() as f64;
        let sx: f64 = x.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let det = n * sxx - sx * sx;
        let mean = sx / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if var.is_nan() || var <= 1e-12 * (1.0 + mean * mean) || !det.is_finite() {
            return Err(Error::DegeneratePredictor);
        }
        Ok(Self {
            y: obs.iter().map(|o| o.y).collect(),
            seed_n: count(&seed, seeds.len()),
            chip_n: count(&chip, chips.len()),
            x,
            seed,
            chip,
            xtx_inv: [[sxx / det, -sx / det], [-sx / det, n / det]],
        })
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    /// Block Gauss-Seidel on the mixed-model equations with right-hand side
    /// `rhs` (in observation space). Warm-started from the given iterate.
    fn solve(&self, rhs: &[f64], lu: f64, lv: f64, beta: &mut [f64; 2], u: &mut [f64], v: &mut [f64]) {
        let n = self.n();
        let mut su = vec![0.0; u.len()];
        let mut sv = vec![0.0; v.len()];
        for _ in 0..10_000 {
            // fixed effects given both random effects
            let (mut r0, mut r1) = (0.0, 0.0);
            for i in 0..n {
                let r = rhs[i] - u[self.seed[i]] - v[self.chip[i]];
                r0 += r;
                r1 += r * self.x[i];
            }
            let nb = [
                self.xtx_inv[0][0] * r0 + self.xtx_inv[0][1] * r1,
                self.xtx_inv[1][0] * r0 + self.xtx_inv[1][1] * r1,
            ];
            let mut change = (nb[0] - beta[0]).abs().max((nb[1] - beta[1]).abs());
            *beta = nb;

            su.iter_mut().for_each(|s| *s = 0.0);
            for i in 0..n {
                su[self.seed[i]] += rhs[i] - beta[0] - beta[1] * self.x[i] - v[self.chip[i]];
            }
            for g in 0..u.len() {
                let nu = if lu.is_finite() { su[g] / (self.seed_n[g] + lu) } else { 0.0 };
                change = change.max((nu - u[g]).abs());
                u[g] = nu;
            }

            sv.iter_mut().for_each(|s| *s = 0.0);
            for i in 0..n {
                sv[self.chip[i]] += rhs[i] - beta[0] - beta[1] * self.x[i] - u[self.seed[i]];
            }
            for c in 0..v.len() {
                let nv = if lv.is_finite() { sv[c] / (self.chip_n[c] + lv) } else { 0.0 };
                change = change.max((nv - v[c]).abs());
                v[c] = nv;
            }
            if change <= 1e-14 * (1.0 + beta[0].abs().max(beta[1].abs())) {
                break;
            }
        }
    }
}

/// One-way ANOVA moment estimator: (between-group variance, within mean square).
fn anova(values: &[f64], groups: &[usize], sizes: &[f64]) -> (f64, f64, f64) {
    let k = sizes.len();
    let n = values.len() as f64;
    let mut sums = vec![0.0; k];
    for (v, &g) in values.iter().zip(groups) {
        sums[g] += v;
    }
    let means: Vec<f64> = sums.iter().zip(sizes).map(|(s, m)| s / m).collect();
    let grand = values.iter().sum::<f64>() / n;
    let ssw: f64 = values.iter().zip(groups).map(|(v, &g)| (v - means[g]).powi(2)).sum();
    let ssb: f64 = means.iter().zip(sizes).map(|(m, s)| s * (m - grand).powi(2)).sum();
    let df_w = n - k as f64;
    let msw = if df_w > 0.0 { ssw / df_w } else { f64::NAN };
    if k < 2 {
        return (0.0, msw, df_w);
    }
    let msb = ssb / (k as f64 - 1.0);
    let n0 = (n - sizes.iter().map(|s| s * s).sum::<f64>() / n) / (k as f64 - 1.0);
    let between = if msw.is_finite() { ((msb - msw) / n0).max(0.0) } else { 0.0 };
    (between, msw, df_w)
}

/// Fits the crossed random-intercept model and tests `β ≠ 0` with a Wald test.
pub fn fit_context_regression(obs: &[Observation], opts: RegressionOptions) -> Result<RegressionResult> {
    if obs.len() < 3 {
        return Err(Error::Metric(format!("regression needs at least 3 observations, got {}", obs.len())));
    }
    if obs.iter().any(|o| !o.x.is_finite() || !o.y.is_finite()) {
        return Err(Error::NonFinite("regression input".into()));
    }
    let d = Design::new(obs, opts.grouping)?;
    let n = d.n();
    let (ks, kc) = (d.seed_n.len(), d.chip_n.len());
    // Chip variance is separable from noise only with enough repeated chips.
    let chip_identified = (n - kc) as f64 >= (0.05 * n as f64).max(10.0);

    let mut beta = [0.0; 2];
    let mut u = vec![0.0; ks];
    let mut v = vec![0.0; kc];
    d.solve(&d.y, f64::INFINITY, f64::INFINITY, &mut beta, &mut u, &mut v);
    let resid: Vec<f64> = (0..n).map(|i| d.y[i] - beta[0] - beta[1] * d.x[i]).collect();
    let total = resid.iter().map(|r| r * r).sum::<f64>() / (n as f64 - 2.0).max(1.0);
    let (mut s_u, mut s_v, mut s_e) = (total / 3.0, if chip_identified { total / 3.0 } else { 0.0 }, total / 3.0);

    let mut partial = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    let lambda = |s: f64, e: f64| if s > 0.0 { e / s } else { f64::INFINITY };
    while iterations < opts.max_iterations {
        iterations += 1;
        let prev = (beta, s_u, s_v, s_e);
        d.solve(&d.y, lambda(s_u, s_e), lambda(s_v, s_e), &mut beta, &mut u, &mut v);

        for i in 0..n {
            partial[i] = d.y[i] - beta[0] - beta[1] * d.x[i] - v[d.chip[i]];
        }
        let (between_u, msw_u, _) = anova(&partial, &d.seed, &d.seed_n);
        for i in 0..n {
            partial[i] = d.y[i] - beta[0] - beta[1] * d.x[i] - u[d.seed[i]];
        }
        let (between_v, msw_v, _) = anova(&partial, &d.chip, &d.chip_n);
        s_u = between_u;
        if chip_identified {
            s_v = between_v;
            s_e = msw_v;
        } else {
            s_v = 0.0;
            s_e = msw_u;
        }
        if !s_e.is_finite() || s_e <= 0.0 {
            s_e = total.max(f64::MIN_POSITIVE);
        }

        let scale = s_u.max(s_v).max(s_e).max(f64::MIN_POSITIVE);
        last_change = (beta[0] - prev.0[0])
            .abs()
            .max((beta[1] - prev.0[1]).abs())
            .max((s_u - prev.1).abs() / scale)
            .max((s_v - prev.2).abs() / scale)
            .max((s_e - prev.3).abs() / scale);
        if last_change < opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::RegressionNonConvergence {
            iterations,
            last_beta: beta[1],
            last_change,
        });
    }

    // Var(β̂) = σe²·(C⁻¹)_ββ.
    let var_beta = slope_variance(&d, lambda(s_u, s_e), lambda(s_v, s_e)) * s_e;
    let std_error = var_beta.sqrt();
    let z = beta[1] / std_error;
    let p_value = erfc(z.abs() / std::f64::consts::SQRT_2);
    Ok(RegressionResult {
        beta: beta[1],
        intercept: beta[0],
        std_error,
        z,
        p_value,
        var_seed: s_u,
        var_chip: s_v,
        var_residual: s_e,
        n_observations: n,
        n_seeds: ks,
        n_chips: kc,
        iterations,
        grouping: opts.grouping,
        chip_effect_identified: chip_identified,
    })
}

/// `(C⁻¹)_ββ` for the slope, via the Schur complement
/// `X'X − X'Z (Z'Z + Λ)⁻¹ Z'X`, applying `(Z'Z + Λ)⁻¹` by Gauss-Seidel.
fn slope_variance(d: &Design, lu: f64, lv: f64) -> f64 {
    let n = d.n();
    let ones = vec![1.0; n];
    // For each fixed-effect column, project out the random effects.
    let project = |col: &[f64]| -> Vec<f64> {
        let (ks, kc) = (d.seed_n.len(), d.chip_n.len());
        let mut u = vec![0.0; ks];
        let mut v = vec![0.0; kc];
        let mut su = vec![0.0; ks];
        let mut sv = vec![0.0; kc];
        for _ in 0..10_000 {
            let mut change = 0.0f64;
            su.iter_mut().for_each(|s| *s = 0.0);
            for i in 0..n {
                su[d.seed[i]] += col[i] - v[d.chip[i]];
            }
            for g in 0..ks {
                let nu = if lu.is_finite() { su[g] / (d.seed_n[g] + lu) } else { 0.0 };
                change = change.max((nu - u[g]).abs());
                u[g] = nu;
            }
            sv.iter_mut().for_each(|s| *s = 0.0);
            for i in 0..n {
                sv[d.chip[i]] += col[i] - u[d.seed[i]];
            }
            for c in 0..kc {
                let nv = if lv.is_finite() { sv[c] / (d.chip_n[c] + lv) } else { 0.0 };
                change = change.max((nv - v[c]).abs());
                v[c] = nv;
            }
            if change <= 1e-13 * (1.0 + col.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
                break;
            }
        }
        (0..n).map(|i| u[d.seed[i]] + v[d.chip[i]]).collect()
    };
    let fit1 = project(&ones);
    let fitx = project(&d.x);
    // S = X'(X − Z b) for columns [1, x].
    let dotp = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let r1: Vec<f64> = ones.iter().zip(&fit1).map(|(a, b)| a - b).collect();
    let rx: Vec<f64> = d.x.iter().zip(&fitx).map(|(a, b)| a - b).collect();
    let s00 = dotp(&ones, &r1);
    let s01 = dotp(&ones, &rx);
    let s11 = dotp(&d.x, &rx);
    let det = s00 * s11 - s01 * s01;
    s00 / det
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn normal(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.random::<f64>().max(1e-300);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn synthetic(beta: f64, seed: u64) -> Vec<Observation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<f64> = (0..10).map(|_| 0.02 * normal(&mut rng)).collect();
        let chips: Vec<(ColorChip, f64)> = (0..200)
            .map(|i| (ColorChip::from_tenths(i * 4, i % 37, -(i % 11)).unwrap(), 0.03 * normal(&mut rng)))
            .collect();
        (0..2000)
            .map(|i| {
                let s = i % 10;
                let c = rng.random_range(0..200);
                let x = rng.random_range(0.0..80.0);
                Observation {
                    y: 0.3 + beta * x + seeds[s] + chips[c].1 + 0.05 * normal(&mut rng),
                    x,
                    seed: s as u64,
                    chip: chips[c].0,
                }
            })
            .collect()
    }

    #[test]
    fn recovers_known_slope() {
        let obs = synthetic(-0.01, 7);
        let r = fit_context_regression(&obs, RegressionOptions::default()).unwrap();
        assert!((r.beta + 0.01).abs() <= 0.0015, "{r:?}");
        assert!(r.std_error > 0.0 && r.p_value < 1e-6);
        assert!(r.var_seed >= 0.0 && r.var_chip >= 0.0 && r.var_residual > 0.0);
        assert_eq!((r.n_observations, r.n_seeds, r.n_chips), (2000, 10, 200));
        assert!(r.chip_effect_identified);
        assert!((r.var_residual.sqrt() - 0.05).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn standard_error_matches_ols_without_random_effects() {
        // Pure-noise groups: with both components estimated at 0 the Wald SE
        // is the OLS one.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let obs: Vec<Observation> = (0..500)
            .map(|i| {
                let x = rng.random_range(0.0..10.0);
                Observation {
                    y: 1.0 + 0.5 * x + normal(&mut rng),
                    x,
                    seed: (i % 2) as u64,
                    chip: ColorChip::from_tenths(i % 50, 0, 0).unwrap(),
                }
            })
            .collect();
        let r = fit_context_regression(&obs, RegressionOptions::default()).unwrap();
        let n = obs.len() as f64;
        let mx = obs.iter().map(|o| o.x).sum::<f64>() / n;
        let sxx: f64 = obs.iter().map(|o| (o.x - mx).powi(2)).sum();
        let ols_se = (r.var_residual / sxx).sqrt();
        assert!((r.beta - 0.5).abs() < 0.05);
        assert!((r.std_error / ols_se - 1.0).abs() < 0.2, "{} vs {}", r.std_error, ols_se);
    }

    #[test]
    fn permuted_predictor_is_mostly_null() {
        use rand::seq::SliceRandom;
        let base = synthetic(-0.01, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut significant = 0;
        for _ in 0..100 {
            let mut xs: Vec<f64> = base.iter().map(|o| o.x).collect();
            xs.shuffle(&mut rng);
            let obs: Vec<Observation> = base.iter().zip(xs).map(|(o, x)| Observation { x, ..*o }).collect();
            let r = fit_context_regression(&obs, RegressionOptions::default()).unwrap();
            if r.p_value < 0.01 {
                significant += 1;
            }
        }
        assert!(significant <= 5, "{significant}");
    }

    #[test]
    fn constant_predictor_errors() {
        let mut obs = synthetic(0.0, 1);
        for o in &mut obs {
            o.x = 4.0;
        }
        assert!(matches!(
            fit_context_regression(&obs, RegressionOptions::default()),
            Err(Error::DegeneratePredictor)
        ));
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let obs = synthetic(-0.01, 2);
        let opts = RegressionOptions {
            max_iterations: 1,
            ..Default::default()
        };
        match fit_context_regression(&obs, opts) {
            Err(Error::RegressionNonConvergence { iterations, last_beta, .. }) => {
                assert_eq!(iterations, 1);
                assert!(last_beta.is_finite());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn binning_merges_neighbouring_chips() {
        let mut obs = synthetic(-0.01, 5);
        for (i, o) in obs.iter_mut().enumerate() {
            o.chip = ColorChip::from_tenths((i % 300) as i32, 0, 0).unwrap();
        }
        let exact = fit_context_regression(&obs, RegressionOptions::default()).unwrap();
        let binned = fit_context_regression(&obs, RegressionOptions { grouping: ChipGrouping::Binned, ..Default::default() }).unwrap();
        assert_eq!(exact.n_chips, 300);
        assert_eq!(binned.n_chips, 31);
        assert!((binned.beta + 0.01).abs() < 0.0015);
    }
}
