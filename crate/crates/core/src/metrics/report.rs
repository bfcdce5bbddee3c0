use serde::{Deserialize, Serialize};

use super::RegressionResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportPhase {
    Sl,
    #[serde(rename = "sl+rl")]
    SlRl,
    Human,
}

impl ReportPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportPhase::Sl => "sl",
            ReportPhase::SlRl => "sl+rl",
            ReportPhase::Human => "human",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sl" => Some(ReportPhase::Sl),
            "sl+rl" => Some(ReportPhase::SlRl),
            "human" => Some(ReportPhase::Human),
            _ => None,
        }
    }
}

/// Metrics of one trained agent (or the human corpus) on one evaluation set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub acc_comm: Option<f64>,
    pub acc_by_condition: [Option<f64>; 3],
    pub lexical_diversity: usize,
    pub informativeness: Option<f64>,
    pub informativeness_skipped: usize,
    pub convexity: Option<f64>,
    pub drift: Option<f64>,
    pub drift_shared: usize,
    pub drift_agent_only: usize,
    pub drift_human_only: usize,
}

/// Mean and standard error of the mean over seeds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: Option<f64>,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = (values.len() >= 2).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        Some(Self { mean, se })
    }
}

/// The pooled context-ease slope of a condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSummary {
    pub beta: f64,
    pub std_error: f64,
    pub p_value: f64,
    pub n_observations: usize,
}

impl From<&RegressionResult> for BetaSummary {
    fn from(r: &RegressionResult) -> Self {
        Self {
            beta: r.beta,
            std_error: r.std_error,
            p_value: r.p_value,
            n_observations: r.n_observations,
        }
    }
}

/// One row of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub phase: ReportPhase,
    pub listeners: Option<usize>,
    pub upsampling: Option<usize>,
    /// Seeds and their metrics; empty when the row was read back from an
    /// aggregate file.
    pub per_seed: Vec<(u64, SeedMetrics)>,
    pub seeds: usize,
    pub acc_comm: Option<MeanSe>,
    pub beta: Option<BetaSummary>,
    pub lexical_diversity: Option<MeanSe>,
    pub informativeness: Option<MeanSe>,
    pub convexity: Option<MeanSe>,
    pub drift: Option<MeanSe>,
}

impl ConditionReport {
    /// Aggregates per-seed values; `beta` comes from the pooled fit.
    pub fn aggregate(
        phase: ReportPhase,
        listeners: Option<usize>,
        upsampling: Option<usize>,
        per_seed: Vec<(u64, SeedMetrics)>,
        beta: Option<BetaSummary>,
    ) -> Self {
        let col = |f: &dyn Fn(&SeedMetrics) -> Option<f64>| -> Option<MeanSe> {
            let v: Vec<f64> = per_seed.iter().filter_map(|(_, m)| f(m)).collect();
            MeanSe::of(&v)
        };
        Self {
            phase,
            listeners,
            upsampling,
            seeds: per_seed.len(),
            acc_comm: col(&|m| m.acc_comm),
            beta,
            lexical_diversity: col(&|m| Some(m.lexical_diversity as f64)),
            informativeness: col(&|m| m.informativeness),
            convexity: col(&|m| m.convexity),
            drift: col(&|m| m.drift),
            per_seed,
        }
    }
}
