use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{BetaSummary, ConditionReport, MeanSe, ReportPhase};

use super::artifacts::{metrics_row, opt_f, CellKey, METRICS_HEADER};

pub const REPORT_HEADER: &str = "phase,listeners,upsampling,seeds,acc_comm,acc_comm_se,beta,beta_se,beta_p,beta_n,\
lexical_diversity,lexical_diversity_se,informativeness,informativeness_se,convexity,convexity_se,drift,drift_se";

fn mean(m: Option<MeanSe>) -> String {
    opt_f(m.map(|m| m.mean))
}

fn se(m: Option<MeanSe>) -> String {
    opt_f(m.and_then(|m| m.se))
}

/// Condition-level aggregate CSV, one row per report.
pub fn report_csv(reports: &[ConditionReport]) -> String {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in reports {
        let b = r.beta;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.phase.as_str(),
            r.listeners.map(|v| v.to_string()).unwrap_or_default(),
            r.upsampling.map(|v| v.to_string()).unwrap_or_default(),
            r.seeds,
            mean(r.acc_comm),
            se(r.acc_comm),
            opt_f(b.map(|b| b.beta)),
            opt_f(b.map(|b| b.std_error)),
            opt_f(b.map(|b| b.p_value)),
            b.map(|b| b.n_observations.to_string()).unwrap_or_default(),
            mean(r.lexical_diversity),
            se(r.lexical_diversity),
            mean(r.informativeness),
            se(r.informativeness),
            mean(r.convexity),
            se(r.convexity),
            mean(r.drift),
            se(r.drift),
        );
    }
    s
}

/// Reads an aggregate CSV back; per-seed values are not part of it.
pub fn parse_report_csv(text: &str) -> Result<Vec<ConditionReport>> {
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_HEADER) {
        return Err(Error::Metric("report CSV has an unexpected header".into()));
    }
    let num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| Error::Metric(format!("bad number '{s}' in report")))
        }
    };
    let count = |s: &str| -> Result<Option<usize>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| Error::Metric(format!("bad count '{s}' in report")))
        }
    };
    let ms = |m: &str, e: &str| -> Result<Option<MeanSe>> { Ok(num(m)?.map(|mean| MeanSe { mean, se: num(e).ok().flatten() })) };
    let mut out = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 18 {
            return Err(Error::Metric(format!("report row has {} fields, expected 18", f.len())));
        }
        let phase = ReportPhase::parse(f[0]).ok_or_else(|| Error::Metric(format!("bad phase '{}'", f[0])))?;
        let beta = match (num(f[6])?, num(f[7])?, num(f[8])?, count(f[9])?) {
            (Some(beta), Some(std_error), Some(p_value), Some(n_observations)) => Some(BetaSummary {
                beta,
                std_error,
                p_value,
                n_observations,
            }),
            _ => None,
        };
        out.push(ConditionReport {
            phase,
            listeners: count(f[1])?,
            upsampling: count(f[2])?,
            per_seed: Vec::new(),
            seeds: count(f[3])?.unwrap_or(0),
            acc_comm: ms(f[4], f[5])?,
            beta,
            lexical_diversity: ms(f[10], f[11])?,
            informativeness: ms(f[12], f[13])?,
            convexity: ms(f[14], f[15])?,
            drift: ms(f[16], f[17])?,
        });
    }
    Ok(out)
}

/// Three decimals, or scientific notation for slopes too small to show.
fn beta_text(b: f64) -> String {
    if b == 0.0 || b.abs() >= 1e-3 {
        format!("{b:.3}")
    } else {
        format!("{b:.2e}")
    }
}

fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Fixed-width rendering in the results-table column order. Missing cells
/// print as `--`.
pub fn render_table(reports: &[ConditionReport]) -> String {
    let head = ["Condition", "Listeners", "Upsampling", "Acc_comm", "beta(E_ctx)", "|W|", "I_L", "Convexity", "D_L"];
    let widths = [10, 10, 11, 9, 13, 6, 6, 10, 7];
    let dash = || "--".to_string();
    let f = |m: Option<MeanSe>, d: usize| m.map_or_else(dash, |m| format!("{:.*}", d, m.mean));
    let mut s = String::new();
    let mut row = |cells: &[String]| {
        let line: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(s, "{}", line.join(" ").trim_end());
    };
    row(&head.map(String::from));
    row(&widths.map(|w| "-".repeat(w)));
    for r in reports {
        row(&[
            match r.phase {
                ReportPhase::Sl => "SL".into(),
                ReportPhase::SlRl => "SL+RL".into(),
                ReportPhase::Human => "Human".into(),
            },
            r.listeners.map_or_else(dash, |v| v.to_string()),
            r.upsampling.map_or_else(dash, |v| v.to_string()),
            f(r.acc_comm, 2),
            r.beta.map_or_else(dash, |b| format!("{}{}", beta_text(b.beta), stars(b.p_value))),
            f(r.lexical_diversity, 1),
            r.informativeness.map_or_else(dash, |m| if m.mean.abs() < 0.1 { format!("{:.4}", m.mean) } else { format!("{:.2}", m.mean) }),
            f(r.convexity, 2),
            f(r.drift, 2),
        ]);
    }
    s
}

/// Every per-seed metrics row of the reports, with the run digest.
pub fn per_seed_csv(digest: &str, reports: &[ConditionReport]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in reports.iter().filter(|r| r.phase != ReportPhase::Human) {
        for (seed, m) in &r.per_seed {
            let key = CellKey {
                phase: r.phase,
                listeners: r.listeners,
                upsampling: r.upsampling.unwrap_or(0),
                seed: *seed,
            };
            let _ = writeln!(s, "{}", metrics_row(digest, &key, m));
        }
    }
    s
}

pub fn write_reports(root: &Path, reports: &[ConditionReport]) -> Result<()> {
    let digest = root.file_name().map(|d| d.to_string_lossy().into_owned()).unwrap_or_default();
    crate::agents::write_atomic(&root.join("report.csv"), report_csv(reports).as_bytes())?;
    crate::agents::write_atomic(&root.join("report.txt"), render_table(reports).as_bytes())?;
    crate::agents::write_atomic(&root.join("per_seed.csv"), per_seed_csv(&digest, reports).as_bytes())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrendStatus {
    Pass,
    Fail,
    NotEvaluable,
}

impl TrendStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrendStatus::Pass => "pass",
            TrendStatus::Fail => "fail",
            TrendStatus::NotEvaluable => "not evaluable",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrendCheck {
    pub id: char,
    pub claim: &'static str,
    pub status: TrendStatus,
    /// Smallest slack in the claimed direction; negative when violated.
    pub margin: Option<f64>,
    pub detail: String,
}

/// Trend families needed for an overall pass.
pub const TRENDS_REQUIRED: usize = 4;

pub fn trends_pass(checks: &[TrendCheck]) -> bool {
    checks.iter().filter(|c| c.status == TrendStatus::Pass).count() >= TRENDS_REQUIRED
}

fn rl_cell(reports: &[ConditionReport], l: usize, n: usize) -> Option<&ConditionReport> {
    reports
        .iter()
        .find(|r| r.phase == ReportPhase::SlRl && r.listeners == Some(l) && r.upsampling == Some(n))
}

fn sorted_unique(v: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = v.collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn verdict(id: char, claim: &'static str, margins: Vec<(String, f64)>) -> TrendCheck {
    if margins.is_empty() {
        return TrendCheck {
            id,
            claim,
            status: TrendStatus::NotEvaluable,
            margin: None,
            detail: "required cells are missing".into(),
        };
    }
    let (worst_at, worst) = margins
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .expect("non-empty");
    TrendCheck {
        id,
        claim,
        status: if worst > 0.0 { TrendStatus::Pass } else { TrendStatus::Fail },
        margin: Some(worst),
        detail: format!("tightest at {worst_at}"),
    }
}

/// Monotone margins along upsampling within each listener setting.
fn along_n(reports: &[ConditionReport], metric: impl Fn(&ConditionReport) -> Option<f64>, increasing: bool) -> Vec<(String, f64)> {
    let ls = sorted_unique(reports.iter().filter(|r| r.phase == ReportPhase::SlRl).filter_map(|r| r.listeners));
    let mut out = Vec::new();
    for l in ls {
        let ns = sorted_unique(reports.iter().filter(|r| r.phase == ReportPhase::SlRl && r.listeners == Some(l)).filter_map(|r| r.upsampling));
        for w in ns.windows(2) {
            let (Some(a), Some(b)) = (rl_cell(reports, l, w[0]).and_then(&metric), rl_cell(reports, l, w[1]).and_then(&metric)) else {
                continue;
            };
            let m = if increasing { b - a } else { a - b };
            out.push((format!("L={l} N={}→{}", w[0], w[1]), m));
        }
    }
    out
}

/// Margins of "fewest listeners exceeds most listeners" per upsampling level.
fn across_l(reports: &[ConditionReport], ns: Option<&[usize]>, metric: impl Fn(&ConditionReport) -> Option<f64>, larger_with_more: bool) -> Vec<(String, f64)> {
    let ls = sorted_unique(reports.iter().filter(|r| r.phase == ReportPhase::SlRl).filter_map(|r| r.listeners));
    if ls.len() < 2 {
        return Vec::new();
    }
    let (lo, hi) = (ls[0], ls[ls.len() - 1]);
    let all_n = sorted_unique(reports.iter().filter(|r| r.phase == ReportPhase::SlRl).filter_map(|r| r.upsampling));
    let mut out = Vec::new();
    for n in all_n.into_iter().filter(|n| ns.is_none_or(|want| want.contains(n))) {
        let (Some(a), Some(b)) = (rl_cell(reports, lo, n).and_then(&metric), rl_cell(reports, hi, n).and_then(&metric)) else {
            continue;
        };
        let m = if larger_with_more { b - a } else { a - b };
        out.push((format!("N={n} L={lo} vs L={hi}"), m));
    }
    out
}

/// Directional claims about how the lexicon responds to upsampling and
/// listener population size, judged on across-seed means.
pub fn check_trends(reports: &[ConditionReport]) -> Vec<TrendCheck> {
    let w = |r: &ConditionReport| r.lexical_diversity.map(|m| m.mean);
    let il = |r: &ConditionReport| r.informativeness.map(|m| m.mean);
    let cv = |r: &ConditionReport| r.convexity.map(|m| m.mean);
    let dl = |r: &ConditionReport| r.drift.map(|m| m.mean);

    let mut fewer_listeners = across_l(reports, None, w, false);
    for (at, m) in across_l(reports, None, il, false) {
        fewer_listeners.push((format!("{at} (I_L)"), m));
    }

    let beta: Vec<(String, f64)> = reports
        .iter()
        .filter(|r| r.phase != ReportPhase::Human)
        .map(|r| {
            let at = format!("{} L={} N={}", r.phase.as_str(), r.listeners.map_or("-".into(), |v| v.to_string()), r.upsampling.map_or("-".into(), |v| v.to_string()));
            match r.beta {
                // negative and significant: slack is the distance of β below 0,
                // zeroed when p misses the threshold
                Some(b) if b.p_value < 1e-3 => (at, -b.beta),
                Some(b) => (at, -b.beta.abs().max(f64::MIN_POSITIVE)),
                None => (at, f64::NEG_INFINITY),
            }
        })
        .collect();

    vec![
        verdict('a', "|W| strictly increases with upsampling within each listener setting", along_n(reports, w, true)),
        verdict('b', "|W| and I_L are lower with the most listeners than with one, at every upsampling level", fewer_listeners),
        verdict('c', "convexity is higher with the most listeners than with one, for N in {0, 100}", across_l(reports, Some(&[0, 100]), cv, true)),
        verdict('d', "D_L decreases as upsampling increases within each listener setting", along_n(reports, dl, false)),
        verdict('e', "beta(E_ctx) < 0 with p < 0.001 in every condition", beta),
    ]
}

pub fn render_trends(checks: &[TrendCheck]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(
            s,
            "{}) {:<13} margin {:>10}  {}  [{}]",
            c.id,
            c.status.as_str(),
            c.margin.map_or("--".into(), |m| format!("{m:.4}")),
            c.claim,
            c.detail
        );
    }
    let passed = checks.iter().filter(|c| c.status == TrendStatus::Pass).count();
    let _ = writeln!(
        s,
        "{passed}/{} trend families hold; {} required: {}",
        checks.len(),
        TRENDS_REQUIRED,
        if trends_pass(checks) { "PASS" } else { "FAIL" }
    );
    s
}
