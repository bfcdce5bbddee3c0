mod artifacts;
mod config;
mod export;
mod report;
mod runner;

pub use artifacts::{
    metrics_row, parse_metrics_row, read_metrics, read_trial_log, trial_log_csv, write_metrics, write_trial_log, CellKey,
    METRICS_HEADER, TRIAL_LOG_HEADER,
};
pub use config::{CorpusFormat, ExperimentConfig, PhaseSelection};
pub use export::{denotation_counts, denotation_csv, export_denotations};
pub use report::{
    check_trends, parse_report_csv, per_seed_csv, render_table, render_trends, report_csv, trends_pass, write_reports,
    TrendCheck, TrendStatus, REPORT_HEADER, TRENDS_REQUIRED,
};
pub use runner::{
    aggregate, cell_complete, cell_dir, derive_seed, evaluate_agents, human_report, listener_seed, load_corpus,
    pooled_beta, run_matrix, MatrixOutcome, RunMode, RunOptions, SharedData,
};
