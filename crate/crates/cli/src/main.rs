use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use colorlex::dataset::{
    calibrate_thresholds, generate_triplets, ingest_colors_csv, read_corpus, split_corpus, surrogate::surrogate_corpus, write_corpus,
    Condition, ConditionMix, Corpus, SchemaMode, Thresholds,
};
use colorlex::experiment::{
    aggregate, check_trends, export_denotations, load_corpus, parse_report_csv, read_trial_log, render_table, render_trends, run_matrix,
    trends_pass, write_reports, ExperimentConfig, RunMode, RunOptions,
};
use colorlex::metrics::Lexicon;

#[derive(Parser)]
#[command(name = "colorlex", version, about = "Color-naming agents: data preparation, training sweeps and lexicon reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a raw Colors CSV into the canonical corpus format.
    Ingest {
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Color columns are HSL (default) or already CIELAB.
        #[arg(long, default_value = "hsl")]
        schema: String,
    },
    /// Write a synthetic stand-in corpus with human-like statistics.
    SynthCorpus {
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 15_434)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate unlabeled far/split/close triplets matching a corpus' condition mix.
    SampleTriplets {
        /// Reference corpus for the condition mix (and calibration).
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, short = 'n', default_value_t = 12_434)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        close_max: Option<f64>,
        #[arg(long)]
        far_min: Option<f64>,
        /// Search distance bands until context ease matches the reference.
        #[arg(long)]
        calibrate: bool,
        #[arg(long, default_value_t = 0.1)]
        target_ks: f64,
        #[arg(long, default_value_t = 3000)]
        probe_size: usize,
    },
    /// Train every cell of the grid and write the report.
    Train(MatrixArgs),
    /// Re-score saved checkpoints without training.
    Evaluate(MatrixArgs),
    /// Aggregate persisted cells into report.csv / report.txt.
    Report(MatrixArgs),
    /// Judge the directional claims on a report; exits 2 when too few hold.
    CheckTrends {
        /// An aggregate report.csv; otherwise the run selected by the matrix flags.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        matrix: MatrixArgs,
    },
    /// Dump per-word denotations as L,a,b,count CSVs.
    ExportDenotations {
        /// A cell's trial_log.csv.
        #[arg(long, conflicts_with = "corpus")]
        trial_log: Option<PathBuf>,
        /// A canonical corpus; exports the human denotations.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Comma-separated words; all words when omitted.
        #[arg(long, value_delimiter = ',')]
        words: Vec<String>,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct MatrixArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    listeners: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    upsampling: Option<Vec<usize>>,
    /// sl, rl or both
    #[arg(long)]
    phase: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Skip cells whose artifacts are complete under the same config digest.
    #[arg(long)]
    resume: bool,
    /// Override any config key, e.g. --set rl_lr=3e-4
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl MatrixArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got '{kv}'");
            };
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(p) = &self.corpus {
            cfg.corpus = p.clone();
        }
        if let Some(v) = &self.seeds {
            cfg.seeds = v.clone();
        }
        if let Some(v) = &self.listeners {
            cfg.listeners = v.clone();
        }
        if let Some(v) = &self.upsampling {
            cfg.upsampling = v.clone();
        }
        if let Some(v) = &self.phase {
            cfg.phase = v.parse()?;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn schema(s: &str) -> anyhow::Result<SchemaMode> {
    match s {
        "hsl" => Ok(SchemaMode::Hsl),
        "cielab" => Ok(SchemaMode::Cielab),
        _ => bail!("--schema must be hsl or cielab, got '{s}'"),
    }
}

fn save(corpus: &Corpus, path: &PathBuf) -> anyhow::Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_corpus(corpus, std::io::BufWriter::new(f))?;
    Ok(())
}

fn print_counts(corpus: &Corpus) {
    let c = corpus.condition_counts();
    println!("trials {}", corpus.len());
    for cond in Condition::ALL {
        println!("  {:<6} {}", cond.as_str(), c[cond.index()]);
    }
}

fn matrix(args: &MatrixArgs, mode: RunMode) -> anyhow::Result<()> {
    let cfg = args.resolve()?;
    let out = run_matrix(&cfg, RunOptions { mode, resume: args.resume })?;
    println!(
        "run {}: {} cells computed, {} reused",
        out.digest,
        out.computed_cells.len(),
        out.skipped_cells.len()
    );
    print!("{}", render_table(&out.reports));
    println!("artifacts in {}", out.dir.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Ingest { input, output, schema: s } => {
            let r = ingest_colors_csv(&input, schema(&s)?)?;
            save(&r.corpus, &output)?;
            print_counts(&r.corpus);
            println!(
                "skipped: {} multi-word, {} unsuccessful, {} degenerate",
                r.skipped_multiword, r.skipped_unsuccessful, r.skipped_degenerate
            );
            if r.corpus.len() >= 3000 {
                let (train, test) = split_corpus(&r.corpus, 3000, 0)?;
                println!("default split: {} train / {} test", train.len(), test.len());
            }
        }
        Command::SynthCorpus { output, trials, seed } => {
            let c = surrogate_corpus(trials, seed)?;
            save(&c, &output)?;
            print_counts(&c);
        }
        Command::SampleTriplets {
            corpus,
            output,
            count,
            seed,
            close_max,
            far_min,
            calibrate,
            target_ks,
            probe_size,
        } => {
            let reference = read_corpus(&corpus)?;
            let d = Thresholds::default();
            let mut th = Thresholds::new(close_max.unwrap_or(d.close_max), far_min.unwrap_or(d.far_min))?;
            if calibrate {
                let cal = calibrate_thresholds(&reference, probe_size, target_ks, seed)?;
                println!(
                    "calibrated close_max={} far_min={} (KS far/split/close {:.3}/{:.3}/{:.3}, {} probes)",
                    cal.thresholds.close_max, cal.thresholds.far_min, cal.ks[0], cal.ks[1], cal.ks[2], cal.probes
                );
                if cal.max_ks() > target_ks {
                    log::warn!("no setting reached KS <= {target_ks}; using the best found");
                }
                th = cal.thresholds;
            }
            let generated = generate_triplets(count, ConditionMix::from_counts(reference.condition_counts()), th, seed)?;
            save(&generated, &output)?;
            print_counts(&generated);
        }
        Command::Train(a) => matrix(&a, RunMode::Train)?,
        Command::Evaluate(a) => matrix(&a, RunMode::Evaluate)?,
        Command::Report(a) => {
            let cfg = a.resolve()?;
            let root = cfg.out.join(cfg.digest()?);
            if !root.is_dir() {
                bail!("no run directory {}; train first", root.display());
            }
            let reports = aggregate(&cfg, &load_corpus(&cfg)?, &root)?;
            write_reports(&root, &reports)?;
            print!("{}", render_table(&reports));
        }
        Command::CheckTrends { report, matrix } => {
            let path = match report {
                Some(p) => p,
                None => {
                    let cfg = matrix.resolve()?;
                    cfg.out.join(cfg.digest()?).join("report.csv")
                }
            };
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let checks = check_trends(&parse_report_csv(&text)?);
            print!("{}", render_trends(&checks));
            if !trends_pass(&checks) {
                return Ok(ExitCode::from(2));
            }
        }
        Command::ExportDenotations {
            trial_log,
            corpus,
            words,
            output,
        } => {
            let lex = match (trial_log, corpus) {
                (Some(t), None) => read_trial_log(&t)?,
                (None, Some(c)) => Lexicon::from_human(&read_corpus(&c)?, 0)?,
                _ => bail!("give exactly one of --trial-log or --corpus"),
            };
            for p in export_denotations(&lex, &words, &output)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
