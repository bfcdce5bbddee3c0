use std::path::Path;

use colorlex::dataset::{surrogate::surrogate_corpus, write_corpus};
use colorlex::experiment::{cell_dir, check_trends, parse_report_csv, run_matrix, CellKey, ExperimentConfig, PhaseSelection, RunMode, RunOptions};
use colorlex::metrics::ReportPhase;

fn small_config(dir: &Path) -> ExperimentConfig {
    let corpus = dir.join("corpus.csv");
    if !corpus.exists() {
        let c = surrogate_corpus(800, 11).unwrap();
        write_corpus(&c, std::fs::File::create(&corpus).unwrap()).unwrap();
    }
    let mut cfg = ExperimentConfig {
        corpus,
        out: dir.join("out"),
        seeds: vec![0, 1],
        listeners: vec![1, 2],
        upsampling: vec![0],
        test_size: 150,
        rl_train_size: 200,
        eval_size: 200,
        hidden: 8,
        embedding: 8,
        ..Default::default()
    };
    cfg.sl.epochs = 2;
    cfg.rl.epochs = 2;
    cfg
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
        (None, None) => true,
        _ => false,
    }
}

#[test]
fn grid_produces_every_cell_and_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = run_matrix(&cfg, RunOptions::default()).unwrap();
    // one SL cell and two SL+RL cells per seed
    assert_eq!(out.computed_cells.len(), 6);
    assert!(out.skipped_cells.is_empty());
    for k in &out.computed_cells {
        let d = cell_dir(&out.dir, k);
        for f in ["metrics.csv", "trial_log.csv", "run.json", "epochs.csv", "checkpoints/speaker.json"] {
            assert!(d.join(f).exists(), "{} missing {f}", d.display());
        }
    }
    assert_eq!(out.dir.file_name().unwrap().to_str().unwrap(), cfg.digest().unwrap());
    assert_eq!(out.digest.len(), 16);
    for f in ["config.txt", "report.csv", "report.txt", "per_seed.csv"] {
        assert!(out.dir.join(f).exists(), "{f}");
    }
    let text = std::fs::read_to_string(out.dir.join("report.csv")).unwrap();
    let parsed = parse_report_csv(&text).unwrap();
    assert_eq!(parsed.len(), 4, "SL, two SL+RL rows and the human row");
    assert_eq!(parsed.last().unwrap().phase, ReportPhase::Human);
    for r in &out.reports[..3] {
        assert_eq!(r.seeds, 2);
        let acc = r.acc_comm.unwrap().mean;
        assert!((0.0..=1.0).contains(&acc));
    }
    // trend claims need more than one upsampling level, so most are not evaluable
    assert_eq!(check_trends(&out.reports).len(), 5);
    let rl_epochs = std::fs::read_to_string(cell_dir(&out.dir, &out.computed_cells[2]).join("epochs.csv")).unwrap();
    assert!(rl_epochs.starts_with("epoch,phase,listener_id,mean_reward,mean_loss_speaker,mean_loss_listener\n"));
}

#[test]
fn resume_recomputes_only_missing_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let first = run_matrix(&cfg, RunOptions::default()).unwrap();

    let victim = CellKey {
        phase: ReportPhase::SlRl,
        listeners: Some(2),
        upsampling: 0,
        seed: 1,
    };
    std::fs::remove_file(cell_dir(&first.dir, &victim).join("metrics.csv")).unwrap();
    let second = run_matrix(&cfg, RunOptions::default()).unwrap();
    assert_eq!(second.computed_cells, vec![victim]);
    assert_eq!(second.skipped_cells.len(), 5);
    assert_eq!(first.reports.len(), second.reports.len());
    for (a, b) in first.reports.iter().zip(&second.reports) {
        let m = |r: &colorlex::metrics::ConditionReport| {
            [r.acc_comm, r.lexical_diversity, r.informativeness, r.convexity, r.drift].map(|x| x.map(|m| m.mean))
        };
        for (x, y) in m(a).into_iter().zip(m(b)) {
            assert!(close(x, y), "{x:?} vs {y:?}");
        }
        assert!(close(a.beta.map(|b| b.beta), b.beta.map(|b| b.beta)));
    }

    // a third pass has nothing to do
    let third = run_matrix(&cfg, RunOptions::default()).unwrap();
    assert!(third.computed_cells.is_empty());
}

#[test]
fn evaluate_mode_rescores_from_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let trained = run_matrix(&cfg, RunOptions::default()).unwrap();
    let rescored = run_matrix(
        &cfg,
        RunOptions {
            mode: RunMode::Evaluate,
            resume: false,
        },
    )
    .unwrap();
    assert_eq!(rescored.computed_cells.len(), 6);
    for (a, b) in trained.reports.iter().zip(&rescored.reports) {
        assert!(close(a.acc_comm.map(|m| m.mean), b.acc_comm.map(|m| m.mean)));
        assert!(close(a.convexity.map(|m| m.mean), b.convexity.map(|m| m.mean)));
    }
}

#[test]
fn runs_are_deterministic_across_output_roots() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = small_config(a.path());
    ca.phase = PhaseSelection::Both;
    let mut cb = ca.clone();
    cb.out = b.path().join("elsewhere");
    cb.workers = 2;
    let ra = run_matrix(&ca, RunOptions::default()).unwrap();
    let rb = run_matrix(&cb, RunOptions::default()).unwrap();
    assert_eq!(ra.digest, rb.digest);
    for f in ["report.csv", "per_seed.csv"] {
        assert_eq!(
            std::fs::read(ra.dir.join(f)).unwrap(),
            std::fs::read(rb.dir.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn changed_config_gets_new_digest_and_foreign_cells_are_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let mut other = cfg.clone();
    other.sl.learning_rate = 2e-3;
    assert_ne!(cfg.digest().unwrap(), other.digest().unwrap());

    let out = run_matrix(&cfg, RunOptions::default()).unwrap();
    // plant a cell from this run under the other run's directory
    let key = CellKey {
        phase: ReportPhase::Sl,
        listeners: None,
        upsampling: 0,
        seed: 0,
    };
    let foreign = cell_dir(&other.out.join(other.digest().unwrap()), &key);
    std::fs::create_dir_all(&foreign).unwrap();
    for f in ["metrics.csv", "trial_log.csv"] {
        std::fs::copy(cell_dir(&out.dir, &key).join(f), foreign.join(f)).unwrap();
    }
    let err = run_matrix(&other, RunOptions::default()).unwrap_err();
    assert!(err.to_string().contains("refusing to resume"), "{err}");
}
