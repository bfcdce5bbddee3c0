use std::path::Path;
use std::process::{Command, Output};

fn colorlex(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colorlex"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: [&str; 14] = [
    "--corpus", "corpus.csv", "--seeds", "0", "--listeners", "1", "--upsampling", "0,5", "--set", "sl_epochs=2", "--set",
    "rl_epochs=2", "--set", "hidden=8",
];

fn tiny_grid_args<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend(SMALL);
    v.extend(["--set", "embedding=8", "--set", "test_size=100", "--set", "rl_train_size=150", "--set", "eval_size=150"]);
    v.extend(extra);
    v
}

#[test]
fn end_to_end_on_a_synthetic_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    let o = colorlex(&["synth-corpus", "-o", "corpus.csv", "--trials", "600", "--seed", "3"], d);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("trials 600\n"));

    let o = colorlex(&["sample-triplets", "--corpus", "corpus.csv", "-o", "triplets.csv", "-n", "300", "--calibrate", "--probe-size", "300"], d);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("calibrated close_max="));
    assert!(stdout(&o).contains("trials 300"));

    let o = colorlex(&tiny_grid_args("train", &[]), d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("4 cells computed"), "{text}");
    assert!(text.contains("Listeners") && text.contains("Human"), "{text}");

    let o = colorlex(&tiny_grid_args("train", &["--resume"]), d);
    assert!(stdout(&o).contains("0 cells computed, 4 reused"), "{}", stdout(&o));

    let o = colorlex(&tiny_grid_args("report", &[]), d);
    assert!(o.status.success());
    let table = stdout(&o);

    let o = colorlex(&tiny_grid_args("evaluate", &[]), d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains(table.trim_end()), "evaluation from checkpoints matches training");

    // a single listener setting cannot support five trend families
    let o = colorlex(&tiny_grid_args("check-trends", &[]), d);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("not evaluable"));

    let run = std::fs::read_dir(d.join("out")).unwrap().next().unwrap().unwrap().path();
    let log = run.join("1-0/0/trial_log.csv");
    assert!(log.exists());
    let o = colorlex(&["export-denotations", "--trial-log", log.to_str().unwrap(), "-o", "plots"], d);
    assert!(o.status.success());
    let files: Vec<_> = stdout(&o).lines().map(String::from).collect();
    assert!(!files.is_empty());
    let first = std::fs::read_to_string(d.join(&files[0])).unwrap();
    assert!(first.starts_with("L,a,b,count\n"));
}

#[test]
fn errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(colorlex(&["synth-corpus", "-o", "c.csv", "--trials", "300"], d).status.success());

    let o = colorlex(&["export-denotations", "--corpus", "c.csv", "--words", "notacolor", "-o", "x"], d);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("notacolor") && err.contains("available"), "{err}");

    let o = colorlex(&["train", "--corpus", "c.csv", "--listeners", "7", "--set", "rl_epochs=30"], d);
    assert_eq!(o.status.code(), Some(1), "30 epochs do not divide among 7 listeners");

    let o = colorlex(&["train", "--corpus", "c.csv", "--set", "bogus=1"], d);
    assert_eq!(o.status.code(), Some(1));

    let o = colorlex(&["report", "--corpus", "c.csv", "--out", "nowhere"], d);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn human_export_is_byte_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(colorlex(&["synth-corpus", "-o", "c.csv", "--trials", "400", "--seed", "9"], d).status.success());
    let a = colorlex(&["export-denotations", "--corpus", "c.csv", "-o", "a"], d);
    let b = colorlex(&["export-denotations", "--corpus", "c.csv", "-o", "b"], d);
    assert!(a.status.success() && b.status.success());
    let names: Vec<_> = stdout(&a).lines().map(|l| Path::new(l).file_name().unwrap().to_owned()).collect();
    assert!(names.len() > 3);
    for n in names {
        assert_eq!(std::fs::read(d.join("a").join(&n)).unwrap(), std::fs::read(d.join("b").join(&n)).unwrap());
    }
}
