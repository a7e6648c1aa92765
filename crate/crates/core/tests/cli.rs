use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hbayes::io::{
    load_checkpoint, load_event_file, load_ground_truth, load_metrics_report, read_rankings,
    read_trace,
};

fn hbayes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbayes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hbayes(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Run {
    events: PathBuf,
    truth: PathBuf,
    checkpoint: PathBuf,
    trace: PathBuf,
    ranking: PathBuf,
    report: PathBuf,
}

fn pipeline(dir: &Path) -> Run {
    let run = Run {
        events: dir.join("events.jsonl"),
        truth: dir.join("truth.json"),
        checkpoint: dir.join("model.json"),
        trace: dir.join("trace.csv"),
        ranking: dir.join("top.jsonl"),
        report: dir.join("report.json"),
    };
    ok(&[
        "generate",
        "--users",
        "8",
        "--brands",
        "6",
        "--styles",
        "2",
        "--events",
        "600",
        "--dim",
        "4",
        "--seed",
        "5",
        "--out",
        s(&run.events),
        "--truth-out",
        s(&run.truth),
    ]);
    let stdout = ok(&[
        "train",
        "--events",
        s(&run.events),
        "--styles",
        "2",
        "--seed",
        "1",
        "--checkpoint-out",
        s(&run.checkpoint),
        "--trace-out",
        s(&run.trace),
    ]);
    assert!(stdout.contains("ELBO"), "{stdout}");
    ok(&[
        "rank",
        "--checkpoint",
        s(&run.checkpoint),
        "--events",
        s(&run.events),
        "--user",
        "u0",
        "--k",
        "7",
        "--out",
        s(&run.ranking),
    ]);
    let table = ok(&[
        "eval",
        "--events",
        s(&run.events),
        "--styles",
        "2",
        "--folds",
        "3",
        "--k",
        "5,10",
        "--max-iters",
        "40",
        "--report-out",
        s(&run.report),
    ]);
    assert!(table.lines().count() == 3, "{table}");
    run
}

#[test]
fn end_to_end_files_parse_with_their_loaders() {
    let dir = tempfile::tempdir().unwrap();
    let run = pipeline(dir.path());

    let events = load_event_file(&run.events).unwrap();
    assert_eq!(events.dataset.len(), 600);
    assert_eq!(events.dataset.feature_dim, 4);

    let truth = load_ground_truth(&run.truth).unwrap();
    assert_eq!(truth.user_ids, events.users.names());
    assert_eq!(truth.brand_ids, events.brands.names());

    let cp = load_checkpoint(&run.checkpoint).unwrap();
    assert_eq!(cp.user_ids, events.users.names());
    let trace = read_trace(&run.trace).unwrap();
    assert_eq!(trace, cp.fit_report.elbo_trace);

    let ranking = read_rankings(&run.ranking).unwrap();
    assert_eq!(ranking.len(), 7);
    assert!(ranking.windows(2).all(|w| w[0].prob >= w[1].prob));
    assert_eq!(
        ranking.iter().map(|r| r.rank).collect::<Vec<_>>(),
        (1..=7).collect::<Vec<_>>()
    );

    let report = load_metrics_report(&run.report).unwrap();
    assert_eq!(report.folds.len(), 3);
    assert_eq!(report.mean.iter().map(|m| m.k).collect::<Vec<_>>(), [5, 10]);
}

#[test]
fn identical_commands_write_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = pipeline(a.path());
    let rb = pipeline(b.path());
    for (x, y) in [
        (&ra.events, &rb.events),
        (&ra.truth, &rb.truth),
        (&ra.checkpoint, &rb.checkpoint),
        (&ra.trace, &rb.trace),
        (&ra.ranking, &rb.ranking),
        (&ra.report, &rb.report),
    ] {
        assert_eq!(
            std::fs::read(x).unwrap(),
            std::fs::read(y).unwrap(),
            "{x:?}"
        );
    }
}

#[test]
fn rank_to_stdout_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = pipeline(dir.path());
    let stdout = ok(&[
        "rank",
        "--checkpoint",
        s(&run.checkpoint),
        "--events",
        s(&run.events),
        "--user",
        "u0",
        "--k",
        "7",
    ]);
    assert_eq!(stdout, std::fs::read_to_string(&run.ranking).unwrap());
    // An unseen user still gets a ranking from the prior.
    let cold = ok(&[
        "rank",
        "--checkpoint",
        s(&run.checkpoint),
        "--events",
        s(&run.events),
        "--user",
        "nobody",
        "--k",
        "3",
    ]);
    assert_eq!(cold.lines().count(), 3);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("e.jsonl");
    ok(&[
        "generate",
        "--users",
        "4",
        "--brands",
        "3",
        "--styles",
        "2",
        "--events",
        "80",
        "--dim",
        "2",
        "--out",
        s(&events),
    ]);
    let folds = hbayes(&[
        "eval",
        "--events",
        s(&events),
        "--styles",
        "2",
        "--folds",
        "1",
    ]);
    assert_eq!(folds.status.code(), Some(2));

    let missing = dir.path().join("nope.jsonl");
    let train = hbayes(&[
        "train",
        "--events",
        s(&missing),
        "--styles",
        "2",
        "--checkpoint-out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(train.status.code(), Some(2));
    assert!(!dir.path().join("m.json").exists());

    assert_eq!(hbayes(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(
        &bad,
        "{\"user\":\"a\",\"brand\":\"b\",\"y\":1,\"x\":[1.0]}\nnot json\n",
    )
    .unwrap();
    let out = hbayes(&[
        "train",
        "--events",
        s(&bad),
        "--styles",
        "2",
        "--checkpoint-out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.starts_with("error:") && stderr.contains(":2"),
        "{stderr}"
    );
}
