use std::path::Path;
use std::process::{Command, Output};

use graphpool::graph::{load_graph, read_graph};

fn graphpool(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphpool")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let o = graphpool(args, dir);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

/// The `# runspec:` line as an argument list for re-running.
fn echoed_args(out: &str) -> Vec<String> {
    let first = out.lines().next().unwrap();
    let rest = first.strip_prefix("# runspec: graphpool ").expect("runspec first");
    rest.split_whitespace().map(String::from).collect()
}

fn csv_rows(out: &str) -> Vec<Vec<String>> {
    let body: String = out.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn strip_wall_time(out: &str) -> String {
    out.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.rsplit_once(',').map_or(l, |p| p.0))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn gen_writes_files_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["gen", "grid2d", "--rows", "8", "--cols", "8", "-o", "grid.g"], dir.path());
    assert!(out.starts_with("# runspec: graphpool --seed 0 gen grid2d --rows 8 --cols 8 --out grid.g"));
    assert_eq!(load_graph(dir.path().join("grid.g")).unwrap().n(), 64);

    let tri = ok(&["gen", "ring", "--n", "3"], dir.path());
    let g = read_graph(tri.as_bytes()).unwrap();
    assert_eq!((g.n(), g.num_edges()), (3, 3));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "sensor", "--n", "64", "--seed", "7", "-o", "a.g"], dir.path());
    ok(&["gen", "sensor", "--n", "64", "--seed", "7", "-o", "b.g"], dir.path());
    let a = std::fs::read(dir.path().join("a.g")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.g")).unwrap());
    ok(&["--seed", "8", "gen", "sensor", "--n", "64", "-o", "c.g"], dir.path());
    assert_ne!(a, std::fs::read(dir.path().join("c.g")).unwrap());
}

#[test]
fn pool_summaries() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "grid2d", "-o", "grid.g"], dir.path());
    ok(&["gen", "ring", "--n", "3", "-o", "ring3.g"], dir.path());
    assert!(ok(&["pool", "--op", "ndp", "grid.g"], dir.path()).contains(" k=32 "));
    assert!(ok(&["pool", "--op", "graclus", "ring3.g"], dir.path()).contains(" k=2 "));
    let global = ok(&["pool", "--op", "mincut", "--k", "1", "grid.g", "-o", "one.g"], dir.path());
    assert!(global.contains(" k=1 edges=0 "), "{global}");
    let pooled = load_graph(dir.path().join("one.g")).unwrap();
    assert_eq!((pooled.n(), pooled.num_edges()), (1, 0));
}

#[test]
fn spectral_sweep_reproduces_from_echo() {
    let dir = tempfile::tempdir().unwrap();
    let first = ok(&["eval", "spectral", "--graph", "grid2d", "--ops", "ndp,graclus,nmf"], dir.path());
    let rows = csv_rows(&first);
    assert_eq!(rows.len(), 3);
    let ndp = &rows[0];
    assert_eq!((ndp[1].as_str(), ndp[3].as_str()), ("ndp", "ok"));
    let quad: f64 = ndp[8].parse().unwrap();
    assert!((quad - 0.068).abs() <= 0.01, "{quad}");

    let again = graphpool(&echoed_args(&first).iter().map(String::as_str).collect::<Vec<_>>(), dir.path());
    assert!(again.status.success());
    let again = stdout(&again);
    assert_eq!(again.lines().next(), first.lines().next());
    assert_eq!(strip_wall_time(&again), strip_wall_time(&first));
}

#[test]
fn ae_sweep_flags_topk_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["eval", "ae", "--graph", "ring", "--ops", "topk,ndp", "--out", "res"], dir.path());
    assert!(out.contains("ring topk: ok"), "{out}");
    let csv = std::fs::read_to_string(dir.path().join("res/ae.csv")).unwrap();
    let rows = csv_rows(&csv);
    assert_eq!(rows[0][7], "false");
    assert_eq!(rows[1][7], "true");
    assert!(dir.path().join("res/plots/ae_ring_topk_loss.svg").is_file());
}

#[test]
fn storage_slope() {
    let dir = tempfile::tempdir().unwrap();
    let o = graphpool(&["eval", "storage", "--op", "mincut,topk", "--sizes", "100,200,400"], dir.path());
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("mincut: log-log slope 2.000"), "{err}");
    assert!(err.contains("topk: log-log slope 1.000"), "{err}");
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0][..4], ["mincut", "100", "50", "5000"]);
}

#[test]
fn config_errors_exit_nonzero_failed_runs_do_not() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!graphpool(&["eval", "spectral", "--graph", "ring", "--ops", "bogus"], dir.path()).status.success());
    assert!(!graphpool(&["eval", "spectral", "--graph", "ring", "--ops", "ndp", "--op-arg", "beta=1"], dir.path())
        .status
        .success());
    assert!(!graphpool(&["pool", "--op", "ndp", "missing.g"], dir.path()).status.success());
    let scoped =
        ok(&["eval", "spectral", "--graph", "ring", "--ops", "ndp,lapool", "--op-arg", "lapool:beta=2"], dir.path());
    assert_eq!(csv_rows(&scoped).len(), 2);

    let o =
        graphpool(&["eval", "spectral", "--graph", "grid2d:12x12", "--ops", "mincut", "--timeout", "0"], dir.path());
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert!(rows[0][3].starts_with("failed: timed out"), "{:?}", rows[0]);
}

#[test]
fn train_and_gradcheck() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["train", "--op", "mincut", "--epochs", "30", "grid2d:4x4", "--out", "t"], dir.path());
    assert!(out.contains("op=mincut epochs=30"), "{out}");
    let curve = std::fs::read_to_string(dir.path().join("t/loss.csv")).unwrap();
    assert_eq!(curve.lines().count(), 31);
    assert!(!graphpool(&["train", "--op", "ndp", "grid2d"], dir.path()).status.success());

    let check = ok(&["gradcheck", "--op", "mincut", "sensor:8"], dir.path());
    assert!(check.contains("PASS"), "{check}");
    let strict = graphpool(&["gradcheck", "--op", "mincut", "--tol", "0", "sensor:8"], dir.path());
    assert_eq!(strict.status.code(), Some(2));
}
