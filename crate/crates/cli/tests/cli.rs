use std::path::Path;
use std::process::{Command, Output};

use dualmink::harness::sweep::read_summary;
use dualmink::harness::{read_document, strip_timing, ResultDocument, VerifyReport};

fn dualmink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualmink"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn circle_config(dir: &Path, name: &str, f: &str, extra: &str) -> String {
    write(
        dir,
        name,
        &format!("dim = 1\nresolution = [256]\nq = 1.0\nf = \"{f}\"\n{extra}"),
    )
}

#[test]
fn solve_ball_then_verify_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = circle_config(dir.path(), "ball.toml", "1", "");
    let out = dir.path().join("ball_result.toml");
    let o = dualmink(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: ResultDocument = read_document(&out).unwrap();
    assert!(doc.status.converged);
    assert!(doc.status.h_minus_one_sup <= 1e-10);

    let report = dir.path().join("ball_report.toml");
    let o = dualmink(&["verify", out.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: VerifyReport = read_document(&report).unwrap();
    assert!(r.all_pass && r.stability.pass);
    assert!(r.stability.delta2 < 1e-14);
    assert!(dir.path().join("ball_report.density.csv").exists());

    let o = dualmink(&["plot", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let svg = std::fs::read_to_string(out.with_extension("svg")).unwrap();
    assert!(svg.contains("unit-circle") && svg.contains("id=\"boundary\""));
}

#[test]
fn manufactured_ellipse_recovered_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = circle_config(
        dir.path(),
        "ellipse.toml",
        "manufacture:ellipse(1.2,1.0)",
        &format!("output_dir = \"{}\"\n", dir.path().join("run").display()),
    );
    let o = dualmink(&["solve", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let result = dir.path().join("run/result.toml");
    let doc: ResultDocument = read_document(&result).unwrap();
    assert!(doc.status.exact_error.unwrap() <= 1e-6);

    let o = dualmink(&["verify", result.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r: VerifyReport = read_document(&result.with_extension("verify.toml")).unwrap();
    assert!(r.stability.pass && r.stability.delta2 < r.stability.bound);
}

#[test]
fn odd_mode_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = circle_config(dir.path(), "odd.toml", "1+0.1*cos(3θ)", "");
    let o = dualmink(&["solve", "--config", &cfg, "--out", "/nonexistent/never.toml"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("odd mode"));
}

#[test]
fn missing_or_corrupt_inputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dualmink(&["verify", "/nonexistent/result.toml"])), 2);
    let junk = write(dir.path(), "junk.toml", "status = 3\n");
    assert_eq!(code(&dualmink(&["verify", &junk])), 2);
    assert_eq!(code(&dualmink(&["plot", &junk])), 2);
    assert_eq!(code(&dualmink(&["frobnicate"])), 2);
}

#[test]
fn q_range_gate_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "q.toml",
        "dim = 1\nresolution = [64]\nq = 1.5\nf = \"1\"\n",
    );
    let out = dir.path().join("q_result.toml");
    let out_s = out.to_str().unwrap();
    assert_eq!(code(&dualmink(&["solve", "--config", &cfg, "--out", out_s])), 2);
    let o = dualmink(&["solve", "--config", &cfg, "--out", out_s, "--override-q-range"]);
    assert_eq!(code(&o), 0);
    let doc: ResultDocument = read_document(&out).unwrap();
    assert_eq!(doc.status.warnings.len(), 1);
}

#[test]
fn nonconvergence_exits_one_and_verify_refuses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = circle_config(
        dir.path(),
        "hard.toml",
        "manufacture:ellipse(2,1)",
        "[solver]\nhomotopy_steps = 1\nmax_newton_iters = 1\nmax_bisections = 0\n",
    );
    let out = dir.path().join("hard_result.toml");
    let o = dualmink(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let doc: ResultDocument = read_document(&out).unwrap();
    assert!(!doc.status.converged && doc.status.failure.is_some());
    assert_eq!(code(&dualmink(&["verify", out.to_str().unwrap()])), 2);
    assert_eq!(code(&dualmink(&["plot", out.to_str().unwrap()])), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = circle_config(dir.path(), "det.toml", "1 + 0.05*cos(2θ) - 0.02*cos(4θ)", "seed = 17\n");
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    for p in [&a, &b] {
        assert_eq!(code(&dualmink(&["solve", "--config", &cfg, "--out", p.to_str().unwrap()])), 0);
    }
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(strip_timing(&ta), strip_timing(&tb));
    for p in [&a, &b] {
        assert_eq!(code(&dualmink(&["verify", p.to_str().unwrap()])), 0);
    }
    let ra = std::fs::read(a.with_extension("verify.toml")).unwrap();
    let rb = std::fs::read(b.with_extension("verify.toml")).unwrap();
    // reports embed the source path, so compare past that line
    let tail = |r: &[u8]| String::from_utf8_lossy(r).lines().filter(|l| !l.starts_with("source")).collect::<Vec<_>>().join("\n");
    assert_eq!(tail(&ra), tail(&rb));
}

#[test]
fn sweep_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "sweep.toml",
        "dim = 1\nresolution = [128]\nq = [0.5, 1.0]\neps = [0.01, 0.05]\nmodes = [\"cos(2θ)\"]\nworkers = 2\n",
    );
    let out = dir.path().join("sweep");
    let o = dualmink(&["sweep", "--config", &spec, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rows = read_summary(&out.join("summary.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.converged && r.stability_pass));
    assert_eq!(std::fs::read_dir(out.join("runs")).unwrap().count(), 4);

    let empty = write(
        dir.path(),
        "empty.toml",
        "dim = 1\nresolution = [128]\nq = []\neps = [0.01]\nmodes = [\"cos(2θ)\"]\n",
    );
    let o = dualmink(&["sweep", "--config", &empty, "--out", dir.path().join("e").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty run matrix"));

    let big = write(
        dir.path(),
        "big.toml",
        "dim = 1\nresolution = [128]\nq = [0.5, 1.0]\neps = [0.01, 0.05]\nmodes = [\"cos(2θ)\"]\nmax_runs = 3\n",
    );
    let o = dualmink(&["sweep", "--config", &big, "--out", dir.path().join("b").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("b").exists());
}

#[test]
fn manufacture_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.toml");
    let o = dualmink(&[
        "manufacture", "--body", "ellipsoid(1.1,1,1)", "--resolution", "8x16", "--q", "2", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: dualmink::harness::ManufacturedDocument = read_document(&out).unwrap();
    assert_eq!(doc.f.len(), 128);
    assert!(doc.f.iter().all(|v| *v > 0.0));
    let o = dualmink(&["manufacture", "--body", "ellipse(1,1)", "--resolution", "8x16", "--q", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
