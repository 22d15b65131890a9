use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn evlife(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evlife"))
        .args(args)
        .current_dir(dir)
        .env_remove("EVLIFE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = evlife(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    evlife(dir, args).status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

fn sample() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/dataset_format_sample.txt")
}

/// Small noisy stripes scene written to `ev.txt` and `truth.csv`.
fn scene(dir: &Path) {
    ok(
        dir,
        &[
            "synth", "--w", "64", "--h", "48", "--stripes", "3", "--spacing", "20", "--duration", "0.3",
            "--jitter", "0.0005", "--noise-rate", "0.5", "--out", "ev.txt", "--truth", "truth.csv", "--seed", "3",
        ],
    );
}

#[test]
fn detect_writes_lifetime_csv() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    scene(d);
    ok(d, &["detect", "--in", "ev.txt", "--w", "64", "--h", "48", "--out", "lifetimes.csv"]);
    let csv = String::from_utf8(read(d, "lifetimes.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,y,p,tau,vx,vy,status"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().any(|r| r.ends_with(",ok")));
    assert!(rows.iter().all(|r| r.split(',').count() == 8));
}

#[test]
fn full_pipeline_produces_scores() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    scene(d);
    ok(d, &["filter", "--in", "ev.txt", "--geometry", "64x48", "--out", "clean.txt"]);
    ok(d, &["detect", "--in", "ev.txt", "--geometry", "64x48", "--out", "lifetimes.csv"]);
    ok(d, &["render", "--mode", "lifetime", "--at", "0.25", "--in", "lifetimes.csv", "--out", "edge.pgm"]);
    ok(d, &["render", "--mode", "time", "--at", "0.25", "--window", "0.03", "--in", "ev.txt", "--w", "64", "--h", "48", "--out", "acc.pgm"]);
    ok(d, &["render", "--mode", "count", "--at", "0.25", "--count", "500", "--in", "ev.txt", "--w", "64", "--h", "48", "--out", "count.pgm"]);
    ok(d, &["render", "--mode", "tau-map", "--in", "lifetimes.csv", "--w", "64", "--h", "48", "--out", "tau.pgm"]);
    assert!(read(d, "edge.pgm").starts_with(b"P5\n"));
    assert!(read(d, "tau.pgm").starts_with(b"P5\n64 48\n255\n"));

    let cdm = ok(d, &["eval", "cdm", "--f", "edge.pgm", "--g", "acc.pgm", "--eta", "3"]);
    let line = String::from_utf8(cdm.stdout).unwrap();
    assert_eq!(line.lines().count(), 1);
    let score: f64 = line
        .split("\"score\":")
        .nth(1)
        .and_then(|s| s.split(',').next())
        .and_then(|s| s.parse().ok())
        .expect("score field");
    assert!((0.0..=100.0).contains(&score));

    let stats = ok(
        d,
        &[
            "eval", "lifetime", "--estimates", "lifetimes.csv", "--truth", "truth.csv", "--events", "ev.txt", "--w",
            "64", "--h", "48", "--histogram", "hist.csv",
        ],
    );
    let stats = String::from_utf8(stats.stdout).unwrap();
    assert!(stats.starts_with("scored,mean_abs_error,peak_mass_10pct\n"));
    assert!(String::from_utf8(read(d, "hist.csv")).unwrap().starts_with("bin_start,bin_end,count\n"));

    let clean = String::from_utf8(read(d, "clean.txt")).unwrap();
    let raw = String::from_utf8(read(d, "ev.txt")).unwrap();
    assert!(clean.lines().count() < raw.lines().count());
}

#[test]
fn outputs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    scene(d);
    let first = read(d, "ev.txt");
    scene(d);
    assert_eq!(first, read(d, "ev.txt"));

    let mut outputs = Vec::new();
    for threads in ["1", "2", "5"] {
        let out = ok(d, &["detect", "--in", "ev.txt", "--w", "64", "--h", "48", "--threads", threads, "--seed", "11"]);
        outputs.push(out.stdout);
    }
    outputs.push(ok(d, &["detect", "--in", "ev.txt", "--w", "64", "--h", "48", "--seed", "11"]).stdout);
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));

    let sweep = |threads: &str| {
        ok(
            d,
            &["eval", "fig4", "--mode", "scattered", "--sigmas", "0.005", "--deltas", "0,0.25", "--repetitions", "40", "--threads", threads],
        )
        .stdout
    };
    assert_eq!(sweep("1"), sweep("3"));
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let args = ["synth", "--w", "32", "--h", "16", "--stripes", "1", "--jitter", "0.001", "--duration", "0.2", "--out"];
    let with_env = Command::new(env!("CARGO_BIN_EXE_evlife"))
        .args(args)
        .arg("env.txt")
        .current_dir(d)
        .env("EVLIFE_SEED", "42")
        .status()
        .unwrap();
    assert!(with_env.success());
    let mut flag = args.to_vec();
    flag.extend(["flag.txt", "--seed", "42"]);
    ok(d, &flag);
    let mut default = args.to_vec();
    default.push("default.txt");
    ok(d, &default);
    assert_eq!(read(d, "env.txt"), read(d, "flag.txt"));
    assert_ne!(read(d, "env.txt"), read(d, "default.txt"));
}

#[test]
fn config_file_fills_flags_and_flags_win() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    scene(d);
    std::fs::write(d.join("run.cfg"), "# detect settings\nw = 64\nh = 48\ndelta = 0.1\nmin_inliers = 2\n").unwrap();
    let from_config = ok(d, &["detect", "--config", "run.cfg", "--in", "ev.txt"]).stdout;
    let explicit = ok(d, &["detect", "--in", "ev.txt", "--w", "64", "--h", "48", "--delta", "0.1", "--min-inliers", "2"]).stdout;
    assert_eq!(from_config, explicit);

    let overridden = ok(d, &["detect", "--config", "run.cfg", "--in", "ev.txt", "--delta", "0.3"]).stdout;
    let direct = ok(d, &["detect", "--in", "ev.txt", "--w", "64", "--h", "48", "--delta", "0.3", "--min-inliers", "2"]).stdout;
    assert_eq!(overridden, direct);
    assert_ne!(overridden, from_config);

    std::fs::write(d.join("flags.cfg"), "exhaustive = true\nno_filter = false\n").unwrap();
    ok(d, &["detect", "--config", "flags.cfg", "--in", "ev.txt", "--geometry", "64x48"]);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    scene(d);
    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["frobnicate"]), 1);
    assert_eq!(code(d, &["detect", "--in", "ev.txt", "--w", "64", "--h", "48", "--bogus"]), 1);
    assert_eq!(code(d, &["detect", "--in", "ev.txt"]), 1);
    assert_eq!(code(d, &["detect", "--in", "ev.txt", "--w", "64", "--h", "48", "--delta", "0.6"]), 1);
    assert_eq!(code(d, &["render", "--mode", "time", "--in", "ev.txt", "--w", "64", "--h", "48"]), 1);
    std::fs::write(d.join("bad.cfg"), "colour = blue\n").unwrap();
    assert_eq!(code(d, &["detect", "--config", "bad.cfg", "--in", "ev.txt", "--w", "64", "--h", "48"]), 1);

    assert_eq!(code(d, &["detect", "--in", "missing.txt", "--w", "64", "--h", "48"]), 2);
    assert_eq!(code(d, &["detect", "--in", "ev.txt", "--w", "8", "--h", "8"]), 2);
    std::fs::write(d.join("garbled.txt"), "0.1 1 1 1\nnot an event\n").unwrap();
    assert_eq!(code(d, &["info", "--in", "garbled.txt", "--w", "8", "--h", "8"]), 2);
    std::fs::write(d.join("backwards.txt"), "0.2 1 1 1\n0.1 1 1 1\n").unwrap();
    assert_eq!(code(d, &["info", "--in", "backwards.txt", "--w", "8", "--h", "8"]), 2);
    std::fs::write(d.join("broken.pgm"), "P5\n4 4\n255\nxx").unwrap();
    assert_eq!(code(d, &["eval", "cdm", "--f", "broken.pgm", "--g", "broken.pgm"]), 2);
    assert_eq!(code(d, &["detect", "--config", "absent.cfg", "--in", "ev.txt", "--w", "64", "--h", "48"]), 2);
}

#[test]
fn fig4_writes_both_tables() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["fig4", "--out-dir", "sweeps", "--repetitions", "20"]);
    let a = String::from_utf8(read(d, "sweeps/fig4a.csv")).unwrap();
    let b = String::from_utf8(read(d, "sweeps/fig4b.csv")).unwrap();
    assert_eq!(a.lines().count(), 1 + 16);
    assert_eq!(b.lines().count(), 1 + 10);
    assert!(a.lines().skip(1).all(|l| l.starts_with("global,")));
    assert!(b.lines().skip(1).all(|l| l.starts_with("scattered,")));
}

#[test]
fn ingests_dataset_format_sample() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let input = sample();
    let input = input.to_str().unwrap();
    let info = String::from_utf8(ok(d, &["info", "--in", input, "--geometry", "32x24"]).stdout).unwrap();
    assert!(info.contains("geometry 32x24\n"));
    assert!(info.contains("events 520\n"));
    ok(d, &["detect", "--in", input, "--geometry", "32x24", "--out", "lt.csv"]);
    ok(d, &["render", "--mode", "lifetime", "--at", "0.1", "--in", "lt.csv", "--geometry", "32x24", "--out", "edge.pgm"]);
    assert!(read(d, "edge.pgm").starts_with(b"P5\n32 24\n255\n"));
}
