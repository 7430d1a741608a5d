use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::{tempdir, TempDir};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_openmedium"));
    c.env("OPENMEDIUM_LOG_LEVEL", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn openmedium")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn workspace_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

const SOUP: &str = "world_kind = \"soup\"\nseed = 3\nsteps = 400\nsoup_size = 20000\nmetrics_interval = 50\n";
const ATOMS: &str = "world_kind = \"atoms\"\nseed = 3\nsteps = 200\nmetrics_interval = 20\n";

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn run_writes_documented_metrics_header() {
    let d = tempdir().unwrap();
    let cfg = write_config(&d, "soup.toml", SOUP);
    let out = d.path().join("out");
    let o = run(&["run", &cfg, "--out", &path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("step 400"));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(
        metrics.lines().next(),
        Some(
            "step,population,free_resource,genotype_richness,shannon_diversity,dominant_genotype_length,births,deaths,parasite_count,new_genotypes"
        )
    );
    assert!(out.join("ckpt_400.vwld").exists());
}

#[test]
fn malformed_config_exits_2_without_output() {
    let d = tempdir().unwrap();
    let out = d.path().join("out");
    for body in ["world_kind = \"soup\"\nfill_threshold = 1.5\n", "colour = 3\n", "steps = ["] {
        let cfg = write_config(&d, "bad.toml", body);
        let o = run(&["run", &cfg, "--out", &path_str(&out)]);
        assert_eq!(code(&o), 2, "{body}");
        assert!(!out.exists());
    }
    let o = run(&["run", &path_str(&d.path().join("missing.toml"))]);
    assert_eq!(code(&o), 2);
    let o = run(&["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn repeated_runs_give_identical_logs() {
    let d = tempdir().unwrap();
    let cfg = write_config(&d, "soup.toml", SOUP);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(code(&run(&["run", &cfg, "--out", &path_str(&a)])), 0);
    assert_eq!(code(&run(&["run", &cfg, "--out", &path_str(&b)])), 0);
    assert_eq!(fs::read(a.join("events.log")).unwrap(), fs::read(b.join("events.log")).unwrap());
}

#[test]
fn resume_matches_uninterrupted_run() {
    let d = tempdir().unwrap();
    for (name, body) in [("soup.toml", SOUP), ("atoms.toml", ATOMS)] {
        let cfg = write_config(&d, name, body);
        let whole = d.path().join(format!("whole-{name}"));
        let split = d.path().join(format!("split-{name}"));
        assert_eq!(code(&run(&["run", &cfg, "--out", &path_str(&whole), "--set", "steps=200"])), 0);
        assert_eq!(code(&run(&["run", &cfg, "--out", &path_str(&split), "--set", "steps=100"])), 0);
        let o = run(&["resume", &path_str(&split.join("ckpt_100.vwld")), "--steps", "100"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(fs::read(whole.join("ckpt_200.vwld")).unwrap(), fs::read(split.join("ckpt_200.vwld")).unwrap());
        assert_eq!(fs::read(whole.join("metrics.csv")).unwrap(), fs::read(split.join("metrics.csv")).unwrap());
    }
}

#[test]
fn resume_zero_steps_and_damaged_checkpoints() {
    let d = tempdir().unwrap();
    let cfg = write_config(&d, "atoms.toml", ATOMS);
    let out = d.path().join("out");
    assert_eq!(code(&run(&["run", &cfg, "--out", &path_str(&out)])), 0);
    let ck = out.join("ckpt_200.vwld");
    let before = fs::read(&ck).unwrap();
    assert_eq!(code(&run(&["resume", &path_str(&ck), "--steps", "0"])), 0);
    assert_eq!(fs::read(&ck).unwrap(), before);

    let trunc = d.path().join("trunc.vwld");
    fs::write(&trunc, &before[..before.len() / 2]).unwrap();
    let o = run(&["resume", &path_str(&trunc), "--steps", "5"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupt checkpoint"));
}

fn strip_comments(src: &str) -> Vec<String> {
    src.lines()
        .map(|l| l.split(';').next().unwrap().trim().to_owned())
        .filter(|l| !l.is_empty())
        .collect()
}

#[test]
fn inspect_seeded_worlds() {
    let d = tempdir().unwrap();
    let cfg = write_config(&d, "soup.toml", SOUP);
    let out = d.path().join("soup");
    assert_eq!(code(&run(&["run", &cfg, "--out", &path_str(&out), "--set", "steps=0"])), 0);
    let ck = path_str(&out.join("ckpt_0.vwld"));
    let o = run(&["inspect", &ck]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("population 1"));
    let o = run(&["inspect", &ck, "org:1"]);
    assert_eq!(code(&o), 0);
    let ancestor = fs::read_to_string(workspace_file("crates/core/assets/ancestor.soup")).unwrap();
    assert_eq!(strip_comments(&stdout(&o)), strip_comments(&ancestor));
    assert_eq!(code(&run(&["inspect", &ck, "org:99999"])), 2);
    assert_eq!(code(&run(&["inspect", &ck, "organism-one"])), 2);

    let cfg = write_config(&d, "atoms.toml", ATOMS);
    let out = d.path().join("atoms");
    assert_eq!(code(&run(&["run", &cfg, "--out", &path_str(&out), "--set", "steps=0"])), 0);
    let o = run(&["inspect", &path_str(&out.join("ckpt_0.vwld"))]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let chains: Vec<&str> = text.lines().filter(|l| l.starts_with("org:")).collect();
    assert_eq!(chains.len(), 1, "{text}");
    assert!(chains[0].contains("chain ab genotype"), "{}", chains[0]);
}

#[test]
fn export_tables() {
    let d = tempdir().unwrap();
    let cfg = write_config(&d, "soup.toml", SOUP);
    let out = d.path().join("out");
    let args = ["run", &cfg, "--out", &path_str(&out), "--set", "p_copy_flip=0", "--set", "p_cosmic=0"];
    assert_eq!(code(&run(&args)), 0);
    let dir = path_str(&out);
    let o = run(&["export", &dir, "metrics"]);
    assert_eq!(code(&o), 0);
    assert_eq!(o.stdout, fs::read(out.join("metrics.csv")).unwrap());

    let o = run(&["export", &dir, "genotypes"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "genotype_id,canonical,first_seen,last_seen,max_abundance");
    assert_eq!(rows.len(), 2, "{text}");

    let o = run(&["export", &dir, "events"]);
    assert_eq!(code(&o), 0);
    let events = fs::read_to_string(out.join("events.log")).unwrap();
    assert_eq!(stdout(&o).lines().count(), events.lines().count() + 1);

    let empty = tempdir().unwrap();
    for what in ["metrics", "genotypes", "events"] {
        assert_eq!(code(&run(&["export", &path_str(empty.path()), what])), 2);
    }
}

#[test]
fn verify_scenarios() {
    let o = run(&["verify", "ancestor"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("PASS ancestor"));

    let truncated = workspace_file("fixtures/truncated_ancestor.soup");
    let o = run(&["verify", "ancestor", "--genome", &path_str(&truncated)]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).starts_with("FAIL ancestor"));

    let o = run(&["verify", "conservation"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("census unchanged"));

    for s in ["replicator", "determinism"] {
        let o = run(&["verify", s]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
    }
}
