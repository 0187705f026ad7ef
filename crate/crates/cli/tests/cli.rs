use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn womkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_womkit")).args(args).output().expect("spawn womkit")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn value(out: &Output, key: &str) -> String {
    let prefix = format!("{key}=");
    stdout(out)
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_owned))
        .unwrap_or_else(|| panic!("no {key} in {}", stdout(out)))
}

struct Scratch {
    dir: TempDir,
}

impl Scratch {
    fn new() -> Self {
        Scratch { dir: TempDir::new().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn file(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_owned()
    }

    /// The two-write example image: t=2, n=10, m=4, l=2, k=7, p=(1/3,1/2).
    fn small_image(&self, blocks: &str) -> String {
        let img = self.path("mem.img");
        let img = img.to_str().unwrap();
        let out = womkit(&[
            "init", "--out", img, "--t", "2", "--n", "10", "--m", "4", "--l", "2", "--k", "7", "--p",
            "1/3,1/2", "--blocks", blocks,
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        img.to_owned()
    }
}

fn read_bytes(p: &str) -> Vec<u8> {
    fs::read(Path::new(p)).unwrap()
}

#[test]
fn params_for_two_writes() {
    let out = womkit(&["params", "--t", "2", "--epsilon", "0.5"]);
    assert_eq!(code(&out), 0);
    assert_eq!(value(&out, "c"), "40");
    assert_eq!(value(&out, "n"), "320");
    assert_eq!(value(&out, "scale"), "analysis");
    let achieved: f64 = value(&out, "achieved_rate").parse().unwrap();
    assert!(achieved > 3f64.log2() - 0.5);
}

#[test]
fn params_three_writes_sum_rate() {
    let out = womkit(&["params", "--t", "3", "--epsilon", "0.3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(value(&out, "sum_rate"), "2");
}

#[test]
fn params_with_explicit_rates() {
    let out = womkit(&["params", "--t", "2", "--epsilon", "0.4", "--rates", "0.8,0.5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = womkit(&["params", "--t", "2", "--epsilon", "0.4", "--rates", "0.8"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn params_rejects_epsilon_at_capacity() {
    for (t, eps) in [("2", "1.6"), ("3", "2.0"), ("1", "1.0")] {
        let out = womkit(&["params", "--t", t, "--epsilon", eps]);
        assert_eq!(code(&out), 2, "t={t} eps={eps}");
    }
}

#[test]
fn two_round_session_round_trips() {
    let s = Scratch::new();
    let img = s.small_image("1");
    let m1 = s.file("m1", "a5c30f\n");
    let m2 = s.file("m2", "1b2c03");

    let out = womkit(&["write", "--img", &img, "--round", "1", "--in", &m1]);
    assert_eq!(code(&out), 0);
    let out = womkit(&["read", "--img", &img]);
    assert_eq!(value(&out, "round"), "1");
    assert_eq!(value(&out, "payload"), "a5c30f");

    let out = womkit(&["write", "--img", &img, "--round", "2", "--in", &m2, "--blocks", "1"]);
    assert_eq!(code(&out), 0);
    let out = womkit(&["read", "--img", &img, "--round", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(value(&out, "bits"), "20");
    assert_eq!(value(&out, "payload"), "1b2c03");
}

#[test]
fn multi_block_session() {
    let s = Scratch::new();
    let img = s.small_image("3");
    // 3 blocks x 4 words x 6 bits = 72 bits in round 1, 3 x 4 x 5 = 60 in round 2
    let m1 = s.file("m1", "0123456789abcdeffe");
    let m2 = s.file("m2", "f0e1d2c3b4a59607");
    assert_eq!(code(&womkit(&["write", "--img", &img, "--round", "1", "--in", &m1])), 0);
    assert_eq!(value(&womkit(&["read", "--img", &img]), "payload"), "0123456789abcdeffe");
    assert_eq!(code(&womkit(&["write", "--img", &img, "--round", "2", "--in", &m2])), 0);
    assert_eq!(value(&womkit(&["read", "--img", &img]), "payload"), "f0e1d2c3b4a59607");
}

#[test]
fn round_two_on_fresh_image_is_sequencing_error() {
    let s = Scratch::new();
    let img = s.small_image("1");
    let before = read_bytes(&img);
    let m = s.file("m", "ffffff");
    let out = womkit(&["write", "--img", &img, "--round", "2", "--in", &m]);
    assert_eq!(code(&out), 4);
    assert_eq!(read_bytes(&img), before);
}

#[test]
fn repeated_round_is_sequencing_error() {
    let s = Scratch::new();
    let img = s.small_image("1");
    let m = s.file("m", "a5c30f");
    assert_eq!(code(&womkit(&["write", "--img", &img, "--round", "1", "--in", &m])), 0);
    let before = read_bytes(&img);
    assert_eq!(code(&womkit(&["write", "--img", &img, "--round", "1", "--in", &m])), 4);
    assert_eq!(read_bytes(&img), before);
}

#[test]
fn read_on_fresh_image_has_nothing() {
    let s = Scratch::new();
    let img = s.small_image("1");
    assert_eq!(code(&womkit(&["read", "--img", &img])), 3);
}

#[test]
fn read_of_stale_round() {
    let s = Scratch::new();
    let img = s.small_image("1");
    let m = s.file("m", "a5c30f");
    womkit(&["write", "--img", &img, "--round", "1", "--in", &m]);
    womkit(&["write", "--img", &img, "--round", "2", "--in", &m]);
    assert_eq!(code(&womkit(&["read", "--img", &img, "--round", "1"])), 3);
}

#[test]
fn failing_writes_leave_image_untouched() {
    let s = Scratch::new();
    let img = s.small_image("2");
    let before = read_bytes(&img);
    let short = s.file("short", "ff");
    let bad = s.file("bad", "zz");
    let good = s.file("good", "a5c30fa5c30f");
    for (args, want) in [
        (vec!["--in", short.as_str()], 2),
        (vec!["--in", bad.as_str()], 2),
        (vec!["--in", good.as_str(), "--blocks", "5"], 2),
        (vec!["--in", "/nonexistent/msg"], 1),
    ] {
        let mut full = vec!["write", "--img", img.as_str(), "--round", "1"];
        full.extend(args);
        assert_eq!(code(&womkit(&full)), want, "{full:?}");
        assert_eq!(read_bytes(&img), before, "{full:?}");
    }
}

#[test]
fn lock_file_blocks_writers() {
    let s = Scratch::new();
    let img = s.small_image("1");
    let before = read_bytes(&img);
    fs::write(format!("{img}.lock"), "").unwrap();
    let m = s.file("m", "a5c30f");
    assert_eq!(code(&womkit(&["write", "--img", &img, "--round", "1", "--in", &m])), 1);
    assert_eq!(read_bytes(&img), before);
    fs::remove_file(format!("{img}.lock")).unwrap();
    assert_eq!(code(&womkit(&["write", "--img", &img, "--round", "1", "--in", &m])), 0);
    assert!(!Path::new(&format!("{img}.lock")).exists());
}

#[test]
fn corrupted_image_is_rejected() {
    let s = Scratch::new();
    let img = s.small_image("1");
    let text = fs::read_to_string(&img).unwrap().replace("data2=0000", "data2=0100");
    fs::write(&img, &text).unwrap();
    assert_eq!(code(&womkit(&["read", "--img", &img])), 1);
    let m = s.file("m", "a5c30f");
    assert_eq!(code(&womkit(&["write", "--img", &img, "--round", "1", "--in", &m])), 1);
    assert_eq!(fs::read_to_string(&img).unwrap(), text);
}

#[test]
fn init_validates_flags() {
    let s = Scratch::new();
    let img = s.path("x.img");
    let img = img.to_str().unwrap();
    // analysis-scale parameters cannot be simulated
    assert_eq!(code(&womkit(&["init", "--out", img, "--t", "2", "--epsilon", "0.5"])), 2);
    // mixing derived and manual parameters
    assert_eq!(code(&womkit(&["init", "--out", img, "--t", "2", "--epsilon", "0.5", "--n", "10"])), 2);
    // incomplete manual set
    assert_eq!(code(&womkit(&["init", "--out", img, "--t", "2", "--n", "10", "--m", "4"])), 2);
    assert!(!Path::new(img).exists());

    let img = s.small_image("1");
    let again = womkit(&[
        "init", "--out", &img, "--t", "2", "--n", "10", "--m", "4", "--l", "2", "--k", "7", "--p", "1/3,1/2",
    ]);
    assert_eq!(code(&again), 2);
}

#[test]
fn audit_hash_passes_and_validates() {
    let out = womkit(&["audit-hash", "--n", "8", "--k", "6", "--l", "4", "--trials", "10"]);
    assert_eq!(code(&out), 0);
    assert_eq!(value(&out, "bad_fraction_bound"), "0.5");
    assert_eq!(value(&out, "bad_fraction_check"), "PASS");

    let out = womkit(&["audit-hash", "--n", "4", "--k", "4", "--l", "2", "--trials", "2"]);
    assert_eq!(code(&out), 0);
    let d: f64 = value(&out, "worst_distance").parse().unwrap();
    assert!(d <= 0.5);
    assert_eq!(value(&out, "distance_check"), "PASS");

    assert_eq!(code(&womkit(&["audit-hash", "--n", "13", "--k", "6", "--l", "4", "--trials", "1"])), 2);
    assert_eq!(code(&womkit(&["audit-hash", "--n", "8", "--k", "3", "--l", "4", "--trials", "1"])), 2);
}

#[test]
fn selftest_single_criterion() {
    let out = womkit(&["selftest", "--only", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(value(&out, "failed"), "0");
    assert_eq!(code(&womkit(&["selftest", "--only", "99"])), 2);
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&womkit(&["params", "--t", "two", "--epsilon", "0.5"])), 2);
    assert_eq!(code(&womkit(&["frobnicate"])), 2);
    assert_eq!(code(&womkit(&["--help"])), 0);
}
