//! End-to-end tests of the `distill` binary: subcommand behavior, the
//! documented exit codes, and cache handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn distill(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distill"))
        .args(args)
        .current_dir(dir)
        .env_remove("DISTILL_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn transversal_build_and_verify_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let out = distill(&["transversal", "--m", "2", "--cache", "cache"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("15 protocols"));
    assert!(stdout(&out).starts_with("built"));

    let cache_file = dir.path().join("cache/transversal_m2.blct");
    let bytes_before = fs::read(&cache_file).unwrap();

    let out = distill(&["transversal", "--m", "2", "--cache", "cache"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("verified"));
    assert_eq!(fs::read(&cache_file).unwrap(), bytes_before);
}

#[test]
fn sweep_without_cache_instructs_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = distill(
        &["sweep", "--noise", "werner", "--families", "2-1", "--grid", "0.7:0.8:0.05"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("distill transversal --m 2"));
}

#[test]
fn sweep_emits_stable_csv_header_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = distill(&["transversal", "--m", "2", "--cache", "cache"], dir.path());
    assert!(out.status.success());

    let args_base = [
        "sweep",
        "--noise",
        "werner",
        "--families",
        "2-1,2-2-1",
        "--objective",
        "keyrate",
        "--grid",
        "0.6:0.9:0.05",
        "--cache",
        "cache",
    ];
    let mut first = None;
    for workers in ["1", "3"] {
        let mut args = args_base.to_vec();
        args.extend_from_slice(&["--workers", workers]);
        let out = distill(&args, dir.path());
        assert!(out.status.success(), "{}", stderr(&out));
        let text = stdout(&out);
        assert!(text.starts_with("family,m,n,perm_id,F_in,F_out,p_ed,p_ad,key_rate\n"));
        match &first {
            None => first = Some(text),
            Some(prev) => assert_eq!(prev, &text, "worker count changed sweep bytes"),
        }
    }
}

#[test]
fn sweep_jsonl_format() {
    let dir = tempfile::tempdir().unwrap();
    distill(&["transversal", "--m", "2", "--cache", "cache"], dir.path());
    let out = distill(
        &[
            "sweep",
            "--noise",
            "dephasing",
            "--families",
            "2-1",
            "--grid",
            "0.9:0.9:0.1",
            "--cache",
            "cache",
            "--format",
            "jsonl",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let line = stdout(&out);
    assert!(line.starts_with("{\"family\":\"2-1\",\"m\":2,\"n\":1,"));
    assert!(line.trim_end().ends_with('}'));
}

#[test]
fn bad_family_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = distill(
        &["sweep", "--noise", "werner", "--families", "9-9-1", "--grid", "0.7:0.8:0.05"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn security_reports_known_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = distill(&["security"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("bb84_ad"));
    assert!(text.contains("Q* = 0.2000"));
    assert!(text.contains("Q* = 0.2500"));
    assert!(text.contains("Q* = 0.2764"));

    let out = distill(&["security", "--family", "bb84_ad"], dir.path());
    assert!(out.status.success());
    assert!(!stdout(&out).contains("six_state"));

    let out = distill(&["security", "--family", "unknown"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_clean_and_fails_on_tampered_cache() {
    let dir = tempfile::tempdir().unwrap();
    distill(&["transversal", "--m", "2", "--cache", "cache"], dir.path());
    let out = distill(&["verify", "--cache", "cache"], dir.path());
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS counting formulas"));
    assert!(stdout(&out).contains("PASS cache"));

    // Flip one bit in a record byte.
    let path = dir.path().join("cache/transversal_m2.blct");
    let mut bytes = fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x08;
    fs::write(&path, &bytes).unwrap();

    let out = distill(&["verify", "--cache", "cache"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).contains("FAIL cache"));
    assert!(stdout(&out).contains("corrupt cache"));
}

#[test]
fn cache_env_var_override_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_distill"))
        .args(["transversal", "--m", "1"])
        .current_dir(dir.path())
        .env("DISTILL_CACHE_DIR", "envcache")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("envcache/transversal_m1.blct").exists());
}
