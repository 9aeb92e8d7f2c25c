use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn radtrans(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radtrans"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RADTRANS_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn smoke_run_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let o = radtrans(
        &[
            "run",
            "--case",
            "inline:sigma=1,sigmas=0",
            "--meshes",
            "10:20",
            "--ref",
            "160",
            "--out",
            "o",
            "--cache",
            "c",
        ],
        tmp.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("l1_error"));
    let table = fs::read_to_string(tmp.path().join("o/inline_s1_ss0_f1_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert_eq!(fs::read_dir(tmp.path().join("c")).unwrap().count(), 3);
}

#[test]
fn config_file_env_and_flags_layer_in_order() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.cfg"),
        "case = inline:sigma=2,sigmas=1\nmeshes = 4:8\nreference_mesh = 64\nsn_order = 4\ncache_dir = file-cache\noutput_dir = file-out\n",
    )
    .unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_radtrans"));
        cmd.args(["run", "--config", "run.cfg"])
            .args(extra)
            .current_dir(tmp.path())
            .env_remove("RADTRANS_CACHE");
        if let Some(dir) = env {
            cmd.env("RADTRANS_CACHE", dir);
        }
        cmd.output().unwrap()
    };
    assert_eq!(run(&[], None).status.code(), Some(0));
    assert!(tmp.path().join("file-cache").is_dir());
    assert!(tmp
        .path()
        .join("file-out/inline_s2_ss1_f1_table.csv")
        .exists());

    assert_eq!(run(&[], Some("env-cache")).status.code(), Some(0));
    assert!(tmp.path().join("env-cache").is_dir());

    assert_eq!(
        run(
            &["--cache", "flag-cache", "--set", "meshes=8:8"],
            Some("env-cache")
        )
        .status
        .code(),
        Some(0)
    );
    assert!(tmp.path().join("flag-cache").is_dir());
    let table = fs::read_to_string(tmp.path().join("file-out/inline_s2_ss1_f1_table.csv")).unwrap();
    assert!(table.lines().nth(1).unwrap().starts_with("8,"));
}

#[test]
fn quadrature_dump_prints_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let o = radtrans(&["quadrature-dump", "--order", "4"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("mu,eta,weight"));
    assert_eq!(text.lines().count(), 13);

    let o = radtrans(
        &["quadrature-dump", "--order", "8", "--out", "q/s8.csv"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(tmp.path().join("q/s8.csv"))
            .unwrap()
            .lines()
            .count(),
        41
    );
}

#[test]
fn cache_clear_removes_entries() {
    let tmp = tempfile::tempdir().unwrap();
    let run = radtrans(
        &[
            "run", "--case", "1", "--meshes", "4:8", "--ref", "32", "--order", "4", "--cache", "c",
            "--out", "o",
        ],
        tmp.path(),
    );
    assert_eq!(run.status.code(), Some(0));
    let o = radtrans(&["cache-clear", "--cache", "c"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("removed 3 files"));
    assert_eq!(fs::read_dir(tmp.path().join("c")).unwrap().count(), 0);
}

#[test]
fn configuration_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.cfg"), "case = 1\nbogus_key = 3\n").unwrap();
    for args in [
        vec!["run", "--config", "bad.cfg"],
        vec!["run", "--config", "missing.cfg"],
        vec!["run", "--case", "7"],
        vec!["run", "--meshes", "10,30"],
        vec!["run", "--order", "5"],
        vec!["run", "--set", "nonsense"],
        vec!["quadrature-dump", "--order", "3"],
        vec!["frobnicate"],
    ] {
        let o = radtrans(&args, tmp.path());
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn solver_failures_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = radtrans(
        &[
            "run",
            "--case",
            "2",
            "--meshes",
            "4:8",
            "--ref",
            "32",
            "--order",
            "4",
            "--set",
            "max_iterations=3",
            "--out",
            "o",
            "--cache",
            "c",
        ],
        tmp.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn threshold_violations_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = radtrans(
        &[
            "crosscheck",
            "--case",
            "2",
            "--mesh",
            "8",
            "--order",
            "2",
            "--tolerance",
            "1e-6",
            "--out",
            "o",
            "--cache",
            "c",
        ],
        tmp.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold violation"));
}

#[test]
fn help_exits_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = radtrans(&["--help"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    for sub in [
        "run",
        "regularity",
        "crosscheck",
        "quadrature-dump",
        "cache-clear",
    ] {
        assert!(stdout(&o).contains(sub), "{sub}");
    }
}
