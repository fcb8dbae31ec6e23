use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn default_cfg() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.cfg")
}

fn ltpf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltpf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("small.cfg");
    fs::write(
        &path,
        format!("num_users = 4\nnum_subcarriers = 6\nwindow_frames = 5\nnum_windows = 4\n{extra}"),
    )
    .unwrap();
    path
}

#[test]
fn single_run_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = ltpf(&[
        "--config",
        default_cfg().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--windows",
        "3",
        "--dump-gains",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "frames.csv",
        "windows.csv",
        "cdf.csv",
        "summary.txt",
        "gains.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let frames = fs::read_to_string(out.join("frames.csv")).unwrap();
    assert_eq!(frames.lines().next(), Some("frame,user,rate_bps"));
    // 3 windows of 10 frames, 20 users.
    assert_eq!(frames.lines().count(), 1 + 30 * 20);
    let gains = fs::read_to_string(out.join("gains.csv")).unwrap();
    assert_eq!(gains.lines().count(), 1 + 30 * 20 * 72);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("policy=ltpf\n"));
    assert!(summary.contains("num_windows=3\n"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ltpf"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = ltpf(&["--policy", "ltpf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_flag_without_sweep_is_a_usage_error() {
    let o = ltpf(&[
        "--config",
        default_cfg().to_str().unwrap(),
        "--seed",
        "1",
        "--seed",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_policy_is_a_usage_error() {
    let o = ltpf(&[
        "--config",
        default_cfg().to_str().unwrap(),
        "--policy",
        "fastest",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_exhaustive_search_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ltpf(&[
        "--config",
        default_cfg().to_str().unwrap(),
        "--policy",
        "pf-optimal",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("20^72"), "{err}");
}

#[test]
fn bad_config_value_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "target_ber = 0.7\n");
    let o = ltpf(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let cfg = small_config(tmp.path(), "no_such_key = 1\n");
    let o = ltpf(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exhaustive_search_runs_on_a_small_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "qos_profile = 1e5, 2e5, 3e5, 4e5\n");
    let out = tmp.path().join("out");
    let o = ltpf(&[
        "--config",
        cfg.to_str().unwrap(),
        "--policy",
        "pf-optimal",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let windows = fs::read_to_string(out.join("windows.csv")).unwrap();
    assert_eq!(windows.lines().count(), 1 + 4 * 4);
    // γ is echoed verbatim.
    assert!(windows.lines().nth(1).unwrap().contains(",100000.000,"));
}

#[test]
fn sweep_writes_runs_and_figure_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "qos_profile = 1e5, 2e5, 3e5, 4e5\n");
    let out = tmp.path().join("out");
    let o = ltpf(&[
        "--config",
        cfg.to_str().unwrap(),
        "--sweep",
        "--seed",
        "1",
        "--seed",
        "2",
        "--frames",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut figs: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("fig_"))
        .collect();
    figs.sort();
    assert_eq!(
        figs,
        [
            "fig_ltpf_m10_cdf.csv",
            "fig_ltpf_m10_profile.csv",
            "fig_ltpf_m1_cdf.csv",
            "fig_ltpf_m1_profile.csv",
            "fig_ltpf_m4_cdf.csv",
            "fig_ltpf_m4_profile.csv",
        ]
    );
    let profile = fs::read_to_string(out.join("fig_ltpf_m4_profile.csv")).unwrap();
    let gammas: Vec<&str> = profile
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(
        gammas,
        ["100000.000", "200000.000", "300000.000", "400000.000"]
    );
    // Two seeds of four users pooled.
    let cdf = fs::read_to_string(out.join("fig_ltpf_m1_cdf.csv")).unwrap();
    assert_eq!(cdf.lines().count(), 1 + 8);

    for m in [1, 4, 10] {
        for seed in [1, 2] {
            assert!(out
                .join(format!("runs/ltpf_m{m}_seed{seed}/windows.csv"))
                .is_file());
        }
    }
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 6);
}

#[test]
fn sweep_rejects_budget_not_divisible_by_m() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let o = ltpf(&[
        "--config",
        cfg.to_str().unwrap(),
        "--sweep",
        "--m",
        "3",
        "--frames",
        "20",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identical_invocations_give_identical_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "doppler_hz = 30\n");
    let mut bodies = Vec::new();
    for rep in 0..2 {
        let out = tmp.path().join(format!("r{rep}"));
        let o = ltpf(&[
            "--config",
            cfg.to_str().unwrap(),
            "--policy",
            "pf-greedy",
            "--seed",
            "17",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        bodies
            .push(["frames.csv", "windows.csv", "cdf.csv"].map(|f| fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(bodies[0], bodies[1]);
}
