use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hapsim");

fn hapsim(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn measure_default_writes_five_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = hapsim(&["measure", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in [
        "increased-inertia",
        "decreased-inertia",
        "damping-increase",
        "damping-decrease",
        "elasticity-increase",
    ] {
        let text = fs::read_to_string(out.join(format!("{name}.csv"))).unwrap();
        assert!(text.starts_with("t,theta,omega,omega_dot,tau_desired,tau_achieved,saturated\n"));
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 6);
}

#[test]
fn single_condition_reports_ring_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let o = hapsim(&["measure", "--out", s(dir.path()), "--condition", "elasticity-increase"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let files: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 2);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let header: Vec<&str> = summary.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "dominant_oscillation_hz").unwrap();
    let hz: f64 = row[col].parse().unwrap();
    assert!((hz - 2.0).abs() < 0.1);
}

#[test]
fn config_file_is_applied_and_bad_keys_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("from-config");
    fs::write(
        &cfg,
        format!(
            "output_dir = \"{}\"\n[conditions]\nrun = [\"damping-increase\"]\n",
            out.display()
        ),
    )
    .unwrap();
    let o = hapsim(&["measure", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("damping-increase.csv").exists());

    fs::write(&cfg, "[imu]\nsample_rat = 500.0\n").unwrap();
    let o = hapsim(&["measure", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sample_rat"), "{}", stderr(&o));

    fs::write(&cfg, "[cmg]\nrate_limit = -3.0\n").unwrap();
    let o = hapsim(&["measure", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rate_limit"), "{}", stderr(&o));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = hapsim(&["measure", "--print-config", "--seed", "5"]);
    assert!(o.status.success());
    let cfg = dir.path().join("printed.toml");
    fs::write(&cfg, &o.stdout).unwrap();
    let again = hapsim(&["measure", "--config", s(&cfg), "--print-config"]);
    assert_eq!(again.stdout, o.stdout);
    assert!(String::from_utf8_lossy(&o.stdout).contains("seed = 5"));
}

#[test]
fn unknown_condition_and_usage_errors_exit_1() {
    let o = hapsim(&["measure", "--condition", "heavier"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("heavier"));
    assert_eq!(hapsim(&["analyze"]).status.code(), Some(1));
    assert_eq!(hapsim(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn help_documents_every_flag() {
    for (sub, flags) in [
        ("measure", &["--config", "--out", "--condition", "--seed", "--print-config"][..]),
        ("analyze", &["--factors", "--rule", "--method", "--out", "--allow-missing", "--model"]),
        (
            "synth",
            &["--out", "--model", "--noise", "--participants", "--observations", "--repetitions", "--seed", "--round"],
        ),
    ] {
        let o = hapsim(&[sub, "--help"]);
        assert!(o.status.success());
        let text = String::from_utf8_lossy(&o.stdout);
        for f in flags {
            assert!(text.contains(f), "{sub} --help lacks {f}");
        }
    }
}

#[test]
fn synth_then_analyze_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("r.csv");
    let o = hapsim(&["synth", "--out", s(&ratings), "--observations", "80"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&ratings).unwrap().lines().count(), 81);
    assert!(dir.path().join("r.model.json").exists());

    let out = dir.path().join("a");
    let o = hapsim(&["analyze", s(&ratings), "--out", s(&out), "--factors", "4", "--method", "pca"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["scree.csv", "loadings.csv", "summary.csv", "scores.csv", "condition_means.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("Sum of Squared Loadings") && stdout.contains("Factor 4"));
    let loadings = fs::read_to_string(out.join("loadings.csv")).unwrap();
    assert_eq!(loadings.lines().next().unwrap(), "variable,factor1,factor2,factor3,factor4");
}

#[test]
fn factor_count_flag_overrides_rule() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("r.csv");
    assert!(hapsim(&["synth", "--out", s(&ratings), "--observations", "200", "--noise", "0"]).status.success());
    let summary_cols = |extra: &[&str]| {
        let out = dir.path().join(extra.join("_"));
        let mut args = vec!["analyze", s(&ratings), "--out", s(&out), "--method", "pca"];
        args.extend_from_slice(extra);
        assert!(hapsim(&args).status.success());
        let text = fs::read_to_string(out.join("summary.csv")).unwrap();
        text.lines().next().unwrap().split(',').count() - 1
    };
    assert_eq!(summary_cols(&["--factors", "4"]), 4);
    assert_eq!(summary_cols(&["--factors", "2"]), 2);
    assert_eq!(summary_cols(&["--rule", "kaiser"]), 4);
}

#[test]
fn constant_column_names_the_pair() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("flat.csv");
    let mut text = String::from("participant,condition,repetition,Heavy-Light,Hard-Soft,Long-Short\n");
    for p in 0..6 {
        for c in ["a", "b"] {
            text.push_str(&format!("P{p},{c},1,4,{},{}\n", (p % 5) + 1, ((p * 3) % 7) + 1));
        }
    }
    fs::write(&ratings, text).unwrap();
    let o = hapsim(&["analyze", s(&ratings), "--out", s(&dir.path().join("a"))]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("Heavy-Light"), "{}", stderr(&o));
}

#[test]
fn out_of_range_rating_is_located() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("bad.csv");
    fs::write(
        &ratings,
        "participant,condition,repetition,Heavy-Light,Hard-Soft\nP1,a,1,4,9\nP1,b,1,3,2\n",
    )
    .unwrap();
    let o = hapsim(&["analyze", s(&ratings)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("Hard-Soft"), "{err}");
}

#[test]
fn underidentified_principal_axis_fit_exits_2() {
    // 4 factors on 7 variables has negative degrees of freedom; with noise the
    // communalities never settle within the iteration cap.
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("r.csv");
    assert!(hapsim(&["synth", "--out", s(&ratings), "--observations", "200"]).status.success());
    let o = hapsim(&["analyze", s(&ratings), "--factors", "4", "--out", s(&dir.path().join("a"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did not converge"));
}

#[test]
fn synth_is_deterministic_under_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (path, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        assert!(hapsim(&["synth", "--out", s(path), "--seed", seed]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn observations_must_fill_whole_participants() {
    let dir = tempfile::tempdir().unwrap();
    let o = hapsim(&["synth", "--out", s(&dir.path().join("r.csv")), "--observations", "81"]);
    assert_eq!(o.status.code(), Some(1));
}
