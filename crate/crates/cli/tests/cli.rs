use std::path::Path;

use open_rcd::config::ConfigFile;
use open_rcd_cli::{parse_and_dispatch, EXIT_ERROR, EXIT_OK};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("open-rcd").chain(args.iter().copied());
    let code = parse_and_dispatch(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn table_value(table: &str, key: &str) -> f64 {
    table
        .lines()
        .find_map(|l| {
            let mut parts = l.split_whitespace();
            (parts.next() == Some(key)).then(|| parts.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("missing row {key}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bounds_table_has_reference_limits() {
    let (code, out, _) = invoke(&["bounds", "--n", "5", "--kappa", "10", "--rho-r", "0.0125", "--alpha", "1"]);
    assert_eq!(code, EXIT_OK);
    assert!((table_value(&out, "reg_asymptotic_general") - 11.75).abs() < 1e-9);
    assert!((table_value(&out, "reg_asymptotic_quadratic") - 5.49).abs() < 1e-9);
    assert!((table_value(&out, "gamma") - 0.975).abs() < 1e-12);
    assert!((table_value(&out, "pot_avg_bound") - 22.5).abs() < 1e-12);
    assert!(!out.contains("reg_finite_general"));
    // Full precision scientific notation.
    assert!(out.contains("2.3500000000000000e1"));

    let (code, out, _) = invoke(&["bounds", "--t", "1000"]);
    assert_eq!(code, EXIT_OK);
    assert!(table_value(&out, "reg_finite_general") > 0.0);
}

#[test]
fn conflicting_flags_exit_one() {
    let (code, _, err) = invoke(&["run", "--p", "0.5", "--rho-r", "1"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("--p") && err.contains("--rho-r"), "{err}");

    let (code, _, err) = invoke(&["bounds", "--kappa", "3", "--beta", "4"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("--kappa"), "{err}");
}

#[test]
fn errors_name_the_field() {
    let (code, _, err) = invoke(&["bounds", "--mode", "sideways"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("mode"), "{err}");

    let (code, _, err) = invoke(&["bounds", "--kappa", "0.5"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("kappa"), "{err}");

    let (code, _, err) = invoke(&["run", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("config"), "{err}");

    let (code, _, _) = invoke(&["run", "--frobnicate"]);
    assert_eq!(code, EXIT_ERROR);
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = invoke(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("selftest"));
    let (code, _, _) = invoke(&["--version"]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn run_writes_csvs_and_manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/run.csv");
    let (code, _, err) = invoke(&[
        "run", "--n", "5", "--kappa", "10", "--rho-r", "0.0125", "--t", "300", "--trials", "8",
        "--mode", "ar", "--seed", "42", "--out", path_str(&csv),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");

    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("checkpoint_T,series,mean,stderr\n"));
    assert!(body.contains(",reg_avg,"));
    let summary = std::fs::read_to_string(dir.path().join("out/run.summary.csv")).unwrap();
    assert!(summary.starts_with("T,mean_reg,mean_ben,mean_pot,mean_reg/T,mean_pot/T,trial_count\n"));
    assert!(summary.lines().last().unwrap().starts_with("300,"));

    let manifest_path = dir.path().join("out/run.manifest.toml");
    let manifest = ConfigFile::read(&manifest_path).unwrap();
    let original = ConfigFile {
        n: Some(5),
        kappa: Some(10.0),
        rho_r: Some(0.0125),
        t: Some(300),
        trials: Some(8),
        mode: Some("ar".into()),
        seed: Some(42),
        ..ConfigFile::default()
    };
    assert_eq!(manifest.resolve().unwrap(), original.resolve().unwrap());

    // Re-running from the manifest reproduces the output byte for byte.
    let again = dir.path().join("again.csv");
    let (code, _, err) = invoke(&["run", "--config", path_str(&manifest_path), "--out", path_str(&again)]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "n = 3\nkappa = 4.0\np = 0.5\nt = 50\ntrials = 2\n").unwrap();
    let (code, out, err) = invoke(&["bounds", "--config", path_str(&cfg), "--n", "4", "--rho-r", "0.0"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(table_value(&out, "n"), 4.0);
    assert_eq!(table_value(&out, "kappa"), 4.0);
    assert_eq!(table_value(&out, "p"), 1.0);

    std::fs::write(&cfg, "n = 3\nunknown = 1\n").unwrap();
    let (code, _, err) = invoke(&["bounds", "--config", path_str(&cfg)]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("unknown"), "{err}");
}

#[test]
fn trace_writes_trajectory_and_functions() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    let (code, _, err) = invoke(&[
        "trace", "--n", "4", "--p", "0.7", "--t", "200", "--mode", "rr", "--seed", "3", "--out", path_str(&csv),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let body = std::fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("t,event_kind,leaving_or_pair,f_est,f_opt,f_selfish,C_t,dF,dFstar"));
    assert_eq!(lines.count(), 200);
    let replacements = body.matches(",replacement,").count();

    let jsonl = std::fs::read_to_string(dir.path().join("trace.functions.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 4 + replacements);
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["t"], 0);
    assert!(first["family"].is_string());
    assert!(first["alpha"].is_number() && first["beta"].is_number());
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (name, workers) in [("a.csv", "1"), ("b.csv", "4")] {
        let path = dir.path().join(name);
        let (code, _, err) = invoke(&[
            "run", "--t", "200", "--trials", "16", "--mode", "rr", "--seed", "9", "--workers", workers,
            "--out", path_str(&path),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn selftest_passes_on_reference_class() {
    let (code, out, err) = invoke(&["selftest", "--samples", "1000"]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    assert_eq!(out.matches("0 failures").count(), 3);
    assert!(!out.contains("exceeded"));
}
