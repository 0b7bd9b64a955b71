//! End-to-end tests of the `ysc` binary: subcommand output, exit codes,
//! determinism and file round-trips.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ysc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ysc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn code_info_lists_structure() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&ysc(&["code", "--d", "3"], dir.path()));
    assert!(text.contains("qubits: 13"));
    assert!(text.contains("stabilizers: 12"));
    assert!(text.contains("vertex"));
    assert!(text.contains("plaquette"));
    assert!(text.contains("logical_x: "));
    // Standard variant swaps the plaquette Pauli.
    let std_text = stdout(&ysc(&["code", "--d", "2", "--variant", "standard"], dir.path()));
    assert!(std_text.contains("qubits: 5"));
    assert!(!std_text.contains('Y'));
}

#[test]
fn hashing_table_matches_known_values() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&ysc(&["hashing", "--eta", "inf", "--rate", "0"], dir.path()));
    assert_eq!(text.lines().next().unwrap(), "eta,rate,p");
    assert!(text.contains("inf,0,0.5"));
    let text = stdout(&ysc(
        &["hashing", "--eta-list", "0.5,10", "--rate-list", "0,0.01"],
        dir.path(),
    ));
    assert_eq!(text.lines().count(), 5);
    let depol: f64 = text
        .lines()
        .find(|l| l.starts_with("0.5,0,"))
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((depol - 0.1893).abs() < 5e-4);
}

#[test]
fn decode_one_exact_and_mps_agree() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "decode-one",
        "--d",
        "3",
        "--p",
        "0.15",
        "--eta",
        "10",
        "--error",
        "IIZIIIIYIIIII",
    ];
    let mps: serde_json::Value =
        serde_json::from_str(&stdout(&ysc(&[&base[..], &["--chi", "16"]].concat(), dir.path())))
            .unwrap();
    let exact: serde_json::Value =
        serde_json::from_str(&stdout(&ysc(&[&base[..], &["--exact"]].concat(), dir.path())))
            .unwrap();
    assert_eq!(mps["class"], exact["class"]);
    assert_eq!(mps["actual_class"], exact["actual_class"]);
    assert!(mps["diagnostics"]["max_bond"].as_u64().unwrap() >= 2);
    // Coset log-probabilities agree between the decoders.
    for class in ["I", "X", "Y", "Z"] {
        let a = mps["log_probs"][class].as_f64();
        let b = exact["log_probs"][class].as_f64();
        match (a, b) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-8, "{class}: {a} vs {b}"),
            _ => assert_eq!(a.is_none(), b.is_none()),
        }
    }
}

#[test]
fn decode_one_accepts_syndrome_input() {
    let dir = tempfile::tempdir().unwrap();
    let out: serde_json::Value = serde_json::from_str(&stdout(&ysc(
        &[
            "decode-one",
            "--d",
            "2",
            "--p",
            "0.1",
            "--eta",
            "0.5",
            "--chi",
            "8",
            "--syndrome",
            "0000",
        ],
        dir.path(),
    )))
    .unwrap();
    assert_eq!(out["class"], "I");
    assert!(out.get("success").is_none());
}

#[test]
fn run_is_deterministic_and_fit_consumes_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run",
        "--d-list",
        "3",
        "--eta-list",
        "10",
        "--p-list",
        "0.15,0.2",
        "--chi-list",
        "8",
        "--trials",
        "80",
        "--seed",
        "7",
        "--checkpoint-every",
        "40",
        "--quiet",
        "--out",
        "a.jsonl",
    ];
    let first = stdout(&ysc(&args, dir.path()));
    let mut args2 = args;
    args2[args.len() - 1] = "b.jsonl";
    let second = stdout(&ysc(&args2, dir.path()));
    assert_eq!(first, second, "stdout differs between identical runs");
    let a = fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = fs::read(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(a, b, "output files differ between identical runs");

    // Each stdout line is a merged estimate consumable by fit.
    for line in first.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["v"], 1);
        assert_eq!(v["trials"], 80);
    }
}

#[test]
fn run_resume_matches_single_pass() {
    let dir = tempfile::tempdir().unwrap();
    let full = stdout(&ysc(
        &[
            "run", "--d-list", "2", "--eta-list", "inf", "--p-list", "0.3", "--chi-list", "4",
            "--trials", "100", "--seed", "3", "--quiet", "--out", "full.jsonl",
        ],
        dir.path(),
    ));
    stdout(&ysc(
        &[
            "run", "--d-list", "2", "--eta-list", "inf", "--p-list", "0.3", "--chi-list", "4",
            "--trials", "40", "--seed", "3", "--quiet", "--out", "part.jsonl",
        ],
        dir.path(),
    ));
    let resumed = stdout(&ysc(
        &[
            "run", "--d-list", "2", "--eta-list", "inf", "--p-list", "0.3", "--chi-list", "4",
            "--trials", "100", "--seed", "3", "--quiet", "--out", "part.jsonl", "--resume",
        ],
        dir.path(),
    ));
    let want: serde_json::Value = serde_json::from_str(full.lines().next().unwrap()).unwrap();
    let got: serde_json::Value = serde_json::from_str(resumed.lines().next().unwrap()).unwrap();
    assert_eq!(want["failures"], got["failures"]);
    assert_eq!(want["trials"], got["trials"]);
}

#[test]
fn run_accepts_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("sweep.json"),
        serde_json::json!({
            "d_list": [2],
            "eta_list": ["0.5"],
            "p_list": [0.2],
            "chi_list": [4],
            "trials": 50,
            "seed": 9
        })
        .to_string(),
    )
    .unwrap();
    let out = stdout(&ysc(
        &["run", "--config", "sweep.json", "--quiet"],
        dir.path(),
    ));
    let v: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(v["d"], 2);
    assert_eq!(v["trials"], 50);
    // Flags override config values.
    let out = stdout(&ysc(
        &["run", "--config", "sweep.json", "--trials", "60", "--quiet"],
        dir.path(),
    ));
    let v: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(v["trials"], 60);
}

#[test]
fn fit_recovers_synthetic_threshold_from_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    // Records generated from the scaling model around p_c = 0.43.
    let mut lines = String::new();
    for d in [9usize, 13, 17, 21] {
        for i in 0..7 {
            let p = 0.415 + 0.005 * i as f64;
            let x = (p - 0.43) * (d as f64);
            let f = 0.35 + 1.2 * x + 0.4 * x * x;
            let trials = 30000u64;
            let failures = (f * trials as f64).round() as u64;
            let fr = failures as f64 / trials as f64;
            let stderr = (fr * (1.0 - fr) / trials as f64).sqrt();
            lines.push_str(&serde_json::json!({
                "v": 1, "d": d, "eta": "inf", "p": p, "chi": 16, "seed": 1,
                "trials": trials, "failures": failures, "f": fr, "stderr": stderr
            }).to_string());
            lines.push('\n');
        }
    }
    fs::write(dir.path().join("synthetic.jsonl"), lines).unwrap();
    let out = stdout(&ysc(
        &["fit", "--input", "synthetic.jsonl", "--collapse-csv", "collapse.csv"],
        dir.path(),
    ));
    let fit: serde_json::Value = serde_json::from_str(&out).unwrap();
    let p_c = fit["p_c"].as_f64().unwrap();
    assert!((p_c - 0.43).abs() < 2e-3, "p_c = {p_c}");
    assert!(fit["jackknife_stderr"].as_f64().unwrap() >= 0.0);
    let csv = fs::read_to_string(dir.path().join("collapse.csv")).unwrap();
    assert!(csv.starts_with("d,p,x,f,f_fit"));
    assert_eq!(csv.lines().count(), 29);
}

#[test]
fn fit_decay_model_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = String::new();
    for (d, f) in [(9usize, 0.1), (13, 0.01), (17, 0.001)] {
        let trials = 100000u64;
        let failures = (f * trials as f64).round() as u64;
        lines.push_str(&serde_json::json!({
            "v": 1, "d": d, "eta": "100", "p": 0.2, "chi": 16, "seed": 1,
            "trials": trials, "failures": failures, "f": f,
            "stderr": (f * (1.0 - f) / trials as f64).sqrt()
        }).to_string());
        lines.push('\n');
    }
    fs::write(dir.path().join("decay.jsonl"), lines).unwrap();
    let out = stdout(&ysc(
        &["fit", "--input", "decay.jsonl", "--model", "decay", "--p", "0.2"],
        dir.path(),
    ));
    let fit: serde_json::Value = serde_json::from_str(&out).unwrap();
    let alpha = fit["alpha"].as_f64().unwrap();
    assert!((alpha - 10f64.ln() / 4.0).abs() < 1e-6);
    assert!(fit["r_squared"].as_f64().unwrap() > 0.999);
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown flag: clap usage error.
    let out = ysc(&["run", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // Invalid configuration values.
    let out = ysc(
        &["decode-one", "--d", "1", "--p", "0.1", "--eta", "1", "--syndrome", "0"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["code"], 3);
    // Missing input file.
    let out = ysc(&["fit", "--input", "missing.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    // Compute failure: decay fit on a zero failure rate.
    fs::write(
        dir.path().join("zero.jsonl"),
        format!(
            "{}\n{}\n{}\n",
            serde_json::json!({"v":1,"d":5,"eta":"10","p":0.1,"chi":8,"seed":1,"trials":100,"failures":0,"f":0.0,"stderr":0.0}),
            serde_json::json!({"v":1,"d":7,"eta":"10","p":0.1,"chi":8,"seed":1,"trials":100,"failures":3,"f":0.03,"stderr":0.017}),
            serde_json::json!({"v":1,"d":9,"eta":"10","p":0.1,"chi":8,"seed":1,"trials":100,"failures":1,"f":0.01,"stderr":0.0099}),
        ),
    )
    .unwrap();
    let out = ysc(
        &["fit", "--input", "zero.jsonl", "--model", "decay", "--p", "0.1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn version_embeds_schema() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&ysc(&["--version"], dir.path()));
    assert!(text.contains("schema v1"));
}
