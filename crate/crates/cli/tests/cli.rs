use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn tickwork(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tickwork")).args(args).env_remove("TICKWORK_SEED").output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(2));
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn poisson_fano_inverse_is_one() {
    let v = stdout_json(&tickwork(&["fcs", "--spec", &fixture("poisson.json")]));
    assert!((v["r1"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((v["nu"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["sigma"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn erlang_fixture_has_every_flag() {
    let v = stdout_json(&tickwork(&["validate", "--spec", &fixture("erlang3.json")]));
    let flags = v["flags"].as_object().unwrap();
    assert_eq!(flags.len(), 4);
    assert!(flags.values().all(|f| f == &Value::Bool(true)));
    assert_eq!(v["elementary"], Value::Bool(true));
}

#[test]
fn general_fixture_validates_with_blocks() {
    let v = stdout_json(&tickwork(&["validate", "--spec", &fixture("two_block_general.json")]));
    assert_eq!(v["kind"], "general");
    assert_eq!(v["blocks"], serde_json::json!([2, 1]));
}

#[test]
fn malformed_spec_is_a_parse_error() {
    let out = tickwork(&["fcs", "--spec", &fixture("malformed.json")]);
    assert!(out.stdout.is_empty());
    assert_eq!(stderr_json(&out)["error_kind"], "parse");
}

#[test]
fn missing_file_and_bad_flags_exit_two() {
    assert_eq!(stderr_json(&tickwork(&["fcs", "--spec", "no/such/file.json"]))["error_kind"], "io");
    assert_eq!(stderr_json(&tickwork(&["fcs"]))["error_kind"], "usage");
    let out = tickwork(&["ki", "--channel", &fixture("dephasing3.json"), "--out", "csv"]);
    assert_eq!(stderr_json(&out)["error_kind"], "usage");
    let out = tickwork(&["evolve", "--spec", &fixture("poisson.json"), "--times", "0:1"]);
    assert_eq!(stderr_json(&out)["error_kind"], "usage");
}

#[test]
fn block_specs_are_refused_by_elementary_commands() {
    let out = tickwork(&["fcs", "--spec", &fixture("two_block_general.json")]);
    assert_eq!(stderr_json(&out)["error_kind"], "precondition");
}

#[test]
fn evolve_csv_round_trips_the_poisson_law() {
    let out = tickwork(&["evolve", "--spec", &fixture("poisson.json"), "--times", "0:2:1", "--n-max", "40"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.first(), Some(&"t"));
    assert_eq!(&header[header.len() - 2..], &["mean", "var"]);
    assert_eq!(header.len(), 41 + 3);
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 2.0);
    let mut p = (-2.0f64).exp();
    for n in 0..=40 {
        assert!((last[1 + n] - p).abs() < 1e-8, "n = {n}");
        p *= 2.0 / (n + 1) as f64;
    }
    assert!((last[42] - 2.0).abs() < 1e-8 && (last[43] - 2.0).abs() < 1e-7);
}

#[test]
fn sampling_depends_only_on_the_seed() {
    let spec = fixture("coherent.json");
    let base = ["sample", "--spec", spec.as_str(), "--horizon", "20", "--n-traj", "50"];
    let run = |extra: &[&str]| {
        let out = tickwork(&[&base[..], extra].concat());
        assert!(out.status.success());
        out.stdout
    };
    let one = run(&["--seed", "9", "--threads", "1"]);
    assert_eq!(one, run(&["--seed", "9", "--threads", "4"]));
    assert_ne!(one, run(&["--seed", "10", "--threads", "1"]));
    let from_env = Command::new(env!("CARGO_BIN_EXE_tickwork")).args(base).env("TICKWORK_SEED", "9").output().unwrap();
    assert_eq!(one, from_env.stdout);
    let lines: Vec<Value> = String::from_utf8(one).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 50);
    assert!(lines.iter().all(|l| l["tick_times"].is_array() && l["clock_id"].is_u64()));
}

#[test]
fn pair_sequences_are_labelled() {
    let out = tickwork(&[
        "pair",
        "--spec-a",
        &fixture("poisson.json"),
        "--spec-b",
        &fixture("erlang3.json"),
        "--horizon",
        "10",
        "--n-seq",
        "5",
    ]);
    assert!(out.status.success());
    for line in String::from_utf8(out.stdout).unwrap().lines() {
        let seq: Vec<(String, f64)> = serde_json::from_str(line).unwrap();
        assert!(seq.iter().all(|(l, _)| l == "A" || l == "B"));
        assert!(seq.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}

#[test]
fn output_flag_writes_the_file() {
    let dir = std::env::temp_dir().join(format!("tickwork-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("swp.json");
    let out = tickwork(&["swp", "--dim", "4", "--alphas", "0.5", "-o", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((v["alphas"][0]["arrivals"][0]["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn ki_reports_fixture_blocks() {
    let v = stdout_json(&tickwork(&["ki", "--channel", &fixture("two_block_measurement.json")]));
    assert_eq!(v["blocks"], serde_json::json!([{ "c_dim": 2, "f_dim": 1 }, { "c_dim": 3, "f_dim": 1 }]));
    assert!(v["residuals"]["kraus_form"].as_f64().unwrap() < 1e-10);
}

#[test]
fn zeno_plot_data_is_long_format() {
    let out = tickwork(&["zeno", "--omega", "1", "--time", "3", "--m", "1,2,4", "--plot-data"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("series,x,y"));
    assert_eq!(lines.count(), 6);
}

const SUBCOMMANDS: [&str; 12] = [
    "validate",
    "evolve",
    "fcs",
    "waiting-time",
    "allan",
    "sample",
    "pair",
    "relative-counts",
    "discrete",
    "ki",
    "zeno",
    "swp",
];

/// Compares `--help` output with `tests/golden/<name>.txt`; set
/// `TICKWORK_BLESS=1` to rewrite the files.
#[test]
fn help_matches_golden_files() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bless = std::env::var_os("TICKWORK_BLESS").is_some();
    let mut cases: Vec<(String, Vec<&str>)> = vec![("tickwork".into(), vec!["--help"])];
    cases.extend(SUBCOMMANDS.iter().map(|s| (s.to_string(), vec![*s, "--help"])));
    for (name, args) in cases {
        let out = tickwork(&args);
        assert!(out.status.success(), "{name}");
        let text = String::from_utf8(out.stdout).unwrap();
        let path = dir.join(format!("{name}.txt"));
        if bless {
            std::fs::write(&path, &text).unwrap();
        } else {
            let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
            assert_eq!(text, want, "{name} --help changed");
        }
    }
}

#[test]
fn every_subcommand_help_lists_the_global_flags() {
    for s in SUBCOMMANDS {
        let text = String::from_utf8(tickwork(&[s, "--help"]).stdout).unwrap();
        for flag in ["--seed", "--threads", "--output"] {
            assert!(text.contains(flag), "{s} lacks {flag}");
        }
    }
}
