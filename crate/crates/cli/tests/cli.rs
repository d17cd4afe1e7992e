use std::path::PathBuf;
use std::process::{Command, Output};

use rankdep_cli::scenario::load_variable;
use rankdep_core::evaluator::ellsberg;
use serde_json::Value;

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", name]
        .iter()
        .collect();
    path.display().to_string()
}

fn rankdep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankdep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--output", "json"]);
    let out = rankdep(&all);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn evaluate_single_state_power_distortion() {
    let v = json(&[
        "evaluate",
        "--scenario",
        &fixture("single_state.json"),
        "--distortion",
        "power:2",
    ]);
    // 100 * 0.3^2
    let value = v["result"]["value_utils"].as_f64().unwrap();
    assert!((value - 9.0).abs() < 1e-12, "{value}");
    assert_eq!(v["result"]["certainty_equivalent"]["kind"], "value");
    assert_eq!(v["preference"]["distortion"], "power:2");
}

#[test]
fn evaluate_reports_minimizer_per_state() {
    let v = json(&["evaluate", "--scenario", &fixture("two_state.json")]);
    let states = v["result"]["states"].as_array().unwrap();
    assert_eq!(states[0]["state"], "good");
    assert_eq!(states[0]["inner_utils"].as_f64(), Some(6.0));
    assert_eq!(states[1]["inner_utils"].as_f64(), Some(1.0));
    assert_eq!(states[1]["minimizer_weight"].as_f64(), Some(1.0));
    assert_eq!(v["result"]["value_utils"].as_f64(), Some(1.0));
}

#[test]
fn ce_inverts_utility() {
    let v = json(&[
        "ce",
        "--scenario",
        &fixture("single_state.json"),
        "--utility",
        "power:0.5",
    ]);
    // U = 0.3 * sqrt(100) = 3, CE = 9
    let ce = v["result"]["certainty_equivalent"]["value"]
        .as_f64()
        .unwrap();
    assert!((ce - 9.0).abs() < 1e-9, "{ce}");
}

#[test]
fn compare_with_itself_is_indifferent() {
    let path = fixture("two_state.json");
    let v = json(&[
        "compare",
        "--scenario",
        &path,
        "--scenario2",
        &path,
        "--utility",
        "exp:0.3",
    ]);
    assert_eq!(v["result"]["comparison"], "indifferent");
}

#[test]
fn compare_orders_by_worst_state() {
    let v = json(&[
        "compare",
        "--scenario",
        &fixture("two_state.json"),
        "--scenario2",
        &fixture("two_state_b.json"),
        "--penalty",
        "maxmin:[good=1]",
    ]);
    // only the good state counts: 6 vs 5
    assert_eq!(v["result"]["comparison"], "preferred");
}

#[test]
fn dominance_state_by_state() {
    let v = json(&[
        "dominance",
        "--scenario",
        &fixture("two_state_b.json"),
        "--scenario2",
        &fixture("two_state_b.json"),
        "--order",
        "fsd",
    ]);
    assert_eq!(v["result"]["dominates_in_every_state"], true);
    let v = json(&[
        "dominance",
        "--scenario",
        &fixture("two_state.json"),
        "--scenario2",
        &fixture("two_state_b.json"),
        "--order",
        "ssd",
        "--state",
        "bad",
    ]);
    assert_eq!(v["result"]["states"].as_array().unwrap().len(), 1);
    assert_eq!(v["result"]["states"][0]["relation"], "dominated");
}

#[test]
fn cmin_recovers_entropic_penalty() {
    let v = json(&[
        "cmin",
        "--states",
        "a,b",
        "--penalty",
        "entropic:1@uniform",
        "--prior",
        "a=0.3,b=0.7",
        "--grid",
        "-5:5:0.05",
    ]);
    let gap = v["result"]["gap"].as_f64().unwrap();
    assert!((0.0..5e-3).contains(&gap), "{gap}");
}

#[test]
fn battery_passes_and_flags_configuration() {
    let v = json(&[
        "battery",
        "--states",
        "a,b",
        "--cases",
        "20",
        "--penalty",
        "entropic:1@uniform",
    ]);
    assert_eq!(v["result"]["violations"].as_u64(), Some(0));
    assert_eq!(
        v["result"]["seed"].as_u64(),
        Some(rankdep_core::evaluator::DEFAULT_SEED)
    );

    let out = rankdep(&["battery", "--cases", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn portfolio_hedge() {
    let v = json(&[
        "portfolio",
        "--scenario",
        &fixture("hedge.csv"),
        "--mean-prior",
        "uniform",
    ]);
    let w: Vec<f64> = v["result"]["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(
        (w[0] - 0.5).abs() < 1e-4 && (w[1] - 0.5).abs() < 1e-4,
        "{w:?}"
    );
    assert!(v["result"].get("trace").is_none());

    let v = json(&[
        "portfolio",
        "--scenario",
        &fixture("risky_vs_free.csv"),
        "--mean-prior",
        "reference",
        "--trace",
    ]);
    assert_eq!(v["result"]["weights"][1].as_f64(), Some(1.0));
    assert!(!v["result"]["trace"].as_array().unwrap().is_empty());
    assert_eq!(v["result"]["mean_prior"][0].as_f64(), Some(1.0));

    let out = rankdep(&["portfolio", "--scenario", &fixture("hedge.csv")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn demo_ellsberg_text() {
    let out = rankdep(&["demo", "ellsberg"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for line in [
        "U(u) = 0\n",
        "U(v) = 20\n",
        "U(u+r) = 100\n",
        "U(v+r) = 20\n",
        "PASS\n",
    ] {
        assert!(text.contains(line), "missing {line:?} in\n{text}");
    }
}

#[test]
fn ellsberg_fixtures_match_construction() {
    for (name, built) in [
        ("ellsberg_u.json", ellsberg::bet_u()),
        ("ellsberg_v.json", ellsberg::bet_v()),
        ("ellsberg_r.json", ellsberg::bet_r()),
    ] {
        assert_eq!(
            load_variable(fixture(name).as_ref()).unwrap(),
            built,
            "{name}"
        );
    }
    let v = json(&["evaluate", "--scenario", &fixture("ellsberg_u.json")]);
    assert_eq!(v["result"]["value_utils"].as_f64(), Some(0.0));
}

#[test]
fn invalid_input_exits_2_with_location() {
    let out = rankdep(&["evaluate", "--scenario", &fixture("bad_probs.json")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("states.storm.probs"), "{err}");
    assert!(err.contains("0.99"), "{err}");

    let out = rankdep(&[
        "evaluate",
        "--scenario",
        &fixture("single_state.json"),
        "--distortion",
        "tk:0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = rankdep(&[
        "evaluate",
        "--scenario",
        &fixture("single_state.json"),
        "--utility",
        "power:0.5@1,2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains('w'), "{err}");
}

#[test]
fn json_reports_are_deterministic() {
    let args = [
        "battery",
        "--states",
        "a,b,c",
        "--cases",
        "30",
        "--utility",
        "exp:0.2",
        "--penalty",
        "gini:1@uniform",
        "--seed",
        "7",
        "--output",
        "json",
    ];
    let first = rankdep(&args).stdout;
    assert_eq!(first, rankdep(&args).stdout);
}

#[test]
fn json_reports_round_trip() {
    for args in [
        vec![
            "evaluate",
            "--scenario",
            &fixture("two_state.json"),
            "--utility",
            "exp:0.2",
        ],
        vec!["demo", "ellsberg"],
        vec!["battery", "--states", "a,b", "--cases", "10"],
    ] {
        let mut all = args.clone();
        all.extend(["--output", "json"]);
        let text = String::from_utf8(rankdep(&all).stdout).unwrap();
        let value: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(
            serde_json::to_string_pretty(&value).unwrap() + "\n",
            text,
            "{args:?}"
        );
    }
}
