use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acw::report::{Report, Verdict};
use tempfile::TempDir;

fn acw(args: &[&str]) -> Output {
    acw_env(args, &[])
}

fn acw_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_acw"));
    cmd.args(args).env_remove("ACW_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not a report ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn check<'a>(r: &'a Report, name: &str) -> &'a acw::report::CheckReport {
    r.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no check {name}"))
}

const BROKEN_JACOBI: &str = r#"{
  "algebroid": {
    "coords": [],
    "rank": 3,
    "bracket": [
      {"index": [3, 1, 2], "value": "1"},
      {"index": [1, 1, 3], "value": "1"}
    ]
  }
}"#;

const NONPLAIN_TOML: &str = r#"
seed = 5
checks = ["adjust", "gauge", "closure"]

[expect]
"adjust.plain" = false
"adjust.covariant" = false
"adjust.strict" = false
"gauge.covariance" = false

[algebroid]
coords = ["m1", "m2"]
rank = 2
anchor = [["1", "0"], ["0", "1"]]

[[adjustment.omega]]
index = [1, 2, 1]
value = "m2"

[fields]
patch_dim = 2
"#;

/// Two-patch charge-one monopole written out by hand.
fn monopole_config(south_potential: &str) -> String {
    format!(
        r#"{{
  "cover": {{
    "group": "so2",
    "patches": [
      {{"name": "N", "coords": ["theta", "phi"],
        "domain": {{"lo": [0.05, 0], "hi": ["2*pi/3", "2*pi"]}},
        "integration": {{"lo": [0, 0], "hi": ["pi/2", "2*pi"]}},
        "a": [["0", "-(1 - cos(theta))/2"]]}},
      {{"name": "S", "coords": ["theta", "phi"],
        "domain": {{"lo": ["pi/3", 0], "hi": ["pi - 0.05", "2*pi"]}},
        "integration": {{"lo": ["pi/2", 0], "hi": ["pi", "2*pi"]}},
        "a": [["0", "{south_potential}"]]}}
    ],
    "overlaps": [
      {{"from": "N", "to": "S", "region": {{"lo": ["pi/3", 0], "hi": ["2*pi/3", "2*pi"]}},
        "transition": [["cos(phi)", "-sin(phi)"], ["sin(phi)", "cos(phi)"]]}},
      {{"from": "S", "to": "N", "region": {{"lo": ["pi/3", 0], "hi": ["2*pi/3", "2*pi"]}},
        "transition": [["cos(phi)", "sin(phi)"], ["-sin(phi)", "cos(phi)"]]}}
    ]
  }},
  "tolerances": {{"cocycle_samples": 200}}
}}"#
    )
}

#[test]
fn so3_fixture_passes_every_check() {
    let out = acw(&["check", "--fixture", "so3", "--all"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r.checks[0].name, "nilpotency");
    assert!(r.checks.len() > 5);
    for c in &r.checks {
        assert_eq!(c.verdict, Verdict::Pass, "{}", c.name);
        assert_eq!(c.expected, Some(true), "{}", c.name);
    }
}

#[test]
fn broken_jacobi_config_fails_and_names_the_jacobiator() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "broken.json", BROKEN_JACOBI);
    let out = acw(&["check", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let nil = check(&r, "nilpotency");
    assert_eq!(nil.verdict, Verdict::Fail);
    assert!(nil.residuals.iter().any(|s| s.detail.as_deref().is_some_and(|d| d.contains("Jacobiator"))));
    assert!(r.checks[1..].iter().all(|c| c.verdict == Verdict::Skipped));
}

#[test]
fn broken_jacobi_fixture_matches_its_catalog_expectation() {
    let out = acw(&["validate", "--fixture", "broken_jacobi"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out).checks[0].expected, Some(false));
}

#[test]
fn chern_of_the_charge_two_monopole() {
    let out = acw(&["chern", "--fixture", "monopole_S2", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = check(&report(&out), "chern").value.unwrap();
    assert!((v - 2.0).abs() < 1e-6, "{v}");
    let out = acw(&["chern", "--fixture", "monopole_S2", "--n", "-1"]);
    let v = check(&report(&out), "chern").value.unwrap();
    assert!((v + 1.0).abs() < 1e-6, "{v}");
}

#[test]
fn tampered_transition_is_reported_as_expected() {
    let out = acw(&["cocycle", "--fixture", "monopole_S2", "--param", "tamper=transition"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let c = check(&r, "cocycle.verify");
    assert_eq!(c.verdict, Verdict::Fail);
    let worst = c.residuals.iter().max_by(|a, b| a.max_abs.partial_cmp(&b.max_abs).unwrap()).unwrap();
    assert!(worst.max_abs.unwrap() > 1e-3);
    assert_eq!(worst.witness.len(), 2);
}

#[test]
fn toml_config_with_expected_failures() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "nonplain.toml", NONPLAIN_TOML);
    let out = acw(&["check", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(&out);
    assert_eq!(r.seed, 5);
    let plain = check(&r, "adjust.plain");
    assert_eq!(plain.verdict, Verdict::Fail);
    assert!(plain.residuals[0].detail.as_deref().unwrap().contains("[1, 1, 2, 2]"));
    assert_eq!(check(&r, "closure.identity").verdict, Verdict::Pass);
    assert_eq!(check(&r, "closure.plain").verdict, Verdict::Skipped);
    assert_eq!(check(&r, "gauge.delta_e").verdict, Verdict::Pass);
    assert!(r.checks.iter().all(|c| c.name != "spot_check"));
}

#[test]
fn unexpected_failure_in_a_config_exits_one() {
    let dir = TempDir::new().unwrap();
    let text = NONPLAIN_TOML.replace("\"adjust.plain\" = false\n", "");
    let cfg = write(&dir, "nonplain.toml", &text);
    let out = acw(&["adjust", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert!(!check(&r, "adjust.plain").as_expected());
}

#[test]
fn hand_written_monopole_cover() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "monopole.json", &monopole_config("(1 + cos(theta))/2"));
    let out = acw(&["chern", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = check(&report(&out), "chern").value.unwrap();
    assert!((v - 1.0).abs() < 1e-6, "{v}");

    let cfg = write(&dir, "bad_glue.json", &monopole_config("(1 + cos(theta))/2 + 1/10"));
    let out = acw(&["chern", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(check(&r, "cocycle.verify").verdict, Verdict::Pass);
    assert_eq!(check(&r, "cocycle.glue").verdict, Verdict::Fail);
    assert_eq!(check(&r, "chern").verdict, Verdict::Skipped);
}

#[test]
fn report_round_trips_through_json_and_files() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("report.json");
    let out = acw(&["check", "--fixture", "nonplain_tm_R2", "--all", "--output", path(&file)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&file).unwrap();
    let r: Report = serde_json::from_str(&text).unwrap();
    let again: Report = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(r, again);
    assert_eq!(r.to_json(), again.to_json());
}

#[test]
fn seed_precedence_is_flag_then_environment_then_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "nonplain.toml", NONPLAIN_TOML);
    let args = ["validate", "--config", path(&cfg)];
    assert_eq!(report(&acw(&args)).seed, 5);
    assert_eq!(report(&acw_env(&args, &[("ACW_SEED", "11")])).seed, 11);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--seed", "12"]);
    assert_eq!(report(&acw_env(&with_flag, &[("ACW_SEED", "11")])).seed, 12);
    assert_eq!(report(&acw(&["validate", "--fixture", "so3"])).seed, 1);
}

#[test]
fn fixed_seed_reports_are_stable() {
    let strip = |mut r: Report| {
        for c in &mut r.checks {
            c.elapsed_ms = 0.0;
        }
        r
    };
    let run = |seed: &str| strip(report(&acw(&["spot-check", "--fixture", "lab_su2_R3", "--seed", seed])));
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn markdown_rendering() {
    let out = acw(&["adjust", "--fixture", "nonstrict_tm_R3", "--format", "markdown"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# acw"));
    assert!(text.contains("| adjust.strict | fail | fail |"));
    assert!(text.contains("| adjust.covariant | pass | pass |"));
}

#[test]
fn list_fixtures_names_every_fixture() {
    let out = acw(&["list-fixtures"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in acw_core::catalog::fixture_names() {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn configuration_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("unknown_field.json", r#"{"algebroid": {"coords": [], "rank": 1}, "sed": 3}"#),
        ("no_input.json", r#"{"seed": 3}"#),
        ("bad_expr.json", r#"{"algebroid": {"coords": ["x"], "rank": 1, "anchor": [["x +"]]}}"#),
        ("undeclared.json", r#"{"algebroid": {"coords": ["x"], "rank": 1, "anchor": [["y"]]}}"#),
        ("bad_index.json", r#"{"algebroid": {"coords": [], "rank": 1, "bracket": [{"index": [1, 1, 2], "value": "1"}]}}"#),
        ("tolerance.json", r#"{"algebroid": {"coords": [], "rank": 1}, "tolerances": {"numeric": -1}}"#),
        ("unknown_check.json", r#"{"algebroid": {"coords": [], "rank": 1}, "checks": ["bogus"]}"#),
        ("wrong_kind.json", r#"{"algebroid": {"coords": [], "rank": 1}, "checks": ["chern"]}"#),
        ("unknown_patch.json", r#"{"cover": {"group": "so2", "patches": [], "overlaps": [{"from": "A", "to": "B", "region": {"lo": [], "hi": []}}]}}"#),
        ("two_inputs.json", r#"{"algebroid": {"coords": [], "rank": 1}, "fixture": {"name": "so3"}}"#),
        ("bad.toml", "seed = [\n"),
        ("not_json.json", "{"),
    ];
    for (name, text) in cases {
        let cfg = write(&dir, name, text);
        let out = acw(&["check", "--config", path(&cfg)]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        assert!(out.stdout.is_empty(), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{name}");
    }
    let missing = dir.path().join("missing.json");
    assert_eq!(acw(&["check", "--config", path(&missing)]).status.code(), Some(2));
    assert_eq!(acw(&["check", "--fixture", "nope"]).status.code(), Some(2));
    assert_eq!(acw(&["check", "--fixture", "abelian", "--param", "r=0"]).status.code(), Some(2));
    assert_eq!(acw(&["adjust", "--fixture", "monopole_S2"]).status.code(), Some(2));
    assert_eq!(acw(&["check"]).status.code(), Some(2));
}
