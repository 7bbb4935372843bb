use boundary_noise::convolution::Scenario;
use boundary_noise_lab::run::{config_hash, MANIFEST, OUTPUT_ROOT_VAR};
use boundary_noise_lab::{replay, run_in, LabError, RunManifest, ScenarioConfig};
use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"
scenario = "interval-endpoint"
pipelines = ["simulate"]
domain = "interval"
noise = "endpoints"
theta = 2.0
seed = 5
n_paths = 40
times = [0.05, 0.1]
points = [[0.1], [0.5]]
"#;

fn small() -> ScenarioConfig {
    ScenarioConfig::parse(SMALL).unwrap()
}

fn bnlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bnlab"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn config_round_trips_through_toml() {
    let c = small();
    assert_eq!(ScenarioConfig::parse(&c.to_toml()).unwrap(), c);
    assert_eq!(c.p, 2.0);
    assert_eq!(c.kernel, "exact");
}

#[test]
fn example_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ScenarioConfig::load(&path).unwrap().validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 4);
}

#[test]
fn unknown_keys_are_rejected() {
    let err = ScenarioConfig::parse(&format!("{SMALL}\nthetta = 1.0\n")).unwrap_err();
    assert!(err.to_string().contains("thetta"), "{err}");
}

#[test]
fn validation_lists_every_problem() {
    let mut c = small();
    c.pipelines.push("fly".into());
    c.horizon = -1.0;
    c.points.push(vec![1.5]);
    c.kernel = "approximate".into();
    let Err(LabError::Invalid(problems)) = c.validate() else { panic!("expected validation failure") };
    assert_eq!(problems.len(), 4, "{problems:#?}");
    assert_eq!(LabError::Invalid(problems).exit_code(), 1);
}

#[test]
fn named_scenario_must_match_setup() {
    let mut c = small();
    c.scenario = "circle-white".into();
    let err = c.validate().unwrap_err().to_string();
    assert!(err.contains("does not match"), "{err}");
    c.scenario = "custom".into();
    c.validate().unwrap();
    c.scenario = "no-such-thing".into();
    assert!(c.validate().unwrap_err().to_string().contains("unknown scenario"));
}

#[test]
fn noise_needs_its_parameters() {
    let c = ScenarioConfig { noise: "bessel".into(), domain: "HalfSpace(2)".into(), scenario: "custom".into(), ..small() };
    assert!(c.validate().unwrap_err().to_string().contains("kappa"));
}

#[test]
fn config_hash_ignores_output_dir() {
    let a = small();
    let b = ScenarioConfig { output_dir: Some("elsewhere".into()), ..small() };
    assert_eq!(config_hash(&a), config_hash(&b));
    let c = ScenarioConfig { seed: 6, ..small() };
    assert_ne!(config_hash(&a), config_hash(&c));
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_in(&small(), a.path()).unwrap();
    let mb = run_in(&small(), b.path()).unwrap();
    assert_eq!(ma.files, mb.files);
    let read = |d: &Path| std::fs::read(d.join("ensemble.tsv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let stored = RunManifest::load(&a.path().join(MANIFEST)).unwrap();
    assert_eq!(stored.config, small());
    assert_eq!(stored.config_hash, config_hash(&small()));
}

#[test]
fn replay_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    run_in(&small(), dir.path()).unwrap();
    let path = dir.path().join(MANIFEST);
    replay(&path).unwrap();
    let mut m = RunManifest::load(&path).unwrap();
    m.files[0].sha256 = "0".repeat(64);
    std::fs::write(&path, toml::to_string(&m).unwrap()).unwrap();
    let err = replay(&path).unwrap_err();
    assert!(matches!(err, LabError::ReplayMismatch(_)), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn list_prints_the_catalogue() {
    let out = bnlab().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for s in Scenario::ALL {
        assert!(text.contains(s.id()), "{} missing from\n{text}", s.id());
    }
    assert!(text.contains("circle-dirac: rejected"));
}

#[test]
fn run_writes_under_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let root = dir.path().join("out");
    let out = bnlab().arg("run").arg(&cfg).env(OUTPUT_ROOT_VAR, &root).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = root.join(format!("interval-endpoint-{}", &config_hash(&small())[..12]));
    assert!(run_dir.join(MANIFEST).exists());
    assert!(run_dir.join("ensemble.tsv").exists());
    let replayed = bnlab().arg("replay").arg(run_dir.join(MANIFEST)).output().unwrap();
    assert!(replayed.status.success(), "{}", String::from_utf8_lossy(&replayed.stderr));
}

#[test]
fn exit_code_for_invalid_config_is_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("interval\"", "moon\""));
    let out = bnlab().arg("run").arg(&cfg).arg("--output").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain"));
}

#[test]
fn exit_code_for_refusal_is_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}probe_ratio = 3.0\nprobe_base_steps = 4\n"));
    let out = bnlab().arg("run").arg(&cfg).arg("--output").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refusal"));
}

#[test]
fn exit_code_for_missing_file_is_3() {
    let out = bnlab().args(["replay", "/nonexistent/manifest.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_suite_is_a_config_error() {
    let out = bnlab().args(["verify", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fast_suite_passes_from_the_command_line() {
    let out = bnlab().args(["verify", "kernels"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS kernels"));
}
