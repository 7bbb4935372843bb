//! Executing a configuration and recording what was done.

use boundary_noise::convolution::{
    invariant_diagnostics, j_integral, simulate_convolution, ConvolutionSetup, ProbeGrid,
};
use boundary_noise::estimates::{certify_etr, fit_boundary_mass_constant, rescaled_domain_constants, verify_kernel_upper_bounds};
use boundary_noise::geometry::Domain;
use boundary_noise::kernels::KernelHandle;
use boundary_noise::quad::log_space;
use boundary_noise::semigroup::schur_constants;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::ScenarioConfig;
use crate::error::LabError;

pub const MANIFEST: &str = "manifest.toml";
pub const OUTPUT_ROOT_VAR: &str = "BNLAB_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub wall_clock_seconds: f64,
    pub truncations: Vec<String>,
    pub grid_levels: Vec<String>,
    pub verdicts: BTreeMap<String, String>,
    pub files: Vec<FileRecord>,
    pub config: ScenarioConfig,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| LabError::Io(format!("{}: {}", path.display(), e.message())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    sha256_hex(config.canonical().as_bytes())
}

/// `output_dir` if set, else `$BNLAB_OUTPUT_ROOT/<scenario>-<hash prefix>` (root defaults to `bnlab-out`).
pub fn output_dir(config: &ScenarioConfig) -> PathBuf {
    if let Some(d) = &config.output_dir {
        return d.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("bnlab-out"), PathBuf::from);
    root.join(format!("{}-{}", config.scenario, &config_hash(config)[..12]))
}

/// Write through a temporary file in the same directory, then rename.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), LabError> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(dir.join(name)).map_err(|e| LabError::Io(e.to_string()))?;
    Ok(())
}

struct Outputs {
    files: Vec<(String, String)>,
    truncations: Vec<String>,
    grid_levels: Vec<String>,
    verdicts: BTreeMap<String, String>,
}

fn pipeline(name: &str, config: &ScenarioConfig, setup: &ConvolutionSetup, out: &mut Outputs) -> Result<(), LabError> {
    match name {
        "j-diagnose" => {
            let r = j_integral(setup)?;
            out.truncations.push(format!("j-diagnose: {}", r.truncation));
            out.grid_levels.extend(r.levels.iter().map(|l| format!("j-diagnose: depth {} time order {}", l.depth, l.time_order)));
            out.verdicts.insert("j".into(), r.verdict.to_string());
            out.verdicts.insert("j-levels".into(), r.j_verdict.to_string());
            out.verdicts.insert("predicted".into(), format!("{:?}", r.prediction.verdict));
            if let Some(a) = r.agreement {
                out.verdicts.insert("agreement".into(), a.to_string());
            }
            out.files.push(("j.txt".into(), r.to_record()));
        }
        "simulate" => {
            let grid = ProbeGrid {
                ratio: config.probe_ratio,
                base_steps: config.probe_base_steps,
                tolerance: config.refusal_tolerance,
                ..ProbeGrid::default()
            };
            let ens = simulate_convolution(setup, &config.times, &config.point_grid(), config.n_paths, &grid, config.seed)?;
            out.grid_levels.push(format!(
                "simulate: probe ratio {} base steps {} tolerance {}",
                grid.ratio, grid.base_steps, grid.tolerance
            ));
            let worst = ens.discrete_variance.iter().fold(0.0f64, |a, v| a.max(*v));
            out.verdicts.insert("simulate".into(), format!("{} paths, max discrete variance {worst:.6e}", ens.n_paths));
            out.files.push(("ensemble.tsv".into(), ens.to_columnar()));
        }
        "invariant" => {
            let time = *config.times.last().expect("validated");
            let r = invariant_diagnostics(setup, time, &config.point_grid(), config.n_paths, config.seed)?;
            out.verdicts.insert("invariant-monotone".into(), r.monotone.to_string());
            out.verdicts.insert("invariant-j-infinity".into(), r.j_infinity.verdict.to_string());
            let mut text = format!(
                "# time {time}\n# quadrature_gap {:e}\n# simulated_gap {:e}\n# monotone {}\nx\tvariance\tlimit\tsimulated\tse\n",
                r.quadrature_gap, r.simulated_gap, r.monotone
            );
            for (j, x) in r.points.iter().enumerate() {
                let sim = r.simulated_variance.get(j).copied().unwrap_or(f64::NAN);
                let se = r.simulated_se.get(j).copied().unwrap_or(f64::NAN);
                text.push_str(&format!("{x}\t{:e}\t{:e}\t{:e}\t{:e}\n", r.variance_at_time[j], r.variance_limit[j], sim, se));
            }
            out.files.push(("invariant.tsv".into(), text));
        }
        "verify-kernels" => {
            let r = verify_kernel_upper_bounds(&KernelHandle::exact(setup.domain.clone())?, 4.0, 3)?;
            out.verdicts.insert("kernel-bound".into(), r.value.verdict.to_string());
            out.verdicts.insert("kernel-gradient-bound".into(), r.gradient.verdict.to_string());
            out.files.push(("kernels.txt".into(), format!("{}\n{}", r.value.to_record(), r.gradient.to_record())));
        }
        "schur" => {
            let k = KernelHandle::exact(setup.domain.clone())?;
            let r = schur_constants(&k, setup.params.p, setup.params.theta, 1.0, &log_space(1e-3, 1.0, 5), 3)?;
            let v = if r.all_bounded() { "bounded" } else if r.any_diverging() { "diverging" } else { "inconclusive" };
            out.verdicts.insert("schur".into(), v.into());
            out.files.push(("schur.txt".into(), r.to_record()));
        }
        "estimate-checks" => {
            let mut text = certify_etr(200, 8.0, 8.0).to_record();
            let r = match &setup.domain {
                Domain::UnitBall(_) => fit_boundary_mass_constant(&setup.domain, 1.0, 2)?,
                d => rescaled_domain_constants(d, setup.params.theta, 1.0, 3)?,
            };
            out.verdicts.insert("estimates".into(), r.verdict.to_string());
            text.push('\n');
            text.push_str(&r.to_record());
            out.files.push(("estimates.txt".into(), text));
        }
        other => return Err(LabError::Invalid(vec![format!("unknown pipeline `{other}`")])),
    }
    Ok(())
}

/// Validate, run every pipeline, write data files and the manifest into `dir`.
pub fn run_in(config: &ScenarioConfig, dir: &Path) -> Result<RunManifest, LabError> {
    let setup = config.validate()?;
    let start = Instant::now();
    let mut out = Outputs { files: Vec::new(), truncations: Vec::new(), grid_levels: Vec::new(), verdicts: BTreeMap::new() };
    for p in &config.pipelines {
        pipeline(p, config, &setup, &mut out)?;
    }
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (name, text) in &out.files {
        write_atomic(dir, name, text.as_bytes())?;
        files.push(FileRecord { name: name.clone(), sha256: sha256_hex(text.as_bytes()) });
    }
    let manifest = RunManifest {
        config_hash: config_hash(config),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        truncations: out.truncations,
        grid_levels: out.grid_levels,
        verdicts: out.verdicts,
        files,
        config: config.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| LabError::Io(e.to_string()))?;
    write_atomic(dir, MANIFEST, text.as_bytes())?;
    Ok(manifest)
}

pub fn run(config: &ScenarioConfig) -> Result<(PathBuf, RunManifest), LabError> {
    let dir = output_dir(config);
    let m = run_in(config, &dir)?;
    Ok((dir, m))
}

/// Rerun the recorded configuration in a scratch directory and compare file hashes.
pub fn replay(manifest_path: &Path) -> Result<RunManifest, LabError> {
    let recorded = RunManifest::load(manifest_path)?;
    if config_hash(&recorded.config) != recorded.config_hash {
        return Err(LabError::ReplayMismatch("config hash does not match the recorded config".into()));
    }
    let scratch = tempfile::tempdir()?;
    let fresh = run_in(&recorded.config, scratch.path())?;
    let mut diffs = Vec::new();
    if recorded.files.len() != fresh.files.len() {
        diffs.push(format!("{} files recorded, {} produced", recorded.files.len(), fresh.files.len()));
    }
    for (a, b) in recorded.files.iter().zip(&fresh.files) {
        if a != b {
            diffs.push(format!("{}: {} vs {}", a.name, a.sha256, b.sha256));
        }
    }
    if diffs.is_empty() {
        Ok(fresh)
    } else {
        Err(LabError::ReplayMismatch(diffs.join("; ")))
    }
}
