//! Scenario configuration files (TOML).

use boundary_noise::convolution::{classify_setup, ConvolutionSetup, KernelMode, Scenario};
use boundary_noise::dirichlet::{BoundaryBasis, BoundaryData};
use boundary_noise::geometry::{Domain, QuadratureGrid, WeightedSpaceParams};
use boundary_noise::noise::{BoundaryNoiseSpec, SpectralMeasure};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::LabError;

pub const PIPELINES: [&str; 6] = ["j-diagnose", "simulate", "invariant", "verify-kernels", "schur", "estimate-checks"];
pub const NOISES: [&str; 6] = ["endpoints", "circle-white", "white", "bessel", "finite-spectral", "circle-basis"];

/// One run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Catalogue id, or "custom" for setups outside the catalogue.
    pub scenario: String,
    pub pipelines: Vec<String>,
    pub domain: String,
    pub noise: String,
    #[serde(default = "default_kernel")]
    pub kernel: String,
    #[serde(default = "default_majorant_c")]
    pub majorant_c: f64,
    #[serde(default = "one")]
    pub majorant_constant: f64,
    #[serde(default = "two")]
    pub p: f64,
    pub theta: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    /// Bessel exponent.
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Fourier cutoff for circle white noise.
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default = "default_spectral_modes")]
    pub spectral_modes: usize,
    #[serde(default = "default_spectral_cutoff")]
    pub spectral_cutoff: f64,
    /// Finite spectral measure: each row is the frequency followed by its mass.
    #[serde(default)]
    pub atoms: Vec<Vec<f64>>,
    /// Circle Fourier coefficients `[a₀, a₁, b₁, a₂, b₂, …]`.
    #[serde(default)]
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default = "default_probe_ratio")]
    pub probe_ratio: f64,
    #[serde(default = "default_probe_base_steps")]
    pub probe_base_steps: usize,
    #[serde(default = "default_refusal_tolerance")]
    pub refusal_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_kernel() -> String {
    "exact".into()
}
fn default_majorant_c() -> f64 {
    2.0
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn default_spectral_modes() -> usize {
    64
}
fn default_spectral_cutoff() -> f64 {
    20.0
}
fn default_paths() -> usize {
    1000
}
fn default_probe_ratio() -> f64 {
    1.05
}
fn default_probe_base_steps() -> usize {
    64
}
fn default_refusal_tolerance() -> f64 {
    5e-3
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Invalid(vec![e.message().to_string()]))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Text the config hash is taken over: the canonical TOML without `output_dir`.
    pub fn canonical(&self) -> String {
        ScenarioConfig { output_dir: None, ..self.clone() }.to_toml()
    }

    /// Every problem found, not just the first.
    pub fn validate(&self) -> Result<ConvolutionSetup, LabError> {
        let mut problems = Vec::new();
        for p in &self.pipelines {
            if !PIPELINES.contains(&p.as_str()) {
                problems.push(format!("unknown pipeline `{p}` (known: {})", PIPELINES.join(", ")));
            }
        }
        if self.pipelines.is_empty() {
            problems.push("no pipelines requested".into());
        }
        let domain = match self.domain.parse::<Domain>() {
            Ok(d) => Some(d),
            Err(e) => {
                problems.push(format!("domain: {e}"));
                None
            }
        };
        let params = match WeightedSpaceParams::new(self.p, self.theta, self.delta) {
            Ok(p) => Some(p),
            Err(e) => {
                problems.push(format!("weights: {e}"));
                None
            }
        };
        let noise = domain.as_ref().and_then(|d| match self.noise_spec(d) {
            Ok(n) => Some(n),
            Err(e) => {
                problems.push(e);
                None
            }
        });
        if !(self.horizon > 0.0) {
            problems.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            problems.push(format!("alpha must be finite and nonnegative, got {}", self.alpha));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            problems.push(format!("lambda must be finite and nonnegative, got {}", self.lambda));
        }
        let mode = match self.kernel.as_str() {
            "exact" => Some(KernelMode::Exact),
            "majorant" if self.majorant_c > 0.0 && self.majorant_constant > 0.0 => {
                Some(KernelMode::Majorant { constant: self.majorant_constant, c: self.majorant_c })
            }
            "majorant" => {
                problems.push("majorant_c and majorant_constant must be positive".into());
                None
            }
            k => {
                problems.push(format!("kernel must be `exact` or `majorant`, got `{k}`"));
                None
            }
        };
        let simulates = self.pipelines.iter().any(|p| p == "simulate" || p == "invariant");
        if simulates {
            if self.times.is_empty() || self.times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                problems.push("simulation needs a nonempty list of positive finite times".into());
            }
            if self.points.is_empty() {
                problems.push("simulation needs at least one point".into());
            }
            if let Some(d) = &domain {
                for x in &self.points {
                    if x.len() != d.dimension() {
                        problems.push(format!("point {x:?} has dimension {}, domain has {}", x.len(), d.dimension()));
                    } else if let Err(e) = d.distance_to_boundary(x) {
                        problems.push(format!("point {x:?}: {e}"));
                    }
                }
            }
            if self.n_paths == 0 {
                problems.push("n_paths must be positive".into());
            }
            if !(self.probe_ratio > 1.0) || self.probe_base_steps == 0 || !(self.refusal_tolerance > 0.0) {
                problems.push("probe_ratio > 1, probe_base_steps > 0 and refusal_tolerance > 0 are required".into());
            }
        }
        let setup = match (domain, noise, params, mode) {
            (Some(domain), Some(noise), Some(params), Some(mode)) => {
                let s = ConvolutionSetup { domain, mode, noise, params, horizon: self.horizon, alpha: self.alpha, lambda: self.lambda };
                // scalar fields were checked above; this catches domain and kernel mismatches
                let scalars_ok = ConvolutionSetup { horizon: 1.0, alpha: 0.0, lambda: 1.0, ..s.clone() };
                if let Err(e) = scalars_ok.validate() {
                    problems.push(format!("setup: {e}"));
                }
                self.check_scenario(&s, &mut problems);
                Some(s)
            }
            _ => None,
        };
        match setup {
            Some(s) if problems.is_empty() => Ok(s),
            _ => Err(LabError::Invalid(problems)),
        }
    }

    /// A named scenario must describe the setup exactly; nothing is substituted.
    fn check_scenario(&self, setup: &ConvolutionSetup, problems: &mut Vec<String>) {
        if self.scenario == "custom" {
            return;
        }
        let Some(named) = Scenario::from_id(&self.scenario) else {
            let ids: Vec<&str> = Scenario::ALL.iter().map(|s| s.id()).collect();
            problems.push(format!("unknown scenario `{}` (known: custom, {})", self.scenario, ids.join(", ")));
            return;
        };
        match classify_setup(setup) {
            Some(s) if s == named => {}
            Some(s) => problems.push(format!("scenario `{named}` does not match the setup, which is `{s}`")),
            None => problems.push(format!("scenario `{named}` does not match the setup, which is uncatalogued; use `custom`")),
        }
    }

    fn noise_spec(&self, domain: &Domain) -> Result<BoundaryNoiseSpec, String> {
        let m = domain.dimension().saturating_sub(1).max(1);
        let homogeneous = |measure: boundary_noise::Result<SpectralMeasure>| {
            let measure = measure.map_err(|e| format!("noise: {e}"))?;
            Ok(BoundaryNoiseSpec::SpatiallyHomogeneous { measure, modes: self.spectral_modes, cutoff: self.spectral_cutoff })
        };
        match self.noise.as_str() {
            "endpoints" => Ok(BoundaryNoiseSpec::EndpointAtoms),
            "circle-white" => match self.k_max {
                Some(k_max) => Ok(BoundaryNoiseSpec::CircleWhiteNoise { k_max }),
                None => Err("circle-white noise needs k_max".into()),
            },
            "white" => homogeneous(SpectralMeasure::lebesgue(m)),
            "bessel" => match self.kappa {
                Some(k) => homogeneous(SpectralMeasure::bessel(k, m)),
                None => Err("bessel noise needs kappa".into()),
            },
            "finite-spectral" => {
                if self.atoms.is_empty() || self.atoms.iter().any(|a| a.len() != m + 1) {
                    return Err(format!("finite-spectral noise needs atoms, each with {m} frequency coordinates and a mass"));
                }
                let atoms = self.atoms.iter().map(|a| (a[..m].to_vec(), a[m])).collect();
                homogeneous(SpectralMeasure::finite(atoms, m))
            }
            "circle-basis" => {
                if self.coefficients.is_empty() {
                    return Err("circle-basis noise needs coefficients".into());
                }
                let mode = BoundaryData::BasisCoeffs { basis: BoundaryBasis::CircleFourier, coeffs: self.coefficients.clone(), level: 6 };
                Ok(BoundaryNoiseSpec::FiniteSeries { modes: vec![mode] })
            }
            n => Err(format!("unknown noise `{n}` (known: {})", NOISES.join(", "))),
        }
    }

    pub fn point_grid(&self) -> QuadratureGrid {
        let dim = self.points.first().map_or(1, Vec::len);
        QuadratureGrid::new(dim, self.points.concat(), vec![1.0; self.points.len()], 0, 0.0)
    }
}
