//! Catalogue of boundary-noise scenarios with a known admissible θ-range.

use super::ConvolutionSetup;
use crate::dirichlet::BoundaryData;
use crate::geometry::Domain;
use crate::noise::{BoundaryNoiseSpec, SpectralKind};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    IntervalEndpoint,
    HalfLineEndpoint,
    BallSummable,
    CircleWhite,
    GenericSummable,
    GenericPlanarWhite,
    HalfSpaceFiniteSpectral,
    HalfSpaceWhite,
    HalfSpaceBesselSmooth,
    HalfSpaceBesselRough,
    CircleDirac,
}

impl Scenario {
    pub const ALL: [Scenario; 11] = [
        Scenario::IntervalEndpoint,
        Scenario::HalfLineEndpoint,
        Scenario::BallSummable,
        Scenario::CircleWhite,
        Scenario::GenericSummable,
        Scenario::GenericPlanarWhite,
        Scenario::HalfSpaceFiniteSpectral,
        Scenario::HalfSpaceWhite,
        Scenario::HalfSpaceBesselSmooth,
        Scenario::HalfSpaceBesselRough,
        Scenario::CircleDirac,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Scenario::IntervalEndpoint => "interval-endpoint",
            Scenario::HalfLineEndpoint => "half-line-endpoint",
            Scenario::BallSummable => "ball-summable",
            Scenario::CircleWhite => "circle-white",
            Scenario::GenericSummable => "generic-summable",
            Scenario::GenericPlanarWhite => "generic-planar-white",
            Scenario::HalfSpaceFiniteSpectral => "half-space-finite-spectral",
            Scenario::HalfSpaceWhite => "half-space-white",
            Scenario::HalfSpaceBesselSmooth => "half-space-bessel-smooth",
            Scenario::HalfSpaceBesselRough => "half-space-bessel-rough",
            Scenario::CircleDirac => "circle-dirac",
        }
    }

    pub fn from_id(id: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|s| s.id() == id)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictedVerdict {
    Finite,
    Divergent,
    NoPrediction(String),
    Rejected(String),
}

/// Admissible open θ-interval (shifted by p·α for α > 0) and the strict lower
/// bound on δ, with the verdict for the requested θ.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scenario: Option<Scenario>,
    pub theta_range: Option<(f64, f64)>,
    pub delta_min: Option<f64>,
    pub verdict: PredictedVerdict,
}

impl Prediction {
    fn none(reason: impl Into<String>) -> Self {
        Prediction { scenario: None, theta_range: None, delta_min: None, verdict: PredictedVerdict::NoPrediction(reason.into()) }
    }
}

/// One line of the scenario catalogue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub scenario: Scenario,
    pub description: &'static str,
    pub theta_range: &'static str,
    pub delta: &'static str,
    pub treatable: bool,
}

impl fmt::Display for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.treatable {
            write!(f, "{}: {}, θ∈{}", self.scenario, self.description, self.theta_range)?;
            if !self.delta.is_empty() {
                write!(f, ", {}", self.delta)?;
            }
            Ok(())
        } else {
            write!(f, "{}: rejected, {}", self.scenario, self.description)
        }
    }
}

pub fn catalog() -> Vec<CatalogEntry> {
    let e = |scenario, description, theta_range, delta| CatalogEntry { scenario, description, theta_range, delta, treatable: true };
    vec![
        e(Scenario::IntervalEndpoint, "independent white noises at both ends of (0,1)", "(p−1, 2p−1)", ""),
        e(Scenario::HalfLineEndpoint, "white noise at the end of (0,∞)", "(p−1, 2p−1)", "δ>1/2"),
        e(Scenario::BallSummable, "unit ball, Σ_k sup e_k² < ∞", "(p−1, 2p−1)", ""),
        e(Scenario::CircleWhite, "white noise on S¹", "(3p/2−1, 2p−1)", ""),
        e(Scenario::GenericSummable, "smooth bounded domain, Σ_k sup e_k² < ∞", "(p−1, 2p−1)", ""),
        e(Scenario::GenericPlanarWhite, "smooth bounded planar domain, white noise on the boundary", "(3p/2−1, 2p−1)", ""),
        e(Scenario::HalfSpaceFiniteSpectral, "half-space, homogeneous noise with finite spectral measure", "(p−1, 2p−1)", "δ>(m+1)/2"),
        e(Scenario::HalfSpaceWhite, "half-plane (m=1), space-time white noise on the boundary line", "(3p/2−1, 2p−1)", "δ>1"),
        e(Scenario::HalfSpaceBesselSmooth, "half-space, Bessel spectral density with κ ≥ m", "(p−1, 2p−1)", ""),
        e(Scenario::HalfSpaceBesselRough, "half-space, Bessel spectral density with m−2 < κ < m", "(p+p(m−κ)/2−1, 2p−1)", ""),
        CatalogEntry {
            scenario: Scenario::CircleDirac,
            description: "Dirac boundary noise not treatable",
            theta_range: "",
            delta: "",
            treatable: false,
        },
    ]
}

fn has_point_mass(modes: &[BoundaryData]) -> bool {
    modes.iter().any(|m| matches!(m, BoundaryData::Atoms { .. }))
}

/// The catalogued scenario a setup falls under, if any.
pub fn classify_setup(setup: &ConvolutionSetup) -> Option<Scenario> {
    use BoundaryNoiseSpec as N;
    match (&setup.domain, &setup.noise) {
        (Domain::Interval01, N::EndpointAtoms | N::FiniteSeries { .. }) => Some(Scenario::IntervalEndpoint),
        (Domain::HalfLine, N::EndpointAtoms | N::FiniteSeries { .. }) => Some(Scenario::HalfLineEndpoint),
        (Domain::UnitBall(_), N::FiniteSeries { modes }) if has_point_mass(modes) => Some(Scenario::CircleDirac),
        (Domain::UnitBall(_), N::FiniteSeries { .. }) => Some(Scenario::BallSummable),
        (Domain::UnitBall(2), N::CircleWhiteNoise { .. }) => Some(Scenario::CircleWhite),
        (Domain::GenericSigned(_), N::FiniteSeries { .. }) => Some(Scenario::GenericSummable),
        (Domain::HalfSpace(d), N::SpatiallyHomogeneous { measure, .. }) if *d == measure.dim + 1 => match &measure.kind {
            SpectralKind::Finite { .. } => Some(Scenario::HalfSpaceFiniteSpectral),
            SpectralKind::Lebesgue if measure.dim == 1 => Some(Scenario::HalfSpaceWhite),
            SpectralKind::Lebesgue => None,
            SpectralKind::Bessel { kappa } => {
                let m = measure.dim as f64;
                if *kappa >= m {
                    Some(Scenario::HalfSpaceBesselSmooth)
                } else if *kappa > m - 2.0 {
                    Some(Scenario::HalfSpaceBesselRough)
                } else {
                    None
                }
            }
        },
        _ => None,
    }
}

/// The admissible θ-interval for the setup's scenario and the verdict for its θ.
pub fn predict_wellposedness(setup: &ConvolutionSetup) -> Prediction {
    let Some(scenario) = classify_setup(setup) else {
        return Prediction::none(format!("no catalogued scenario for {:?} noise on {}", noise_kind(&setup.noise), setup.domain));
    };
    let p = setup.params.p;
    let upper = 2.0 * p - 1.0;
    let (lower, delta_min) = match scenario {
        Scenario::CircleDirac => {
            return Prediction {
                scenario: Some(scenario),
                theta_range: None,
                delta_min: None,
                verdict: PredictedVerdict::Rejected("Dirac boundary noise is not square integrable on the boundary".into()),
            }
        }
        Scenario::IntervalEndpoint | Scenario::BallSummable | Scenario::GenericSummable | Scenario::HalfSpaceBesselSmooth => {
            (p - 1.0, None)
        }
        Scenario::HalfLineEndpoint => (p - 1.0, Some(0.5)),
        Scenario::CircleWhite | Scenario::GenericPlanarWhite => (1.5 * p - 1.0, None),
        Scenario::HalfSpaceWhite => (1.5 * p - 1.0, Some(1.0)),
        Scenario::HalfSpaceFiniteSpectral => {
            let m = setup.domain.dimension() as f64 - 1.0;
            (p - 1.0, Some((m + 1.0) / 2.0))
        }
        Scenario::HalfSpaceBesselRough => {
            let (m, kappa) = match &setup.noise {
                BoundaryNoiseSpec::SpatiallyHomogeneous { measure, .. } => match measure.kind {
                    SpectralKind::Bessel { kappa } => (measure.dim as f64, kappa),
                    _ => unreachable!("classified as Bessel"),
                },
                _ => unreachable!("classified as spatially homogeneous"),
            };
            (p + 0.5 * p * (m - kappa) - 1.0, None)
        }
    };
    let lower = lower + p * setup.alpha;
    let theta = setup.params.theta;
    let verdict = match delta_min {
        Some(d) if !(setup.params.delta > d) => {
            PredictedVerdict::NoPrediction(format!("the admissible range needs δ > {d}, got {}", setup.params.delta))
        }
        _ if theta > lower && theta < upper => PredictedVerdict::Finite,
        _ => PredictedVerdict::Divergent,
    };
    Prediction { scenario: Some(scenario), theta_range: Some((lower, upper)), delta_min, verdict }
}

fn noise_kind(n: &BoundaryNoiseSpec) -> &'static str {
    match n {
        BoundaryNoiseSpec::FiniteSeries { .. } => "finite series",
        BoundaryNoiseSpec::EndpointAtoms => "endpoint",
        BoundaryNoiseSpec::CircleWhiteNoise { .. } => "circle white",
        BoundaryNoiseSpec::SpatiallyHomogeneous { .. } => "spatially homogeneous",
    }
}
