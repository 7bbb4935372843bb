//! ψ_k(t,x) for the supported noise/domain pairs and the sum of squares Σ_k ψ_k².

use super::{ConvolutionSetup, KernelMode};
use crate::dirichlet::BoundaryData;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::kernels::{half_line_flux, KernelHandle};
use crate::noise::{BoundaryNoiseSpec, NoiseMode, SpectralKind, SpectralMeasure};
use crate::quad;
use std::f64::consts::PI;

/// Boundary rule used to take sup_y e_k(y)² on the circle.
const SUP_LEVEL: u32 = 12;

fn unsupported(domain: &Domain, operation: &'static str) -> Error {
    Error::Unsupported { domain: domain.to_string(), operation }
}

/// One-dimensional modes as `(end, value)` pairs; end 0 is x = 0, end 1 is x = 1.
pub(crate) fn line_modes(domain: &Domain, noise: &BoundaryNoiseSpec) -> Result<Vec<Vec<(usize, f64)>>> {
    noise
        .rkhs_basis(domain)?
        .into_iter()
        .map(|m| match m {
            NoiseMode::Data(d) => Ok(d
                .surface_terms(domain)?
                .into_iter()
                .map(|(b, wv)| (if b[0] == 0.0 { 0 } else { 1 }, wv))
                .collect()),
            NoiseMode::Wave { .. } => Err(unsupported(domain, "plane-wave modes on a line")),
        })
        .collect()
}

/// Σ_k ψ_k(t,x)² written as `spatial(t, a, b)·factor(t)`.
///
/// The point is passed through distances: on a line `a`, `b` are the distances
/// to x = 0 and x = 1; on the half-space `a` is the normal coordinate; on the
/// disk `a` is the distance to the circle.
#[derive(Debug, Clone)]
pub(crate) enum SquareSum {
    Line { kernel: KernelHandle, modes: Vec<Vec<(usize, f64)>> },
    HalfSpace { measure: SpectralMeasure },
    /// Complete orthonormal family on the circle: Σ_k majorant_k² = (C²/t)∫ g_{ct}(x−y)² ds(y).
    DiskClosure { constant: f64, c: f64 },
    /// Σ_k majorant_k² ≤ A·(C²/t)(∫ g_{ct}(x−y) ds(y))² with A = Σ_k sup e_k².
    DiskSup { a: f64, constant: f64, c: f64 },
}

impl SquareSum {
    pub(crate) fn from_setup(setup: &ConvolutionSetup) -> Result<Self> {
        setup.validate()?;
        let dom = &setup.domain;
        match (setup.mode, dom, &setup.noise) {
            (KernelMode::Exact, Domain::Interval01 | Domain::HalfLine, n) => Ok(SquareSum::Line {
                kernel: KernelHandle::exact(dom.clone())?,
                modes: line_modes(dom, n)?,
            }),
            (KernelMode::Exact, Domain::HalfSpace(_), BoundaryNoiseSpec::SpatiallyHomogeneous { measure, .. }) => {
                // checks that the measure lives on the boundary
                if dom.dimension() != measure.dim + 1 {
                    return Err(Error::Config(format!("spectral measure on ℝ^{} does not fit {dom}", measure.dim)));
                }
                Ok(SquareSum::HalfSpace { measure: measure.clone() })
            }
            (KernelMode::Majorant { constant, c }, Domain::UnitBall(2), BoundaryNoiseSpec::CircleWhiteNoise { .. }) => {
                Ok(SquareSum::DiskClosure { constant, c })
            }
            (KernelMode::Majorant { constant, c }, Domain::UnitBall(2), BoundaryNoiseSpec::FiniteSeries { modes }) => {
                if modes.iter().any(|m| matches!(m, BoundaryData::Atoms { .. })) {
                    return Err(unsupported(dom, "point-mass noise (not square integrable on the boundary)"));
                }
                let grid = dom.boundary_quadrature(SUP_LEVEL)?;
                let a = modes
                    .iter()
                    .map(|m| grid.nodes().map(|y| m.value_at(y).powi(2)).fold(0.0, f64::max))
                    .sum();
                Ok(SquareSum::DiskSup { a, constant, c })
            }
            _ => Err(unsupported(dom, "J-integral for this noise and kernel mode")),
        }
    }

    pub(crate) fn factor(&self, t: f64) -> f64 {
        match self {
            SquareSum::HalfSpace { measure } => measure.smoothed_variance(t).unwrap_or(f64::NAN),
            _ => 1.0,
        }
    }

    pub(crate) fn spatial(&self, t: f64, a: f64, b: f64) -> f64 {
        match self {
            SquareSum::Line { kernel, modes } => modes
                .iter()
                .map(|m| {
                    m.iter()
                        .map(|&(end, v)| v * kernel.endpoint_flux(t, if end == 0 { a } else { b }))
                        .sum::<f64>()
                        .powi(2)
                })
                .sum(),
            SquareSum::HalfSpace { .. } => half_line_flux(t, a).powi(2),
            SquareSum::DiskClosure { constant, c } => {
                constant * constant / t * (2.0 * PI * c * t).powi(-2) * disk_boundary_mass(t, a, *c)
            }
            SquareSum::DiskSup { a: amp, constant, c } => {
                let m = disk_boundary_mass(t, a, 2.0 * c) / (2.0 * PI * c * t);
                amp * constant * constant / t * m * m
            }
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        match self {
            SquareSum::Line { modes, .. } => modes.iter().all(|m| m.iter().all(|&(_, v)| v == 0.0)),
            SquareSum::DiskSup { a, .. } => *a == 0.0,
            SquareSum::HalfSpace { measure } => matches!(&measure.kind, SpectralKind::Finite { atoms } if atoms.iter().all(|a| a.1 == 0.0)),
            SquareSum::DiskClosure { .. } => false,
        }
    }
}

/// I(t,x;c) = ∫_{S¹} exp(−|x−y|²/(ct)) ds(y) for |x| = 1 − ρ, by panels in the
/// angle graded toward the nearest boundary point.
pub(crate) fn disk_boundary_mass(t: f64, rho: f64, c: f64) -> f64 {
    let r = 1.0 - rho;
    let ct = c * t;
    let radial = (-rho * rho / ct).exp();
    if r <= 0.0 {
        return 2.0 * PI * radial;
    }
    let k = 4.0 * r / ct;
    let f = |phi: f64| (-k * (0.5 * phi).sin().powi(2)).exp();
    let w = (0.5 / k.sqrt()).min(PI / 8.0);
    let mut edges = vec![0.0, w];
    while *edges.last().unwrap() < PI {
        let next = (edges.last().unwrap() * 2.0).min(PI);
        if k * (0.5 * edges.last().unwrap()).sin().powi(2) > 45.0 {
            break;
        }
        edges.push(next);
    }
    2.0 * radial * quad::integrate_panels(&edges, 10, f)
}

/// ψ_k(u, x) for simulation.
#[derive(Debug, Clone)]
pub(crate) enum ModalFamily {
    Line { kernel: KernelHandle, modes: Vec<Vec<(usize, f64)>> },
    /// φ(u,x₀)·amp·e^{−u|ξ|²}·cos/sin⟨ξ,x'⟩ on a half-space.
    Waves { waves: Vec<(Vec<f64>, f64, bool)> },
}

impl ModalFamily {
    pub(crate) fn len(&self) -> usize {
        match self {
            ModalFamily::Line { modes, .. } => modes.len(),
            ModalFamily::Waves { waves } => waves.len(),
        }
    }

    pub(crate) fn psi(&self, k: usize, u: f64, x: &[f64]) -> f64 {
        match self {
            ModalFamily::Line { kernel, modes } => {
                let right = if matches!(kernel.domain, Domain::Interval01) { 1.0 - x[0] } else { f64::INFINITY };
                modes[k]
                    .iter()
                    .map(|&(end, v)| v * kernel.endpoint_flux(u, if end == 0 { x[0] } else { right }))
                    .sum()
            }
            ModalFamily::Waves { waves } => {
                let (xi, amp, sine) = &waves[k];
                let xi2: f64 = xi.iter().map(|v| v * v).sum();
                let phase: f64 = xi.iter().zip(&x[1..]).map(|(a, b)| a * b).sum();
                half_line_flux(u, x[0]) * amp * (-u * xi2).exp() * if *sine { phase.sin() } else { phase.cos() }
            }
        }
    }
}

/// How the stochastic convolution is sampled for a setup.
#[derive(Debug, Clone)]
pub(crate) enum Sampler {
    Modal(ModalFamily),
    /// Space-time white noise on the boundary hyperplane of a half-space; the
    /// per-step law of the probe vector is built from its covariance.
    WhiteHalfSpace { dim: usize },
}

impl Sampler {
    pub(crate) fn from_setup(setup: &ConvolutionSetup) -> Result<Self> {
        setup.validate()?;
        if setup.mode != KernelMode::Exact {
            return Err(Error::Config("simulation needs exact kernels".into()));
        }
        let dom = &setup.domain;
        match (dom, &setup.noise) {
            (Domain::Interval01 | Domain::HalfLine, n) => Ok(Sampler::Modal(ModalFamily::Line {
                kernel: KernelHandle::exact(dom.clone())?,
                modes: line_modes(dom, n)?,
            })),
            (Domain::HalfSpace(d), BoundaryNoiseSpec::SpatiallyHomogeneous { measure, .. }) if *d == measure.dim + 1 => {
                match measure.kind {
                    SpectralKind::Lebesgue => Ok(Sampler::WhiteHalfSpace { dim: *d }),
                    SpectralKind::Finite { .. } => {
                        let waves = setup
                            .noise
                            .rkhs_basis(dom)?
                            .into_iter()
                            .map(|m| match m {
                                NoiseMode::Wave { freq, amplitude, sine } => (freq, amplitude, sine),
                                NoiseMode::Data(_) => unreachable!("spectral families are plane waves"),
                            })
                            .collect();
                        Ok(Sampler::Modal(ModalFamily::Waves { waves }))
                    }
                    SpectralKind::Bessel { .. } => Err(unsupported(dom, "simulation of Bessel-correlated noise")),
                }
            }
            _ => Err(unsupported(dom, "simulation for this noise")),
        }
    }
}
