//! Boundary Wiener processes W(t,b) = Σ_k e_k(b) W_k(t): finite series, endpoint
//! atoms, white noise on the circle and spatially homogeneous noise on ℝ^m,
//! with the special functions Γ_κ and K_α.
//!
//! A spatially homogeneous noise with spectral measure μ has covariance
//! E W(t,y)W(s,z) = (t∧s)·(2π)^{-m}Γ(y−z), where Γ = Fμ. Lebesgue μ is white noise.

use crate::dirichlet::{BoundaryBasis, BoundaryData};
use crate::error::{param, Error, Result};
use crate::geometry::Domain;
use crate::quad;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Mode indices occupy the low bits of a substream id.
pub const MODE_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralKind {
    /// Each atom `(b, mass)` puts `mass/2` at `b` and at `−b`.
    Finite { atoms: Vec<(Vec<f64>, f64)> },
    Lebesgue,
    /// Density `(1+|ξ|²)^{-κ/2}`.
    Bessel { kappa: f64 },
}

/// Symmetric spectral measure μ on ℝ^m.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    pub kind: SpectralKind,
    pub dim: usize,
}

impl SpectralMeasure {
    pub fn finite(atoms: Vec<(Vec<f64>, f64)>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(param("dim", "must be positive"));
        }
        for (b, mass) in &atoms {
            if b.len() != dim {
                return Err(param("atoms", format!("atom {b:?} is not in ℝ^{dim}")));
            }
            if !(mass.is_finite() && *mass >= 0.0) || b.iter().any(|v| !v.is_finite()) {
                return Err(param("atoms", "masses must be finite and nonnegative"));
            }
        }
        Ok(SpectralMeasure { kind: SpectralKind::Finite { atoms }, dim })
    }

    pub fn lebesgue(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(param("dim", "must be positive"));
        }
        Ok(SpectralMeasure { kind: SpectralKind::Lebesgue, dim })
    }

    pub fn bessel(kappa: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(param("dim", "must be positive"));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(param("kappa", "must be positive"));
        }
        Ok(SpectralMeasure { kind: SpectralKind::Bessel { kappa }, dim })
    }

    /// Lebesgue density of μ, if it has one.
    pub fn density(&self, xi: &[f64]) -> Option<f64> {
        match &self.kind {
            SpectralKind::Finite { .. } => None,
            SpectralKind::Lebesgue => Some(1.0),
            SpectralKind::Bessel { kappa } => Some((1.0 + xi.iter().map(|v| v * v).sum::<f64>()).powf(-kappa / 2.0)),
        }
    }

    /// μ(ℝ^m); infinite for Lebesgue and for Bessel with κ ≤ m.
    pub fn total_mass(&self) -> f64 {
        match &self.kind {
            SpectralKind::Finite { atoms } => atoms.iter().map(|a| a.1).sum(),
            SpectralKind::Lebesgue => f64::INFINITY,
            SpectralKind::Bessel { kappa } => {
                let m = self.dim as f64;
                if *kappa <= m {
                    f64::INFINITY
                } else {
                    PI.powf(m / 2.0) * gamma((kappa - m) / 2.0) / gamma(kappa / 2.0)
                }
            }
        }
    }

    fn unsupported(&self, operation: &'static str) -> Error {
        Error::Unsupported { domain: format!("{:?} spectral measure on ℝ^{}", self.kind, self.dim), operation }
    }

    /// Γ(y) = ∫ e^{i⟨y,ξ⟩} μ(dξ).
    pub fn spectral_correlation(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim {
            return Err(param("y", format!("expected {} coordinates, got {}", self.dim, y.len())));
        }
        match &self.kind {
            SpectralKind::Finite { atoms } => Ok(atoms.iter().map(|(b, mass)| mass * dot(b, y).cos()).sum()),
            SpectralKind::Lebesgue => Err(self.unsupported("pointwise spectral correlation")),
            SpectralKind::Bessel { kappa } => {
                if self.dim != 1 {
                    return Err(self.unsupported("Bessel correlation outside m = 1"));
                }
                Ok(bessel_correlation_1d(*kappa, y[0].abs()))
            }
        }
    }

    /// Covariance kernel q(y) = (2π)^{-m}Γ(y) of W(1,·).
    pub fn covariance(&self, y: &[f64]) -> Result<f64> {
        Ok(self.spectral_correlation(y)? / (2.0 * PI).powi(self.dim as i32))
    }

    /// (2π)^{-m}∫ e^{-2t|ξ|²} μ(dξ): the variance of the noise after smoothing
    /// by the tangential heat kernel g_{2t} on both sides.
    pub fn smoothed_variance(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t > 0.0) {
            return Err(param("t", "must be positive"));
        }
        let norm = (2.0 * PI).powi(self.dim as i32);
        let m = self.dim as f64;
        let v = match &self.kind {
            SpectralKind::Finite { atoms } => {
                atoms.iter().map(|(b, mass)| mass * (-2.0 * t * dot(b, b)).exp()).sum::<f64>() / norm
            }
            SpectralKind::Lebesgue => (8.0 * PI * t).powf(-m / 2.0),
            SpectralKind::Bessel { kappa } => {
                let sphere = 2.0 * PI.powf(m / 2.0) / gamma(m / 2.0);
                let r_max = (42.0 / (2.0 * t)).sqrt().max(2.0);
                let mut edges = vec![0.0, 1.0];
                while *edges.last().unwrap() < r_max {
                    let next = edges.last().unwrap() * 2.0;
                    edges.push(next);
                }
                let f = |r: f64| r.powf(m - 1.0) * (-2.0 * t * r * r).exp() * (1.0 + r * r).powf(-kappa / 2.0);
                sphere * quad::integrate_panels(&edges, 16, f) / norm
            }
        };
        Ok(v)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const LOBE_COUNT: usize = 48;
const AVERAGING_ROUNDS: usize = 24;

/// 2∫₀^∞ cos(ωξ)(1+ξ²)^{-κ/2} dξ. The tail is split at the zeros of the cosine
/// into half-period lobes; the alternating partial sums are accelerated by
/// repeated pairwise averaging.
fn bessel_correlation_1d(kappa: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        return if kappa > 1.0 {
            PI.sqrt() * gamma((kappa - 1.0) / 2.0) / gamma(kappa / 2.0)
        } else {
            f64::INFINITY
        };
    }
    let f = |x: f64| (1.0 + x * x).powf(-kappa / 2.0) * (omega * x).cos();
    let x0 = PI / (2.0 * omega);
    let edges: Vec<f64> = if x0 > 1.0 {
        let mut e = vec![0.0, 1.0];
        let mut x = 1.0;
        while 2.0 * x < x0 {
            x *= 2.0;
            e.push(x);
        }
        e.push(x0);
        e
    } else {
        (0..5).map(|i| x0 * i as f64 / 4.0).collect()
    };
    let mut s = quad::integrate_panels(&edges, 16, f);
    let mut partial = Vec::with_capacity(LOBE_COUNT + 1);
    partial.push(s);
    let lobe = PI / omega;
    for j in 0..LOBE_COUNT {
        let a = x0 + j as f64 * lobe;
        s += quad::integrate(a, a + lobe, 16, f);
        partial.push(s);
    }
    for _ in 0..AVERAGING_ROUNDS {
        partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    2.0 * partial[partial.len() - 1]
}

/// K_α(r) = ∫₀^∞ s^{-2-α} e^{-1/s - r² s} ds = ∫₀^∞ u^α e^{-u - r²/u} du.
///
/// Trapezoid rule in v = ln u around the peak of the integrand; the integrand
/// decays double-exponentially in v on the right and for r > 0 also on the left.
pub fn k_alpha(r: f64, alpha: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(param("r", "must be finite and nonnegative"));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(param("alpha", "must be finite and nonnegative"));
    }
    let a1 = alpha + 1.0;
    let r2 = r * r;
    let peak = ((a1 + (a1 * a1 + 4.0 * r2).sqrt()) / 2.0).ln();
    let log_f = |v: f64| a1 * v - v.exp() - r2 * (-v).exp();
    let curvature = peak.exp() + r2 * (-peak).exp();
    let h = 0.1 / curvature.sqrt();
    let top = log_f(peak);
    let mut sum = 1.0;
    for dir in [-1.0, 1.0] {
        let mut k = 1.0;
        loop {
            let term = (log_f(peak + dir * k * h) - top).exp();
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            k += 1.0;
        }
    }
    Ok(h * sum * top.exp())
}

/// How a noise is declared.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryNoiseSpec {
    /// W = Σ e_k W_k with the listed e_k.
    FiniteSeries { modes: Vec<BoundaryData> },
    /// Independent Brownian motions at the endpoints: χ_{0}, χ_{1} on the
    /// interval, χ_{0} on the half-line.
    EndpointAtoms,
    /// Cylindrical Wiener process on L²(S¹), truncated to Fourier modes |k| ≤ `k_max`.
    CircleWhiteNoise { k_max: usize },
    /// Spatially homogeneous noise on the boundary ℝ^m of a half-space.
    /// Continuous measures are discretized on `modes` frequency cells of [0, `cutoff`].
    SpatiallyHomogeneous { measure: SpectralMeasure, modes: usize, cutoff: f64 },
}

/// One member e_k of the basis realizing the noise.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseMode {
    Data(BoundaryData),
    /// `amplitude·cos⟨ξ,y⟩` (or `sin`) at the boundary point `(0, y)`.
    Wave { freq: Vec<f64>, amplitude: f64, sine: bool },
}

impl NoiseMode {
    /// e_k(b) for a boundary point `b`. Atomic modes are indicator functions.
    pub fn value_at(&self, b: &[f64]) -> f64 {
        match self {
            NoiseMode::Data(d) => d.value_at(b),
            NoiseMode::Wave { freq, amplitude, sine } => {
                let phase = dot(freq, &b[1..]);
                amplitude * if *sine { phase.sin() } else { phase.cos() }
            }
        }
    }
}

impl BoundaryNoiseSpec {
    /// The explicit basis {e_k} of the reproducing kernel Hilbert space of W,
    /// truncated as declared.
    pub fn rkhs_basis(&self, domain: &Domain) -> Result<Vec<NoiseMode>> {
        match self {
            BoundaryNoiseSpec::FiniteSeries { modes } => {
                for m in modes {
                    m.surface_terms(domain)?;
                }
                Ok(modes.iter().cloned().map(NoiseMode::Data).collect())
            }
            BoundaryNoiseSpec::EndpointAtoms => match domain {
                Domain::Interval01 => Ok(vec![
                    NoiseMode::Data(BoundaryData::endpoints(1.0, 0.0)),
                    NoiseMode::Data(BoundaryData::endpoints(0.0, 1.0)),
                ]),
                Domain::HalfLine => Ok(vec![NoiseMode::Data(BoundaryData::origin(1.0))]),
                _ => Err(Error::Unsupported { domain: domain.to_string(), operation: "endpoint noise" }),
            },
            BoundaryNoiseSpec::CircleWhiteNoise { k_max } => {
                if !matches!(domain, Domain::UnitBall(2)) {
                    return Err(Error::Unsupported { domain: domain.to_string(), operation: "circle white noise" });
                }
                let n = 2 * k_max + 1;
                Ok((0..n)
                    .map(|j| {
                        let mut coeffs = vec![0.0; n];
                        coeffs[j] = 1.0;
                        let level = (((4 * k_max + 8) as f64).log2().ceil() as u32).max(4);
                        NoiseMode::Data(BoundaryData::BasisCoeffs { basis: BoundaryBasis::CircleFourier, coeffs, level })
                    })
                    .collect())
            }
            BoundaryNoiseSpec::SpatiallyHomogeneous { measure, modes, cutoff } => {
                match domain {
                    Domain::HalfSpace(d) if *d == measure.dim + 1 => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "spectral measure on ℝ^{} does not fit the boundary of {domain}",
                            measure.dim
                        )))
                    }
                }
                frequency_family(measure, *modes, *cutoff)
            }
        }
    }
}

/// cos/sin pairs whose covariance is (2π)^{-m}Γ for finite μ, and a midpoint
/// discretization of it for continuous μ on m = 1.
fn frequency_family(measure: &SpectralMeasure, modes: usize, cutoff: f64) -> Result<Vec<NoiseMode>> {
    let norm = (2.0 * PI).powi(measure.dim as i32);
    let pair = |freq: Vec<f64>, mass: f64| {
        let amplitude = (mass / norm).sqrt();
        [
            NoiseMode::Wave { freq: freq.clone(), amplitude, sine: false },
            NoiseMode::Wave { freq, amplitude, sine: true },
        ]
    };
    match &measure.kind {
        SpectralKind::Finite { atoms } => Ok(atoms.iter().flat_map(|(b, mass)| pair(b.clone(), *mass)).collect()),
        _ => {
            if measure.dim != 1 {
                return Err(measure.unsupported("frequency discretization outside m = 1"));
            }
            if modes < 2 || !(cutoff.is_finite() && cutoff > 0.0) {
                return Err(param("modes", "need at least two modes and a positive cutoff"));
            }
            let cells = modes / 2;
            let h = cutoff / cells as f64;
            Ok((0..cells)
                .flat_map(|j| {
                    let xi = (j as f64 + 0.5) * h;
                    let mass = 2.0 * measure.density(&[xi]).unwrap_or(0.0) * h;
                    pair(vec![xi], mass)
                })
                .collect())
        }
    }
}

/// Independent generator for mode `mode` of path `path` under `root`.
pub fn substream(root: u64, path: u64, mode: u64) -> ChaCha8Rng {
    assert!(mode < 1 << MODE_BITS, "mode index exceeds the substream counter width");
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream((path << MODE_BITS) | mode);
    rng
}

/// W_k(t_{n+1}) − W_k(t_n) for every mode.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub step: usize,
    pub coeffs: Vec<f64>,
    pub root: u64,
    pub path: u64,
}

/// Sequential increments of one path; one generator per mode.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    root: u64,
    path: u64,
    step: usize,
    rngs: Vec<ChaCha8Rng>,
}

impl NoiseStream {
    pub fn new(root: u64, path: u64, modes: usize) -> Self {
        NoiseStream { root, path, step: 0, rngs: (0..modes as u64).map(|k| substream(root, path, k)).collect() }
    }

    pub fn modes(&self) -> usize {
        self.rngs.len()
    }

    pub fn next_increment(&mut self, dt: f64) -> NoiseIncrement {
        let s = dt.sqrt();
        let coeffs = self
            .rngs
            .iter_mut()
            .map(|rng| {
                let z: f64 = StandardNormal.sample(rng);
                s * z
            })
            .collect();
        let inc = NoiseIncrement { step: self.step, coeffs, root: self.root, path: self.path };
        self.step += 1;
        inc
    }
}

/// `count` increments over steps of length `dt` for path `path`.
pub fn sample_increments(
    spec: &BoundaryNoiseSpec,
    domain: &Domain,
    dt: f64,
    count: usize,
    root: u64,
    path: u64,
) -> Result<Vec<NoiseIncrement>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(param("dt", "must be positive"));
    }
    let modes = spec.rkhs_basis(domain)?.len();
    let mut stream = NoiseStream::new(root, path, modes);
    Ok((0..count).map(|_| stream.next_increment(dt)).collect())
}

/// W(b) = Σ_k coeffs_k e_k(b).
pub fn evaluate_noise(modes: &[NoiseMode], coeffs: &[f64], b: &[f64]) -> f64 {
    modes.iter().zip(coeffs).map(|(m, c)| c * m.value_at(b)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_differ_by_mode_and_path() {
        use rand::Rng;
        let a: u64 = substream(7, 0, 0).random();
        let b: u64 = substream(7, 0, 1).random();
        let c: u64 = substream(7, 1, 0).random();
        let d: u64 = substream(7, 0, 0).random();
        assert!(a != b && a != c && b != c);
        assert_eq!(a, d);
    }

    #[test]
    fn bessel_total_mass_matches_correlation_at_zero() {
        let mu = SpectralMeasure::bessel(3.0, 1).unwrap();
        assert!((mu.total_mass() - mu.spectral_correlation(&[0.0]).unwrap()).abs() < 1e-12);
    }
}
