//! Gaussian densities and Dirichlet heat kernels for ∂u/∂t = Δu.
//!
//! The unit interval kernel has two independent evaluations: the method of
//! images and the sine eigenseries. Half-line and half-space kernels use a
//! single reflection.

use crate::error::{param, Error, Result};
use crate::geometry::{norm2, Domain};
use crate::quad;
use std::f64::consts::PI;

/// Series terms below this size are dropped.
pub const SERIES_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    /// Scale constant of the estimates, so the density used there is g_{ct}.
    pub c: f64,
    pub t: f64,
    pub d: usize,
}

impl GaussianParams {
    pub fn new(c: f64, t: f64, d: usize) -> Result<Self> {
        if !(t > 0.0) {
            return Err(param("t", format!("must be positive, got {t}")));
        }
        if !(c > 0.0) {
            return Err(param("c", format!("must be positive, got {c}")));
        }
        if d == 0 {
            return Err(param("d", "dimension must be positive"));
        }
        Ok(Self { c, t, d })
    }

    /// g_t(z).
    pub fn density(&self, z: &[f64]) -> f64 {
        gauss(self.t, norm2(z), self.d)
    }

    /// g_{ct}(z).
    pub fn scaled_density(&self, z: &[f64]) -> f64 {
        gauss(self.c * self.t, norm2(z), self.d)
    }
}

/// g_t(z) = (2πt)^{-d/2} exp(-|z|²/(2t)), with d = z.len().
pub fn gaussian_density(t: f64, z: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(param("t", format!("must be positive, got {t}")));
    }
    if z.is_empty() {
        return Err(param("z", "empty vector"));
    }
    Ok(gauss(t, norm2(z), z.len()))
}

#[inline]
pub(crate) fn gauss(t: f64, r2: f64, d: usize) -> f64 {
    (2.0 * PI * t).powf(-0.5 * d as f64) * (-r2 / (2.0 * t)).exp()
}

#[inline]
pub(crate) fn gauss1(t: f64, z: f64) -> f64 {
    (-z * z / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// m_t(z) = min(1, ρ(z)/√t).
pub fn barrier_factor(domain: &Domain, t: f64, z: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(param("t", format!("must be positive, got {t}")));
    }
    Ok((domain.distance_to_boundary(z)? / t.sqrt()).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Method of images; truncated once the next image is below [`SERIES_TOL`].
    ImageSeries,
    /// Dirichlet eigenfunction expansion; truncated once exp(-k²π²t) < [`SERIES_TOL`].
    SineSeries,
    /// Single reflection (half-line, half-space).
    ClosedForm,
}

/// A Dirichlet heat kernel on a domain with an exact representation.
#[derive(Debug, Clone)]
pub struct KernelHandle {
    pub domain: Domain,
    pub representation: Representation,
}

impl KernelHandle {
    pub fn new(domain: Domain, representation: Representation) -> Result<Self> {
        let ok = matches!(
            (&domain, representation),
            (Domain::Interval01, Representation::ImageSeries | Representation::SineSeries)
                | (Domain::HalfLine | Domain::HalfSpace(_), Representation::ClosedForm)
        );
        if !ok {
            return Err(Error::Unsupported {
                domain: domain.to_string(),
                operation: "exact Green kernel",
            });
        }
        Ok(Self {
            domain,
            representation,
        })
    }

    /// The default exact representation for the domain.
    pub fn exact(domain: Domain) -> Result<Self> {
        let repr = match domain {
            Domain::Interval01 => Representation::ImageSeries,
            _ => Representation::ClosedForm,
        };
        Self::new(domain, repr)
    }

    fn check(&self, t: f64, pts: &[&[f64]]) -> Result<()> {
        if !(t > 0.0) {
            return Err(param("t", format!("must be positive, got {t}")));
        }
        for x in pts {
            self.domain.distance_to_boundary(x)?;
        }
        Ok(())
    }

    /// G(t, x, y).
    pub fn green(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(t, &[x, y])?;
        Ok(match &self.domain {
            Domain::HalfSpace(d) if *d > 1 => {
                let tang: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| (a - b) * (a - b)).sum();
                half_line_green(t, x[0], y[0]) * gauss(2.0 * t, tang, d - 1)
            }
            _ => self.green_1d(t, x[0], y[0]),
        })
    }

    /// One-dimensional kernel without membership checks.
    #[inline]
    pub fn green_1d(&self, t: f64, x: f64, y: f64) -> f64 {
        match self.representation {
            Representation::ImageSeries => interval_green_image(t, x, y),
            Representation::SineSeries => interval_green_sine(t, x, y),
            Representation::ClosedForm => half_line_green(t, x, y),
        }
    }

    /// ∂G/∂x (one dimension) from the differentiated series.
    #[inline]
    pub fn green_dx_1d(&self, t: f64, x: f64, y: f64) -> f64 {
        match self.representation {
            Representation::ImageSeries => interval_image_sum(t, |n| {
                let (a, b) = (x - y + 2.0 * n, x + y + 2.0 * n);
                -a / (2.0 * t) * gauss1(2.0 * t, a) + b / (2.0 * t) * gauss1(2.0 * t, b)
            }),
            Representation::SineSeries => sine_sum(t, 1, |k| {
                let kp = k * PI;
                2.0 * kp * (kp * x).cos() * (kp * y).sin()
            }),
            Representation::ClosedForm => {
                let (a, b) = (x - y, x + y);
                -a / (2.0 * t) * gauss1(2.0 * t, a) + b / (2.0 * t) * gauss1(2.0 * t, b)
            }
        }
    }

    /// ∂²G/∂x² (one dimension) from the differentiated series.
    #[inline]
    pub fn green_dxx_1d(&self, t: f64, x: f64, y: f64) -> f64 {
        let h = |z: f64| (z * z / (4.0 * t * t) - 1.0 / (2.0 * t)) * gauss1(2.0 * t, z);
        match self.representation {
            Representation::ImageSeries => {
                interval_image_sum(t, |n| h(x - y + 2.0 * n) - h(x + y + 2.0 * n))
            }
            Representation::SineSeries => sine_sum(t, 2, |k| {
                let kp = k * PI;
                -2.0 * kp * kp * (kp * x).sin() * (kp * y).sin()
            }),
            Representation::ClosedForm => h(x - y) - h(x + y),
        }
    }

    /// Outward normal derivative ∂G/∂n_y(t, x, b) at a boundary point `b`.
    pub fn normal_derivative(&self, t: f64, x: &[f64], b: &[f64]) -> Result<f64> {
        self.check(t, &[x])?;
        let on_boundary = self.domain.distance_to_boundary(b).map(|r| r == 0.0).unwrap_or(false);
        if !on_boundary {
            return Err(param("b", format!("{b:?} is not a boundary point of {}", self.domain)));
        }
        Ok(match &self.domain {
            Domain::Interval01 => {
                if b[0] == 0.0 {
                    -self.endpoint_flux(t, x[0])
                } else {
                    -self.endpoint_flux(t, 1.0 - x[0])
                }
            }
            Domain::HalfSpace(d) if *d > 1 => {
                let tang: f64 = x[1..].iter().zip(&b[1..]).map(|(a, c)| (a - c) * (a - c)).sum();
                -half_line_flux(t, x[0]) * gauss(2.0 * t, tang, d - 1)
            }
            _ => -half_line_flux(t, x[0]),
        })
    }

    /// φ(t, x) = ∂G/∂y(t, x, 0): the inward flux density at the left end,
    /// as a function of the distance `x` from that end.
    #[inline]
    pub fn endpoint_flux(&self, t: f64, x: f64) -> f64 {
        match self.representation {
            Representation::ImageSeries => interval_flux_image(t, x),
            Representation::SineSeries => interval_flux_sine(t, x),
            Representation::ClosedForm => half_line_flux(t, x),
        }
    }

    /// Resolvent kernel ∫₀^∞ e^{-λt} G(t, x, y) dt.
    pub fn resolvent(&self, lambda: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(param("lambda", format!("must be positive, got {lambda}")));
        }
        self.check(1.0, &[x, y])?;
        let gap = self.spectral_gap();
        Ok(laplace_transform(lambda, gap, |t| {
            self.green(t, x, y).unwrap_or(0.0)
        }))
    }

    /// Lower bound of the Dirichlet spectrum (π² on the unit interval, 0 otherwise).
    pub fn spectral_gap(&self) -> f64 {
        match self.domain {
            Domain::Interval01 => PI * PI,
            _ => 0.0,
        }
    }

    /// Number of images or eigenmodes used at time `t`.
    pub fn truncation(&self, t: f64) -> usize {
        match self.representation {
            Representation::ImageSeries => image_terms(t),
            Representation::SineSeries => sine_terms(t, 0),
            Representation::ClosedForm => 1,
        }
    }
}

/// ∫₀^∞ e^{-λt} f(t) dt for kernels decaying like e^{-gap·t}: t = u² on (0, 1]
/// with dyadic panels toward u = 0, geometric panels on (1, ∞).
pub(crate) fn laplace_transform<F: Fn(f64) -> f64>(lambda: f64, gap: f64, f: F) -> f64 {
    let near = quad::integrate_panels(&quad::dyadic_edges(1.0, 40), 12, |u| {
        let t = u * u;
        if t == 0.0 {
            return 0.0;
        }
        2.0 * u * (-lambda * t).exp() * f(t)
    });
    let rate = lambda + gap;
    let t_max = 1.0 + 40.0 / rate;
    let far = quad::integrate_panels(&quad::geometric_edges(1.0, t_max, 1.5), 16, |t| {
        (-lambda * t).exp() * f(t)
    });
    near + far
}

/// g_{2t}(a − y) − g_{2t}(a + y), without cancellation when a·y ≪ t.
#[inline]
fn reflected_pair(t: f64, a: f64, y: f64) -> f64 {
    let r = a * y / t;
    if r.abs() < 1.0 {
        -gauss1(2.0 * t, a - y) * (-r).exp_m1()
    } else {
        gauss1(2.0 * t, a - y) - gauss1(2.0 * t, a + y)
    }
}

#[inline]
pub(crate) fn half_line_green(t: f64, x: f64, y: f64) -> f64 {
    reflected_pair(t, x, y)
}

/// (x/t) g_{2t}(x).
#[inline]
pub(crate) fn half_line_flux(t: f64, x: f64) -> f64 {
    x / t * gauss1(2.0 * t, x)
}

/// Images n = 0, ±1, … until the Gaussian factor of the next shell is negligible.
fn image_terms(t: f64) -> usize {
    // shell n lies at distance ≥ 2n − 1 from the unit interval
    let mut n = 1;
    while (-((2 * n - 1) as f64).powi(2) / (4.0 * t)).exp() >= SERIES_TOL * 1e-2 {
        n += 1;
    }
    n
}

#[inline]
fn interval_image_sum<F: Fn(f64) -> f64>(t: f64, term: F) -> f64 {
    let n = image_terms(t);
    let mut s = term(0.0);
    for k in 1..=n {
        let k = k as f64;
        s += term(k) + term(-k);
    }
    s
}

#[inline]
pub(crate) fn interval_green_image(t: f64, x: f64, y: f64) -> f64 {
    // G(t,x,y) = G(t,1−x,1−y); pair images about the nearer end
    let (x, y) = if x + y > 1.0 { (1.0 - x, 1.0 - y) } else { (x, y) };
    interval_image_sum(t, |n| reflected_pair(t, x + 2.0 * n, y))
}

#[inline]
pub(crate) fn interval_flux_image(t: f64, x: f64) -> f64 {
    interval_image_sum(t, |n| {
        let z = x + 2.0 * n;
        z / t * gauss1(2.0 * t, z)
    })
}

/// Modes k = 1..K with k^power·exp(-k²π²t) above the series tolerance.
pub(crate) fn sine_terms(t: f64, power: i32) -> usize {
    let mut k = ((SERIES_TOL.recip().ln() / (PI * PI * t)).sqrt()).ceil().max(1.0) as usize;
    while (k as f64).powi(power) * (-((k * k) as f64) * PI * PI * t).exp() >= SERIES_TOL {
        k += 1;
    }
    k
}

#[inline]
fn sine_sum<F: Fn(f64) -> f64>(t: f64, power: i32, term: F) -> f64 {
    (1..=sine_terms(t, power))
        .map(|k| {
            let kf = k as f64;
            term(kf) * (-kf * kf * PI * PI * t).exp()
        })
        .sum()
}

pub(crate) fn interval_green_sine(t: f64, x: f64, y: f64) -> f64 {
    sine_sum(t, 0, |k| 2.0 * (k * PI * x).sin() * (k * PI * y).sin())
}

pub(crate) fn interval_flux_sine(t: f64, x: f64) -> f64 {
    sine_sum(t, 1, |k| 2.0 * k * PI * (k * PI * x).sin())
}
