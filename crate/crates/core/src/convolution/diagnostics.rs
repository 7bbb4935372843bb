//! Ensemble statistics, long-time behaviour and the Gaussian tail check.

use super::jintegral::{j_integral, variance_with, JReport};
use super::propagators::SquareSum;
use super::simulate::{simulate_convolution, ProbeGrid};
use super::ConvolutionSetup;
use crate::error::{param, Error, Result};
use crate::geometry::{Domain, QuadratureGrid};
use crate::quad;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Mean, variance and their standard errors at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeStats {
    pub n: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    /// √((m₄ − s⁴)/n), the standard error of the sample variance.
    pub variance_se: f64,
    /// m₄ / s⁴.
    pub kurtosis: f64,
}

pub fn node_statistics(xs: &[f64]) -> NodeStats {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let variance = m2 * n / (n - 1.0);
    NodeStats {
        n: xs.len(),
        mean,
        mean_se: (variance / n).sqrt(),
        variance,
        variance_se: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        kurtosis: if m2 > 0.0 { m4 / (m2 * m2) } else { f64::NAN },
    }
}

/// E|Z|^p for a standard normal Z: 2^{p/2} Γ((p+1)/2) / √π.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / PI.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    /// 𝒥_{+∞}.
    pub j_infinity: JReport,
    pub time: f64,
    pub points: Vec<f64>,
    /// σ²(time, x) by quadrature.
    pub variance_at_time: Vec<f64>,
    /// σ²(∞, x) by quadrature.
    pub variance_limit: Vec<f64>,
    /// Sample variance of M(time, x).
    pub simulated_variance: Vec<f64>,
    pub simulated_se: Vec<f64>,
    /// max_x |σ²(time)/σ²(∞) − 1|.
    pub quadrature_gap: f64,
    /// max_x |simulated/σ²(∞) − 1|.
    pub simulated_gap: f64,
    /// σ²(t,x) nondecreasing along `monotone_times` at every point.
    pub monotone: bool,
}

/// Long-time checks: 𝒥_{+∞}, σ²(t) → σ²(∞) and the simulated variance at `time`.
pub fn invariant_diagnostics(
    setup: &ConvolutionSetup,
    time: f64,
    points: &QuadratureGrid,
    n_paths: usize,
    root: u64,
) -> Result<InvariantReport> {
    if !matches!(setup.domain, Domain::Interval01 | Domain::HalfLine) {
        return Err(Error::Unsupported { domain: setup.domain.to_string(), operation: "invariant-measure diagnostics" });
    }
    if !(time > 0.0 && time.is_finite()) {
        return Err(param("time", "must be finite and positive"));
    }
    let long = setup.clone().with_horizon(f64::INFINITY).with_alpha(0.0);
    let j_infinity = j_integral(&long)?;
    let sq = SquareSum::from_setup(setup)?;
    let mut variance_at_time = Vec::new();
    let mut variance_limit = Vec::new();
    let mut monotone = true;
    let ts = quad::log_space(time / 64.0, time, 7);
    for x in points.nodes() {
        variance_at_time.push(variance_with(setup, &sq, time, x)?);
        variance_limit.push(variance_with(setup, &sq, f64::INFINITY, x)?);
        let trace: Vec<f64> = ts.iter().map(|&t| variance_with(setup, &sq, t, x)).collect::<Result<_>>()?;
        let lim = *variance_limit.last().unwrap();
        monotone &= trace.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)) && trace.last().unwrap() <= &(lim * (1.0 + 1e-9));
    }
    let (simulated_variance, simulated_se) = if n_paths > 1 && !sq.is_zero() {
        let ens = simulate_convolution(setup, &[time], points, n_paths, &ProbeGrid::default(), root)?;
        (0..points.len())
            .map(|j| {
                let s = node_statistics(&ens.node(0, j));
                (s.variance, s.variance_se)
            })
            .unzip()
    } else {
        (vec![0.0; points.len()], vec![0.0; points.len()])
    };
    let gap = |a: &[f64]| -> f64 {
        a.iter()
            .zip(&variance_limit)
            .map(|(v, l)| if *l == 0.0 { v.abs() } else { (v / l - 1.0).abs() })
            .fold(0.0, f64::max)
    };
    Ok(InvariantReport {
        j_infinity,
        time,
        points: points.first_coords(),
        quadrature_gap: gap(&variance_at_time),
        simulated_gap: gap(&simulated_variance),
        variance_at_time,
        variance_limit,
        simulated_variance,
        simulated_se,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailVerdict {
    /// Tail at least as light as Gaussian, within the tolerance.
    Gaussian,
    Heavier,
    Degenerate,
    Inconclusive,
}

/// Empirical tail of a sample of norms.
///
/// For P(N > r) the Gaussian quantile z_P = Φ̄⁻¹(P) is matched against the
/// order statistic r_P. A Gaussian norm has r_P ≤ m + σ z_P, so ln r grows at
/// most like ln z and the fitted slope s of ln r against ln z is at most about
/// one; heavier tails give s > 1. The exponent 2/s estimates γ in
/// −ln P ≍ r^γ. β is the empirical constant 1/(2σ̂²) with σ̂ the tail slope
/// dr/dz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailReport {
    pub n: usize,
    /// Order statistics used in the fit.
    pub tail_points: usize,
    pub exponent: f64,
    /// Empirical, not a proven constant.
    pub beta: f64,
    pub verdict: TailVerdict,
}

/// Fewest exceedances at the far end of the fit.
pub const TAIL_MIN_EXCEEDANCES: usize = 30;
/// The fit spans tail probabilities from `TAIL_MIN_EXCEEDANCES/n` up to this.
pub const TAIL_MAX_PROBABILITY: f64 = 0.1;

pub fn gaussian_tail_diagnostic(norms: &[f64], tolerance: f64) -> TailReport {
    let n = norms.len();
    let mut s: Vec<f64> = norms.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let degenerate = n > 0 && (s[0] - s[n - 1]).abs() <= 1e-12 * s[0].abs().max(1e-300);
    if degenerate {
        return TailReport { n, tail_points: 0, exponent: f64::INFINITY, beta: f64::INFINITY, verdict: TailVerdict::Degenerate };
    }
    let hi = (TAIL_MAX_PROBABILITY * n as f64) as usize;
    if hi < 4 * TAIL_MIN_EXCEEDANCES {
        return TailReport { n, tail_points: 0, exponent: f64::NAN, beta: f64::NAN, verdict: TailVerdict::Inconclusive };
    }
    let mut ks: Vec<usize> = quad::log_space(TAIL_MIN_EXCEEDANCES as f64, hi as f64, 40).into_iter().map(|k| k as usize).collect();
    ks.dedup();
    let normal = Normal::standard();
    let (mut lz, mut lr, mut zs, mut rs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &k in &ks {
        let p = k as f64 / n as f64;
        let z = normal.inverse_cdf(1.0 - p);
        let r = s[k - 1];
        if r > 0.0 && z > 0.0 {
            lz.push(z.ln());
            lr.push(r.ln());
            zs.push(z);
            rs.push(r);
        }
    }
    if lz.len() < 8 {
        return TailReport { n, tail_points: lz.len(), exponent: f64::NAN, beta: f64::NAN, verdict: TailVerdict::Inconclusive };
    }
    let (slope, _) = quad::linear_fit(&lz, &lr);
    let (sigma, _) = quad::linear_fit(&zs, &rs);
    let exponent = if slope > 0.0 { 2.0 / slope } else { f64::INFINITY };
    let verdict = if exponent >= 2.0 - tolerance { TailVerdict::Gaussian } else { TailVerdict::Heavier };
    TailReport { n, tail_points: lz.len(), exponent, beta: 1.0 / (2.0 * sigma * sigma), verdict }
}
