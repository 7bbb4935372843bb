//! 𝒥_{T,α} = ∫_O [Σ_k ∫₀ᵀ t^{-α} ψ_k(t,x)² dt]^{p/2} w_{θ,δ}(x) dx and the
//! variance field σ²(t,x) = Σ_k ∫₀ᵗ ψ_k(s,x)² ds.

use super::predict::{predict_wellposedness, PredictedVerdict, Prediction};
use super::propagators::SquareSum;
use super::ConvolutionSetup;
use crate::error::{param, Error, Result};
use crate::geometry::{half_line_nodes, Domain, QuadratureGrid, WeightedSpaceParams};
use crate::kernels::KernelHandle;
use crate::quad;
use crate::report::{EstimateReport, Verdict};
use crate::semigroup::{extension_bound, Field};
use rayon::prelude::*;
use statrs::function::beta::{beta, beta_reg};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::fmt;

/// Number of simultaneous refinements of the outer grading and the time rule.
pub const J_LEVELS: usize = 3;
/// Relative change on the last refinement below which J counts as converged.
pub const J_CAUCHY_TOL: f64 = 0.01;
/// Growth factor per refinement that counts as divergence.
pub const J_GROWTH: f64 = 2.0;
/// Panels start at this multiple of ρ², where e^{−ρ²/(ct)} is below 1e-100.
const EARLY_TIME: f64 = 1e-3;
/// Horizon standing in for T = ∞ on the interval, where Σψ² ≤ C e^{−2π²t}.
const INTERVAL_LONG_TIME: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JVerdict {
    Finite,
    Divergent,
    Inconclusive,
}

impl fmt::Display for JVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JVerdict::Finite => "finite",
            JVerdict::Divergent => "divergent",
            JVerdict::Inconclusive => "inconclusive",
        })
    }
}

/// J on one refinement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JLevel {
    /// Dyadic grading depth toward ∂O.
    pub depth: usize,
    /// Gauss–Legendre order of each time panel.
    pub time_order: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JReport {
    pub levels: Vec<JLevel>,
    /// Verdict of the refinement trace of J alone.
    pub j_verdict: JVerdict,
    /// Extension check of the heat semigroup in L^p_{θ,δ}, run when J is finite.
    pub extension: Option<EstimateReport>,
    /// Combined verdict: finite only if J is finite and the semigroup extends.
    pub verdict: JVerdict,
    pub prediction: Prediction,
    /// Whether `verdict` matches the prediction; `None` without a prediction.
    pub agreement: Option<bool>,
    /// How the mode sum was truncated.
    pub truncation: String,
}

impl JReport {
    pub fn value(&self) -> f64 {
        self.levels.last().map_or(f64::NAN, |l| l.value)
    }

    pub fn to_record(&self) -> String {
        let mut s = String::new();
        s.push_str("level\tdepth\ttime_order\tJ\n");
        for (i, l) in self.levels.iter().enumerate() {
            s.push_str(&format!("{i}\t{}\t{}\t{:.12e}\n", l.depth, l.time_order, l.value));
        }
        s.push_str(&format!("# j_verdict {}\n", self.j_verdict));
        if let Some(e) = &self.extension {
            s.push_str(&format!("# extension {} {:?}\n", e.verdict, e.trace));
        }
        s.push_str(&format!("# verdict {}\n", self.verdict));
        if let Some((lo, hi)) = self.prediction.theta_range {
            s.push_str(&format!("# predicted_range ({lo}, {hi})\n"));
        }
        s.push_str(&format!("# predicted {:?}\n", self.prediction.verdict));
        s.push_str(&format!("# agreement {}\n", self.agreement.map_or("n/a".to_string(), |a| a.to_string())));
        s.push_str(&format!("# truncation {}\n", self.truncation));
        s
    }
}

fn classify_j(values: &[f64]) -> JVerdict {
    let n = values.len();
    if n < 2 {
        return JVerdict::Inconclusive;
    }
    if values.iter().any(|v| v.is_infinite()) {
        return JVerdict::Divergent;
    }
    if values.iter().any(|v| v.is_nan()) {
        return JVerdict::Inconclusive;
    }
    let (prev, last) = (values[n - 2], values[n - 1]);
    if last == 0.0 && prev == 0.0 {
        return JVerdict::Finite;
    }
    if (last - prev).abs() < J_CAUCHY_TOL * prev.abs() {
        return JVerdict::Finite;
    }
    if values.windows(2).all(|w| w[0] > 0.0 && w[1] > J_GROWTH * w[0]) {
        return JVerdict::Divergent;
    }
    JVerdict::Inconclusive
}

/// An outer node: distances `(a, b)` as in [`SquareSum::spatial`] and the
/// weight w_{θ,δ}(x)·dx (times any tangential or angular integral).
type OuterNode = (f64, f64, f64);

/// ∫_{ℝ^m} min(x₀^θ, (1+x₀²+|y|²)^{−δ}) dy; infinite for δ ≤ m/2.
fn tangential_weight(x0: f64, m: usize, params: &WeightedSpaceParams) -> f64 {
    let mf = m as f64;
    let (theta, delta) = (params.theta, params.delta);
    if delta <= mf / 2.0 {
        return f64::INFINITY;
    }
    let sphere = 2.0 * PI.powf(mf / 2.0) / gamma(mf / 2.0);
    let a = 1.0 + x0 * x0;
    let cap = if theta == 0.0 { 1.0 } else { x0.powf(theta) };
    // (a + y²)^{−δ} ≤ cap ⟺ y² ≥ cap^{−1/δ} − a
    let y2 = (cap.powf(-1.0 / delta) - a).max(0.0);
    let s2 = y2 / a;
    let z = 1.0 / (1.0 + s2);
    let (pa, pb) = (delta - mf / 2.0, mf / 2.0);
    let tail = if z >= 1.0 { beta(pa, pb) } else { beta_reg(pa, pb, z) * beta(pa, pb) };
    sphere * (cap * y2.powf(mf / 2.0) / mf + a.powf(mf / 2.0 - delta) * 0.5 * tail)
}

fn outer_nodes(setup: &ConvolutionSetup, depth: usize, order: usize, x_max: f64) -> Result<Vec<OuterNode>> {
    let params = &setup.params;
    Ok(match &setup.domain {
        Domain::Interval01 => {
            let (us, ws) = quad::panel_nodes(&quad::dyadic_edges(0.5, depth), order);
            let mut nodes = Vec::with_capacity(2 * us.len());
            for (u, w) in us.iter().zip(&ws) {
                nodes.push((*u, 1.0 - u, w * params.weight_at(*u, u * u)));
                nodes.push((1.0 - u, *u, w * params.weight_at(*u, (1.0 - u) * (1.0 - u))));
            }
            nodes
        }
        Domain::HalfLine => {
            let (xs, ws) = half_line_nodes(depth, order, x_max);
            xs.iter().zip(&ws).map(|(x, w)| (*x, f64::INFINITY, w * params.weight_at(*x, x * x))).collect()
        }
        Domain::HalfSpace(d) => {
            let (xs, ws) = half_line_nodes(depth, order, x_max);
            xs.iter().zip(&ws).map(|(x, w)| (*x, f64::INFINITY, w * tangential_weight(*x, d - 1, params))).collect()
        }
        Domain::UnitBall(2) => {
            let (rs, ws) = quad::panel_nodes(&quad::dyadic_edges(1.0, depth), order);
            rs.iter()
                .zip(&ws)
                .map(|(r, w)| (*r, f64::INFINITY, w * 2.0 * PI * (1.0 - r) * params.weight_at(*r, (1.0 - r) * (1.0 - r))))
                .collect()
        }
        d => return Err(Error::Unsupported { domain: d.to_string(), operation: "J-integral outer quadrature" }),
    })
}

/// Upper end of the time integral, or the closed-form long-time variance on the half-line.
enum Horizon {
    Finite(f64),
    HalfLineClosedForm,
}

fn horizon(setup: &ConvolutionSetup, t: f64) -> Result<Horizon> {
    if t.is_finite() {
        return Ok(Horizon::Finite(t));
    }
    match setup.domain {
        Domain::Interval01 => Ok(Horizon::Finite(INTERVAL_LONG_TIME)),
        Domain::HalfLine => Ok(Horizon::HalfLineClosedForm),
        ref d => Err(Error::Unsupported { domain: d.to_string(), operation: "infinite horizon" }),
    }
}

/// ∫₀^∞ t^{−α} φ(t,x)² dt = Γ(2+α) 2^{2+α} / (4π) · x^{−2−2α} for the half-line flux φ.
fn half_line_long_time(x: f64, alpha: f64) -> f64 {
    gamma(2.0 + alpha) * 2f64.powf(2.0 + alpha) / (4.0 * PI) * x.powf(-2.0 - 2.0 * alpha)
}

fn line_mass(sq: &SquareSum) -> f64 {
    match sq {
        SquareSum::Line { modes, .. } => modes.iter().map(|m| m.iter().map(|&(_, v)| v).sum::<f64>().powi(2)).sum(),
        _ => f64::NAN,
    }
}

/// Time nodes, weights and the factor(t) of the square sum.
struct TimeRule {
    ts: Vec<f64>,
    ws: Vec<f64>,
    factors: Vec<f64>,
    order: usize,
}

impl TimeRule {
    fn new(sq: &SquareSum, lo: f64, hi: f64, order: usize, alpha: f64) -> Self {
        let lo = lo.min(0.5 * hi);
        let (ts, ws) = quad::panel_nodes(&quad::geometric_edges(lo, hi, 2.0), order);
        let factors = ts.iter().map(|&t| sq.factor(t) * t.powf(-alpha)).collect();
        TimeRule { ts, ws, factors, order }
    }

    /// ∫ t^{−α} Σψ² dt, skipping panels where e^{−ρ²/(ct)} vanishes.
    fn integrate(&self, sq: &SquareSum, a: f64, b: f64) -> f64 {
        let near = a.min(b);
        let skip = EARLY_TIME * near * near;
        let mut s = 0.0;
        for (panel, chunk) in self.ts.chunks(self.order).enumerate() {
            if chunk[self.order - 1] < skip {
                continue;
            }
            let base = panel * self.order;
            for (i, &t) in chunk.iter().enumerate() {
                s += self.ws[base + i] * self.factors[base + i] * sq.spatial(t, a, b);
            }
        }
        s
    }
}

fn j_level(setup: &ConvolutionSetup, sq: &SquareSum, depth: usize, time_order: usize) -> Result<f64> {
    let p = setup.params.p;
    let hz = horizon(setup, setup.horizon)?;
    let x_max = match hz {
        Horizon::Finite(t) => 12.0 * t.sqrt(),
        Horizon::HalfLineClosedForm => 1e8,
    };
    let nodes = outer_nodes(setup, depth, 6, x_max)?;
    if nodes.iter().any(|n| n.2.is_infinite()) {
        return Ok(f64::INFINITY);
    }
    let j = match hz {
        Horizon::HalfLineClosedForm => {
            let mass = line_mass(sq);
            nodes.iter().map(|&(a, _, w)| w * (mass * half_line_long_time(a, setup.alpha)).powf(p / 2.0)).sum()
        }
        Horizon::Finite(t) => {
            let a_min = nodes.iter().map(|n| n.0.min(n.1)).fold(f64::INFINITY, f64::min);
            let rule = TimeRule::new(sq, EARLY_TIME * a_min * a_min, t, time_order, setup.alpha);
            nodes.par_iter().map(|&(a, b, w)| w * rule.integrate(sq, a, b).powf(p / 2.0)).sum()
        }
    };
    Ok(j)
}

fn extension_check(setup: &ConvolutionSetup) -> Result<EstimateReport> {
    let kernel = match setup.domain {
        Domain::Interval01 => KernelHandle::exact(Domain::Interval01)?,
        _ => KernelHandle::exact(Domain::HalfLine)?,
    };
    extension_bound(&kernel, &setup.params, &quad::log_space(1e-3, 1.0, 5), 3)
}

fn truncation_label(sq: &SquareSum) -> String {
    match sq {
        SquareSum::Line { modes, .. } => format!("all {} modes", modes.len()),
        SquareSum::HalfSpace { .. } => "all modes, through the smoothed spectral variance".into(),
        SquareSum::DiskClosure { .. } => "all modes, through Parseval on the circle".into(),
        SquareSum::DiskSup { .. } => "all declared modes, bounded through their sup norms".into(),
    }
}

/// 𝒥_{T,α} on three simultaneous refinements, with the extension check and
/// the catalogued prediction.
pub fn j_integral(setup: &ConvolutionSetup) -> Result<JReport> {
    let prediction = predict_wellposedness(setup);
    let sq = SquareSum::from_setup(setup)?;
    let mut levels = Vec::with_capacity(J_LEVELS);
    for l in 0..J_LEVELS {
        let depth = 20 << l;
        let time_order = 6 + 2 * l;
        let value = if sq.is_zero() { 0.0 } else { j_level(setup, &sq, depth, time_order)? };
        levels.push(JLevel { depth, time_order, value });
    }
    let values: Vec<f64> = levels.iter().map(|l| l.value).collect();
    let j_verdict = classify_j(&values);
    let (extension, verdict) = if j_verdict == JVerdict::Finite {
        let ext = extension_check(setup)?;
        let v = match ext.verdict {
            Verdict::Bounded => JVerdict::Finite,
            Verdict::Diverging => JVerdict::Divergent,
            Verdict::Inconclusive => JVerdict::Inconclusive,
        };
        (Some(ext), v)
    } else {
        (None, j_verdict)
    };
    let agreement = match &prediction.verdict {
        PredictedVerdict::Finite => Some(verdict == JVerdict::Finite),
        PredictedVerdict::Divergent => Some(verdict == JVerdict::Divergent),
        PredictedVerdict::NoPrediction(_) | PredictedVerdict::Rejected(_) => None,
    };
    Ok(JReport { levels, j_verdict, extension, verdict, prediction, agreement, truncation: truncation_label(&sq) })
}

fn distances(domain: &Domain, x: &[f64]) -> Result<(f64, f64)> {
    let rho = domain.distance_to_boundary(x)?;
    Ok(match domain {
        Domain::Interval01 => (x[0], 1.0 - x[0]),
        Domain::HalfLine | Domain::HalfSpace(_) => (x[0], f64::INFINITY),
        _ => (rho, f64::INFINITY),
    })
}

/// σ²(t,x) = Σ_k ∫₀ᵗ ψ_k(s,x)² ds; `t = ∞` gives the long-time variance on the
/// interval and the half-line.
pub fn variance_at(setup: &ConvolutionSetup, t: f64, x: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(param("t", format!("must be positive, got {t}")));
    }
    let sq = SquareSum::from_setup(setup)?;
    variance_with(setup, &sq, t, x)
}

pub(crate) fn variance_with(setup: &ConvolutionSetup, sq: &SquareSum, t: f64, x: &[f64]) -> Result<f64> {
    let (a, b) = distances(&setup.domain, x)?;
    if sq.is_zero() {
        return Ok(0.0);
    }
    if a.min(b) == 0.0 {
        return Ok(f64::INFINITY);
    }
    match horizon(setup, t)? {
        Horizon::HalfLineClosedForm => Ok(line_mass(sq) * half_line_long_time(a, 0.0)),
        Horizon::Finite(t) => {
            let near = a.min(b);
            let rule = TimeRule::new(sq, EARLY_TIME * near * near, t, 12, 0.0);
            Ok(rule.integrate(sq, a, b))
        }
    }
}

/// σ²(t,·) on the nodes of `grid`.
pub fn variance_field(setup: &ConvolutionSetup, t: f64, grid: &QuadratureGrid) -> Result<Field> {
    if !(t > 0.0) {
        return Err(param("t", format!("must be positive, got {t}")));
    }
    let sq = SquareSum::from_setup(setup)?;
    let values = grid
        .nodes()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|x| variance_with(setup, &sq, t, x))
        .collect::<Result<Vec<f64>>>()?;
    Field::new(setup.domain.clone(), grid.clone(), values, t)
}
