//! Domains, the boundary distance ρ, the weight w_{θ,δ} and quadrature grids.

use crate::error::{param, Error, Result};
use crate::quad;
use std::fmt;
use std::sync::Arc;

/// Signed distance oracle: positive inside, zero on the boundary.
pub type DistanceOracle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A pre-discretized piece of boundary surface.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPatch {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

#[derive(Clone)]
pub struct GenericDomain {
    pub name: String,
    pub dim: usize,
    pub distance: DistanceOracle,
    pub patches: Vec<BoundaryPatch>,
}

#[derive(Clone)]
pub enum Domain {
    Interval01,
    HalfLine,
    /// `{x ∈ ℝ^d : x₁ > 0}`.
    HalfSpace(usize),
    /// Open unit ball in ℝ^d, `d ≥ 2`.
    UnitBall(usize),
    GenericSigned(GenericDomain),
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Interval01 => write!(f, "Interval01"),
            Domain::HalfLine => write!(f, "HalfLine"),
            Domain::HalfSpace(d) => write!(f, "HalfSpace({d})"),
            Domain::UnitBall(d) => write!(f, "UnitBall({d})"),
            Domain::GenericSigned(g) => write!(f, "GenericSigned({})", g.name),
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;

    /// Accepts `Interval01`, `HalfLine`, `HalfSpace(d)`, `UnitBall(d)`, case-insensitive,
    /// with `_` ignored.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.trim().chars().filter(|c| *c != '_' && !c.is_whitespace()).collect::<String>().to_lowercase();
        let dim = |prefix: &str| -> Option<usize> { key.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?.parse().ok() };
        match key.as_str() {
            "interval01" | "interval" => Ok(Domain::Interval01),
            "halfline" => Ok(Domain::HalfLine),
            _ => {
                if let Some(d) = dim("halfspace") {
                    Domain::half_space(d)
                } else if let Some(d) = dim("unitball") {
                    Domain::unit_ball(d)
                } else {
                    Err(param("domain", format!("unknown domain `{s}`")))
                }
            }
        }
    }
}

impl Domain {
    pub fn unit_ball(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(param("d", "unit ball needs dimension at least 2"));
        }
        Ok(Domain::UnitBall(d))
    }

    pub fn half_space(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(param("d", "dimension must be positive"));
        }
        Ok(Domain::HalfSpace(d))
    }

    pub fn dimension(&self) -> usize {
        match self {
            Domain::Interval01 | Domain::HalfLine => 1,
            Domain::HalfSpace(d) | Domain::UnitBall(d) => *d,
            Domain::GenericSigned(g) => g.dim,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Domain::Interval01 | Domain::UnitBall(_))
    }

    fn outside(&self, x: &[f64]) -> Error {
        Error::OutsideDomain {
            domain: self.to_string(),
            point: x.to_vec(),
        }
    }

    /// ρ(x) = dist(x, ∂O) for `x` in the closed domain.
    pub fn distance_to_boundary(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(param(
                "x",
                format!("expected {} coordinates, got {}", self.dimension(), x.len()),
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(self.outside(x));
        }
        let r = match self {
            Domain::Interval01 => x[0].min(1.0 - x[0]),
            Domain::HalfLine | Domain::HalfSpace(_) => x[0],
            Domain::UnitBall(_) => 1.0 - norm(x),
            Domain::GenericSigned(g) => (g.distance)(x),
        };
        if r < 0.0 {
            return Err(self.outside(x));
        }
        Ok(r)
    }

    /// Unchecked ρ for points known to be interior.
    pub(crate) fn rho(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Interval01 => x[0].min(1.0 - x[0]),
            Domain::HalfLine | Domain::HalfSpace(_) => x[0],
            Domain::UnitBall(_) => 1.0 - norm(x),
            Domain::GenericSigned(g) => (g.distance)(x),
        }
    }

    /// w_{θ,δ}(x) = min(ρ(x)^θ, (1+|x|²)^{-δ}).
    pub fn weight(&self, x: &[f64], params: &WeightedSpaceParams) -> Result<f64> {
        let r = self.distance_to_boundary(x)?;
        Ok(params.weight_at(r, norm2(x)))
    }

    /// Surface quadrature on ∂O.
    pub fn boundary_quadrature(&self, level: u32) -> Result<QuadratureGrid> {
        match self {
            Domain::Interval01 => Ok(QuadratureGrid::new(
                1,
                vec![0.0, 1.0],
                vec![1.0, 1.0],
                level,
                0.0,
            )),
            Domain::HalfLine | Domain::HalfSpace(1) => {
                Ok(QuadratureGrid::new(1, vec![0.0], vec![1.0], level, 0.0))
            }
            Domain::HalfSpace(d) => {
                let r = truncation_radius(1.0, 1.0);
                let n = 1usize << level;
                let h = 2.0 * r / n as f64;
                let line: Vec<(f64, f64)> =
                    (0..n).map(|i| (-r + (i as f64 + 0.5) * h, h)).collect();
                let mut coords = Vec::new();
                let mut weights = Vec::new();
                let m = d - 1;
                let total = line.len().pow(m as u32);
                for idx in 0..total {
                    let mut k = idx;
                    let mut w = 1.0;
                    coords.push(0.0);
                    for _ in 0..m {
                        let (y, wy) = line[k % line.len()];
                        k /= line.len();
                        coords.push(y);
                        w *= wy;
                    }
                    weights.push(w);
                }
                Ok(QuadratureGrid::new(
                    *d,
                    coords,
                    weights,
                    level,
                    GAUSSIAN_TAIL_TOL,
                ))
            }
            Domain::UnitBall(2) => {
                let n = 1usize << level;
                let h = 2.0 * std::f64::consts::PI / n as f64;
                let mut coords = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let a = i as f64 * h;
                    coords.extend([a.cos(), a.sin()]);
                }
                Ok(QuadratureGrid::new(2, coords, vec![h; n], level, 0.0))
            }
            Domain::UnitBall(3) => {
                let na = 1usize << level;
                let nz = (na / 2).max(1);
                let rule = quad::gauss_legendre(nz);
                let h = 2.0 * std::f64::consts::PI / na as f64;
                let mut coords = Vec::new();
                let mut weights = Vec::new();
                for (z, wz) in rule.nodes.iter().zip(&rule.weights) {
                    let s = (1.0 - z * z).sqrt();
                    for i in 0..na {
                        let a = i as f64 * h;
                        coords.extend([s * a.cos(), s * a.sin(), *z]);
                        weights.push(wz * h);
                    }
                }
                Ok(QuadratureGrid::new(3, coords, weights, level, 0.0))
            }
            Domain::GenericSigned(g) if !g.patches.is_empty() => {
                let mut coords = Vec::new();
                let mut weights = Vec::new();
                for p in &g.patches {
                    for (x, w) in p.nodes.iter().zip(&p.weights) {
                        coords.extend_from_slice(x);
                        weights.push(*w);
                    }
                }
                Ok(QuadratureGrid::new(g.dim, coords, weights, level, 0.0))
            }
            _ => Err(Error::Unsupported {
                domain: self.to_string(),
                operation: "boundary quadrature",
            }),
        }
    }

    /// Interior quadrature grid; graded requests cluster nodes at ∂O with ratio 2.
    pub fn interior_grid(&self, spec: &GridSpec) -> Result<QuadratureGrid> {
        match (self, spec) {
            (Domain::Interval01, GridSpec::Uniform { n }) => {
                let h = 1.0 / *n as f64;
                let xs = (0..*n).map(|i| (i as f64 + 0.5) * h).collect();
                Ok(QuadratureGrid::new(1, xs, vec![h; *n], *n as u32, 0.0))
            }
            (Domain::Interval01, GridSpec::Graded { depth, order, .. }) => {
                let (xs, ws) = mirrored_interval(*depth, *order, f64::INFINITY);
                let tol = 0.5f64.powi(*depth as i32);
                Ok(QuadratureGrid::new(1, xs, ws, *depth as u32, tol))
            }
            (Domain::HalfLine, GridSpec::Uniform { n }) => {
                let r = truncation_radius(1.0, 1.0);
                let h = r / *n as f64;
                let xs = (0..*n).map(|i| (i as f64 + 0.5) * h).collect();
                Ok(QuadratureGrid::new(1, xs, vec![h; *n], *n as u32, GAUSSIAN_TAIL_TOL))
            }
            (Domain::HalfLine, GridSpec::Graded { depth, order, cutoff }) => {
                let (xs, ws) = half_line_nodes(*depth, *order, cutoff.unwrap_or(truncation_radius(1.0, 1.0)));
                let tol = 0.5f64.powi(*depth as i32);
                Ok(QuadratureGrid::new(1, xs, ws, *depth as u32, tol))
            }
            (Domain::HalfSpace(1), _) => Domain::HalfLine.interior_grid(spec),
            (Domain::HalfSpace(2), GridSpec::Graded { depth, order, cutoff }) => {
                let r = cutoff.unwrap_or(truncation_radius(1.0, 1.0));
                let (x0, w0) = half_line_nodes(*depth, *order, r);
                let (x1, w1) = quad::panel_nodes(&symmetric_edges(r, *depth), *order);
                let mut coords = Vec::new();
                let mut ws = Vec::new();
                for (a, wa) in x0.iter().zip(&w0) {
                    for (b, wb) in x1.iter().zip(&w1) {
                        coords.extend([*a, *b]);
                        ws.push(wa * wb);
                    }
                }
                Ok(QuadratureGrid::new(2, coords, ws, *depth as u32, 0.5f64.powi(*depth as i32)))
            }
            (Domain::UnitBall(2), GridSpec::Graded { depth, order, .. }) => {
                let (rho, wr) = quad::panel_nodes(&quad::dyadic_edges(1.0, *depth), *order);
                let na = 4 * (*depth).max(2);
                let h = 2.0 * std::f64::consts::PI / na as f64;
                let mut coords = Vec::new();
                let mut ws = Vec::new();
                for (d, w) in rho.iter().zip(&wr) {
                    let r = 1.0 - d;
                    for i in 0..na {
                        let a = i as f64 * h;
                        coords.extend([r * a.cos(), r * a.sin()]);
                        ws.push(w * r * h);
                    }
                }
                Ok(QuadratureGrid::new(2, coords, ws, *depth as u32, 0.5f64.powi(*depth as i32)))
            }
            _ => Err(Error::Unsupported {
                domain: self.to_string(),
                operation: "interior grid",
            }),
        }
    }
}

/// Deepest grading at x = 1 for which 1 − x is still resolved to about 1%.
pub const RIGHT_END_DEPTH: usize = 44;

/// Dyadic rule on [0, 1/2] mirrored onto [1/2, 1]; the right half is graded
/// to at most [`RIGHT_END_DEPTH`].
fn mirrored_interval(depth: usize, order: usize, max_panel: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut xs, mut ws) = quad::panel_nodes(&refine_edges(&quad::dyadic_edges(0.5, depth), max_panel), order);
    let (rx, rw) = quad::panel_nodes(&refine_edges(&quad::dyadic_edges(0.5, depth.min(RIGHT_END_DEPTH)), max_panel), order);
    for i in (0..rx.len()).rev() {
        xs.push(1.0 - rx[i]);
        ws.push(rw[i]);
    }
    (xs, ws)
}

/// Split every panel wider than `max_panel` into equal pieces.
pub(crate) fn refine_edges(edges: &[f64], max_panel: f64) -> Vec<f64> {
    let mut out = vec![edges[0]];
    for w in edges.windows(2) {
        let k = ((w[1] - w[0]) / max_panel).ceil().max(1.0) as usize;
        for i in 1..=k {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / k as f64);
        }
    }
    out
}

impl Domain {
    /// One-dimensional graded grid whose panels are also capped at `max_panel`,
    /// so that Gaussians of width about `max_panel` are resolved everywhere.
    pub fn refined_line_grid(&self, depth: usize, order: usize, max_panel: f64, cutoff: Option<f64>) -> Result<QuadratureGrid> {
        let tol = 0.5f64.powi(depth as i32);
        match self {
            Domain::Interval01 => {
                let (xs, ws) = mirrored_interval(depth, order, max_panel);
                Ok(QuadratureGrid::new(1, xs, ws, depth as u32, tol))
            }
            Domain::HalfLine | Domain::HalfSpace(1) => {
                let r = cutoff.unwrap_or(truncation_radius(1.0, 1.0));
                let mut edges = quad::dyadic_edges(1.0f64.min(r), depth);
                if r > 1.0 {
                    edges.extend(quad::geometric_edges(1.0, r, 2.0).into_iter().skip(1));
                }
                let (xs, ws) = quad::panel_nodes(&refine_edges(&edges, max_panel), order);
                Ok(QuadratureGrid::new(1, xs, ws, depth as u32, tol))
            }
            _ => Err(Error::Unsupported {
                domain: self.to_string(),
                operation: "one-dimensional grid",
            }),
        }
    }
}

/// Graded rule on [0, r]: dyadic toward 0 inside [0, 1], doubling panels beyond.
pub(crate) fn half_line_nodes(depth: usize, order: usize, r: f64) -> (Vec<f64>, Vec<f64>) {
    let mut edges = quad::dyadic_edges(1.0f64.min(r), depth);
    if r > 1.0 {
        edges.extend(quad::geometric_edges(1.0, r, 2.0).into_iter().skip(1));
    }
    quad::panel_nodes(&edges, order)
}

fn symmetric_edges(r: f64, depth: usize) -> Vec<f64> {
    let n = (4 * depth).max(8);
    (0..=n).map(|i| -r + 2.0 * r * i as f64 / n as f64).collect()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    norm2(x).sqrt()
}

/// Target size of the neglected Gaussian factor at truncation.
pub const GAUSSIAN_TAIL_TOL: f64 = 1e-12;

/// Radius `R` with `exp(-R²/(2 c t_max)) = 10⁻¹²`.
pub fn truncation_radius(c: f64, t_max: f64) -> f64 {
    (2.0 * c * t_max * (1.0 / GAUSSIAN_TAIL_TOL).ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightedSpaceParams {
    pub p: f64,
    pub theta: f64,
    pub delta: f64,
    /// Whether θ < 2p − 1, the condition for extending the heat semigroup.
    pub extension_admissible: bool,
}

impl WeightedSpaceParams {
    pub fn new(p: f64, theta: f64, delta: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(param("p", format!("must exceed 1, got {p}")));
        }
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(param("theta", format!("must be nonnegative, got {theta}")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(param("delta", format!("must be nonnegative, got {delta}")));
        }
        Ok(Self {
            p,
            theta,
            delta,
            extension_admissible: theta < 2.0 * p - 1.0,
        })
    }

    /// The weight as a function of ρ and |x|².
    pub fn weight_at(&self, rho: f64, x_norm2: f64) -> f64 {
        let w1 = if self.theta == 0.0 { 1.0 } else { rho.powf(self.theta) };
        let w2 = if self.delta == 0.0 {
            1.0
        } else {
            (1.0 + x_norm2).powf(-self.delta)
        };
        w1.min(w2)
    }

    /// Same (p, δ) with a different θ.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.p, theta, self.delta)
    }
}

/// Interior grid request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    /// Midpoint rule with `n` cells (half-line truncated at the default radius).
    Uniform { n: usize },
    /// Dyadic panels toward ∂O with an `order`-point rule on each.
    Graded {
        depth: usize,
        order: usize,
        cutoff: Option<f64>,
    },
}

impl GridSpec {
    pub fn graded(depth: usize) -> Self {
        GridSpec::Graded {
            depth,
            order: 6,
            cutoff: None,
        }
    }
}

/// Nodes and positive weights approximating a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub dim: usize,
    coords: Vec<f64>,
    pub weights: Vec<f64>,
    pub level: u32,
    /// Recorded bound on the error of Σ weights against the covered measure.
    pub tolerance: f64,
}

impl QuadratureGrid {
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>, level: u32, tolerance: f64) -> Self {
        assert_eq!(coords.len(), dim * weights.len(), "coordinate/weight length mismatch");
        Self {
            dim,
            coords,
            weights,
            level,
            tolerance,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    /// First coordinate of each node (the whole point in one dimension).
    pub fn first_coords(&self) -> Vec<f64> {
        self.nodes().map(|x| x[0]).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.nodes().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// Columnar text: a header, then one node per line (coordinates, weight).
    pub fn to_columnar(&self) -> String {
        let mut s = String::from("#");
        for k in 0..self.dim {
            s.push_str(&format!(" x{k}"));
        }
        s.push_str(" weight\n");
        for (x, w) in self.nodes().zip(&self.weights) {
            let cols: Vec<String> = x.iter().chain(std::iter::once(w)).map(|v| format!("{v:.17e}")).collect();
            s.push_str(&cols.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_columnar(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: i + 1, reason: e.to_string() })?;
            let d = vals.len().checked_sub(1).filter(|d| *d > 0).ok_or(Error::Parse {
                line: i + 1,
                reason: "need coordinates and a weight".into(),
            })?;
            if *dim.get_or_insert(d) != d {
                return Err(Error::Parse { line: i + 1, reason: "ragged row".into() });
            }
            coords.extend_from_slice(&vals[..d]);
            weights.push(vals[d]);
        }
        let dim = dim.ok_or(Error::Parse { line: 0, reason: "no nodes".into() })?;
        Ok(Self::new(dim, coords, weights, 0, 0.0))
    }
}
