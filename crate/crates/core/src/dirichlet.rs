//! The Dirichlet map D_λ, the boundary propagator ψ_e(t,·) = −∫ ∂G/∂n e ds
//! and its Gaussian majorant.
//!
//! Normals point outward, so ∂G/∂n ≤ 0 on the boundary and ψ_e ≥ 0 for e ≥ 0.
//! The conormal n^a reduces to n because the operator is the Laplacian.

use crate::error::{param, Error, Result};
use crate::geometry::{Domain, QuadratureGrid};
use crate::kernels::{gauss, laplace_transform, KernelHandle};
use crate::quad;
use crate::report::EstimateReport;
use crate::semigroup::Field;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Points within this distance of ∂O count as boundary points.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Orthonormal families on ∂O for [`BoundaryData::BasisCoeffs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryBasis {
    /// χ_{0}, χ_{1} on the interval; χ_{0} on the half-line.
    Endpoints,
    /// 1/√(2π), cos(kφ)/√π, sin(kφ)/√π on the unit circle, in that order.
    CircleFourier,
}

impl BoundaryBasis {
    /// e_j at the boundary point `b`.
    pub fn eval(&self, j: usize, b: &[f64]) -> f64 {
        match self {
            BoundaryBasis::Endpoints => {
                let end = if j == 0 { 0.0 } else { 1.0 };
                if b[0] == end {
                    1.0
                } else {
                    0.0
                }
            }
            BoundaryBasis::CircleFourier => {
                if j == 0 {
                    return (2.0 * PI).sqrt().recip();
                }
                let phi = b[1].atan2(b[0]);
                let k = j.div_ceil(2) as f64;
                if j % 2 == 1 {
                    (k * phi).cos() / PI.sqrt()
                } else {
                    (k * phi).sin() / PI.sqrt()
                }
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            BoundaryBasis::Endpoints => "endpoints",
            BoundaryBasis::CircleFourier => "circle_fourier",
        }
    }

    fn check(&self, domain: &Domain, len: usize) -> Result<()> {
        let ok = match self {
            BoundaryBasis::Endpoints => match domain {
                Domain::Interval01 => len <= 2,
                Domain::HalfLine | Domain::HalfSpace(1) => len <= 1,
                _ => false,
            },
            BoundaryBasis::CircleFourier => matches!(domain, Domain::UnitBall(2)),
        };
        if ok {
            Ok(())
        } else {
            Err(param("basis", format!("{} with {len} coefficients is not a basis on ∂{domain}", self.name())))
        }
    }
}

/// Boundary datum γ (or noise mode e) on ∂O.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    /// Point values against counting measure; the natural form on one-dimensional domains.
    Atoms { points: Vec<Vec<f64>>, values: Vec<f64> },
    /// Values on the nodes of a boundary quadrature.
    Sampled { grid: QuadratureGrid, values: Vec<f64> },
    /// Finitely many coefficients against a declared basis; `level` selects
    /// the boundary rule used to integrate it.
    BasisCoeffs { basis: BoundaryBasis, coeffs: Vec<f64>, level: u32 },
}

impl BoundaryData {
    pub fn atoms(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(param("values", format!("{} values for {} atoms", values.len(), points.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(param("values", "non-finite atom value"));
        }
        Ok(BoundaryData::Atoms { points, values })
    }

    /// (γ₀, γ₁) at the ends of the unit interval.
    pub fn endpoints(g0: f64, g1: f64) -> Self {
        BoundaryData::Atoms { points: vec![vec![0.0], vec![1.0]], values: vec![g0, g1] }
    }

    /// A single atom of mass `value` at the origin of a half-line.
    pub fn origin(value: f64) -> Self {
        BoundaryData::Atoms { points: vec![vec![0.0]], values: vec![value] }
    }

    pub fn sampled(grid: QuadratureGrid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(param("values", format!("{} values for {} boundary nodes", values.len(), grid.len())));
        }
        Ok(BoundaryData::Sampled { grid, values })
    }

    /// The same datum multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            BoundaryData::Atoms { values, .. } | BoundaryData::Sampled { values, .. } => values.iter_mut().for_each(|v| *v *= a),
            BoundaryData::BasisCoeffs { coeffs, .. } => coeffs.iter_mut().for_each(|v| *v *= a),
        }
        out
    }

    /// Boundary points with weight × value, ready for surface sums.
    pub fn surface_terms(&self, domain: &Domain) -> Result<Vec<(Vec<f64>, f64)>> {
        let terms: Vec<(Vec<f64>, f64)> = match self {
            BoundaryData::Atoms { points, values } => points.iter().cloned().zip(values.iter().copied()).collect(),
            BoundaryData::Sampled { grid, values } => {
                grid.nodes().zip(&grid.weights).zip(values).map(|((b, w), v)| (b.to_vec(), w * v)).collect()
            }
            BoundaryData::BasisCoeffs { basis, coeffs, level } => {
                basis.check(domain, coeffs.len())?;
                let grid = match basis {
                    BoundaryBasis::Endpoints => domain.boundary_quadrature(0)?,
                    BoundaryBasis::CircleFourier => domain.boundary_quadrature(*level)?,
                };
                grid.nodes()
                    .zip(&grid.weights)
                    .map(|(b, w)| {
                        let v: f64 = coeffs.iter().enumerate().map(|(j, c)| c * basis.eval(j, b)).sum();
                        (b.to_vec(), w * v)
                    })
                    .collect()
            }
        };
        for (b, _) in &terms {
            if b.len() != domain.dimension() || domain.distance_to_boundary(b)? > BOUNDARY_TOL {
                return Err(param("gamma", format!("{b:?} is not a boundary point of {domain}")));
            }
        }
        Ok(terms)
    }

    /// γ(b), taking the nearest node for sampled data.
    pub fn value_at(&self, b: &[f64]) -> f64 {
        let d2 = |y: &[f64]| -> f64 { y.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum() };
        match self {
            BoundaryData::Atoms { points, values } => {
                points.iter().zip(values).filter(|(p, _)| p.as_slice() == b).map(|(_, v)| v).sum()
            }
            BoundaryData::Sampled { grid, values } => grid
                .nodes()
                .zip(values)
                .min_by(|a, c| d2(a.0).total_cmp(&d2(c.0)))
                .map_or(0.0, |(_, v)| *v),
            BoundaryData::BasisCoeffs { basis, coeffs, .. } => {
                coeffs.iter().enumerate().map(|(j, c)| c * basis.eval(j, b)).sum()
            }
        }
    }

    /// Text form read by [`BoundaryData::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self {
            BoundaryData::Atoms { points, values } => {
                s.push_str("atoms\n");
                for (p, v) in points.iter().zip(values) {
                    for c in p {
                        let _ = write!(s, "{c:e} ");
                    }
                    let _ = writeln!(s, "{v:e}");
                }
            }
            BoundaryData::Sampled { grid, values } => {
                let _ = writeln!(s, "sampled {} {}", grid.dim, grid.level);
                for ((b, w), v) in grid.nodes().zip(&grid.weights).zip(values) {
                    for c in b {
                        let _ = write!(s, "{c:e} ");
                    }
                    let _ = writeln!(s, "{w:e} {v:e}");
                }
            }
            BoundaryData::BasisCoeffs { basis, coeffs, level } => {
                let _ = writeln!(s, "basis {} {level}", basis.name());
                for c in coeffs {
                    let _ = writeln!(s, "{c:e}");
                }
            }
        }
        s
    }

    /// Reads a datum from text. `#` starts a comment. The header line is one of
    ///
    /// * `atoms`, then one `coords… value` line per atom;
    /// * `sampled <dim> <level>`, then one `coords… weight value` line per node;
    /// * `basis <endpoints|circle_fourier> <level>`, then one coefficient per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 0, reason: "empty input".into() })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let numbers = |line: usize, l: &str| -> Result<Vec<f64>> {
            l.split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|e| Error::Parse { line, reason: format!("`{w}`: {e}") }))
                .collect()
        };
        let bad = |line: usize, reason: String| Error::Parse { line, reason };
        match head.as_slice() {
            ["atoms"] => {
                let (mut points, mut values) = (Vec::new(), Vec::new());
                for (i, l) in lines {
                    let mut row = numbers(i, l)?;
                    if row.len() < 2 {
                        return Err(bad(i, "an atom needs coordinates and a value".into()));
                    }
                    values.push(row.pop().unwrap());
                    points.push(row);
                }
                Self::atoms(points, values)
            }
            ["sampled", dim, level] => {
                let dim: usize = dim.parse().map_err(|_| bad(hl, format!("bad dimension `{dim}`")))?;
                let level: u32 = level.parse().map_err(|_| bad(hl, format!("bad level `{level}`")))?;
                let (mut coords, mut weights, mut values) = (Vec::new(), Vec::new(), Vec::new());
                for (i, l) in lines {
                    let row = numbers(i, l)?;
                    if row.len() != dim + 2 {
                        return Err(bad(i, format!("expected {} columns, found {}", dim + 2, row.len())));
                    }
                    coords.extend_from_slice(&row[..dim]);
                    weights.push(row[dim]);
                    values.push(row[dim + 1]);
                }
                Self::sampled(QuadratureGrid::new(dim, coords, weights, level, 0.0), values)
            }
            ["basis", name, level] => {
                let basis = match *name {
                    "endpoints" => BoundaryBasis::Endpoints,
                    "circle_fourier" => BoundaryBasis::CircleFourier,
                    _ => return Err(bad(hl, format!("unknown basis `{name}`"))),
                };
                let level: u32 = level.parse().map_err(|_| bad(hl, format!("bad level `{level}`")))?;
                let mut coeffs = Vec::new();
                for (i, l) in lines {
                    let row = numbers(i, l)?;
                    if row.len() != 1 {
                        return Err(bad(i, "one coefficient per line".into()));
                    }
                    coeffs.push(row[0]);
                }
                Ok(BoundaryData::BasisCoeffs { basis, coeffs, level })
            }
            _ => Err(bad(hl, format!("unknown header `{header}`"))),
        }
    }
}

fn exact_kernel(domain: &Domain, op: &'static str) -> Result<KernelHandle> {
    KernelHandle::exact(domain.clone()).map_err(|_| Error::Unsupported { domain: domain.to_string(), operation: op })
}

/// u = D_λγ on the nodes of `grid`: the solution of Δu = λu with u = γ on ∂O.
///
/// Computed as Σ_b γ(b) ∫₀^∞ e^{−λt} (−∂G/∂n)(t,x,b) dt. Boundary nodes take γ directly.
pub fn dirichlet_map(domain: &Domain, lambda: f64, gamma: &BoundaryData, grid: &QuadratureGrid) -> Result<Field> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(param("lambda", format!("must be nonnegative, got {lambda}")));
    }
    if lambda == 0.0 && !domain.is_bounded() {
        return Err(param("lambda", format!("λ = 0 is not in the resolvent set on {domain}")));
    }
    let kernel = exact_kernel(domain, "Dirichlet map")?;
    let terms = gamma.surface_terms(domain)?;
    let gap = kernel.spectral_gap();
    let nodes: Vec<&[f64]> = grid.nodes().collect();
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|x| -> Result<f64> {
            if domain.distance_to_boundary(x)? == 0.0 {
                return Ok(gamma.value_at(x));
            }
            let mut u = 0.0;
            for (b, wv) in &terms {
                if *wv != 0.0 {
                    u += wv * laplace_transform(lambda, gap, |t| -kernel.normal_derivative(t, x, b).unwrap_or(0.0));
                }
            }
            Ok(u)
        })
        .collect::<Result<_>>()?;
    Field::new(domain.clone(), grid.clone(), values, 0.0)
}

/// Nodes h, 2h, … strictly inside a one-dimensional domain; the half-line is
/// cut at `extent`.
pub fn uniform_interior_grid(domain: &Domain, h: f64, extent: f64) -> Result<QuadratureGrid> {
    if !(h > 0.0) {
        return Err(param("h", "must be positive"));
    }
    let end = match domain {
        Domain::Interval01 => 1.0,
        Domain::HalfLine | Domain::HalfSpace(1) => extent,
        _ => return Err(Error::Unsupported { domain: domain.to_string(), operation: "uniform interior grid" }),
    };
    let n = (end / h).round() as usize;
    let coords: Vec<f64> = (1..n).map(|i| i as f64 * h).collect();
    let weights = vec![h; coords.len()];
    Ok(QuadratureGrid::new(1, coords, weights, 0, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicityReport {
    pub h: f64,
    /// max |Δ_h u − λu| over interior nodes.
    pub residual: f64,
    /// max |u(x) − γ(b(x))| over nodes within 1.5h of ∂O.
    pub boundary_error: f64,
}

/// Second-order finite-difference check of Δu = λu and of boundary recovery,
/// for a field on a uniform one-dimensional grid.
pub fn verify_harmonicity(field: &Field, lambda: f64, gamma: &BoundaryData) -> Result<HarmonicityReport> {
    let xs = field.grid.first_coords();
    if field.grid.dim != 1 || xs.len() < 3 {
        return Err(Error::Unsupported { domain: field.domain.to_string(), operation: "finite-difference harmonicity" });
    }
    let h = xs[1] - xs[0];
    if xs.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(param("field", "grid is not uniform"));
    }
    let u = &field.values;
    let residual = (1..u.len() - 1)
        .map(|i| ((u[i - 1] - 2.0 * u[i] + u[i + 1]) / (h * h) - lambda * u[i]).abs())
        .fold(0.0, f64::max);
    let mut boundary_error = 0.0f64;
    for (x, v) in xs.iter().zip(u) {
        let near = |b: f64| (x - b).abs() < 1.5 * h;
        let mut ends = vec![0.0];
        if field.domain.is_bounded() {
            ends.push(1.0);
        }
        for b in ends.into_iter().filter(|b| near(*b)) {
            boundary_error = boundary_error.max((v - gamma.value_at(&[b])).abs());
        }
    }
    Ok(HarmonicityReport { h, residual, boundary_error })
}

/// ψ_e(t,·) together with the datum and time that generated it.
#[derive(Debug, Clone)]
pub struct PropagatorField {
    pub field: Field,
    pub datum: BoundaryData,
    pub t: f64,
}

/// ψ_e(t,x) = −∫ ∂G/∂n(t,x,y) e(y) ds(y) = (λ−A)S(t)D_λe(x), for any λ.
pub fn boundary_propagator(kernel: &KernelHandle, t: f64, e: &BoundaryData, grid: &QuadratureGrid) -> Result<PropagatorField> {
    if !(t > 0.0) {
        return Err(param("t", format!("must be positive, got {t}")));
    }
    let terms = e.surface_terms(&kernel.domain)?;
    let nodes: Vec<&[f64]> = grid.nodes().collect();
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|x| -> Result<f64> {
            let mut s = 0.0;
            for (b, wv) in &terms {
                if *wv != 0.0 {
                    s -= wv * kernel.normal_derivative(t, x, b)?;
                }
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let field = Field::new(kernel.domain.clone(), grid.clone(), values, t)?;
    Ok(PropagatorField { field, datum: e.clone(), t })
}

/// (C/√t)·|∫ g_{ct}(x−y) e(y) ds(y)| at every node of `grid`, with the normalized
/// d-dimensional Gaussian g_{ct}.
pub fn propagator_majorant(domain: &Domain, t: f64, e: &BoundaryData, c: f64, constant: f64, grid: &QuadratureGrid) -> Result<Field> {
    if !(t > 0.0 && c > 0.0) {
        return Err(param("t", "t and c must be positive"));
    }
    let terms = e.surface_terms(domain)?;
    let d = domain.dimension();
    let values: Vec<f64> = grid
        .nodes()
        .map(|x| {
            let s: f64 = terms
                .iter()
                .map(|(b, wv)| {
                    let r2: f64 = x.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                    wv * gauss(c * t, r2, d)
                })
                .sum();
            constant / t.sqrt() * s.abs()
        })
        .collect();
    Field::new(domain.clone(), grid.clone(), values, t)
}

/// Relative slack applied to the fitted majorant constant, covering nodes not
/// seen by the fit.
pub const MAJORANT_FIT_SLACK: f64 = 1.01;

/// Fit of C in |ψ_e(t,x)| ≤ (C/√t)|∫ g_{ct}(x−y)e(y)ds(y)| over `t_grid` and the
/// nodes of `grid`. The trace is the per-t sup of the ratio with C = 1; the
/// constant `C` is its maximum times [`MAJORANT_FIT_SLACK`].
pub fn fit_majorant_constant(kernel: &KernelHandle, e: &BoundaryData, c: f64, t_grid: &[f64], grid: &QuadratureGrid) -> Result<EstimateReport> {
    let mut trace = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let exact = boundary_propagator(kernel, t, e, grid)?;
        let maj = propagator_majorant(&kernel.domain, t, e, c, 1.0, grid)?;
        let r = exact
            .field
            .values
            .iter()
            .zip(&maj.values)
            .filter(|(_, m)| **m > 0.0)
            .map(|(a, m)| a.abs() / m)
            .fold(0.0, f64::max);
        trace.push(r);
    }
    let c_fit = trace.iter().cloned().fold(0.0, f64::max) * MAJORANT_FIT_SLACK;
    Ok(EstimateReport::new("propagator / Gaussian boundary majorant", format!("{} times, {} nodes", t_grid.len(), grid.len()), trace)
        .with_constant("C", c_fit)
        .with_constant("c", c))
}

/// Largest |ψ_e|/majorant over `grid` and `t_grid` for a given constant.
pub fn majorant_ratio(kernel: &KernelHandle, e: &BoundaryData, c: f64, constant: f64, t_grid: &[f64], grid: &QuadratureGrid) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in t_grid {
        let exact = boundary_propagator(kernel, t, e, grid)?;
        let maj = propagator_majorant(&kernel.domain, t, e, c, constant, grid)?;
        for (a, m) in exact.field.values.iter().zip(&maj.values) {
            if *m > 0.0 {
                worst = worst.max(a.abs() / m);
            } else if *a != 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    Ok(worst)
}

/// Panel grid on a one-dimensional domain, cut at `extent` on the half-line.
pub fn panel_grid(domain: &Domain, panels: usize, order: usize, extent: f64) -> Result<QuadratureGrid> {
    let end = match domain {
        Domain::Interval01 => 1.0,
        Domain::HalfLine | Domain::HalfSpace(1) => extent,
        _ => return Err(Error::Unsupported { domain: domain.to_string(), operation: "panel grid" }),
    };
    let edges: Vec<f64> = (0..=panels).map(|i| end * i as f64 / panels as f64).collect();
    let (xs, ws) = quad::panel_nodes(&edges, order);
    Ok(QuadratureGrid::new(1, xs, ws, 0, 0.0))
}
