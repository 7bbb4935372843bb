//! Monte Carlo for M(t,x) = Σ_k ∫₀ᵗ ψ_k(t−s,x) dW_k(s), the mild solution
//! X(t) = S(t)X₀ + M(t) and the semilinear equation with drift f(X).
//!
//! Time is cut into cells. On each cell a mode contributes its increment ΔW_k
//! times the cell average of ψ_k(t−·,x); integrands are deterministic, so the
//! sums are Itô sums. Cells are graded geometrically toward every output time
//! because ψ_k(u,x) peaks at u ≈ ρ(x)²/6. The exact variance of the discrete
//! sum is compared with the quadrature σ²(t,x) before any path is drawn.

use super::jintegral::variance_with;
use super::propagators::{ModalFamily, Sampler, SquareSum};
use super::ConvolutionSetup;
use crate::error::{param, Error, Result};
use crate::geometry::{Domain, QuadratureGrid, WeightedSpaceParams};
use crate::kernels::{gauss, half_line_flux, KernelHandle};
use crate::noise::substream;
use crate::quad;
use crate::semigroup::{evaluate_semigroup, Field};
use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

/// Eigenvalues below this fraction of the largest are dropped from per-cell factors.
const RANK_TOL: f64 = 1e-12;

/// Cell layout for output times given explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeGrid {
    /// Ratio of consecutive cell lengths when grading toward an output time.
    pub ratio: f64,
    /// Uniform cells laid over [0, max t] in addition to the grading.
    pub base_steps: usize,
    /// The finest cell next to an output time has length `floor_fraction·ρ_min²`.
    pub floor_fraction: f64,
    /// Gauss–Legendre order for cell averages.
    pub order: usize,
    /// Largest accepted relative gap between discrete and quadrature variance.
    pub tolerance: f64,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid { ratio: 1.05, base_steps: 64, floor_fraction: 1.0 / 60.0, order: 6, tolerance: 5e-3 }
    }
}

/// Uniform steps on the unit interval with a midpoint space grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteppedGrid {
    pub dt: f64,
    pub steps: usize,
    /// Number of midpoint cells in space.
    pub n_x: usize,
    /// Grading ratio of the sub-cells inside the most recent step.
    pub ratio: f64,
    pub tolerance: f64,
}

impl SteppedGrid {
    pub fn new(dt: f64, steps: usize, n_x: usize) -> Self {
        SteppedGrid { dt, steps, n_x, ratio: 1.3, tolerance: 1e-2 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(param("dt", "must be positive"));
        }
        if self.steps == 0 || self.n_x < 2 {
            return Err(param("steps", "need at least one step and two space cells"));
        }
        if !(self.ratio > 1.0) {
            return Err(param("ratio", "must exceed 1"));
        }
        Ok(())
    }

    pub fn points(&self) -> QuadratureGrid {
        let h = 1.0 / self.n_x as f64;
        let xs = (0..self.n_x).map(|j| (j as f64 + 0.5) * h).collect();
        QuadratureGrid::new(1, xs, vec![h; self.n_x], 0, 0.0)
    }

    pub fn times(&self) -> Vec<f64> {
        (1..=self.steps).map(|n| n as f64 * self.dt).collect()
    }
}

/// Trajectories X(t_i, x_j) for every path, stored path-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub root: u64,
    pub times: Vec<f64>,
    pub points: QuadratureGrid,
    pub n_paths: usize,
    /// `values[(path·times + i)·points + j]`.
    pub values: Vec<f64>,
    /// Exact variance of the discrete stochastic sum at each (t_i, x_j).
    pub discrete_variance: Vec<f64>,
}

impl PathEnsemble {
    fn stride(&self) -> usize {
        self.times.len() * self.points.len()
    }

    pub fn value(&self, path: usize, ti: usize, pj: usize) -> f64 {
        self.values[path * self.stride() + ti * self.points.len() + pj]
    }

    /// X(t_i, ·) of one path.
    pub fn snapshot(&self, path: usize, ti: usize) -> &[f64] {
        let start = path * self.stride() + ti * self.points.len();
        &self.values[start..start + self.points.len()]
    }

    /// All paths at one node.
    pub fn node(&self, ti: usize, pj: usize) -> Vec<f64> {
        (0..self.n_paths).map(|k| self.value(k, ti, pj)).collect()
    }

    pub fn discrete_variance_at(&self, ti: usize, pj: usize) -> f64 {
        self.discrete_variance[ti * self.points.len() + pj]
    }

    /// ‖X(t_i)‖_{L^p_{θ,δ}} per path, by the quadrature weights of `points`.
    pub fn norms(&self, domain: &Domain, ti: usize, params: &WeightedSpaceParams) -> Vec<f64> {
        let w: Vec<f64> = self
            .points
            .nodes()
            .zip(&self.points.weights)
            .map(|(x, wq)| wq * params.weight_at(domain.rho(x), x.iter().map(|c| c * c).sum()))
            .collect();
        (0..self.n_paths)
            .map(|k| {
                let s: f64 = self.snapshot(k, ti).iter().zip(&w).map(|(v, w)| w * v.abs().powf(params.p)).sum();
                s.powf(1.0 / params.p)
            })
            .collect()
    }

    /// Columns `path time x… value`, one row per node.
    pub fn to_columnar(&self) -> String {
        let mut s = format!("# root {}\n# paths {}\npath\ttime\tx\tvalue\n", self.root, self.n_paths);
        for k in 0..self.n_paths {
            for (i, t) in self.times.iter().enumerate() {
                for (j, x) in self.points.nodes().enumerate() {
                    let xs: Vec<String> = x.iter().map(|c| format!("{c:.12e}")).collect();
                    let _ = writeln!(s, "{k}\t{t:.12e}\t{}\t{:.12e}", xs.join(","), self.value(k, i, j));
                }
            }
        }
        s
    }
}

/// Initial state of the mild solution.
#[derive(Debug, Clone)]
pub enum Initial {
    Zero,
    Deterministic(Field),
    /// One field per path, e.g. the end state of an earlier run.
    PerPath(Vec<Field>),
}

fn check_points(domain: &Domain, points: &QuadratureGrid) -> Result<f64> {
    if points.is_empty() {
        return Err(param("points", "no points"));
    }
    let mut rho_min = f64::INFINITY;
    for x in points.nodes() {
        let r = domain.distance_to_boundary(x)?;
        if r == 0.0 {
            return Err(param("points", format!("{x:?} lies on the boundary, where the variance is infinite")));
        }
        rho_min = rho_min.min(r);
    }
    Ok(rho_min)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(param("times", "need finite positive output times"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("times", "must be strictly increasing"));
    }
    Ok(())
}

/// Cell edges on [0, max t]: uniform base plus geometric grading toward each output time.
fn probe_edges(times: &[f64], rho_min: f64, grid: &ProbeGrid) -> Vec<f64> {
    let t_max = *times.last().unwrap();
    let floor = grid.floor_fraction * rho_min * rho_min;
    let mut edges: Vec<f64> = (0..=grid.base_steps).map(|k| t_max * k as f64 / grid.base_steps as f64).collect();
    for &t in times {
        edges.push(t);
        let mut u = floor;
        while u < t {
            edges.push(t - u);
            u *= grid.ratio;
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * t_max);
    edges
}

fn refuse_if_inaccurate(setup: &ConvolutionSetup, times: &[f64], points: &QuadratureGrid, disc: &[f64], tol: f64) -> Result<()> {
    let sq = SquareSum::from_setup(setup)?;
    let mut worst: (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &t) in times.iter().enumerate() {
        for (j, x) in points.nodes().enumerate() {
            let exact = variance_with(setup, &sq, t, x)?;
            let d = disc[i * points.len() + j];
            let gap = if exact == 0.0 { d.abs() } else { (d / exact - 1.0).abs() };
            if gap > worst.0 {
                worst = (gap, t, x[0], d, exact);
            }
        }
    }
    if worst.0 > tol {
        return Err(Error::Refusal(format!(
            "discrete variance {:.6e} vs quadrature {:.6e} at t={}, x₁={} (relative gap {:.3e} > {tol:e}); refine the time grid",
            worst.3, worst.4, worst.1, worst.2, worst.0
        )));
    }
    Ok(())
}

/// Probe vector law on one cell: factor F with F·Fᵀ = covariance.
struct CellFactor {
    rows: usize,
    rank: usize,
    /// Row-major `rows × rank`.
    f: Vec<f64>,
}

/// Loadings for the probe engine.
enum ProbeLoads {
    /// `loads[((cell·modes + k)·outputs) + o]`, already multiplied by √Δs.
    Modal { modes: usize, loads: Vec<f64> },
    Factors(Vec<CellFactor>),
}

fn modal_probe_loads(family: &ModalFamily, edges: &[f64], times: &[f64], xs: &[Vec<f64>], order: usize) -> Vec<f64> {
    let outputs = times.len() * xs.len();
    let modes = family.len();
    let cells = edges.len() - 1;
    let rule = quad::gauss_legendre(order);
    let per_cell: Vec<Vec<f64>> = (0..cells)
        .into_par_iter()
        .map(|c| {
            let (a, b) = (edges[c], edges[c + 1]);
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            let scale = 1.0 / (b - a).sqrt();
            let mut out = vec![0.0; modes * outputs];
            for (i, &t) in times.iter().enumerate() {
                if b > t * (1.0 + 1e-14) {
                    continue;
                }
                for (j, x) in xs.iter().enumerate() {
                    for k in 0..modes {
                        let s: f64 = rule
                            .nodes
                            .iter()
                            .zip(&rule.weights)
                            .map(|(z, w)| w * family.psi(k, t - (m + h * z), x))
                            .sum();
                        out[k * outputs + i * xs.len() + j] = s * h * scale;
                    }
                }
            }
            out
        })
        .collect();
    per_cell.concat()
}

fn white_probe_factors(dim: usize, edges: &[f64], times: &[f64], xs: &[Vec<f64>], order: usize) -> Vec<CellFactor> {
    let probes: Vec<(f64, &Vec<f64>)> = times.iter().flat_map(|&t| xs.iter().map(move |x| (t, x))).collect();
    let n = probes.len();
    let rule = quad::gauss_legendre(order);
    (0..edges.len() - 1)
        .into_par_iter()
        .map(|c| {
            let (a, b) = (edges[c], edges[c + 1]);
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            let mut cov = DMatrix::<f64>::zeros(n, n);
            for p in 0..n {
                for q in 0..=p {
                    let (tp, xp) = probes[p];
                    let (tq, xq) = probes[q];
                    if b > tp * (1.0 + 1e-14) || b > tq * (1.0 + 1e-14) {
                        continue;
                    }
                    let tang: f64 = xp[1..].iter().zip(&xq[1..]).map(|(u, v)| (u - v) * (u - v)).sum();
                    let s: f64 = rule
                        .nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(|(z, w)| {
                            let s = m + h * z;
                            let (up, uq) = (tp - s, tq - s);
                            w * half_line_flux(up, xp[0]) * half_line_flux(uq, xq[0]) * gauss(2.0 * (up + uq), tang, dim - 1)
                        })
                        .sum::<f64>()
                        * h;
                    cov[(p, q)] = s;
                    cov[(q, p)] = s;
                }
            }
            let eig = SymmetricEigen::new(cov);
            let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
            let keep: Vec<usize> = (0..n).filter(|&i| top > 0.0 && eig.eigenvalues[i] > RANK_TOL * top).collect();
            let mut f = vec![0.0; n * keep.len()];
            for (r, &i) in keep.iter().enumerate() {
                let s = eig.eigenvalues[i].sqrt();
                for row in 0..n {
                    f[row * keep.len() + r] = eig.eigenvectors[(row, i)] * s;
                }
            }
            CellFactor { rows: n, rank: keep.len(), f }
        })
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// M at every probe for one path.
fn probe_path(loads: &ProbeLoads, outputs: usize, root: u64, path: u64) -> Vec<f64> {
    let mut out = vec![0.0; outputs];
    match loads {
        ProbeLoads::Modal { modes, loads } => {
            let cells = loads.len() / (modes * outputs).max(1);
            for k in 0..*modes {
                let mut rng = substream(root, path, k as u64);
                for c in 0..cells {
                    let z = normal(&mut rng);
                    let row = &loads[(c * modes + k) * outputs..(c * modes + k + 1) * outputs];
                    for (o, l) in out.iter_mut().zip(row) {
                        *o += l * z;
                    }
                }
            }
        }
        ProbeLoads::Factors(factors) => {
            let mut rng = substream(root, path, 0);
            for cf in factors {
                let z: Vec<f64> = (0..cf.rank).map(|_| normal(&mut rng)).collect();
                for row in 0..cf.rows {
                    let r = &cf.f[row * cf.rank..(row + 1) * cf.rank];
                    out[row] += r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
    }
    out
}

fn discrete_variance(loads: &ProbeLoads, outputs: usize) -> Vec<f64> {
    let mut v = vec![0.0; outputs];
    match loads {
        ProbeLoads::Modal { loads, .. } => {
            for row in loads.chunks(outputs) {
                for (a, l) in v.iter_mut().zip(row) {
                    *a += l * l;
                }
            }
        }
        ProbeLoads::Factors(factors) => {
            for cf in factors {
                for (row, a) in v.iter_mut().enumerate() {
                    *a += cf.f[row * cf.rank..(row + 1) * cf.rank].iter().map(|x| x * x).sum::<f64>();
                }
            }
        }
    }
    v
}

/// Ensemble of M(t_i, x_j) with X₀ = 0.
pub fn simulate_convolution(
    setup: &ConvolutionSetup,
    times: &[f64],
    points: &QuadratureGrid,
    n_paths: usize,
    grid: &ProbeGrid,
    root: u64,
) -> Result<PathEnsemble> {
    simulate_mild(setup, &Initial::Zero, times, points, n_paths, grid, root)
}

fn semigroup_part(setup: &ConvolutionSetup, x0: &Initial, path: usize, times: &[f64], xs: &[f64], kernel: Option<&KernelHandle>) -> Result<Vec<f64>> {
    let field = match x0 {
        Initial::Zero => return Ok(vec![0.0; times.len() * xs.len()]),
        Initial::Deterministic(f) => f,
        Initial::PerPath(fs) => &fs[path],
    };
    let kernel = kernel.ok_or_else(|| Error::Unsupported { domain: setup.domain.to_string(), operation: "nonzero initial state" })?;
    let mut out = Vec::with_capacity(times.len() * xs.len());
    for &t in times {
        out.extend(evaluate_semigroup(kernel, t, field, xs)?);
    }
    Ok(out)
}

/// Ensemble of X(t_i, x_j) = S(t_i)X₀(x_j) + M(t_i, x_j).
pub fn simulate_mild(
    setup: &ConvolutionSetup,
    x0: &Initial,
    times: &[f64],
    points: &QuadratureGrid,
    n_paths: usize,
    grid: &ProbeGrid,
    root: u64,
) -> Result<PathEnsemble> {
    check_times(times)?;
    let rho_min = check_points(&setup.domain, points)?;
    if let Initial::PerPath(fs) = x0 {
        if fs.len() != n_paths {
            return Err(param("x0", format!("{} initial fields for {n_paths} paths", fs.len())));
        }
    }
    if !(grid.ratio > 1.0) || grid.base_steps == 0 || !(grid.floor_fraction > 0.0) {
        return Err(param("grid", "ratio > 1, base_steps > 0 and floor_fraction > 0 are required"));
    }
    let sampler = Sampler::from_setup(setup)?;
    let edges = probe_edges(times, rho_min, grid);
    let xs: Vec<Vec<f64>> = points.nodes().map(|x| x.to_vec()).collect();
    let outputs = times.len() * xs.len();
    let loads = match &sampler {
        Sampler::Modal(family) => {
            ProbeLoads::Modal { modes: family.len(), loads: modal_probe_loads(family, &edges, times, &xs, grid.order) }
        }
        Sampler::WhiteHalfSpace { dim } => ProbeLoads::Factors(white_probe_factors(*dim, &edges, times, &xs, grid.order)),
    };
    let disc = discrete_variance(&loads, outputs);
    refuse_if_inaccurate(setup, times, points, &disc, grid.tolerance)?;
    let kernel = match setup.domain {
        Domain::Interval01 | Domain::HalfLine => Some(KernelHandle::exact(setup.domain.clone())?),
        _ => None,
    };
    let first: Vec<f64> = points.first_coords();
    let deterministic = match x0 {
        Initial::PerPath(_) => None,
        _ => Some(semigroup_part(setup, x0, 0, times, &first, kernel.as_ref())?),
    };
    let per_path: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut m = probe_path(&loads, outputs, root, k as u64);
            let base = match &deterministic {
                Some(b) => std::borrow::Cow::Borrowed(b),
                None => std::borrow::Cow::Owned(semigroup_part(setup, x0, k, times, &first, kernel.as_ref())?),
            };
            m.iter_mut().zip(base.iter()).for_each(|(a, b)| *a += b);
            Ok(m)
        })
        .collect::<Result<_>>()?;
    Ok(PathEnsemble { root, times: times.to_vec(), points: points.clone(), n_paths, values: per_path.concat(), discrete_variance: disc })
}

/// Sub-cells of one step as offsets `u` back from its right end; quarter
/// boundaries are always edges.
fn step_subcells(dt: f64, floor: f64, ratio: f64) -> (Vec<f64>, Vec<usize>) {
    let mut u = vec![0.0, dt / 4.0, dt / 2.0, 0.75 * dt, dt];
    let mut v = floor.min(dt / 8.0);
    while v < dt {
        u.push(v);
        v *= ratio;
    }
    u.sort_by(f64::total_cmp);
    u.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * dt);
    // quarter of each sub-cell, 0 nearest the step's right end
    let quarter = u.windows(2).map(|w| ((0.5 * (w[0] + w[1]) / dt * 4.0).floor() as usize).min(3)).collect();
    (u, quarter)
}

/// Loadings of the uniform-step engine, Toeplitz in the lag.
struct SteppedLoads {
    modes: usize,
    n_x: usize,
    /// Sub-cell offsets and their quarter.
    u: Vec<f64>,
    quarter: Vec<usize>,
    /// Most recent step: `recent[(c·modes + k)·n_x + j]`, times √Δu.
    recent: Vec<f64>,
    /// Older steps: `older[((lag−2)·4 + q)·modes + k)·n_x + j]`, the quarter average of ψ.
    older: Vec<f64>,
}

impl SteppedLoads {
    fn new(family: &ModalFamily, grid: &SteppedGrid, xs: &[f64]) -> Self {
        let modes = family.len();
        let n_x = xs.len();
        let dt = grid.dt;
        let rho_min = xs.iter().map(|x| x.min(1.0 - x)).fold(f64::INFINITY, f64::min);
        let (u, quarter) = step_subcells(dt, rho_min * rho_min / 60.0, grid.ratio);
        let rule = quad::gauss_legendre(6);
        let avg = |k: usize, a: f64, b: f64, x: f64| -> f64 {
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            rule.nodes.iter().zip(&rule.weights).map(|(z, w)| w * family.psi(k, m + h * z, &[x])).sum::<f64>() * 0.5
        };
        let mut recent = vec![0.0; (u.len() - 1) * modes * n_x];
        for c in 0..u.len() - 1 {
            let (a, b) = (u[c], u[c + 1]);
            for k in 0..modes {
                for (j, &x) in xs.iter().enumerate() {
                    recent[(c * modes + k) * n_x + j] = avg(k, a, b, x) * (b - a).sqrt();
                }
            }
        }
        let lags = grid.steps.saturating_sub(1);
        let older: Vec<f64> = (0..lags)
            .into_par_iter()
            .flat_map_iter(|l| {
                let lag = l + 2;
                let mut out = vec![0.0; 4 * modes * n_x];
                for q in 0..4 {
                    let a = (lag - 1) as f64 * dt + q as f64 * dt / 4.0;
                    let b = a + dt / 4.0;
                    for k in 0..modes {
                        for (j, &x) in xs.iter().enumerate() {
                            out[(q * modes + k) * n_x + j] = avg(k, a, b, x);
                        }
                    }
                }
                out
            })
            .collect();
        SteppedLoads { modes, n_x, u, quarter, recent, older }
    }

    fn subcells(&self) -> usize {
        self.u.len() - 1
    }

    /// Exact variance of M at step `n` (1-based).
    fn variance(&self, n: usize, dt: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.n_x];
        for row in self.recent.chunks(self.n_x) {
            v.iter_mut().zip(row).for_each(|(a, l)| *a += l * l);
        }
        for lag in 2..=n {
            for row in self.older[(lag - 2) * 4 * self.modes * self.n_x..(lag - 1) * 4 * self.modes * self.n_x].chunks(self.n_x) {
                v.iter_mut().zip(row).for_each(|(a, l)| *a += l * l * dt / 4.0);
            }
        }
        v
    }

    /// M(t_n, x_j) for n = 1..=steps on one path, row-major in n.
    fn path(&self, steps: usize, root: u64, path: u64) -> Vec<f64> {
        let cells = self.subcells();
        let (modes, n_x) = (self.modes, self.n_x);
        // z[(step·modes + k)·cells + c] and quarter increments dw[(step·modes + k)·4 + q]
        let mut z = vec![0.0; steps * modes * cells];
        let mut dw = vec![0.0; steps * modes * 4];
        for k in 0..modes {
            let mut rng = substream(root, path, k as u64);
            for s in 0..steps {
                for c in 0..cells {
                    let v = normal(&mut rng);
                    z[(s * modes + k) * cells + c] = v;
                    dw[(s * modes + k) * 4 + self.quarter[c]] += v * (self.u[c + 1] - self.u[c]).sqrt();
                }
            }
        }
        let mut out = vec![0.0; steps * n_x];
        for n in 1..=steps {
            let row = &mut out[(n - 1) * n_x..n * n_x];
            let last = n - 1;
            for k in 0..modes {
                for c in 0..cells {
                    let zz = z[(last * modes + k) * cells + c];
                    let l = &self.recent[(c * modes + k) * n_x..(c * modes + k + 1) * n_x];
                    row.iter_mut().zip(l).for_each(|(a, b)| *a += b * zz);
                }
                for lag in 2..=n {
                    let s = n - lag;
                    for q in 0..4 {
                        let w = dw[(s * modes + k) * 4 + q];
                        let base = (((lag - 2) * 4 + q) * modes + k) * n_x;
                        row.iter_mut().zip(&self.older[base..base + n_x]).for_each(|(a, b)| *a += b * w);
                    }
                }
            }
        }
        out
    }
}

fn fine_interval_grid() -> Result<QuadratureGrid> {
    Domain::Interval01.refined_line_grid(30, 8, 0.02, None)
}

struct SteppedMild {
    grid: SteppedGrid,
    points: QuadratureGrid,
    /// S(t_n)X₀ at the space nodes, row-major in n.
    base: Vec<f64>,
    x0_nodes: Vec<f64>,
    loads: Option<SteppedLoads>,
}

impl SteppedMild {
    fn new(setup: &ConvolutionSetup, x0: &(dyn Fn(f64) -> f64 + Sync), grid: &SteppedGrid) -> Result<Self> {
        grid.validate()?;
        if !matches!(setup.domain, Domain::Interval01) {
            return Err(Error::Unsupported { domain: setup.domain.to_string(), operation: "uniform-step simulation" });
        }
        let sampler = Sampler::from_setup(setup)?;
        let family = match sampler {
            Sampler::Modal(f) => f,
            Sampler::WhiteHalfSpace { .. } => unreachable!("interval noise is modal"),
        };
        let points = grid.points();
        let xs = points.first_coords();
        let kernel = KernelHandle::exact(Domain::Interval01)?;
        let init = Field::from_fn(Domain::Interval01, fine_interval_grid()?, |x| x0(x[0]))?;
        let mut base = Vec::with_capacity(grid.steps * xs.len());
        for t in grid.times() {
            base.extend(evaluate_semigroup(&kernel, t, &init, &xs)?);
        }
        let zero_noise = family.len() == 0 || SquareSum::from_setup(setup)?.is_zero();
        let loads = if zero_noise { None } else { Some(SteppedLoads::new(&family, grid, &xs)) };
        if let Some(l) = &loads {
            let disc = l.variance(grid.steps, grid.dt);
            let t_end = grid.steps as f64 * grid.dt;
            refuse_if_inaccurate(setup, &[t_end], &points, &disc, grid.tolerance)?;
        }
        Ok(SteppedMild { grid: *grid, points, base, x0_nodes: xs.iter().map(|&x| x0(x)).collect(), loads })
    }

    fn path(&self, root: u64, path: u64) -> Vec<f64> {
        let mut out = self.base.clone();
        if let Some(l) = &self.loads {
            out.iter_mut().zip(l.path(self.grid.steps, root, path)).for_each(|(a, m)| *a += m);
        }
        out
    }

    fn discrete_variance(&self) -> Vec<f64> {
        match &self.loads {
            Some(l) => (1..=self.grid.steps).flat_map(|n| l.variance(n, self.grid.dt)).collect(),
            None => vec![0.0; self.base.len()],
        }
    }
}

/// X(t_n) = S(t_n)X₀ + M(t_n) on the uniform-step grid of the semilinear solver.
pub fn simulate_mild_stepped(
    setup: &ConvolutionSetup,
    x0: &(dyn Fn(f64) -> f64 + Sync),
    grid: &SteppedGrid,
    n_paths: usize,
    root: u64,
) -> Result<PathEnsemble> {
    let mild = SteppedMild::new(setup, x0, grid)?;
    let values: Vec<Vec<f64>> = (0..n_paths).into_par_iter().map(|k| mild.path(root, k as u64)).collect();
    Ok(PathEnsemble {
        root,
        times: grid.times(),
        points: mild.points.clone(),
        n_paths,
        values: values.concat(),
        discrete_variance: mild.discrete_variance(),
    })
}

/// Scalar drift f with its Lipschitz constant.
#[derive(Clone)]
pub struct Nonlinearity {
    pub name: String,
    pub lipschitz: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Nonlinearity({}, L={})", self.name, self.lipschitz)
    }
}

impl Nonlinearity {
    pub fn new(name: impl Into<String>, lipschitz: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(param("lipschitz", "must be finite and nonnegative"));
        }
        Ok(Nonlinearity { name: name.into(), lipschitz, f: Arc::new(f) })
    }

    pub fn zero() -> Self {
        Nonlinearity { name: "zero".into(), lipschitz: 0.0, f: Arc::new(|_| 0.0) }
    }

    /// f(u) = a·u.
    pub fn linear(a: f64) -> Self {
        Nonlinearity { name: format!("linear({a})"), lipschitz: a.abs(), f: Arc::new(move |u| a * u) }
    }

    /// f(u) = a·clamp(u, −1, 1).
    pub fn clamp(a: f64) -> Self {
        Nonlinearity { name: format!("clamp({a})"), lipschitz: a.abs(), f: Arc::new(move |u| a * u.clamp(-1.0, 1.0)) }
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }
}

/// Picard stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Picard {
    /// Successive iterates closer than this in max_n ‖·‖_{L^p_{θ,δ}} stop the iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for Picard {
    fn default() -> Self {
        Picard { tolerance: 1e-10, max_iterations: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemilinearEnsemble {
    pub ensemble: PathEnsemble,
    /// Picard iterations used by each path.
    pub iterations: Vec<usize>,
}

/// S(dt) on the midpoint grid, exact on the discrete sine modes.
fn sine_propagator(n: usize, dt: f64) -> Result<DMatrix<f64>> {
    let h = 1.0 / n as f64;
    let v = DMatrix::from_fn(n, n, |j, k| ((k + 1) as f64 * PI * (j as f64 + 0.5) * h).sin());
    let inv = v.clone().try_inverse().ok_or_else(|| Error::NonConvergence("singular sine basis".into()))?;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |k, _| (-((k + 1) as f64 * PI).powi(2) * dt).exp()));
    Ok(v * d * inv)
}

/// X(t_n) = S(t_n)X₀ + Σ_{j<n} S(t_n − t_j) f(X(t_j)) dt + M(t_n) by Picard
/// iteration over whole paths. With f ≡ 0 it returns the stepped mild solution.
pub fn simulate_semilinear(
    setup: &ConvolutionSetup,
    x0: &(dyn Fn(f64) -> f64 + Sync),
    f: &Nonlinearity,
    grid: &SteppedGrid,
    picard: &Picard,
    n_paths: usize,
    root: u64,
) -> Result<SemilinearEnsemble> {
    let mild = SteppedMild::new(setup, x0, grid)?;
    let n_x = grid.n_x;
    let s_dt = sine_propagator(n_x, grid.dt)?;
    let params = setup.params;
    let weights: Vec<f64> = mild
        .points
        .first_coords()
        .iter()
        .map(|&x| params.weight_at(x.min(1.0 - x), x * x) / n_x as f64)
        .collect();
    let norm = |v: &[f64]| -> f64 { v.iter().zip(&weights).map(|(a, w)| w * a.abs().powf(params.p)).sum::<f64>().powf(1.0 / params.p) };
    let results: Vec<(Vec<f64>, usize)> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let base = mild.path(root, k as u64);
            let mut x = base.clone();
            for it in 1..=picard.max_iterations {
                let mut next = base.clone();
                let mut d = nalgebra::DVector::<f64>::zeros(n_x);
                let mut diff = 0.0f64;
                for n in 1..=grid.steps {
                    let prev: &[f64] = if n == 1 { &mild.x0_nodes } else { &x[(n - 2) * n_x..(n - 1) * n_x] };
                    let forcing = nalgebra::DVector::from_fn(n_x, |j, _| d[j] + grid.dt * f.eval(prev[j]));
                    d = &s_dt * forcing;
                    let row = &mut next[(n - 1) * n_x..n * n_x];
                    row.iter_mut().zip(d.iter()).for_each(|(a, b)| *a += b);
                    let delta: Vec<f64> = row.iter().zip(&x[(n - 1) * n_x..n * n_x]).map(|(a, b)| a - b).collect();
                    diff = diff.max(norm(&delta));
                }
                x = next;
                if diff < picard.tolerance {
                    return Ok((x, it));
                }
            }
            Err(Error::NonConvergence(format!(
                "Picard iteration for {} did not reach {:e} within {} iterations on path {k}",
                f.name, picard.tolerance, picard.max_iterations
            )))
        })
        .collect::<Result<_>>()?;
    let iterations = results.iter().map(|r| r.1).collect();
    let values = results.into_iter().flat_map(|r| r.0).collect();
    Ok(SemilinearEnsemble {
        ensemble: PathEnsemble {
            root,
            times: grid.times(),
            points: mild.points.clone(),
            n_paths,
            values,
            discrete_variance: mild.discrete_variance(),
        },
        iterations,
    })
}
