//! Verification suites. Each check carries its tolerance and the measured value.

use boundary_noise::convolution::*;
use boundary_noise::dirichlet::{
    boundary_propagator, dirichlet_map, fit_majorant_constant, majorant_ratio, panel_grid, uniform_interior_grid,
    verify_harmonicity, BoundaryBasis, BoundaryData,
};
use boundary_noise::estimates::{
    certify_etr, chapman_kolmogorov_residual, fit_axx_exponent, fit_boundary_mass_constant, rescaled_domain_constants,
    rescaled_moment_bound,
};
use boundary_noise::geometry::{Domain, QuadratureGrid, WeightedSpaceParams};
use boundary_noise::kernels::{KernelHandle, Representation};
use boundary_noise::noise::{BoundaryNoiseSpec, SpectralMeasure};
use boundary_noise::quad::log_space;
use boundary_noise::report::Verdict;
use boundary_noise::semigroup::{
    apply_semigroup, cross_space_smoothing, gradient_smoothing_ratio, min_weight_splice_check, random_smooth_field,
    schur_constants, stability_rate, Derivative, Field,
};
use boundary_noise::Result;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// One line: PASS/FAIL, suite, passed/total and the first failure if any.
    pub fn summary(&self) -> String {
        let ok = self.checks.iter().filter(|c| c.pass).count();
        let head = format!("{} {} ({ok}/{} checks)", if self.passed() { "PASS" } else { "FAIL" }, self.suite, self.checks.len());
        match self.checks.iter().find(|c| !c.pass) {
            Some(c) => format!("{head}: {}: {}", c.name, c.detail),
            None => head,
        }
    }

    pub fn to_columnar(&self) -> String {
        let mut s = format!("# suite {}\ncheck\tpass\tdetail\n", self.suite);
        for c in &self.checks {
            s.push_str(&format!("{}\t{}\t{}\n", c.name, c.pass, c.detail));
        }
        s
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail)?;
        }
        write!(f, "{}", self.summary())
    }
}

/// Suite names accepted by [`run_suite`], in acceptance order.
pub const SUITES: [&str; 7] = ["isometry", "thresholds", "kernels", "estimates", "operators", "dirichlet", "simulation"];

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    let checks = match name {
        "isometry" => isometry()?,
        "thresholds" => thresholds()?,
        "kernels" => kernels()?,
        "estimates" => estimates()?,
        "operators" => operators()?,
        "dirichlet" => dirichlet()?,
        "simulation" => simulation()?,
        other => return Err(boundary_noise::Error::Config(format!("unknown suite `{other}`; known: {}", SUITES.join(", ")))),
    };
    let suite = SUITES.into_iter().find(|s| *s == name).unwrap();
    Ok(SuiteReport { suite, checks })
}

fn params(p: f64, theta: f64, delta: f64) -> WeightedSpaceParams {
    WeightedSpaceParams::new(p, theta, delta).expect("suite parameters are valid")
}

fn line_points(xs: &[f64]) -> QuadratureGrid {
    QuadratureGrid::new(1, xs.to_vec(), vec![1.0; xs.len()], 0, 0.0)
}

fn white_half_plane(theta: f64) -> ConvolutionSetup {
    let noise = BoundaryNoiseSpec::SpatiallyHomogeneous { measure: SpectralMeasure::lebesgue(1).unwrap(), modes: 64, cutoff: 20.0 };
    ConvolutionSetup::exact(Domain::HalfSpace(2), noise, params(2.0, theta, 40.0))
}

fn bessel_half_plane(kappa: f64, theta: f64) -> ConvolutionSetup {
    let noise = BoundaryNoiseSpec::SpatiallyHomogeneous { measure: SpectralMeasure::bessel(kappa, 1).unwrap(), modes: 64, cutoff: 20.0 };
    ConvolutionSetup::exact(Domain::HalfSpace(2), noise, params(2.0, theta, 40.0))
}

fn isometry_check(label: &str, setup: &ConvolutionSetup, times: &[f64], points: &QuadratureGrid, root: u64) -> Result<Check> {
    let ens = simulate_convolution(setup, times, points, 10_000, &ProbeGrid::default(), root)?;
    let mut worst = 0.0f64;
    let mut probes = 0;
    for (i, &t) in times.iter().enumerate() {
        for (j, x) in points.nodes().enumerate() {
            let st = node_statistics(&ens.node(i, j));
            let exact = variance_at(setup, t, x)?;
            worst = worst.max((st.variance - exact).abs() / st.variance_se);
            probes += 1;
        }
    }
    Ok(Check::new(
        format!("Itô isometry, {label}"),
        worst < 3.0 && probes >= 20,
        format!("{probes} probes, 10⁴ paths, worst |var − σ²| = {worst:.2} standard errors (< 3)"),
    ))
}

fn isometry() -> Result<Vec<Check>> {
    let times = [0.05, 0.1, 0.2, 0.5];
    let interval = ConvolutionSetup::exact(Domain::Interval01, BoundaryNoiseSpec::EndpointAtoms, params(2.0, 2.0, 0.0));
    let half_line = ConvolutionSetup::exact(Domain::HalfLine, BoundaryNoiseSpec::EndpointAtoms, params(2.0, 2.0, 1.0));
    let plane_points = QuadratureGrid::new(2, vec![0.05, 0.0, 0.1, 0.5, 0.2, -0.3, 0.3, 0.0, 0.4, 1.0], vec![1.0; 5], 0, 0.0);
    Ok(vec![
        isometry_check("interval, endpoint noise", &interval, &times, &line_points(&[0.02, 0.1, 0.3, 0.5, 0.8]), 101)?,
        isometry_check("half-line, endpoint noise", &half_line, &times, &line_points(&[0.05, 0.1, 0.2, 0.4, 0.6]), 102)?,
        isometry_check("half-plane, space-time white noise", &white_half_plane(2.5), &times, &plane_points, 103)?,
    ])
}

/// Catalogued scenarios probed at both ends of their θ-range.
pub fn threshold_scenarios() -> Vec<(&'static str, ConvolutionSetup)> {
    let circle_basis = BoundaryData::BasisCoeffs { basis: BoundaryBasis::CircleFourier, coeffs: vec![1.0, 0.5, 0.5], level: 6 };
    vec![
        ("interval-endpoint", ConvolutionSetup::exact(Domain::Interval01, BoundaryNoiseSpec::EndpointAtoms, params(2.0, 2.0, 0.0))),
        ("half-line-endpoint δ=1", ConvolutionSetup::exact(Domain::HalfLine, BoundaryNoiseSpec::EndpointAtoms, params(2.0, 2.0, 1.0))),
        (
            "ball-summable",
            ConvolutionSetup::majorant(Domain::UnitBall(2), BoundaryNoiseSpec::FiniteSeries { modes: vec![circle_basis] }, params(2.0, 2.0, 0.0)),
        ),
        ("circle-white", ConvolutionSetup::majorant(Domain::UnitBall(2), BoundaryNoiseSpec::CircleWhiteNoise { k_max: 16 }, params(2.0, 2.5, 0.0))),
        ("half-space-white m=1", white_half_plane(2.5)),
        ("half-space-bessel κ=0.5", bessel_half_plane(0.5, 2.0)),
        ("half-space-bessel κ=1", bessel_half_plane(1.0, 2.0)),
        ("half-space-bessel κ=2", bessel_half_plane(2.0, 2.0)),
    ]
}

fn thresholds() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (label, setup) in threshold_scenarios() {
        let (lo, hi) = predict_wellposedness(&setup).theta_range.expect("catalogued scenario");
        for theta in [lo - 0.25, lo + 0.25, hi - 0.25, hi + 0.25] {
            let r = j_integral(&setup.clone().with_theta(theta)?)?;
            let values: Vec<String> = r.levels.iter().map(|l| format!("{:.4e}", l.value)).collect();
            checks.push(Check::new(
                format!("{label} θ={theta}"),
                r.agreement == Some(true),
                format!(
                    "range ({lo}, {hi}), predicted {:?}, J levels [{}] → {:?}, combined {:?}",
                    r.prediction.verdict,
                    values.join(", "),
                    r.j_verdict,
                    r.verdict
                ),
            ));
        }
    }
    Ok(checks)
}

fn kernels() -> Result<Vec<Check>> {
    let image = KernelHandle::new(Domain::Interval01, Representation::ImageSeries)?;
    let sine = KernelHandle::new(Domain::Interval01, Representation::SineSeries)?;
    let half = KernelHandle::exact(Domain::HalfLine)?;
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for t in [1e-3, 1e-2, 0.1, 1.0] {
        for i in 1..40 {
            for j in 0..=40 {
                let (x, y) = (i as f64 / 40.0, j as f64 / 40.0);
                worst = worst.max((image.green_1d(t, x, y) - sine.green_1d(t, x, y)).abs());
            }
        }
    }
    checks.push(Check::new("image vs sine series, t ≥ 1e-3", worst < 1e-10, format!("max |Δ| = {worst:.2e} (< 1e-10)")));

    let mut ck = 0.0f64;
    for k in [&image, &sine] {
        ck = ck.max(chapman_kolmogorov_residual(k, 0.05, 0.1, &[(0.3, 0.6), (0.1, 0.9), (0.5, 0.5)])?);
    }
    ck = ck.max(chapman_kolmogorov_residual(&half, 0.05, 0.1, &[(0.3, 0.6), (1.0, 2.0)])?);
    checks.push(Check::new("Chapman–Kolmogorov", ck < 1e-6, format!("residual {ck:.2e} (< 1e-6)")));

    let grid = Domain::Interval01.refined_line_grid(30, 8, 0.02, None)?;
    let psi = Field::from_fn(Domain::Interval01, grid.clone(), |x| (PI * x[0]).sin())?;
    let mut decay = 0.0f64;
    for t in [1e-3, 1e-2, 0.1, 0.5] {
        let out = apply_semigroup(&image, t, &psi)?;
        for (x, v) in grid.nodes().zip(&out.values) {
            decay = decay.max((v - (-PI * PI * t).exp() * (PI * x[0]).sin()).abs());
        }
    }
    checks.push(Check::new("eigenfunction decay e^{−π²t}", decay < 1e-6, format!("max error {decay:.2e} (< 1e-6)")));

    let mut res = 0.0f64;
    for (l, x, y) in [(1.0f64, 1.0f64, 2.0f64), (1.0, 1.0, 1.0), (0.5, 0.1, 3.0), (4.0, 0.02, 0.03), (9.0, 2.0, 0.5)] {
        let s: f64 = f64::sqrt(l);
        let exact = ((-s * (x - y).abs()).exp() - (-s * (x + y)).exp()) / (2.0 * s);
        res = res.max((half.resolvent(l, &[x], &[y])? - exact).abs() / exact);
    }
    checks.push(Check::new("half-line resolvent closed form", res < 1e-8, format!("max relative error {res:.2e} (< 1e-8)")));
    Ok(checks)
}

fn estimates() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let etr = certify_etr(200, 8.0, 8.0);
    checks.push(Check::new("exponential-ratio inequality on a 200×200 grid", etr.verdict == Verdict::Bounded, format!("sup {:.4}", etr.sup())));

    for d in [Domain::HalfLine, Domain::Interval01] {
        let r = fit_axx_exponent(&d, -0.5, 1.0, 13)?;
        let k = r.constant("exponent").unwrap_or(f64::NAN);
        checks.push(Check::new(format!("ρ^α Gaussian integral exponent, {d}"), (k + 0.25).abs() <= 0.03, format!("fitted {k:.4}, expected −0.25 ± 0.03")));
    }

    for d in [Domain::UnitBall(2), Domain::UnitBall(3)] {
        let r = fit_boundary_mass_constant(&d, 1.0, 2)?;
        let c1 = r.constant("C1").unwrap_or(f64::NAN);
        let change = r.constant("refinement_change").unwrap_or(f64::NAN);
        let per: Vec<f64> = ["C1_t_in_[0.1,1]", "C1_t_in_[0.01,0.1)", "C1_t_in_[0.001,0.01)"].iter().filter_map(|k| r.constant(k)).collect();
        checks.push(Check::new(
            format!("boundary Gaussian mass constant over t in [1e-3, 1], {d}"),
            change <= 0.1 && per.iter().all(|v| *v <= c1),
            format!("C1 = {c1:.4}, change under refinement {:.2}% (<= 10%), by decade {per:.4?}", 100.0 * change),
        ));
    }

    let n = rescaled_moment_bound(1, 0.0, 1.0);
    for d in [Domain::HalfLine, Domain::Interval01] {
        let r = rescaled_domain_constants(&d, 0.0, 1.0, 3)?;
        checks.push(Check::new(
            format!("A₁ + A₂ ≤ N, {d}"),
            r.verdict == Verdict::Bounded && (n - 2.0 * PI.sqrt()).abs() < 1e-10,
            format!("max A₁+A₂ = {:.6}, N = {n:.6}", r.sup()),
        ));
    }
    Ok(checks)
}

fn operators() -> Result<Vec<Check>> {
    let k = KernelHandle::exact(Domain::Interval01)?;
    let mut checks = Vec::new();

    let schur = schur_constants(&k, 2.0, 2.0, 1.0, &log_space(1e-3, 1.0, 5), 3)?;
    checks.push(Check::new("Schur constants k₁–k₈, (p,θ)=(2,2)", schur.all_bounded(), "all bounded".to_string()));

    let g = gradient_smoothing_ratio(&k, &params(2.0, 1.5, 0.0), &log_space(1e-4, 1e-2, 5), Derivative::First)?;
    let slope = g.constant("slope").unwrap_or(f64::NAN);
    checks.push(Check::new("gradient smoothing slope", (slope + 0.5).abs() <= 0.05, format!("{slope:.4}, expected −0.5 ± 0.05 over t ∈ [1e-4, 1e-2]")));

    let grid = Domain::Interval01.refined_line_grid(20, 6, 0.05, None)?;
    let f = random_smooth_field(&Domain::Interval01, &grid, 9)?;
    let rate = stability_rate(&k, &params(2.0, 2.0, 0.0), &f, 2.0)?;
    checks.push(Check::new("exponential stability rate", (rate / (PI * PI) - 1.0).abs() <= 0.01, format!("{rate:.5} vs π² = {:.5}", PI * PI)));

    let c = cross_space_smoothing(&k, &params(2.0, 2.0, 0.0), &log_space(1e-3, 1e-1, 5))?;
    let cs = c.constant("slope").unwrap_or(f64::NAN);
    checks.push(Check::new("cross-space slope −θ/(2p)", (cs + 0.5).abs() <= 0.1, format!("{cs:.4}, expected −0.5 ± 0.1")));

    let sp = min_weight_splice_check(&k, 0.1, &params(2.0, 2.0, 1.0), 100, 11)?;
    checks.push(Check::new("min-weight splice on 100 random fields", sp.holds && sp.samples == 100, format!("worst {:.4} ≤ bound {:.4}", sp.worst_ratio, sp.bound)));
    Ok(checks)
}

fn max_err(field: &Field, f: impl Fn(f64) -> f64) -> f64 {
    field.values.iter().zip(field.grid.first_coords()).map(|(v, x)| (v - f(x)).abs()).fold(0.0, f64::max)
}

fn dirichlet() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let grid = panel_grid(&Domain::Interval01, 10, 4, 1.0)?;
    let u = dirichlet_map(&Domain::Interval01, 0.0, &BoundaryData::endpoints(-0.5, 2.0), &grid)?;
    let e = max_err(&u, |x| -0.5 + 2.5 * x);
    checks.push(Check::new("interval, λ=0: linear interpolant", e < 1e-6, format!("max error {e:.2e} (< 1e-6)")));

    let grid = panel_grid(&Domain::HalfLine, 20, 4, 6.0)?;
    let u = dirichlet_map(&Domain::HalfLine, 1.0, &BoundaryData::origin(1.0), &grid)?;
    let e = max_err(&u, |x| (-x).exp());
    checks.push(Check::new("half-line D₁ = e^{−x}", e < 1e-6, format!("max error {e:.2e} (< 1e-6)")));

    let gamma = BoundaryData::origin(1.0);
    let mut res = Vec::new();
    for h in [1e-2, 5e-3] {
        let g = uniform_interior_grid(&Domain::HalfLine, h, 3.0)?;
        let u = dirichlet_map(&Domain::HalfLine, 1.0, &gamma, &g)?;
        res.push(verify_harmonicity(&u, 1.0, &gamma)?.residual);
    }
    let order = (res[0] / res[1]).log2();
    checks.push(Check::new("harmonicity residual O(h²)", (order - 2.0).abs() < 0.2, format!("residuals {:.3e}, {:.3e}, observed order {order:.3}", res[0], res[1])));

    let grid = panel_grid(&Domain::Interval01, 16, 6, 1.0)?;
    let image = KernelHandle::new(Domain::Interval01, Representation::ImageSeries)?;
    let sine = KernelHandle::new(Domain::Interval01, Representation::SineSeries)?;
    let mut worst = 0.0f64;
    for e in [BoundaryData::endpoints(1.0, 0.0), BoundaryData::endpoints(0.3, -1.2)] {
        for t in [0.01, 0.2] {
            let a = boundary_propagator(&image, t, &e, &grid)?;
            let b = boundary_propagator(&sine, t, &e, &grid)?;
            worst = worst.max(a.field.max_abs_diff(&b.field));
        }
    }
    checks.push(Check::new("propagator image vs sine series", worst < 1e-8, format!("max |Δ| = {worst:.2e} (< 1e-8)")));

    let k = KernelHandle::exact(Domain::HalfLine)?;
    let fit_grid = panel_grid(&Domain::HalfLine, 200, 4, 10.0)?;
    let fit = fit_majorant_constant(&k, &gamma, 4.0, &log_space(1e-3, 1.0, 10), &fit_grid)?;
    let c = fit.constant("C").unwrap_or(f64::NAN);
    let offset: Vec<f64> = log_space(1e-3, 1.0, 10).windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let ratio = majorant_ratio(&k, &gamma, 4.0, c, &offset, &panel_grid(&Domain::HalfLine, 333, 5, 10.0)?)?;
    checks.push(Check::new("majorant dominates half-line propagator", ratio <= 1.0, format!("C = {c:.5}, max ψ/majorant on fresh grid {ratio:.5}")));
    Ok(checks)
}

fn covariance(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let c = prods.iter().sum::<f64>() / n;
    let var = prods.iter().map(|p| (p - c).powi(2)).sum::<f64>() / n;
    (c, (var / n).sqrt())
}

fn simulation() -> Result<Vec<Check>> {
    let s = ConvolutionSetup::exact(Domain::Interval01, BoundaryNoiseSpec::EndpointAtoms, params(2.0, 2.0, 0.0));
    let mut checks = Vec::new();

    let n = 10_000;
    let monitor = line_points(&[0.1, 0.3, 0.5]);
    let one = simulate_convolution(&s, &[0.2], &monitor, n, &ProbeGrid::default(), 201)?;
    let grid = Domain::Interval01.refined_line_grid(12, 6, 0.05, None)?;
    let mid = simulate_convolution(&s, &[0.1], &grid, n, &ProbeGrid::default(), 202)?;
    let fields = (0..n).map(|k| Field::new(Domain::Interval01, grid.clone(), mid.snapshot(k, 0).to_vec(), 0.1)).collect::<Result<Vec<_>>>()?;
    let two = simulate_mild(&s, &Initial::PerPath(fields), &[0.1], &monitor, n, &ProbeGrid::default(), 203)?;
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..=i {
            let (c1, e1) = covariance(&one.node(0, i), &one.node(0, j));
            let (c2, e2) = covariance(&two.node(0, i), &two.node(0, j));
            worst = worst.max((c1 - c2).abs() / (e1 * e1 + e2 * e2).sqrt());
        }
    }
    checks.push(Check::new("two-stage vs one-shot covariance at t=0.2", worst < 3.0, format!("worst gap {worst:.2} standard errors over 6 entries")));

    let sine = |x: f64| (PI * x).sin();
    let g = SteppedGrid::new(1e-3, 100, 32);
    let mild = simulate_mild_stepped(&s, &sine, &g, 50, 204)?;
    let semi = simulate_semilinear(&s, &sine, &Nonlinearity::zero(), &g, &Picard::default(), 50, 204)?;
    checks.push(Check::new("f ≡ 0 semilinear equals mild, per path", mild.values == semi.ensemble.values, "bit-identical over 50 paths".to_string()));

    let ens = simulate_convolution(&s, &[0.1], &line_points(&[0.05, 0.2, 0.5]), n, &ProbeGrid::default(), 205)?;
    let se = (24.0 / n as f64).sqrt();
    let worst = (0..3).map(|j| (node_statistics(&ens.node(0, j)).kurtosis - 3.0).abs()).fold(0.0, f64::max);
    checks.push(Check::new("fourth-moment ratio", worst < 3.0 * se, format!("max |E M⁴/(E M²)² − 3| = {worst:.4} (< {:.4})", 3.0 * se)));

    let inv = invariant_diagnostics(&s, 5.0 / (PI * PI), &line_points(&[0.1, 0.3, 0.5]), 100_000, 206)?;
    checks.push(Check::new(
        "variance at t=5/π² within 2% of the limit",
        inv.quadrature_gap < 0.02 && inv.simulated_gap < 0.02 && inv.monotone,
        format!("quadrature gap {:.2e}, simulated gap {:.4}, monotone {}", inv.quadrature_gap, inv.simulated_gap, inv.monotone),
    ));
    Ok(checks)
}
