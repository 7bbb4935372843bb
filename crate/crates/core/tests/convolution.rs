use boundary_noise::convolution::*;
use boundary_noise::dirichlet::{BoundaryBasis, BoundaryData};
use boundary_noise::geometry::{Domain, QuadratureGrid, WeightedSpaceParams};
use boundary_noise::noise::{BoundaryNoiseSpec, SpectralMeasure};
use boundary_noise::quad;
use boundary_noise::semigroup::Field;
use boundary_noise::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use std::f64::consts::PI;

fn params(p: f64, theta: f64, delta: f64) -> WeightedSpaceParams {
    WeightedSpaceParams::new(p, theta, delta).unwrap()
}

fn interval(theta: f64) -> ConvolutionSetup {
    ConvolutionSetup::exact(Domain::Interval01, BoundaryNoiseSpec::EndpointAtoms, params(2.0, theta, 0.0))
}

fn zero_noise() -> ConvolutionSetup {
    let modes = vec![BoundaryData::endpoints(0.0, 0.0)];
    ConvolutionSetup::exact(Domain::Interval01, BoundaryNoiseSpec::FiniteSeries { modes }, params(2.0, 2.0, 0.0))
}

fn points(xs: &[f64]) -> QuadratureGrid {
    QuadratureGrid::new(1, xs.to_vec(), vec![1.0; xs.len()], 0, 0.0)
}

fn half_plane(measure: SpectralMeasure, theta: f64) -> ConvolutionSetup {
    let noise = BoundaryNoiseSpec::SpatiallyHomogeneous { measure, modes: 64, cutoff: 20.0 };
    ConvolutionSetup::exact(Domain::half_space(2).unwrap(), noise, params(2.0, theta, 40.0))
}

#[test]
fn interval_j_finite_inside_range() {
    let r = j_integral(&interval(2.0)).unwrap();
    assert_eq!(r.verdict, JVerdict::Finite, "{}", r.to_record());
    assert_eq!(r.prediction.verdict, PredictedVerdict::Finite);
    assert_eq!(r.agreement, Some(true));
}

#[test]
fn interval_j_divergent_below_range() {
    let r = j_integral(&interval(0.5)).unwrap();
    assert_eq!(r.verdict, JVerdict::Divergent, "{}", r.to_record());
    assert_eq!(r.agreement, Some(true));
    let v: Vec<f64> = r.levels.iter().map(|l| l.value).collect();
    assert!(v.windows(2).all(|w| w[1] > 2.0 * w[0]), "{v:?}");
}

#[test]
fn zero_noise_j_vanishes() {
    let r = j_integral(&zero_noise()).unwrap();
    assert_eq!(r.value(), 0.0);
    assert_eq!(r.verdict, JVerdict::Finite);
}

#[test]
fn ball_in_exact_mode_is_config_error() {
    let s = ConvolutionSetup::exact(Domain::unit_ball(2).unwrap(), BoundaryNoiseSpec::CircleWhiteNoise { k_max: 4 }, params(2.0, 2.5, 0.0));
    assert!(matches!(j_integral(&s), Err(Error::Config(_))));
}

#[test]
fn predicted_ranges() {
    let r = predict_wellposedness(&interval(2.0));
    assert_eq!(r.theta_range, Some((1.0, 3.0)));
    let circle = ConvolutionSetup::majorant(Domain::unit_ball(2).unwrap(), BoundaryNoiseSpec::CircleWhiteNoise { k_max: 8 }, params(2.0, 2.5, 0.0));
    assert_eq!(predict_wellposedness(&circle).theta_range, Some((2.0, 3.0)));
    let rough = half_plane(SpectralMeasure::bessel(0.5, 1).unwrap(), 2.0);
    let (lo, hi) = predict_wellposedness(&rough).theta_range.unwrap();
    assert!((lo - 1.5).abs() < 1e-12 && hi == 3.0);
    let half_line = ConvolutionSetup::exact(Domain::HalfLine, BoundaryNoiseSpec::EndpointAtoms, params(2.0, 2.0, 1.0));
    let pr = predict_wellposedness(&half_line);
    assert_eq!(pr.delta_min, Some(0.5));
    assert_eq!(pr.verdict, PredictedVerdict::Finite);
}

#[test]
fn alpha_shifts_lower_endpoint() {
    let r = predict_wellposedness(&interval(2.0).with_alpha(0.25));
    assert_eq!(r.theta_range, Some((1.5, 3.0)));
}

#[test]
fn dirac_on_circle_is_rejected() {
    let dirac = BoundaryData::atoms(vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
    let s = ConvolutionSetup::majorant(
        Domain::unit_ball(2).unwrap(),
        BoundaryNoiseSpec::FiniteSeries { modes: vec![dirac] },
        params(2.0, 2.0, 0.0),
    );
    assert!(matches!(predict_wellposedness(&s).verdict, PredictedVerdict::Rejected(_)));
    assert!(catalog().iter().any(|e| !e.treatable && e.scenario == Scenario::CircleDirac));
}

#[test]
fn uncatalogued_setup_has_no_prediction() {
    let lebesgue_3d = half_plane(SpectralMeasure::lebesgue(1).unwrap(), 2.5);
    let s = ConvolutionSetup { domain: Domain::half_space(3).unwrap(), ..lebesgue_3d };
    assert!(matches!(predict_wellposedness(&s).verdict, PredictedVerdict::NoPrediction(_)));
    let unmet_delta = ConvolutionSetup::exact(Domain::HalfLine, BoundaryNoiseSpec::EndpointAtoms, params(2.0, 2.0, 0.25));
    assert!(matches!(predict_wellposedness(&unmet_delta).verdict, PredictedVerdict::NoPrediction(_)));
}

#[test]
fn catalogue_lists_every_scenario_once() {
    let c = catalog();
    assert_eq!(c.len(), Scenario::ALL.len());
    for s in Scenario::ALL {
        assert_eq!(Scenario::from_id(s.id()), Some(s));
        assert_eq!(c.iter().filter(|e| e.scenario == s).count(), 1);
    }
}

/// θ at 0.25 inside and outside both ends of the interval for the endpoint noise.
#[test]
fn interval_thresholds_match_prediction() {
    for theta in [0.75, 1.25, 2.75, 3.25] {
        let r = j_integral(&interval(theta)).unwrap();
        assert_eq!(r.agreement, Some(true), "θ={theta}\n{}", r.to_record());
    }
}

#[test]
fn white_half_plane_thresholds_match_prediction() {
    for theta in [1.75, 2.25] {
        let r = j_integral(&half_plane(SpectralMeasure::lebesgue(1).unwrap(), theta)).unwrap();
        assert_eq!(r.agreement, Some(true), "θ={theta}\n{}", r.to_record());
    }
}

#[test]
fn alpha_continuity_mid_interval() {
    let theta = 2.0;
    let alpha = (theta - 1.0) / 4.0;
    let r = j_integral(&interval(theta).with_alpha(alpha)).unwrap();
    assert_eq!(r.j_verdict, JVerdict::Finite, "{}", r.to_record());
}

fn half_line_variance_oracle(t: f64, x: f64) -> f64 {
    // ∫₀ᵗ (x/(2s√(πs)) e^{−x²/4s})² ds on geometric panels
    let edges = quad::geometric_edges(1e-6 * x * x, t, 1.5);
    quad::integrate_panels(&edges, 20, |s| {
        let f = x / (2.0 * s * (PI * s).sqrt()) * (-x * x / (4.0 * s)).exp();
        f * f
    })
}

#[test]
fn half_line_variance_matches_oracle() {
    let s = ConvolutionSetup::exact(Domain::HalfLine, BoundaryNoiseSpec::EndpointAtoms, params(2.0, 2.0, 1.0));
    let v = variance_at(&s, 1.0, &[1.0]).unwrap();
    let oracle = half_line_variance_oracle(1.0, 1.0);
    assert!((v / oracle - 1.0).abs() < 1e-9, "{v} vs {oracle}");
    // at x = 1 the integral is 3e^{−1/2}/(2π)
    assert!((oracle - 0.289_597_057_890_161_7).abs() < 1e-12, "{oracle}");
}

#[test]
fn variance_is_nondecreasing_in_time() {
    let s = interval(2.0);
    for x in [0.01, 0.2, 0.5] {
        let vs: Vec<f64> = [0.01, 0.05, 0.1, 0.5, 1.0].iter().map(|&t| variance_at(&s, t, &[x]).unwrap()).collect();
        assert!(vs.windows(2).all(|w| w[1] >= w[0]), "{vs:?}");
    }
}

#[test]
fn zero_noise_variance_field_vanishes() {
    let grid = points(&[0.1, 0.5]);
    let f = variance_field(&zero_noise(), 0.1, &grid).unwrap();
    assert!(f.values.iter().all(|v| *v == 0.0));
}

#[test]
fn ito_isometry_mean_and_kurtosis() {
    let s = interval(2.0);
    let xs = [0.02, 0.1, 0.3, 0.5];
    let ens = simulate_convolution(&s, &[0.05, 0.1], &points(&xs), 10_000, &ProbeGrid::default(), 7).unwrap();
    for ti in 0..2 {
        for (j, x) in xs.iter().enumerate() {
            let st = node_statistics(&ens.node(ti, j));
            let exact = variance_at(&s, ens.times[ti], &[*x]).unwrap();
            assert!((st.variance - exact).abs() < 3.0 * st.variance_se, "t={} x={x}: {} vs {exact}", ens.times[ti], st.variance);
            assert!(st.mean.abs() < 3.0 * st.mean_se, "mean {} at x={x}", st.mean);
            assert!((st.kurtosis - 3.0).abs() < 0.15, "kurtosis {}", st.kurtosis);
        }
    }
}

#[test]
fn ito_isometry_white_half_plane() {
    let s = half_plane(SpectralMeasure::lebesgue(1).unwrap(), 2.5);
    let pts = QuadratureGrid::new(2, vec![0.1, 0.0, 0.1, 0.3, 0.4, 0.0], vec![1.0; 3], 0, 0.0);
    let ens = simulate_convolution(&s, &[0.1], &pts, 10_000, &ProbeGrid::default(), 11).unwrap();
    for j in 0..3 {
        let st = node_statistics(&ens.node(0, j));
        let exact = variance_at(&s, 0.1, pts.node(j)).unwrap();
        assert!((st.variance - exact).abs() < 3.0 * st.variance_se, "{:?}: {} vs {exact}", pts.node(j), st.variance);
    }
}

#[test]
fn coarse_grid_is_refused() {
    let coarse = ProbeGrid { ratio: 3.0, base_steps: 4, ..ProbeGrid::default() };
    let err = simulate_convolution(&interval(2.0), &[0.1], &points(&[0.05]), 10, &coarse, 1).unwrap_err();
    assert!(matches!(err, Error::Refusal(_)), "{err}");
}

#[test]
fn replay_is_deterministic() {
    let s = interval(2.0);
    let a = simulate_convolution(&s, &[0.1], &points(&[0.2]), 50, &ProbeGrid::default(), 99).unwrap();
    let b = simulate_convolution(&s, &[0.1], &points(&[0.2]), 50, &ProbeGrid::default(), 99).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn mild_without_noise_decays_like_first_eigenmode() {
    let grid = Domain::Interval01.refined_line_grid(30, 8, 0.02, None).unwrap();
    let x0 = Field::from_fn(Domain::Interval01, grid, |x| (PI * x[0]).sin()).unwrap();
    let xs = [0.25, 0.5];
    let ens = simulate_mild(&zero_noise(), &Initial::Deterministic(x0), &[0.05, 0.1], &points(&xs), 3, &ProbeGrid::default(), 1).unwrap();
    for (ti, t) in [0.05, 0.1].iter().enumerate() {
        for (j, x) in xs.iter().enumerate() {
            let want = (-PI * PI * t).exp() * (PI * x).sin();
            assert!((ens.value(2, ti, j) - want).abs() < 1e-8, "{} vs {want}", ens.value(2, ti, j));
        }
    }
    let still = simulate_mild(&zero_noise(), &Initial::Zero, &[0.1], &points(&xs), 2, &ProbeGrid::default(), 1).unwrap();
    assert!(still.values.iter().all(|v| *v == 0.0));
}

#[test]
fn mild_mean_is_semigroup_of_initial_state() {
    let grid = Domain::Interval01.refined_line_grid(30, 8, 0.02, None).unwrap();
    let x0 = Field::from_fn(Domain::Interval01, grid, |x| (PI * x[0]).sin()).unwrap();
    let ens = simulate_mild(&interval(2.0), &Initial::Deterministic(x0), &[0.1], &points(&[0.3, 0.5]), 10_000, &ProbeGrid::default(), 5).unwrap();
    for (j, x) in [0.3, 0.5].iter().enumerate() {
        let st = node_statistics(&ens.node(0, j));
        let want = (-PI * PI * 0.1).exp() * (PI * x).sin();
        assert!((st.mean - want).abs() < 3.0 * st.mean_se, "{} vs {want}", st.mean);
    }
}

fn covariance(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let c = prods.iter().sum::<f64>() / n;
    let var = prods.iter().map(|p| (p - c).powi(2)).sum::<f64>() / n;
    (c, (var / n).sqrt())
}

/// Law of X(0.2) from (X(0.1), fresh noise) against the one-shot law.
#[test]
fn two_stage_matches_one_shot() {
    let s = interval(2.0);
    let n = 10_000;
    let monitor = [0.1, 0.3, 0.5];
    let one = simulate_convolution(&s, &[0.2], &points(&monitor), n, &ProbeGrid::default(), 21).unwrap();
    let grid = Domain::Interval01.refined_line_grid(12, 6, 0.05, None).unwrap();
    let mid = simulate_convolution(&s, &[0.1], &grid, n, &ProbeGrid::default(), 22).unwrap();
    let fields: Vec<Field> = (0..n)
        .map(|k| Field::new(Domain::Interval01, grid.clone(), mid.snapshot(k, 0).to_vec(), 0.1).unwrap())
        .collect();
    let two = simulate_mild(&s, &Initial::PerPath(fields), &[0.1], &points(&monitor), n, &ProbeGrid::default(), 23).unwrap();
    for i in 0..monitor.len() {
        for j in 0..=i {
            let (c1, e1) = covariance(&one.node(0, i), &one.node(0, j));
            let (c2, e2) = covariance(&two.node(0, i), &two.node(0, j));
            assert!((c1 - c2).abs() < 3.0 * (e1 * e1 + e2 * e2).sqrt(), "({i},{j}): {c1} vs {c2}");
        }
    }
}

fn sine(x: f64) -> f64 {
    (PI * x).sin()
}

#[test]
fn semilinear_with_zero_drift_is_the_mild_solution() {
    let s = interval(2.0);
    let g = SteppedGrid::new(1e-3, 50, 32);
    let mild = simulate_mild_stepped(&s, &sine, &g, 20, 4).unwrap();
    let semi = simulate_semilinear(&s, &sine, &Nonlinearity::zero(), &g, &Picard::default(), 20, 4).unwrap();
    assert_eq!(mild.values, semi.ensemble.values);
    assert!(semi.iterations.iter().all(|&i| i == 1));
}

/// f(u) = −u: the mean solves the heat equation with an extra −u term, so it is e^{−(1+π²)t} sin(πx).
#[test]
fn linear_drift_shifts_the_mean() {
    let s = interval(2.0);
    let g = SteppedGrid::new(1e-3, 100, 32);
    let r = simulate_semilinear(&s, &sine, &Nonlinearity::linear(-1.0), &g, &Picard::default(), 2000, 8).unwrap();
    let e = &r.ensemble;
    for j in [8, 16, 24] {
        let x = e.points.node(j)[0];
        let st = node_statistics(&e.node(99, j));
        // the explicit Euler drift step is first order in dt
        let want = (-(1.0 + PI * PI) * 0.1).exp() * sine(x);
        let bias = 0.1 * 1e-3 * want.abs();
        assert!((st.mean - want).abs() < 3.0 * st.mean_se + bias, "x={x}: {} vs {want}", st.mean);
    }
}

#[test]
fn clamp_drift_converges_quickly() {
    let g = SteppedGrid::new(1e-3, 100, 32);
    let r = simulate_semilinear(&interval(2.0), &sine, &Nonlinearity::clamp(0.5), &g, &Picard::default(), 200, 9).unwrap();
    assert!(r.iterations.iter().all(|&i| i <= 20), "{:?}", r.iterations.iter().max());
}

#[test]
fn picard_reports_non_convergence() {
    let g = SteppedGrid::new(1e-3, 100, 16);
    let picard = Picard { tolerance: 1e-14, max_iterations: 2 };
    let err = simulate_semilinear(&interval(2.0), &sine, &Nonlinearity::linear(-1.0), &g, &picard, 4, 9).unwrap_err();
    assert!(matches!(err, Error::NonConvergence(_)), "{err}");
}

#[test]
fn long_time_variance_reaches_its_limit() {
    let s = interval(2.0);
    let r = invariant_diagnostics(&s, 5.0 / (PI * PI), &points(&[0.1, 0.3, 0.5]), 100_000, 31).unwrap();
    assert_eq!(r.j_infinity.j_verdict, JVerdict::Finite);
    assert!(r.monotone);
    assert!(r.quadrature_gap < 0.02, "{}", r.quadrature_gap);
    assert!(r.simulated_gap < 0.02, "{:?} vs {:?}", r.simulated_variance, r.variance_limit);
}

#[test]
fn zero_noise_has_trivial_invariant_law() {
    let r = invariant_diagnostics(&zero_noise(), 0.5, &points(&[0.3]), 10, 1).unwrap();
    assert_eq!(r.variance_limit, vec![0.0]);
    assert_eq!(r.j_infinity.value(), 0.0);
}

fn tail_grid() -> QuadratureGrid {
    Domain::Interval01.refined_line_grid(6, 4, 0.1, None).unwrap()
}

#[test]
fn gaussian_norms_have_quadratic_tails() {
    let s = interval(2.0);
    let ens = simulate_convolution(&s, &[0.1], &tail_grid(), 100_000, &ProbeGrid::default(), 41).unwrap();
    let norms = ens.norms(&Domain::Interval01, 0, &s.params);
    let r = gaussian_tail_diagnostic(&norms, 0.2);
    assert!(r.exponent >= 1.8, "{r:?}");
    assert_eq!(r.verdict, TailVerdict::Gaussian);
    assert!(r.beta > 0.0 && r.beta.is_finite());

    // negative control: every path rescaled by one shared √(ν/χ²_ν), ν = 3
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let chi = ChiSquared::<f64>::new(3.0).unwrap();
    let heavy: Vec<f64> = norms.iter().map(|n| n * (3.0 / Distribution::<f64>::sample(&chi, &mut rng)).sqrt()).collect();
    let h = gaussian_tail_diagnostic(&heavy, 0.2);
    assert!(h.exponent < 1.8, "{h:?}");
    assert_eq!(h.verdict, TailVerdict::Heavier);
}

#[test]
fn tail_of_constant_norms_is_degenerate() {
    let r = gaussian_tail_diagnostic(&vec![1.5; 1000], 0.2);
    assert_eq!(r.verdict, TailVerdict::Degenerate);
    let few = gaussian_tail_diagnostic(&[1.0, 2.0, 3.0], 0.2);
    assert_eq!(few.verdict, TailVerdict::Inconclusive);
}

#[test]
fn gaussian_absolute_moments() {
    assert!((gaussian_abs_moment(2.0) - 1.0).abs() < 1e-12);
    assert!((gaussian_abs_moment(4.0) - 3.0).abs() < 1e-12);
    assert!((gaussian_abs_moment(1.0) - (2.0 / PI).sqrt()).abs() < 1e-12);
}

/// E∫|M|^p w = E|Z|^p ∫σ^p w for p = 2, 4.
#[test]
fn moment_identity() {
    let grid = Domain::Interval01.refined_line_grid(6, 4, 0.1, None).unwrap();
    for (p, theta) in [(2.0, 2.0), (4.0, 4.0)] {
        let s = ConvolutionSetup::exact(Domain::Interval01, BoundaryNoiseSpec::EndpointAtoms, params(p, theta, 0.0));
        let ens = simulate_convolution(&s, &[0.1], &grid, 20_000, &ProbeGrid::default(), 51).unwrap();
        let w: Vec<f64> = grid.nodes().zip(&grid.weights).map(|(x, wq)| wq * s.params.weight_at(x[0].min(1.0 - x[0]), x[0] * x[0])).collect();
        let samples: Vec<f64> = (0..ens.n_paths).map(|k| ens.snapshot(k, 0).iter().zip(&w).map(|(m, w)| w * m.abs().powf(p)).sum()).collect();
        let st = node_statistics(&samples);
        let sigma = variance_field(&s, 0.1, &grid).unwrap();
        let want = gaussian_abs_moment(p) * sigma.values.iter().zip(&w).map(|(v, w)| w * v.powf(p / 2.0)).sum::<f64>();
        assert!((st.mean - want).abs() < 3.0 * st.mean_se, "p={p}: {} ± {} vs {want}", st.mean, st.mean_se);
    }
}

/// E‖M(t+h) − M(t)‖² ≲ h^α with α = (θ − (p−1))/(2p).
#[test]
fn increments_shrink_at_holder_rate() {
    let s = interval(2.0);
    let t = 0.1;
    let hs = [1e-4, 1e-3, 1e-2];
    let times: Vec<f64> = std::iter::once(t).chain(hs.iter().map(|h| t + h)).collect();
    let grid = tail_grid();
    let ens = simulate_convolution(&s, &times, &grid, 4000, &ProbeGrid::default(), 61).unwrap();
    let w: Vec<f64> = grid.nodes().zip(&grid.weights).map(|(x, wq)| wq * s.params.weight_at(x[0].min(1.0 - x[0]), 0.0)).collect();
    let mean_sq: Vec<f64> = (1..times.len())
        .map(|i| {
            (0..ens.n_paths)
                .map(|k| ens.snapshot(k, i).iter().zip(ens.snapshot(k, 0)).zip(&w).map(|((a, b), w)| w * (a - b).powi(2)).sum::<f64>())
                .sum::<f64>()
                / ens.n_paths as f64
        })
        .collect();
    let (slope, _) = quad::linear_fit(&hs.map(f64::ln), &mean_sq.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let alpha = (2.0 - 1.0) / 4.0;
    assert!(slope >= alpha * 0.9, "slope {slope}, {mean_sq:?}");
}

#[test]
fn ensemble_columnar_output_has_one_row_per_value() {
    let ens = simulate_convolution(&interval(2.0), &[0.1], &points(&[0.2, 0.4]), 3, &ProbeGrid::default(), 1).unwrap();
    let text = ens.to_columnar();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 6);
}

#[test]
fn circle_modes_need_majorant() {
    let s = ConvolutionSetup::exact(Domain::unit_ball(2).unwrap(), BoundaryNoiseSpec::FiniteSeries {
        modes: vec![BoundaryData::BasisCoeffs { basis: BoundaryBasis::CircleFourier, coeffs: vec![1.0], level: 6 }],
    }, params(2.0, 2.0, 0.0));
    assert!(s.validate().is_err());
}
