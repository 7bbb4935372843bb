use boundary_noise::dirichlet::*;
use boundary_noise::estimates::gaussian_boundary_mass;
use boundary_noise::geometry::{Domain, QuadratureGrid};
use boundary_noise::kernels::{KernelHandle, Representation};
use boundary_noise::quad::log_space;
use boundary_noise::semigroup::{apply_semigroup, evaluate_semigroup};
use proptest::prelude::*;
use std::f64::consts::PI;

fn max_err(field: &[f64], grid: &QuadratureGrid, f: impl Fn(f64) -> f64) -> f64 {
    field.iter().zip(grid.first_coords()).map(|(v, x)| (v - f(x)).abs()).fold(0.0, f64::max)
}

#[test]
fn interval_linear_interpolant() {
    let grid = panel_grid(&Domain::Interval01, 10, 4, 1.0).unwrap();
    let u = dirichlet_map(&Domain::Interval01, 0.0, &BoundaryData::endpoints(1.0, 0.0), &grid).unwrap();
    assert!(max_err(&u.values, &grid, |x| 1.0 - x) < 1e-6);
    let u = dirichlet_map(&Domain::Interval01, 0.0, &BoundaryData::endpoints(-0.5, 2.0), &grid).unwrap();
    assert!(max_err(&u.values, &grid, |x| -0.5 + 2.5 * x) < 1e-6);
}

#[test]
fn interval_positive_lambda_matches_sinh_profile() {
    let grid = panel_grid(&Domain::Interval01, 10, 4, 1.0).unwrap();
    let lam: f64 = 4.0;
    let k = lam.sqrt();
    let u = dirichlet_map(&Domain::Interval01, lam, &BoundaryData::endpoints(1.0, 3.0), &grid).unwrap();
    let exact = |x: f64| ((k * (1.0 - x)).sinh() + 3.0 * (k * x).sinh()) / k.sinh();
    assert!(max_err(&u.values, &grid, exact) < 1e-6);
}

#[test]
fn half_line_exponential_profile() {
    let grid = panel_grid(&Domain::HalfLine, 20, 4, 6.0).unwrap();
    for lam in [0.25f64, 1.0, 9.0] {
        let u = dirichlet_map(&Domain::HalfLine, lam, &BoundaryData::origin(1.0), &grid).unwrap();
        assert!(max_err(&u.values, &grid, |x| (-lam.sqrt() * x).exp()) < 1e-6, "λ = {lam}");
    }
    let one = QuadratureGrid::new(1, vec![1.0], vec![1.0], 0, 0.0);
    let u = dirichlet_map(&Domain::HalfLine, 1.0, &BoundaryData::origin(1.0), &one).unwrap();
    assert!((u.values[0] - 0.367879).abs() < 1e-6);
}

#[test]
fn zero_datum_gives_zero() {
    let grid = panel_grid(&Domain::Interval01, 4, 4, 1.0).unwrap();
    let u = dirichlet_map(&Domain::Interval01, 2.0, &BoundaryData::endpoints(0.0, 0.0), &grid).unwrap();
    assert!(u.values.iter().all(|v| *v == 0.0));
    let k = KernelHandle::exact(Domain::Interval01).unwrap();
    let psi = boundary_propagator(&k, 0.1, &BoundaryData::endpoints(0.0, 0.0), &grid).unwrap();
    assert!(psi.field.values.iter().all(|v| *v == 0.0));
}

#[test]
fn harmonicity_residual_is_second_order() {
    let gamma = BoundaryData::origin(1.0);
    let res: Vec<f64> = [1e-2, 5e-3]
        .iter()
        .map(|&h| {
            let grid = uniform_interior_grid(&Domain::HalfLine, h, 3.0).unwrap();
            let u = dirichlet_map(&Domain::HalfLine, 1.0, &gamma, &grid).unwrap();
            let r = verify_harmonicity(&u, 1.0, &gamma).unwrap();
            assert!(r.boundary_error <= h * 1.0 + 1e-12);
            r.residual
        })
        .collect();
    assert!(res[0] < 1e-4, "{res:?}");
    let order = (res[0] / res[1]).log2();
    assert!((order - 2.0).abs() < 0.2, "{res:?}");
}

#[test]
fn harmonicity_of_linear_interpolant() {
    let gamma = BoundaryData::endpoints(1.0, 0.0);
    let h = 1.0 / 64.0;
    let grid = uniform_interior_grid(&Domain::Interval01, h, 1.0).unwrap();
    let u = dirichlet_map(&Domain::Interval01, 0.0, &gamma, &grid).unwrap();
    let r = verify_harmonicity(&u, 0.0, &gamma).unwrap();
    assert!(r.residual < 1e-5, "{r:?}");
    assert!(r.boundary_error <= h + 1e-9, "{r:?}");
}

#[test]
fn half_line_propagator_closed_form() {
    let k = KernelHandle::exact(Domain::HalfLine).unwrap();
    let grid = QuadratureGrid::new(1, vec![2.0], vec![1.0], 0, 0.0);
    let psi = boundary_propagator(&k, 1.0, &BoundaryData::origin(1.0), &grid).unwrap();
    assert!((psi.field.values[0] - (-1.0f64).exp() / PI.sqrt()).abs() < 1e-14);
    assert!((psi.field.values[0] - 0.207554).abs() < 1e-6);
}

#[test]
fn propagator_image_and_sine_series_agree() {
    let grid = panel_grid(&Domain::Interval01, 16, 6, 1.0).unwrap();
    let image = KernelHandle::new(Domain::Interval01, Representation::ImageSeries).unwrap();
    let sine = KernelHandle::new(Domain::Interval01, Representation::SineSeries).unwrap();
    for e in [BoundaryData::endpoints(1.0, 0.0), BoundaryData::endpoints(0.3, -1.2)] {
        let a = boundary_propagator(&image, 0.2, &e, &grid).unwrap();
        let b = boundary_propagator(&sine, 0.2, &e, &grid).unwrap();
        assert!(a.field.max_abs_diff(&b.field) < 1e-8);
    }
    let a = boundary_propagator(&sine, 0.2, &BoundaryData::endpoints(1.0, 0.0), &grid).unwrap();
    let sine_sum = |x: f64| (1..200).map(|k| 2.0 * k as f64 * PI * (k as f64 * PI * x).sin() * (-(k * k) as f64 * PI * PI * 0.2).exp()).sum::<f64>();
    assert!(max_err(&a.field.values, &grid, sine_sum) < 1e-10);
    assert!(a.field.values.iter().all(|v| *v >= 0.0));
}

#[test]
fn lambda_consistency_on_interval() {
    let k = KernelHandle::exact(Domain::Interval01).unwrap();
    let gamma = BoundaryData::endpoints(1.0, -0.5);
    let t = 0.1;
    let quad_grid = panel_grid(&Domain::Interval01, 32, 8, 1.0).unwrap();
    let h = 1e-3;
    let xs: Vec<f64> = (100..=900).step_by(50).map(|i| i as f64 * h).collect();
    let probes = QuadratureGrid::new(1, xs.clone(), vec![1.0; xs.len()], 0, 0.0);
    let psi = boundary_propagator(&k, t, &gamma, &probes).unwrap();
    for lam in [0.0, 2.0, 10.0] {
        let u = dirichlet_map(&Domain::Interval01, lam, &gamma, &quad_grid).unwrap();
        let at = |x: f64| evaluate_semigroup(&k, t, &u, &[x - h, x, x + h]).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let s = at(x);
            let lhs = lam * s[1] - (s[0] - 2.0 * s[1] + s[2]) / (h * h);
            assert!((lhs - psi.field.values[i]).abs() < 1e-5, "λ={lam} x={x}: {lhs} vs {}", psi.field.values[i]);
        }
    }
}

#[test]
fn propagator_is_smooth_for_atomic_data() {
    let k = KernelHandle::exact(Domain::Interval01).unwrap();
    let h = 1e-3;
    let grid = uniform_interior_grid(&Domain::Interval01, h, 1.0).unwrap();
    for t in [1e-2, 1e-1] {
        let psi = boundary_propagator(&k, t, &BoundaryData::endpoints(1.0, 1.0), &grid).unwrap();
        let v = &psi.field.values;
        let d2 = (1..v.len() - 1).map(|i| ((v[i - 1] - 2.0 * v[i] + v[i + 1]) / (h * h)).abs()).fold(0.0, f64::max);
        assert!(v.iter().all(|x| x.is_finite()));
        // |∂²ψ| ≲ t^{-2} near the boundary
        assert!(d2 < 10.0 / (t * t), "t={t}: {d2}");
    }
}

#[test]
fn propagator_semigroup_consistency() {
    let k = KernelHandle::exact(Domain::Interval01).unwrap();
    let grid = panel_grid(&Domain::Interval01, 40, 8, 1.0).unwrap();
    let e = BoundaryData::endpoints(1.0, 0.25);
    let early = boundary_propagator(&k, 0.05, &e, &grid).unwrap();
    let late = boundary_propagator(&k, 0.1, &e, &grid).unwrap();
    let pushed = apply_semigroup(&k, 0.05, &early.field).unwrap();
    assert!(pushed.max_abs_diff(&late.field) < 1e-8);
}

#[test]
fn majorant_dominates_half_line_propagator() {
    let k = KernelHandle::exact(Domain::HalfLine).unwrap();
    let e = BoundaryData::origin(1.0);
    let grid = panel_grid(&Domain::HalfLine, 200, 4, 10.0).unwrap();
    let fit = fit_majorant_constant(&k, &e, 4.0, &log_space(1e-3, 1.0, 10), &grid).unwrap();
    let c = fit.constant("C").unwrap();
    // sup_z z e^{-z²/8}·√2 = 2√2 e^{-1/2} with c = 4
    assert!((c / MAJORANT_FIT_SLACK - 2.0 * 2f64.sqrt() * (-0.5f64).exp()).abs() < 1e-3, "{c}");
    let offset: Vec<f64> = log_space(1e-3, 1.0, 10).windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let other = panel_grid(&Domain::HalfLine, 333, 5, 10.0).unwrap();
    assert!(majorant_ratio(&k, &e, 4.0, c, &offset, &other).unwrap() <= 1.0);
}

#[test]
fn majorant_on_ball_reduces_to_boundary_mass() {
    let level = 7;
    let ball = Domain::UnitBall(2);
    let ones = BoundaryData::sampled(ball.boundary_quadrature(level).unwrap(), vec![1.0; 1 << level]).unwrap();
    let pts = QuadratureGrid::new(2, vec![0.0, 0.0, 0.5, 0.1, 0.9, 0.0], vec![1.0; 3], 0, 0.0);
    let (t, c, cst) = (0.05, 2.0, 1.7);
    let m = propagator_majorant(&ball, t, &ones, c, cst, &pts).unwrap();
    for (x, v) in pts.nodes().zip(&m.values) {
        let i = gaussian_boundary_mass(&ball, t, x, 2.0 * c, level).unwrap();
        let expected = cst / t.sqrt() * i / (2.0 * PI * c * t);
        assert!((v - expected).abs() < 1e-12 * expected.max(1.0), "{v} {expected}");
    }
}

#[test]
fn majorant_decays_at_long_times() {
    let e = BoundaryData::origin(1.0);
    let grid = QuadratureGrid::new(1, vec![0.5], vec![1.0], 0, 0.0);
    let k = KernelHandle::exact(Domain::HalfLine).unwrap();
    let vals: Vec<(f64, f64)> = [1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&t| {
            let m = propagator_majorant(&Domain::HalfLine, t, &e, 4.0, 1.0, &grid).unwrap().values[0];
            let p = boundary_propagator(&k, t, &e, &grid).unwrap().field.values[0];
            (m, p)
        })
        .collect();
    assert!(vals.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1), "{vals:?}");
    // t^{-1} and t^{-3/2} decay at a fixed interior point
    assert!(vals[3].0 < 2e-3 * vals[0].0 && vals[3].1 < 1e-4 * vals[0].1, "{vals:?}");
}

#[test]
fn data_file_drives_the_map() {
    let dir = std::env::temp_dir().join(format!("bn-gamma-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("gamma.txt");
    std::fs::write(&path, "# left and right end\natoms\n0 1\n1 0\n").unwrap();
    let gamma = BoundaryData::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let grid = QuadratureGrid::new(1, vec![0.25], vec![1.0], 0, 0.0);
    let u = dirichlet_map(&Domain::Interval01, 0.0, &gamma, &grid).unwrap();
    assert!((u.values[0] - 0.75).abs() < 1e-6);
    std::fs::remove_dir_all(dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_in_the_datum(a in -2.0f64..2.0, b in -2.0f64..2.0, s in -3.0f64..3.0, t in 1e-3f64..1.0) {
        let grid = panel_grid(&Domain::Interval01, 3, 4, 1.0).unwrap();
        let g1 = BoundaryData::endpoints(a, b);
        let g2 = BoundaryData::endpoints(b, -a);
        let sum = BoundaryData::endpoints(a + s * b, b - s * a);
        let u = |g: &BoundaryData| dirichlet_map(&Domain::Interval01, 1.0, g, &grid).unwrap().values;
        let (u1, u2, us) = (u(&g1), u(&g2), u(&sum));
        for i in 0..us.len() {
            prop_assert!((us[i] - u1[i] - s * u2[i]).abs() < 1e-12 * (1.0 + us[i].abs()));
        }
        let k = KernelHandle::exact(Domain::Interval01).unwrap();
        let p = |g: &BoundaryData| boundary_propagator(&k, t, g, &grid).unwrap().field.values;
        let (p1, p2, ps) = (p(&g1), p(&g2), p(&sum));
        for i in 0..ps.len() {
            prop_assert!((ps[i] - p1[i] - s * p2[i]).abs() < 1e-12 * (1.0 + ps[i].abs() + p1[i].abs() + p2[i].abs()));
        }
    }

    #[test]
    fn nonnegative_data_give_nonnegative_propagator(a in 0.0f64..3.0, b in 0.0f64..3.0, t in 1e-4f64..2.0, x in 1e-3f64..0.999) {
        let k = KernelHandle::exact(Domain::Interval01).unwrap();
        let grid = QuadratureGrid::new(1, vec![x], vec![1.0], 0, 0.0);
        let psi = boundary_propagator(&k, t, &BoundaryData::endpoints(a, b), &grid).unwrap();
        prop_assert!(psi.field.values[0] >= 0.0);
    }
}
