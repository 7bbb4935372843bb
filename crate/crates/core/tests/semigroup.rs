use boundary_noise::geometry::{Domain, WeightedSpaceParams};
use boundary_noise::kernels::KernelHandle;
use boundary_noise::quad::log_space;
use boundary_noise::report::Verdict;
use boundary_noise::semigroup::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn interval() -> KernelHandle {
    KernelHandle::exact(Domain::Interval01).unwrap()
}

fn half_line() -> KernelHandle {
    KernelHandle::exact(Domain::HalfLine).unwrap()
}

/// Crank–Nicolson for u_t = u_xx on [0, L], u = 0 at both ends.
fn crank_nicolson(u0: impl Fn(f64) -> f64, len: f64, n: usize, t: f64, steps: usize) -> (f64, Vec<f64>) {
    let h = len / n as f64;
    let dt = t / steps as f64;
    let r = dt / (h * h);
    let mut u: Vec<f64> = (0..=n).map(|i| u0(i as f64 * h)).collect();
    u[0] = 0.0;
    u[n] = 0.0;
    let m = n - 1;
    for _ in 0..steps {
        let rhs: Vec<f64> = (1..n).map(|i| u[i] + 0.5 * r * (u[i - 1] - 2.0 * u[i] + u[i + 1])).collect();
        // Thomas algorithm for (1 + r) on the diagonal, −r/2 off it
        let (a, b) = (-0.5 * r, 1.0 + r);
        let mut cp = vec![0.0; m];
        let mut dp = vec![0.0; m];
        cp[0] = a / b;
        dp[0] = rhs[0] / b;
        for i in 1..m {
            let den = b - a * cp[i - 1];
            cp[i] = a / den;
            dp[i] = (rhs[i] - a * dp[i - 1]) / den;
        }
        let mut x = vec![0.0; m];
        x[m - 1] = dp[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        u[1..n].copy_from_slice(&x);
    }
    (h, u)
}

#[test]
fn half_line_matches_crank_nicolson() {
    let grid = Domain::HalfLine.refined_line_grid(20, 6, 0.05, Some(10.0)).unwrap();
    let psi = Field::from_fn(Domain::HalfLine, grid, |x| x[0] * (-x[0] * x[0]).exp()).unwrap();
    let out = apply_semigroup(&half_line(), 0.1, &psi).unwrap();
    let (h, u) = crank_nicolson(|x| x * (-x * x).exp(), 10.0, 4000, 0.1, 2000);
    let mut worst = 0.0f64;
    let mut worst_exact = 0.0f64;
    for (x, v) in out.grid.nodes().zip(&out.values) {
        let x = x[0];
        if x > 5.0 {
            continue;
        }
        let i = (x / h).floor() as usize;
        let f = x / h - i as f64;
        let cn = u[i] * (1.0 - f) + u[i + 1] * f;
        worst = worst.max((v - cn).abs());
        // odd data: the whole-line solution is already the Dirichlet one
        let exact = x / 1.4f64.powf(1.5) * (-x * x / 1.4).exp();
        worst_exact = worst_exact.max((v - exact).abs());
    }
    assert!(worst < 1e-4, "{worst}");
    assert!(worst_exact < 1e-8, "{worst_exact}");
}

#[test]
fn semigroup_law() {
    let grid = Domain::Interval01.refined_line_grid(20, 8, 0.02, None).unwrap();
    let params = WeightedSpaceParams::new(2.0, 1.0, 0.0).unwrap();
    let k = interval();
    for seed in [1, 2] {
        let psi = random_smooth_field(&Domain::Interval01, &grid, seed).unwrap();
        for t in [0.05, 0.1] {
            for s in [0.05, 0.1] {
                let a = apply_semigroup(&k, t + s, &psi).unwrap();
                let b = apply_semigroup(&k, t, &apply_semigroup(&k, s, &psi).unwrap()).unwrap();
                let d = Field::new(Domain::Interval01, grid.clone(), a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(), 0.0).unwrap();
                let e = weighted_norm(&d, &params);
                assert!(e < 1e-6, "t={t} s={s}: {e}");
            }
        }
    }
}

#[test]
fn strong_continuity_proxy() {
    let grid = Domain::Interval01.refined_line_grid(20, 6, 0.0025, None).unwrap();
    let params = WeightedSpaceParams::new(2.0, 2.0, 0.0).unwrap();
    let psi = Field::from_fn(Domain::Interval01, grid.clone(), |x| {
        let z = (x[0] - 0.5) / 0.2;
        if z.abs() < 1.0 {
            (1.0 - z * z).powi(2)
        } else {
            0.0
        }
    })
    .unwrap();
    let errs: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&t| {
            let out = apply_semigroup(&interval(), t, &psi).unwrap();
            let d: Vec<f64> = out.values.iter().zip(&psi.values).map(|(a, b)| a - b).collect();
            weighted_norm(&Field::new(Domain::Interval01, grid.clone(), d, 0.0).unwrap(), &params)
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    // smooth data: error is O(t) once t is small
    assert!(errs[3] < 0.2 * errs[2], "{errs:?}");
    assert!(errs[3] < 2e-2 * errs[0], "{errs:?}");
}

#[test]
fn extension_bounded_below_threshold_and_diverging_above() {
    let ts = log_space(1e-3, 1.0, 5);
    let p = WeightedSpaceParams::new(2.0, 2.0, 0.0).unwrap();
    let r = extension_bound(&interval(), &p, &ts, 3).unwrap();
    assert_eq!(r.verdict, Verdict::Bounded, "{:?}", r.trace);
    let p = WeightedSpaceParams::new(2.0, 3.5, 0.0).unwrap();
    let r = extension_bound(&interval(), &p, &ts, 3).unwrap();
    assert_eq!(r.verdict, Verdict::Diverging, "{:?}", r.trace);
}

#[test]
fn eigenfunction_ratio_is_exponential() {
    let grid = Domain::Interval01.refined_line_grid(30, 6, 0.05, None).unwrap();
    let psi = Field::from_fn(Domain::Interval01, grid, |x| (PI * x[0]).sin()).unwrap();
    let p = WeightedSpaceParams::new(2.0, 2.0, 0.0).unwrap();
    for t in [0.01, 0.1, 0.5] {
        let r = weighted_norm(&apply_semigroup(&interval(), t, &psi).unwrap(), &p) / weighted_norm(&psi, &p);
        assert!((r - (-PI * PI * t).exp()).abs() < 1e-8, "{r}");
    }
}

#[test]
fn second_derivative_rate_on_half_line() {
    let p = WeightedSpaceParams::new(2.0, 1.5, 0.0).unwrap();
    let r = gradient_smoothing_ratio(&half_line(), &p, &log_space(1e-3, 1e-1, 5), Derivative::Second).unwrap();
    let slope = r.constant("slope").unwrap();
    assert!((slope + 1.0).abs() < 0.1, "{slope}");
}

#[test]
fn smooth_data_gradient_stays_bounded() {
    let grid = Domain::Interval01.refined_line_grid(30, 6, 0.02, None).unwrap();
    let psi = Field::from_fn(Domain::Interval01, grid, |x| (PI * x[0]).sin()).unwrap();
    let p = WeightedSpaceParams::new(2.0, 1.5, 0.0).unwrap();
    let base = weighted_norm(&psi, &p);
    for t in [1e-1, 1e-2, 1e-3] {
        let d = apply_semigroup_derivative(&interval(), t, &psi, Derivative::First).unwrap();
        assert!(weighted_norm(&d, &p) / base < PI * 2.0);
    }
}

#[test]
fn schur_constants_bounded_and_divergent() {
    let ts = log_space(1e-3, 1.0, 5);
    let r = schur_constants(&interval(), 2.0, 2.0, 1.0, &ts, 3).unwrap();
    assert!(r.all_bounded(), "{}", r.to_record());
    let r = schur_constants(&interval(), 2.0, 3.5, 1.0, &ts, 3).unwrap();
    assert!(r.any_diverging(), "{}", r.to_record());
}

#[test]
fn splice_inequality_and_equal_weights() {
    let p = WeightedSpaceParams::new(2.0, 2.0, 1.0).unwrap();
    let r = min_weight_splice_check(&interval(), 0.1, &p, 100, 11).unwrap();
    assert!(r.holds, "{r:?}");
    let p = WeightedSpaceParams::new(2.0, 0.0, 0.0).unwrap();
    let r = min_weight_splice_check(&interval(), 0.1, &p, 20, 3).unwrap();
    assert!((r.norm_w1 - r.norm_w2).abs() < 1e-12);
    assert!(r.worst_ratio <= r.norm_w1 * (1.0 + 1e-9));
    let p = WeightedSpaceParams::new(3.0, 1.0, 0.5).unwrap();
    assert!(min_weight_splice_check(&interval(), 0.1, &p, 20, 5).unwrap().holds);
}

#[test]
fn cross_space_rates() {
    let ts = log_space(1e-3, 1e-1, 5);
    let p = WeightedSpaceParams::new(2.0, 2.0, 0.0).unwrap();
    let r = cross_space_smoothing(&interval(), &p, &ts).unwrap();
    let slope = r.constant("slope").unwrap();
    assert!((slope + 0.5).abs() < 0.1, "{slope}");
    let p = WeightedSpaceParams::new(2.0, 0.0, 0.0).unwrap();
    let r = cross_space_smoothing(&interval(), &p, &ts).unwrap();
    // same space: L² contraction, no blow-up as t → 0
    assert!(r.trace.iter().all(|v| *v <= 1.0 + 1e-9), "{:?}", r.trace);
}

#[test]
fn decay_rates() {
    let k = interval();
    let grid = Domain::Interval01.refined_line_grid(20, 6, 0.05, None).unwrap();
    let p = WeightedSpaceParams::new(2.0, 2.0, 0.0).unwrap();
    let f = random_smooth_field(&Domain::Interval01, &grid, 9).unwrap();
    let r = stability_rate(&k, &p, &f, 2.0).unwrap();
    assert!((r / (PI * PI) - 1.0).abs() < 0.01, "{r}");
    let f = Field::from_fn(Domain::Interval01, grid.clone(), |x| (2.0 * PI * x[0]).sin()).unwrap();
    let r = stability_rate(&k, &p, &f, 0.6).unwrap();
    assert!((r / (4.0 * PI * PI) - 1.0).abs() < 1e-3, "{r}");
    assert!(stability_rate(&half_line(), &p, &f, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn positivity_and_contraction(seed in 0u64..1000, t in 0.001f64..0.5) {
        let grid = Domain::Interval01.refined_line_grid(12, 6, 0.02, None).unwrap();
        let f = random_smooth_field(&Domain::Interval01, &grid, seed).unwrap();
        let pos = Field::new(Domain::Interval01, grid.clone(), f.values.iter().map(|v| v.abs()).collect(), 0.0).unwrap();
        let out = apply_semigroup(&interval(), t, &pos).unwrap();
        prop_assert!(out.values.iter().all(|v| *v >= -1e-14));
        let l2 = WeightedSpaceParams::new(2.0, 0.0, 0.0).unwrap();
        let out = apply_semigroup(&interval(), t, &f).unwrap();
        prop_assert!(weighted_norm(&out, &l2) <= weighted_norm(&f, &l2) * (1.0 + 1e-9));
    }

    #[test]
    fn nonnegative_data_decay_at_least_gap(seed in 0u64..100) {
        let grid = Domain::Interval01.refined_line_grid(12, 6, 0.05, None).unwrap();
        let f = random_smooth_field(&Domain::Interval01, &grid, seed).unwrap();
        let pos = Field::new(Domain::Interval01, grid, f.values.iter().map(|v| v.abs() + 0.01).collect(), 0.0).unwrap();
        let p = WeightedSpaceParams::new(2.0, 1.0, 0.0).unwrap();
        let r = stability_rate(&interval(), &p, &pos, 2.0).unwrap();
        prop_assert!(r >= PI * PI * (1.0 - 1e-3));
    }
}
