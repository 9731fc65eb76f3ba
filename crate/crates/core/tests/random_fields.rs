use std::sync::Arc;

use levyfield::mc::path_rng;
use levyfield::random_fields::{simulate_brownian_sheet, Domain, Grid, ScalingFunction, SheetSimulator};
use levyfield::LevyMeasure;
use proptest::prelude::*;

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Sample variance with its fourth-moment standard error.
fn var_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m2 * n / (n - 1.0), ((m4 - m2 * m2) / n).sqrt())
}

fn simulator(measure: &LevyMeasure, s: f64, t: f64, eps: f64) -> SheetSimulator {
    SheetSimulator::new(measure, ScalingFunction::unit(), Domain::new(s, t).unwrap(), eps).unwrap()
}

#[test]
fn poisson_atom_count_has_mean_four() {
    let sim = simulator(&LevyMeasure::poisson(1.0).unwrap(), 2.0, 2.0, 0.0);
    let counts: Vec<f64> = (0..100_000)
        .map(|i| {
            let r = sim.simulate(&mut path_rng(11, i)).unwrap();
            assert!(r.atoms().iter().all(|a| a.tau == 1.0));
            r.atoms().len() as f64
        })
        .collect();
    let (m, se) = mean_se(&counts);
    assert!((m - 4.0).abs() <= 4.0 * se, "{m} ± {se}");
}

#[test]
fn gamma_atom_count_matches_truncated_intensity() {
    let m = LevyMeasure::gamma(1.0).unwrap();
    let sim = simulator(&m, 1.0, 1.0, 0.1);
    assert!((sim.expected_atoms() - 1.822_923_958_419_390_6).abs() < 1e-13);
    let counts: Vec<f64> = (0..100_000)
        .map(|i| {
            let r = sim.simulate(&mut path_rng(12, i)).unwrap();
            assert!(r.atoms().iter().all(|a| a.tau > 0.1 && a.x <= 1.0 && a.y <= 1.0));
            assert_eq!(r.comp_mean(), m.truncated_mean(0.1).unwrap());
            r.atoms().len() as f64
        })
        .collect();
    let (mean, se) = mean_se(&counts);
    assert!((mean - 1.822_924).abs() <= 4.0 * se, "{mean} ± {se}");
}

#[test]
fn field_is_centered_and_variance_matches_second_moment() {
    let nodes = [(0.5, 0.5), (1.0, 1.0), (0.7, 1.9), (2.0, 2.0)];
    for (label, measure, eps) in [
        ("poisson", LevyMeasure::poisson(1.0).unwrap(), 0.0),
        ("gamma", LevyMeasure::gamma(1.0).unwrap(), 0.01),
    ] {
        let sim = simulator(&measure, 2.0, 2.0, eps);
        let paths: Vec<_> = (0..100_000)
            .map(|i| sim.simulate(&mut path_rng(13, i)).unwrap())
            .collect();
        for &(s, t) in &nodes {
            let xs: Vec<f64> = paths.iter().map(|p| p.eval_x(s, t).unwrap()).collect();
            let (m, se) = mean_se(&xs);
            assert!(m.abs() <= 4.0 * se, "{label} mean at ({s},{t}): {m} ± {se}");
            let (v, vse) = var_se(&xs);
            let reference = measure.second_moment() * s * t;
            assert!(
                (v - reference).abs() <= 4.0 * vse,
                "{label} var at ({s},{t}): {v} vs {reference} ± {vse}"
            );
        }
    }
}

#[test]
fn strip_increments_are_uncorrelated() {
    let sim = simulator(&LevyMeasure::gamma(1.0).unwrap(), 2.0, 2.0, 0.01);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in 0..100_000 {
        let r = sim.simulate(&mut path_rng(14, i)).unwrap();
        a.push(r.strip_x(0.0, 0.8, 1.5).unwrap());
        b.push(r.strip_x(0.8, 2.0, 1.5).unwrap());
    }
    let products: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let (cov, se) = mean_se(&products);
    assert!(cov.abs() <= 4.0 * se, "{cov} ± {se}");
}

#[test]
fn forward_integral_agrees_with_trapezoid_within_step_bound() {
    let m = LevyMeasure::gamma(1.0).unwrap();
    let sim = simulator(&m, 2.0, 2.0, 0.05);
    let (s, t) = (0.6, 1.8);
    let n = 10_000;
    let h = (t - s) / n as f64;
    for i in 0..20 {
        let r = sim.simulate(&mut path_rng(15, i)).unwrap();
        let exact = r.integral_forward(s, t).unwrap();
        let f = |u: f64| r.eval_x(s, u.min(t)).unwrap();
        let trap = h * ((0..=n).map(|k| f(s + k as f64 * h)).sum::<f64>() - 0.5 * (f(s) + f(t)));
        // Each jump inside (s, t] shifts the trapezoid value by at most τ h / 2.
        let bound = 0.5
            * h
            * r.atoms()
                .iter()
                .filter(|a| a.x <= s && a.y > s)
                .map(|a| a.tau)
                .sum::<f64>()
            + 1e-10;
        assert!(
            (trap - exact).abs() <= bound,
            "path {i}: {trap} vs {exact} (bound {bound})"
        );
    }
}

#[test]
fn gamma_variance_converges_as_truncation_shrinks() {
    let m = LevyMeasure::gamma(1.0).unwrap();
    let levels = [0.2, 0.1, 0.05, 0.01];
    let mut previous_bias = f64::INFINITY;
    for &eps in &levels {
        let bias = m.small_jump_l2(eps);
        assert!(bias < previous_bias);
        previous_bias = bias;
        let sim = simulator(&m, 1.0, 1.0, eps);
        let xs: Vec<f64> = (0..100_000)
            .map(|i| sim.simulate(&mut path_rng(16, i)).unwrap().eval_x(1.0, 1.0).unwrap())
            .collect();
        let (v, se) = var_se(&xs);
        assert!(
            (v - (1.0 - bias)).abs() <= 4.0 * se,
            "eps {eps}: {v} vs {} ± {se}",
            1.0 - bias
        );
    }
    assert!((m.small_jump_l2(0.01) - 4.966_791_334_026_589e-5).abs() < 1e-18);
}

#[test]
fn brownian_sheet_second_moments() {
    let grid = Arc::new(Grid::uniform(2.0, 2.0, 4, 4).unwrap());
    let n = 100_000;
    let (mut v11, mut c) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let y = simulate_brownian_sheet(&grid, &mut path_rng(17, i as u64));
        let y11 = y.eval_y(1.0, 1.0).unwrap();
        v11.push(y11 * y11);
        c.push(y.eval_y(1.0, 2.0).unwrap() * y.eval_y(2.0, 1.0).unwrap());
        assert_eq!(y.eval_y(0.0, 1.3).unwrap(), 0.0);
    }
    let (m, se) = mean_se(&v11);
    assert!((m - 1.0).abs() <= 4.0 * se, "Var(Y11) {m} ± {se}");
    let (m, se) = mean_se(&c);
    assert!((m - 1.0).abs() <= 4.0 * se, "Cov {m} ± {se}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rectangle_additivity_is_exact(seed in 0u64..10_000, s1 in 0.0f64..2.0, ds in 0.0f64..2.0, t in 0.0f64..2.0) {
        let s2 = (s1 + ds).min(2.0);
        let sim = simulator(&LevyMeasure::gamma(1.5).unwrap(), 2.0, 2.0, 0.02);
        let r = sim.simulate(&mut path_rng(seed, 0)).unwrap();
        let diff = r.eval_x(s2, t).unwrap() - r.eval_x(s1, t).unwrap();
        let strip = r.strip_x(s1, s2, t).unwrap();
        prop_assert!((diff - strip).abs() <= 1e-12 * (1.0 + diff.abs()));
    }

    #[test]
    fn strip_integral_splits_at_any_interior_point(seed in 0u64..10_000, a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let t = 2.0;
        let mut v = [a * t, b * t, c * t];
        v.sort_by(f64::total_cmp);
        let [s_lo, s_mid, s_hi] = v;
        let sim = simulator(&LevyMeasure::poisson(2.0).unwrap(), 2.0, 2.0, 0.0);
        let r = sim.simulate(&mut path_rng(seed, 1)).unwrap();
        let whole = r.integral_strip(s_lo, s_hi, t).unwrap();
        let parts = r.integral_strip(s_lo, s_mid, t).unwrap() + r.integral_strip(s_mid, s_hi, t).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole.abs()));
    }
}
