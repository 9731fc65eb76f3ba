//! Monte Carlo certification of a [`Model`].
//!
//! Statistical tests compare a sample mean with its exact reference through
//! `z = (estimate − reference) / SE` and pass when `|z| ≤ z_crit`. Exact
//! checks (positivity counts, deterministic identities) are expressed in the
//! same report shape: the standard error field then carries the tolerance
//! and `z_crit` is 1 (or 0 for counts), so `pass ⇔ |z| ≤ z_crit` holds
//! uniformly.

use std::fmt;
use std::time::Instant;

use num_complex::Complex64;

use crate::drift::drift_identity_sides;
use crate::error::{Error, Result};
use crate::levy_measure::LevyMeasure;
use crate::mc::{map_paths, McConfig};
use crate::numeric::compensated_sum;
use crate::random_fields::scaling::integrate_diagonal_split;
use crate::random_fields::ScalingFunction;
use crate::term_structure::Model;

/// Default critical value.
pub const DEFAULT_Z_CRIT: f64 = 4.0;
/// Smallest Monte Carlo sample accepted by the statistical tests.
pub const MIN_PATHS: usize = 100;
/// Relative discrepancy treated as floating-point noise rather than signal.
pub const ROUNDOFF: f64 = 1e-13;
/// Fraction trimmed from each tail for the trimmed-mean diagnostic.
pub const TRIM_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub test_name: String,
    pub n_paths: usize,
    pub estimate: f64,
    pub reference: f64,
    pub standard_error: f64,
    pub z_score: f64,
    pub pass: bool,
    pub z_crit: f64,
    /// Seconds spent on the test, shared by reports produced together.
    pub wall_time: f64,
    pub trimmed_mean: Option<f64>,
    /// `true` for exact (non-statistical) checks.
    pub exact: bool,
}

impl ValidationReport {
    fn statistical(name: String, stats: &SampleStats, reference: f64, z_crit: f64, wall_time: f64) -> Self {
        let diff = stats.mean - reference;
        let z_score = if diff.abs() <= ROUNDOFF * reference.abs().max(1.0) {
            0.0
        } else if stats.standard_error > 0.0 {
            diff / stats.standard_error
        } else {
            diff.signum() * f64::INFINITY
        };
        Self {
            test_name: name,
            n_paths: stats.n,
            estimate: stats.mean,
            reference,
            standard_error: stats.standard_error,
            z_score,
            pass: z_score.abs() <= z_crit,
            z_crit,
            wall_time,
            trimmed_mean: Some(stats.trimmed_mean),
            exact: false,
        }
    }

    fn exact_tolerance(name: String, n_paths: usize, estimate: f64, reference: f64, tol: f64, wall_time: f64) -> Self {
        let z_score = (estimate - reference) / tol;
        Self {
            test_name: name,
            n_paths,
            estimate,
            reference,
            standard_error: tol,
            z_score,
            pass: z_score.abs() <= 1.0,
            z_crit: 1.0,
            wall_time,
            trimmed_mean: None,
            exact: true,
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<40} n={:<8} est={:<14.8e} ref={:<14.8e} se={:<10.3e} z={:<+8.3} (|z|<={})",
            if self.pass { "PASS" } else { "FAIL" },
            self.test_name,
            self.n_paths,
            self.estimate,
            self.reference,
            self.standard_error,
            self.z_score,
            self.z_crit
        )
    }
}

/// Mean, standard error and trimmed mean of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub standard_error: f64,
    pub trimmed_mean: f64,
}

impl SampleStats {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let nf = n as f64;
        let mean = compensated_sum(values.iter().copied()) / nf;
        let variance = if n > 1 {
            compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (nf - 1.0)
        } else {
            0.0
        };
        Self {
            n,
            mean,
            variance,
            standard_error: (variance / nf).sqrt(),
            trimmed_mean: trimmed_mean(values, TRIM_FRACTION),
        }
    }
}

/// Mean after discarding `fraction` of the sample from each tail.
pub fn trimmed_mean(values: &[f64], fraction: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = (fraction * values.len() as f64).floor() as usize;
    let kept = &sorted[cut..sorted.len() - cut];
    compensated_sum(kept.iter().copied()) / kept.len() as f64
}

fn require_paths(cfg: &McConfig) -> Result<()> {
    if cfg.n_paths < MIN_PATHS {
        return Err(Error::TooFewPaths {
            got: cfg.n_paths,
            min: MIN_PATHS,
        });
    }
    Ok(())
}

/// `E[Z_{s,t}] = P_{0,t}` for each `s` in `s_list`, on shared paths.
pub fn mc_martingale_test(
    model: &Model,
    t: f64,
    s_list: &[f64],
    cfg: &McConfig,
    z_crit: f64,
) -> Result<Vec<ValidationReport>> {
    require_paths(cfg)?;
    let start = Instant::now();
    let reference = (-model.mu0_integral(0.0, t)?).exp();
    let quotes = s_list.iter().map(|&s| model.quote(s, t)).collect::<Result<Vec<_>>>()?;
    let samples = map_paths(cfg, |_, rng| {
        let path = model.simulate_path(rng)?;
        quotes
            .iter()
            .map(|q| model.discounted_price_at(q, &path))
            .collect::<Result<Vec<f64>>>()
    })?;
    let wall = start.elapsed().as_secs_f64();
    Ok(s_list
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let column: Vec<f64> = samples.iter().map(|row| row[k]).collect();
            ValidationReport::statistical(
                format!("martingale s={s} t={t}"),
                &SampleStats::new(&column),
                reference,
                z_crit,
                wall,
            )
        })
        .collect())
}

/// `E exp(−∫_{s₁}^t (F_{s₁,u} − F_{s₂,u}) du − ∫_{s₂}^{s₁} (F_{u,u} − F_{s₂,u}) du) = 1`.
pub fn mc_identity6_test(
    model: &Model,
    s2: f64,
    s1: f64,
    t: f64,
    cfg: &McConfig,
    z_crit: f64,
) -> Result<ValidationReport> {
    require_paths(cfg)?;
    let start = Instant::now();
    let drift = model.identity_drift(s2, s1, t)?;
    let values = map_paths(cfg, |_, rng| {
        let path = model.simulate_path(rng)?;
        Ok((-(drift + model.field_strip_integral(&path, s2, s1, t)?)).exp())
    })?;
    Ok(ValidationReport::statistical(
        format!("identity s2={s2} s1={s1} t={t}"),
        &SampleStats::new(&values),
        1.0,
        z_crit,
        start.elapsed().as_secs_f64(),
    ))
}

/// `∬_{[0,s]×[0,t]} η(λ κ(x,y)) dx dy` with `η` the characteristic exponent
/// of `measure`.
pub fn cf_exponent(measure: &LevyMeasure, kappa: &ScalingFunction, lambda: f64, s: f64, t: f64) -> Complex64 {
    if s <= 0.0 || t <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    match kappa.as_constant() {
        Some(c) => measure.char_exponent(lambda * c) * (s * t),
        None => {
            let re = integrate_diagonal_split(
                |x, y| measure.char_exponent(lambda * kappa.eval(x, y)).re,
                (0.0, s),
                (0.0, t),
            );
            let im = integrate_diagonal_split(
                |x, y| measure.char_exponent(lambda * kappa.eval(x, y)).im,
                (0.0, s),
                (0.0, t),
            );
            Complex64::new(re, im)
        }
    }
}

/// Empirical characteristic function of `X_{s,t}` against
/// `exp(cf_exponent(σ, …))`; two reports (real, imaginary) per `λ`.
pub fn cf_test(
    model: &Model,
    s: f64,
    t: f64,
    lambdas: &[f64],
    cfg: &McConfig,
    z_crit: f64,
) -> Result<Vec<ValidationReport>> {
    cf_test_with_reference(model, &model.spec().measure, s, t, lambdas, cfg, z_crit)
}

/// As [`cf_test`], with the reference exponent taken from `reference`
/// (e.g. a quadrature-only density describing the same measure).
pub fn cf_test_with_reference(
    model: &Model,
    reference: &LevyMeasure,
    s: f64,
    t: f64,
    lambdas: &[f64],
    cfg: &McConfig,
    z_crit: f64,
) -> Result<Vec<ValidationReport>> {
    require_paths(cfg)?;
    let start = Instant::now();
    let xs = map_paths(cfg, |_, rng| model.simulate_path(rng)?.sheet.eval_x(s, t))?;
    let wall = start.elapsed().as_secs_f64();
    let kappa = &model.spec().kappa;
    let mut reports = Vec::with_capacity(2 * lambdas.len());
    for &lambda in lambdas {
        let exact = cf_exponent(reference, kappa, lambda, s, t).exp();
        let re: Vec<f64> = xs.iter().map(|x| (lambda * x).cos()).collect();
        let im: Vec<f64> = xs.iter().map(|x| (lambda * x).sin()).collect();
        reports.push(ValidationReport::statistical(
            format!("cf re lambda={lambda} s={s} t={t}"),
            &SampleStats::new(&re),
            exact.re,
            z_crit,
            wall,
        ));
        reports.push(ValidationReport::statistical(
            format!("cf im lambda={lambda} s={s} t={t}"),
            &SampleStats::new(&im),
            exact.im,
            z_crit,
            wall,
        ));
    }
    Ok(reports)
}

fn linspace(max: f64, nodes: usize) -> Vec<f64> {
    (0..nodes)
        .map(|k| {
            if k + 1 == nodes {
                max
            } else {
                max * k as f64 / (nodes - 1) as f64
            }
        })
        .collect()
}

/// Fails with [`Error::FloorViolated`] at the first `t` where the initial
/// curve drops below the positivity floor.
pub fn check_floor(model: &Model, t_nodes: &[f64]) -> Result<()> {
    let floor = model.floor().ok_or(Error::FloorUnavailable)?;
    let t_max = model.horizon().t_max;
    let fine = linspace(t_max, 1001);
    let mut ts: Vec<f64> = fine.into_iter().chain(t_nodes.iter().copied()).collect();
    ts.sort_by(f64::total_cmp);
    for t in ts {
        let mu0 = model.mu0(t)?;
        let bound = floor.eval(t);
        if mu0 < bound * (1.0 - 1e-12) {
            return Err(Error::FloorViolated { t, mu0, floor: bound });
        }
    }
    Ok(())
}

/// Exhaustive count of negative forward rates `F_{s,t}` (`s ≤ t`) and spot
/// rates `R_s` over `nodes × nodes` grid points and all paths. Only
/// jump-only models carry the guarantee, so a Gaussian component is refused.
pub fn positivity_scan(model: &Model, nodes: usize, cfg: &McConfig) -> Result<ValidationReport> {
    require_paths(cfg)?;
    if !model.spec().gaussian.is_none() {
        return Err(Error::InvalidParameter {
            name: "gaussian",
            reason: "positivity holds only for models without a Gaussian component".into(),
        });
    }
    if nodes < 2 {
        return Err(Error::InvalidGrid(
            "positivity grid needs at least two nodes per axis".into(),
        ));
    }
    let start = Instant::now();
    let h = model.horizon();
    let s_nodes = linspace(h.s_max, nodes);
    let t_nodes = linspace(h.t_max, nodes);
    check_floor(model, &t_nodes)?;
    let mut points = Vec::new();
    for &s in &s_nodes {
        for &t in t_nodes.iter().filter(|&&t| t >= s) {
            points.push((s, t, model.mu(s, t)?));
        }
        if s <= h.t_max {
            points.push((s, s, model.mu(s, s)?));
        }
    }
    let counts = map_paths(cfg, |_, rng| {
        let path = model.simulate_path(rng)?;
        let mut bad = 0u64;
        for &(s, t, mu) in &points {
            if mu + model.field(&path, s, t)? < 0.0 {
                bad += 1;
            }
        }
        Ok(bad)
    })?;
    let violations: u64 = counts.iter().sum();
    Ok(ValidationReport {
        test_name: format!("positivity {nodes}x{nodes} grid"),
        n_paths: cfg.n_paths,
        estimate: violations as f64,
        reference: 0.0,
        standard_error: 1.0,
        z_score: violations as f64,
        pass: violations == 0,
        z_crit: 0.0,
        wall_time: start.elapsed().as_secs_f64(),
        trimmed_mean: None,
        exact: true,
    })
}

/// Sample variance of `X_{s,t}` against `∫τ²σ(dτ) · ∬ κ²`. The standard
/// error comes from the empirical fourth central moment,
/// `SE² = (m₄ − v²) / n`, which stays valid for non-Gaussian fields.
pub fn variance_check(
    model: &Model,
    points: &[(f64, f64)],
    cfg: &McConfig,
    z_crit: f64,
) -> Result<Vec<ValidationReport>> {
    require_paths(cfg)?;
    let start = Instant::now();
    let samples = map_paths(cfg, |_, rng| {
        let sheet = model.simulate_path(rng)?.sheet;
        points
            .iter()
            .map(|&(s, t)| sheet.eval_x(s, t))
            .collect::<Result<Vec<f64>>>()
    })?;
    let wall = start.elapsed().as_secs_f64();
    let spec = model.spec();
    let nf = cfg.n_paths as f64;
    Ok(points
        .iter()
        .enumerate()
        .map(|(k, &(s, t))| {
            let column: Vec<f64> = samples.iter().map(|row| row[k]).collect();
            let mean = compensated_sum(column.iter().copied()) / nf;
            let m2 = compensated_sum(column.iter().map(|x| (x - mean).powi(2))) / nf;
            let m4 = compensated_sum(column.iter().map(|x| (x - mean).powi(4))) / nf;
            let variance = m2 * nf / (nf - 1.0);
            let stats = SampleStats {
                n: cfg.n_paths,
                mean: variance,
                variance: m4 - m2 * m2,
                standard_error: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
                trimmed_mean: variance,
            };
            let reference = spec.measure.second_moment() * spec.kappa.area_integral_squared(s, t);
            let mut r = ValidationReport::statistical(format!("variance s={s} t={t}"), &stats, reference, z_crit, wall);
            r.trimmed_mean = None;
            r
        })
        .collect())
}

/// Both sides of the drift identity by quadrature on each triple; passes
/// when the largest discrepancy is within `tol`.
pub fn drift_identity_check(
    measure: &LevyMeasure,
    kappa: &ScalingFunction,
    triples: &[(f64, f64, f64)],
    tol: f64,
) -> Result<ValidationReport> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for &(s2, s1, t) in triples {
        let (lhs, rhs) = drift_identity_sides(measure, kappa, s2, s1, t)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(ValidationReport::exact_tolerance(
        format!("drift identity ({} triples)", triples.len()),
        0,
        worst,
        0.0,
        tol,
        start.elapsed().as_secs_f64(),
    ))
}

/// `n` triples `0 ≤ s₂ ≤ s₁ ≤ t ≤ t_max` from a fixed low-discrepancy
/// sequence, so the deterministic check is reproducible.
pub fn identity_triples(n: usize, t_max: f64) -> Vec<(f64, f64, f64)> {
    let golden = [
        0.819_172_513_396_164_4,
        0.671_043_606_703_789_2,
        0.549_700_477_901_970_3,
    ];
    (1..=n)
        .map(|k| {
            let u: Vec<f64> = golden.iter().map(|g| (0.5 + k as f64 * g).fract()).collect();
            let t = t_max * (0.05 + 0.95 * u[0]);
            let s1 = t * u[1];
            let s2 = s1 * u[2];
            (s2, s1, t)
        })
        .collect()
}
