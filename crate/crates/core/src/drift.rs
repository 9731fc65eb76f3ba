//! The martingale drift surface.
//!
//! With `Φ(λ) = ∫ τ (1 − e^{−λτ}) σ(dτ)` the jump part of the drift is
//!
//! ```text
//! D(s, t) = μ_{s,t} − μ_{0,t} = ∬_{[0,s]×[0,t]} κ(x,y) Φ(κ(x,y)(t − x∨y)) dx dy
//! ```
//!
//! and a Gaussian field with covariance `c` adds `∫_0^t c(s∧u, u, t) du`.
//! For the Poisson (`σ = zδ₁`) and gamma sheets with `κ ≡ 1` the surface and
//! its time antiderivatives are available in closed form; everything else
//! goes through adaptive quadrature split along the kink `y = x`.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::levy_measure::{LevyMeasure, MeasureKind};
use crate::numeric::special::exp_neg_minus_one_plus;
use crate::numeric::{Adaptive, Integral, Tolerance};
use crate::random_fields::{ScalingFunction, UserGridCovariance};

/// Tolerance of every drift-related quadrature.
pub const DRIFT_TOL: Tolerance = Tolerance::new(1e-12, 1e-11);

fn quad() -> Adaptive {
    Adaptive::new(DRIFT_TOL)
}

fn check_order(s: f64, t: f64) -> Result<()> {
    if s < 0.0 || s > t || !t.is_finite() {
        return Err(Error::OutOfDomain {
            s,
            t,
            reason: "drift requires 0 <= s <= t".into(),
        });
    }
    Ok(())
}

fn converged(r: Integral, context: &str) -> Result<f64> {
    r.into_result(context)
}

/// `D(s, t)` for `σ = zδ₁`, `κ ≡ 1`.
pub fn drift_poisson_closed(z: f64, s: f64, t: f64) -> f64 {
    z * ((2.0 - s) * (s - t).exp() - 2.0 * (-t).exp() - s + s * t)
}

/// `D(s, t)` for the gamma sheet of intensity `z`, `κ ≡ 1`.
pub fn drift_gamma_closed(z: f64, s: f64, t: f64) -> f64 {
    let w = 1.0 + t;
    z * (s * t + 2.0 * s + 2.0 * w * (-s / w).ln_1p() - s * (w - s).ln())
}

/// `∫_s^t D(s, u) du` for the Poisson sheet.
pub fn poisson_forward_integral(z: f64, s: f64, t: f64) -> f64 {
    let head = (2.0 - s) * -(s - t).exp_m1();
    let tail = 2.0 * ((-s).exp() - (-t).exp());
    z * (head - tail - s * (t - s) + 0.5 * s * (t - s) * (t + s))
}

/// `∫_0^s D(u, u) du` for the Poisson sheet.
pub fn poisson_diagonal_integral(z: f64, s: f64) -> f64 {
    z * (2.0 * exp_neg_minus_one_plus(s) - s * s + s * s * s / 3.0)
}

fn gamma_antiderivative(s: f64, u: f64) -> f64 {
    let v = 1.0 + u - s;
    let w = 1.0 + u;
    let xlnx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    0.5 * s * u * u + 2.0 * s * u + v * xlnx(v) - 0.5 * v * v + s * (xlnx(v) - v) - w * xlnx(w) + 0.5 * w * w
}

/// `∫_s^t D(s, u) du` for the gamma sheet.
pub fn gamma_forward_integral(z: f64, s: f64, t: f64) -> f64 {
    z * (gamma_antiderivative(s, t) - gamma_antiderivative(s, s))
}

/// `∫_0^s D(u, u) du` for the gamma sheet.
pub fn gamma_diagonal_integral(z: f64, s: f64) -> f64 {
    let w = 1.0 + s;
    z * (s * s * s / 3.0 + s * s - w * w * s.ln_1p() + 0.5 * s * (2.0 + s))
}

/// Closed-form family of a `(σ, κ)` pair, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFamily {
    None,
    Poisson(f64),
    Gamma(f64),
}

impl ClosedFamily {
    pub fn of(measure: &LevyMeasure, kappa: &ScalingFunction) -> Self {
        match measure.kind() {
            MeasureKind::Zero => ClosedFamily::None,
            _ if !kappa.is_unit() => ClosedFamily::None,
            MeasureKind::PointMass { mass, location } if *location == 1.0 => ClosedFamily::Poisson(*mass),
            MeasureKind::Gamma { intensity } => ClosedFamily::Gamma(*intensity),
            _ => ClosedFamily::None,
        }
    }

    pub fn increment(self, s: f64, t: f64) -> Option<f64> {
        match self {
            ClosedFamily::None => None,
            ClosedFamily::Poisson(z) => Some(drift_poisson_closed(z, s, t)),
            ClosedFamily::Gamma(z) => Some(drift_gamma_closed(z, s, t)),
        }
    }

    pub fn forward_integral(self, s: f64, t: f64) -> Option<f64> {
        match self {
            ClosedFamily::None => None,
            ClosedFamily::Poisson(z) => Some(poisson_forward_integral(z, s, t)),
            ClosedFamily::Gamma(z) => Some(gamma_forward_integral(z, s, t)),
        }
    }

    pub fn diagonal_integral(self, s: f64) -> Option<f64> {
        match self {
            ClosedFamily::None => None,
            ClosedFamily::Poisson(z) => Some(poisson_diagonal_integral(z, s)),
            ClosedFamily::Gamma(z) => Some(gamma_diagonal_integral(z, s)),
        }
    }
}

/// `D(s, t)`: closed form when `(σ, κ)` admits one, quadrature otherwise.
pub fn drift_increment(measure: &LevyMeasure, kappa: &ScalingFunction, s: f64, t: f64) -> Result<f64> {
    check_order(s, t)?;
    if s == 0.0 || measure.is_zero() {
        return Ok(0.0);
    }
    match ClosedFamily::of(measure, kappa).increment(s, t) {
        Some(v) => Ok(v),
        None => drift_increment_quadrature(measure, kappa, s, t),
    }
}

/// `D(s, t)` by nested adaptive quadrature, the inner `y`-integral split
/// at `y = x`.
pub fn drift_increment_quadrature(measure: &LevyMeasure, kappa: &ScalingFunction, s: f64, t: f64) -> Result<f64> {
    check_order(s, t)?;
    if s == 0.0 || measure.is_zero() {
        return Ok(0.0);
    }
    let q = quad();
    let mut worst: Option<Integral> = None;
    let outer = q.integrate(
        |x| {
            let inner = q.integrate_with_breaks(
                |y| {
                    let k = kappa.eval(x, y);
                    if k == 0.0 {
                        0.0
                    } else {
                        k * measure.phi(k * (t - x.max(y)))
                    }
                },
                &[0.0, x.min(t), t],
            );
            if !inner.converged && worst.as_ref().is_none_or(|w| inner.abs_error > w.abs_error) {
                worst = Some(inner);
            }
            inner.value
        },
        0.0,
        s,
    );
    if let Some(w) = worst {
        return Err(Error::QuadratureFailed {
            context: format!("drift increment inner integral at (s = {s}, t = {t})"),
            estimate: w.value,
            achieved: w.abs_error,
            requested: w.requested,
        });
    }
    converged(outer, &format!("drift increment at (s = {s}, t = {t})"))
}

/// Both sides of the drift identity
///
/// ```text
/// ∬_{[s₂,s₁]×[0,t]} ψ(κ(t − x∨y)) = ∫_{s₁}^t (μ_{s₁,u} − μ_{s₂,u}) du + ∫_{s₂}^{s₁} (μ_{u,u} − μ_{s₂,u}) du
/// ```
///
/// each by numerical integration (the right side integrates `D` in `u`).
pub fn drift_identity_sides(
    measure: &LevyMeasure,
    kappa: &ScalingFunction,
    s2: f64,
    s1: f64,
    t: f64,
) -> Result<(f64, f64)> {
    if !(0.0 <= s2 && s2 <= s1 && s1 <= t) {
        return Err(Error::OutOfDomain {
            s: s1,
            t,
            reason: format!("identity requires 0 <= s2 <= s1 <= t, got s2 = {s2}"),
        });
    }
    let q = quad();
    let mut failure = None;
    let mut note = |r: Integral| {
        if !r.converged {
            failure = Some(r);
        }
        r.value
    };
    let lhs_outer = q.integrate(
        |x| note(q.integrate_with_breaks(|y| measure.psi(kappa.eval(x, y) * (t - x.max(y))), &[0.0, x.min(t), t])),
        s2,
        s1,
    );
    let lhs = converged(lhs_outer, "drift identity, psi side")?;
    let d = |a: f64, b: f64| drift_increment(measure, kappa, a, b);
    let forward = q.integrate(|u| d(s1, u).unwrap_or(f64::NAN) - d(s2, u).unwrap_or(f64::NAN), s1, t);
    let diagonal = q.integrate(|u| d(u, u).unwrap_or(f64::NAN) - d(s2, u).unwrap_or(f64::NAN), s2, s1);
    if let Some(r) = failure {
        return Err(Error::QuadratureFailed {
            context: "drift identity, psi side inner integral".into(),
            estimate: r.value,
            achieved: r.abs_error,
            requested: r.requested,
        });
    }
    let rhs =
        converged(forward, "drift identity, forward side")? + converged(diagonal, "drift identity, diagonal side")?;
    Ok((lhs, rhs))
}

/// Covariance `c(s, t₁, t₂)` of the Gaussian component.
#[derive(Debug, Clone, Default)]
pub enum GaussianCovariance {
    #[default]
    None,
    /// `c(s, t₁, t₂) = s (t₁ ∧ t₂)`.
    BrownianSheet,
    UserGrid(Arc<UserGridCovariance>),
}

impl GaussianCovariance {
    pub fn is_none(&self) -> bool {
        matches!(self, GaussianCovariance::None)
    }

    pub fn eval(&self, s: f64, t1: f64, t2: f64) -> Result<f64> {
        match self {
            GaussianCovariance::None => Ok(0.0),
            GaussianCovariance::BrownianSheet => Ok(s * t1.min(t2)),
            GaussianCovariance::UserGrid(c) => c.eval(s, t1, t2),
        }
    }

    fn breaks(&self, lo: f64, hi: f64, extra: f64) -> Vec<f64> {
        let mut pts = vec![lo, hi];
        if extra > lo && extra < hi {
            pts.push(extra);
        }
        if let GaussianCovariance::UserGrid(c) = self {
            pts.extend(
                c.grid()
                    .t_nodes()
                    .iter()
                    .chain(c.grid().s_nodes())
                    .copied()
                    .filter(|&p| p > lo && p < hi),
            );
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// `st²/2 − s³/6`, the Brownian-sheet correction.
pub fn brownian_drift_correction(s: f64, t: f64) -> f64 {
    0.5 * s * t * t - s * s * s / 6.0
}

/// `∫_s^t (su²/2 − s³/6) du`.
pub fn brownian_forward_integral(s: f64, t: f64) -> f64 {
    s * (t * t * t - s * s * s) / 6.0 - s * s * s * (t - s) / 6.0
}

/// `∫_0^s u³/3 du`.
pub fn brownian_diagonal_integral(s: f64) -> f64 {
    s.powi(4) / 12.0
}

/// `∫_0^t c(s∧u, u, t) du`.
pub fn gaussian_drift_correction(cov: &GaussianCovariance, s: f64, t: f64) -> Result<f64> {
    check_order(s, t)?;
    match cov {
        GaussianCovariance::None => Ok(0.0),
        GaussianCovariance::BrownianSheet => Ok(brownian_drift_correction(s, t)),
        GaussianCovariance::UserGrid(_) => gaussian_drift_correction_quadrature(cov, s, t),
    }
}

/// `∫_0^t c(s∧u, u, t) du` by adaptive quadrature split at `u = s`.
pub fn gaussian_drift_correction_quadrature(cov: &GaussianCovariance, s: f64, t: f64) -> Result<f64> {
    check_order(s, t)?;
    if cov.is_none() || t == 0.0 {
        return Ok(0.0);
    }
    let mut err = None;
    let r = quad().integrate_with_breaks(
        |u| match cov.eval(s.min(u), u, t) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        &cov.breaks(0.0, t, s),
    );
    if let Some(e) = err {
        return Err(e);
    }
    converged(r, &format!("Gaussian drift correction at (s = {s}, t = {t})"))
}

/// `∫_s^t G(s, u) du` for the Gaussian correction `G`.
pub fn gaussian_forward_integral(cov: &GaussianCovariance, s: f64, t: f64) -> Result<f64> {
    check_order(s, t)?;
    match cov {
        GaussianCovariance::None => Ok(0.0),
        GaussianCovariance::BrownianSheet => Ok(brownian_forward_integral(s, t)),
        GaussianCovariance::UserGrid(_) => integrate_fallible(
            |u| gaussian_drift_correction(cov, s, u),
            &cov.breaks(s, t, s),
            "Gaussian forward integral",
        ),
    }
}

/// `∫_0^s G(u, u) du`.
pub fn gaussian_diagonal_integral(cov: &GaussianCovariance, s: f64) -> Result<f64> {
    check_order(0.0, s)?;
    match cov {
        GaussianCovariance::None => Ok(0.0),
        GaussianCovariance::BrownianSheet => Ok(brownian_diagonal_integral(s)),
        GaussianCovariance::UserGrid(_) => integrate_fallible(
            |u| gaussian_drift_correction(cov, u, u),
            &cov.breaks(0.0, s, 0.0),
            "Gaussian diagonal integral",
        ),
    }
}

/// Adaptive quadrature of a fallible integrand; the first error wins.
pub(crate) fn integrate_fallible<F: FnMut(f64) -> Result<f64>>(mut f: F, points: &[f64], context: &str) -> Result<f64> {
    let mut err = None;
    let r = quad().integrate_with_breaks(
        |u| match f(u) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        points,
    );
    match err {
        Some(e) => Err(e),
        None => converged(r, context),
    }
}

/// Lower bound `⟨τ⟩_σ ∬_{[0,t]²} κ` on the initial curve
/// that keeps every simulated forward and spot rate non-negative.
#[derive(Debug, Clone)]
pub struct PositivityFloor {
    mean_jump: f64,
    kappa: ScalingFunction,
}

impl PositivityFloor {
    pub fn new(measure: &LevyMeasure, kappa: &ScalingFunction) -> Result<Self> {
        let mean_jump = measure.first_moment().ok_or(Error::FloorUnavailable)?;
        Ok(Self {
            mean_jump,
            kappa: kappa.clone(),
        })
    }

    pub fn mean_jump(&self) -> f64 {
        self.mean_jump
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 || self.mean_jump == 0.0 {
            return 0.0;
        }
        self.mean_jump * self.kappa.area_integral(t, t)
    }

    /// `∫_a^b floor(u) du`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a || self.mean_jump == 0.0 {
            return Ok(0.0);
        }
        match self.kappa.as_constant() {
            Some(c) => Ok(self.mean_jump * c * (b * b * b - a * a * a) / 3.0),
            None => converged(quad().integrate(|u| self.eval(u), a, b), "positivity floor integral"),
        }
    }
}

/// `⟨τ⟩_σ ∬_{[0,t]²} κ`.
pub fn positivity_floor(measure: &LevyMeasure, kappa: &ScalingFunction, t: f64) -> Result<f64> {
    Ok(PositivityFloor::new(measure, kappa)?.eval(t))
}

/// Piecewise-linear table with flat extrapolation.
#[derive(Debug, Clone)]
pub struct CurveTable {
    knots: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
    warned: Arc<AtomicBool>,
}

impl CurveTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(invalid("initial_curve", "table needs at least one knot"));
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(invalid("initial_curve", "table knots must be finite"));
        }
        if let Some(w) = knots.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(invalid(
                "initial_curve",
                format!(
                    "table knots must be strictly increasing in t ({} then {})",
                    w[0].0, w[1].0
                ),
            ));
        }
        let mut cumulative = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in knots.windows(2) {
            acc += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
            cumulative.push(acc);
        }
        Ok(Self {
            knots,
            cumulative,
            warned: Arc::default(),
        })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    fn note_extrapolation(&self, t: f64) {
        if !self.warned.swap(true, Ordering::Relaxed) {
            log::warn!(
                "initial curve table queried at t = {t} outside [{}, {}]; extrapolating flat",
                self.knots[0].0,
                self.knots[self.knots.len() - 1].0
            );
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (first, last) = (self.knots[0], self.knots[self.knots.len() - 1]);
        if t < first.0 {
            self.note_extrapolation(t);
            return first.1;
        }
        if t > last.0 {
            self.note_extrapolation(t);
            return last.1;
        }
        let i = self
            .knots
            .partition_point(|k| k.0 <= t)
            .saturating_sub(1)
            .min(self.knots.len().saturating_sub(2));
        if self.knots.len() == 1 {
            return first.1;
        }
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
    }

    /// `∫_{t₀}^x` of the interpolant, `t₀` the first knot, signed.
    fn primitive(&self, x: f64) -> f64 {
        let (first, last) = (self.knots[0], self.knots[self.knots.len() - 1]);
        if x <= first.0 {
            return (x - first.0) * first.1;
        }
        if x >= last.0 {
            return self.cumulative[self.knots.len() - 1] + (x - last.0) * last.1;
        }
        let i = self.knots.partition_point(|k| k.0 <= x) - 1;
        let a = self.knots[i];
        self.cumulative[i] + 0.5 * (x - a.0) * (a.1 + self.eval(x))
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let (first, last) = (self.knots[0].0, self.knots[self.knots.len() - 1].0);
        if a < first || b > last {
            self.note_extrapolation(if a < first { a } else { b });
        }
        self.primitive(b) - self.primitive(a)
    }
}

/// The initial forward curve `μ_{0,t}`.
#[derive(Debug, Clone)]
pub enum InitialCurve {
    Constant(f64),
    Affine {
        intercept: f64,
        slope: f64,
    },
    Table(CurveTable),
    /// `base` plus the positivity floor of the model's `(σ, κ)`.
    PositivityFloor {
        base: f64,
    },
}

impl InitialCurve {
    pub fn needs_floor(&self) -> bool {
        matches!(self, InitialCurve::PositivityFloor { .. })
    }

    /// `μ_{0,t}`; `floor` is required for the floor-based variant.
    pub fn eval(&self, t: f64, floor: Option<&PositivityFloor>) -> Result<f64> {
        Ok(match self {
            InitialCurve::Constant(c) => *c,
            InitialCurve::Affine { intercept, slope } => intercept + slope * t,
            InitialCurve::Table(table) => table.eval(t),
            InitialCurve::PositivityFloor { base } => base + floor.ok_or(Error::FloorUnavailable)?.eval(t),
        })
    }

    /// `∫_a^b μ_{0,u} du`.
    pub fn integral(&self, a: f64, b: f64, floor: Option<&PositivityFloor>) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        Ok(match self {
            InitialCurve::Constant(c) => c * (b - a),
            InitialCurve::Affine { intercept, slope } => intercept * (b - a) + 0.5 * slope * (b * b - a * a),
            InitialCurve::Table(table) => table.integral(a, b),
            InitialCurve::PositivityFloor { base } => {
                base * (b - a) + floor.ok_or(Error::FloorUnavailable)?.integral(a, b)?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(drift_poisson_closed(1.0, 0.0, 3.0), 0.0);
        assert!(close(drift_poisson_closed(1.0, 1.0, 2.0), 1.097_208_874_698_217, 1e-15));
        assert!(close(
            drift_poisson_closed(1.0, 1.0, 1.0),
            0.264_241_117_657_115_4,
            1e-15
        ));
        assert!(close(drift_poisson_closed(2.0, 1.0, 2.0), 2.194_417_749_396_434, 1e-15));
        assert!(close(
            drift_poisson_closed(1.0, 0.6, 1.0),
            0.202_689_182_107_010_3,
            1e-15
        ));
        assert_eq!(drift_gamma_closed(1.0, 0.0, 2.0), 0.0);
        assert!(close(drift_gamma_closed(1.0, 1.0, 2.0), 0.874_062_170_791_068_1, 1e-15));
        assert!(close(drift_gamma_closed(1.0, 1.0, 1.0), 3.0 - 4.0 * 2f64.ln(), 1e-15));
        assert!(close(drift_gamma_closed(1.0, 2.5, 4.0), 5.777_801_364_715_159, 1e-13));
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let k = ScalingFunction::unit();
        for &(s, t) in &[(1.0, 2.0), (0.3, 0.3), (2.5, 4.0), (5.0, 5.0), (0.01, 4.9)] {
            let p = LevyMeasure::poisson(1.0).unwrap();
            let g = LevyMeasure::gamma(1.0).unwrap();
            assert!(close(
                drift_increment_quadrature(&p, &k, s, t).unwrap(),
                drift_poisson_closed(1.0, s, t),
                1e-10
            ));
            assert!(close(
                drift_increment_quadrature(&g, &k, s, t).unwrap(),
                drift_gamma_closed(1.0, s, t),
                1e-10
            ));
        }
    }

    #[test]
    fn drift_increment_rejects_reversed_times() {
        let p = LevyMeasure::poisson(1.0).unwrap();
        assert!(matches!(
            drift_increment(&p, &ScalingFunction::unit(), 2.0, 1.0),
            Err(Error::OutOfDomain { .. })
        ));
        assert_eq!(drift_increment(&p, &ScalingFunction::unit(), 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn antiderivatives_match_quadrature() {
        let q = quad();
        for &z in &[0.5, 1.0, 2.0] {
            for &(s, t) in &[(0.0, 1.0), (0.5, 2.0), (1.0, 1.0), (1.7, 4.2), (1e-4, 0.3)] {
                let pf = q.integrate(|u| drift_poisson_closed(z, s, u), s, t).value;
                let gf = q.integrate(|u| drift_gamma_closed(z, s, u), s, t).value;
                assert!(close(poisson_forward_integral(z, s, t), pf, 1e-12), "{z} {s} {t}");
                assert!(close(gamma_forward_integral(z, s, t), gf, 1e-12), "{z} {s} {t}");
                let pd = q.integrate(|u| drift_poisson_closed(z, u, u), 0.0, s).value;
                let gd = q.integrate(|u| drift_gamma_closed(z, u, u), 0.0, s).value;
                assert!(close(poisson_diagonal_integral(z, s), pd, 1e-12));
                assert!(close(gamma_diagonal_integral(z, s), gd, 1e-12));
            }
        }
        assert!(close(brownian_forward_integral(1.0, 2.0), 1.0, 1e-15));
        assert!(close(brownian_diagonal_integral(1.0), 1.0 / 12.0, 1e-16));
    }

    #[test]
    fn gaussian_correction_examples() {
        assert_eq!(
            gaussian_drift_correction(&GaussianCovariance::None, 1.0, 2.0).unwrap(),
            0.0
        );
        let b = GaussianCovariance::BrownianSheet;
        assert!(close(
            gaussian_drift_correction(&b, 1.0, 2.0).unwrap(),
            11.0 / 6.0,
            1e-15
        ));
        assert_eq!(gaussian_drift_correction(&b, 0.0, 2.0).unwrap(), 0.0);
        for &(s, t) in &[(1.0, 2.0), (0.2, 0.9), (1.5, 1.5)] {
            let q = gaussian_drift_correction_quadrature(&b, s, t).unwrap();
            assert!(close(q, brownian_drift_correction(s, t), 1e-12));
        }
    }

    #[test]
    fn user_grid_correction_refuses_outside_lattice() {
        let s = vec![0.0, 1.0];
        let t = vec![0.0, 1.0];
        let table = s
            .iter()
            .map(|&si| {
                t.iter()
                    .map(|&a| t.iter().map(|&b: &f64| si * a.min(b)).collect())
                    .collect()
            })
            .collect();
        let cov = GaussianCovariance::UserGrid(Arc::new(UserGridCovariance::new(s, t, table).unwrap()));
        assert!(gaussian_drift_correction(&cov, 0.5, 1.0).is_ok());
        assert!(matches!(
            gaussian_drift_correction(&cov, 0.5, 2.0),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn floor_examples() {
        let k = ScalingFunction::unit();
        assert_eq!(
            positivity_floor(&LevyMeasure::poisson(1.0).unwrap(), &k, 2.0).unwrap(),
            4.0
        );
        assert_eq!(
            positivity_floor(&LevyMeasure::gamma(1.0).unwrap(), &k, 2.0).unwrap(),
            4.0
        );
        assert_eq!(
            positivity_floor(&LevyMeasure::gamma(1.0).unwrap(), &k, 0.0).unwrap(),
            0.0
        );
        let singular = LevyMeasure::user_density("singular", |t: f64| t.powf(-2.5) * (-t).exp(), None).unwrap();
        assert!(singular.first_moment().is_none());
        assert_eq!(
            positivity_floor(&singular, &k, 1.0).unwrap_err(),
            Error::FloorUnavailable
        );
    }

    #[test]
    fn curve_variants() {
        let floor = PositivityFloor::new(&LevyMeasure::poisson(1.0).unwrap(), &ScalingFunction::unit()).unwrap();
        let c = InitialCurve::PositivityFloor { base: 0.0 };
        assert_eq!(c.eval(2.0, Some(&floor)).unwrap(), 4.0);
        assert!(close(c.integral(0.0, 2.0, Some(&floor)).unwrap(), 8.0 / 3.0, 1e-15));
        assert!(c.eval(1.0, None).is_err());
        let a = InitialCurve::Affine {
            intercept: 0.01,
            slope: 0.002,
        };
        assert!(close(a.integral(1.0, 3.0, None).unwrap(), 0.02 + 0.008, 1e-15));
        let table = CurveTable::new(vec![(0.0, 1.0), (1.0, 2.0), (3.0, 2.0)]).unwrap();
        let tc = InitialCurve::Table(table);
        assert!(close(tc.eval(0.5, None).unwrap(), 1.5, 1e-15));
        assert_eq!(tc.eval(10.0, None).unwrap(), 2.0);
        assert!(close(tc.integral(0.0, 4.0, None).unwrap(), 1.5 + 4.0 + 2.0, 1e-15));
        assert!(close(
            tc.integral(0.5, 2.0, None).unwrap(),
            0.5 * 0.5 * 3.5 + 2.0,
            1e-15
        ));
        assert!(CurveTable::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn drift_identity_holds_for_builtins() {
        let k = ScalingFunction::unit();
        for m in [LevyMeasure::poisson(1.0).unwrap(), LevyMeasure::gamma(1.0).unwrap()] {
            for &(s2, s1, t) in &[(0.5, 1.0, 2.0), (0.0, 0.7, 0.7), (1.2, 3.1, 4.4), (0.3, 0.3, 2.0)] {
                let (lhs, rhs) = drift_identity_sides(&m, &k, s2, s1, t).unwrap();
                assert!(close(lhs, rhs, 1e-9), "{lhs} vs {rhs}");
            }
        }
    }
}
