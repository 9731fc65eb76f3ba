//! Levy measures on the positive half-line.
//!
//! A measure `σ` on `(0, ∞)` drives the compensated jump sheet. Every
//! quantity the rest of the crate needs reduces to one of a handful of
//! `σ`-integrals:
//!
//! | quantity | integral |
//! |----------|----------|
//! | second moment | `∫ τ² σ(dτ)` |
//! | first moment `⟨τ⟩` | `∫ τ σ(dτ)` |
//! | `Φ(λ)` | `∫ τ (1 - e^{-λτ}) σ(dτ)` |
//! | `ψ(λ)` | `∫ (e^{-λτ} - 1 + λτ) σ(dτ)` |
//! | characteristic exponent | `∫ (e^{iλτ} - 1 - iλτ) σ(dτ)` |
//!
//! `Φ = ψ'` and both vanish at zero. The point mass and gamma density have
//! closed forms; user densities go through adaptive quadrature split at
//! `τ = 1`.

mod sampler;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::numeric::quadrature::{Adaptive, Integral, SIGMA_TOL};
use crate::numeric::special::{
    cos_minus_one, exp_integral_e1, exp_neg_minus_one_plus, lower_gamma2, one_minus_exp_neg, sin_minus_x,
};

pub use sampler::JumpSampler;

/// Default budget for `small_jump_l2(ε) · area · sup κ²`.
pub const TRUNCATION_BUDGET: f64 = 1e-6;

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A jump density `d(τ) ≥ 0` on `(0, ∞)` supplied by the caller.
#[derive(Clone)]
pub struct UserDensity {
    density: DensityFn,
    support_max: Option<f64>,
    label: String,
    second_moment: f64,
    first_moment: Option<f64>,
}

impl UserDensity {
    pub fn eval(&self, tau: f64) -> f64 {
        if tau <= 0.0 || self.support_max.is_some_and(|m| tau > m) {
            0.0
        } else {
            (self.density)(tau)
        }
    }

    pub fn support_max(&self) -> Option<f64> {
        self.support_max
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `∫_{lo}^{hi} g(τ) d(τ) dτ`, split at `τ = 1`; `hi` defaults to the
    /// declared support bound or infinity.
    fn integrate<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: Option<f64>) -> Integral {
        let q = Adaptive::new(SIGMA_TOL);
        let hi = match (hi, self.support_max) {
            (Some(h), Some(m)) => Some(h.min(m)),
            (h, m) => h.or(m),
        };
        let f = |tau: f64| {
            let d = self.eval(tau);
            if d == 0.0 {
                0.0
            } else {
                g(tau) * d
            }
        };
        let split = match hi {
            Some(h) => 1.0f64.min(h).max(lo),
            None => 1.0f64.max(lo),
        };
        let head = q.integrate(f, lo, split);
        let tail = match hi {
            Some(h) if h > split => q.integrate(f, split, h),
            Some(_) => Integral {
                value: 0.0,
                abs_error: 0.0,
                requested: 0.0,
                evaluations: 0,
                converged: true,
            },
            None => q.integrate_to_infinity(f, split),
        };
        Integral {
            value: head.value + tail.value,
            abs_error: head.abs_error + tail.abs_error,
            requested: head.requested + tail.requested,
            evaluations: head.evaluations + tail.evaluations,
            converged: head.converged && tail.converged,
        }
    }
}

impl fmt::Debug for UserDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserDensity")
            .field("label", &self.label)
            .field("support_max", &self.support_max)
            .field("second_moment", &self.second_moment)
            .field("first_moment", &self.first_moment)
            .finish()
    }
}

/// The concrete shape of a [`LevyMeasure`].
#[derive(Debug, Clone)]
pub enum MeasureKind {
    /// `σ = 0`: no jump part.
    Zero,
    /// `σ = z δ_a`.
    PointMass {
        mass: f64,
        location: f64,
    },
    /// `σ(dτ) = z e^{-τ} τ^{-1} dτ`.
    Gamma {
        intensity: f64,
    },
    User(UserDensity),
}

/// Validated Levy measure with finite second moment. Immutable and cheap to
/// clone.
#[derive(Debug, Clone)]
pub struct LevyMeasure {
    kind: MeasureKind,
}

fn positive(name: &'static str, what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("{what} must be positive, got {v}")))
    }
}

impl LevyMeasure {
    pub fn zero() -> Self {
        Self {
            kind: MeasureKind::Zero,
        }
    }

    pub fn point_mass(mass: f64, location: f64) -> Result<Self> {
        positive("z", "intensity", mass)?;
        positive("location", "jump location", location)?;
        Ok(Self {
            kind: MeasureKind::PointMass { mass, location },
        })
    }

    /// The Poisson sheet measure `z δ_1`.
    pub fn poisson(z: f64) -> Result<Self> {
        Self::point_mass(z, 1.0)
    }

    pub fn gamma(z: f64) -> Result<Self> {
        positive("z", "intensity", z)?;
        Ok(Self {
            kind: MeasureKind::Gamma { intensity: z },
        })
    }

    /// Wraps a caller-supplied density. The second moment must be finite
    /// (checked by quadrature); a divergent first moment is tolerated and
    /// only disables the positivity machinery.
    pub fn user_density<F>(label: impl Into<String>, density: F, support_max: Option<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Some(m) = support_max {
            positive("support_max", "support bound", m)?;
        }
        let mut user = UserDensity {
            density: Arc::new(density),
            support_max,
            label: label.into(),
            second_moment: f64::NAN,
            first_moment: None,
        };
        let second = user.integrate(|t| t * t, 0.0, None);
        if !second.converged || !second.value.is_finite() {
            return Err(Error::Divergent(format!(
                "second moment of density `{}` is not finite (estimate {:e})",
                user.label, second.value
            )));
        }
        if second.value < 0.0 {
            return Err(invalid("density", "density must be non-negative"));
        }
        user.second_moment = second.value;
        let first = user.integrate(|t| t, 0.0, None);
        user.first_moment = (first.converged && first.value.is_finite()).then_some(first.value);
        Ok(Self {
            kind: MeasureKind::User(user),
        })
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, MeasureKind::Zero)
    }

    /// `∫ τ² σ(dτ)`.
    pub fn second_moment(&self) -> f64 {
        match &self.kind {
            MeasureKind::Zero => 0.0,
            MeasureKind::PointMass { mass, location } => mass * location * location,
            MeasureKind::Gamma { intensity } => *intensity,
            MeasureKind::User(u) => u.second_moment,
        }
    }

    /// `⟨τ⟩_σ`, or `None` when the integral diverges (positivity floor
    /// unavailable).
    pub fn first_moment(&self) -> Option<f64> {
        match &self.kind {
            MeasureKind::Zero => Some(0.0),
            MeasureKind::PointMass { mass, location } => Some(mass * location),
            MeasureKind::Gamma { intensity } => Some(*intensity),
            MeasureKind::User(u) => u.first_moment,
        }
    }

    /// `Φ(λ) = ∫ τ (1 - e^{-λτ}) σ(dτ)`, `λ ≥ 0`.
    pub fn phi(&self, lambda: f64) -> f64 {
        debug_assert!(lambda >= 0.0);
        match &self.kind {
            MeasureKind::Zero => 0.0,
            MeasureKind::PointMass { mass, location } => mass * location * one_minus_exp_neg(lambda * location),
            MeasureKind::Gamma { intensity } => intensity * lambda / (1.0 + lambda),
            MeasureKind::User(u) => {
                if lambda == 0.0 {
                    0.0
                } else {
                    u.integrate(|t| t * one_minus_exp_neg(lambda * t), 0.0, None).value
                }
            }
        }
    }

    /// `ψ(λ) = ∫ (e^{-λτ} - 1 + λτ) σ(dτ)`, `λ ≥ 0`.
    pub fn psi(&self, lambda: f64) -> f64 {
        debug_assert!(lambda >= 0.0);
        match &self.kind {
            MeasureKind::Zero => 0.0,
            MeasureKind::PointMass { mass, location } => mass * exp_neg_minus_one_plus(lambda * location),
            MeasureKind::Gamma { intensity } => intensity * (lambda - lambda.ln_1p()),
            MeasureKind::User(u) => {
                if lambda == 0.0 {
                    0.0
                } else {
                    u.integrate(|t| exp_neg_minus_one_plus(lambda * t), 0.0, None).value
                }
            }
        }
    }

    /// `∫ (e^{iλτ} - 1 - iλτ) σ(dτ)`.
    pub fn char_exponent(&self, lambda: f64) -> Complex64 {
        match &self.kind {
            MeasureKind::Zero => Complex64::new(0.0, 0.0),
            MeasureKind::PointMass { mass, location } => {
                let x = lambda * location;
                Complex64::new(mass * cos_minus_one(x), mass * sin_minus_x(x))
            }
            MeasureKind::Gamma { intensity } => {
                // -z (log(1 - iλ) + iλ), principal branch.
                let l = Complex64::new(1.0, -lambda).ln();
                -(l + Complex64::new(0.0, lambda)) * *intensity
            }
            MeasureKind::User(u) => {
                if lambda == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let re = u.integrate(|t| cos_minus_one(lambda * t), 0.0, None).value;
                let im = u.integrate(|t| sin_minus_x(lambda * t), 0.0, None).value;
                Complex64::new(re, im)
            }
        }
    }

    /// `σ((ε, ∞))`. Errors when the measure has infinite activity and
    /// `ε = 0`.
    pub fn truncated_intensity(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        match &self.kind {
            MeasureKind::Zero => Ok(0.0),
            MeasureKind::PointMass { mass, location } => Ok(if eps < *location { *mass } else { 0.0 }),
            MeasureKind::Gamma { intensity } => {
                if eps == 0.0 {
                    Err(Error::Divergent(
                        "gamma measure has infinite activity; truncation level must be positive".into(),
                    ))
                } else {
                    Ok(intensity * exp_integral_e1(eps))
                }
            }
            MeasureKind::User(u) => {
                let r = u.integrate(|_| 1.0, eps, None);
                if r.converged && r.value.is_finite() {
                    Ok(r.value)
                } else {
                    Err(Error::Divergent(format!(
                        "density `{}` has infinite mass above {eps}; truncation level must be larger",
                        u.label
                    )))
                }
            }
        }
    }

    /// `∫_{(ε, ∞)} τ σ(dτ)`: the compensator mean of the truncated sheet.
    pub fn truncated_mean(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        match &self.kind {
            MeasureKind::Zero => Ok(0.0),
            MeasureKind::PointMass { mass, location } => Ok(if eps < *location { mass * location } else { 0.0 }),
            MeasureKind::Gamma { intensity } => Ok(intensity * (-eps).exp()),
            MeasureKind::User(u) => {
                if eps == 0.0 {
                    return u.first_moment.ok_or(Error::FloorUnavailable);
                }
                u.integrate(|t| t, eps, None).into_result("truncated mean")
            }
        }
    }

    /// `∫_{(0, ε]} τ² σ(dτ)`: variance carried by the discarded jumps.
    pub fn small_jump_l2(&self, eps: f64) -> f64 {
        if eps <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            MeasureKind::Zero => 0.0,
            MeasureKind::PointMass { mass, location } => {
                if eps < *location {
                    0.0
                } else {
                    mass * location * location
                }
            }
            MeasureKind::Gamma { intensity } => intensity * lower_gamma2(eps),
            MeasureKind::User(u) => u.integrate(|t| t * t, 0.0, Some(eps)).value,
        }
    }

    /// Largest truncation level `ε` whose discarded variance
    /// `small_jump_l2(ε) · scale` stays within `budget`, where `scale` is
    /// typically `area · sup κ²`.
    pub fn auto_truncation(&self, scale: f64, budget: f64) -> f64 {
        let fits = |e: f64| self.small_jump_l2(e) * scale <= budget;
        match &self.kind {
            MeasureKind::Zero => 0.0,
            MeasureKind::PointMass { .. } => 0.0,
            _ => {
                let (mut lo, mut hi) = (1e-12f64.ln(), 10f64.ln());
                if fits(hi.exp()) {
                    return hi.exp();
                }
                if !fits(lo.exp()) {
                    return lo.exp();
                }
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if fits(mid.exp()) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-10 {
                        break;
                    }
                }
                lo.exp()
            }
        }
    }

    /// Sampler for jump sizes from `σ` restricted to `(ε, ∞)`, normalised.
    pub fn sampler(&self, eps: f64) -> Result<JumpSampler> {
        JumpSampler::new(self, eps)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(())
    } else {
        Err(invalid(
            "trunc_eps",
            format!("truncation level must be non-negative, got {eps}"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gamma_as_user(z: f64) -> LevyMeasure {
        LevyMeasure::user_density("gamma", move |t: f64| z * (-t).exp() / t, None).unwrap()
    }

    #[test]
    fn moments_of_builtins() {
        let p = LevyMeasure::point_mass(1.0, 1.0).unwrap();
        assert_eq!(p.second_moment(), 1.0);
        assert_eq!(p.first_moment(), Some(1.0));
        assert_eq!(LevyMeasure::point_mass(3.0, 2.0).unwrap().second_moment(), 12.0);
        assert_eq!(LevyMeasure::gamma(2.0).unwrap().second_moment(), 2.0);
        assert_eq!(LevyMeasure::gamma(1.0).unwrap().first_moment(), Some(1.0));
        assert_eq!(LevyMeasure::gamma(0.5).unwrap().first_moment(), Some(0.5));
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        let err = LevyMeasure::gamma(-1.0).unwrap_err();
        assert!(err.to_string().contains("intensity must be positive"));
        assert!(LevyMeasure::point_mass(1.0, 0.0).is_err());
        assert!(LevyMeasure::point_mass(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn user_density_requires_finite_second_moment() {
        // τ^{-2.5} near infinity: ∫ τ² τ^{-2.5} diverges.
        let heavy = LevyMeasure::user_density("stable-like", |t: f64| t.powf(-2.5), None);
        assert!(matches!(heavy, Err(Error::Divergent(_))));
    }

    #[test]
    fn user_density_with_divergent_first_moment_is_flagged() {
        // d(τ) = τ^{-2} on (0, 1]: ∫ τ² d finite, ∫ τ d = ∞.
        let m = LevyMeasure::user_density("tau^-2", |t: f64| t.powi(-2), Some(1.0)).unwrap();
        assert!((m.second_moment() - 1.0).abs() < 1e-9);
        assert_eq!(m.first_moment(), None);
    }

    #[test]
    fn user_density_gamma_moments() {
        let m = gamma_as_user(2.0);
        assert!((m.second_moment() - 2.0).abs() < 1e-10);
        assert!((m.first_moment().unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn phi_examples() {
        let p = LevyMeasure::poisson(1.0).unwrap();
        assert_eq!(p.phi(0.0), 0.0);
        assert!((p.phi(1.0) - 0.632_120_558_828_557_7).abs() < 1e-15);
        let g = LevyMeasure::gamma(1.0).unwrap();
        assert!((g.phi(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        let p = LevyMeasure::poisson(1.0).unwrap();
        let g = LevyMeasure::gamma(1.0).unwrap();
        assert_eq!(p.psi(0.0), 0.0);
        assert_eq!(g.psi(0.0), 0.0);
        assert!((p.psi(1.0) - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((g.psi(1.0) - 0.306_852_819_440_054_7).abs() < 1e-15);
    }

    #[test]
    fn char_exponent_examples() {
        let p = LevyMeasure::poisson(1.0).unwrap();
        assert_eq!(p.char_exponent(0.0), Complex64::new(0.0, 0.0));
        let v = p.char_exponent(std::f64::consts::PI);
        assert!((v.re + 2.0).abs() < 1e-14);
        assert!((v.im + std::f64::consts::PI).abs() < 1e-14);

        // Independent oracle: the gamma characteristic exponent by quadrature.
        let g = LevyMeasure::gamma(1.0).unwrap();
        let closed = g.char_exponent(1.0);
        let quad = gamma_as_user(1.0).char_exponent(1.0);
        assert!((closed - quad).norm() < 1e-10);
        assert!((closed.re + 0.346_573_590_279_972_65).abs() < 1e-14);
        assert!((closed.im + 0.214_601_836_602_551_7).abs() < 1e-14);
    }

    #[test]
    fn truncation_examples() {
        let g = LevyMeasure::gamma(1.0).unwrap();
        assert!((g.truncated_intensity(0.1).unwrap() - 1.822_923_958_419_390_6).abs() < 1e-13);
        assert!((g.truncated_mean(0.1).unwrap() - 0.904_837_418_035_959_6).abs() < 1e-15);
        assert!(matches!(g.truncated_intensity(0.0), Err(Error::Divergent(_))));

        let p = LevyMeasure::point_mass(2.0, 1.0).unwrap();
        assert_eq!(p.truncated_intensity(0.5).unwrap(), 2.0);
        assert_eq!(p.truncated_mean(0.5).unwrap(), 2.0);
        assert_eq!(p.small_jump_l2(0.5), 0.0);
        assert_eq!(p.truncated_intensity(0.0).unwrap(), 2.0);
    }

    #[test]
    fn user_truncation_matches_gamma() {
        let g = LevyMeasure::gamma(1.0).unwrap();
        let u = gamma_as_user(1.0);
        for &e in &[0.01, 0.1, 0.5, 2.0] {
            let (a, b) = (g.truncated_intensity(e).unwrap(), u.truncated_intensity(e).unwrap());
            assert!((a - b).abs() <= 1e-9 * a, "intensity at {e}: {a} vs {b}");
            let (a, b) = (g.truncated_mean(e).unwrap(), u.truncated_mean(e).unwrap());
            assert!((a - b).abs() <= 1e-9 * a);
            let (a, b) = (g.small_jump_l2(e), u.small_jump_l2(e));
            assert!((a - b).abs() <= 1e-9 * a);
        }
    }

    #[test]
    fn small_jump_l2_shrinks_to_zero() {
        let g = LevyMeasure::gamma(1.0).unwrap();
        let seq: Vec<f64> = [0.2, 0.1, 0.05, 0.01, 1e-4]
            .iter()
            .map(|&e| g.small_jump_l2(e))
            .collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        assert!(seq[4] < 1e-8);
        assert!((g.small_jump_l2(0.01) - 4.966_791_334_026_589e-5).abs() < 1e-18);
    }

    #[test]
    fn auto_truncation_meets_budget() {
        let g = LevyMeasure::gamma(1.0).unwrap();
        let eps = g.auto_truncation(4.0, TRUNCATION_BUDGET);
        assert!(g.small_jump_l2(eps) * 4.0 <= TRUNCATION_BUDGET);
        assert!(g.small_jump_l2(eps * 1.01) * 4.0 > TRUNCATION_BUDGET);
        assert_eq!(LevyMeasure::poisson(1.0).unwrap().auto_truncation(4.0, 1e-6), 0.0);
    }

    #[test]
    fn closed_forms_agree_with_user_density_path() {
        for &z in &[0.5, 1.0, 2.0] {
            let g = LevyMeasure::gamma(z).unwrap();
            let u = gamma_as_user(z);
            for &l in &[1e-3, 0.1, 1.0, 3.7, 25.0] {
                let (a, b) = (g.phi(l), u.phi(l));
                assert!((a - b).abs() <= 1e-9 * a.abs(), "phi({l}): {a} vs {b}");
                let (a, b) = (g.psi(l), u.psi(l));
                assert!((a - b).abs() <= 1e-9 * a.abs(), "psi({l}): {a} vs {b}");
            }
        }
    }

    fn builtins() -> Vec<LevyMeasure> {
        vec![
            LevyMeasure::poisson(1.0).unwrap(),
            LevyMeasure::point_mass(0.7, 2.5).unwrap(),
            LevyMeasure::gamma(1.0).unwrap(),
            LevyMeasure::gamma(2.0).unwrap(),
        ]
    }

    #[test]
    fn psi_derivative_is_phi() {
        for m in builtins().into_iter().chain([gamma_as_user(1.0)]) {
            for &l in &[0.3, 1.0, 2.5] {
                // Richardson: the O(h²) error shrinks by ~100 from h=1e-3 to 1e-4.
                let fd = |h: f64| (m.psi(l + h) - m.psi(l - h)) / (2.0 * h);
                let e3 = (fd(1e-3) - m.phi(l)).abs();
                let e4 = (fd(1e-4) - m.phi(l)).abs();
                assert!(e3 < 1e-5, "{m:?} at {l}: {e3}");
                assert!(e4 < 1e-7, "{m:?} at {l}: {e4}");
            }
        }
    }

    proptest! {
        #[test]
        fn phi_bounds_and_monotone(l in 0.0f64..50.0, dl in 0.0f64..5.0) {
            for m in builtins() {
                let a = m.phi(l);
                let b = m.phi(l + dl);
                prop_assert!(a >= 0.0);
                prop_assert!(b >= a - 1e-15);
                let bound = m.first_moment().unwrap().min(l * m.second_moment());
                prop_assert!(a <= bound * (1.0 + 1e-12) + 1e-300);
            }
        }

        #[test]
        fn psi_convex_nondecreasing(l in 0.0f64..20.0, h in 1e-3f64..1.0) {
            for m in builtins() {
                let (a, b, c) = (m.psi(l), m.psi(l + h), m.psi(l + 2.0 * h));
                prop_assert!(b >= a);
                prop_assert!(a + c - 2.0 * b >= -1e-12 * c.abs());
            }
        }

        #[test]
        fn char_exponent_symmetry(l in -30.0f64..30.0) {
            for m in builtins() {
                let v = m.char_exponent(l);
                let w = m.char_exponent(-l);
                prop_assert!(v.re <= 1e-15);
                prop_assert!((v - w.conj()).norm() <= 1e-12 * (1.0 + v.norm()));
            }
        }
    }
}
