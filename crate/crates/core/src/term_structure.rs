//! Model assembly: forward and spot rates, bond prices and discounted bond
//! prices per sample path.
//!
//! ```text
//! F_{s,t} = μ_{s,t} + X_{s,t} + Y_{s,t}
//! P_{s,t} = exp(−∫_s^t F_{s,u} du)
//! Z_{s,t} = P_{s,t} exp(−∫_0^s F_{u,u} du)
//! ```
//!
//! The jump parts of both time integrals are evaluated exactly from the
//! atoms; only the deterministic `μ`-integrals and the grid-based Gaussian
//! part involve numerical integration.

use std::sync::Arc;

use rand::Rng;

use crate::drift::{
    self, gaussian_diagonal_integral, gaussian_drift_correction, gaussian_forward_integral, integrate_fallible,
    ClosedFamily, GaussianCovariance, InitialCurve, PositivityFloor,
};
use crate::error::{Error, Result};
use crate::levy_measure::{LevyMeasure, TRUNCATION_BUDGET};
use crate::random_fields::{
    simulate_brownian_sheet, Domain, GaussianRealization, Grid, ScalingFunction, SheetRealization, SheetSimulator,
};

/// Agreement required between closed-form and quadrature drift in
/// [`DriftMode::CrossCheck`].
pub const CROSS_CHECK_TOL: f64 = 1e-7;

/// How the drift surface is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftMode {
    /// Closed forms only; legal for the Poisson (`a = 1`) and gamma sheets
    /// with `κ ≡ 1`.
    ClosedForm,
    /// Generic quadrature.
    #[default]
    Quadrature,
    /// Both, asserting agreement.
    CrossCheck,
    /// `μ_{s,t} = μ_{0,t}`: a deliberately mis-specified negative control.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Truncation {
    /// Largest `ε` whose discarded variance over the domain stays within
    /// [`TRUNCATION_BUDGET`].
    #[default]
    Auto,
    Fixed(f64),
}

/// Full model description.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub measure: LevyMeasure,
    pub kappa: ScalingFunction,
    pub initial_curve: InitialCurve,
    pub gaussian: GaussianCovariance,
    pub horizon: Domain,
    pub truncation: Truncation,
    pub drift_mode: DriftMode,
    /// `(s, t)` steps of the Brownian-sheet simulation grid.
    pub gaussian_steps: (usize, usize),
}

impl ModelSpec {
    pub fn new(measure: LevyMeasure, kappa: ScalingFunction, initial_curve: InitialCurve, horizon: Domain) -> Self {
        Self {
            measure,
            kappa,
            initial_curve,
            gaussian: GaussianCovariance::None,
            horizon,
            truncation: Truncation::Auto,
            drift_mode: DriftMode::Quadrature,
            gaussian_steps: (100, 100),
        }
    }

    pub fn with_gaussian(mut self, gaussian: GaussianCovariance) -> Self {
        self.gaussian = gaussian;
        self
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn with_drift_mode(mut self, mode: DriftMode) -> Self {
        self.drift_mode = mode;
        self
    }

    pub fn with_gaussian_steps(mut self, s_steps: usize, t_steps: usize) -> Self {
        self.gaussian_steps = (s_steps, t_steps);
        self
    }
}

/// One joint sample path.
#[derive(Debug, Clone)]
pub struct ModelPath {
    pub sheet: SheetRealization,
    pub gaussian: Option<GaussianRealization>,
}

/// Deterministic parts of `−ln Z_{s,t}` for a fixed `(s, t)`, computed once
/// and reused across paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceQuote {
    pub s: f64,
    pub t: f64,
    /// `∫_s^t μ_{s,u} du`.
    pub forward_mu: f64,
    /// `∫_0^s μ_{u,u} du`.
    pub diagonal_mu: f64,
}

/// Decomposition of `μ_{s,t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuComponents {
    pub mu0: f64,
    pub jump_increment: f64,
    pub gaussian_correction: f64,
}

impl MuComponents {
    pub fn total(&self) -> f64 {
        self.mu0 + self.jump_increment + self.gaussian_correction
    }
}

/// A validated, ready-to-simulate model.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    trunc_eps: f64,
    simulator: SheetSimulator,
    floor: Option<PositivityFloor>,
    family: ClosedFamily,
    gaussian_grid: Option<Arc<Grid>>,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let family = ClosedFamily::of(&spec.measure, &spec.kappa);
        if spec.drift_mode == DriftMode::ClosedForm || spec.drift_mode == DriftMode::CrossCheck {
            let legal = family != ClosedFamily::None || spec.measure.is_zero() && spec.kappa.as_constant().is_some();
            if !legal {
                let reason = if spec.kappa.is_unit() {
                    "closed form requires a Poisson (unit jumps) or gamma measure".to_string()
                } else {
                    "closed form requires constant κ = 1".to_string()
                };
                return Err(Error::ClosedFormUnavailable(reason));
            }
            if matches!(spec.gaussian, GaussianCovariance::UserGrid(_)) {
                return Err(Error::ClosedFormUnavailable(
                    "closed form requires a Brownian-sheet or absent Gaussian component".into(),
                ));
            }
        }
        let trunc_eps = match spec.truncation {
            Truncation::Fixed(e) => e,
            Truncation::Auto => {
                let scale = spec.horizon.area() * spec.kappa.sup().powi(2);
                spec.measure.auto_truncation(scale, TRUNCATION_BUDGET)
            }
        };
        let simulator = SheetSimulator::new(&spec.measure, spec.kappa.clone(), spec.horizon, trunc_eps)?;
        let floor = PositivityFloor::new(&spec.measure, &spec.kappa).ok();
        if spec.initial_curve.needs_floor() && floor.is_none() {
            return Err(Error::FloorUnavailable);
        }
        if let Some(f) = &floor {
            let slack = 1e-12 * f.mean_jump().max(1.0);
            if simulator.comp_mean() > f.mean_jump() + slack {
                return Err(Error::InvalidParameter {
                    name: "trunc_eps",
                    reason: format!(
                        "truncated compensator mean {} exceeds the full mean jump {}",
                        simulator.comp_mean(),
                        f.mean_jump()
                    ),
                });
            }
        }
        let gaussian_grid = match &spec.gaussian {
            GaussianCovariance::None => None,
            GaussianCovariance::BrownianSheet => Some(Arc::new(Grid::uniform(
                spec.horizon.s_max,
                spec.horizon.t_max,
                spec.gaussian_steps.0,
                spec.gaussian_steps.1,
            )?)),
            GaussianCovariance::UserGrid(c) => {
                if c.grid().s_max() < spec.horizon.s_max || c.grid().t_max() < spec.horizon.t_max {
                    return Err(Error::InvalidGrid(format!(
                        "covariance lattice [0, {}] x [0, {}] does not cover the horizon",
                        c.grid().s_max(),
                        c.grid().t_max()
                    )));
                }
                Some(Arc::clone(c.grid()))
            }
        };
        Ok(Self {
            spec,
            trunc_eps,
            simulator,
            floor,
            family,
            gaussian_grid,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn trunc_eps(&self) -> f64 {
        self.trunc_eps
    }

    pub fn horizon(&self) -> Domain {
        self.spec.horizon
    }

    pub fn floor(&self) -> Option<&PositivityFloor> {
        self.floor.as_ref()
    }

    pub fn simulator(&self) -> &SheetSimulator {
        &self.simulator
    }

    fn check(&self, s: f64, t: f64) -> Result<()> {
        let h = self.spec.horizon;
        if !(0.0 <= s && s <= t && t <= h.t_max && s <= h.s_max) {
            return Err(Error::OutOfDomain {
                s,
                t,
                reason: format!("model requires 0 <= s <= t within horizon ({}, {})", h.s_max, h.t_max),
            });
        }
        Ok(())
    }

    /// `μ_{0,t}`.
    pub fn mu0(&self, t: f64) -> Result<f64> {
        self.spec.initial_curve.eval(t, self.floor.as_ref())
    }

    /// `∫_a^b μ_{0,u} du`.
    pub fn mu0_integral(&self, a: f64, b: f64) -> Result<f64> {
        self.spec.initial_curve.integral(a, b, self.floor.as_ref())
    }

    /// Jump part `μ_{s,t} − μ_{0,t}` of the drift under the configured mode.
    pub fn drift_increment(&self, s: f64, t: f64) -> Result<f64> {
        if !(0.0 <= s && s <= t) {
            return Err(Error::OutOfDomain {
                s,
                t,
                reason: "drift requires 0 <= s <= t".into(),
            });
        }
        let m = &self.spec.measure;
        let k = &self.spec.kappa;
        match self.spec.drift_mode {
            DriftMode::Disabled => Ok(0.0),
            DriftMode::Quadrature => drift::drift_increment_quadrature(m, k, s, t),
            DriftMode::ClosedForm => Ok(self.family.increment(s, t).unwrap_or(0.0)),
            DriftMode::CrossCheck => {
                let closed = self.family.increment(s, t).unwrap_or(0.0);
                let quadrature = drift::drift_increment_quadrature(m, k, s, t)?;
                if (closed - quadrature).abs() > CROSS_CHECK_TOL * closed.abs().max(1.0) {
                    return Err(Error::CrossCheckFailed {
                        s,
                        t,
                        closed,
                        quadrature,
                    });
                }
                Ok(closed)
            }
        }
    }

    /// Gaussian part `∫_0^t c(s∧u, u, t) du` of the drift.
    pub fn gaussian_correction(&self, s: f64, t: f64) -> Result<f64> {
        if self.spec.drift_mode == DriftMode::Disabled {
            return Ok(0.0);
        }
        gaussian_drift_correction(&self.spec.gaussian, s, t)
    }

    pub fn mu_components(&self, s: f64, t: f64) -> Result<MuComponents> {
        self.check(s, t)?;
        Ok(MuComponents {
            mu0: self.mu0(t)?,
            jump_increment: self.drift_increment(s, t)?,
            gaussian_correction: self.gaussian_correction(s, t)?,
        })
    }

    /// `μ_{s,t}`.
    pub fn mu(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.mu_components(s, t)?.total())
    }

    fn uses_closed_antiderivatives(&self) -> bool {
        self.spec.drift_mode == DriftMode::ClosedForm && !matches!(self.spec.gaussian, GaussianCovariance::UserGrid(_))
    }

    /// `∫_s^t (μ_{s,u} − μ_{0,u}) du`.
    fn forward_drift_integral(&self, s: f64, t: f64) -> Result<f64> {
        match self.spec.drift_mode {
            DriftMode::Disabled => Ok(0.0),
            _ if self.uses_closed_antiderivatives() => Ok(self.family.forward_integral(s, t).unwrap_or(0.0)
                + gaussian_forward_integral(&self.spec.gaussian, s, t)?),
            DriftMode::CrossCheck => {
                let closed = self.family.forward_integral(s, t).unwrap_or(0.0);
                let quadrature = integrate_fallible(|u| self.drift_increment(s, u), &[s, t], "forward drift integral")?;
                if (closed - quadrature).abs() > 1e-6 * closed.abs().max(1.0) {
                    return Err(Error::CrossCheckFailed {
                        s,
                        t,
                        closed,
                        quadrature,
                    });
                }
                Ok(closed + gaussian_forward_integral(&self.spec.gaussian, s, t)?)
            }
            _ => Ok(
                integrate_fallible(|u| self.drift_increment(s, u), &[s, t], "forward drift integral")?
                    + gaussian_forward_integral(&self.spec.gaussian, s, t)?,
            ),
        }
    }

    /// `∫_0^s (μ_{u,u} − μ_{0,u}) du`.
    fn diagonal_drift_increment_integral(&self, s: f64) -> Result<f64> {
        match self.spec.drift_mode {
            DriftMode::Disabled => Ok(0.0),
            _ if self.uses_closed_antiderivatives() => {
                Ok(self.family.diagonal_integral(s).unwrap_or(0.0)
                    + gaussian_diagonal_integral(&self.spec.gaussian, s)?)
            }
            DriftMode::CrossCheck => {
                let closed = self.family.diagonal_integral(s).unwrap_or(0.0);
                let quadrature =
                    integrate_fallible(|u| self.drift_increment(u, u), &[0.0, s], "diagonal drift integral")?;
                if (closed - quadrature).abs() > 1e-6 * closed.abs().max(1.0) {
                    return Err(Error::CrossCheckFailed {
                        s,
                        t: s,
                        closed,
                        quadrature,
                    });
                }
                Ok(closed + gaussian_diagonal_integral(&self.spec.gaussian, s)?)
            }
            _ => Ok(
                integrate_fallible(|u| self.drift_increment(u, u), &[0.0, s], "diagonal drift integral")?
                    + gaussian_diagonal_integral(&self.spec.gaussian, s)?,
            ),
        }
    }

    /// `∫_s^t μ_{s,u} du`.
    pub fn forward_mu_integral(&self, s: f64, t: f64) -> Result<f64> {
        self.check(s, t)?;
        Ok(self.mu0_integral(s, t)? + self.forward_drift_integral(s, t)?)
    }

    /// `∫_0^s μ_{u,u} du`.
    pub fn diagonal_drift_integral(&self, s: f64) -> Result<f64> {
        self.check(s, s)?;
        Ok(self.mu0_integral(0.0, s)? + self.diagonal_drift_increment_integral(s)?)
    }

    pub fn quote(&self, s: f64, t: f64) -> Result<PriceQuote> {
        Ok(PriceQuote {
            s,
            t,
            forward_mu: self.forward_mu_integral(s, t)?,
            diagonal_mu: self.diagonal_drift_integral(s)?,
        })
    }

    pub fn simulate_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ModelPath> {
        let sheet = self.simulator.simulate(rng)?;
        let gaussian = match (&self.spec.gaussian, &self.gaussian_grid) {
            (GaussianCovariance::BrownianSheet, Some(grid)) => Some(simulate_brownian_sheet(grid, rng)),
            (GaussianCovariance::UserGrid(c), _) => Some(c.simulate(rng)),
            _ => None,
        };
        Ok(ModelPath { sheet, gaussian })
    }

    /// `X_{s,t} + Y_{s,t}`.
    pub fn field(&self, path: &ModelPath, s: f64, t: f64) -> Result<f64> {
        let y = match &path.gaussian {
            Some(g) => g.eval_y(s, t)?,
            None => 0.0,
        };
        Ok(path.sheet.eval_x(s, t)? + y)
    }

    /// `F_{s,t}`.
    pub fn forward_rate(&self, path: &ModelPath, s: f64, t: f64) -> Result<f64> {
        Ok(self.mu(s, t)? + self.field(path, s, t)?)
    }

    /// `R_s = F_{s,s}`.
    pub fn spot_rate(&self, path: &ModelPath, s: f64) -> Result<f64> {
        self.forward_rate(path, s, s)
    }

    /// `∫_s^t (X + Y)_{s,u} du`.
    pub fn field_forward_integral(&self, path: &ModelPath, s: f64, t: f64) -> Result<f64> {
        let y = match &path.gaussian {
            Some(g) => g.integral_forward(s, t)?,
            None => 0.0,
        };
        Ok(path.sheet.integral_forward(s, t)? + y)
    }

    /// `∫_{s₁}^t (X_{s₁,u} − X_{s₂,u}) du + ∫_{s₂}^{s₁} (X_{u,u} − X_{s₂,u}) du`,
    /// Gaussian part included.
    pub fn field_strip_integral(&self, path: &ModelPath, s2: f64, s1: f64, t: f64) -> Result<f64> {
        let y = match &path.gaussian {
            Some(g) => g.integral_strip(s2, s1, t)?,
            None => 0.0,
        };
        Ok(path.sheet.integral_strip(s2, s1, t)? + y)
    }

    /// `P_{s,t}` from a precomputed quote.
    pub fn bond_price_at(&self, quote: &PriceQuote, path: &ModelPath) -> Result<f64> {
        Ok((-(quote.forward_mu + self.field_forward_integral(path, quote.s, quote.t)?)).exp())
    }

    /// `Z_{s,t}` from a precomputed quote.
    pub fn discounted_price_at(&self, quote: &PriceQuote, path: &ModelPath) -> Result<f64> {
        let random = self.field_strip_integral(path, 0.0, quote.s, quote.t)?;
        Ok((-(quote.forward_mu + quote.diagonal_mu + random)).exp())
    }

    /// `P_{s,t}`.
    pub fn bond_price(&self, path: &ModelPath, s: f64, t: f64) -> Result<f64> {
        self.bond_price_at(&self.quote(s, t)?, path)
    }

    /// `Z_{s,t}`.
    pub fn discounted_price(&self, path: &ModelPath, s: f64, t: f64) -> Result<f64> {
        self.discounted_price_at(&self.quote(s, t)?, path)
    }

    /// Deterministic part of the identity exponent,
    /// `∫_{s₁}^t (μ_{s₁,u} − μ_{s₂,u}) du + ∫_{s₂}^{s₁} (μ_{u,u} − μ_{s₂,u}) du`.
    pub fn identity_drift(&self, s2: f64, s1: f64, t: f64) -> Result<f64> {
        self.check(s2, s1)?;
        self.check(s1, t)?;
        let forward = self.forward_drift_integral(s1, t)? - self.forward_drift_integral(s2, t)?;
        let diagonal = self.diagonal_drift_increment_integral(s1)? - self.diagonal_drift_increment_integral(s2)?;
        Ok(forward + diagonal)
    }
}
