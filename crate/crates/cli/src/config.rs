//! TOML run configuration.
//!
//! A configuration has a `schema` tag, a `[model]` section describing the
//! forward-rate model and a `[run]` section with Monte Carlo settings and
//! per-subcommand parameters. Unknown keys are rejected everywhere.

use std::path::PathBuf;
use std::sync::Arc;

use levyfield::drift::{CurveTable, GaussianCovariance, InitialCurve};
use levyfield::mc::DEFAULT_SEED;
use levyfield::random_fields::{Domain, ScalingFunction, UserGridCovariance};
use levyfield::term_structure::{DriftMode, Model, ModelSpec, Truncation};
use levyfield::validation::DEFAULT_Z_CRIT;
use levyfield::LevyMeasure;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// The only schema tag this build understands.
pub const SCHEMA: &str = "levyfield/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub measure: MeasureConfig,
    #[serde(default)]
    pub kappa: KappaConfig,
    pub initial_curve: CurveConfig,
    #[serde(default)]
    pub gaussian: GaussianConfig,
    pub horizon: HorizonConfig,
    #[serde(default)]
    pub trunc_eps: TruncEps,
    #[serde(default)]
    pub drift_mode: DriftModeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureConfig {
    None,
    /// Unit jumps with intensity `z`.
    Poisson {
        z: f64,
    },
    PointMass {
        mass: f64,
        location: f64,
    },
    Gamma {
        z: f64,
    },
    /// Piecewise-linear density through `[tau, density]` knots, zero outside
    /// the knot range.
    DensityTable {
        knots: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KappaConfig {
    Constant {
        value: f64,
    },
    /// `κ(x, y) = base + amplitude · exp(−rate · |y − x|)`.
    ExpDecay {
        base: f64,
        amplitude: f64,
        rate: f64,
    },
}

impl Default for KappaConfig {
    fn default() -> Self {
        Self::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveConfig {
    Constant {
        value: f64,
    },
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// Linear interpolation through `[t, value]` knots.
    Table {
        knots: Vec<[f64; 2]>,
    },
    /// The positivity floor of the measure plus a non-negative `base`.
    Floor {
        #[serde(default)]
        base: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GaussianConfig {
    #[default]
    None,
    BrownianSheet {
        #[serde(default = "default_steps")]
        s_steps: usize,
        #[serde(default = "default_steps")]
        t_steps: usize,
    },
    /// Covariance `c(s, t1, t2)` tabulated as `values[i][j][k]` at
    /// `(s_nodes[i], t_nodes[j], t_nodes[k])`.
    UserGrid {
        s_nodes: Vec<f64>,
        t_nodes: Vec<f64>,
        values: Vec<Vec<Vec<f64>>>,
    },
}

fn default_steps() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    pub s_max: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

/// Jump truncation level: the keyword `"auto"` or an explicit `ε ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruncEps {
    Auto(AutoKeyword),
    Fixed(f64),
}

impl Default for TruncEps {
    fn default() -> Self {
        Self::Auto(AutoKeyword::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DriftModeConfig {
    ClosedForm,
    #[default]
    Quadrature,
    CrossCheck,
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_z_crit")]
    pub z_crit: f64,
    /// Output directory; the `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub drift_table: DriftTableConfig,
    #[serde(default)]
    pub price: PriceConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

fn default_paths() -> usize {
    10_000
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_workers() -> usize {
    1
}

fn default_z_crit() -> f64 {
    DEFAULT_Z_CRIT
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_paths: default_paths(),
            seed: default_seed(),
            workers: default_workers(),
            z_crit: default_z_crit(),
            out: None,
            drift_table: DriftTableConfig::default(),
            price: PriceConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

/// Uniform node counts along `s` and `t`; only pairs with `s ≤ t` are
/// tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftTableConfig {
    pub s_nodes: usize,
    pub t_nodes: usize,
}

impl Default for DriftTableConfig {
    fn default() -> Self {
        Self {
            s_nodes: 20,
            t_nodes: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    /// Explicit `[s, t]` pairs; when absent a uniform grid of `nodes` per
    /// axis (restricted to `s ≤ t`) is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_price_nodes")]
    pub nodes: usize,
}

fn default_price_nodes() -> usize {
    5
}

impl Default for PriceConfig {
    fn default() -> Self {
        Self {
            points: None,
            nodes: default_price_nodes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub martingale: Option<MartingaleCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<IdentityCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cf: Option<CfCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<VarianceCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity: Option<PositivityCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_identity: Option<DriftIdentityCheck>,
}

impl ValidateConfig {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleCheck {
    pub t: f64,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityCheck {
    pub s2: f64,
    pub s1: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfCheck {
    pub s: f64,
    pub t: f64,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceCheck {
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivityCheck {
    pub nodes: usize,
    /// Overrides `run.n_paths` for the scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftIdentityCheck {
    pub triples: usize,
    pub tolerance: f64,
}

/// Parses and schema-checks a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    if config.schema != SCHEMA {
        return Err(CliError::Parse(format!(
            "unsupported schema `{}` (expected `{SCHEMA}`)",
            config.schema
        )));
    }
    Ok(config)
}

impl RunConfig {
    /// Serialises the configuration back to TOML.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Builds the model and fills in every value chosen at run time, so the
    /// returned configuration reproduces the run exactly.
    pub fn resolve(&self) -> Result<(RunConfig, Model), CliError> {
        let model = Model::new(self.model.to_spec()?)?;
        let mut resolved = self.clone();
        resolved.model.trunc_eps = TruncEps::Fixed(model.trunc_eps());
        if resolved.run.validate.is_empty() {
            let h = model.horizon();
            let s_top = h.s_max.min(h.t_max);
            resolved.run.validate.martingale = Some(MartingaleCheck {
                t: h.t_max,
                s: vec![0.25 * s_top, 0.5 * s_top, 0.75 * s_top],
            });
        }
        Ok((resolved, model))
    }
}

impl ModelConfig {
    pub fn to_spec(&self) -> Result<ModelSpec, CliError> {
        let horizon = Domain::new(self.horizon.s_max, self.horizon.t_max)?;
        let mut spec = ModelSpec::new(
            self.measure.build()?,
            self.kappa.build()?,
            self.initial_curve.build()?,
            horizon,
        )
        .with_drift_mode(self.drift_mode.into())
        .with_truncation(match self.trunc_eps {
            TruncEps::Auto(_) => Truncation::Auto,
            TruncEps::Fixed(e) => Truncation::Fixed(e),
        });
        match &self.gaussian {
            GaussianConfig::None => {}
            GaussianConfig::BrownianSheet { s_steps, t_steps } => {
                spec = spec
                    .with_gaussian(GaussianCovariance::BrownianSheet)
                    .with_gaussian_steps(*s_steps, *t_steps);
            }
            GaussianConfig::UserGrid {
                s_nodes,
                t_nodes,
                values,
            } => {
                let cov = UserGridCovariance::new(s_nodes.clone(), t_nodes.clone(), values.clone())?;
                spec = spec.with_gaussian(GaussianCovariance::UserGrid(Arc::new(cov)));
            }
        }
        Ok(spec)
    }
}

impl From<DriftModeConfig> for DriftMode {
    fn from(mode: DriftModeConfig) -> Self {
        match mode {
            DriftModeConfig::ClosedForm => DriftMode::ClosedForm,
            DriftModeConfig::Quadrature => DriftMode::Quadrature,
            DriftModeConfig::CrossCheck => DriftMode::CrossCheck,
            DriftModeConfig::Disabled => DriftMode::Disabled,
        }
    }
}

fn check_knots(key: &str, knots: &[[f64; 2]]) -> Result<(), CliError> {
    if knots.len() < 2 {
        return Err(CliError::Value(format!("{key}: at least two knots required")));
    }
    if knots.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Value(format!("{key}: knots must be finite")));
    }
    if knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
        return Err(CliError::Value(format!(
            "{key}: knot abscissae must be strictly increasing"
        )));
    }
    Ok(())
}

fn interpolate(knots: &[[f64; 2]], x: f64) -> f64 {
    let i = knots.partition_point(|k| k[0] <= x);
    if i == 0 || i == knots.len() {
        return if x == knots[knots.len() - 1][0] {
            knots[knots.len() - 1][1]
        } else {
            0.0
        };
    }
    let ([x0, y0], [x1, y1]) = (knots[i - 1], knots[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

impl MeasureConfig {
    pub fn build(&self) -> Result<LevyMeasure, CliError> {
        Ok(match self {
            Self::None => LevyMeasure::zero(),
            Self::Poisson { z } => LevyMeasure::poisson(*z)?,
            Self::PointMass { mass, location } => LevyMeasure::point_mass(*mass, *location)?,
            Self::Gamma { z } => LevyMeasure::gamma(*z)?,
            Self::DensityTable { knots } => {
                check_knots("model.measure.knots", knots)?;
                if knots[0][0] < 0.0 || knots.iter().any(|k| k[1] < 0.0) {
                    return Err(CliError::Value(
                        "model.measure.knots: jump sizes and densities must be non-negative".into(),
                    ));
                }
                let table = knots.clone();
                let top = table[table.len() - 1][0];
                LevyMeasure::user_density("density-table", move |tau| interpolate(&table, tau), Some(top))?
            }
        })
    }
}

impl KappaConfig {
    pub fn build(&self) -> Result<ScalingFunction, CliError> {
        match *self {
            Self::Constant { value } => Ok(ScalingFunction::constant(value)?),
            Self::ExpDecay { base, amplitude, rate } => {
                if [base, amplitude, rate].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(CliError::Value(
                        "model.kappa: base, amplitude and rate must be finite and non-negative".into(),
                    ));
                }
                Ok(ScalingFunction::callable(
                    "exp-decay",
                    move |x, y| base + amplitude * (-rate * (y - x).abs()).exp(),
                    base + amplitude,
                )?)
            }
        }
    }
}

impl CurveConfig {
    pub fn build(&self) -> Result<InitialCurve, CliError> {
        Ok(match self {
            Self::Constant { value } => InitialCurve::Constant(*value),
            Self::Affine { intercept, slope } => InitialCurve::Affine {
                intercept: *intercept,
                slope: *slope,
            },
            Self::Table { knots } => {
                check_knots("model.initial_curve.knots", knots)?;
                InitialCurve::Table(CurveTable::new(knots.iter().map(|k| (k[0], k[1])).collect())?)
            }
            Self::Floor { base } => {
                if !(base.is_finite() && *base >= 0.0) {
                    return Err(CliError::Value(
                        "model.initial_curve.base must be finite and non-negative".into(),
                    ));
                }
                InitialCurve::PositivityFloor { base: *base }
            }
        })
    }
}
