//! The scaling function `κ(x, y) ≥ 0` applied to jump sizes.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{invalid, Result};
use crate::numeric::GaussLegendre;

pub type KappaFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Weight multiplying `κ` inside a compensator integral over
/// `[x0, x1] × [0, t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    /// `1`
    Unit,
    /// `t - (s ∨ y)` with `s = x1`: the forward-rate time integral.
    Forward,
    /// `t - (x ∨ y)`: spot and strip integrals.
    Horizon,
}

impl Weight {
    #[inline]
    pub fn eval(self, x: f64, y: f64, x1: f64, t: f64) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::Forward => t - x1.max(y),
            Weight::Horizon => t - x.max(y),
        }
    }

    fn tag(self) -> u8 {
        match self {
            Weight::Unit => 0,
            Weight::Forward => 1,
            Weight::Horizon => 2,
        }
    }
}

type CacheKey = (u8, bool, u64, u64, u64);

/// Memoised compensator integrals of a callable `κ`.
#[derive(Default)]
pub struct CompensatorCache {
    map: RwLock<HashMap<CacheKey, f64>>,
}

#[derive(Clone)]
pub enum ScalingKind {
    Constant(f64),
    Callable {
        label: String,
        f: KappaFn,
        bound: f64,
        cache: Arc<CompensatorCache>,
    },
}

/// Locally bounded non-negative scaling `κ` on `[0, S] × [0, T]`.
///
/// Compensator integrals for callable `κ` use a 64×64 tensor Gauss–Legendre
/// rule on cells that avoid the diagonal `y = x`, plus collapsed triangles on
/// the square straddling it, and are memoised per query.
#[derive(Clone)]
pub struct ScalingFunction {
    kind: ScalingKind,
}

impl fmt::Debug for ScalingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ScalingKind::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            ScalingKind::Callable { label, bound, .. } => f
                .debug_struct("Callable")
                .field("label", label)
                .field("bound", bound)
                .finish(),
        }
    }
}

impl ScalingFunction {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(invalid(
                "kappa",
                format!("constant scaling must be finite and non-negative, got {value}"),
            ));
        }
        Ok(Self {
            kind: ScalingKind::Constant(value),
        })
    }

    pub fn unit() -> Self {
        Self {
            kind: ScalingKind::Constant(1.0),
        }
    }

    /// `bound` must dominate `f` on the model domain; it is used for the
    /// automatic truncation budget.
    pub fn callable<F>(label: impl Into<String>, f: F, bound: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(invalid(
                "kappa",
                format!("scaling bound must be finite and non-negative, got {bound}"),
            ));
        }
        Ok(Self {
            kind: ScalingKind::Callable {
                label: label.into(),
                f: Arc::new(f),
                bound,
                cache: Arc::default(),
            },
        })
    }

    pub fn kind(&self) -> &ScalingKind {
        &self.kind
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            ScalingKind::Constant(c) => Some(c),
            ScalingKind::Callable { .. } => None,
        }
    }

    pub fn is_unit(&self) -> bool {
        self.as_constant() == Some(1.0)
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            ScalingKind::Constant(c) => *c,
            ScalingKind::Callable { f, .. } => f(x, y),
        }
    }

    /// Certified upper bound `sup κ`.
    pub fn sup(&self) -> f64 {
        match &self.kind {
            ScalingKind::Constant(c) => *c,
            ScalingKind::Callable { bound, .. } => *bound,
        }
    }

    /// `∬_{[x0,x1]×[0,t]} κ(x,y)^p · weight dx dy` for `p ∈ {1, 2}`.
    pub fn compensator(&self, weight: Weight, squared: bool, x0: f64, x1: f64, t: f64) -> f64 {
        if x1 <= x0 || t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            ScalingKind::Constant(c) => {
                let c = if squared { c * c } else { *c };
                c * constant_weight_integral(weight, x0, x1, t)
            }
            ScalingKind::Callable { f, cache, .. } => {
                let key = (weight.tag(), squared, x0.to_bits(), x1.to_bits(), t.to_bits());
                if let Some(v) = cache.map.read().expect("cache lock").get(&key) {
                    return *v;
                }
                let g = |x: f64, y: f64| {
                    let k = f(x, y);
                    let k = if squared { k * k } else { k };
                    k * weight.eval(x, y, x1, t)
                };
                let v = integrate_diagonal_split(g, (x0, x1), (0.0, t));
                cache.map.write().expect("cache lock").insert(key, v);
                v
            }
        }
    }

    /// `∬_{[0,s]×[0,t]} κ`.
    pub fn area_integral(&self, s: f64, t: f64) -> f64 {
        self.compensator(Weight::Unit, false, 0.0, s, t)
    }

    /// `∬_{[0,s]×[0,t]} κ²`.
    pub fn area_integral_squared(&self, s: f64, t: f64) -> f64 {
        self.compensator(Weight::Unit, true, 0.0, s, t)
    }
}

/// Closed forms of the compensator weights for `κ ≡ 1` over
/// `[x0, x1] × [0, t]`.
pub fn constant_weight_integral(weight: Weight, x0: f64, x1: f64, t: f64) -> f64 {
    match weight {
        Weight::Unit => (x1 - x0) * t,
        Weight::Forward => {
            // ∫_0^t (t - s∨y) dy = s(t - s) + (t - s)²/2 for s = x1 ≤ t.
            let s = x1;
            let dt = t - s;
            (x1 - x0) * (s * dt + 0.5 * dt * dt)
        }
        Weight::Horizon => {
            // ∫_0^t (t - x∨y) dy = (t² - x²)/2.
            0.5 * (t * t * (x1 - x0) - (x1.powi(3) - x0.powi(3)) / 3.0)
        }
    }
}

/// Tensor Gauss–Legendre over a rectangle, split so that no cell crosses
/// the diagonal `y = x` except the shared square, which is cut into two
/// triangles.
pub fn integrate_diagonal_split<F: Fn(f64, f64) -> f64>(g: F, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) -> f64 {
    let rule = GaussLegendre::order64();
    let a = x0.max(y0);
    let b = x1.min(y1);
    if a >= b {
        return rule.integrate_rect(&g, (x0, x1), (y0, y1));
    }
    let xs = [(x0, a), (a, b), (b, x1)];
    let ys = [(y0, a), (a, b), (b, y1)];
    let mut total = 0.0;
    for (i, &xr) in xs.iter().enumerate() {
        for (j, &yr) in ys.iter().enumerate() {
            if i == 1 && j == 1 {
                continue;
            }
            total += rule.integrate_rect(&g, xr, yr);
        }
    }
    // y ≤ x half, then x ≤ y half by symmetry of the collapsed map.
    total += rule.integrate_lower_triangle(&g, a, b);
    total += rule.integrate_lower_triangle(|u, v| g(v, u), a, b);
    total
}
