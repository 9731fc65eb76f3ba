//! Jump-size sampling from a Levy measure restricted to `(ε, ∞)`.
//!
//! Continuous measures use a tabulated inverse survival function: knots are
//! laid out uniformly in `w = ln τ`, the survival `G(τ) = σ((τ, ∞)) / σ((ε, ∞))`
//! is recorded as `q = -ln G`, and `w(q)` is interpolated with a monotone
//! cubic. Working with the survival keeps full relative precision in the tail.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{LevyMeasure, MeasureKind, UserDensity};
use crate::error::{Error, Result};
use crate::numeric::interp::MonotoneCubic;
use crate::numeric::quadrature::{Adaptive, SIGMA_TOL};
use crate::numeric::special::exp_integral_e1;

const TABLE_KNOTS: usize = 4096;
const GAMMA_TABLE_TOP: f64 = 40.0;
const REJECTION_CAP: usize = 10_000;
const NEGLIGIBLE_SURVIVAL: f64 = 1e-15;

#[derive(Debug, Clone)]
enum Tail {
    /// Exact rejection from the shifted exponential envelope `e^{-(τ - start)}`
    /// for the gamma density `e^{-τ}/τ` on `(start, ∞)`.
    GammaExact { start: f64 },
    /// Remaining mass is below `NEGLIGIBLE_SURVIVAL`; map it onto the last knot.
    Clamp { at: f64 },
}

#[derive(Debug, Clone)]
enum Kind {
    Constant(f64),
    Table {
        inverse: MonotoneCubic,
        q_last: f64,
        floor: f64,
        tail: Tail,
    },
    TailOnly(Tail),
}

/// Draws i.i.d. jump sizes `τ > ε` with law `σ|_{(ε,∞)} / σ((ε,∞))`.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    kind: Kind,
    eps: f64,
}

impl JumpSampler {
    pub fn new(measure: &LevyMeasure, eps: f64) -> Result<Self> {
        let intensity = measure.truncated_intensity(eps)?;
        if intensity.is_nan() || intensity <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "trunc_eps",
                reason: format!("no jump mass above truncation level {eps}"),
            });
        }
        let kind = match measure.kind() {
            MeasureKind::Zero => unreachable!("zero measure has no mass"),
            MeasureKind::PointMass { location, .. } => Kind::Constant(*location),
            MeasureKind::Gamma { .. } => gamma_table(eps),
            MeasureKind::User(u) => user_table(u, eps)?,
        };
        Ok(Self { kind, eps })
    }

    pub fn trunc_eps(&self) -> f64 {
        self.eps
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.kind {
            Kind::Constant(a) => Ok(*a),
            Kind::TailOnly(tail) => sample_tail(tail, rng),
            Kind::Table {
                inverse,
                q_last,
                floor,
                tail,
            } => {
                // Survival level in (0, 1].
                let survival = 1.0 - rng.random::<f64>();
                let q = -survival.ln();
                if q <= *q_last {
                    Ok(inverse.eval(q).exp().max(*floor))
                } else {
                    sample_tail(tail, rng)
                }
            }
        }
    }
}

fn sample_tail<R: Rng + ?Sized>(tail: &Tail, rng: &mut R) -> Result<f64> {
    match *tail {
        Tail::Clamp { at } => Ok(at),
        Tail::GammaExact { start } => {
            for _ in 0..REJECTION_CAP {
                let e: f64 = Exp1.sample(rng);
                let tau = start + e;
                if rng.random::<f64>() * tau <= start {
                    return Ok(tau);
                }
            }
            Err(Error::RejectionCap(REJECTION_CAP))
        }
    }
}

fn gamma_table(eps: f64) -> Kind {
    // Above ~20 the shifted-exponential envelope accepts >95% of proposals.
    if eps >= 20.0 {
        return Kind::TailOnly(Tail::GammaExact { start: eps });
    }
    let total = exp_integral_e1(eps);
    let (w0, w1) = (eps.ln(), GAMMA_TABLE_TOP.ln());
    let mut qs = Vec::with_capacity(TABLE_KNOTS);
    let mut ws = Vec::with_capacity(TABLE_KNOTS);
    for k in 0..TABLE_KNOTS {
        let w = if k == 0 {
            w0
        } else {
            w0 + (w1 - w0) * k as f64 / (TABLE_KNOTS - 1) as f64
        };
        let tau = if k == 0 { eps } else { w.exp() };
        let q = -(exp_integral_e1(tau) / total).ln();
        push_knot(&mut qs, &mut ws, q.max(0.0), w);
    }
    let q_last = *qs.last().expect("table has knots");
    Kind::Table {
        inverse: MonotoneCubic::new(qs, ws).expect("gamma survival is strictly monotone"),
        q_last,
        floor: eps.next_up(),
        tail: Tail::GammaExact { start: GAMMA_TABLE_TOP },
    }
}

fn push_knot(qs: &mut Vec<f64>, ws: &mut Vec<f64>, q: f64, w: f64) {
    if qs.last().is_none_or(|&last| q > last) {
        qs.push(q);
        ws.push(w);
    }
}

fn user_table(u: &UserDensity, eps: f64) -> Result<Kind> {
    let quad = Adaptive::new(SIGMA_TOL);
    let top = match u.support_max() {
        Some(m) => m,
        None => {
            // Double until the remaining mass is negligible.
            let total = u.integrate(|_| 1.0, eps, None).value;
            let mut top = (2.0 * eps).max(1.0);
            while u.integrate(|_| 1.0, top, None).value > NEGLIGIBLE_SURVIVAL * total && top < 1e12 {
                top *= 2.0;
            }
            top
        }
    };
    if top <= eps {
        return Err(Error::InvalidParameter {
            name: "trunc_eps",
            reason: format!("truncation level {eps} at or above the density support {top}"),
        });
    }
    let bottom = if eps > 0.0 { eps } else { 1e-12 * top.min(1.0) };
    let (w0, w1) = (bottom.ln(), top.ln());
    let taus: Vec<f64> = (0..TABLE_KNOTS)
        .map(|k| match k {
            0 => bottom,
            k if k == TABLE_KNOTS - 1 => top,
            k => (w0 + (w1 - w0) * k as f64 / (TABLE_KNOTS - 1) as f64).exp(),
        })
        .collect();
    // Segment masses, then suffix sums for the survival.
    let mut masses: Vec<f64> = taus
        .windows(2)
        .map(|w| quad.integrate(|t| u.eval(t), w[0], w[1]).value.max(0.0))
        .collect();
    if eps == 0.0 {
        // Mass below the first knot is lumped into the first segment.
        masses[0] += quad.integrate(|t| u.eval(t), 0.0, bottom).value.max(0.0);
    }
    let mut survival = vec![0.0; TABLE_KNOTS];
    for k in (0..TABLE_KNOTS - 1).rev() {
        survival[k] = survival[k + 1] + masses[k];
    }
    let total = survival[0];
    if total.is_nan() || total <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "trunc_eps",
            reason: format!("density `{}` has no mass above {eps}", u.label()),
        });
    }
    let mut qs = Vec::new();
    let mut ws = Vec::new();
    for (tau, g) in taus.iter().zip(&survival) {
        let g = g / total;
        if g <= NEGLIGIBLE_SURVIVAL {
            break;
        }
        push_knot(&mut qs, &mut ws, -g.ln(), tau.ln());
    }
    if qs.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "density",
            reason: "jump density too concentrated to tabulate".into(),
        });
    }
    let q_last = *qs.last().expect("checked above");
    let last_tau = ws.last().expect("checked above").exp();
    Ok(Kind::Table {
        inverse: MonotoneCubic::new(qs, ws).expect("knots strictly increasing"),
        q_last,
        floor: if eps > 0.0 { eps.next_up() } else { f64::MIN_POSITIVE },
        tail: Tail::Clamp { at: last_tau },
    })
}
