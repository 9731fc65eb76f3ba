//! Compensated jump sheet in its atomic representation.
//!
//! A realization is a finite set of atoms `(x_n, y_n, τ_n)` together with
//! the compensator mean `m_ε = ∫_{(ε,∞)} τ σ(dτ)`:
//!
//! ```text
//! X_{s,t} = Σ_{x_n ≤ s, y_n ≤ t} τ_n κ(x_n, y_n) − m_ε ∬_{[0,s]×[0,t]} κ
//! ```
//!
//! Every time integral the pricing layer needs is again a pairing of the
//! atomic measure with a weight on a rectangle, so it is evaluated exactly
//! per path.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::scaling::{ScalingFunction, Weight};
use crate::error::{Error, Result};
use crate::levy_measure::{JumpSampler, LevyMeasure};

/// Expected-atom ceiling per realization.
pub const MAX_EXPECTED_ATOMS: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub y: f64,
    pub tau: f64,
}

/// Rectangle `[0, S] × [0, T]` on which a sheet is simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub s_max: f64,
    pub t_max: f64,
}

impl Domain {
    pub fn new(s_max: f64, t_max: f64) -> Result<Self> {
        if !(s_max.is_finite() && s_max > 0.0 && t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!("horizon must be positive, got ({s_max}, {t_max})"),
            });
        }
        Ok(Self { s_max, t_max })
    }

    pub fn area(&self) -> f64 {
        self.s_max * self.t_max
    }

    fn check(&self, s: f64, t: f64) -> Result<()> {
        let inside = (0.0..=self.s_max).contains(&s) && (0.0..=self.t_max).contains(&t);
        if inside {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                s,
                t,
                reason: format!("domain is [0, {}] x [0, {}]", self.s_max, self.t_max),
            })
        }
    }
}

/// One sample path of the truncated, compensated jump sheet.
#[derive(Debug, Clone)]
pub struct SheetRealization {
    atoms: Vec<Atom>,
    domain: Domain,
    trunc_eps: f64,
    comp_mean: f64,
    kappa: ScalingFunction,
}

fn canonical_order(a: &Atom, b: &Atom) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.tau.total_cmp(&b.tau))
}

impl SheetRealization {
    /// Builds a realization from explicit atoms (sorted on entry).
    pub fn from_atoms(
        mut atoms: Vec<Atom>,
        domain: Domain,
        trunc_eps: f64,
        comp_mean: f64,
        kappa: ScalingFunction,
    ) -> Result<Self> {
        for a in &atoms {
            domain.check(a.x, a.y)?;
            if !(a.tau > trunc_eps && a.tau.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "atoms",
                    reason: format!("jump size {} not above truncation level {trunc_eps}", a.tau),
                });
            }
        }
        atoms.sort_by(canonical_order);
        Ok(Self {
            atoms,
            domain,
            trunc_eps,
            comp_mean,
            kappa,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn trunc_eps(&self) -> f64 {
        self.trunc_eps
    }

    pub fn comp_mean(&self) -> f64 {
        self.comp_mean
    }

    pub fn kappa(&self) -> &ScalingFunction {
        &self.kappa
    }

    /// `Σ τ_n κ_n w(x_n, y_n)` over atoms in `(x0, x1] × [0, t]`
    /// (`[0, x1]` when `x0 = 0`).
    fn atom_sum<W: Fn(&Atom) -> f64>(&self, x0: f64, x1: f64, t: f64, weight: W) -> f64 {
        let start = if x0 > 0.0 {
            self.atoms.partition_point(|a| a.x <= x0)
        } else {
            0
        };
        let mut sum = 0.0;
        for a in self.atoms[start..].iter().take_while(|a| a.x <= x1) {
            if a.y <= t {
                sum += a.tau * self.kappa.eval(a.x, a.y) * weight(a);
            }
        }
        sum
    }

    fn compensator(&self, weight: Weight, x0: f64, x1: f64, t: f64) -> f64 {
        if self.comp_mean == 0.0 {
            return 0.0;
        }
        self.comp_mean * self.kappa.compensator(weight, false, x0, x1, t)
    }

    /// `X_{s,t}`.
    pub fn eval_x(&self, s: f64, t: f64) -> Result<f64> {
        self.domain.check(s, t)?;
        Ok(self.atom_sum(0.0, s, t, |_| 1.0) - self.compensator(Weight::Unit, 0.0, s, t))
    }

    /// `X_{s₂,t} − X_{s₁,t}` for `s₁ ≤ s₂`.
    pub fn strip_x(&self, s1: f64, s2: f64, t: f64) -> Result<f64> {
        self.domain.check(s2, t)?;
        self.domain.check(s1, t)?;
        Ok(self.atom_sum(s1, s2, t, |_| 1.0) - self.compensator(Weight::Unit, s1, s2, t))
    }

    /// `∫_s^t X_{s,u} du = ⟨ω, 1_{[0,s]}(x) 1_{[0,t]}(y) κ (t − s∨y)⟩`.
    pub fn integral_forward(&self, s: f64, t: f64) -> Result<f64> {
        if s > t {
            return Err(Error::OutOfDomain {
                s,
                t,
                reason: "forward integral requires s <= t".into(),
            });
        }
        self.domain.check(s, t)?;
        let jumps = self.atom_sum(0.0, s, t, |a| t - s.max(a.y));
        Ok(jumps - self.compensator(Weight::Forward, 0.0, s, t))
    }

    /// `∫_0^s X_{u,u} du = ⟨ω, 1_{[0,s]²} κ (s − x∨y)⟩`.
    pub fn integral_spot(&self, s: f64) -> Result<f64> {
        self.domain.check(s, s)?;
        let jumps = self.atom_sum(0.0, s, s, |a| s - a.x.max(a.y));
        Ok(jumps - self.compensator(Weight::Horizon, 0.0, s, s))
    }

    /// `⟨ω, 1_{[s₂,s₁]}(x) 1_{[0,t]}(y) κ (t − x∨y)⟩`, which equals
    /// `∫_{s₁}^t (X_{s₁,u} − X_{s₂,u}) du + ∫_{s₂}^{s₁} (X_{u,u} − X_{s₂,u}) du`.
    /// With `s₂ = 0, s₁ = s` it is the jump part of `−ln Z_{s,t}`.
    pub fn integral_strip(&self, s2: f64, s1: f64, t: f64) -> Result<f64> {
        if !(s2 <= s1 && s1 <= t) {
            return Err(Error::OutOfDomain {
                s: s1,
                t,
                reason: format!("strip integral requires s2 <= s1 <= t, got s2 = {s2}"),
            });
        }
        self.domain.check(s1, t)?;
        self.domain.check(s2, t)?;
        let jumps = self.atom_sum(s2, s1, t, |a| t - a.x.max(a.y));
        Ok(jumps - self.compensator(Weight::Horizon, s2, s1, t))
    }
}

/// Reusable generator of sheet realizations for fixed measure, scaling,
/// domain and truncation level.
#[derive(Debug, Clone)]
pub struct SheetSimulator {
    sampler: Option<JumpSampler>,
    expected_atoms: f64,
    domain: Domain,
    trunc_eps: f64,
    comp_mean: f64,
    kappa: ScalingFunction,
}

impl SheetSimulator {
    pub fn new(measure: &LevyMeasure, kappa: ScalingFunction, domain: Domain, eps: f64) -> Result<Self> {
        let intensity = measure.truncated_intensity(eps)?;
        let expected_atoms = intensity * domain.area();
        if expected_atoms.is_nan() || expected_atoms > MAX_EXPECTED_ATOMS {
            return Err(Error::TooManyAtoms {
                eps,
                expected: expected_atoms,
                limit: MAX_EXPECTED_ATOMS,
            });
        }
        let sampler = if intensity > 0.0 {
            Some(measure.sampler(eps)?)
        } else {
            None
        };
        Ok(Self {
            sampler,
            expected_atoms,
            domain,
            trunc_eps: eps,
            comp_mean: measure.truncated_mean(eps)?,
            kappa,
        })
    }

    pub fn expected_atoms(&self) -> f64 {
        self.expected_atoms
    }

    pub fn comp_mean(&self) -> f64 {
        self.comp_mean
    }

    pub fn trunc_eps(&self) -> f64 {
        self.trunc_eps
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SheetRealization> {
        let mut atoms = Vec::new();
        if let Some(sampler) = &self.sampler {
            let count = Poisson::new(self.expected_atoms)
                .map_err(|e| Error::InvalidParameter {
                    name: "intensity",
                    reason: e.to_string(),
                })?
                .sample(rng) as usize;
            atoms.reserve(count);
            for _ in 0..count {
                let x = self.domain.s_max * rng.random::<f64>();
                let y = self.domain.t_max * rng.random::<f64>();
                let tau = sampler.sample(rng)?;
                atoms.push(Atom { x, y, tau });
            }
        }
        atoms.sort_by(canonical_order);
        Ok(SheetRealization {
            atoms,
            domain: self.domain,
            trunc_eps: self.trunc_eps,
            comp_mean: self.comp_mean,
            kappa: self.kappa.clone(),
        })
    }
}

/// One-shot simulation; prefer [`SheetSimulator`] for repeated draws.
pub fn simulate_sheet<R: Rng + ?Sized>(
    measure: &LevyMeasure,
    kappa: &ScalingFunction,
    domain: Domain,
    eps: f64,
    rng: &mut R,
) -> Result<SheetRealization> {
    SheetSimulator::new(measure, kappa.clone(), domain, eps)?.simulate(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_atoms(comp_mean: f64) -> SheetRealization {
        SheetRealization::from_atoms(
            vec![
                Atom {
                    x: 0.8,
                    y: 1.5,
                    tau: 1.0,
                },
                Atom {
                    x: 0.5,
                    y: 0.3,
                    tau: 1.0,
                },
            ],
            Domain::new(2.0, 2.0).unwrap(),
            0.0,
            comp_mean,
            ScalingFunction::unit(),
        )
        .unwrap()
    }

    #[test]
    fn eval_x_hand_examples() {
        let r = two_atoms(1.0);
        assert!((r.eval_x(0.6, 1.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(r.eval_x(0.0, 1.7).unwrap(), 0.0);
        assert!(r.eval_x(1.0, 2.0).unwrap().abs() < 1e-15);
        assert!(matches!(r.eval_x(2.5, 1.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn atoms_are_sorted() {
        let r = two_atoms(1.0);
        assert_eq!(r.atoms()[0].x, 0.5);
    }

    #[test]
    fn forward_integral_examples() {
        let empty = SheetRealization::from_atoms(
            vec![],
            Domain::new(2.0, 2.0).unwrap(),
            0.0,
            1.0,
            ScalingFunction::unit(),
        )
        .unwrap();
        assert!((empty.integral_forward(1.0, 2.0).unwrap() + 1.5).abs() < 1e-15);
        assert_eq!(two_atoms(1.0).integral_forward(1.3, 1.3).unwrap(), 0.0);
        let single = SheetRealization::from_atoms(
            vec![Atom {
                x: 0.5,
                y: 0.3,
                tau: 2.0,
            }],
            Domain::new(2.0, 2.0).unwrap(),
            0.0,
            0.0,
            ScalingFunction::unit(),
        )
        .unwrap();
        assert!((single.integral_forward(1.0, 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(single.integral_forward(1.5, 1.0).is_err());
    }

    #[test]
    fn spot_integral_examples() {
        let empty = SheetRealization::from_atoms(
            vec![],
            Domain::new(2.0, 2.0).unwrap(),
            0.0,
            1.0,
            ScalingFunction::unit(),
        )
        .unwrap();
        assert!((empty.integral_spot(1.0).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(empty.integral_spot(0.0).unwrap(), 0.0);
        let single = SheetRealization::from_atoms(
            vec![Atom {
                x: 0.2,
                y: 0.4,
                tau: 1.0,
            }],
            Domain::new(2.0, 2.0).unwrap(),
            0.0,
            0.0,
            ScalingFunction::unit(),
        )
        .unwrap();
        assert!((single.integral_spot(1.0).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn strip_from_zero_is_forward_plus_spot() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = LevyMeasure::gamma(1.0).unwrap();
        for _ in 0..20 {
            let r = simulate_sheet(
                &m,
                &ScalingFunction::unit(),
                Domain::new(2.0, 2.0).unwrap(),
                0.05,
                &mut rng,
            )
            .unwrap();
            let (s, t) = (0.7, 1.9);
            let lhs = r.integral_strip(0.0, s, t).unwrap();
            let rhs = r.integral_forward(s, t).unwrap() + r.integral_spot(s).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn point_mass_sheet_has_unit_jumps() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = LevyMeasure::poisson(1.0).unwrap();
        let r = simulate_sheet(
            &m,
            &ScalingFunction::unit(),
            Domain::new(2.0, 2.0).unwrap(),
            0.0,
            &mut rng,
        )
        .unwrap();
        assert!(r.atoms().iter().all(|a| a.tau == 1.0 && a.x <= 2.0 && a.y <= 2.0));
        assert_eq!(r.comp_mean(), 1.0);
    }

    #[test]
    fn vanishing_intensity_gives_empty_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = LevyMeasure::poisson(1e-12).unwrap();
        let sim = SheetSimulator::new(&m, ScalingFunction::unit(), Domain::new(2.0, 2.0).unwrap(), 0.0).unwrap();
        assert!((0..1000).all(|_| sim.simulate(&mut rng).unwrap().atoms().is_empty()));
    }

    #[test]
    fn too_small_truncation_is_refused() {
        let m = LevyMeasure::gamma(1e9).unwrap();
        let err = SheetSimulator::new(&m, ScalingFunction::unit(), Domain::new(2.0, 2.0).unwrap(), 0.1).unwrap_err();
        assert!(matches!(err, Error::TooManyAtoms { .. }));
    }
}
