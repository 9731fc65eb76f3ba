//! Grid-sampled centered Gaussian fields `Y_{s,t}` with covariance
//! `Cov(Y_{s₁,t₁}, Y_{s₂,t₂}) = c(s₁ ∧ s₂, t₁, t₂)` and `c(0, ·, ·) = 0`.
//!
//! Such a field has independent Gaussian increments in `s`, so a path is
//! built row by row: `Y_{s_i,·} = Y_{s_{i-1},·} + L_i ξ` with
//! `L_i L_iᵀ = c(s_i, ·, ·) − c(s_{i-1}, ·, ·)`. Off-grid values are bilinear
//! and time integrals use the trapezoid rule, so mixed-model prices carry an
//! `O(Δ²)`-per-cell discretisation bias that the jump part does not have.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Rectangular lattice in `(s, t)` whose coordinates start at 0 and
/// increase strictly.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    s: Vec<f64>,
    t: Vec<f64>,
}

fn check_axis(name: &str, nodes: &[f64]) -> Result<()> {
    if nodes.len() < 2 {
        return Err(Error::InvalidGrid(format!("{name} axis needs at least two nodes")));
    }
    if nodes[0] != 0.0 {
        return Err(Error::InvalidGrid(format!(
            "{name} axis must start at 0, starts at {}",
            nodes[0]
        )));
    }
    if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0] && w[1].is_finite())) {
        return Err(Error::InvalidGrid(format!(
            "{name} axis is not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

impl Grid {
    pub fn new(s: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        check_axis("s", &s)?;
        check_axis("t", &t)?;
        Ok(Self { s, t })
    }

    /// `s_steps × t_steps` equal cells on `[0, s_max] × [0, t_max]`.
    pub fn uniform(s_max: f64, t_max: f64, s_steps: usize, t_steps: usize) -> Result<Self> {
        let axis = |max: f64, n: usize| -> Vec<f64> {
            (0..=n)
                .map(|k| if k == n { max } else { max * k as f64 / n as f64 })
                .collect()
        };
        if s_steps == 0 || t_steps == 0 {
            return Err(Error::InvalidGrid("grid needs at least one step per axis".into()));
        }
        Self::new(axis(s_max, s_steps), axis(t_max, t_steps))
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn s_max(&self) -> f64 {
        *self.s.last().expect("non-empty axis")
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().expect("non-empty axis")
    }
}

/// Cell index `i` and fraction `w ∈ [0, 1]` with
/// `x = nodes[i] + w (nodes[i+1] − nodes[i])`; `None` outside the axis.
fn locate(nodes: &[f64], x: f64) -> Option<(usize, f64)> {
    let last = *nodes.last()?;
    if !(x >= nodes[0] && x <= last) {
        return None;
    }
    let i = nodes
        .partition_point(|&n| n <= x)
        .saturating_sub(1)
        .min(nodes.len() - 2);
    let w = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
    Some((i, w.clamp(0.0, 1.0)))
}

fn out_of_lattice(s: f64, t: f64, what: &str) -> Error {
    Error::OutOfDomain {
        s,
        t,
        reason: format!("{what} queried outside its lattice"),
    }
}

/// Covariance `c(s, t₁, t₂)` tabulated on a lattice and validated as a
/// legitimate independent-increment covariance.
#[derive(Debug, Clone)]
pub struct UserGridCovariance {
    grid: Arc<Grid>,
    values: Vec<f64>,
    factors: Vec<DMatrix<f64>>,
}

impl UserGridCovariance {
    /// `values[i][j][k] = c(s_i, t_j, t_k)`.
    pub fn new(s_nodes: Vec<f64>, t_nodes: Vec<f64>, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let grid = Grid::new(s_nodes, t_nodes)?;
        let (ns, nt) = (grid.s.len(), grid.t.len());
        if values.len() != ns || values.iter().any(|m| m.len() != nt || m.iter().any(|r| r.len() != nt)) {
            return Err(Error::InvalidGrid(format!(
                "covariance table must be {ns} x {nt} x {nt} to match the lattice"
            )));
        }
        let flat: Vec<f64> = values.into_iter().flatten().flatten().collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("covariance table contains non-finite values".into()));
        }
        let at = |i: usize, j: usize, k: usize| flat[(i * nt + j) * nt + k];
        if (0..nt).any(|j| (0..nt).any(|k| at(0, j, k) != 0.0)) {
            return Err(Error::NotPositiveSemidefinite(
                "c(0, t1, t2) must vanish identically".into(),
            ));
        }
        let scale = flat.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut factors = Vec::with_capacity(ns - 1);
        for i in 1..ns {
            let inc = DMatrix::from_fn(nt, nt, |j, k| at(i, j, k) - at(i - 1, j, k));
            for j in 0..nt {
                for k in 0..j {
                    if (inc[(j, k)] - inc[(k, j)]).abs() > 1e-12 * scale {
                        return Err(Error::NotPositiveSemidefinite(format!(
                            "covariance is not symmetric in (t1, t2) at s = {}",
                            grid.s[i]
                        )));
                    }
                }
            }
            let sym = (&inc + inc.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -1e-10 * scale {
                return Err(Error::NotPositiveSemidefinite(format!(
                    "increment between s = {} and s = {} has eigenvalue {min}",
                    grid.s[i - 1],
                    grid.s[i]
                )));
            }
            let roots = DVector::from_iterator(nt, eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()));
            factors.push(eig.eigenvectors * DMatrix::from_diagonal(&roots));
        }
        Ok(Self {
            grid: Arc::new(grid),
            values: flat,
            factors,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Trilinear interpolation of `c(s, t₁, t₂)`.
    pub fn eval(&self, s: f64, t1: f64, t2: f64) -> Result<f64> {
        let nt = self.grid.t.len();
        let (i, ws) = locate(&self.grid.s, s).ok_or_else(|| out_of_lattice(s, t1, "user-grid covariance"))?;
        let (j, wj) = locate(&self.grid.t, t1).ok_or_else(|| out_of_lattice(s, t1, "user-grid covariance"))?;
        let (k, wk) = locate(&self.grid.t, t2).ok_or_else(|| out_of_lattice(s, t2, "user-grid covariance"))?;
        let at = |a: usize, b: usize, c: usize| self.values[(a * nt + b) * nt + c];
        let plane = |a: usize| {
            let lo = at(a, j, k) * (1.0 - wk) + at(a, j, k + 1) * wk;
            let hi = at(a, j + 1, k) * (1.0 - wk) + at(a, j + 1, k + 1) * wk;
            lo * (1.0 - wj) + hi * wj
        };
        Ok(plane(i) * (1.0 - ws) + plane(i + 1) * ws)
    }

    pub fn simulate<R: Rng + ?Sized>(self: &Arc<Self>, rng: &mut R) -> GaussianRealization {
        let (ns, nt) = (self.grid.s.len(), self.grid.t.len());
        let mut values = vec![0.0; ns * nt];
        let mut xi = DVector::zeros(nt);
        for i in 1..ns {
            for v in xi.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let step = &self.factors[i - 1] * &xi;
            for j in 0..nt {
                values[i * nt + j] = values[(i - 1) * nt + j] + step[j];
            }
        }
        GaussianRealization {
            grid: Arc::clone(&self.grid),
            values,
            source: GaussianSource::UserGrid,
        }
    }
}

/// Which covariance generated a [`GaussianRealization`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianSource {
    BrownianSheet,
    UserGrid,
}

/// One grid path of `Y`.
#[derive(Debug, Clone)]
pub struct GaussianRealization {
    grid: Arc<Grid>,
    values: Vec<f64>,
    source: GaussianSource,
}

/// Brownian sheet on `grid`: independent `N(0, Δs Δt)` cell increments,
/// cumulatively summed so `Y` vanishes on both axes.
pub fn simulate_brownian_sheet<R: Rng + ?Sized>(grid: &Arc<Grid>, rng: &mut R) -> GaussianRealization {
    let (ns, nt) = (grid.s.len(), grid.t.len());
    let mut values = vec![0.0; ns * nt];
    for i in 1..ns {
        let ds = grid.s[i] - grid.s[i - 1];
        let mut column = 0.0;
        for j in 1..nt {
            let dt = grid.t[j] - grid.t[j - 1];
            let z: f64 = rng.sample(StandardNormal);
            column += (ds * dt).sqrt() * z;
            values[i * nt + j] = values[(i - 1) * nt + j] + column;
        }
    }
    GaussianRealization {
        grid: Arc::clone(grid),
        values,
        source: GaussianSource::BrownianSheet,
    }
}

impl GaussianRealization {
    /// Wraps node values stored row-major, `values[i * t_len + j] = Y(s_i, t_j)`.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>, source: GaussianSource) -> Result<Self> {
        let expected = grid.s.len() * grid.t.len();
        if values.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "expected {expected} node values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
            source,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn source(&self) -> GaussianSource {
        self.source
    }

    /// Value at grid node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.t.len() + j]
    }

    /// Bilinear interpolation of `Y_{s,t}`.
    pub fn eval_y(&self, s: f64, t: f64) -> Result<f64> {
        let (i, ws) = locate(&self.grid.s, s).ok_or_else(|| out_of_lattice(s, t, "Gaussian field"))?;
        let (j, wt) = locate(&self.grid.t, t).ok_or_else(|| out_of_lattice(s, t, "Gaussian field"))?;
        Ok(self.bilinear(i, ws, j, wt))
    }

    #[inline]
    fn bilinear(&self, i: usize, ws: f64, j: usize, wt: f64) -> f64 {
        let lo = self.node(i, j) * (1.0 - wt) + self.node(i, j + 1) * wt;
        let hi = self.node(i + 1, j) * (1.0 - wt) + self.node(i + 1, j + 1) * wt;
        lo * (1.0 - ws) + hi * ws
    }

    /// `∫_a^b Y_{s,u} du`, trapezoid on the `t` nodes (exact for the
    /// bilinear interpolant).
    pub fn row_integral(&self, s: f64, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::OutOfDomain {
                s: a,
                t: b,
                reason: "row integral requires a <= b".into(),
            });
        }
        let (i, ws) = locate(&self.grid.s, s).ok_or_else(|| out_of_lattice(s, a, "Gaussian field"))?;
        if locate(&self.grid.t, a).is_none() || locate(&self.grid.t, b).is_none() {
            return Err(out_of_lattice(s, b, "Gaussian field"));
        }
        let row = |u: f64| {
            let (j, wt) = locate(&self.grid.t, u).expect("checked range");
            self.bilinear(i, ws, j, wt)
        };
        Ok(trapezoid(row, breakpoints(a, b, &self.grid.t, &[])))
    }

    /// `∫_a^b Y_{u,u} du`, trapezoid on the union of both axes' nodes.
    pub fn diag_integral(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::OutOfDomain {
                s: a,
                t: b,
                reason: "diagonal integral requires a <= b".into(),
            });
        }
        if locate(&self.grid.s, b).is_none() || locate(&self.grid.t, b).is_none() || a < 0.0 {
            return Err(out_of_lattice(b, b, "Gaussian field"));
        }
        let diag = |u: f64| {
            let (i, ws) = locate(&self.grid.s, u).expect("checked range");
            let (j, wt) = locate(&self.grid.t, u).expect("checked range");
            self.bilinear(i, ws, j, wt)
        };
        Ok(trapezoid(diag, breakpoints(a, b, &self.grid.s, &self.grid.t)))
    }

    /// `∫_s^t Y_{s,u} du`.
    pub fn integral_forward(&self, s: f64, t: f64) -> Result<f64> {
        self.row_integral(s, s, t)
    }

    /// `∫_0^s Y_{u,u} du`.
    pub fn integral_spot(&self, s: f64) -> Result<f64> {
        self.diag_integral(0.0, s)
    }

    /// `∫_{s₁}^t (Y_{s₁,u} − Y_{s₂,u}) du + ∫_{s₂}^{s₁} (Y_{u,u} − Y_{s₂,u}) du`.
    pub fn integral_strip(&self, s2: f64, s1: f64, t: f64) -> Result<f64> {
        if !(s2 <= s1 && s1 <= t) {
            return Err(Error::OutOfDomain {
                s: s1,
                t,
                reason: format!("strip integral requires s2 <= s1 <= t, got s2 = {s2}"),
            });
        }
        Ok(self.row_integral(s1, s1, t)? + self.diag_integral(s2, s1)? - self.row_integral(s2, s2, t)?)
    }
}

fn breakpoints(a: f64, b: f64, first: &[f64], second: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(first.iter().chain(second).copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn trapezoid<F: Fn(f64) -> f64>(f: F, pts: Vec<f64>) -> f64 {
    let mut prev = match pts.first() {
        Some(&p) => (p, f(p)),
        None => return 0.0,
    };
    let mut sum = 0.0;
    for &x in &pts[1..] {
        let fx = f(x);
        sum += 0.5 * (x - prev.0) * (fx + prev.1);
        prev = (x, fx);
    }
    sum
}
