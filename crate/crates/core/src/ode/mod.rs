//! Complex matrix ODE integration for the pencil equation, its left
//! analogue, and the transport Cauchy problems.

pub mod dopri5;
mod systems;
mod transport;

pub use transport::{solve_transport, MatFunction, TransportFamily, TransportKind};

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermite_eval, hermite_eval_deriv, mat_norm, CMatrix};
use crate::pencil::Pencil;
use dopri5::{march, Flipped, StepControl};
use systems::{pack_state, unpack_state, LeftPencilRhs, RightPencilRhs};

/// Integrator knobs. The step cap c/(1 + |rho|) keeps the oscillation
/// e^{+-i rho x} resolved across the asymptotic sweep.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationSettings {
    pub rtol: f64,
    pub atol: f64,
    pub step_cap_coeff: f64,
    pub grid_points: usize,
    pub max_steps: usize,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            step_cap_coeff: 0.5,
            grid_points: 200,
            max_steps: 2_000_000,
        }
    }
}

impl IntegrationSettings {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn with_atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    pub fn with_grid_points(mut self, n: usize) -> Self {
        self.grid_points = n.max(2);
        self
    }

    pub fn max_step_for(&self, rho: Complex64) -> f64 {
        self.step_cap_coeff / (1.0 + rho.norm())
    }

    pub(crate) fn control_for(&self, rho: Complex64) -> StepControl {
        StepControl {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step_for(rho),
            max_steps: self.max_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rtol <= 0.0 || self.atol <= 0.0 || self.step_cap_coeff <= 0.0 {
            return Err(Error::Config(
                "tolerances and step cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Which equation a trajectory solves: the pencil equation acting on column
/// solutions (right) or the adjoint-side equation on row solutions (left).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// A matrix solution sampled on an increasing grid, with its x-derivative.
#[derive(Debug, Clone)]
pub struct Trajectory {
    rho: Complex64,
    side: Side,
    direction: Direction,
    grid: Vec<f64>,
    values: Vec<CMatrix>,
    derivs: Vec<CMatrix>,
}

impl Trajectory {
    /// Assembles a trajectory from precomputed samples (used when solutions
    /// are superposed algebraically rather than integrated).
    pub fn from_parts(
        rho: Complex64,
        side: Side,
        direction: Direction,
        grid: Vec<f64>,
        values: Vec<CMatrix>,
        derivs: Vec<CMatrix>,
    ) -> Self {
        assert_eq!(grid.len(), values.len());
        assert_eq!(grid.len(), derivs.len());
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
        Self {
            rho,
            side,
            direction,
            grid,
            values,
            derivs,
        }
    }

    pub fn rho(&self) -> Complex64 {
        self.rho
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    pub fn derivs(&self) -> &[CMatrix] {
        &self.derivs
    }

    pub fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    fn node_index(&self, x: f64) -> Result<usize> {
        let i = self
            .grid
            .binary_search_by(|g| g.partial_cmp(&x).unwrap())
            .unwrap_or_else(|i| i);
        for cand in [i.saturating_sub(1), i, (i + 1).min(self.grid.len() - 1)] {
            if (self.grid[cand] - x).abs() <= 1e-9 {
                return Ok(cand);
            }
        }
        Err(Error::NotAGridNode { x })
    }

    /// Value and derivative at a grid node (no interpolation).
    pub fn at(&self, x: f64) -> Result<(&CMatrix, &CMatrix)> {
        let i = self.node_index(x)?;
        Ok((&self.values[i], &self.derivs[i]))
    }

    pub fn first(&self) -> (&CMatrix, &CMatrix) {
        (&self.values[0], &self.derivs[0])
    }

    pub fn last(&self) -> (&CMatrix, &CMatrix) {
        let n = self.grid.len() - 1;
        (&self.values[n], &self.derivs[n])
    }

    /// Cubic Hermite evaluation between nodes. The value is O(h^4) accurate;
    /// the derivative O(h^3).
    pub fn eval(&self, x: f64) -> (CMatrix, CMatrix) {
        (
            hermite_eval(&self.grid, &self.values, &self.derivs, x),
            hermite_eval_deriv(&self.grid, &self.values, &self.derivs, x),
        )
    }
}

fn check_interval(from: f64, to: f64) -> Result<()> {
    for &x in &[from, to] {
        if !(-1e-12..=PI + 1e-12).contains(&x) {
            return Err(Error::OutOfDomain { x });
        }
    }
    if from == to {
        return Err(Error::Config("integration endpoints must differ".into()));
    }
    Ok(())
}

fn uniform_nodes(from: f64, to: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Solves the pencil equation (right: Y'' = -A(x) Y, left: Z'' = -Z A(x))
/// with initial data (w0, w0p) at `from`, reporting values on a uniform grid.
#[allow(clippy::too_many_arguments)]
pub fn integrate_pencil_ode(
    side: Side,
    p: &Pencil,
    rho: Complex64,
    w0: &CMatrix,
    w0p: &CMatrix,
    from: f64,
    to: f64,
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    let nodes = uniform_nodes(from, to, s.grid_points);
    integrate_pencil_ode_on(side, p, rho, w0, w0p, &nodes, s)
}

/// Same as [`integrate_pencil_ode`] with explicit output nodes (monotone,
/// first node is the initial point).
pub fn integrate_pencil_ode_on(
    side: Side,
    p: &Pencil,
    rho: Complex64,
    w0: &CMatrix,
    w0p: &CMatrix,
    nodes: &[f64],
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    p.ensure_valid()?;
    s.validate()?;
    if nodes.len() < 2 {
        return Err(Error::Config("need at least two output nodes".into()));
    }
    check_interval(nodes[0], nodes[nodes.len() - 1])?;
    let m = p.dim();
    crate::linalg::require_square(w0, m)?;
    crate::linalg::require_square(w0p, m)?;

    let y0 = pack_state(w0, w0p);
    let ctl = s.control_for(rho);
    let descending = nodes[0] > nodes[nodes.len() - 1];

    let states = match (side, descending) {
        (Side::Right, false) => march(&RightPencilRhs { pencil: p, rho }, &y0, nodes, &ctl)?,
        (Side::Left, false) => march(&LeftPencilRhs { pencil: p, rho }, &y0, nodes, &ctl)?,
        (side, true) => {
            let neg: Vec<f64> = nodes.iter().map(|&x| -x).collect();
            let mut states = match side {
                Side::Right => {
                    let rhs = RightPencilRhs { pencil: p, rho };
                    march(&Flipped(&rhs), &y0, &neg, &ctl)?
                }
                Side::Left => {
                    let rhs = LeftPencilRhs { pencil: p, rho };
                    march(&Flipped(&rhs), &y0, &neg, &ctl)?
                }
            };
            states.reverse();
            states
        }
    };

    let mut grid: Vec<f64> = nodes.to_vec();
    if descending {
        grid.reverse();
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut derivs = Vec::with_capacity(grid.len());
    for st in &states {
        let (v, d) = unpack_state(st, m);
        values.push(v);
        derivs.push(d);
    }
    Ok(Trajectory {
        rho,
        side,
        direction: if descending {
            Direction::Backward
        } else {
            Direction::Forward
        },
        grid,
        values,
        derivs,
    })
}

/// The bracket <Z, Y> = Z' Y - Z Y' between a left and a right solution at
/// the same rho, with its maximal deviation from the value at the first
/// common grid point. Constant brackets are the engine of the algebraic
/// identities, so the deviation doubles as an integration-error estimate.
pub struct Bracket {
    pub grid: Vec<f64>,
    pub values: Vec<CMatrix>,
    pub max_deviation: f64,
}

pub fn bracket(z: &Trajectory, y: &Trajectory) -> Result<Bracket> {
    if z.side != Side::Left || y.side != Side::Right || z.rho != y.rho {
        return Err(Error::TrajectoryMismatch);
    }
    let same_grid = z.grid.len() == y.grid.len()
        && z.grid
            .iter()
            .zip(&y.grid)
            .all(|(a, b)| (a - b).abs() < 1e-12);

    let (grid, values) = if same_grid {
        let values: Vec<CMatrix> = (0..z.grid.len())
            .map(|i| &z.derivs[i] * &y.values[i] - &z.values[i] * &y.derivs[i])
            .collect();
        (z.grid.clone(), values)
    } else {
        let lo = z.grid[0].max(y.grid[0]);
        let hi = z.grid[z.grid.len() - 1].min(y.grid[y.grid.len() - 1]);
        if lo >= hi {
            return Err(Error::TrajectoryMismatch);
        }
        let mut grid: Vec<f64> = z
            .grid
            .iter()
            .chain(y.grid.iter())
            .copied()
            .filter(|&x| x >= lo && x <= hi)
            .collect();
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let values: Vec<CMatrix> = grid
            .iter()
            .map(|&x| {
                let (zv, zd) = z.eval(x);
                let (yv, yd) = y.eval(x);
                zd * yv - zv * yd
            })
            .collect();
        (grid, values)
    };

    let reference = values[0].clone();
    let max_deviation = values
        .iter()
        .map(|b| mat_norm(&(b - &reference)))
        .fold(0.0f64, f64::max);
    Ok(Bracket {
        grid,
        values,
        max_deviation,
    })
}
