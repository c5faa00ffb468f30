//! The eight rho-independent transport matrices.
//!
//! P+- solve P' = +-Q1 P from P(0) = I, the starred family multiplies Q1 from
//! the right, and the bullet family solves the sign-flipped problems anchored
//! at x = pi.

use std::f64::consts::PI;

use crate::error::Result;
use crate::linalg::{hermite_eval, identity, CMatrix};
use crate::ode::dopri5::{march, Flipped, StepControl};
use crate::ode::systems::TransportRhs;
use crate::ode::IntegrationSettings;
use crate::pencil::Pencil;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    Plus,
    Minus,
    PlusStar,
    MinusStar,
    PlusBullet,
    MinusBullet,
    PlusBulletStar,
    MinusBulletStar,
}

impl TransportKind {
    pub const ALL: [TransportKind; 8] = [
        TransportKind::Plus,
        TransportKind::Minus,
        TransportKind::PlusStar,
        TransportKind::MinusStar,
        TransportKind::PlusBullet,
        TransportKind::MinusBullet,
        TransportKind::PlusBulletStar,
        TransportKind::MinusBulletStar,
    ];

    pub fn is_bullet(&self) -> bool {
        matches!(
            self,
            TransportKind::PlusBullet
                | TransportKind::MinusBullet
                | TransportKind::PlusBulletStar
                | TransportKind::MinusBulletStar
        )
    }

    pub fn is_star(&self) -> bool {
        matches!(
            self,
            TransportKind::PlusStar
                | TransportKind::MinusStar
                | TransportKind::PlusBulletStar
                | TransportKind::MinusBulletStar
        )
    }

    /// Sign of Q1 in the Cauchy problem actually solved.
    fn ode_sign(&self) -> f64 {
        match self {
            TransportKind::Plus | TransportKind::PlusStar => 1.0,
            TransportKind::Minus | TransportKind::MinusStar => -1.0,
            // bullet problems flip the sign: P+bullet' = -Q1 P+bullet
            TransportKind::PlusBullet | TransportKind::PlusBulletStar => -1.0,
            TransportKind::MinusBullet | TransportKind::MinusBulletStar => 1.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TransportKind::Plus => "P+",
            TransportKind::Minus => "P-",
            TransportKind::PlusStar => "P+*",
            TransportKind::MinusStar => "P-*",
            TransportKind::PlusBullet => "P+.",
            TransportKind::MinusBullet => "P-.",
            TransportKind::PlusBulletStar => "P+.*",
            TransportKind::MinusBulletStar => "P-.*",
        }
    }
}

/// A matrix function of x sampled with exact derivatives; evaluable anywhere
/// on [0, pi] by cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct MatFunction {
    grid: Vec<f64>,
    values: Vec<CMatrix>,
    derivs: Vec<CMatrix>,
}

impl MatFunction {
    pub fn new(grid: Vec<f64>, values: Vec<CMatrix>, derivs: Vec<CMatrix>) -> Self {
        assert_eq!(grid.len(), values.len());
        assert_eq!(grid.len(), derivs.len());
        Self {
            grid,
            values,
            derivs,
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn node_values(&self) -> &[CMatrix] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> CMatrix {
        hermite_eval(&self.grid, &self.values, &self.derivs, x)
    }
}

#[derive(Debug, Clone)]
pub struct TransportFamily {
    pencil: Pencil,
    members: Vec<MatFunction>,
}

impl TransportFamily {
    pub fn dim(&self) -> usize {
        self.pencil.dim()
    }

    pub fn pencil(&self) -> &Pencil {
        &self.pencil
    }

    pub fn get(&self, kind: TransportKind) -> &MatFunction {
        let idx = TransportKind::ALL.iter().position(|k| *k == kind).unwrap();
        &self.members[idx]
    }

    pub fn eval(&self, kind: TransportKind, x: f64) -> CMatrix {
        self.get(kind).eval(x)
    }

    /// Exact derivative from the defining Cauchy problem,
    /// P' = (+-) Q1 P or P (+-) Q1.
    pub fn eval_deriv(&self, kind: TransportKind, x: f64) -> Result<CMatrix> {
        let q1 = self.pencil.q1().eval(x)?;
        let p = self.eval(kind, x);
        let signed = &q1 * crate::linalg::cre(kind.ode_sign());
        Ok(if kind.is_star() {
            p * signed
        } else {
            signed * p
        })
    }
}

/// Tolerances for the rho-independent transports are pushed well below the
/// pencil-equation defaults; the identity suites budget 1e-9 residuals on
/// triple products.
fn transport_control(s: &IntegrationSettings) -> StepControl {
    StepControl {
        rtol: (s.rtol * 1e-3).max(1e-14),
        atol: (s.atol * 1e-3).max(1e-16),
        max_step: s.step_cap_coeff,
        max_steps: s.max_steps,
    }
}

pub const TRANSPORT_GRID_MIN: usize = 801;

pub fn solve_transport(p: &Pencil, s: &IntegrationSettings) -> Result<TransportFamily> {
    p.ensure_valid()?;
    let m = p.dim();
    let n = s.grid_points.max(TRANSPORT_GRID_MIN);
    let grid: Vec<f64> = (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect();
    let ctl = transport_control(s);
    let y0 = crate::ode::systems::pack_single(&identity(m));

    let mut members = Vec::with_capacity(8);
    for kind in TransportKind::ALL {
        let rhs = TransportRhs {
            pencil: p,
            sign: kind.ode_sign(),
            star: kind.is_star(),
        };
        let states = if kind.is_bullet() {
            // anchored at pi: march in s = -x from -pi to 0
            let neg_nodes: Vec<f64> = grid.iter().rev().map(|&x| -x).collect();
            let mut states = march(&Flipped(&rhs), &y0, &neg_nodes, &ctl)?;
            states.reverse();
            states
        } else {
            march(&rhs, &y0, &grid, &ctl)?
        };
        let values: Vec<CMatrix> = states
            .iter()
            .map(|v| CMatrix::from_column_slice(m, m, v.as_slice()))
            .collect();
        let derivs = values
            .iter()
            .zip(&grid)
            .map(|(v, &x)| {
                let q1 = p.q1().eval(x)?;
                let signed = &q1 * crate::linalg::cre(kind.ode_sign());
                Ok(if kind.is_star() {
                    v * signed
                } else {
                    signed * v
                })
            })
            .collect::<Result<Vec<_>>>()?;
        members.push(MatFunction::new(grid.clone(), values, derivs));
    }
    Ok(TransportFamily {
        pencil: p.clone(),
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, cre, mat_norm, zeros};
    use crate::pencil::{cheb_fit, CoefficientFunction};

    fn family(p: &Pencil) -> TransportFamily {
        solve_transport(p, &IntegrationSettings::default()).unwrap()
    }

    #[test]
    fn zero_q1_gives_identities() {
        let tf = family(&Pencil::zero(2));
        for kind in TransportKind::ALL {
            for &x in &[0.0, 1.0, PI] {
                assert!(mat_norm(&(tf.eval(kind, x) - identity(2))) < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_cosine_exponentiates() {
        // Q1 = cos x: P+(x) = exp(int_0^x cos) = exp(sin x)
        let coeffs = cheb_fit(1, 24, |x| CMatrix::from_element(1, 1, cre(x.cos()))).unwrap();
        let p = Pencil::zero(1).with_q1(CoefficientFunction::cheb(1, coeffs).unwrap());
        let tf = family(&p);
        for &x in &[0.0, 0.7, 1.9, 2.6, PI] {
            let expect = x.sin().exp();
            let got = tf.eval(TransportKind::Plus, x)[(0, 0)];
            assert!((got - cre(expect)).norm() < 1e-10, "x = {x}");
            let got_minus = tf.eval(TransportKind::Minus, x)[(0, 0)];
            assert!((got_minus - cre((-x.sin()).exp())).norm() < 1e-10);
        }
    }

    #[test]
    fn constant_diagonal_matrix_exponential() {
        let q1 = CMatrix::from_row_slice(2, 2, &[cre(1.0), cre(0.0), cre(0.0), cre(-1.0)]);
        let p = Pencil::zero(2).with_q1(CoefficientFunction::constant(q1));
        let tf = family(&p);
        for &x in &[0.5f64, 1.5, 3.0] {
            let expect =
                CMatrix::from_row_slice(2, 2, &[cre(x.exp()), cre(0.0), cre(0.0), cre((-x).exp())]);
            assert!(mat_norm(&(tf.eval(TransportKind::Plus, x) - expect)) < 1e-9);
        }
    }

    #[test]
    fn anchor_conditions() {
        let coeffs = cheb_fit(2, 24, |x| {
            CMatrix::from_fn(2, 2, |j, k| {
                c64(
                    0.4 * (x + j as f64).cos(),
                    0.3 * ((k as f64 + 1.0) * x).sin(),
                )
            })
        })
        .unwrap();
        let p = Pencil::zero(2).with_q1(CoefficientFunction::cheb(2, coeffs).unwrap());
        let tf = family(&p);
        for kind in TransportKind::ALL {
            let anchor = if kind.is_bullet() { PI } else { 0.0 };
            let v = tf.eval(kind, anchor);
            assert!(
                mat_norm(&(v - identity(2))) < 1e-12,
                "{} at {anchor}",
                kind.label()
            );
        }
    }

    fn test_pencil() -> Pencil {
        let coeffs = cheb_fit(2, 32, |x| {
            CMatrix::from_fn(2, 2, |j, k| {
                c64(
                    0.8 * ((j + k) as f64 + x).cos(),
                    0.5 * (x * (1.0 + k as f64)).sin(),
                )
            })
        })
        .unwrap();
        Pencil::zero(2).with_q1(CoefficientFunction::cheb(2, coeffs).unwrap())
    }

    #[test]
    fn inverse_pair_identities() {
        // P+ P-* = P-* P+ = I and P- P+* = P+* P- = I on the whole grid.
        let tf = family(&test_pencil());
        let grid = tf.get(TransportKind::Plus).grid().to_vec();
        let id = identity(2);
        for &x in grid.iter().step_by(7) {
            let pp = tf.eval(TransportKind::Plus, x);
            let pms = tf.eval(TransportKind::MinusStar, x);
            let pm = tf.eval(TransportKind::Minus, x);
            let pps = tf.eval(TransportKind::PlusStar, x);
            for prod in [&pp * &pms, &pms * &pp, &pm * &pps, &pps * &pm] {
                assert!(mat_norm(&(prod - &id)) < 1e-9, "x = {x}");
            }
        }
    }

    #[test]
    fn bullet_connection_identities() {
        // P+(x) P-.(0) = P-.(x),  P-(x) P+.(0) = P+.(x),
        // P-.*(0) P+*(x) = P-.*(x),  P+.*(0) P-*(x) = P+.*(x).
        let tf = family(&test_pencil());
        let grid = tf.get(TransportKind::Plus).grid().to_vec();
        let pmb0 = tf.eval(TransportKind::MinusBullet, 0.0);
        let ppb0 = tf.eval(TransportKind::PlusBullet, 0.0);
        let pmbs0 = tf.eval(TransportKind::MinusBulletStar, 0.0);
        let ppbs0 = tf.eval(TransportKind::PlusBulletStar, 0.0);
        for &x in grid.iter().step_by(11) {
            let r1 =
                tf.eval(TransportKind::Plus, x) * &pmb0 - tf.eval(TransportKind::MinusBullet, x);
            let r2 =
                tf.eval(TransportKind::Minus, x) * &ppb0 - tf.eval(TransportKind::PlusBullet, x);
            let r3 = &pmbs0 * tf.eval(TransportKind::PlusStar, x)
                - tf.eval(TransportKind::MinusBulletStar, x);
            let r4 = &ppbs0 * tf.eval(TransportKind::MinusStar, x)
                - tf.eval(TransportKind::PlusBulletStar, x);
            for r in [&r1, &r2, &r3, &r4] {
                assert!(mat_norm(r) < 1e-9, "x = {x}");
            }
        }
    }

    #[test]
    fn hermite_between_nodes_stays_accurate() {
        let coeffs = cheb_fit(1, 24, |x| CMatrix::from_element(1, 1, cre(x.cos()))).unwrap();
        let p = Pencil::zero(1).with_q1(CoefficientFunction::cheb(1, coeffs).unwrap());
        let tf = family(&p);
        // off-node points
        for i in 0..40 {
            let x = 0.013 + i as f64 * (PI - 0.03) / 40.0;
            let got = tf.eval(TransportKind::Plus, x)[(0, 0)];
            assert!((got - cre(x.sin().exp())).norm() < 1e-10, "x = {x}");
        }
        let _ = zeros(1);
    }
}
