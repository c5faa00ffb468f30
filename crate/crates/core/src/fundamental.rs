//! The named solutions of the pencil equation and their adjoints.
//!
//! C, S carry identity/zero Cauchy data at 0; phi and psi are normalized by
//! the boundary forms; the Weyl solution Phi satisfies U(Phi) = I,
//! V(Phi) = 0 and its value at 0 is the Weyl matrix M(rho). M is always
//! computed by two routes and the disagreement is reported as a first-class
//! error estimate:
//!
//!   via psi:  M = psi(0) (U(psi))^-1
//!   via phi:  M = -(V(phi))^-1 V(S)
//!
//! Proximity to the spectrum is diagnosed by the condition number of U(psi)
//! or V(phi) (threshold 1e8), which is scale-free, rather than by |Delta|.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{determinant, identity, mat_norm, zeros, CMatrix};
use crate::ode::{integrate_pencil_ode_on, Direction, IntegrationSettings, Side, Trajectory};
use crate::pencil::{boundary_form, BoundaryKind, Pencil};

/// Condition-number threshold signalling "rho is at or near an eigenvalue".
pub const COND_LIMIT: f64 = 1e8;

fn uniform(from: f64, to: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
        .collect()
}

fn forward_nodes(s: &IntegrationSettings) -> Vec<f64> {
    uniform(0.0, PI, s.grid_points)
}

fn backward_nodes(s: &IntegrationSettings) -> Vec<f64> {
    uniform(PI, 0.0, s.grid_points)
}

/// C(0) = I, C'(0) = 0 and S(0) = 0, S'(0) = I.
pub fn fundamental_cs(
    p: &Pencil,
    rho: Complex64,
    s: &IntegrationSettings,
) -> Result<(Trajectory, Trajectory)> {
    let nodes = forward_nodes(s);
    Ok((
        fundamental_c_on(p, rho, &nodes, s)?,
        fundamental_s_on(p, rho, &nodes, s)?,
    ))
}

pub fn fundamental_c_on(
    p: &Pencil,
    rho: Complex64,
    nodes: &[f64],
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    let m = p.dim();
    integrate_pencil_ode_on(Side::Right, p, rho, &identity(m), &zeros(m), nodes, s)
}

pub fn fundamental_s_on(
    p: &Pencil,
    rho: Complex64,
    nodes: &[f64],
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    let m = p.dim();
    integrate_pencil_ode_on(Side::Right, p, rho, &zeros(m), &identity(m), nodes, s)
}

/// phi(0) = I, U(phi) = 0, i.e. phi'(0) = -(i rho h1 + h0).
pub fn solution_phi(p: &Pencil, rho: Complex64, s: &IntegrationSettings) -> Result<Trajectory> {
    solution_phi_on(p, rho, &forward_nodes(s), s)
}

pub fn solution_phi_on(
    p: &Pencil,
    rho: Complex64,
    nodes: &[f64],
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    let m = p.dim();
    let w0p = -p.b0(rho);
    integrate_pencil_ode_on(Side::Right, p, rho, &identity(m), &w0p, nodes, s)
}

/// psi(pi) = I, V(psi) = 0, integrated backward; the returned grid ascends.
pub fn solution_psi(p: &Pencil, rho: Complex64, s: &IntegrationSettings) -> Result<Trajectory> {
    solution_psi_on(p, rho, &backward_nodes(s), s)
}

pub fn solution_psi_on(
    p: &Pencil,
    rho: Complex64,
    nodes: &[f64],
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    let m = p.dim();
    let w0p = -p.b_pi(rho);
    integrate_pencil_ode_on(Side::Right, p, rho, &identity(m), &w0p, nodes, s)
}

/// Left-equation solutions: phi*(0) = I with U*(phi*) = 0, S*(0) = 0 with
/// S*'(0) = I, psi*(pi) = I with V*(psi*) = 0.
pub fn solution_phi_star(
    p: &Pencil,
    rho: Complex64,
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    solution_phi_star_on(p, rho, &forward_nodes(s), s)
}

pub fn solution_phi_star_on(
    p: &Pencil,
    rho: Complex64,
    nodes: &[f64],
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    let m = p.dim();
    let w0p = -p.b0(rho);
    integrate_pencil_ode_on(Side::Left, p, rho, &identity(m), &w0p, nodes, s)
}

pub fn solution_s_star_on(
    p: &Pencil,
    rho: Complex64,
    nodes: &[f64],
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    let m = p.dim();
    integrate_pencil_ode_on(Side::Left, p, rho, &zeros(m), &identity(m), nodes, s)
}

pub fn solution_psi_star_on(
    p: &Pencil,
    rho: Complex64,
    nodes: &[f64],
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    let m = p.dim();
    let w0p = -p.b_pi(rho);
    integrate_pencil_ode_on(Side::Left, p, rho, &identity(m), &w0p, nodes, s)
}

/// The Weyl matrix by both routes plus the route discrepancy.
#[derive(Debug, Clone)]
pub struct WeylEvaluation {
    pub rho: Complex64,
    pub m_via_psi: CMatrix,
    pub m_via_phi: CMatrix,
    pub discrepancy: f64,
    pub cond_u_psi: f64,
    pub cond_v_phi: f64,
}

/// Inverts a boundary form, guarding against rho at or near an eigenvalue.
/// The plain condition number is blind to cancellation for m = 1 (a scalar
/// always has cond = 1), so the guard also compares the inverse against the
/// pre-cancellation magnitude `scale` of the form W' + B W.
fn checked_inverse(
    mat: &CMatrix,
    scale: f64,
    what: &str,
    rho: Complex64,
) -> Result<(CMatrix, f64)> {
    let inv = match crate::linalg::try_inverse_scaled(mat) {
        Some(inv) => inv,
        None => {
            return Err(Error::NearEigenvalue {
                rho,
                what: what.to_string(),
                cond: f64::INFINITY,
            })
        }
    };
    let inv_norm = mat_norm(&inv);
    let kappa = (mat_norm(mat) * inv_norm).max(scale * inv_norm);
    if !kappa.is_finite() || kappa > COND_LIMIT {
        return Err(Error::NearEigenvalue {
            rho,
            what: what.to_string(),
            cond: kappa,
        });
    }
    Ok((inv, kappa))
}

/// Natural off-spectrum magnitude of the form W' + B W. Away from the
/// spectrum the boundary form of psi grows like |rho| ||psi||, so the
/// (1 + |rho|) ||W|| term makes the ratio scale/||form|| blow up exactly
/// when the form cancels, independently of m.
fn form_scale(b: &CMatrix, w: &CMatrix, w_prime: &CMatrix, rho: Complex64) -> f64 {
    mat_norm(w_prime) + (mat_norm(b) + 1.0 + rho.norm()) * mat_norm(w)
}

pub fn weyl_matrix(p: &Pencil, rho: Complex64, s: &IntegrationSettings) -> Result<WeylEvaluation> {
    let minimal = [PI, 0.0];
    let psi = solution_psi_on(p, rho, &minimal, s)?;
    let (psi0, psi0p) = psi.at(0.0)?;
    let u_psi = boundary_form(BoundaryKind::U, p, rho, psi0, psi0p)?;
    let u_scale = form_scale(&p.b0(rho), psi0, psi0p, rho);
    let (u_psi_inv, cond_u_psi) = checked_inverse(&u_psi, u_scale, "U(psi)", rho)?;
    let m_via_psi = psi0 * u_psi_inv;

    let fwd = [0.0, PI];
    let phi = solution_phi_on(p, rho, &fwd, s)?;
    let s_traj = fundamental_s_on(p, rho, &fwd, s)?;
    let (phi_pi, phi_pi_p) = phi.at(PI)?;
    let (s_pi, s_pi_p) = s_traj.at(PI)?;
    let v_phi = boundary_form(BoundaryKind::V, p, rho, phi_pi, phi_pi_p)?;
    let v_s = boundary_form(BoundaryKind::V, p, rho, s_pi, s_pi_p)?;
    let v_scale = form_scale(&p.b_pi(rho), phi_pi, phi_pi_p, rho);
    let (v_phi_inv, cond_v_phi) = checked_inverse(&v_phi, v_scale, "V(phi)", rho)?;
    let m_via_phi = -(v_phi_inv * v_s);

    let discrepancy = mat_norm(&(&m_via_psi - &m_via_phi));
    Ok(WeylEvaluation {
        rho,
        m_via_psi,
        m_via_phi,
        discrepancy,
        cond_u_psi,
        cond_v_phi,
    })
}

/// Pointwise M(rho) from the psi route alone; the cheap evaluation used in
/// contour quadrature.
pub fn weyl_point_via_psi(p: &Pencil, rho: Complex64, s: &IntegrationSettings) -> Result<CMatrix> {
    let psi = solution_psi_on(p, rho, &[PI, 0.0], s)?;
    let (psi0, psi0p) = psi.at(0.0)?;
    let u_psi = boundary_form(BoundaryKind::U, p, rho, psi0, psi0p)?;
    let u_scale = form_scale(&p.b0(rho), psi0, psi0p, rho);
    let (u_psi_inv, _) = checked_inverse(&u_psi, u_scale, "U(psi)", rho)?;
    Ok(psi0 * u_psi_inv)
}

/// Phi = S + phi M assembled on the settings grid (exact superposition, no
/// boundary-value shooting). M is taken from the phi route so that
/// V(Phi) = 0 holds to inversion accuracy.
pub fn weyl_solution(p: &Pencil, rho: Complex64, s: &IntegrationSettings) -> Result<Trajectory> {
    let nodes = forward_nodes(s);
    let phi = solution_phi_on(p, rho, &nodes, s)?;
    let s_traj = fundamental_s_on(p, rho, &nodes, s)?;
    let (phi_pi, phi_pi_p) = phi.at(PI)?;
    let (s_pi, s_pi_p) = s_traj.at(PI)?;
    let v_phi = boundary_form(BoundaryKind::V, p, rho, phi_pi, phi_pi_p)?;
    let v_s = boundary_form(BoundaryKind::V, p, rho, s_pi, s_pi_p)?;
    let v_scale = form_scale(&p.b_pi(rho), phi_pi, phi_pi_p, rho);
    let (v_phi_inv, _) = checked_inverse(&v_phi, v_scale, "V(phi)", rho)?;
    let m = -(v_phi_inv * v_s);

    let values: Vec<CMatrix> = s_traj
        .values()
        .iter()
        .zip(phi.values())
        .map(|(sv, pv)| sv + pv * &m)
        .collect();
    let derivs: Vec<CMatrix> = s_traj
        .derivs()
        .iter()
        .zip(phi.derivs())
        .map(|(sd, pd)| sd + pd * &m)
        .collect();
    Ok(Trajectory::from_parts(
        rho,
        Side::Right,
        Direction::Forward,
        phi.grid().to_vec(),
        values,
        derivs,
    ))
}

fn descending_with_endpoints(nodes: &[f64]) -> Vec<f64> {
    let mut back: Vec<f64> = nodes.to_vec();
    back.sort_by(|a, b| b.partial_cmp(a).unwrap());
    back.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    if (back[0] - PI).abs() > 1e-12 {
        back.insert(0, PI);
    }
    if back[back.len() - 1].abs() > 1e-12 {
        back.push(0.0);
    }
    back
}

/// Phi = psi (U(psi))^-1 evaluated on explicit nodes. This route stays
/// accurate deep in the sectors where S + phi M cancels catastrophically.
pub fn weyl_solution_via_psi_on(
    p: &Pencil,
    rho: Complex64,
    nodes: &[f64],
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    let back = descending_with_endpoints(nodes);
    let psi = solution_psi_on(p, rho, &back, s)?;
    let (psi0, psi0p) = psi.at(0.0)?;
    let u_psi = boundary_form(BoundaryKind::U, p, rho, psi0, psi0p)?;
    let u_scale = form_scale(&p.b0(rho), psi0, psi0p, rho);
    let (u_psi_inv, _) = checked_inverse(&u_psi, u_scale, "U(psi)", rho)?;
    let values: Vec<CMatrix> = psi.values().iter().map(|v| v * &u_psi_inv).collect();
    let derivs: Vec<CMatrix> = psi.derivs().iter().map(|d| d * &u_psi_inv).collect();
    Ok(Trajectory::from_parts(
        rho,
        Side::Right,
        Direction::Backward,
        psi.grid().to_vec(),
        values,
        derivs,
    ))
}

/// The adjoint bundle: left-equation solutions, M* and Phi* = S* + M* phi*.
#[derive(Debug, Clone)]
pub struct AdjointBundle {
    pub phi_star: Trajectory,
    pub s_star: Trajectory,
    pub psi_star: Trajectory,
    pub weyl_star: Trajectory,
    pub m_star: CMatrix,
}

pub fn adjoint_solutions(
    p: &Pencil,
    rho: Complex64,
    s: &IntegrationSettings,
) -> Result<AdjointBundle> {
    let fwd = forward_nodes(s);
    let bwd = backward_nodes(s);
    let phi_star = solution_phi_star_on(p, rho, &fwd, s)?;
    let s_star = solution_s_star_on(p, rho, &fwd, s)?;
    let psi_star = solution_psi_star_on(p, rho, &bwd, s)?;

    let (ps0, ps0p) = psi_star.at(0.0)?;
    let u_star = boundary_form(BoundaryKind::UStar, p, rho, ps0, ps0p)?;
    let u_scale = form_scale(&p.b0(rho), ps0, ps0p, rho);
    let (u_star_inv, _) = checked_inverse(&u_star, u_scale, "U*(psi*)", rho)?;
    let m_star = &u_star_inv * ps0;

    let values: Vec<CMatrix> = s_star
        .values()
        .iter()
        .zip(phi_star.values())
        .map(|(sv, pv)| sv + &m_star * pv)
        .collect();
    let derivs: Vec<CMatrix> = s_star
        .derivs()
        .iter()
        .zip(phi_star.derivs())
        .map(|(sd, pd)| sd + &m_star * pd)
        .collect();
    let weyl_star = Trajectory::from_parts(
        rho,
        Side::Left,
        Direction::Forward,
        phi_star.grid().to_vec(),
        values,
        derivs,
    );
    Ok(AdjointBundle {
        phi_star,
        s_star,
        psi_star,
        weyl_star,
        m_star,
    })
}

/// Phi* = (U*(psi*))^-1 psi* on explicit nodes (the sector-stable route).
pub fn adjoint_weyl_via_psi_star_on(
    p: &Pencil,
    rho: Complex64,
    nodes: &[f64],
    s: &IntegrationSettings,
) -> Result<Trajectory> {
    let back = descending_with_endpoints(nodes);
    let psi_star = solution_psi_star_on(p, rho, &back, s)?;
    let (ps0, ps0p) = psi_star.at(0.0)?;
    let u_star = boundary_form(BoundaryKind::UStar, p, rho, ps0, ps0p)?;
    let u_scale = form_scale(&p.b0(rho), ps0, ps0p, rho);
    let (u_star_inv, _) = checked_inverse(&u_star, u_scale, "U*(psi*)", rho)?;
    let values: Vec<CMatrix> = psi_star.values().iter().map(|v| &u_star_inv * v).collect();
    let derivs: Vec<CMatrix> = psi_star.derivs().iter().map(|d| &u_star_inv * d).collect();
    Ok(Trajectory::from_parts(
        rho,
        Side::Left,
        Direction::Backward,
        psi_star.grid().to_vec(),
        values,
        derivs,
    ))
}

/// Characteristic function Delta(rho) = det V(phi); its zeros are the
/// eigenvalues (they coincide with the poles of M).
pub fn char_function(p: &Pencil, rho: Complex64, s: &IntegrationSettings) -> Result<Complex64> {
    let phi = solution_phi_on(p, rho, &[0.0, PI], s)?;
    let (phi_pi, phi_pi_p) = phi.at(PI)?;
    let v_phi = boundary_form(BoundaryKind::V, p, rho, phi_pi, phi_pi_p)?;
    Ok(determinant(&v_phi))
}

/// det U(psi); zeros agree with those of [`char_function`].
pub fn det_u_psi(p: &Pencil, rho: Complex64, s: &IntegrationSettings) -> Result<Complex64> {
    let psi = solution_psi_on(p, rho, &[PI, 0.0], s)?;
    let (psi0, psi0p) = psi.at(0.0)?;
    let u_psi = boundary_form(BoundaryKind::U, p, rho, psi0, psi0p)?;
    Ok(determinant(&u_psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, cre};
    use crate::ode::bracket;
    use crate::pencil::{cheb_fit, CoefficientFunction};

    fn settings() -> IntegrationSettings {
        IntegrationSettings::default()
    }

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, cre(v))
    }

    #[test]
    fn free_cs_closed_forms() {
        let p = Pencil::zero(1);
        let (c, s_) = fundamental_cs(&p, c64(3.0, 0.0), &settings()).unwrap();
        for idx in [0, 57, 123, 199] {
            let x = c.grid()[idx];
            assert!((c.values()[idx][(0, 0)] - cre((3.0 * x).cos())).norm() < 1e-9);
            assert!((s_.values()[idx][(0, 0)] - cre((3.0 * x).sin() / 3.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn free_cs_at_rho_zero() {
        // double root of the symbol: C = 1, S = x
        let p = Pencil::zero(1);
        let (c, s_) = fundamental_cs(&p, c64(0.0, 0.0), &settings()).unwrap();
        for idx in [10, 100, 199] {
            let x = c.grid()[idx];
            assert!((c.values()[idx][(0, 0)] - cre(1.0)).norm() < 1e-10);
            assert!((s_.values()[idx][(0, 0)] - cre(x)).norm() < 1e-10);
        }
    }

    #[test]
    fn constant_q1_c_closed_form() {
        let p = Pencil::zero(1).with_q1(CoefficientFunction::constant(scalar(0.3)));
        let (c, _) = fundamental_cs(&p, c64(1.0, 0.0), &settings()).unwrap();
        let omega = c64(1.0, 0.6).sqrt();
        let x = c.grid()[150];
        assert!((c.values()[150][(0, 0)] - (omega * cre(x)).cos()).norm() < 1e-9);
    }

    #[test]
    fn phi_free_and_with_h0() {
        let p = Pencil::zero(1);
        let phi = solution_phi(&p, c64(2.0, 0.0), &settings()).unwrap();
        let x = phi.grid()[77];
        assert!((phi.values()[77][(0, 0)] - cre((2.0 * x).cos())).norm() < 1e-9);

        // h0 = 2: phi = cos x - 2 sin x at rho = 1
        let p2 = Pencil::zero(1).with_h0(scalar(2.0));
        let phi2 = solution_phi(&p2, c64(1.0, 0.0), &settings()).unwrap();
        let x = phi2.grid()[133];
        let expect = x.cos() - 2.0 * x.sin();
        assert!((phi2.values()[133][(0, 0)] - cre(expect)).norm() < 1e-9);
    }

    #[test]
    fn phi_equals_c_minus_s_b0() {
        let coeffs = cheb_fit(2, 24, |x| {
            CMatrix::from_fn(2, 2, |j, k| c64(0.5 * (x + j as f64).sin(), 0.2 * k as f64))
        })
        .unwrap();
        let p = Pencil::zero(2)
            .with_q1(CoefficientFunction::cheb(2, coeffs).unwrap())
            .with_h0(CMatrix::from_row_slice(
                2,
                2,
                &[cre(0.4), cre(-0.2), c64(0.0, 0.3), cre(0.1)],
            ))
            .with_h1(CMatrix::from_row_slice(
                2,
                2,
                &[cre(0.2), cre(0.0), cre(0.1), cre(-0.3)],
            ));
        let rho = c64(4.0, 0.7);
        let s = settings();
        let phi = solution_phi(&p, rho, &s).unwrap();
        let (c, s_traj) = fundamental_cs(&p, rho, &s).unwrap();
        let b0 = p.b0(rho);
        let mut worst = 0.0f64;
        for i in (0..phi.grid().len()).step_by(13) {
            let expect = &c.values()[i] - &s_traj.values()[i] * &b0;
            worst = worst.max(mat_norm(&(&phi.values()[i] - expect)));
        }
        assert!(worst < 1e-8, "worst = {worst:.3e}");
    }

    #[test]
    fn psi_free_closed_form() {
        let p = Pencil::zero(1);
        let psi = solution_psi(&p, c64(1.0, 0.0), &settings()).unwrap();
        // psi(x) = cos(rho (pi - x)); at x = 0: cos(pi) = -1
        let (v0, _) = psi.at(0.0).unwrap();
        assert!((v0[(0, 0)] - cre(-1.0)).norm() < 1e-9);
        let x = psi.grid()[60];
        assert!((psi.values()[60][(0, 0)] - cre((PI - x).cos())).norm() < 1e-9);
    }

    #[test]
    fn psi_diagonal_decouples() {
        let q0 = CMatrix::from_row_slice(2, 2, &[cre(0.7), cre(0.0), cre(0.0), cre(-0.4)]);
        let p = Pencil::zero(2).with_q0(CoefficientFunction::constant(q0));
        let rho = c64(1.3, 0.0);
        let psi = solution_psi(&p, rho, &settings()).unwrap();
        // each diagonal entry solves the scalar problem with its own q0
        let p1 = Pencil::zero(1).with_q0(CoefficientFunction::constant(scalar(0.7)));
        let p2 = Pencil::zero(1).with_q0(CoefficientFunction::constant(scalar(-0.4)));
        let psi1 = solution_psi(&p1, rho, &settings()).unwrap();
        let psi2 = solution_psi(&p2, rho, &settings()).unwrap();
        for i in (0..psi.grid().len()).step_by(29) {
            assert!((psi.values()[i][(0, 0)] - psi1.values()[i][(0, 0)]).norm() < 1e-10);
            assert!((psi.values()[i][(1, 1)] - psi2.values()[i][(0, 0)]).norm() < 1e-10);
            assert!(psi.values()[i][(0, 1)].norm() < 1e-10);
        }
    }

    #[test]
    fn weyl_free_neumann_closed_forms() {
        // M(rho) = cot(pi rho) / rho for the free Neumann pencil
        let p = Pencil::zero(1);
        let s = settings();
        let cot_over_rho = |rho: Complex64| (PI * rho).cos() / (PI * rho).sin() / rho;
        let cases = [
            (c64(0.25, 0.0), cre(4.0)),
            (c64(0.5, 0.0), cre(0.0)),
            (c64(0.0, 1.0), cot_over_rho(c64(0.0, 1.0))),
            (c64(1.7, 0.3), cot_over_rho(c64(1.7, 0.3))),
        ];
        for (rho, expect) in cases {
            let w = weyl_matrix(&p, rho, &s).unwrap();
            assert!(
                (w.m_via_psi[(0, 0)] - expect).norm() < 1e-8,
                "rho = {rho}, got {}, want {expect}",
                w.m_via_psi[(0, 0)]
            );
            assert!(w.discrepancy < 1e-9, "routes disagree: {}", w.discrepancy);
        }
        // frozen value -coth(pi) = -1.0037418731973213 at rho = i
        let w = weyl_matrix(&p, c64(0.0, 1.0), &s).unwrap();
        assert!((w.m_via_psi[(0, 0)].re - (-1.0037418731973213)).abs() < 1e-8);
        assert!(w.m_via_psi[(0, 0)].im.abs() < 1e-9);
    }

    #[test]
    fn weyl_near_eigenvalue_reports_condition() {
        let p = Pencil::zero(1);
        // rho = 1 is an eigenvalue of the free Neumann problem
        let r = weyl_matrix(&p, c64(1.0, 1e-12), &settings());
        assert!(matches!(r, Err(Error::NearEigenvalue { .. })));
    }

    #[test]
    fn weyl_solution_defining_conditions() {
        let coeffs = cheb_fit(2, 24, |x| {
            CMatrix::from_fn(2, 2, |j, k| {
                c64(0.4 * (x * (1 + j) as f64).cos(), 0.3 * (x + k as f64).sin())
            })
        })
        .unwrap();
        let p = Pencil::zero(2)
            .with_q1(CoefficientFunction::cheb(2, coeffs).unwrap())
            .with_h1(CMatrix::from_row_slice(
                2,
                2,
                &[cre(0.3), cre(0.1), cre(0.0), cre(-0.2)],
            ))
            .with_big_h0(CMatrix::from_row_slice(
                2,
                2,
                &[cre(0.5), cre(0.0), cre(0.2), cre(0.1)],
            ));
        let rho = c64(2.3, 0.6);
        let s = settings();
        let w = weyl_solution(&p, rho, &s).unwrap();
        let (w0, w0p) = w.at(0.0).unwrap();
        let u = boundary_form(BoundaryKind::U, &p, rho, w0, w0p).unwrap();
        assert!(mat_norm(&(u - identity(2))) < 1e-8, "U(Phi) = I");
        let (wp, wpp) = w.at(PI).unwrap();
        let v = boundary_form(BoundaryKind::V, &p, rho, wp, wpp).unwrap();
        assert!(mat_norm(&v) < 1e-8, "V(Phi) = 0");

        // free scalar case with M = 0 at rho = 0.5: Phi = sin(0.5 x)/0.5
        let free = Pencil::zero(1);
        let w = weyl_solution(&free, c64(0.5, 0.0), &s).unwrap();
        let x = w.grid()[120];
        assert!((w.values()[120][(0, 0)] - cre((0.5 * x).sin() / 0.5)).norm() < 1e-9);
    }

    #[test]
    fn psi_route_weyl_solution_matches() {
        let p = Pencil::zero(1).with_h0(scalar(0.3));
        let rho = c64(1.9, 0.4);
        let s = settings();
        let direct = weyl_solution(&p, rho, &s).unwrap();
        let via_psi = weyl_solution_via_psi_on(&p, rho, &[0.0, 1.0, 2.0, PI], &s).unwrap();
        for &x in &[0.0f64, 1.0, 2.0] {
            let (a, _) = direct.eval(x);
            let (b, _) = via_psi.at(x).unwrap();
            assert!(mat_norm(&(&a - b)) < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn scalar_adjoints_coincide_with_direct() {
        let p = Pencil::zero(1).with_h0(scalar(0.5));
        let rho = c64(1.1, 0.2);
        let s = settings();
        let bundle = adjoint_solutions(&p, rho, &s).unwrap();
        let phi = solution_phi(&p, rho, &s).unwrap();
        for i in (0..phi.grid().len()).step_by(31) {
            assert!((bundle.phi_star.values()[i][(0, 0)] - phi.values()[i][(0, 0)]).norm() < 1e-9);
        }
        let w = weyl_matrix(&p, rho, &s).unwrap();
        assert!(mat_norm(&(&bundle.m_star - &w.m_via_psi)) < 1e-8);
    }

    #[test]
    fn m_equals_m_star_m2() {
        let coeffs = cheb_fit(2, 24, |x| {
            CMatrix::from_fn(2, 2, |j, k| {
                c64(
                    0.6 * ((1 + j + k) as f64 * x).cos(),
                    0.2 * (x + (j * k) as f64).sin(),
                )
            })
        })
        .unwrap();
        let p = Pencil::zero(2)
            .with_q1(CoefficientFunction::cheb(2, coeffs).unwrap())
            .with_h1(CMatrix::from_row_slice(
                2,
                2,
                &[cre(0.25), cre(-0.1), cre(0.05), cre(0.15)],
            ));
        let rho = c64(3.2, 0.8);
        let s = settings();
        let w = weyl_matrix(&p, rho, &s).unwrap();
        let bundle = adjoint_solutions(&p, rho, &s).unwrap();
        let gap = mat_norm(&(&w.m_via_psi - &bundle.m_star));
        assert!(gap < 1e-8, "M vs M*: {gap:.3e}");
    }

    #[test]
    fn adjoint_weyl_routes_agree() {
        // Phi* = S* + M* phi* against (U*(psi*))^-1 psi*
        let p = Pencil::zero(2).with_h0(CMatrix::from_row_slice(
            2,
            2,
            &[cre(0.4), cre(0.1), cre(-0.2), cre(0.3)],
        ));
        let rho = c64(2.1, 0.5);
        let s = settings();
        let bundle = adjoint_solutions(&p, rho, &s).unwrap();
        let via_psi = adjoint_weyl_via_psi_star_on(&p, rho, &[0.9, 1.8], &s).unwrap();
        for &x in &[0.9f64, 1.8] {
            let (a, _) = bundle.weyl_star.eval(x);
            let (b, _) = via_psi.at(x).unwrap();
            assert!(mat_norm(&(&a - b)) < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn zero_pencil_weyl_star_equals_weyl() {
        let p = Pencil::zero(1);
        let rho = c64(0.7, 0.5);
        let s = settings();
        let bundle = adjoint_solutions(&p, rho, &s).unwrap();
        let w = weyl_solution(&p, rho, &s).unwrap();
        for i in (0..w.grid().len()).step_by(37) {
            assert!((bundle.weyl_star.values()[i][(0, 0)] - w.values()[i][(0, 0)]).norm() < 1e-8);
        }
    }

    #[test]
    fn bracket_pairs() {
        let p = Pencil::zero(2).with_h1(CMatrix::from_row_slice(
            2,
            2,
            &[cre(0.3), cre(0.0), cre(0.1), cre(-0.2)],
        ));
        let rho = c64(1.7, 0.4);
        let s = settings();
        let bundle = adjoint_solutions(&p, rho, &s).unwrap();
        let w = weyl_solution(&p, rho, &s).unwrap();
        let phi = solution_phi(&p, rho, &s).unwrap();

        // <Phi*, Phi> = 0
        let b1 = bracket(&bundle.weyl_star, &w).unwrap();
        assert!(mat_norm(&b1.values[0]) < 1e-8);
        assert!(b1.max_deviation < 1e-8);

        // <Phi*, phi> = I
        let b2 = bracket(&bundle.weyl_star, &phi).unwrap();
        assert!(mat_norm(&(&b2.values[0] - &identity(2))) < 1e-8);
        assert!(b2.max_deviation < 1e-8);

        // <phi*, phi> = 0
        let b3 = bracket(&bundle.phi_star, &phi).unwrap();
        assert!(mat_norm(&b3.values[0]) < 1e-8);
        assert!(b3.max_deviation < 1e-8);
    }

    #[test]
    fn char_function_free_pencil() {
        let p = Pencil::zero(1);
        let s = settings();
        // Delta(rho) = -rho sin(pi rho)
        let d2 = char_function(&p, c64(2.0, 0.0), &s).unwrap();
        assert!(d2.norm() < 1e-8);
        let dh = char_function(&p, c64(0.5, 0.0), &s).unwrap();
        assert!((dh - cre(-0.5)).norm() < 1e-9);
    }

    #[test]
    fn char_function_block_diagonal_factorizes() {
        let q0 = CMatrix::from_row_slice(2, 2, &[cre(0.5), cre(0.0), cre(0.0), cre(-0.3)]);
        let p = Pencil::zero(2).with_q0(CoefficientFunction::constant(q0));
        let rho = c64(1.4, 0.2);
        let s = settings();
        let d = char_function(&p, rho, &s).unwrap();
        let p1 = Pencil::zero(1).with_q0(CoefficientFunction::constant(scalar(0.5)));
        let p2 = Pencil::zero(1).with_q0(CoefficientFunction::constant(scalar(-0.3)));
        let d1 = char_function(&p1, rho, &s).unwrap();
        let d2 = char_function(&p2, rho, &s).unwrap();
        assert!((d - d1 * d2).norm() < 1e-8 * (1.0 + (d1 * d2).norm()));
    }

    #[test]
    fn both_determinants_vanish_together() {
        let p = Pencil::zero(1).with_h0(scalar(0.4));
        let s = settings();
        // find a zero of det V(phi) near rho = 1 by bisection on the real line
        let f = |r: f64| char_function(&p, cre(r), &s).unwrap().re;
        let (mut a, mut b) = (0.8, 1.4);
        assert!(f(a) * f(b) < 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if f(a) * f(mid) <= 0.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
        let root = 0.5 * (a + b);
        let dual = det_u_psi(&p, cre(root), &s).unwrap();
        assert!(dual.norm() < 1e-6, "det U(psi) at the same root: {dual}");
    }
}
