//! Independent oracle for C and S: Picard iteration on the Volterra
//! integral equations, with the kernel written through transport matrices.
//!
//! The kernel identity
//!
//!   S0(x) C0*(t) - C0(x) S0*(t)
//!     = (2 i rho)^-1 { e^{i rho (x-t)} P-(x) P+*(t)
//!                      - e^{-i rho (x-t)} P+(x) P-*(t) }
//!
//! lets the x-dependence factor out of the integral, so one pass of prefix
//! sums per iteration evaluates the Volterra map everywhere. Quadrature is
//! composite 8-point Gauss-Legendre with panel count max(32, ceil(4 |rho|)),
//! which keeps the e^{2 i rho t} oscillation well inside each panel's
//! polynomial resolution.
//!
//! This is a certification apparatus, not a production solver: below
//! |rho| = 1 it refuses, and large |Im rho| degrades the prefix sums.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cre, identity, inverse, mat_norm, CMatrix, I};
use crate::ode::{Direction, Side, Trajectory, TransportFamily, TransportKind};
use crate::pencil::Pencil;

/// The explicit 1/(2 i rho) factor in S0 makes the oracle meaningless for
/// small |rho|; the direct integrator covers that range.
pub const RHO_MIN: f64 = 1.0;

/// Reference solutions evaluated at one (x, rho).
#[derive(Debug, Clone)]
pub struct ReferenceSolutions {
    pub c0: CMatrix,
    pub s0: CMatrix,
    pub c0_star: CMatrix,
    pub s0_star: CMatrix,
}

fn check_rho(rho: Complex64) -> Result<()> {
    if rho.norm() < RHO_MIN {
        return Err(Error::RhoTooSmall {
            min: RHO_MIN,
            got: rho.norm(),
        });
    }
    Ok(())
}

/// C0 = (e^{i rho x} P- + e^{-i rho x} P+)/2,
/// S0 = (e^{i rho x} P- - e^{-i rho x} P+)/(2 i rho), and the starred pair.
pub fn birkhoff_reference(
    rho: Complex64,
    x: f64,
    tf: &TransportFamily,
) -> Result<ReferenceSolutions> {
    check_rho(rho)?;
    let e_plus = (I * rho * cre(x)).exp();
    let e_minus = (-I * rho * cre(x)).exp();
    let p_minus = tf.eval(TransportKind::Minus, x);
    let p_plus = tf.eval(TransportKind::Plus, x);
    let p_minus_star = tf.eval(TransportKind::MinusStar, x);
    let p_plus_star = tf.eval(TransportKind::PlusStar, x);
    let half = cre(0.5);
    let inv_2irho = cre(1.0) / (cre(2.0) * I * rho);
    Ok(ReferenceSolutions {
        c0: &p_minus * (e_plus * half) + &p_plus * (e_minus * half),
        s0: &p_minus * (e_plus * inv_2irho) - &p_plus * (e_minus * inv_2irho),
        c0_star: &p_minus_star * (e_plus * half) + &p_plus_star * (e_minus * half),
        s0_star: &p_minus_star * (e_plus * inv_2irho) - &p_plus_star * (e_minus * inv_2irho),
    })
}

/// F(x, rho, Y) = Q1'(x) (i rho I - Q1(x))^-1 Y' - (Q1^2(x) + Q0(x)) Y.
pub fn forcing_f(
    p: &Pencil,
    rho: Complex64,
    x: f64,
    y: &CMatrix,
    y_prime: &CMatrix,
) -> Result<CMatrix> {
    let q1 = p.q1().eval(x)?;
    let q1p = p.q1().eval_deriv(x)?;
    let q0 = p.q0().eval(x)?;
    let iq = shifted(&q1, rho);
    let iq_inv = inverse(&iq, "i rho I - Q1")?;
    let qq = &q1 * &q1 + q0;
    Ok(q1p * iq_inv * y_prime - qq * y)
}

/// i rho I - Q1(x).
fn shifted(q1: &CMatrix, rho: Complex64) -> CMatrix {
    let m = q1.nrows();
    let mut out = -q1;
    let irho = I * rho;
    for j in 0..m {
        out[(j, j)] += irho;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorS {
    C,
    S,
}

/// Convergence trace of the Picard iteration. Differences are weighted by
/// e^{-|tau| x} (and 1/(1+|rho|) for the derivative part).
#[derive(Debug, Clone)]
pub struct PicardState {
    pub iterations: usize,
    pub final_diff: f64,
    pub diff_history: Vec<f64>,
}

impl PicardState {
    /// Ratios of successive difference norms once the iteration is moving;
    /// expected O(1/|rho|).
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.diff_history
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

const GL_NODES: [f64; 8] = [
    -0.9602898564975362,
    -0.7966664774136267,
    -0.525532409916329,
    -0.18343464249564978,
    0.18343464249564978,
    0.525532409916329,
    0.7966664774136267,
    0.9602898564975362,
];

const GL_DEGREE: usize = 8;

/// W[t][j] = integral over [-1, u_t] of the Lagrange basis polynomial L_j on
/// the Gauss-Legendre nodes, where the targets u_t are the 8 nodes followed
/// by u = 1 (the full-panel weights).
fn partial_weights() -> [[f64; GL_DEGREE]; GL_DEGREE + 1] {
    let mut w = [[0.0; GL_DEGREE]; GL_DEGREE + 1];
    for j in 0..GL_DEGREE {
        // monomial coefficients of L_j
        let mut coeffs = [0.0f64; GL_DEGREE];
        coeffs[0] = 1.0;
        let mut deg = 0usize;
        let mut denom = 1.0f64;
        for (k, &node_k) in GL_NODES.iter().enumerate() {
            if k == j {
                continue;
            }
            denom *= GL_NODES[j] - node_k;
            // multiply by (xi - nodes[k])
            let mut next = [0.0f64; GL_DEGREE];
            for d in 0..=deg {
                next[d + 1] += coeffs[d];
                next[d] -= node_k * coeffs[d];
            }
            coeffs = next;
            deg += 1;
        }
        for (t, w_t) in w.iter_mut().enumerate() {
            let u = if t < GL_DEGREE { GL_NODES[t] } else { 1.0 };
            let mut acc = 0.0;
            for (d, &c) in coeffs.iter().enumerate() {
                let n = (d + 1) as f64;
                let lower = if (d + 1) % 2 == 0 { 1.0 } else { -1.0 };
                acc += c * (u.powi(d as i32 + 1) - lower) / n;
            }
            w_t[j] = acc / denom;
        }
    }
    w
}

struct PointData {
    x: f64,
    e_plus: Complex64,  // e^{i rho x}
    e_minus: Complex64, // e^{-i rho x}
    p_plus: CMatrix,
    p_minus: CMatrix,
    q1: CMatrix,
    inhom: CMatrix,
    inhom_deriv: CMatrix,
}

struct NodeData {
    // kernel factors at integration nodes
    f_plus_pre: CMatrix,  // e^{-i rho t} P+*(t) (i rho I - Q1)^-1
    f_minus_pre: CMatrix, // e^{+i rho t} P-*(t) (i rho I - Q1)^-1
    q1p: CMatrix,
    qq: CMatrix, // Q1^2 + Q0
    iq_inv: CMatrix,
}

/// Solves the Volterra integral equation for C or S by Picard iteration.
/// Returns the trajectory on the panel-boundary grid together with the
/// convergence trace.
pub fn picard_solve(
    p: &Pencil,
    rho: Complex64,
    which: CorS,
    tol: f64,
    max_iter: usize,
    tf: &TransportFamily,
) -> Result<(Trajectory, PicardState)> {
    check_rho(rho)?;
    if !p.q1().derivative_available() {
        return Err(Error::DerivativeUnavailable);
    }
    p.ensure_valid()?;
    let m = p.dim();
    let tau = rho.im.abs();

    let panels = (4.0 * rho.norm()).ceil().max(32.0) as usize;
    let h = PI / panels as f64;
    let weights = partial_weights();

    // inhomogeneous-term prefactor for the S equation: (I - Q1(0)/(i rho))^-1
    let prefactor = match which {
        CorS::C => identity(m),
        CorS::S => {
            let q10 = p.q1().eval(0.0)?;
            inverse(&(identity(m) - q10 / (I * rho)), "I - Q1(0)/(i rho)")?
        }
    };

    let make_point = |x: f64| -> Result<PointData> {
        let e_plus = (I * rho * cre(x)).exp();
        let e_minus = (-I * rho * cre(x)).exp();
        let p_plus = tf.eval(TransportKind::Plus, x);
        let p_minus = tf.eval(TransportKind::Minus, x);
        let q1 = p.q1().eval(x)?;
        // E+ = e^{i rho x} P-/2, E- = e^{-i rho x} P+/2
        let big_e_plus = &p_minus * (e_plus * cre(0.5));
        let big_e_minus = &p_plus * (e_minus * cre(0.5));
        let iq = shifted(&q1, rho);
        let (inhom, inhom_deriv) = match which {
            CorS::C => (
                &big_e_plus + &big_e_minus,
                &iq * (&big_e_plus - &big_e_minus),
            ),
            CorS::S => (
                (&big_e_plus - &big_e_minus) / (I * rho) * &prefactor,
                &iq * (&big_e_plus + &big_e_minus) / (I * rho) * &prefactor,
            ),
        };
        Ok(PointData {
            x,
            e_plus,
            e_minus,
            p_plus,
            p_minus,
            q1,
            inhom,
            inhom_deriv,
        })
    };

    // panel boundaries and Gauss-Legendre nodes
    let bounds: Vec<f64> = (0..=panels).map(|i| i as f64 * h).collect();
    let mut node_x = Vec::with_capacity(panels * GL_DEGREE);
    for pnl in 0..panels {
        let (a, b) = (bounds[pnl], bounds[pnl + 1]);
        for &xi in &GL_NODES {
            node_x.push(a + (xi + 1.0) * (b - a) / 2.0);
        }
    }

    let bound_pts: Vec<PointData> = bounds
        .iter()
        .map(|&x| make_point(x))
        .collect::<Result<_>>()?;
    let node_pts: Vec<PointData> = node_x
        .iter()
        .map(|&x| make_point(x))
        .collect::<Result<_>>()?;
    let node_aux: Vec<NodeData> = node_x
        .iter()
        .map(|&x| -> Result<NodeData> {
            let q1 = p.q1().eval(x)?;
            let q1p = p.q1().eval_deriv(x)?;
            let q0 = p.q0().eval(x)?;
            let iq = shifted(&q1, rho);
            let iq_inv = inverse(&iq, "i rho I - Q1")?;
            let e_plus = (I * rho * cre(x)).exp();
            let e_minus = (-I * rho * cre(x)).exp();
            Ok(NodeData {
                f_plus_pre: tf.eval(TransportKind::PlusStar, x) * &iq_inv * e_minus,
                f_minus_pre: tf.eval(TransportKind::MinusStar, x) * &iq_inv * e_plus,
                q1p,
                qq: &q1 * &q1 + q0,
                iq_inv,
            })
        })
        .collect::<Result<_>>()?;

    // iterate on values at GL nodes; boundary values are derived output
    let mut y: Vec<CMatrix> = node_pts.iter().map(|pt| pt.inhom.clone()).collect();
    let mut yp: Vec<CMatrix> = node_pts.iter().map(|pt| pt.inhom_deriv.clone()).collect();
    let mut y_bounds: Vec<CMatrix> = bound_pts.iter().map(|pt| pt.inhom.clone()).collect();
    let mut yp_bounds: Vec<CMatrix> = bound_pts.iter().map(|pt| pt.inhom_deriv.clone()).collect();

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;
        // forcing-driven integrand pieces at every node
        let mut f_plus = Vec::with_capacity(node_x.len());
        let mut f_minus = Vec::with_capacity(node_x.len());
        for (q, aux) in node_aux.iter().enumerate() {
            let f = &aux.q1p * &aux.iq_inv * &yp[q] - &aux.qq * &y[q];
            f_plus.push(&aux.f_plus_pre * &f);
            f_minus.push(&aux.f_minus_pre * &f);
        }

        // prefix integrals I+-(x) at nodes and panel boundaries
        let zeros_m = CMatrix::zeros(m, m);
        let mut int_plus_nodes = vec![zeros_m.clone(); node_x.len()];
        let mut int_minus_nodes = vec![zeros_m.clone(); node_x.len()];
        let mut int_plus_bounds = vec![zeros_m.clone(); panels + 1];
        let mut int_minus_bounds = vec![zeros_m.clone(); panels + 1];
        for pnl in 0..panels {
            let scale = cre(h / 2.0);
            for t in 0..GL_DEGREE {
                let mut acc_p = int_plus_bounds[pnl].clone();
                let mut acc_m = int_minus_bounds[pnl].clone();
                for j in 0..GL_DEGREE {
                    let w = weights[t][j];
                    acc_p += &f_plus[pnl * GL_DEGREE + j] * (scale * cre(w));
                    acc_m += &f_minus[pnl * GL_DEGREE + j] * (scale * cre(w));
                }
                int_plus_nodes[pnl * GL_DEGREE + t] = acc_p;
                int_minus_nodes[pnl * GL_DEGREE + t] = acc_m;
            }
            let mut acc_p = int_plus_bounds[pnl].clone();
            let mut acc_m = int_minus_bounds[pnl].clone();
            for j in 0..GL_DEGREE {
                let w = weights[GL_DEGREE][j];
                acc_p += &f_plus[pnl * GL_DEGREE + j] * (scale * cre(w));
                acc_m += &f_minus[pnl * GL_DEGREE + j] * (scale * cre(w));
            }
            int_plus_bounds[pnl + 1] = acc_p;
            int_minus_bounds[pnl + 1] = acc_m;
        }

        // apply the Volterra map at every evaluation point
        let apply = |pt: &PointData, ip: &CMatrix, im_: &CMatrix| -> (CMatrix, CMatrix) {
            let left = &pt.p_minus * (pt.e_plus * cre(0.5)) * ip;
            let right = &pt.p_plus * (pt.e_minus * cre(0.5)) * im_;
            let value = &pt.inhom + (&left - &right);
            let iq = shifted(&pt.q1, rho);
            let deriv = &pt.inhom_deriv + iq * (left + right);
            (value, deriv)
        };

        let mut diff = 0.0f64;
        for q in 0..node_x.len() {
            let (v, d) = apply(&node_pts[q], &int_plus_nodes[q], &int_minus_nodes[q]);
            let w = (-tau * node_pts[q].x).exp();
            diff = diff.max(mat_norm(&(&v - &y[q])) * w);
            diff = diff.max(mat_norm(&(&d - &yp[q])) * w / (1.0 + rho.norm()));
            y[q] = v;
            yp[q] = d;
        }
        for b in 0..=panels {
            let (v, d) = apply(&bound_pts[b], &int_plus_bounds[b], &int_minus_bounds[b]);
            y_bounds[b] = v;
            yp_bounds[b] = d;
        }

        history.push(diff);
        if diff <= tol {
            converged = true;
            break;
        }
    }

    let state = PicardState {
        iterations,
        final_diff: *history.last().unwrap_or(&0.0),
        diff_history: history,
    };
    if !converged {
        return Err(Error::PicardDiverged {
            iterations,
            last_diff: state.final_diff,
        });
    }
    let traj = Trajectory::from_parts(
        rho,
        Side::Right,
        Direction::Forward,
        bounds,
        y_bounds,
        yp_bounds,
    );
    Ok((traj, state))
}
