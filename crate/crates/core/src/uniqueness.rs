//! Machinery for comparing two pencils: the block matrix P(x, rho) built
//! from the fundamental and adjoint solutions of both problems, the
//! transport combinations Omega and Lambda, and the named identity checks.
//!
//! For a pair with equal Weyl matrices the theory forces P_11 = Omega = I
//! and rho P_12 -> 0; numerically we verify the block-inverse identity, the
//! M = M* symmetry, the Omega' commutator identity (which holds for *any*
//! pair), and the large-rho limits as decay fits.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::asympt::{fit_loglog, DecayOutcome, SectorRay, SectorSign};
use crate::error::{Error, Result};
use crate::fundamental::{
    adjoint_weyl_via_psi_star_on, solution_phi_on, solution_phi_star_on, weyl_point_via_psi,
    weyl_solution_via_psi_on,
};
use crate::linalg::{cre, identity, mat_norm, CMatrix, I};
use crate::ode::{solve_transport, IntegrationSettings, TransportFamily, TransportKind};
use crate::pencil::{boundary_form, BoundaryKind, Pencil};
use crate::spectra::estimate_h1_from_m;

/// Two pencils of the same dimension with their transport families.
#[derive(Debug, Clone)]
pub struct PencilPair {
    l: Pencil,
    lt: Pencil,
    tf: TransportFamily,
    tft: TransportFamily,
}

impl PencilPair {
    pub fn new(l: Pencil, lt: Pencil, s: &IntegrationSettings) -> Result<Self> {
        if l.dim() != lt.dim() {
            return Err(Error::PairDimensionMismatch {
                m: l.dim(),
                mt: lt.dim(),
            });
        }
        let tf = solve_transport(&l, s)?;
        let tft = solve_transport(&lt, s)?;
        Ok(Self { l, lt, tf, tft })
    }

    pub fn self_pair(l: Pencil, s: &IntegrationSettings) -> Result<Self> {
        Self::new(l.clone(), l, s)
    }

    pub fn first(&self) -> &Pencil {
        &self.l
    }

    pub fn second(&self) -> &Pencil {
        &self.lt
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }
}

/// The four blocks of P(x, rho):
///   P_j1 = phi^(j-1) Phi~*' - Phi^(j-1) phi~*'
///   P_j2 = Phi^(j-1) phi~*  - phi^(j-1) Phi~*
/// assembled from the first pencil's solutions and the second pencil's
/// adjoint solutions (sector-stable routes for the Weyl solutions).
#[derive(Debug, Clone)]
pub struct BlockP {
    pub p11: CMatrix,
    pub p12: CMatrix,
    pub p21: CMatrix,
    pub p22: CMatrix,
}

pub fn block_p(
    pair: &PencilPair,
    x: f64,
    rho: Complex64,
    s: &IntegrationSettings,
) -> Result<BlockP> {
    let fwd: Vec<f64> = if x > 1e-12 {
        vec![0.0, x]
    } else {
        vec![0.0, PI]
    };
    let phi = solution_phi_on(&pair.l, rho, &fwd, s)?;
    let weyl = weyl_solution_via_psi_on(&pair.l, rho, &[x], s)?;
    let phi_star_t = solution_phi_star_on(&pair.lt, rho, &fwd, s)?;
    let weyl_star_t = adjoint_weyl_via_psi_star_on(&pair.lt, rho, &[x], s)?;

    let (phi_v, phi_d) = phi.at(x)?;
    let (w_v, w_d) = weyl.at(x)?;
    let (pst_v, pst_d) = phi_star_t.at(x)?;
    let (wst_v, wst_d) = weyl_star_t.at(x)?;

    Ok(BlockP {
        p11: phi_v * wst_d - w_v * pst_d,
        p12: w_v * pst_v - phi_v * wst_v,
        p21: phi_d * wst_d - w_d * pst_d,
        p22: w_d * pst_v - phi_d * wst_v,
    })
}

/// Omega = (P- P~+* + P+ P~-*)/2 and Lambda = (P- P~+* - P+ P~-*)/(2i) on a
/// grid, together with the pointwise residual of the commutator identity
/// Omega' = i (Lambda Q~1 - Q1 Lambda), with Omega' taken analytically from
/// the transport Cauchy problems.
#[derive(Debug, Clone)]
pub struct OmegaLambda {
    pub grid: Vec<f64>,
    pub omega: Vec<CMatrix>,
    pub lambda: Vec<CMatrix>,
    pub omega_prime_residuals: Vec<f64>,
}

impl OmegaLambda {
    pub fn max_lambda_norm(&self) -> f64 {
        self.lambda.iter().map(mat_norm).fold(0.0, f64::max)
    }

    pub fn max_omega_deviation_from_identity(&self) -> f64 {
        let id = identity(self.omega[0].nrows());
        self.omega
            .iter()
            .map(|o| mat_norm(&(o - &id)))
            .fold(0.0, f64::max)
    }

    pub fn max_omega_prime_residual(&self) -> f64 {
        self.omega_prime_residuals
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn at(&self, x: f64) -> Option<(&CMatrix, &CMatrix)> {
        let i = self.grid.iter().position(|&g| (g - x).abs() < 1e-9)?;
        Some((&self.omega[i], &self.lambda[i]))
    }
}

/// Omega and Lambda at an arbitrary x (transport interpolation).
pub fn omega_lambda_point(pair: &PencilPair, x: f64) -> (CMatrix, CMatrix) {
    let pm = pair.tf.eval(TransportKind::Minus, x);
    let pp = pair.tf.eval(TransportKind::Plus, x);
    let tps = pair.tft.eval(TransportKind::PlusStar, x);
    let tms = pair.tft.eval(TransportKind::MinusStar, x);
    let a = &pm * &tps;
    let b = &pp * &tms;
    ((&a + &b) * cre(0.5), (&a - &b) / (cre(2.0) * I))
}

pub fn omega_lambda(pair: &PencilPair) -> Result<OmegaLambda> {
    let grid = pair.tf.get(TransportKind::Plus).grid().to_vec();
    let mut omega = Vec::with_capacity(grid.len());
    let mut lambda = Vec::with_capacity(grid.len());
    let mut residuals = Vec::with_capacity(grid.len());
    let two_i_inv = cre(1.0) / (cre(2.0) * I);
    for &x in &grid {
        let pm = pair.tf.eval(TransportKind::Minus, x);
        let pp = pair.tf.eval(TransportKind::Plus, x);
        let tps = pair.tft.eval(TransportKind::PlusStar, x);
        let tms = pair.tft.eval(TransportKind::MinusStar, x);
        let a = &pm * &tps; // P- P~+*
        let b = &pp * &tms; // P+ P~-*
        let om = (&a + &b) * cre(0.5);
        let la = (&a - &b) * two_i_inv;

        // Omega' by the product rule with P-' = -Q1 P-, (P~+*)' = P~+* Q~1
        let q1 = pair.l.q1().eval(x)?;
        let q1t = pair.lt.q1().eval(x)?;
        let om_prime = ((-&q1) * &a + &a * &q1t + &q1 * &b - &b * &q1t) * cre(0.5);
        let commutator = (&la * &q1t - &q1 * &la) * I;
        residuals.push(mat_norm(&(om_prime - commutator)));
        omega.push(om);
        lambda.push(la);
    }
    Ok(OmegaLambda {
        grid,
        omega,
        lambda,
        omega_prime_residuals: residuals,
    })
}

/// Residual of the 2m x 2m block-inverse identity at (x, rho): the product
/// [[Phi*', -Phi*], [-phi*', phi*]] [[phi, Phi], [phi', Phi']] minus I.
pub fn block_inverse_residual(
    p: &Pencil,
    x: f64,
    rho: Complex64,
    s: &IntegrationSettings,
) -> Result<f64> {
    let fwd: Vec<f64> = if x > 1e-12 {
        vec![0.0, x]
    } else {
        vec![0.0, PI]
    };
    let phi = solution_phi_on(p, rho, &fwd, s)?;
    let weyl = weyl_solution_via_psi_on(p, rho, &[x], s)?;
    let phi_star = solution_phi_star_on(p, rho, &fwd, s)?;
    let weyl_star = adjoint_weyl_via_psi_star_on(p, rho, &[x], s)?;

    let (phi_v, phi_d) = phi.at(x)?;
    let (w_v, w_d) = weyl.at(x)?;
    let (ps_v, ps_d) = phi_star.at(x)?;
    let (ws_v, ws_d) = weyl_star.at(x)?;

    let blocks = [
        ws_d * phi_v - ws_v * phi_d,    // (1,1) -> I
        ws_d * w_v - ws_v * w_d,        // (1,2) -> 0
        -(ps_d * phi_v) + ps_v * phi_d, // (2,1) -> 0
        -(ps_d * w_v) + ps_v * w_d,     // (2,2) -> I
    ];
    let id = identity(p.dim());
    let r11 = mat_norm(&(&blocks[0] - &id));
    let r12 = mat_norm(&blocks[1]);
    let r21 = mat_norm(&blocks[2]);
    let r22 = mat_norm(&(&blocks[3] - &id));
    Ok(r11.max(r12).max(r21).max(r22))
}

/// ||M - M*|| with both Weyl matrices taken by their psi-routes.
pub fn m_versus_m_star(p: &Pencil, rho: Complex64, s: &IntegrationSettings) -> Result<f64> {
    let m = weyl_point_via_psi(p, rho, s)?;
    let bwd = [PI, 0.0];
    let psi_star = crate::fundamental::solution_psi_star_on(p, rho, &bwd, s)?;
    let (ps0, ps0p) = psi_star.at(0.0)?;
    let u_star = boundary_form(BoundaryKind::UStar, p, rho, ps0, ps0p)?;
    let u_star_inv = crate::linalg::inverse(&u_star, "U*(psi*)")?;
    let m_star = u_star_inv * ps0;
    Ok(mat_norm(&(m - m_star)))
}

/// Named residuals and decay fits for a pencil pair.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub eq_inverse_max_residual_first: f64,
    pub eq_inverse_max_residual_second: f64,
    pub m_mstar_max_first: f64,
    pub m_mstar_max_second: f64,
    pub omega_anchor_residual: f64,
    pub max_lambda_norm: f64,
    /// max_x || Lambda || > 1e-6: the pencils have different Q1-transports.
    pub distinguishable: bool,
    pub omega_prime_max_residual: f64,
    pub fit_x: f64,
    pub p11_fit_plus: DecayOutcome,
    pub p11_fit_minus: DecayOutcome,
    pub p12_fit_plus: DecayOutcome,
    pub p12_fit_minus: DecayOutcome,
    pub h1_gap: f64,
}

/// Distinguishability threshold on max_x || Lambda(x) ||.
pub const LAMBDA_THRESHOLD: f64 = 1e-6;

impl IdentityReport {
    /// (name, value) rows for tabular output.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            (
                "block_inverse_residual_first",
                self.eq_inverse_max_residual_first,
            ),
            (
                "block_inverse_residual_second",
                self.eq_inverse_max_residual_second,
            ),
            ("m_minus_mstar_first", self.m_mstar_max_first),
            ("m_minus_mstar_second", self.m_mstar_max_second),
            ("omega_anchor_residual", self.omega_anchor_residual),
            ("max_lambda_norm", self.max_lambda_norm),
            ("omega_prime_residual", self.omega_prime_max_residual),
            (
                "p11_minus_omega_slope_plus",
                self.p11_fit_plus.slope_or(-10.0),
            ),
            (
                "p11_minus_omega_slope_minus",
                self.p11_fit_minus.slope_or(-10.0),
            ),
            (
                "rho_p12_minus_lambda_slope_plus",
                self.p12_fit_plus.slope_or(-10.0),
            ),
            (
                "rho_p12_minus_lambda_slope_minus",
                self.p12_fit_minus.slope_or(-10.0),
            ),
            ("h1_gap", self.h1_gap),
        ]
    }
}

pub fn check_identities(
    pair: &PencilPair,
    rho_samples: &[Complex64],
    x_samples: &[f64],
    s: &IntegrationSettings,
) -> Result<IdentityReport> {
    let mut eq_first = 0.0f64;
    let mut eq_second = 0.0f64;
    let mut mm_first = 0.0f64;
    let mut mm_second = 0.0f64;
    for &rho in rho_samples {
        mm_first = mm_first.max(m_versus_m_star(&pair.l, rho, s)?);
        mm_second = mm_second.max(m_versus_m_star(&pair.lt, rho, s)?);
        for &x in x_samples {
            eq_first = eq_first.max(block_inverse_residual(&pair.l, x, rho, s)?);
            eq_second = eq_second.max(block_inverse_residual(&pair.lt, x, rho, s)?);
        }
    }

    let ol = omega_lambda(pair)?;
    let omega_anchor_residual = mat_norm(&(&ol.omega[0] - &identity(pair.dim())));
    let max_lambda_norm = ol.max_lambda_norm();
    let omega_prime_max_residual = ol.max_omega_prime_residual();

    // decay fits at a fixed interior x
    let mut xs = x_samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let fit_x = xs[xs.len() / 2];
    let (omega_x, lambda_x) = {
        let pm = pair.tf.eval(TransportKind::Minus, fit_x);
        let pp = pair.tf.eval(TransportKind::Plus, fit_x);
        let tps = pair.tft.eval(TransportKind::PlusStar, fit_x);
        let tms = pair.tft.eval(TransportKind::MinusStar, fit_x);
        let a = &pm * &tps;
        let b = &pp * &tms;
        ((&a + &b) * cre(0.5), (&a - &b) / (cre(2.0) * I))
    };

    // scalar self-pairs make P11 = Omega an exact identity at every rho, so
    // the residual sits at the integrator noise floor and has no slope
    let outcome = |samples: Vec<(f64, f64)>, floors: Vec<f64>| -> DecayOutcome {
        if samples.iter().zip(&floors).all(|((_, d), f)| d <= f) {
            DecayOutcome::ExactToPrecision {
                max_remainder: samples.iter().map(|s| s.1).fold(0.0, f64::max),
            }
        } else {
            DecayOutcome::Fit(fit_loglog(&samples))
        }
    };
    let fit_along = |sign: SectorSign| -> Result<(DecayOutcome, DecayOutcome)> {
        let ray = SectorRay::default_ray(sign);
        let mut p11_samples = Vec::new();
        let mut p12_samples = Vec::new();
        let mut p11_floors = Vec::new();
        let mut p12_floors = Vec::new();
        for k in 0..ray.moduli.len() {
            let rho = ray.rho(k);
            let blocks = block_p(pair, fit_x, rho, s)?;
            p11_samples.push((ray.moduli[k], mat_norm(&(&blocks.p11 - &omega_x))));
            p12_samples.push((ray.moduli[k], mat_norm(&(&blocks.p12 * rho - &lambda_x))));
            p11_floors.push(50.0 * s.rtol * (1.0 + mat_norm(&omega_x)));
            // the rho factor amplifies the noise in P12 linearly
            p12_floors.push(50.0 * s.rtol * (1.0 + mat_norm(&lambda_x)) * (1.0 + ray.moduli[k]));
        }
        Ok((
            outcome(p11_samples, p11_floors),
            outcome(p12_samples, p12_floors),
        ))
    };
    let (p11_fit_plus, p12_fit_plus) = fit_along(SectorSign::Plus)?;
    let (p11_fit_minus, p12_fit_minus) = fit_along(SectorSign::Minus)?;

    let h1_gap = {
        let rp = SectorRay::default_ray(SectorSign::Plus);
        let rm = SectorRay::default_ray(SectorSign::Minus);
        let est_l = estimate_h1_from_m(&pair.l, &rp, &rm, s)?;
        let est_lt = estimate_h1_from_m(&pair.lt, &rp, &rm, s)?;
        mat_norm(&(&est_l.h1 - &est_lt.h1))
    };

    Ok(IdentityReport {
        eq_inverse_max_residual_first: eq_first,
        eq_inverse_max_residual_second: eq_second,
        m_mstar_max_first: mm_first,
        m_mstar_max_second: mm_second,
        omega_anchor_residual,
        max_lambda_norm,
        distinguishable: max_lambda_norm > LAMBDA_THRESHOLD,
        omega_prime_max_residual,
        fit_x,
        p11_fit_plus,
        p11_fit_minus,
        p12_fit_plus,
        p12_fit_minus,
        h1_gap,
    })
}
