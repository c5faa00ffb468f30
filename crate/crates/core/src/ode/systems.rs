//! First-order reformulations of the pencil equations.
//!
//! States are flattened column-major: the right/left second-order equations
//! use [vec(Y); vec(Y')], transports use vec(P).

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{CMatrix, CVector, I};
use crate::ode::dopri5::OdeRhs;
use crate::pencil::Pencil;

/// Builds A(x) = rho^2 I + 2 i rho Q1(x) + Q0(x).
fn symbol_matrix(p: &Pencil, rho: Complex64, x: f64) -> Result<CMatrix> {
    let q1 = p.q1().eval(x)?;
    let mut a = p.q0().eval(x)?;
    let two_i_rho = I * rho * Complex64::new(2.0, 0.0);
    for (ai, qi) in a.iter_mut().zip(q1.iter()) {
        *ai += two_i_rho * qi;
    }
    let rho2 = rho * rho;
    for j in 0..p.dim() {
        a[(j, j)] += rho2;
    }
    Ok(a)
}

/// Y'' = -A(x) Y.
pub struct RightPencilRhs<'a> {
    pub pencil: &'a Pencil,
    pub rho: Complex64,
}

impl OdeRhs for RightPencilRhs<'_> {
    fn dim(&self) -> usize {
        2 * self.pencil.dim() * self.pencil.dim()
    }

    fn eval(&self, x: f64, y: &CVector, out: &mut CVector) -> Result<()> {
        let m = self.pencil.dim();
        let mm = m * m;
        let a = symbol_matrix(self.pencil, self.rho, x)?;
        // top: Y' (copied from the second block)
        out.as_mut_slice()[..mm].copy_from_slice(&y.as_slice()[mm..]);
        // bottom: -A * Y
        let yv = nalgebra::DMatrixView::from_slice(&y.as_slice()[..mm], m, m);
        let mut bottom = nalgebra::DMatrixViewMut::from_slice(&mut out.as_mut_slice()[mm..], m, m);
        bottom.gemm(Complex64::new(-1.0, 0.0), &a, &yv, Complex64::new(0.0, 0.0));
        Ok(())
    }
}

/// Z'' = -Z A(x) (the left analogue).
pub struct LeftPencilRhs<'a> {
    pub pencil: &'a Pencil,
    pub rho: Complex64,
}

impl OdeRhs for LeftPencilRhs<'_> {
    fn dim(&self) -> usize {
        2 * self.pencil.dim() * self.pencil.dim()
    }

    fn eval(&self, x: f64, y: &CVector, out: &mut CVector) -> Result<()> {
        let m = self.pencil.dim();
        let mm = m * m;
        let a = symbol_matrix(self.pencil, self.rho, x)?;
        out.as_mut_slice()[..mm].copy_from_slice(&y.as_slice()[mm..]);
        let yv = nalgebra::DMatrixView::from_slice(&y.as_slice()[..mm], m, m);
        let mut bottom = nalgebra::DMatrixViewMut::from_slice(&mut out.as_mut_slice()[mm..], m, m);
        bottom.gemm(Complex64::new(-1.0, 0.0), &yv, &a, Complex64::new(0.0, 0.0));
        Ok(())
    }
}

/// P' = sign * Q1 P (or P Q1 when `star`).
pub struct TransportRhs<'a> {
    pub pencil: &'a Pencil,
    pub sign: f64,
    pub star: bool,
}

impl OdeRhs for TransportRhs<'_> {
    fn dim(&self) -> usize {
        self.pencil.dim() * self.pencil.dim()
    }

    fn eval(&self, x: f64, y: &CVector, out: &mut CVector) -> Result<()> {
        let m = self.pencil.dim();
        let q1 = self.pencil.q1().eval(x)?;
        let yv = nalgebra::DMatrixView::from_slice(y.as_slice(), m, m);
        let mut o = nalgebra::DMatrixViewMut::from_slice(out.as_mut_slice(), m, m);
        let alpha = Complex64::new(self.sign, 0.0);
        let beta = Complex64::new(0.0, 0.0);
        if self.star {
            o.gemm(alpha, &yv, &q1, beta);
        } else {
            o.gemm(alpha, &q1, &yv, beta);
        }
        Ok(())
    }
}

pub fn pack_single(w: &CMatrix) -> CVector {
    CVector::from_column_slice(w.as_slice())
}

pub fn pack_state(w: &CMatrix, w_prime: &CMatrix) -> CVector {
    let mm = w.nrows() * w.ncols();
    let mut v = CVector::zeros(2 * mm);
    v.as_mut_slice()[..mm].copy_from_slice(w.as_slice());
    v.as_mut_slice()[mm..].copy_from_slice(w_prime.as_slice());
    v
}

pub fn unpack_state(v: &CVector, m: usize) -> (CMatrix, CMatrix) {
    let mm = m * m;
    let w = CMatrix::from_column_slice(m, m, &v.as_slice()[..mm]);
    let wp = CMatrix::from_column_slice(m, m, &v.as_slice()[mm..]);
    (w, wp)
}
