//! Complex matrix helpers shared across the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` throughout; the project-wide
//! matrix norm is the maximum row sum `max_j sum_k |a_jk|`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = nalgebra::DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cre(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(m: usize) -> CMatrix {
    CMatrix::identity(m, m)
}

pub fn zeros(m: usize) -> CMatrix {
    CMatrix::zeros(m, m)
}

/// Maximum row sum norm `max_j sum_k |a_jk|`. Non-finite entries propagate
/// (f64::max would silently drop a NaN).
pub fn mat_norm(a: &CMatrix) -> f64 {
    if !is_finite(a) {
        return f64::NAN;
    }
    let mut best = 0.0f64;
    for j in 0..a.nrows() {
        let mut row = 0.0;
        for k in 0..a.ncols() {
            row += a[(j, k)].norm();
        }
        best = best.max(row);
    }
    best
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn determinant(a: &CMatrix) -> Complex64 {
    a.clone().determinant()
}

/// Inverse with pre-scaling by 1/||A||. The explicit small-matrix inverses
/// divide by the determinant, and complex division squares the denominator
/// modulus; entries around 1e110 (deep-sector solution scales) would
/// otherwise overflow into NaN.
pub fn try_inverse_scaled(a: &CMatrix) -> Option<CMatrix> {
    let s = mat_norm(a);
    if !s.is_finite() || s == 0.0 {
        return None;
    }
    let inv_s = cre(1.0 / s);
    let scaled = a * inv_s;
    let inv = scaled.try_inverse()?;
    if !is_finite(&inv) {
        return None;
    }
    Some(inv * inv_s)
}

/// Inverse with an explicit error instead of a panic on singular input.
pub fn inverse(a: &CMatrix, what: &str) -> Result<CMatrix> {
    try_inverse_scaled(a).ok_or_else(|| Error::SingularMatrix {
        what: what.to_string(),
    })
}

/// Condition number in the max row sum norm; `f64::INFINITY` when singular.
pub fn cond(a: &CMatrix) -> f64 {
    match try_inverse_scaled(a) {
        Some(inv) => mat_norm(a) * mat_norm(&inv),
        None => f64::INFINITY,
    }
}

pub fn require_square(a: &CMatrix, m: usize) -> Result<()> {
    if a.nrows() != m || a.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

/// Cubic Hermite interpolation of a matrix function sampled with exact
/// derivatives at the nodes of an increasing grid.
pub fn hermite_eval(grid: &[f64], values: &[CMatrix], derivs: &[CMatrix], x: f64) -> CMatrix {
    let n = grid.len();
    debug_assert!(n >= 2 && values.len() == n && derivs.len() == n);
    if x <= grid[0] {
        return values[0].clone() + &derivs[0] * cre(x - grid[0]);
    }
    if x >= grid[n - 1] {
        return values[n - 1].clone() + &derivs[n - 1] * cre(x - grid[n - 1]);
    }
    let i = match grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
        Ok(i) => return values[i].clone(),
        Err(i) => i - 1,
    };
    let h = grid[i + 1] - grid[i];
    let t = (x - grid[i]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let mut out = &values[i] * cre(h00);
    out += &derivs[i] * cre(h10 * h);
    out += &values[i + 1] * cre(h01);
    out += &derivs[i + 1] * cre(h11 * h);
    out
}

/// Derivative of the cubic Hermite interpolant above. Exact at the nodes,
/// O(h^3) between them.
pub fn hermite_eval_deriv(grid: &[f64], values: &[CMatrix], derivs: &[CMatrix], x: f64) -> CMatrix {
    let n = grid.len();
    if x <= grid[0] {
        return derivs[0].clone();
    }
    if x >= grid[n - 1] {
        return derivs[n - 1].clone();
    }
    let i = match grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
        Ok(i) => return derivs[i].clone(),
        Err(i) => i - 1,
    };
    let h = grid[i + 1] - grid[i];
    let t = (x - grid[i]) / h;
    let t2 = t * t;
    let d00 = (6.0 * t2 - 6.0 * t) / h;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d01 = (-6.0 * t2 + 6.0 * t) / h;
    let d11 = 3.0 * t2 - 2.0 * t;
    let mut out = &values[i] * cre(d00);
    out += &derivs[i] * cre(d10);
    out += &values[i + 1] * cre(d01);
    out += &derivs[i + 1] * cre(d11);
    out
}
