//! Pencil data model: coefficients, boundary matrices, and the four
//! boundary linear forms U, V, U*, V*.

mod coeff;
pub mod config;

pub use coeff::{cheb_fit, CoefficientFunction, DOMAIN_EPS};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    determinant, identity, is_finite, mat_norm, require_square, zeros, CMatrix, I,
};

/// Determinant floor for the Regge-type exclusion det(I +- h1) != 0,
/// det(I +- H1) != 0.
pub const EPS_DET: f64 = 1e-10;

/// The full problem data: dimension, Q1, Q0 and the boundary matrices
/// h0, h1 (at x = 0) and H0, H1 (at x = pi).
#[derive(Debug, Clone)]
pub struct Pencil {
    m: usize,
    q1: CoefficientFunction,
    q0: CoefficientFunction,
    h0: CMatrix,
    h1: CMatrix,
    big_h0: CMatrix,
    big_h1: CMatrix,
}

impl Pencil {
    pub fn new(
        m: usize,
        q1: CoefficientFunction,
        q0: CoefficientFunction,
        h0: CMatrix,
        h1: CMatrix,
        big_h0: CMatrix,
        big_h1: CMatrix,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("dimension m must be positive".into()));
        }
        if q1.dim() != m || q0.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                rows: q1.dim(),
                cols: q0.dim(),
            });
        }
        for b in [&h0, &h1, &big_h0, &big_h1] {
            require_square(b, m)?;
        }
        Ok(Self {
            m,
            q1,
            q0,
            h0,
            h1,
            big_h0,
            big_h1,
        })
    }

    /// The free pencil: all coefficients and boundary matrices zero.
    pub fn zero(m: usize) -> Self {
        Self::new(
            m,
            CoefficientFunction::zero(m),
            CoefficientFunction::zero(m),
            zeros(m),
            zeros(m),
            zeros(m),
            zeros(m),
        )
        .expect("zero pencil is always well-formed")
    }

    pub fn with_q1(mut self, q1: CoefficientFunction) -> Self {
        assert_eq!(q1.dim(), self.m);
        self.q1 = q1;
        self
    }

    pub fn with_q0(mut self, q0: CoefficientFunction) -> Self {
        assert_eq!(q0.dim(), self.m);
        self.q0 = q0;
        self
    }

    pub fn with_h0(mut self, h0: CMatrix) -> Self {
        assert_eq!(h0.nrows(), self.m);
        self.h0 = h0;
        self
    }

    pub fn with_h1(mut self, h1: CMatrix) -> Self {
        assert_eq!(h1.nrows(), self.m);
        self.h1 = h1;
        self
    }

    pub fn with_big_h0(mut self, big_h0: CMatrix) -> Self {
        assert_eq!(big_h0.nrows(), self.m);
        self.big_h0 = big_h0;
        self
    }

    pub fn with_big_h1(mut self, big_h1: CMatrix) -> Self {
        assert_eq!(big_h1.nrows(), self.m);
        self.big_h1 = big_h1;
        self
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn q1(&self) -> &CoefficientFunction {
        &self.q1
    }

    pub fn q0(&self) -> &CoefficientFunction {
        &self.q0
    }

    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn h1(&self) -> &CMatrix {
        &self.h1
    }

    pub fn big_h0(&self) -> &CMatrix {
        &self.big_h0
    }

    pub fn big_h1(&self) -> &CMatrix {
        &self.big_h1
    }

    /// i*rho*h1 + h0, the matrix entering U.
    pub fn b0(&self, rho: Complex64) -> CMatrix {
        &self.h1 * (I * rho) + &self.h0
    }

    /// i*rho*H1 + H0, the matrix entering V.
    pub fn b_pi(&self, rho: Complex64) -> CMatrix {
        &self.big_h1 * (I * rho) + &self.big_h0
    }

    pub fn validate(&self) -> ValidationReport {
        validate_pencil(self)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidPencil(report.violations))
        }
    }
}

/// Evaluates (Q1(x), Q0(x), Q1'(x) if available).
pub fn eval_coefficients(p: &Pencil, x: f64) -> Result<(CMatrix, CMatrix, Option<CMatrix>)> {
    let q1 = p.q1.eval(x)?;
    let q0 = p.q0.eval(x)?;
    let q1p = if p.q1.derivative_available() {
        Some(p.q1.eval_deriv(x)?)
    } else {
        None
    };
    Ok((q1, q0, q1p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Y'(0) + (i rho h1 + h0) Y(0)
    U,
    /// Y'(pi) + (i rho H1 + H0) Y(pi)
    V,
    /// Z'(0) + Z(0) (i rho h1 + h0)
    UStar,
    /// Z'(pi) + Z(pi) (i rho H1 + H0)
    VStar,
}

pub fn boundary_form(
    kind: BoundaryKind,
    p: &Pencil,
    rho: Complex64,
    w: &CMatrix,
    w_prime: &CMatrix,
) -> Result<CMatrix> {
    require_square(w, p.m)?;
    require_square(w_prime, p.m)?;
    let b = match kind {
        BoundaryKind::U | BoundaryKind::UStar => p.b0(rho),
        BoundaryKind::V | BoundaryKind::VStar => p.b_pi(rho),
    };
    Ok(match kind {
        BoundaryKind::U | BoundaryKind::V => w_prime + b * w,
        BoundaryKind::UStar | BoundaryKind::VStar => w_prime + w * b,
    })
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_pencil(p: &Pencil) -> ValidationReport {
    let mut violations = Vec::new();
    let id = identity(p.m);
    for (mat, plus, name) in [
        (&p.h1, true, "det(I+h1)"),
        (&p.h1, false, "det(I-h1)"),
        (&p.big_h1, true, "det(I+H1)"),
        (&p.big_h1, false, "det(I-H1)"),
    ] {
        if !is_finite(mat) {
            violations.push(format!("{name}: matrix has non-finite entries"));
            continue;
        }
        let combo = if plus { &id + mat } else { &id - mat };
        let det = determinant(&combo);
        if det.norm() <= EPS_DET {
            violations.push(format!(
                "{name}=0 within tolerance (|det| = {:.3e})",
                det.norm()
            ));
        }
    }
    for (mat, name) in [(&p.h0, "h0"), (&p.big_h0, "H0")] {
        if !is_finite(mat) {
            violations.push(format!("{name} has non-finite entries"));
        }
    }
    for (f, name) in [(&p.q1, "Q1"), (&p.q0, "Q0")] {
        if let Err(e) = f.probe() {
            violations.push(format!("{name} not evaluable on [0, pi]: {e}"));
        }
    }
    ValidationReport { violations }
}

/// Max of the coefficient norm over a probe grid; used by generators and
/// diagnostics.
pub fn sup_norm_on_grid(f: &CoefficientFunction, samples: usize) -> Result<f64> {
    let mut best: f64 = 0.0;
    for i in 0..=samples {
        let x = std::f64::consts::PI * i as f64 / samples as f64;
        best = best.max(mat_norm(&f.eval(x)?));
    }
    Ok(best)
}
