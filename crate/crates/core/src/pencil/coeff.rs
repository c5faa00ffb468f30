//! Matrix-valued coefficient functions on [0, pi].
//!
//! Three declared representations: polynomial in x, Chebyshev series in
//! t = 2x/pi - 1, and a sampled grid interpolated by a natural cubic spline.
//! The derivative is always the analytic derivative of the representation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{cre, is_finite, require_square, zeros, CMatrix};

/// Slack allowed when evaluating at the interval endpoints.
pub const DOMAIN_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Rep {
    /// sum_k coeffs[k] * x^k
    Poly { coeffs: Vec<CMatrix> },
    /// sum_k coeffs[k] * T_k(2x/pi - 1); deriv_coeffs precomputed
    Cheb {
        coeffs: Vec<CMatrix>,
        deriv_coeffs: Vec<CMatrix>,
    },
    /// natural cubic spline through (x_i, values[i])
    Grid {
        x: Vec<f64>,
        values: Vec<CMatrix>,
        second: Vec<CMatrix>,
    },
}

#[derive(Debug, Clone)]
pub struct CoefficientFunction {
    m: usize,
    rep: Rep,
    derivative: bool,
}

impl CoefficientFunction {
    pub fn zero(m: usize) -> Self {
        Self::poly(m, Vec::new()).expect("empty polynomial is always valid")
    }

    pub fn constant(c: CMatrix) -> Self {
        let m = c.nrows();
        Self::poly(m, vec![c]).expect("constant polynomial is always valid")
    }

    pub fn poly(m: usize, coeffs: Vec<CMatrix>) -> Result<Self> {
        for c in &coeffs {
            require_square(c, m)?;
        }
        Ok(Self {
            m,
            rep: Rep::Poly { coeffs },
            derivative: true,
        })
    }

    pub fn cheb(m: usize, coeffs: Vec<CMatrix>) -> Result<Self> {
        for c in &coeffs {
            require_square(c, m)?;
        }
        let deriv_coeffs = cheb_derivative(&coeffs, m);
        Ok(Self {
            m,
            rep: Rep::Cheb {
                coeffs,
                deriv_coeffs,
            },
            derivative: true,
        })
    }

    /// Strictly increasing nodes covering [0, pi].
    pub fn grid(m: usize, x: Vec<f64>, values: Vec<CMatrix>) -> Result<Self> {
        if x.len() < 2 || x.len() != values.len() {
            return Err(Error::Config(format!(
                "grid representation needs >= 2 nodes with matching values ({} nodes, {} values)",
                x.len(),
                values.len()
            )));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "grid nodes must be strictly increasing".into(),
            ));
        }
        if x[0] > DOMAIN_EPS || x[x.len() - 1] < PI - DOMAIN_EPS {
            return Err(Error::Config(format!(
                "grid nodes must cover [0, pi]; got [{}, {}]",
                x[0],
                x[x.len() - 1]
            )));
        }
        for v in &values {
            require_square(v, m)?;
        }
        let second = natural_spline_second_derivatives(&x, &values, m);
        Ok(Self {
            m,
            rep: Rep::Grid { x, values, second },
            derivative: true,
        })
    }

    pub fn without_derivative(mut self) -> Self {
        self.derivative = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn derivative_available(&self) -> bool {
        self.derivative
    }

    fn clamp_domain(x: f64) -> Result<f64> {
        if !(-DOMAIN_EPS..=PI + DOMAIN_EPS).contains(&x) {
            return Err(Error::OutOfDomain { x });
        }
        Ok(x.clamp(0.0, PI))
    }

    pub fn eval(&self, x: f64) -> Result<CMatrix> {
        let x = Self::clamp_domain(x)?;
        Ok(match &self.rep {
            Rep::Poly { coeffs } => poly_eval(coeffs, self.m, x),
            Rep::Cheb { coeffs, .. } => clenshaw(coeffs, self.m, 2.0 * x / PI - 1.0),
            Rep::Grid {
                x: nodes,
                values,
                second,
            } => spline_eval(nodes, values, second, x).0,
        })
    }

    pub fn eval_deriv(&self, x: f64) -> Result<CMatrix> {
        if !self.derivative {
            return Err(Error::DerivativeUnavailable);
        }
        let x = Self::clamp_domain(x)?;
        Ok(match &self.rep {
            Rep::Poly { coeffs } => poly_eval_deriv(coeffs, self.m, x),
            Rep::Cheb { deriv_coeffs, .. } => {
                clenshaw(deriv_coeffs, self.m, 2.0 * x / PI - 1.0) * cre(2.0 / PI)
            }
            Rep::Grid {
                x: nodes,
                values,
                second,
            } => spline_eval(nodes, values, second, x).1,
        })
    }

    /// Probes evaluability and finiteness for validation reports.
    pub fn probe(&self) -> Result<()> {
        for &x in &[0.0, PI / 3.0, PI / 2.0, PI] {
            let v = self.eval(x)?;
            if !is_finite(&v) {
                return Err(Error::Config(format!(
                    "non-finite coefficient value at x = {x}"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn rep_name(&self) -> &'static str {
        match self.rep {
            Rep::Poly { .. } => "poly",
            Rep::Cheb { .. } => "cheb",
            Rep::Grid { .. } => "grid",
        }
    }

    pub(crate) fn rep_parts(&self) -> RepParts<'_> {
        match &self.rep {
            Rep::Poly { coeffs } => (Some(coeffs), None),
            Rep::Cheb { coeffs, .. } => (Some(coeffs), None),
            Rep::Grid { x, values, .. } => (None, Some((x, values))),
        }
    }
}

/// Series coefficients or grid samples, depending on the representation.
pub(crate) type RepParts<'a> = (Option<&'a [CMatrix]>, Option<(&'a [f64], &'a [CMatrix])>);

fn poly_eval(coeffs: &[CMatrix], m: usize, x: f64) -> CMatrix {
    let mut acc = zeros(m);
    for c in coeffs.iter().rev() {
        acc *= cre(x);
        acc += c;
    }
    acc
}

fn poly_eval_deriv(coeffs: &[CMatrix], m: usize, x: f64) -> CMatrix {
    let mut acc = zeros(m);
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc *= cre(x);
        acc += c * cre(k as f64);
    }
    acc
}

/// Clenshaw recurrence with two rotating buffers; this sits inside every
/// right-hand-side evaluation of the integrator, so it must not allocate
/// per term.
fn clenshaw(coeffs: &[CMatrix], m: usize, t: f64) -> CMatrix {
    if coeffs.is_empty() {
        return zeros(m);
    }
    let two_t = cre(2.0 * t);
    let mut b1 = zeros(m);
    let mut b2 = zeros(m);
    for c in coeffs.iter().skip(1).rev() {
        let (b1s, b2s) = (b1.as_mut_slice(), b2.as_mut_slice());
        for ((e1, e2), ce) in b1s.iter_mut().zip(b2s).zip(c.as_slice()) {
            let next = two_t * *e1 - *e2 + ce;
            *e2 = *e1;
            *e1 = next;
        }
    }
    let mut out = coeffs[0].clone();
    let tt = cre(t);
    for ((o, e1), e2) in out
        .as_mut_slice()
        .iter_mut()
        .zip(b1.as_slice())
        .zip(b2.as_slice())
    {
        *o += tt * e1 - e2;
    }
    out
}

/// Chebyshev coefficients of d/dt of `sum c_k T_k(t)`.
fn cheb_derivative(coeffs: &[CMatrix], m: usize) -> Vec<CMatrix> {
    let n = coeffs.len();
    if n <= 1 {
        return Vec::new();
    }
    let mut d = vec![zeros(m); n - 1];
    d[n - 2] = &coeffs[n - 1] * cre(2.0 * (n - 1) as f64);
    if n >= 3 {
        for k in (0..=n - 3).rev() {
            let mut acc = &coeffs[k + 1] * cre(2.0 * (k + 1) as f64);
            if k + 2 < n - 1 {
                acc += &d[k + 2];
            }
            d[k] = acc;
        }
    }
    d[0] /= cre(2.0);
    d
}

/// Natural cubic spline second derivatives via the Thomas algorithm with
/// matrix-valued right-hand sides.
fn natural_spline_second_derivatives(x: &[f64], v: &[CMatrix], m: usize) -> Vec<CMatrix> {
    let n = x.len();
    let mut second = vec![zeros(m); n];
    if n <= 2 {
        return second;
    }
    let interior = n - 2;
    let mut diag = vec![0.0; interior];
    let mut upper = vec![0.0; interior];
    let mut rhs: Vec<CMatrix> = Vec::with_capacity(interior);
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i - 1] = (h0 + h1) / 3.0;
        upper[i - 1] = h1 / 6.0;
        let r = (&v[i + 1] - &v[i]) * cre(1.0 / h1) - (&v[i] - &v[i - 1]) * cre(1.0 / h0);
        rhs.push(r);
    }
    // forward sweep; sub-diagonal entry for row i is h_i/6 = upper of previous row
    let mut cprime = vec![0.0; interior];
    cprime[0] = upper[0] / diag[0];
    rhs[0] = rhs[0].clone() * cre(1.0 / diag[0]);
    for i in 1..interior {
        let sub = (x[i + 1] - x[i]) / 6.0;
        let denom = diag[i] - sub * cprime[i - 1];
        cprime[i] = upper[i] / denom;
        let r = (rhs[i].clone() - rhs[i - 1].clone() * cre(sub)) * cre(1.0 / denom);
        rhs[i] = r;
    }
    second[interior] = rhs[interior - 1].clone();
    for i in (0..interior - 1).rev() {
        second[i + 1] = rhs[i].clone() - second[i + 2].clone() * cre(cprime[i]);
    }
    second
}

fn spline_eval(x: &[f64], v: &[CMatrix], second: &[CMatrix], xq: f64) -> (CMatrix, CMatrix) {
    let n = x.len();
    let i = match x.binary_search_by(|g| g.partial_cmp(&xq).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.clamp(1, n - 1) - 1,
    };
    let h = x[i + 1] - x[i];
    let a = (x[i + 1] - xq) / h;
    let b = (xq - x[i]) / h;
    let value = &v[i] * cre(a)
        + &v[i + 1] * cre(b)
        + &second[i] * cre((a * a * a - a) * h * h / 6.0)
        + &second[i + 1] * cre((b * b * b - b) * h * h / 6.0);
    let deriv = (&v[i + 1] - &v[i]) * cre(1.0 / h)
        + &second[i] * cre(-(3.0 * a * a - 1.0) * h / 6.0)
        + &second[i + 1] * cre((3.0 * b * b - 1.0) * h / 6.0);
    (value, deriv)
}

/// Fits a Chebyshev interpolant of degree `n` through the Chebyshev-Lobatto
/// nodes of [0, pi]. Used to ingest analytically-defined coefficients
/// (e.g. trigonometric polynomials) with spectral accuracy.
pub fn cheb_fit<F>(m: usize, n: usize, f: F) -> Result<Vec<CMatrix>>
where
    F: Fn(f64) -> CMatrix,
{
    assert!(n >= 1);
    let samples: Vec<CMatrix> = (0..=n)
        .map(|k| {
            let t = (k as f64 * PI / n as f64).cos();
            f(PI * (t + 1.0) / 2.0)
        })
        .collect();
    for s in &samples {
        require_square(s, m)?;
    }
    let mut coeffs = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut acc = zeros(m);
        for (k, s) in samples.iter().enumerate() {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += s * cre(w * (j as f64 * k as f64 * PI / n as f64).cos());
        }
        acc *= cre(2.0 / n as f64);
        if j == 0 || j == n {
            acc *= cre(0.5);
        }
        coeffs.push(acc);
    }
    Ok(coeffs)
}
