//! Seeded random pencils for property suites and the CLI.
//!
//! Q1, Q0 are random trigonometric matrix polynomials ingested as Chebyshev
//! series (machine-accurate, analytically differentiable), with sup norms
//! scaled to the requested bounds. A hand-rolled SplitMix64 keeps output
//! byte-identical across platforms and toolchain updates.

use num_complex::Complex64;

use crate::linalg::{c64, cre, mat_norm, zeros, CMatrix};
use crate::pencil::{cheb_fit, CoefficientFunction, Pencil};

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn complex_in_square(&mut self, half_side: f64) -> Complex64 {
        c64(
            self.range(-half_side, half_side),
            self.range(-half_side, half_side),
        )
    }

    fn matrix(&mut self, m: usize, half_side: f64) -> CMatrix {
        let entries: Vec<Complex64> = (0..m * m)
            .map(|_| self.complex_in_square(half_side))
            .collect();
        CMatrix::from_row_slice(m, m, &entries)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RandomPencilParams {
    pub m: usize,
    /// Upper bound for sup_x ||Q1(x)||.
    pub q1_norm: f64,
    pub q0_norm: f64,
    pub h0_norm: f64,
    /// Must stay < 1 so that det(I +- h1) is bounded away from zero.
    pub h1_norm: f64,
    pub big_h0_norm: f64,
    pub big_h1_norm: f64,
    /// Trigonometric degree of the random coefficients.
    pub degree: usize,
}

impl Default for RandomPencilParams {
    fn default() -> Self {
        Self {
            m: 2,
            q1_norm: 1.5,
            q0_norm: 1.0,
            h0_norm: 0.5,
            h1_norm: 0.4,
            big_h0_norm: 0.5,
            big_h1_norm: 0.3,
            degree: 2,
        }
    }
}

impl RandomPencilParams {
    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_q1_norm(mut self, v: f64) -> Self {
        self.q1_norm = v;
        self
    }

    pub fn with_h1_norm(mut self, v: f64) -> Self {
        self.h1_norm = v;
        self
    }
}

const CHEB_TERMS: usize = 32;

fn random_trig_coefficient(
    rng: &mut SplitMix64,
    m: usize,
    degree: usize,
    target_norm: f64,
) -> CoefficientFunction {
    let a0 = rng.matrix(m, 0.5);
    let cos_coeffs: Vec<CMatrix> = (0..degree).map(|_| rng.matrix(m, 1.0)).collect();
    let sin_coeffs: Vec<CMatrix> = (0..degree).map(|_| rng.matrix(m, 1.0)).collect();
    let raw = move |x: f64| {
        let mut acc = a0.clone();
        for k in 1..=degree {
            acc += &cos_coeffs[k - 1] * cre((k as f64 * x).cos())
                + &sin_coeffs[k - 1] * cre((k as f64 * x).sin());
        }
        acc
    };
    // scale so the sup norm lands in [0.4, 1.0] * target
    let fraction = rng.range(0.4, 1.0);
    let mut sup = 0.0f64;
    for i in 0..=64 {
        sup = sup.max(mat_norm(&raw(std::f64::consts::PI * i as f64 / 64.0)));
    }
    let scale = if sup > 0.0 {
        target_norm * fraction / sup
    } else {
        0.0
    };
    let coeffs = cheb_fit(m, CHEB_TERMS, |x| raw(x) * cre(scale))
        .expect("chebyshev fit of a trig polynomial cannot fail");
    CoefficientFunction::cheb(m, coeffs).expect("consistent dimensions")
}

fn random_bounded_matrix(rng: &mut SplitMix64, m: usize, target_norm: f64) -> CMatrix {
    if target_norm == 0.0 {
        return zeros(m);
    }
    let raw = rng.matrix(m, 1.0);
    let n = mat_norm(&raw);
    let fraction = rng.range(0.4, 1.0);
    if n > 0.0 {
        raw * cre(target_norm * fraction / n)
    } else {
        raw
    }
}

/// Deterministic random admissible pencil. The h1/H1 norms below 1 keep
/// every det(I +- h1), det(I +- H1) away from zero.
pub fn random_pencil(seed: u64, params: &RandomPencilParams) -> Pencil {
    assert!(params.h1_norm < 1.0 && params.big_h1_norm < 1.0);
    let mut rng = SplitMix64::new(seed);
    let m = params.m;
    let q1 = random_trig_coefficient(&mut rng, m, params.degree, params.q1_norm);
    let q0 = random_trig_coefficient(&mut rng, m, params.degree, params.q0_norm);
    let h0 = random_bounded_matrix(&mut rng, m, params.h0_norm);
    let h1 = random_bounded_matrix(&mut rng, m, params.h1_norm);
    let big_h0 = random_bounded_matrix(&mut rng, m, params.big_h0_norm);
    let big_h1 = random_bounded_matrix(&mut rng, m, params.big_h1_norm);
    Pencil::new(m, q1, q0, h0, h1, big_h0, big_h1).expect("generated pencil is well-formed")
}
