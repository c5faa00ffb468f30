//! Adaptive Dormand-Prince 5(4) stepping over complex state vectors.
//!
//! The marcher lands exactly on the requested output nodes, so node values
//! carry no interpolation error.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cre, CVector};

/// Right-hand side of a first-order system y' = f(x, y).
pub trait OdeRhs {
    fn dim(&self) -> usize;
    fn eval(&self, x: f64, y: &CVector, out: &mut CVector) -> Result<()>;
}

/// Reverses the independent variable: marching g(s) = f(-s) forward in s
/// integrates f backward in x. Keeps a single forward-marching code path.
pub struct Flipped<'a, F: OdeRhs>(pub &'a F);

impl<F: OdeRhs> OdeRhs for Flipped<'_, F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, s: f64, y: &CVector, out: &mut CVector) -> Result<()> {
        self.0.eval(-s, y, out)?;
        out.neg_mut();
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

const STAGES: usize = 7;

const A: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const C: [f64; STAGES] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

/// Difference between the 5th and the embedded 4th order weights.
const E: [f64; STAGES] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Integrates from nodes[0] through every node, returning the state at each
/// node (including the first). Nodes must be strictly increasing.
pub fn march<F: OdeRhs>(
    rhs: &F,
    y0: &CVector,
    nodes: &[f64],
    ctl: &StepControl,
) -> Result<Vec<CVector>> {
    assert!(nodes.len() >= 2, "need at least the two endpoints");
    assert!(
        nodes.windows(2).all(|w| w[1] > w[0]),
        "output nodes must be strictly increasing"
    );
    let n = rhs.dim();
    let span = nodes[nodes.len() - 1] - nodes[0];
    let h_floor = span * 1e-14 + f64::MIN_POSITIVE;

    let mut k: Vec<CVector> = (0..STAGES).map(|_| CVector::zeros(n)).collect();
    let mut y = y0.clone();
    let mut ytmp = CVector::zeros(n);
    let mut ynew = CVector::zeros(n);
    let mut x = nodes[0];

    let mut out = Vec::with_capacity(nodes.len());
    out.push(y.clone());

    rhs.eval(x, &y, &mut k[0])?;
    let mut h = initial_step(&y, &k[0], ctl, span);
    let mut steps = 0usize;
    let mut last_rejected = false;

    for &target in &nodes[1..] {
        while x < target {
            steps += 1;
            if steps > ctl.max_steps {
                return Err(Error::TooManySteps {
                    max_steps: ctl.max_steps,
                });
            }
            let mut h_try = h.min(ctl.max_step);
            let hitting_node = x + h_try >= target - h_floor;
            if hitting_node {
                h_try = target - x;
            }
            if h_try < h_floor {
                return Err(Error::StepSizeUnderflow { x, h: h_try });
            }

            // stages 2..7; k[0] always holds f(x, y)
            for s in 1..STAGES {
                ytmp.copy_from(&y);
                for (j, k_j) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        ytmp.axpy(cre(h_try * a), k_j, Complex64::new(1.0, 0.0));
                    }
                }
                if s == STAGES - 1 {
                    ynew.copy_from(&ytmp);
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                rhs.eval(x + C[s] * h_try, &ytmp, &mut tail[0])?;
            }

            let err = error_norm(&y, &ynew, &k, h_try, ctl);
            if err <= 1.0 {
                x = if hitting_node { target } else { x + h_try };
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6); // FSAL: stage 7 is f at the accepted point
                let mut fac = SAFETY * err.powf(-0.2);
                fac = fac.clamp(FAC_MIN, if last_rejected { 1.0 } else { FAC_MAX });
                h = h_try * fac;
                last_rejected = false;
            } else {
                let fac = (SAFETY * err.powf(-0.2)).max(FAC_MIN);
                h = h_try * fac;
                last_rejected = true;
                if h < h_floor {
                    return Err(Error::StepSizeUnderflow { x, h });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn error_norm(y: &CVector, ynew: &CVector, k: &[CVector], h: f64, ctl: &StepControl) -> f64 {
    let n = y.len();
    let mut acc = 0.0f64;
    for i in 0..n {
        let mut e = Complex64::new(0.0, 0.0);
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                e += kj[i] * cre(h * E[j]);
            }
        }
        let sc = ctl.atol + ctl.rtol * y[i].norm().max(ynew[i].norm());
        let r = e.norm() / sc;
        if !r.is_finite() {
            return f64::INFINITY;
        }
        acc += r * r;
    }
    (acc / n as f64).sqrt()
}

fn initial_step(y0: &CVector, f0: &CVector, ctl: &StepControl, span: f64) -> f64 {
    let n = y0.len() as f64;
    let d0 = (y0.iter().map(|z| z.norm_sqr()).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().map(|z| z.norm_sqr()).sum::<f64>() / n).sqrt();
    let guess = if d1 > 1e-10 * d0.max(1.0) {
        0.01 * (d0.max(ctl.atol)) / d1
    } else {
        span / 100.0
    };
    guess.min(ctl.max_step).min(span / 10.0).max(span * 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    struct Harmonic {
        omega: f64,
    }

    impl OdeRhs for Harmonic {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, _x: f64, y: &CVector, out: &mut CVector) -> Result<()> {
            out[0] = y[1];
            out[1] = -cre(self.omega * self.omega) * y[0];
            Ok(())
        }
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let rhs = Harmonic { omega: 3.0 };
        let y0 = CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let nodes: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let ctl = StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.125,
            max_steps: 1_000_000,
        };
        let out = march(&rhs, &y0, &nodes, &ctl).unwrap();
        for (i, y) in out.iter().enumerate() {
            let x = nodes[i];
            assert!((y[0].re - (3.0 * x).cos()).abs() < 1e-9, "node {i}");
            assert!((y[1].re + 3.0 * (3.0 * x).sin()).abs() < 1e-8, "node {i}");
        }
    }

    #[test]
    fn flipped_matches_analytic_backward() {
        // y' = y integrated backward from x = 1 to 0 with y(1) = e
        struct Exp;
        impl OdeRhs for Exp {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, _x: f64, y: &CVector, out: &mut CVector) -> Result<()> {
                out[0] = y[0];
                Ok(())
            }
        }
        let rhs = Exp;
        let flipped = Flipped(&rhs);
        let y0 = CVector::from_vec(vec![c64(1.0f64.exp(), 0.0)]);
        // backward x: 1 -> 0 becomes forward s: -1 -> 0
        let nodes = vec![-1.0, -0.5, 0.0];
        let ctl = StepControl {
            rtol: 1e-12,
            atol: 1e-14,
            max_step: 0.5,
            max_steps: 100_000,
        };
        let out = march(&flipped, &y0, &nodes, &ctl).unwrap();
        assert!((out[2][0].re - 1.0).abs() < 1e-10);
        assert!((out[1][0].re - 0.5f64.exp()).abs() < 1e-10);
    }
}
