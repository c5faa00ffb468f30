//! JSON schema for pencil configuration files.
//!
//! Complex scalars are `[re, im]` pairs; matrices are m x m arrays of pairs;
//! polynomial and Chebyshev payloads are lists of matrices ordered by degree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix};
use crate::pencil::{CoefficientFunction, Pencil};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PencilConfig {
    pub m: usize,
    #[serde(rename = "Q1")]
    pub q1: CoeffConfig,
    #[serde(rename = "Q0")]
    pub q0: CoeffConfig,
    pub h0: MatrixJson,
    pub h1: MatrixJson,
    #[serde(rename = "H0")]
    pub big_h0: MatrixJson,
    #[serde(rename = "H1")]
    pub big_h1: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum CoeffConfig {
    #[serde(rename = "poly")]
    Poly {
        coeffs: Vec<MatrixJson>,
        #[serde(default = "default_true")]
        derivative: bool,
    },
    #[serde(rename = "cheb")]
    Cheb {
        coeffs: Vec<MatrixJson>,
        #[serde(default = "default_true")]
        derivative: bool,
    },
    #[serde(rename = "grid")]
    Grid {
        x: Vec<f64>,
        values: Vec<MatrixJson>,
        #[serde(default = "default_true")]
        derivative: bool,
    },
}

fn default_true() -> bool {
    true
}

pub fn matrix_from_json(m: usize, data: &MatrixJson) -> Result<CMatrix> {
    if data.len() != m || data.iter().any(|row| row.len() != m) {
        return Err(Error::Config(format!(
            "matrix must be {m}x{m} of [re, im] pairs"
        )));
    }
    Ok(CMatrix::from_fn(m, m, |j, k| {
        c64(data[j][k][0], data[j][k][1])
    }))
}

pub fn matrix_to_json(a: &CMatrix) -> MatrixJson {
    (0..a.nrows())
        .map(|j| {
            (0..a.ncols())
                .map(|k| [a[(j, k)].re, a[(j, k)].im])
                .collect()
        })
        .collect()
}

fn coeff_from_config(m: usize, cfg: &CoeffConfig) -> Result<CoefficientFunction> {
    let f = match cfg {
        CoeffConfig::Poly { coeffs, derivative } => {
            let mats = coeffs
                .iter()
                .map(|c| matrix_from_json(m, c))
                .collect::<Result<Vec<_>>>()?;
            let f = CoefficientFunction::poly(m, mats)?;
            if *derivative {
                f
            } else {
                f.without_derivative()
            }
        }
        CoeffConfig::Cheb { coeffs, derivative } => {
            let mats = coeffs
                .iter()
                .map(|c| matrix_from_json(m, c))
                .collect::<Result<Vec<_>>>()?;
            let f = CoefficientFunction::cheb(m, mats)?;
            if *derivative {
                f
            } else {
                f.without_derivative()
            }
        }
        CoeffConfig::Grid {
            x,
            values,
            derivative,
        } => {
            let mats = values
                .iter()
                .map(|c| matrix_from_json(m, c))
                .collect::<Result<Vec<_>>>()?;
            let f = CoefficientFunction::grid(m, x.clone(), mats)?;
            if *derivative {
                f
            } else {
                f.without_derivative()
            }
        }
    };
    Ok(f)
}

fn coeff_to_config(f: &CoefficientFunction) -> CoeffConfig {
    let derivative = f.derivative_available();
    match (f.rep_name(), f.rep_parts()) {
        ("poly", (Some(coeffs), _)) => CoeffConfig::Poly {
            coeffs: coeffs.iter().map(matrix_to_json).collect(),
            derivative,
        },
        ("cheb", (Some(coeffs), _)) => CoeffConfig::Cheb {
            coeffs: coeffs.iter().map(matrix_to_json).collect(),
            derivative,
        },
        (_, (_, Some((x, values)))) => CoeffConfig::Grid {
            x: x.to_vec(),
            values: values.iter().map(matrix_to_json).collect(),
            derivative,
        },
        _ => unreachable!("representation always exposes its payload"),
    }
}

impl PencilConfig {
    pub fn to_pencil(&self) -> Result<Pencil> {
        Pencil::new(
            self.m,
            coeff_from_config(self.m, &self.q1)?,
            coeff_from_config(self.m, &self.q0)?,
            matrix_from_json(self.m, &self.h0)?,
            matrix_from_json(self.m, &self.h1)?,
            matrix_from_json(self.m, &self.big_h0)?,
            matrix_from_json(self.m, &self.big_h1)?,
        )
    }

    pub fn from_pencil(p: &Pencil) -> Self {
        Self {
            m: p.dim(),
            q1: coeff_to_config(p.q1()),
            q0: coeff_to_config(p.q0()),
            h0: matrix_to_json(p.h0()),
            h1: matrix_to_json(p.h1()),
            big_h0: matrix_to_json(p.big_h0()),
            big_h1: matrix_to_json(p.big_h1()),
        }
    }
}

pub fn pencil_from_json(s: &str) -> Result<Pencil> {
    let cfg: PencilConfig =
        serde_json::from_str(s).map_err(|e| Error::Config(format!("bad pencil JSON: {e}")))?;
    cfg.to_pencil()
}

pub fn pencil_to_json(p: &Pencil) -> String {
    serde_json::to_string_pretty(&PencilConfig::from_pencil(p))
        .expect("pencil config serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn round_trip_through_json() {
        let json = r#"{
            "m": 2,
            "Q1": {"type": "poly", "coeffs": [[[[0.1, 0.0], [0.0, 0.2]], [[0.0, 0.0], [0.3, 0.0]]]]},
            "Q0": {"type": "grid", "x": [0.0, 1.0, 3.141592653589793],
                   "values": [[[[0,0],[0,0]],[[0,0],[0,0]]],
                              [[[1,0],[0,0]],[[0,0],[1,0]]],
                              [[[0,0],[0,0]],[[0,0],[0,0]]]]},
            "h0": [[[0,0],[0,0]],[[0,0],[0,0]]],
            "h1": [[[0.5,0],[0,0]],[[0,0],[-0.5,0]]],
            "H0": [[[0,0],[0,0]],[[0,0],[0,0]]],
            "H1": [[[0,0],[0,0]],[[0,0],[0,0]]]
        }"#;
        let p = pencil_from_json(json).unwrap();
        assert!(p.validate().is_valid());
        let back = pencil_from_json(&pencil_to_json(&p)).unwrap();
        let q1a = p.q1().eval(0.7).unwrap();
        let q1b = back.q1().eval(0.7).unwrap();
        assert_eq!(q1a, q1b);
    }

    #[test]
    fn rejects_nonsquare_matrix() {
        let json = r#"{
            "m": 2,
            "Q1": {"type": "poly", "coeffs": []},
            "Q0": {"type": "poly", "coeffs": []},
            "h0": [[[0,0]]],
            "h1": [[[0,0],[0,0]],[[0,0],[0,0]]],
            "H0": [[[0,0],[0,0]],[[0,0],[0,0]]],
            "H1": [[[0,0],[0,0]],[[0,0],[0,0]]]
        }"#;
        assert!(pencil_from_json(json).is_err());
    }

    #[test]
    fn rejects_grid_not_covering_interval() {
        let cfg = PencilConfig {
            m: 1,
            q1: CoeffConfig::Grid {
                x: vec![0.0, 1.0],
                values: vec![vec![vec![[0.0, 0.0]]], vec![vec![[0.0, 0.0]]]],
                derivative: true,
            },
            q0: CoeffConfig::Poly {
                coeffs: vec![],
                derivative: true,
            },
            h0: vec![vec![[0.0, 0.0]]],
            h1: vec![vec![[0.0, 0.0]]],
            big_h0: vec![vec![[0.0, 0.0]]],
            big_h1: vec![vec![[0.0, 0.0]]],
        };
        assert!(cfg.to_pencil().is_err());
        let _ = PI;
    }
}
