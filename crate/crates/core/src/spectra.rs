//! Eigenvalue location by the argument principle, Newton refinement,
//! residue-matrix extraction, and the h1 recovery from M-asymptotics.
//!
//! Multiplicity always comes from the winding number of an isolating
//! contour, never from Newton convergence order; the double zero of the
//! free pencil at rho = 0 is the canonical case.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::asympt::{fit_loglog, SectorRay, SectorSign};
use crate::error::{Error, Result};
use crate::fundamental::{char_function, weyl_point_via_psi};
use crate::linalg::{cre, identity, inverse, mat_norm, CMatrix, I};
use crate::ode::IntegrationSettings;
use crate::pencil::Pencil;

/// Default number of contour nodes before adaptive doubling.
pub const DEFAULT_NODES: usize = 256;
/// Minimal admissible node count.
pub const MIN_NODES: usize = 64;
/// Cells smaller than this are reported as one (possibly multiple) record.
pub const MIN_CELL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum Contour {
    Circle {
        center: Complex64,
        radius: f64,
        nodes: usize,
    },
    Rect {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        nodes: usize,
    },
}

impl Contour {
    pub fn circle(center: Complex64, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::Config("contour radius must be positive".into()));
        }
        Ok(Contour::Circle {
            center,
            radius,
            nodes: DEFAULT_NODES,
        })
    }

    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::Config("rectangle must be nonempty".into()));
        }
        Ok(Contour::Rect {
            x0,
            x1,
            y0,
            y1,
            nodes: DEFAULT_NODES,
        })
    }

    pub fn with_nodes(mut self, n: usize) -> Self {
        let n = n.max(MIN_NODES);
        match &mut self {
            Contour::Circle { nodes, .. } | Contour::Rect { nodes, .. } => *nodes = n,
        }
        self
    }

    fn nodes(&self) -> usize {
        match self {
            Contour::Circle { nodes, .. } | Contour::Rect { nodes, .. } => *nodes,
        }
    }

    /// Point at parameter fraction t in [0, 1), walked counterclockwise.
    fn point(&self, t: f64) -> Complex64 {
        match self {
            Contour::Circle { center, radius, .. } => {
                center + Complex64::from_polar(*radius, 2.0 * PI * t)
            }
            Contour::Rect { x0, x1, y0, y1, .. } => {
                let w = x1 - x0;
                let h = y1 - y0;
                let perim = 2.0 * (w + h);
                let mut d = t * perim;
                if d < w {
                    return Complex64::new(x0 + d, *y0);
                }
                d -= w;
                if d < h {
                    return Complex64::new(*x1, y0 + d);
                }
                d -= h;
                if d < w {
                    return Complex64::new(x1 - d, *y1);
                }
                d -= w;
                Complex64::new(*x0, y1 - d)
            }
        }
    }
}

/// Zero count of Delta inside the contour by phase accumulation, doubling
/// the nodes until every phase step is below pi/2 and the winding is close
/// to an integer.
pub fn count_zeros(p: &Pencil, c: &Contour, s: &IntegrationSettings) -> Result<usize> {
    count_zeros_capped(p, c, s, 32768)
}

fn count_zeros_capped(
    p: &Pencil,
    c: &Contour,
    s: &IntegrationSettings,
    max_nodes: usize,
) -> Result<usize> {
    let mut n = c.nodes().max(MIN_NODES);
    // every Delta evaluation on the contour is independent
    let mut vals: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|k| char_function(p, c.point(k as f64 / n as f64), s))
        .collect::<Result<_>>()?;
    loop {
        let max_abs = vals.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let min_abs = vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if min_abs.is_nan() || max_abs.is_nan() || min_abs <= 1e-8 * max_abs {
            return Err(Error::ZeroOnContour { min_abs });
        }
        let mut total = 0.0f64;
        let mut resolved = true;
        for k in 0..n {
            let step = (vals[(k + 1) % n] / vals[k]).arg();
            if step.abs() > PI / 2.0 {
                resolved = false;
                break;
            }
            total += step;
        }
        if resolved {
            let w = total / (2.0 * PI);
            let rounded = w.round();
            if (w - rounded).abs() < 0.25 && rounded >= 0.0 {
                return Ok(rounded as usize);
            }
        }
        if n >= max_nodes {
            return Err(Error::WindingUnstable { nodes: n });
        }
        // double, reusing every existing node as an even index
        let fresh: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|k| {
                let frac = (2 * k + 1) as f64 / (2 * n) as f64;
                char_function(p, c.point(frac), s)
            })
            .collect::<Result<_>>()?;
        let mut next = Vec::with_capacity(2 * n);
        for (v, f) in vals.iter().zip(&fresh) {
            next.push(*v);
            next.push(*f);
        }
        vals = next;
        n *= 2;
    }
}

/// An eigenvalue with its argument-principle multiplicity; residues are
/// attached separately by [`residue_matrices`].
#[derive(Debug, Clone)]
pub struct SpectralRecord {
    pub rho: Complex64,
    pub multiplicity: usize,
    pub residues: Vec<CMatrix>,
    pub delta_residual: f64,
}

/// All zeros of Delta in the rectangle [x0, x1] x [y0, y1], each with its
/// isolating-contour multiplicity. Clusters unresolved below cell size 1e-6
/// come back as a single record with the summed multiplicity.
pub fn locate_eigenvalues(
    p: &Pencil,
    region: (f64, f64, f64, f64),
    s: &IntegrationSettings,
) -> Result<Vec<SpectralRecord>> {
    let (x0, x1, y0, y1) = region;
    let diag = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
    // the outer boundary is jittered outward if a zero sits on it
    let mut expand = 0.0;
    let mut last_err = None;
    for attempt in 0..8 {
        let rect = [x0 - expand, x1 + expand, y0 - expand, y1 + expand];
        let contour = Contour::rect(rect[0], rect[1], rect[2], rect[3])?.with_nodes(128);
        match count_zeros(p, &contour, s) {
            Ok(count) => {
                let mut out = Vec::new();
                subdivide(p, rect, count, s, &mut out)?;
                out.sort_by(|a, b| {
                    (a.rho.re, a.rho.im)
                        .partial_cmp(&(b.rho.re, b.rho.im))
                        .unwrap()
                });
                return Ok(out);
            }
            Err(e @ Error::ZeroOnContour { .. }) => {
                last_err = Some(e);
                expand = 1e-6 * (1.0 + diag) * (attempt + 1) as f64;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

fn subdivide(
    p: &Pencil,
    rect: [f64; 4],
    count: usize,
    s: &IntegrationSettings,
    out: &mut Vec<SpectralRecord>,
) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    let [x0, x1, y0, y1] = rect;
    let diam = (x1 - x0).max(y1 - y0);
    let center = Complex64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));

    if count == 1 {
        if let Some((root, residual)) = newton_refine(p, center, rect, s)? {
            out.push(SpectralRecord {
                rho: root,
                multiplicity: 1,
                residues: Vec::new(),
                delta_residual: residual,
            });
            return Ok(());
        }
        // Newton diverged: shrink the cell around the zero instead
    }

    if diam < MIN_CELL {
        let residual = char_function(p, center, s)?.norm();
        out.push(SpectralRecord {
            rho: center,
            multiplicity: count,
            residues: Vec::new(),
            delta_residual: residual,
        });
        return Ok(());
    }

    // Split into four children through jittered cuts; children must account
    // for every zero of the parent. The cuts are ours to place, so the
    // fallback offsets are percent-scale: a cut grazing a zero forces the
    // phase resolution (and the node count) through the roof.
    const JITTER: [f64; 8] = [0.0, 0.021, -0.021, 0.047, -0.047, 0.013, -0.013, 0.033];
    'attempt: for &j in &JITTER {
        let mx = 0.5 * (x0 + x1) + j * (x1 - x0);
        let my = 0.5 * (y0 + y1) + j * (y1 - y0);
        let children = [
            [x0, mx, y0, my],
            [mx, x1, y0, my],
            [x0, mx, my, y1],
            [mx, x1, my, y1],
        ];
        // the four cells are independent
        let results: Vec<Result<usize>> = children
            .par_iter()
            .map(|ch| {
                let contour = Contour::rect(ch[0], ch[1], ch[2], ch[3])?.with_nodes(MIN_NODES);
                count_zeros_capped(p, &contour, s, 4096)
            })
            .collect();
        let mut counts = [0usize; 4];
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(c) => counts[i] = c,
                Err(Error::ZeroOnContour { .. }) | Err(Error::WindingUnstable { .. }) => {
                    continue 'attempt
                }
                Err(e) => return Err(e),
            }
        }
        if counts.iter().sum::<usize>() != count {
            continue 'attempt;
        }
        for (ch, c) in children.iter().zip(counts) {
            subdivide(p, *ch, c, s, out)?;
        }
        return Ok(());
    }
    Err(Error::WindingUnstable { nodes: MIN_NODES })
}

/// Newton iteration on Delta with a central-difference derivative.
/// Returns None on divergence (caller falls back to contour shrinking).
fn newton_refine(
    p: &Pencil,
    start: Complex64,
    rect: [f64; 4],
    s: &IntegrationSettings,
) -> Result<Option<(Complex64, f64)>> {
    let [x0, x1, y0, y1] = rect;
    let margin = 0.6 * ((x1 - x0) + (y1 - y0));
    let mut z = start;
    for _ in 0..60 {
        let fz = char_function(p, z, s)?;
        let h = 1e-6 * (1.0 + z.norm());
        let d =
            (char_function(p, z + cre(h), s)? - char_function(p, z - cre(h), s)?) / cre(2.0 * h);
        if d.norm() < 1e-300 {
            return Ok(None);
        }
        let step = -fz / d;
        z += step;
        if z.re < x0 - margin || z.re > x1 + margin || z.im < y0 - margin || z.im > y1 + margin {
            return Ok(None);
        }
        if step.norm() <= 1e-10 * (1.0 + z.norm()) {
            let residual = char_function(p, z, s)?.norm();
            return Ok(Some((z, residual)));
        }
    }
    Ok(None)
}

/// Laurent coefficients M_{n nu} = (2 pi i)^-1 contour-int M(rho)
/// (rho - rho_n)^{nu-1} d rho for nu = 1..mult, by trapezoidal quadrature on
/// a circle, Richardson-checked by node doubling.
pub fn residue_matrices(
    p: &Pencil,
    rho_n: Complex64,
    mult: usize,
    radius: f64,
    s: &IntegrationSettings,
) -> Result<Vec<CMatrix>> {
    if mult == 0 || mult > 3 {
        return Err(Error::MultiplicityTooHigh { mult });
    }
    let isolating = Contour::circle(rho_n, radius)?.with_nodes(MIN_NODES);
    let count = count_zeros(p, &isolating, s)?;
    if count != mult {
        return Err(Error::PoleNotIsolated {
            rho: rho_n,
            count,
            expected: mult,
        });
    }

    let m = p.dim();
    let eval_ring = |n: usize, have: &[CMatrix]| -> Result<Vec<CMatrix>> {
        // reuse previous values at even indices when doubling;
        // fresh ring points are independent M evaluations
        let fresh: Vec<(usize, CMatrix)> = (0..n)
            .into_par_iter()
            .filter(|k| have.is_empty() || k % 2 == 1)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / n as f64;
                let z = rho_n + Complex64::from_polar(radius, theta);
                Ok((k, weyl_point_via_psi(p, z, s)?))
            })
            .collect::<Result<_>>()?;
        let mut fresh_iter = fresh.into_iter();
        let mut vals = Vec::with_capacity(n);
        for k in 0..n {
            if !have.is_empty() && k % 2 == 0 {
                vals.push(have[k / 2].clone());
            } else {
                let (kk, v) = fresh_iter.next().expect("fresh ring value");
                debug_assert_eq!(kk, k);
                vals.push(v);
            }
        }
        Ok(vals)
    };
    let coeffs = |vals: &[CMatrix]| -> Vec<CMatrix> {
        let n = vals.len();
        (1..=mult)
            .map(|nu| {
                let mut acc = CMatrix::zeros(m, m);
                for (k, v) in vals.iter().enumerate() {
                    let theta = 2.0 * PI * k as f64 / n as f64;
                    acc += v * (I * cre(0.0) + Complex64::from_polar(1.0, nu as f64 * theta));
                }
                acc * cre(radius.powi(nu as i32) / n as f64)
            })
            .collect()
    };

    let mut n = MIN_NODES;
    let mut vals = eval_ring(n, &[])?;
    let mut current = coeffs(&vals);
    loop {
        if n >= 4096 {
            return Err(Error::QuadratureNotConverged {
                last_change: f64::NAN,
            });
        }
        n *= 2;
        vals = eval_ring(n, &vals)?;
        let next = coeffs(&vals);
        let change = current
            .iter()
            .zip(&next)
            .map(|(a, b)| mat_norm(&(a - b)))
            .fold(0.0f64, f64::max);
        current = next;
        if change <= 1e-8 {
            return Ok(current);
        }
    }
}

/// The two sector limits of +-i rho M(rho) and the h1 they imply.
#[derive(Debug, Clone)]
pub struct H1Estimate {
    pub h1: CMatrix,
    /// Disagreement between the Theta+ and Theta- derivations.
    pub gap: f64,
    pub limit_plus: CMatrix,
    pub limit_minus: CMatrix,
    pub slope_plus: f64,
    pub slope_minus: f64,
}

/// Richardson-extrapolates i rho M(rho) -> (I + h1)^-1 along ray_plus and
/// -i rho M(rho) -> (I - h1)^-1 along ray_minus, inverts both limits and
/// solves for h1. The gap between the two derived h1 values is the
/// consistency estimate.
pub fn estimate_h1_from_m(
    p: &Pencil,
    ray_plus: &SectorRay,
    ray_minus: &SectorRay,
    s: &IntegrationSettings,
) -> Result<H1Estimate> {
    for (ray, want) in [(ray_plus, SectorSign::Plus), (ray_minus, SectorSign::Minus)] {
        if ray.sign != want {
            return Err(Error::InvalidRay(format!(
                "expected a {want:?}-sector ray, got {:?}",
                ray.sign
            )));
        }
        if ray.delta < PI / 6.0 - 1e-12 {
            return Err(Error::InvalidRay(format!(
                "delta = {} below the required pi/6",
                ray.delta
            )));
        }
        if *ray.moduli.last().unwrap() < 50.0 {
            return Err(Error::InvalidRay(
                "sample moduli must reach at least 50".into(),
            ));
        }
    }

    let limit_along = |ray: &SectorRay, sign: f64| -> Result<(CMatrix, f64)> {
        let samples: Vec<(f64, CMatrix)> = ray
            .rhos()
            .iter()
            .map(|&rho| {
                let m = weyl_point_via_psi(p, rho, s)?;
                Ok((rho.norm(), m * (I * rho * cre(sign))))
            })
            .collect::<Result<_>>()?;
        let n = samples.len();
        let (r1, f1) = &samples[n - 2];
        let (r2, f2) = &samples[n - 1];
        // Richardson on f(r) = A + c/r using the two largest moduli
        let a = (f2 * cre(*r2) - f1 * cre(*r1)) / cre(r2 - r1);
        let decay: Vec<(f64, f64)> = samples
            .iter()
            .map(|(r, f)| (*r, mat_norm(&(f - &a))))
            .collect();
        // a limit reached to working precision has no slope to fit
        let floor = 1e-12 * (1.0 + mat_norm(&a));
        let slope = if decay.iter().all(|(_, d)| *d <= floor) {
            -10.0
        } else {
            fit_loglog(&decay).slope
        };
        Ok((a, slope))
    };

    let (limit_plus, slope_plus) = limit_along(ray_plus, 1.0)?;
    let (limit_minus, slope_minus) = limit_along(ray_minus, -1.0)?;
    for slope in [slope_plus, slope_minus] {
        if slope > -0.5 {
            return Err(Error::NonConvergentLimit { slope });
        }
    }

    let id = identity(p.dim());
    let h1_plus = inverse(&limit_plus, "limit of i rho M")? - &id;
    let h1_minus = &id - inverse(&limit_minus, "limit of -i rho M")?;
    let gap = mat_norm(&(&h1_plus - &h1_minus));
    Ok(H1Estimate {
        h1: (h1_plus + h1_minus) * cre(0.5),
        gap,
        limit_plus,
        limit_minus,
        slope_plus,
        slope_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::pencil::CoefficientFunction;

    fn settings() -> IntegrationSettings {
        IntegrationSettings::default()
    }

    #[test]
    fn count_free_pencil_circle() {
        // Delta = -rho sin(pi rho): zeros 1, 2, 3 inside |rho - 2| < 1.5
        let p = Pencil::zero(1);
        let c = Contour::circle(c64(2.0, 0.0), 1.5).unwrap().with_nodes(64);
        assert_eq!(count_zeros(&p, &c, &settings()).unwrap(), 3);
        let c2 = Contour::circle(c64(0.5, 0.0), 0.2).unwrap().with_nodes(64);
        assert_eq!(count_zeros(&p, &c2, &settings()).unwrap(), 0);
    }

    #[test]
    fn count_diagonal_pencil_doubles() {
        // two decoupled free blocks double every count
        let p = Pencil::zero(2);
        let c = Contour::circle(c64(2.0, 0.0), 1.5).unwrap().with_nodes(64);
        assert_eq!(count_zeros(&p, &c, &settings()).unwrap(), 6);
    }

    #[test]
    fn count_detects_zero_on_contour() {
        let p = Pencil::zero(1);
        // rho = 1 lies exactly on this circle
        let c = Contour::circle(c64(0.0, 0.0), 1.0).unwrap().with_nodes(64);
        assert!(matches!(
            count_zeros(&p, &c, &settings()),
            Err(Error::ZeroOnContour { .. })
        ));
    }

    #[test]
    fn count_additivity_over_quadrants() {
        let p = Pencil::zero(1);
        let s = settings();
        let whole = Contour::rect(0.3, 4.6, -0.9, 0.9).unwrap().with_nodes(64);
        let total = count_zeros(&p, &whole, &s).unwrap();
        let mut parts = 0;
        for (x0, x1) in [(0.3, 2.45), (2.45, 4.6)] {
            for (y0, y1) in [(-0.9, 0.0 - 0.013), (0.0 - 0.013, 0.9)] {
                let c = Contour::rect(x0, x1, y0, y1).unwrap().with_nodes(64);
                parts += count_zeros(&p, &c, &s).unwrap();
            }
        }
        assert_eq!(total, parts);
        assert_eq!(total, 4);
    }

    #[test]
    fn locate_free_pencil_first_ten() {
        let p = Pencil::zero(1);
        let records = locate_eigenvalues(&p, (0.5, 10.5, -1.0, 1.0), &settings()).unwrap();
        assert_eq!(records.len(), 10);
        for (i, r) in records.iter().enumerate() {
            let expect = (i + 1) as f64;
            assert!(
                (r.rho - cre(expect)).norm() < 1e-8,
                "slot {i}: {} vs {expect}",
                r.rho
            );
            assert_eq!(r.multiplicity, 1);
        }
    }

    #[test]
    fn locate_double_zero_at_origin() {
        // Delta ~ -pi rho^2 near 0
        let p = Pencil::zero(1);
        let records = locate_eigenvalues(&p, (-0.4, 0.4, -0.4, 0.4), &settings()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].multiplicity, 2);
        assert!(records[0].rho.norm() < 1e-5);
    }

    #[test]
    fn locate_constant_potential_closed_form() {
        // Q0 = 1: zeros at rho = sqrt(n^2 - 1)
        let p = Pencil::zero(1).with_q0(CoefficientFunction::constant(CMatrix::from_element(
            1,
            1,
            cre(1.0),
        )));
        let records = locate_eigenvalues(&p, (0.5, 6.3, -0.5, 0.5), &settings()).unwrap();
        let expect: Vec<f64> = (2..=6)
            .map(|n| ((n * n - 1) as f64).sqrt())
            .filter(|r| (0.5..6.3).contains(r))
            .collect();
        assert_eq!(records.len(), expect.len());
        for (r, e) in records.iter().zip(&expect) {
            assert!((r.rho - cre(*e)).norm() < 1e-8, "{} vs {e}", r.rho);
        }
    }

    #[test]
    fn residues_free_pencil() {
        // M = cot(pi rho)/rho: residue at rho = n is 1/(pi n)
        let p = Pencil::zero(1);
        let s = settings();
        for n in 1..=2 {
            let res = residue_matrices(&p, cre(n as f64), 1, 0.3, &s).unwrap();
            let expect = 1.0 / (PI * n as f64);
            assert!(
                (res[0][(0, 0)] - cre(expect)).norm() < 1e-7,
                "n = {n}: {} vs {expect}",
                res[0][(0, 0)]
            );
        }
    }

    #[test]
    fn residues_radius_independent() {
        let p = Pencil::zero(1);
        let s = settings();
        let a = residue_matrices(&p, cre(1.0), 1, 0.2, &s).unwrap();
        let b = residue_matrices(&p, cre(1.0), 1, 0.3, &s).unwrap();
        assert!(mat_norm(&(&a[0] - &b[0])) < 1e-7);
    }

    #[test]
    fn residues_reject_bad_isolation_and_multiplicity() {
        let p = Pencil::zero(1);
        let s = settings();
        assert!(matches!(
            residue_matrices(&p, cre(1.0), 1, 1.2, &s),
            Err(Error::PoleNotIsolated { .. })
        ));
        assert!(matches!(
            residue_matrices(&p, cre(1.0), 4, 0.3, &s),
            Err(Error::MultiplicityTooHigh { .. })
        ));
    }

    #[test]
    fn laurent_singular_part_bounded_remainder() {
        // subtracting the singular part leaves a bounded remainder near the pole
        let p = Pencil::zero(1);
        let s = settings();
        let res = residue_matrices(&p, cre(1.0), 1, 0.3, &s).unwrap();
        let mut remainders = Vec::new();
        for &eps in &[0.05f64, 0.02] {
            let z = cre(1.0 + eps);
            let m = weyl_point_via_psi(&p, z, &s).unwrap();
            let singular = &res[0] / cre(eps);
            remainders.push(mat_norm(&(m - singular)));
        }
        // closed form: remainder tends to 1/pi - 1 - ... ; just check bounded
        assert!(remainders.iter().all(|r| *r < 2.0), "{remainders:?}");
    }

    #[test]
    fn h1_recovery_zero_pencil() {
        let p = Pencil::zero(1);
        let s = settings();
        let ray_p = SectorRay::new(
            SectorSign::Plus,
            PI / 6.0,
            PI / 2.0,
            crate::asympt::log_spaced(10.0, 50.0, 6),
        )
        .unwrap();
        let ray_m = SectorRay::new(
            SectorSign::Minus,
            PI / 6.0,
            -PI / 2.0,
            crate::asympt::log_spaced(10.0, 50.0, 6),
        )
        .unwrap();
        let est = estimate_h1_from_m(&p, &ray_p, &ray_m, &s).unwrap();
        assert!(mat_norm(&est.h1) < 1e-3, "h1 = {:?}", est.h1);
        assert!(est.gap < 1e-3);
    }

    #[test]
    fn h1_recovery_scalar_half() {
        let p = Pencil::zero(1).with_h1(CMatrix::from_element(1, 1, cre(0.5)));
        let s = settings();
        let est = estimate_h1_from_m(
            &p,
            &SectorRay::default_ray(SectorSign::Plus),
            &SectorRay::default_ray(SectorSign::Minus),
            &s,
        )
        .unwrap();
        assert!(
            (est.h1[(0, 0)] - cre(0.5)).norm() < 1e-2,
            "h1 = {}",
            est.h1[(0, 0)]
        );
    }

    #[test]
    fn h1_recovery_diagonal() {
        let h1 = CMatrix::from_row_slice(2, 2, &[cre(0.3), cre(0.0), cre(0.0), cre(-0.2)]);
        let p = Pencil::zero(2).with_h1(h1.clone());
        let s = settings();
        let est = estimate_h1_from_m(
            &p,
            &SectorRay::default_ray(SectorSign::Plus),
            &SectorRay::default_ray(SectorSign::Minus),
            &s,
        )
        .unwrap();
        assert!(mat_norm(&(&est.h1 - &h1)) < 1e-2, "recovered {:?}", est.h1);
    }

    #[test]
    fn h1_rejects_wrong_ray() {
        let p = Pencil::zero(1);
        let s = settings();
        let plus = SectorRay::default_ray(SectorSign::Plus);
        assert!(matches!(
            estimate_h1_from_m(&p, &plus, &plus, &s),
            Err(Error::InvalidRay(_))
        ));
    }

    #[test]
    fn refined_zeros_have_tiny_delta_residual() {
        // |Delta(rho_n)| <= 1e-8 * max |Delta| over the region boundary
        let p =
            crate::generator::random_pencil(17, &crate::generator::RandomPencilParams::default());
        let s = settings();
        let region = (0.5, 4.5, -1.0, 1.0);
        let records = locate_eigenvalues(&p, region, &s).unwrap();
        assert!(!records.is_empty());
        let boundary = Contour::rect(region.0, region.1, region.2, region.3)
            .unwrap()
            .with_nodes(MIN_NODES);
        let max_delta = (0..MIN_NODES)
            .map(|k| {
                char_function(&p, boundary.point(k as f64 / MIN_NODES as f64), &s)
                    .unwrap()
                    .norm()
            })
            .fold(0.0f64, f64::max);
        for r in &records {
            assert!(
                r.delta_residual <= 1e-8 * max_delta,
                "rho = {}: residual {:.3e} vs bound {:.3e}",
                r.rho,
                r.delta_residual,
                1e-8 * max_delta
            );
        }
    }

    #[test]
    fn located_zeros_are_poles_of_m() {
        // ||M|| blows up along a shrinking circle around each located zero
        let p = Pencil::zero(1).with_h0(CMatrix::from_element(1, 1, cre(0.3)));
        let s = settings();
        let records = locate_eigenvalues(&p, (0.5, 2.5, -0.5, 0.5), &s).unwrap();
        assert!(!records.is_empty());
        for r in &records {
            let far = weyl_point_via_psi(&p, r.rho + cre(0.4), &s).unwrap();
            let near = weyl_point_via_psi(&p, r.rho + cre(1e-4), &s).unwrap();
            assert!(
                mat_norm(&near) > 100.0 * mat_norm(&far),
                "no blow-up near {}: near {:.3e}, far {:.3e}",
                r.rho,
                mat_norm(&near),
                mat_norm(&far)
            );
        }
    }
}
