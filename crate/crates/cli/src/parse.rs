//! Small argument parsers: complex numbers, lists, rays, regions.

use num_complex::Complex64;
use qpencil::asympt::{SectorRay, SectorSign};

/// Parses "1.5", "-2.5e-1", "1+2i", "1.5-0.3i", "2i", "i", "-i".
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    if let Ok(re) = t.parse::<f64>() {
        return Ok(Complex64::new(re, 0.0));
    }
    let inner = t.strip_suffix('i').ok_or_else(|| bad(t))?;
    // pure imaginary: "i", "-i", "2.5i"
    if inner.is_empty() {
        return Ok(Complex64::new(0.0, 1.0));
    }
    if inner == "-" {
        return Ok(Complex64::new(0.0, -1.0));
    }
    if let Ok(im) = inner.parse::<f64>() {
        return Ok(Complex64::new(0.0, im));
    }
    // split at the last +/- that is not an exponent sign and not leading
    let bytes = inner.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        let c = bytes[k] as char;
        if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
            split = Some(k);
            break;
        }
    }
    let k = split.ok_or_else(|| bad(t))?;
    let re: f64 = inner[..k].parse().map_err(|_| bad(t))?;
    let im_str = &inner[k..];
    let im: f64 = if im_str == "+" {
        1.0
    } else if im_str == "-" {
        -1.0
    } else {
        im_str.parse().map_err(|_| bad(t))?
    };
    Ok(Complex64::new(re, im))
}

fn bad(t: &str) -> String {
    format!("cannot parse '{t}' as a complex number (expected forms: 1.5, 1.5+0.3i, -2i)")
}

pub fn parse_complex_list(s: &str) -> Result<Vec<Complex64>, String> {
    let list: Result<Vec<_>, _> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_complex)
        .collect();
    let list = list?;
    if list.is_empty() {
        return Err("empty rho list".into());
    }
    Ok(list)
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let list: Result<Vec<f64>, _> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number '{t}': {e}"))
        })
        .collect();
    let list = list?;
    if list.is_empty() {
        return Err("empty list".into());
    }
    Ok(list)
}

/// "x0,x1,y0,y1"
pub fn parse_region(s: &str) -> Result<(f64, f64, f64, f64), String> {
    let v = parse_f64_list(s)?;
    if v.len() != 4 {
        return Err(format!("region needs 4 numbers, got {}", v.len()));
    }
    Ok((v[0], v[1], v[2], v[3]))
}

/// "c_re,c_im,r" or "c_re,c_im,r,N"
pub fn parse_circle(s: &str) -> Result<(Complex64, f64, Option<usize>), String> {
    let v = parse_f64_list(s)?;
    match v.len() {
        3 => Ok((Complex64::new(v[0], v[1]), v[2], None)),
        4 => Ok((Complex64::new(v[0], v[1]), v[2], Some(v[3] as usize))),
        n => Err(format!("circle needs 3 or 4 numbers, got {n}")),
    }
}

/// "sign,delta,arg,m1,m2,..." with sign one of +pl, -. Example:
/// "+,0.5235987755982988,1.5707963267948966,10,14,20,28,40,57,80"
pub fn parse_ray(s: &str) -> Result<SectorRay, String> {
    let parts: Vec<&str> = s.split(',').map(|t| t.trim()).collect();
    if parts.len() < 5 {
        return Err("ray needs sign,delta,arg and at least two moduli".into());
    }
    let sign = match parts[0] {
        "+" | "plus" => SectorSign::Plus,
        "-" | "minus" => SectorSign::Minus,
        other => return Err(format!("bad sector sign '{other}' (use + or -)")),
    };
    let delta: f64 = parts[1].parse().map_err(|e| format!("bad delta: {e}"))?;
    let arg: f64 = parts[2].parse().map_err(|e| format!("bad arg: {e}"))?;
    let moduli: Result<Vec<f64>, _> = parts[3..]
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| format!("bad modulus '{t}': {e}"))
        })
        .collect();
    SectorRay::new(sign, delta, arg, moduli?).map_err(|e| e.to_string())
}
