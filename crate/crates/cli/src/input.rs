//! JSON input forms. Matrices are either the library wire form `{"rows","cols","re","im"}` or
//! nested rows whose entries are a real number or `[re, im]`.

use std::io::Read;

use jacobi_core::jacobi::CSPoint;
use jacobi_core::matfun::CMat;
use jacobi_core::symplectic::{sp_new, SiegelPoint, SpElement};
use num_complex::Complex;
use serde::Deserialize;

use crate::CliError;

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Pair([f64; 2]),
}

impl Entry {
    fn value(&self) -> Complex<f64> {
        match *self {
            Entry::Real(x) => Complex::new(x, 0.0),
            Entry::Pair([a, b]) => Complex::new(a, b),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatIn {
    Wire(CMat<f64>),
    Rows(Vec<Vec<Entry>>),
    Scalar(Entry),
}

impl MatIn {
    fn into_mat(self) -> Result<CMat<f64>, CliError> {
        match self {
            MatIn::Wire(m) => Ok(m),
            MatIn::Scalar(e) => Ok(CMat::scalar(e.value())),
            MatIn::Rows(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.is_empty() || rows.iter().any(|r| r.len() != cols) {
                    return Err(CliError::usage("matrix rows must be non-empty and of equal length"));
                }
                Ok(CMat::from_rows(
                    &rows.iter().map(|r| r.iter().map(Entry::value).collect()).collect::<Vec<_>>(),
                ))
            }
        }
    }
}

#[derive(Deserialize)]
struct PointIn {
    z: Vec<Entry>,
    #[serde(rename = "W", alias = "w")]
    w: MatIn,
}

#[derive(Deserialize)]
struct SpIn {
    a: MatIn,
    b: MatIn,
}

/// The argument itself, or standard input for `-`.
pub fn read_arg(arg: &str) -> Result<String, CliError> {
    if arg != "-" {
        return Ok(arg.to_owned());
    }
    let mut s = String::new();
    std::io::stdin()
        .read_to_string(&mut s)
        .map_err(|e| CliError::usage(format!("reading stdin: {e}")))?;
    Ok(s)
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::usage(format!("malformed {what}: {e}")))
}

pub fn point(text: &str) -> Result<CSPoint<f64>, CliError> {
    let p: PointIn = parse(text, "point")?;
    let w = SiegelPoint::new(p.w.into_mat()?, 1e-12).map_err(CliError::usage)?;
    CSPoint::new(p.z.iter().map(Entry::value).collect(), w).map_err(CliError::usage)
}

pub fn sp_element(text: &str, tol: f64) -> Result<SpElement<f64>, CliError> {
    let g: SpIn = parse(text, "Sp element")?;
    sp_new(g.a.into_mat()?, g.b.into_mat()?, tol).map_err(CliError::usage)
}

/// Integers, optionally in exponent form such as `1e6`.
pub fn count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= 1e15 {
        Ok(x as usize)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}
