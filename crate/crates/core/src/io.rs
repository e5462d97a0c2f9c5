//! Text formats: matrices, scalings, mode data and CSV tables.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde_json::Value;

use crate::dampsim::Trajectory;
use crate::error::{Error, Result};
use crate::genbal::GeneralModeData;
use crate::linalg::{ComplexMatrix, DiagonalScaling};
use crate::rollwave::{CharacteristicData, DampingWeights, RollWaveProfile};

/// Parses a square matrix from JSON or whitespace-separated text.
///
/// JSON is a list of rows whose entries are numbers or `[re, im]` pairs; an
/// object with an `entries` field (the serialized form) is also accepted. Text
/// input is one row per line, real entries only; `#` starts a comment.
pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let t = text.trim_start();
    if t.starts_with('[') || t.starts_with('{') {
        let v: Value = serde_json::from_str(t).map_err(|e| Error::Parse(format!("matrix JSON: {e}")))?;
        let rows = match &v {
            Value::Object(o) => o.get("entries").or_else(|| o.get("matrix")).ok_or_else(|| {
                Error::Parse("matrix object needs an `entries` field".into())
            })?,
            other => other,
        };
        return ComplexMatrix::from_rows(&json_rows(rows)?);
    }
    let rows: Vec<Vec<f64>> = t
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    ComplexMatrix::from_real_rows(&rows)
}

fn json_rows(v: &Value) -> Result<Vec<Vec<Complex64>>> {
    let rows = v.as_array().ok_or_else(|| Error::Parse("matrix must be a list of rows".into()))?;
    rows.iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::Parse("each row must be a list".into()))?
                .iter()
                .map(json_entry)
                .collect()
        })
        .collect()
}

fn json_entry(v: &Value) -> Result<Complex64> {
    if let Some(x) = v.as_f64() {
        return Ok(Complex64::new(x, 0.0));
    }
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(Error::Parse(format!("bad entry {v}"))),
        },
        _ => Err(Error::Parse(format!("bad entry {v}"))),
    }
}

/// Row-major `[re, im]` JSON for a matrix.
pub fn matrix_to_json(b: &ComplexMatrix) -> Value {
    Value::Array(
        b.rows()
            .into_iter()
            .map(|r| Value::Array(r.into_iter().map(|z| serde_json::json!([z.re, z.im])).collect()))
            .collect(),
    )
}

/// Parses positive scaling values from a JSON list or whitespace-separated text.
pub fn parse_scaling(text: &str) -> Result<DiagonalScaling> {
    let t = text.trim();
    let values: Vec<f64> = if t.starts_with('[') {
        serde_json::from_str(t).map_err(|e| Error::Parse(format!("scaling JSON: {e}")))?
    } else {
        t.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}"))))
            .collect::<Result<_>>()?
    };
    DiagonalScaling::from_values(&values)
}

pub fn parse_mode_data(text: &str) -> Result<GeneralModeData> {
    let d: GeneralModeData = serde_json::from_str(text).map_err(|e| Error::Parse(format!("mode data: {e}")))?;
    d.validate()?;
    Ok(d)
}

/// Profile table with columns `x, h, U, alpha1, alpha2, gamma1, gamma2, Omega1, Omega2`.
///
/// The weight columns are empty when no weights are given; weights must share
/// the characteristic grid.
pub fn profile_csv(p: &RollWaveProfile, cd: &CharacteristicData, w: Option<&DampingWeights>) -> String {
    let mut out = String::from("x,h,U,alpha1,alpha2,gamma1,gamma2,Omega1,Omega2\n");
    for (i, &x) in cd.grid.iter().enumerate() {
        let h = p.height(x);
        let (o1, o2) = match w {
            Some(w) if w.grid.len() == cd.grid.len() => (w.omega1[i].to_string(), w.omega2[i].to_string()),
            _ => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{x},{h},{},{},{},{},{},{o1},{o2}",
            p.velocity(h),
            cd.alpha1[i],
            cd.alpha2[i],
            cd.gamma1[i],
            cd.gamma2[i]
        );
    }
    out
}

/// Trajectory table with columns `t, L2, H1, E, y`; `y` is the modulus of the
/// shift, its parts follow in `y_re, y_im`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,L2,H1,E,y,y_re,y_im\n");
    for s in &traj.states {
        let _ = writeln!(out, "{},{},{},{},{},{},{}", s.t, s.l2, s.h1, s.energy, s.y.norm(), s.y.re, s.y.im);
    }
    out
}
