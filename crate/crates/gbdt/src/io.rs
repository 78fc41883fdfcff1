//! JSON and CSV wire formats.
//!
//! Matrices travel as arrays of rows, each entry a `[re, im]` pair. Triples
//! are objects `{n, m1, m2, A, S0, Pi0}`. Solution fields export as CSV with
//! header `x,t,block,row,col,re,im`, one row per complex entry, in
//! deterministic order (x-major, then t, then block, row, col). All numerics
//! print with 17 significant digits so round-trips are lossless.

use crate::explicit::SolutionField;
use crate::matcore::{CMatrix, Cx};
use crate::triple::{GbdtTriple, SignatureJ, TripleError};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed matrix JSON: {0}")]
    BadMatrix(String),
    #[error("malformed triple JSON: {0}")]
    BadTriple(String),
    #[error(transparent)]
    Triple(#[from] TripleError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| {
            let row: Vec<Value> =
                (0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

pub fn matrix_from_json(v: &Value) -> Result<CMatrix, IoError> {
    let rows = v.as_array().ok_or_else(|| IoError::BadMatrix("expected array of rows".into()))?;
    if rows.is_empty() {
        return Err(IoError::BadMatrix("matrix must have at least one row".into()));
    }
    let ncols = rows[0]
        .as_array()
        .ok_or_else(|| IoError::BadMatrix("row must be an array".into()))?
        .len();
    let mut data = Vec::with_capacity(rows.len() * ncols);
    for row in rows {
        let row = row.as_array().ok_or_else(|| IoError::BadMatrix("row must be an array".into()))?;
        if row.len() != ncols {
            return Err(IoError::BadMatrix("ragged rows".into()));
        }
        for entry in row {
            let pair = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| IoError::BadMatrix("entry must be a [re, im] pair".into()))?;
            let re = pair[0].as_f64().ok_or_else(|| IoError::BadMatrix("re not a number".into()))?;
            let im = pair[1].as_f64().ok_or_else(|| IoError::BadMatrix("im not a number".into()))?;
            data.push(Cx::new(re, im));
        }
    }
    Ok(CMatrix::from_row_slice(rows.len(), ncols, &data))
}

pub fn triple_to_json(t: &GbdtTriple) -> Value {
    json!({
        "n": t.n(),
        "m1": t.sig.m1,
        "m2": t.sig.m2,
        "A": matrix_to_json(&t.a),
        "S0": matrix_to_json(&t.s0),
        "Pi0": matrix_to_json(&t.pi0),
    })
}

pub fn triple_from_json(v: &Value) -> Result<GbdtTriple, IoError> {
    let obj = v.as_object().ok_or_else(|| IoError::BadTriple("expected object".into()))?;
    let get = |k: &str| obj.get(k).ok_or_else(|| IoError::BadTriple(format!("missing field {k}")));
    let m1 = get("m1")?.as_u64().ok_or_else(|| IoError::BadTriple("m1 not an integer".into()))?
        as usize;
    let m2 = get("m2")?.as_u64().ok_or_else(|| IoError::BadTriple("m2 not an integer".into()))?
        as usize;
    let a = matrix_from_json(get("A")?)?;
    let s0 = matrix_from_json(get("S0")?)?;
    let pi0 = matrix_from_json(get("Pi0")?)?;
    Ok(GbdtTriple::new(a, s0, pi0, SignatureJ::new(m1, m2))?)
}

/// Read the raw `{A, Pi0, m1, m2}` parts of a triple file (for completion).
pub fn partial_triple_from_json(v: &Value) -> Result<(CMatrix, CMatrix, SignatureJ), IoError> {
    let obj = v.as_object().ok_or_else(|| IoError::BadTriple("expected object".into()))?;
    let get = |k: &str| obj.get(k).ok_or_else(|| IoError::BadTriple(format!("missing field {k}")));
    let m1 = get("m1")?.as_u64().ok_or_else(|| IoError::BadTriple("m1 not an integer".into()))?
        as usize;
    let m2 = get("m2")?.as_u64().ok_or_else(|| IoError::BadTriple("m2 not an integer".into()))?
        as usize;
    let a = matrix_from_json(get("A")?)?;
    let pi0 = matrix_from_json(get("Pi0")?)?;
    Ok((a, pi0, SignatureJ::new(m1, m2)))
}

/// CSV export of a sampled field. `Hcal` rows do not depend on t and carry
/// `t = 0` in that column.
pub fn write_field_csv<W: std::io::Write>(f: &SolutionField, out: &mut W) -> Result<(), IoError> {
    writeln!(out, "x,t,block,row,col,re,im")?;
    for (ix, &x) in f.xs.iter().enumerate() {
        for (it, &t) in f.ts.iter().enumerate() {
            let y = f.y_at(ix, it);
            for r in 0..y.nrows() {
                for c in 0..y.ncols() {
                    let z = y[(r, c)];
                    writeln!(
                        out,
                        "{},{},Y,{},{},{},{}",
                        fmt_f64(x),
                        fmt_f64(t),
                        r,
                        c,
                        fmt_f64(z.re),
                        fmt_f64(z.im)
                    )?;
                }
            }
        }
        let h = &f.hcal[ix];
        for r in 0..h.nrows() {
            for c in 0..h.ncols() {
                let z = h[(r, c)];
                writeln!(
                    out,
                    "{},{},Hcal,{},{},{},{}",
                    fmt_f64(x),
                    fmt_f64(0.0),
                    r,
                    c,
                    fmt_f64(z.re),
                    fmt_f64(z.im)
                )?;
            }
        }
    }
    Ok(())
}

/// Parse a tabulated Hamiltonian CSV: header `x,row,col,re,im`, grouped by x.
pub fn hamiltonian_from_csv(text: &str, dim: usize) -> Result<(Vec<f64>, Vec<CMatrix>), IoError> {
    let mut xs: Vec<f64> = Vec::new();
    let mut mats: Vec<CMatrix> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(IoError::BadMatrix(format!("line {}: expected 5 columns", lineno + 1)));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| IoError::BadMatrix(format!("line {}: {e}", lineno + 1)))
        };
        let x = parse(parts[0])?;
        let row = parse(parts[1])? as usize;
        let col = parse(parts[2])? as usize;
        let re = parse(parts[3])?;
        let im = parse(parts[4])?;
        if xs.last().map_or(true, |&last| x > last) {
            xs.push(x);
            mats.push(CMatrix::zeros(dim, dim));
        } else if (x - *xs.last().unwrap()).abs() > 1e-12 {
            return Err(IoError::BadMatrix(format!(
                "line {}: x values must be grouped and increasing",
                lineno + 1
            )));
        }
        let m = mats.last_mut().unwrap();
        if row >= dim || col >= dim {
            return Err(IoError::BadMatrix(format!("line {}: index out of range", lineno + 1)));
        }
        m[(row, col)] = Cx::new(re, im);
    }
    if xs.len() < 2 {
        return Err(IoError::BadMatrix("need at least two tabulated x values".into()));
    }
    Ok((xs, mats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triple::reference_scalar_triple;

    #[test]
    fn matrix_json_roundtrip() {
        let m = CMatrix::from_row_slice(
            2,
            3,
            &[
                Cx::new(1.0, -2.0),
                Cx::new(0.5, 0.0),
                Cx::new(std::f64::consts::PI, 1e-15),
                Cx::new(-1.0 / 3.0, 7.0),
                Cx::new(0.0, 0.0),
                Cx::new(1e300, -1e-300),
            ],
        );
        let rt = matrix_from_json(&matrix_to_json(&m)).unwrap();
        assert_eq!(m.as_slice(), rt.as_slice());
    }

    #[test]
    fn triple_json_roundtrip() {
        let t = reference_scalar_triple();
        let rt = triple_from_json(&triple_to_json(&t)).unwrap();
        assert_eq!(t.a.as_slice(), rt.a.as_slice());
        assert_eq!(t.pi0.as_slice(), rt.pi0.as_slice());
        assert_eq!(t.sig, rt.sig);
    }

    #[test]
    fn malformed_matrix_rejected() {
        let v = serde_json::json!([[1.0, 2.0]]);
        assert!(matrix_from_json(&v).is_err());
    }

    #[test]
    fn field_csv_row_count() {
        use crate::explicit::build_model;
        let model = build_model(&reference_scalar_triple()).unwrap();
        let xs: Vec<f64> = (0..5).map(|k| 0.25 * k as f64).collect();
        let ts: Vec<f64> = (0..3).map(|k| 0.5 * k as f64).collect();
        let f = model.field(&xs, &ts).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // header + 5*3*(2*1) Y rows + 5*(2*2) Hcal rows
        assert_eq!(text.lines().count(), 1 + 5 * 3 * 2 + 5 * 4);
    }

    #[test]
    fn hamiltonian_csv_parse() {
        let text = "x,row,col,re,im\n0,0,0,1,0\n0,1,1,2,0\n1,0,0,1.5,0\n1,1,1,2,0\n";
        let (xs, mats) = hamiltonian_from_csv(text, 2).unwrap();
        assert_eq!(xs, vec![0.0, 1.0]);
        assert_eq!(mats[1][(0, 0)], Cx::new(1.5, 0.0));
    }
}
