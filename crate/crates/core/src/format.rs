//! JSON and CSV file formats.
//!
//! Matrices are row-major arrays of rows. A real entry is a number; a
//! complex entry is a `[re, im]` pair. Writers emit plain numbers when a
//! whole matrix is real.
//!
//! ```json
//! {"n": 1, "p": 1, "q": 1,
//!  "M": [[1.0]], "D": [[0.1]], "K": [[1.5]],
//!  "B": [[1.0]], "C0": [[1.0]], "C1": [[0.0]]}
//! ```

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::loewner::{LeftSample, RightSample, TangentialData};
use crate::moments::InterpolationSet;
use crate::numerics::{c64, CMatrix, CVector};
use crate::reduction::{Provenance, ReducedModel};
use crate::system::SecondOrderSystem;

fn field_error(message: impl Into<String>) -> Error {
    Error::ParseError {
        line: 0,
        column: 0,
        message: message.into(),
    }
}

pub fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_from_json(v: &Value, what: &str) -> Result<Complex64> {
    let num = |x: &Value| {
        x.as_f64()
            .filter(|f| f.is_finite())
            .ok_or_else(|| field_error(format!("{what}: expected a finite number")))
    };
    match v {
        Value::Number(_) => Ok(c64(num(v)?, 0.0)),
        Value::Array(pair) if pair.len() == 2 => Ok(c64(num(&pair[0])?, num(&pair[1])?)),
        _ => Err(field_error(format!("{what}: expected a number or a [re, im] pair"))),
    }
}

/// Row-major JSON; real matrices are written without imaginary parts.
pub fn matrix_to_json(a: &CMatrix) -> Value {
    let real = a.iter().all(|z| z.im == 0.0);
    Value::Array(
        (0..a.nrows())
            .map(|i| {
                Value::Array(
                    (0..a.ncols())
                        .map(|j| {
                            let z = a[(i, j)];
                            if real {
                                json!(z.re)
                            } else {
                                complex_to_json(z)
                            }
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn matrix_from_json(v: &Value, name: &str) -> Result<CMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| field_error(format!("\"{name}\": expected an array of rows")))?;
    let nrows = rows.len();
    let mut ncols = None;
    let mut data = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| field_error(format!("\"{name}\" row {i}: expected an array")))?;
        match ncols {
            None => ncols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::DimensionMismatch(format!(
                    "\"{name}\" row {i} has {} entries, expected {c}",
                    row.len()
                )))
            }
            _ => {}
        }
        for (j, x) in row.iter().enumerate() {
            data.push(complex_from_json(x, &format!("\"{name}\"[{i}][{j}]"))?);
        }
    }
    Ok(CMatrix::from_row_slice(nrows, ncols.unwrap_or(0), &data))
}

fn vector_to_json(v: &CVector) -> Value {
    Value::Array(v.iter().map(|&z| complex_to_json(z)).collect())
}

fn vector_from_json(v: &Value, what: &str) -> Result<CVector> {
    let items = v
        .as_array()
        .ok_or_else(|| field_error(format!("{what}: expected an array")))?;
    let entries = items
        .iter()
        .enumerate()
        .map(|(i, x)| complex_from_json(x, &format!("{what}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(entries))
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| field_error(format!("missing field \"{key}\"")))
}

fn get_count(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    get(obj, key)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| field_error(format!("\"{key}\": expected a nonnegative integer")))
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| field_error(format!("{what}: expected a JSON object")))
}

pub fn system_to_json(sys: &SecondOrderSystem) -> Value {
    json!({
        "n": sys.n(),
        "p": sys.p(),
        "q": sys.q(),
        "M": matrix_to_json(sys.m()),
        "D": matrix_to_json(sys.d()),
        "K": matrix_to_json(sys.k()),
        "B": matrix_to_json(sys.b()),
        "C0": matrix_to_json(sys.c0()),
        "C1": matrix_to_json(sys.c1()),
    })
}

pub fn system_from_json(v: &Value) -> Result<SecondOrderSystem> {
    let obj = as_object(v, "system file")?;
    let (n, p, q) = (get_count(obj, "n")?, get_count(obj, "p")?, get_count(obj, "q")?);
    let read = |key: &str, rows: usize, cols: usize| -> Result<CMatrix> {
        let m = matrix_from_json(get(obj, key)?, key)?;
        if m.shape() != (rows, cols) {
            return Err(Error::DimensionMismatch(format!(
                "\"{key}\" is {}x{}, expected {rows}x{cols}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    };
    SecondOrderSystem::new(
        read("M", n, n)?,
        read("D", n, n)?,
        read("K", n, n)?,
        read("B", n, p)?,
        read("C0", q, n)?,
        read("C1", q, n)?,
    )
}

pub fn model_to_json(model: &ReducedModel) -> Value {
    let mut v = system_to_json(&model.system);
    v["provenance"] = serde_json::to_value(&model.provenance).expect("provenance serializes");
    v
}

/// Reads a system file, keeping its `"provenance"` object if there is one.
pub fn model_from_json(v: &Value) -> Result<ReducedModel> {
    let system = system_from_json(v)?;
    let provenance = match v.get("provenance") {
        Some(p) => serde_json::from_value(p.clone())
            .map_err(|e| field_error(format!("\"provenance\": {e}")))?,
        None => Provenance::new("unknown", Value::Null),
    };
    Ok(ReducedModel { system, provenance })
}

fn parse_text(text: &str) -> Result<Value> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_json(path: &Path) -> Result<Value> {
    parse_text(&fs::read_to_string(path)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn save_system(path: &Path, sys: &SecondOrderSystem) -> Result<()> {
    write_json(path, &system_to_json(sys))
}

pub fn load_system(path: &Path) -> Result<SecondOrderSystem> {
    system_from_json(&read_json(path)?)
}

pub fn save_model(path: &Path, model: &ReducedModel) -> Result<()> {
    write_json(path, &model_to_json(model))
}

pub fn load_model(path: &Path) -> Result<ReducedModel> {
    model_from_json(&read_json(path)?)
}

/// `{"S": .., "L": ..}` or `{"Q": .., "R": ..}` with `[re, im]` entries.
pub fn interpolation_set_to_json(set: &InterpolationSet) -> Value {
    let pairs = |a: &CMatrix| {
        Value::Array(
            (0..a.nrows())
                .map(|i| Value::Array((0..a.ncols()).map(|j| complex_to_json(a[(i, j)])).collect()))
                .collect(),
        )
    };
    match set.side() {
        crate::moments::Side::Input => json!({ "S": pairs(set.shift()), "L": pairs(set.direction()) }),
        crate::moments::Side::Output => json!({ "Q": pairs(set.shift()), "R": pairs(set.direction()) }),
    }
}

pub fn interpolation_set_from_json(v: &Value) -> Result<InterpolationSet> {
    let obj = as_object(v, "interpolation set")?;
    if obj.contains_key("S") {
        InterpolationSet::input(
            matrix_from_json(get(obj, "S")?, "S")?,
            matrix_from_json(get(obj, "L")?, "L")?,
        )
    } else if obj.contains_key("Q") {
        InterpolationSet::output(
            matrix_from_json(get(obj, "Q")?, "Q")?,
            matrix_from_json(get(obj, "R")?, "R")?,
        )
    } else {
        Err(field_error("interpolation set needs \"S\"/\"L\" or \"Q\"/\"R\""))
    }
}

pub fn tangential_to_json(data: &TangentialData) -> Value {
    json!({
        "right": data.right.iter().map(|r| json!({
            "s": complex_to_json(r.alpha),
            "r": vector_to_json(&r.r),
            "w": vector_to_json(&r.w),
        })).collect::<Vec<_>>(),
        "left": data.left.iter().map(|l| json!({
            "s": complex_to_json(l.beta),
            "l": vector_to_json(&l.l),
            "v": vector_to_json(&l.v),
        })).collect::<Vec<_>>(),
    })
}

pub fn tangential_from_json(v: &Value) -> Result<TangentialData> {
    let obj = as_object(v, "tangential data")?;
    let list = |key: &str| -> Result<&Vec<Value>> {
        get(obj, key)?
            .as_array()
            .ok_or_else(|| field_error(format!("\"{key}\": expected an array")))
    };
    let right = list("right")?
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let o = as_object(e, "right sample")?;
            let ctx = |k: &str| format!("right[{i}].{k}");
            Ok(RightSample {
                alpha: complex_from_json(get(o, "s")?, &ctx("s"))?,
                r: vector_from_json(get(o, "r")?, &ctx("r"))?,
                w: vector_from_json(get(o, "w")?, &ctx("w"))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let left = list("left")?
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let o = as_object(e, "left sample")?;
            let ctx = |k: &str| format!("left[{j}].{k}");
            Ok(LeftSample {
                beta: complex_from_json(get(o, "s")?, &ctx("s"))?,
                l: vector_from_json(get(o, "l")?, &ctx("l"))?,
                v: vector_from_json(get(o, "v")?, &ctx("v"))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TangentialData::new(right, left)
}

/// SISO measurements with columns `freq_imag, re, im, side`, where `side`
/// is `right` or `left`; each row is `W(i·freq_imag) = re + i·im` and both
/// tangential directions are 1.
pub fn tangential_from_csv<R: std::io::Read>(reader: R) -> Result<TangentialData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| field_error(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| field_error(format!("CSV is missing column \"{name}\"")))
    };
    let (cf, cr, ci, cs) = (col("freq_imag")?, col("re")?, col("im")?, col("side")?);
    let one = CVector::from_element(1, c64(1.0, 0.0));
    let (mut right, mut left) = (Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| Error::ParseError {
            line,
            column: 0,
            message: e.to_string(),
        })?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::ParseError {
                    line,
                    column: c + 1,
                    message: "expected a finite number".into(),
                })
        };
        let s = c64(0.0, num(cf)?);
        let w = CVector::from_element(1, c64(num(cr)?, num(ci)?));
        match rec.get(cs) {
            Some("right") => right.push(RightSample { alpha: s, r: one.clone(), w }),
            Some("left") => left.push(LeftSample { beta: s, l: one.clone(), v: w }),
            other => {
                return Err(Error::ParseError {
                    line,
                    column: cs + 1,
                    message: format!("side must be \"right\" or \"left\", got {other:?}"),
                })
            }
        }
    }
    TangentialData::new(right, left)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_written_scalar_file() {
        let text = r#"{"n": 1, "p": 1, "q": 1,
            "M": [[1.0]], "D": [[0.1]], "K": [[1.5]],
            "B": [[1.0]], "C0": [[1.0]], "C1": [[0.0]]}"#;
        let sys = system_from_json(&parse_text(text).unwrap()).unwrap();
        assert_eq!(sys.n(), 1);
        assert_eq!(sys.k()[(0, 0)], c64(1.5, 0.0));
    }

    #[test]
    fn complex_entries_parse() {
        let v: Value = serde_json::from_str("[[1.0, [0.0, 2.0]]]").unwrap();
        let m = matrix_from_json(&v, "X").unwrap();
        assert_eq!(m[(0, 1)], c64(0.0, 2.0));
    }

    #[test]
    fn wrong_shape_is_dimension_mismatch() {
        let text = r#"{"n": 2, "p": 1, "q": 1,
            "M": [[1,0],[0,1]], "D": [[1,0],[0,1]], "K": [[1]],
            "B": [[1],[0]], "C0": [[1,0]], "C1": [[0,0]]}"#;
        let err = system_from_json(&parse_text(text).unwrap()).unwrap_err();
        assert_eq!(err.name(), "DimensionMismatch");
    }

    #[test]
    fn syntax_error_carries_position() {
        match parse_text("{\n  \"n\": ,\n}").unwrap_err() {
            Error::ParseError { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_parse_error() {
        let err = system_from_json(&json!({"n": 1, "p": 1})).unwrap_err();
        assert_eq!(err.name(), "ParseError");
    }

    #[test]
    fn csv_import() {
        let text = "freq_imag,re,im,side\n0.1,1.0,-0.5,right\n0.2,0.5,0.25,left\n";
        let data = tangential_from_csv(text.as_bytes()).unwrap();
        assert_eq!(data.order(), 1);
        assert_eq!(data.right[0].alpha, c64(0.0, 0.1));
        assert_eq!(data.left[0].v[0], c64(0.5, 0.25));
        let bad = "freq_imag,re,im,side\n0.1,x,0,right\n";
        match tangential_from_csv(bad.as_bytes()).unwrap_err() {
            Error::ParseError { line, column, .. } => assert_eq!((line, column), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
