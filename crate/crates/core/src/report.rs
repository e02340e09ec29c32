//! Stable machine-readable output.
//!
//! JSON numbers are rounded to 12 significant digits so outputs are
//! byte-stable across platforms; infinities are written as `"inf"` and
//! `"-inf"`.

use serde::Serialize;
use serde_json::Value;

use crate::dist::ExtReal;
use crate::error::{Error, Result};
use crate::scenario::PlotData;

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            if x.fract() == 0.0 && x.abs() < 1e15 {
                Value::from(x as i64)
            } else {
                serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    let v = serde_json::to_value(x).map_err(|e| Error::Schema(format!("serialization failed: {e}")))?;
    Ok(round_value(v))
}

/// Pretty JSON with rounded numbers and a trailing newline.
pub fn to_json<T: Serialize>(x: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&to_value(x)?)
        .map_err(|e| Error::Schema(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn cell(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{}", round_sig(x))
    }
}

fn ext_cell(x: ExtReal) -> String {
    match x {
        ExtReal::Finite(v) => cell(v),
        ExtReal::Infinity => "inf".into(),
    }
}

/// Writes a header plus rows; columns are given as (name, values).
pub fn write_columns(columns: &[(String, Vec<String>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(columns.iter().map(|(n, _)| n.as_str())).map_err(io)?;
    let rows = columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    for r in 0..rows {
        w.write_record(columns.iter().map(|(_, v)| v.get(r).map_or("", String::as_str)))
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn floats(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| cell(*x)).collect()
}

/// Columns `support, prior, p_o, posterior_<label>..., kl_<label>...`; the
/// per-message KL is repeated on every row.
pub fn plot_csv(plot: &PlotData) -> Result<String> {
    let n = plot.support.len();
    let mut cols = vec![
        ("support".to_string(), floats(&plot.support)),
        ("prior".to_string(), floats(&plot.prior)),
        ("p_o".to_string(), floats(&plot.p_o)),
    ];
    for (label, post) in &plot.posteriors {
        cols.push((format!("posterior_{label}"), floats(post)));
    }
    for (label, kl) in &plot.kls {
        cols.push((format!("kl_{label}"), vec![ext_cell(*kl); n]));
    }
    write_columns(&cols)
}

/// Columns `support, prior, posterior_<label>...`.
pub fn posterior_csv(support: &[f64], prior: &[f64], posteriors: &[(String, Vec<f64>)]) -> Result<String> {
    let mut cols = vec![
        ("support".to_string(), floats(support)),
        ("prior".to_string(), floats(prior)),
    ];
    for (label, post) in posteriors {
        cols.push((format!("posterior_{label}"), floats(post)));
    }
    write_columns(&cols)
}

/// Two-decimal rendering used only for display.
pub fn two_decimals(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.2}")
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(-0.6531296002), -0.6531296002);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(f64::INFINITY), f64::INFINITY);
    }

    #[test]
    fn json_is_rounded_and_integral_floats_compact() {
        let v = to_json(&serde_json::json!({"a": [0.1 + 0.2, 2.0, 1.0 / 7.0], "b": "inf"})).unwrap();
        assert_eq!(v, "{\n  \"a\": [\n    0.3,\n    2,\n    0.142857142857\n  ],\n  \"b\": \"inf\"\n}\n");
    }

    #[test]
    fn csv_columns() {
        let s = posterior_csv(&[0.0, 10.0], &[0.5, 0.5], &[("around 0".into(), vec![1.0, 0.0])]).unwrap();
        assert_eq!(s, "support,prior,posterior_around 0\n0,0.5,1\n10,0.5,0\n");
        assert_eq!(two_decimals(0.6531), "0.65");
        assert_eq!(two_decimals(f64::NEG_INFINITY), "-inf");
    }
}
