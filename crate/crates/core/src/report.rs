//! Deterministic JSON output.
//!
//! Objects are written with sorted keys and every float with 17 significant
//! digits, so equal inputs give byte-identical files. Null values (a missing
//! field, or a non-finite float that serde would silently null out) are refused.

use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Pretty printer that writes floats as `d.dddddddddddddddde±x`.
struct SignificantDigits<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for SignificantDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

fn find_null(value: &Value, path: &mut String) -> bool {
    match value {
        Value::Null => true,
        Value::Array(items) => items.iter().enumerate().any(|(i, v)| {
            let len = path.len();
            path.push_str(&format!("[{i}]"));
            let found = find_null(v, path);
            if !found {
                path.truncate(len);
            }
            found
        }),
        Value::Object(map) => map.iter().any(|(k, v)| {
            let len = path.len();
            path.push('.');
            path.push_str(k);
            let found = find_null(v, path);
            if !found {
                path.truncate(len);
            }
            found
        }),
        _ => false,
    }
}

/// Serializes `report` to canonical JSON bytes (trailing newline included).
pub fn to_canonical_json<S: Serialize>(report: &S) -> Result<Vec<u8>> {
    let value = serde_json::to_value(report)?;
    let mut path = String::new();
    if find_null(&value, &mut path) {
        let msg = format!("report field '{}' is missing or non-finite", path.trim_start_matches('.'));
        return Err(Error::Json(<serde_json::Error as serde::ser::Error>::custom(msg)));
    }
    let mut out = Vec::new();
    let fmt = SignificantDigits { inner: PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes the canonical JSON of `report` atomically.
pub fn emit_report<S: Serialize>(report: &S, path: impl AsRef<Path>) -> Result<()> {
    let bytes = to_canonical_json(report)?;
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Serialize;

    #[derive(Serialize)]
    struct Sample {
        zeta: f64,
        alpha: Vec<f64>,
        name: &'static str,
        count: usize,
        maybe: Option<f64>,
    }

    #[test]
    fn sorted_keys_and_seventeen_digits() {
        let s = Sample { zeta: 0.1, alpha: vec![1.0, -2.5e-7], name: "x", count: 3, maybe: Some(2.0) };
        let text = String::from_utf8(to_canonical_json(&s).unwrap()).unwrap();
        let a = text.find("\"alpha\"").unwrap();
        let z = text.find("\"zeta\"").unwrap();
        assert!(a < z);
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("-2.4999999999999999e-7"), "{text}");
        assert!(text.contains("\"count\": 3"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["zeta"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn missing_or_nan_refused() {
        let s = Sample { zeta: 0.1, alpha: vec![], name: "x", count: 0, maybe: None };
        let err = to_canonical_json(&s).unwrap_err();
        assert!(err.to_string().contains("maybe"), "{err}");
        let s = Sample { zeta: 0.1, alpha: vec![1.0, f64::NAN], name: "x", count: 0, maybe: Some(1.0) };
        assert!(to_canonical_json(&s).unwrap_err().to_string().contains("alpha[1]"));
    }
}
