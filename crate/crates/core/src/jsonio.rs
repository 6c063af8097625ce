//! Helpers for the line-delimited text formats: decimal float formatting
//! that survives a 64-bit round trip, and typed access into parsed
//! documents. Errors are plain messages; callers attach file and line
//! context.

use serde_json::Value;

/// 17 significant digits; parsing the result reproduces the exact f64.
pub fn fmt_f64(v: f64) -> String {
    debug_assert!(v.is_finite(), "refusing to serialize non-finite value");
    format!("{v:.16e}")
}

pub fn fmt_f64_slice(vs: &[f64]) -> String {
    let mut out = String::with_capacity(vs.len() * 24 + 2);
    out.push('[');
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push(']');
    out
}

pub fn get<'a>(doc: &'a Value, key: &str) -> Result<&'a Value, String> {
    doc.get(key).ok_or_else(|| format!("missing field \"{key}\""))
}

pub fn get_str<'a>(doc: &'a Value, key: &str) -> Result<&'a str, String> {
    get(doc, key)?
        .as_str()
        .ok_or_else(|| format!("field \"{key}\" is not a string"))
}

pub fn get_u64(doc: &Value, key: &str) -> Result<u64, String> {
    get(doc, key)?
        .as_u64()
        .ok_or_else(|| format!("field \"{key}\" is not a non-negative integer"))
}

pub fn get_usize(doc: &Value, key: &str) -> Result<usize, String> {
    Ok(get_u64(doc, key)? as usize)
}

pub fn get_f64(doc: &Value, key: &str) -> Result<f64, String> {
    get(doc, key)?
        .as_f64()
        .ok_or_else(|| format!("field \"{key}\" is not a number"))
}

pub fn get_array<'a>(doc: &'a Value, key: &str) -> Result<&'a [Value], String> {
    get(doc, key)?
        .as_array()
        .map(|a| a.as_slice())
        .ok_or_else(|| format!("field \"{key}\" is not an array"))
}

pub fn get_object<'a>(
    doc: &'a Value,
    key: &str,
) -> Result<&'a serde_json::Map<String, Value>, String> {
    get(doc, key)?
        .as_object()
        .ok_or_else(|| format!("field \"{key}\" is not an object"))
}

pub fn as_f64(v: &Value, what: &str) -> Result<f64, String> {
    v.as_f64().ok_or_else(|| format!("{what} is not a number"))
}

/// Parses a rectangular array-of-arrays of numbers.
pub fn matrix_values(v: &Value, what: &str) -> Result<Vec<Vec<f64>>, String> {
    let rows = v
        .as_array()
        .ok_or_else(|| format!("{what} is not an array"))?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let cells = row
            .as_array()
            .ok_or_else(|| format!("{what}[{i}] is not an array"))?;
        let mut vals = Vec::with_capacity(cells.len());
        for (j, c) in cells.iter().enumerate() {
            vals.push(as_f64(c, &format!("{what}[{i}][{j}]"))?);
        }
        out.push(vals);
    }
    Ok(out)
}
