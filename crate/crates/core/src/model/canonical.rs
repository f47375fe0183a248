// SPDX-License-Identifier: Apache-2.0

//! Canonical JSON: object keys sorted byte-wise, no insignificant
//! whitespace, integers only.

use serde_json::Value;

use super::Envelope;
use crate::error::{Error, Result};

/// Canonical bytes of the signed portion of `envelope` (everything except
/// `signature` and `annotations`).
pub fn canonicalize(envelope: &Envelope) -> Result<Vec<u8>> {
    canonical_json(&envelope.signed_value()?)
}

/// Canonical encoding of an arbitrary JSON value.
pub fn canonical_json(value: &Value) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_value(value, &mut out, &mut Vec::new())?;
    Ok(out)
}

fn write_value(value: &Value, out: &mut Vec<u8>, path: &mut Vec<String>) -> Result<()> {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.extend_from_slice(u.to_string().as_bytes());
            } else if let Some(i) = n.as_i64() {
                out.extend_from_slice(i.to_string().as_bytes());
            } else {
                return Err(Error::Canonicalization(format!(
                    "floating-point value {n} at {}",
                    render_path(path)
                )));
            }
        }
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                path.push(i.to_string());
                write_value(item, out, path)?;
                path.pop();
            }
            out.push(b']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort_by(|a, b| a.as_bytes().cmp(b.as_bytes()));
            out.push(b'{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_string(key, out);
                out.push(b':');
                path.push(key.clone());
                write_value(&map[key], out, path)?;
                path.pop();
            }
            out.push(b'}');
        }
    }
    Ok(())
}

fn write_string(s: &str, out: &mut Vec<u8>) {
    // serde_json's escaping is fixed: `"` `\` and control characters only,
    // everything else emitted as raw UTF-8.
    serde_json::to_writer(&mut *out, s).expect("writing to a Vec cannot fail");
}

fn render_path(path: &[String]) -> String {
    if path.is_empty() {
        "<root>".to_owned()
    } else {
        path.join(".")
    }
}
