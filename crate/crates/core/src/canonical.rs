//! Canonical sorted-key text encoding.
//!
//! Every record that is hashed, signed or persisted goes through [`to_text`]:
//! objects with keys sorted ascending by code point, no insignificant
//! whitespace, UTF-8. Key order is enforced here rather than relying on the
//! map type behind `serde_json::Value`, whose ordering depends on crate
//! features enabled elsewhere in the build.

use serde::Serialize;
use serde_json::Value;

/// Encode `value` as canonical text.
pub fn to_text<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    let value = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&value, &mut out)?;
    Ok(out)
}

/// Canonical text of an already-built JSON value.
pub fn value_to_text(value: &Value) -> String {
    let mut out = String::new();
    // Writing a `Value` into a `String` cannot fail: keys and scalars are
    // already valid JSON.
    write_value(value, &mut out).expect("serializing a Value is infallible");
    out
}

fn write_value(value: &Value, out: &mut String) -> Result<(), serde_json::Error> {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort_unstable();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key)?);
                out.push(':');
                write_value(&map[key], out)?;
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out)?;
            }
            out.push(']');
        }
        scalar => out.push_str(&serde_json::to_string(scalar)?),
    }
    Ok(())
}
