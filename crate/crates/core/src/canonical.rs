//! Canonical JSON encoding: UTF-8, object keys sorted, no insignificant
//! whitespace. Every persisted record and every exported document goes
//! through here so that equal values always produce equal bytes.

use serde::{de::DeserializeOwned, Serialize};

use crate::error::Result;

/// Serialize `value` to canonical JSON bytes.
pub fn to_vec<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    // serde_json::Map is a BTreeMap unless `preserve_order` is enabled, so
    // routing through Value sorts every object's keys.
    let value = serde_json::to_value(value)?;
    Ok(serde_json::to_vec(&value)?)
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let bytes = to_vec(value)?;
    Ok(String::from_utf8(bytes).expect("serde_json emits UTF-8"))
}

/// Pretty, still key-sorted, for human-facing files.
pub fn to_string_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&value)?)
}

pub fn from_slice<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Hex SHA-256 of the canonical encoding.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_at_every_depth() {
        let v = json!({"z": 1, "a": {"y": [ {"b": 1, "a": 2} ], "c": null}});
        assert_eq!(
            to_string(&v).unwrap(),
            r#"{"a":{"c":null,"y":[{"a":2,"b":1}]},"z":1}"#
        );
    }

    #[test]
    fn whitespace_and_order_insensitive() {
        let a: serde_json::Value = serde_json::from_str(r#" { "m" : 1 , "a":"x" } "#).unwrap();
        let b = json!({"a": "x", "m": 1});
        assert_eq!(to_vec(&a).unwrap(), to_vec(&b).unwrap());
        assert_eq!(digest(&a).unwrap(), digest(&b).unwrap());
    }
}
