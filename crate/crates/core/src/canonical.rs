//! Canonical JSON: UTF-8, object keys sorted, no insignificant whitespace,
//! one trailing newline.

use serde::Serialize;

/// Serializes `value` into canonical JSON bytes.
///
/// Keys are sorted because `serde_json::Map` is a `BTreeMap` unless the
/// `preserve_order` feature is enabled, which this crate never does.
pub fn to_vec<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let value = serde_json::to_value(value).expect("in-memory values always serialize");
    let mut out = serde_json::to_vec(&value).expect("json values always serialize");
    out.push(b'\n');
    out
}

/// Same as [`to_vec`], as a `String`.
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> String {
    String::from_utf8(to_vec(value)).expect("serde_json emits UTF-8")
}

/// True when `bytes` is already in canonical form.
pub fn is_canonical(bytes: &[u8]) -> bool {
    match serde_json::from_slice::<serde_json::Value>(bytes) {
        Ok(v) => to_vec(&v) == bytes,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_compact() {
        let v = json!({"b": 1, "a": {"d": [1, 2], "c": null}});
        assert_eq!(to_string(&v), "{\"a\":{\"c\":null,\"d\":[1,2]},\"b\":1}\n");
    }

    #[test]
    fn canonical_detection() {
        assert!(is_canonical(b"{\"a\":1}\n"));
        assert!(!is_canonical(b"{\"a\": 1}\n"));
        assert!(!is_canonical(b"{\"b\":1,\"a\":2}\n"));
        assert!(!is_canonical(b"{\"a\":1}"));
    }
}
