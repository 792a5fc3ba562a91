use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Rounds to 12 significant digits; the shortest representation that
/// round-trips the rounded value is what gets printed.
pub fn round12(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let r: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// JSON number for a real; non-finite values become `null`.
pub fn real(v: f64) -> Value {
    Number::from_f64(round12(v)).map_or(Value::Null, Value::Number)
}

pub fn reals(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| real(x)).collect())
}

pub fn real_rows(rows: &[Vec<f64>]) -> Value {
    Value::Array(rows.iter().map(|r| reals(r)).collect())
}

/// Builds an object from `(key, value)` pairs. Keys are emitted sorted
/// regardless of insertion order.
pub fn object<const N: usize>(pairs: [(&str, Value); N]) -> Value {
    let mut map = Map::new();
    for (k, v) in pairs {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

pub struct Report {
    pub command: &'static str,
    pub input_digest: String,
    pub results: Value,
    pub diagnostics: Value,
}

impl Report {
    pub fn render(&self) -> String {
        let doc = object([
            ("command", Value::String(self.command.into())),
            ("diagnostics", self.diagnostics.clone()),
            ("input_digest", Value::String(self.input_digest.clone())),
            ("results", self.results.clone()),
            ("tool_version", Value::String(TOOL_VERSION.into())),
        ]);
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round12(4.483571234567891), 4.48357123457);
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(3.0), 3.0);
        assert_eq!(round12(-0.0).to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn keys_are_sorted() {
        let v = object([("zeta", real(1.0)), ("alpha", real(2.5))]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"alpha":2.5,"zeta":1.0}"#);
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(real(f64::INFINITY), Value::Null);
        assert_eq!(real(f64::NAN), Value::Null);
    }

    #[test]
    fn digest_is_sha256_hex() {
        assert_eq!(
            digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
