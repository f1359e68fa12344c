//! Canonical text rendering and hashing used by every digest in the crate.

use sha2::{Digest, Sha256};

/// Renders a number with exactly six decimals. Negative zero, and negative
/// values that round to zero, render as `0.000000`.
pub fn fmt_num(value: f64) -> String {
    let s = format!("{value:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

pub fn fmt_opt(value: Option<f64>) -> String {
    value.map(fmt_num).unwrap_or_else(|| "-".to_string())
}

/// Accumulates `key=value` fields separated by `;` and hashes them with SHA-256.
#[derive(Default)]
pub struct CanonicalWriter {
    buf: String,
}

impl CanonicalWriter {
    pub fn new(tag: &str) -> Self {
        let mut buf = String::with_capacity(256);
        buf.push_str(tag);
        buf.push('\n');
        Self { buf }
    }

    pub fn field(&mut self, key: &str, value: impl AsRef<str>) -> &mut Self {
        self.buf.push_str(key);
        self.buf.push('=');
        self.buf.push_str(value.as_ref());
        self.buf.push(';');
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        let v = fmt_num(value);
        self.field(key, v)
    }

    pub fn end_record(&mut self) -> &mut Self {
        self.buf.push('\n');
        self
    }

    pub fn text(&self) -> &str {
        &self.buf
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.buf.as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_normalized() {
        assert_eq!(fmt_num(-0.0), "0.000000");
        assert_eq!(fmt_num(-0.0000001), "0.000000");
        assert_eq!(fmt_num(-1.5), "-1.500000");
        assert_eq!(fmt_num(90.0), "90.000000");
    }
}
