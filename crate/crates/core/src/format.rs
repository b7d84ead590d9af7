//! Fixed-precision float output for reports.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// A float serialized as a JSON number with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(sig17(self.0)).map_err(S::Error::custom)?;
        raw.serialize(serializer)
    }
}

pub fn serialize_sig17<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    Sig17(*x).serialize(serializer)
}

pub fn serialize_sig17_opt<S: Serializer>(x: &Option<f64>, serializer: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => Sig17(*v).serialize(serializer),
        None => serializer.serialize_none(),
    }
}
