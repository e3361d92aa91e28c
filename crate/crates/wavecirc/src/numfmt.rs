//! Fixed 17-significant-digit float formatting, used for every serialized
//! number so reruns are byte-identical and values roundtrip exactly.

use serde::ser::{Error as _, SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

/// Scientific notation with 17 significant digits, e.g. `1.3089969389957470e0`.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

fn raw(x: f64) -> Result<Box<RawValue>, String> {
    if !x.is_finite() {
        return Err(format!("non-finite value {x}"));
    }
    RawValue::from_string(fmt17(x)).map_err(|e| e.to_string())
}

pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw(*x).map_err(S::Error::custom)?.serialize(s)
}

pub fn ser_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&raw(*x).map_err(S::Error::custom)?)?;
    }
    seq.end()
}

pub fn ser_vec2<S: Serializer>(v: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
    struct Row<'a>(&'a [f64]);
    impl serde::Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_vec(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for row in v {
        seq.serialize_element(&Row(row))?;
    }
    seq.end()
}
