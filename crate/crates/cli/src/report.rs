//! Deterministic JSON: sorted keys, floats as `d.dddddddddddddddde±x`.

use serde_json::ser::{Formatter, Serializer};
use serde_json::Value;
use std::io::{self, Write};
use std::path::Path;

struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }
}

/// Serializes `v` with a trailing newline. Object keys come out sorted because
/// `serde_json::Map` is a `BTreeMap`; non-finite floats are already `null`.
pub fn to_bytes(v: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, FixedFloats);
    serde::Serialize::serialize(v, &mut ser).expect("writing to a Vec cannot fail");
    out.push(b'\n');
    out
}

/// Writes atomically to `path`, or to stdout when `path` is `None`.
pub fn emit(v: &Value, path: Option<&Path>) -> heislab_core::Result<()> {
    let bytes = to_bytes(v);
    match path {
        Some(p) => heislab_core::io::save_bytes(p, &bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
