//! Binary signal and field files, plus serde helpers for complex vectors.
//!
//! Both formats are a single JSON header line followed by little-endian
//! `(re, im)` f64 pairs. Fields use the `HBF1` header
//! `{"M", "Ny", "Nx", "dy", "dx", "layout": "k-major"}`; the signal grid is
//! recovered from it as `L = 1/dy`, `N = L/dx`.

use crate::error::{LabError, Result};
use crate::field::HeisenbergField;
use crate::group::GridParams;
use crate::signal::SampledSignal;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SignalHeader {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "L")]
    l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FieldHeader {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "Ny")]
    ny: usize,
    #[serde(rename = "Nx")]
    nx: usize,
    dy: f64,
    dx: f64,
    layout: String,
}

const LAYOUT: &str = "k-major";

fn write_pairs<W: Write>(w: &mut W, values: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 16);
    for v in values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_pairs<R: Read>(r: &mut R, count: usize) -> Result<Vec<Complex64>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() != count * 16 {
        return Err(LabError::Format(format!(
            "expected {} payload bytes, found {}",
            count * 16,
            buf.len()
        )));
    }
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

fn read_header_line<R: BufRead>(r: &mut R) -> Result<String> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(LabError::Format("missing header line".into()));
    }
    line.pop();
    String::from_utf8(line).map_err(|e| LabError::Format(e.to_string()))
}

fn header_json<T: Serialize>(h: &T) -> Result<String> {
    serde_json::to_string(h).map_err(|e| LabError::Format(e.to_string()))
}

pub fn write_signal<W: Write>(w: &mut W, s: &SampledSignal) -> Result<()> {
    let h = SignalHeader {
        n: s.len(),
        l: s.period(),
    };
    writeln!(w, "{}", header_json(&h)?)?;
    write_pairs(w, s.values())
}

pub fn read_signal<R: Read>(r: R) -> Result<SampledSignal> {
    let mut r = BufReader::new(r);
    let line = read_header_line(&mut r)?;
    let h: SignalHeader =
        serde_json::from_str(&line).map_err(|e| LabError::Format(format!("signal header: {e}")))?;
    let values = read_pairs(&mut r, h.n)?;
    SampledSignal::new(values, h.l)
}

pub fn write_field<W: Write>(w: &mut W, f: &HeisenbergField) -> Result<()> {
    let g = f.grid();
    let h = FieldHeader {
        m: g.theta_samples,
        ny: g.ny,
        nx: g.nx,
        dy: g.dy(),
        dx: g.dx(),
        layout: LAYOUT.into(),
    };
    writeln!(w, "{}", header_json(&h)?)?;
    write_pairs(w, f.raw())
}

pub fn read_field<R: Read>(r: R) -> Result<HeisenbergField> {
    let mut r = BufReader::new(r);
    let line = read_header_line(&mut r)?;
    let h: FieldHeader =
        serde_json::from_str(&line).map_err(|e| LabError::Format(format!("field header: {e}")))?;
    if h.layout != LAYOUT {
        return Err(LabError::Format(format!(
            "unsupported layout {:?}",
            h.layout
        )));
    }
    if !(h.dy > 0.0 && h.dx > 0.0 && h.dy.is_finite() && h.dx.is_finite()) {
        return Err(LabError::Format("spacings must be positive".into()));
    }
    let period = 1.0 / h.dy;
    let n_real = period / h.dx;
    let n = n_real.round();
    if n < 1.0 || (n - n_real).abs() > 1e-6 * n {
        return Err(LabError::Format(format!(
            "dx = {} and dy = {} do not describe an integer signal grid",
            h.dx, h.dy
        )));
    }
    let g = GridParams::new(n as usize, period, h.m, h.ny, h.nx)?;
    let data = read_pairs(&mut r, h.m * h.ny * h.nx)?;
    HeisenbergField::from_raw(g, data)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| LabError::Io(format!("not a file path: {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let res = std::fs::write(&tmp, bytes).and_then(|_| std::fs::rename(&tmp, path));
    if res.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    res.map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

/// Writes a signal via a temporary file renamed into place.
pub fn save_signal(path: &Path, s: &SampledSignal) -> Result<()> {
    let mut buf = Vec::new();
    write_signal(&mut buf, s)?;
    write_atomic(path, &buf)
}

pub fn load_signal(path: &Path) -> Result<SampledSignal> {
    let f =
        std::fs::File::open(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
    read_signal(f)
}

/// Writes a field via a temporary file renamed into place.
pub fn save_field(path: &Path, f: &HeisenbergField) -> Result<()> {
    let mut buf = Vec::new();
    write_field(&mut buf, f)?;
    write_atomic(path, &buf)
}

pub fn load_field(path: &Path) -> Result<HeisenbergField> {
    let f =
        std::fs::File::open(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
    read_field(f)
}

/// Atomic write of arbitrary bytes (reports, CSV).
pub fn save_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes)
}

/// Serde for `Vec<Complex64>` as `[[re, im], ...]`.
pub mod complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|c| [c.re, c.im])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect())
    }
}

/// Serde for `Option<Vec<Complex64>>`.
pub mod opt_complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<Complex64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|v| v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>())
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<Vec<Complex64>>, D::Error> {
        let raw: Option<Vec<[f64; 2]>> = Option::deserialize(d)?;
        Ok(raw.map(|v| {
            v.into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect()
        }))
    }
}
