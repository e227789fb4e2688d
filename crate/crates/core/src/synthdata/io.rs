use std::fs;
use std::path::Path;

use super::features::{FeatureSequence, Source};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"PHSF";
pub const FEATURE_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// `PHSF | u32 version | u32 T | u32 D | T·D f32`, all little-endian.
pub fn features_to_bytes(seq: &FeatureSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * seq.data().len());
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.num_frames() as u32).to_le_bytes());
    out.extend_from_slice(&(seq.dim() as u32).to_le_bytes());
    for v in seq.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], offset: usize) -> Result<u32> {
    let b = bytes.get(offset..offset + 4).ok_or_else(|| {
        Error::format(bytes.len() as u64, format!("header truncated, expected {HEADER_LEN} bytes"))
    })?;
    Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
}

pub fn features_from_bytes(bytes: &[u8]) -> Result<FeatureSequence> {
    if bytes.len() < 4 || &bytes[..4] != FEATURE_MAGIC {
        return Err(Error::format(0, "not a feature file (bad magic)"));
    }
    let version = u32_at(bytes, 4)?;
    if version != FEATURE_VERSION {
        return Err(Error::format(4, format!("unsupported feature file version {version}")));
    }
    let t = u32_at(bytes, 8)? as usize;
    let d = u32_at(bytes, 12)? as usize;
    if d == 0 {
        return Err(Error::format(12, "feature dimension is 0"));
    }
    let expected = t
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format(8, "frame count overflows"))?;
    if bytes.len() < expected {
        return Err(Error::format(
            bytes.len() as u64,
            format!("data truncated, {t} × {d} needs {expected} bytes"),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::format(expected as u64, "trailing bytes after feature data"));
    }
    let mut data = Vec::with_capacity(t * d);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(Error::format((HEADER_LEN + 4 * i) as u64, "non-finite feature value"));
        }
        data.push(v);
    }
    FeatureSequence::new(t, d, data, Source::External)
}

pub fn save_features(seq: &FeatureSequence, path: &Path) -> Result<()> {
    fs::write(path, features_to_bytes(seq)).map_err(|e| Error::io(path, e))
}

/// Reads a binary feature file; the result is tagged external.
pub fn load_features(path: &Path) -> Result<FeatureSequence> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    features_from_bytes(&bytes).map_err(|e| match e {
        Error::Format { offset, message } => Error::Format {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Comma-separated rows, one frame per line; blank lines are skipped.
pub fn features_from_csv(text: &str) -> Result<FeatureSequence> {
    let mut data = Vec::new();
    let mut dim = None;
    let mut frames = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = parse_csv_row(line).map_err(|m| Error::Data(format!("line {}: {m}", i + 1)))?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Data(format!(
                    "line {} has {} columns, expected {d}",
                    i + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        data.extend(row);
        frames += 1;
    }
    let dim = dim.ok_or_else(|| Error::EmptyInput("CSV has no rows".into()))?;
    FeatureSequence::new(frames, dim, data, Source::External)
}

/// One comma-separated row of finite numbers.
pub fn parse_csv_row(line: &str) -> std::result::Result<Vec<f32>, String> {
    line.split(',')
        .map(|c| {
            let c = c.trim();
            let v: f32 = c.parse().map_err(|_| format!("cannot parse {c:?} as a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite value {c:?}"))
            }
        })
        .collect()
}

pub fn load_features_csv(path: &Path) -> Result<FeatureSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    features_from_csv(&text)
}

/// Binary or CSV, chosen by a `.csv` extension.
pub fn load_features_any(path: &Path) -> Result<FeatureSequence> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        load_features_csv(path)
    } else {
        load_features(path)
    }
}

pub fn labels_to_string(labels: &[usize]) -> String {
    let mut s = String::with_capacity(labels.len() * 3);
    for y in labels {
        s.push_str(&y.to_string());
        s.push('\n');
    }
    s
}

pub fn labels_from_str(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::Data(format!("line {}: {:?} is not a label", i + 1, l.trim())))
        })
        .collect()
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    fs::write(path, labels_to_string(labels)).map_err(|e| Error::io(path, e))
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    labels_from_str(&text)
}
