//! JSON configs layered as defaults < file < `--set key.path=value`.

use std::fs;
use std::path::Path;

use phaseseg::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Sets `a.b.c` to `raw`, parsed as JSON when possible and as a string
/// otherwise. Intermediate objects must already exist.
pub fn set_path(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {} is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(Error::Config(format!("unknown config key {key:?}")));
            }
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .get_mut(*part)
            .ok_or_else(|| Error::Config(format!("unknown config key {key:?}")))?;
    }
    unreachable!("split yields at least one part")
}

pub fn load_file(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Resolves a config: `defaults`, then the file, then each override, then
/// `finish` for flag-level adjustments.
pub fn resolve<T: Serialize + DeserializeOwned>(
    defaults: &T,
    file: Option<&Path>,
    sets: &[String],
    finish: impl FnOnce(&mut Value),
) -> Result<T> {
    let mut v = serde_json::to_value(defaults).expect("config serializes");
    if let Some(f) = file {
        merge(&mut v, load_file(f)?);
    }
    for s in sets {
        set_path(&mut v, s)?;
    }
    finish(&mut v);
    serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
}
