//! Text artifact helpers: fixed-precision floats, instance CSVs, digests.
//!
//! Every float written by this crate goes through [`fmt_f64`], which emits
//! 17 significant digits in scientific notation. Parsing that text with
//! `str::parse::<f64>` recovers the exact same bits.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{Instance, LabelId};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// An `f64` that serializes into JSON with the same 17-digit text as the CSVs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fixed17(pub f64);

impl Serialize for Fixed17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = serde_json::value::RawValue::from_string(fmt_f64(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Renders instances as `id,true_label,f_1,...,f_d`.
pub fn instances_to_csv(instances: &[Instance], dim: usize) -> String {
    let mut s = String::from("id,true_label");
    for j in 1..=dim {
        let _ = write!(s, ",f_{j}");
    }
    s.push('\n');
    for inst in instances {
        let _ = write!(s, "{},{}", inst.id, inst.true_label);
        for &v in &inst.features {
            s.push(',');
            s.push_str(&fmt_f64(v));
        }
        s.push('\n');
    }
    s
}

pub fn write_instances(path: &Path, instances: &[Instance], dim: usize) -> Result<()> {
    write_text(path, &instances_to_csv(instances, dim))
}

pub fn parse_instances(path: &Path, text: &str) -> Result<Vec<Instance>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format(path, 1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "id" || cols[1] != "true_label" {
        return Err(Error::format(path, 1, "header must start with id,true_label"));
    }
    let dim = cols.len() - 2;
    for (j, c) in cols[2..].iter().enumerate() {
        if *c != format!("f_{}", j + 1) {
            return Err(Error::format(path, 1, format!("expected column f_{}, found {c}", j + 1)));
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(Error::format(
                path,
                lineno,
                format!("expected {} fields, found {}", dim + 2, fields.len()),
            ));
        }
        let id = fields[0]
            .parse::<u64>()
            .map_err(|e| Error::format(path, lineno, format!("bad id: {e}")))?;
        let label = fields[1]
            .parse::<u32>()
            .map_err(|e| Error::format(path, lineno, format!("bad label: {e}")))?;
        let features = fields[2..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, lineno, format!("bad feature: {e}")))?;
        let inst = Instance::new(id, features, LabelId(label)).map_err(|e| Error::format(path, lineno, e.to_string()))?;
        out.push(inst);
    }
    Ok(out)
}

pub fn read_instances(path: &Path) -> Result<Vec<Instance>> {
    parse_instances(path, &read_text(path)?)
}
