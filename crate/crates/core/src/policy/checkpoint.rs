//! Plain-text parameter checkpoints.
//!
//! ```text
//! cdc-checkpoint 1
//! meta task navigation
//! group actor
//! tensor cdc.encoder.weight 14 64
//! 0.01 -0.2 ...
//! ```
//!
//! Values are written with the shortest representation that parses back to
//! the same `f64`, so a save/load cycle is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::diffcore::ParamStore;
use crate::error::{Error, Result};

const MAGIC: &str = "cdc-checkpoint";
const VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub groups: Vec<(String, ParamStore)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_group(mut self, name: &str, store: &ParamStore) -> Self {
        self.groups.push((name.to_string(), store.clone()));
        self
    }

    pub fn group(&self, name: &str) -> Option<&ParamStore> {
        self.groups.iter().find(|(g, _)| g == name).map(|(_, s)| s)
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Parameter(format!("checkpoint has no `{key}` entry")))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {VERSION}\n");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {v}");
        }
        for (name, store) in &self.groups {
            let _ = writeln!(out, "group {name}");
            for (pname, value) in store.iter() {
                let _ = writeln!(out, "tensor {pname} {} {}", value.nrows(), value.ncols());
                let line: Vec<String> = value.iter().map(|x| format!("{x}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty file")?;
        match header.split_once(' ') {
            Some((MAGIC, v)) if v.trim() == VERSION.to_string() => {}
            _ => return Err(format!("unrecognised header `{header}`")),
        }
        let mut ck = Checkpoint::new();
        while let Some(line) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            let (kind, rest) = line.split_once(' ').ok_or_else(|| format!("malformed line `{line}`"))?;
            match kind {
                "meta" => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    ck.meta.insert(k.to_string(), v.to_string());
                }
                "group" => ck.groups.push((rest.to_string(), ParamStore::new())),
                "tensor" => {
                    let f: Vec<&str> = rest.split_whitespace().collect();
                    let [name, r, c] = f[..] else {
                        return Err(format!("malformed tensor header `{line}`"));
                    };
                    let rows: usize = r.parse().map_err(|_| format!("bad row count in `{line}`"))?;
                    let cols: usize = c.parse().map_err(|_| format!("bad column count in `{line}`"))?;
                    let data = lines.next().ok_or_else(|| format!("missing values for `{name}`"))?;
                    let vals = data
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| format!("bad value for `{name}`: {e}"))?;
                    let arr = Array2::from_shape_vec((rows, cols), vals)
                        .map_err(|_| format!("`{name}` does not hold {rows}×{cols} values"))?;
                    let (_, store) = ck.groups.last_mut().ok_or("tensor before any group")?;
                    store.add(name, arr);
                }
                other => return Err(format!("unknown record `{other}`")),
            }
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text).map_err(|reason| Error::Format {
            path: path.display().to_string(),
            reason,
        })
    }
}
