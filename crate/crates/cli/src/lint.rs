//! Checks that every float in a report is backed by a bound or a tag.
//!
//! A float leaf passes when the object holding it, or any enclosing object,
//! has one of [`COVERING_KEYS`]. Integers are counts and indices and are
//! exempt.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::Value;

pub const COVERING_KEYS: [&str; 5] = ["bound", "error_bound", "tier", "empirical", "exact"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub file: PathBuf,
    /// JSON path of the uncovered leaf, e.g. `$.rows[3].re`.
    pub path: String,
}

/// Uncovered float leaves of one parsed report.
pub fn check_value(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    walk(v, "$", false, &mut out);
    out
}

fn walk(v: &Value, path: &str, covered: bool, out: &mut Vec<String>) {
    match v {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) && !covered => out.push(path.to_string()),
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                walk(x, &format!("{path}[{i}]"), covered, out);
            }
        }
        Value::Object(m) => {
            let covered = covered || COVERING_KEYS.iter().any(|k| m.contains_key(*k));
            for (k, x) in m {
                walk(x, &format!("{path}.{k}"), covered, out);
            }
        }
        _ => {}
    }
}

/// JSON files under `paths`, directories searched one level deep.
pub fn collect(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut here: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            here.sort();
            files.extend(here);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

pub fn lint_file(file: &Path) -> Result<Vec<Violation>> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))?;
    Ok(check_value(&v).into_iter().map(|path| Violation { file: file.to_path_buf(), path }).collect())
}
