//! Plain-text `key = value` configuration files.

use std::collections::BTreeMap;

pub const KEYS: [&str; 8] = ["p1", "p2", "s1", "s2", "rel_tol", "abs_tol", "max_steps", "initial_step"];

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; unknown keys, repeated keys and unparseable numbers are errors.
pub fn parse(text: &str) -> Result<BTreeMap<String, f64>, String> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(format!("line {}: unknown key '{key}'", lineno + 1));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("line {}: '{}' is not a number", lineno + 1, value.trim()))?;
        if !value.is_finite() {
            return Err(format!("line {}: {key} must be finite", lineno + 1));
        }
        if out.insert(key.clone(), value).is_some() {
            return Err(format!("line {}: '{key}' given twice", lineno + 1));
        }
    }
    Ok(out)
}
