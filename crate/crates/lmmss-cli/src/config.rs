//! Flat INI-style configuration files mirroring the `run` flags, and the
//! merge logic (command-line flags override file values).

use std::collections::HashMap;
use std::path::Path;

/// A parsed key-value config file: `key = value` lines, `#` comments,
/// blank lines ignored.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("config file {}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`, got `{line}`", lineno + 1))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(format!("line {}: empty key", lineno + 1));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Flag value if present, else config-file value, else none.
pub fn pick<T: Clone>(flag: &Option<T>, file: Option<T>) -> Option<T> {
    flag.clone().or(file)
}

pub fn parse_f64(key: &str, raw: &str) -> Result<f64, String> {
    raw.parse::<f64>()
        .map_err(|e| format!("{key}: expected a number, got `{raw}` ({e})"))
}

pub fn parse_usize(key: &str, raw: &str) -> Result<usize, String> {
    raw.parse::<usize>()
        .map_err(|e| format!("{key}: expected a count, got `{raw}` ({e})"))
}

pub fn parse_bool(key: &str, raw: &str) -> Result<bool, String> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("{key}: expected true/false, got `{other}`")),
    }
}

/// Comma-separated vector literal, e.g. `0,2.2660680`.
pub fn parse_vector(key: &str, raw: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(|t| parse_f64(key, t.trim()))
        .collect()
}

/// Rows of a matrix: rows separated by `;`, entries by `,`.
pub fn parse_matrix_rows(key: &str, raw: &str) -> Result<Vec<Vec<f64>>, String> {
    let rows: Vec<Vec<f64>> = raw
        .split(';')
        .map(|row| parse_vector(key, row))
        .collect::<Result<_, _>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(format!("{key}: ragged or empty matrix literal `{raw}`"));
    }
    Ok(rows)
}

/// `lo:hi:step` grid literal.
pub fn parse_grid(key: &str, raw: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("{key}: expected lo:hi:step, got `{raw}`"));
    }
    let lo = parse_f64(key, parts[0])?;
    let hi = parse_f64(key, parts[1])?;
    let step = parse_f64(key, parts[2])?;
    if !(step > 0.0) || hi < lo {
        return Err(format!("{key}: need step > 0 and hi ≥ lo in `{raw}`"));
    }
    Ok((lo, hi, step))
}
