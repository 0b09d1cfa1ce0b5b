//! `key=value` run files and list-valued flags.

use std::collections::HashMap;

const KEYS: [&str; 15] = [
    "claims",
    "penalty",
    "m",
    "params",
    "N",
    "T",
    "c",
    "lambda",
    "delta",
    "u",
    "seed",
    "paths",
    "out",
    "reference",
    "error",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    /// One `key=value` per line; blank lines and `#` comments are skipped.
    /// Keys may carry the leading `--` of the matching flag.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = HashMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got '{line}'", no + 1))?;
            let key = key.trim().trim_start_matches("--");
            if !KEYS.contains(&key) {
                return Err(format!("line {}: unknown key '{key}'", no + 1));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<f64>()
                .map_err(|e| format!("'{p}' is not a number: {e}"))
        })
        .collect()
}

/// Either a comma-separated list or `start:step:end` (end included).
pub fn parse_u_list(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [_] => parse_list(s),
        [a, step, b] => {
            let nums = parse_list(&format!("{a},{step},{b}"))?;
            let (a, step, b) = (nums[0], nums[1], nums[2]);
            if !(step > 0.0) || b < a {
                return Err(format!("invalid range '{s}'"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|k| a + k as f64 * step).collect())
        }
        _ => Err(format!("invalid reserve list '{s}'")),
    }
}
