//! Flat key=value configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment. Keys are
//! lower_snake_case. Unknown keys are rejected so typos surface instead of
//! silently falling back to defaults.

use std::collections::BTreeMap;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct KvFile {
    entries: BTreeMap<String, String>,
    consumed: std::cell::RefCell<Vec<String>>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::validation(format!(
                    "config line {}: expected key = value, got '{raw}'",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(CliError::validation(format!(
                    "config line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
        }
        Ok(KvFile {
            entries,
            consumed: std::cell::RefCell::new(Vec::new()),
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.consumed.borrow_mut().push(key.to_string());
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::validation(format!("{key} required")))
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::validation(format!("{key}: bad number '{s}'"))),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::validation(format!("{key}: bad integer '{s}'"))),
        }
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::validation(format!("{key}: bad integer '{s}'"))),
        }
    }

    /// Comma-separated list of numbers.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse()
                        .map_err(|_| CliError::validation(format!("{key}: bad number '{tok}'")))
                })
                .collect::<Result<Vec<f64>, CliError>>()
                .map(Some),
        }
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Option<Vec<usize>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse()
                        .map_err(|_| CliError::validation(format!("{key}: bad integer '{tok}'")))
                })
                .collect::<Result<Vec<usize>, CliError>>()
                .map(Some),
        }
    }

    /// Errors on any key never consumed by a `get*` call.
    pub fn reject_unknown(&self) -> Result<(), CliError> {
        let consumed = self.consumed.borrow();
        for key in self.entries.keys() {
            if !consumed.iter().any(|k| k == key) {
                return Err(CliError::validation(format!("unknown config key '{key}'")));
            }
        }
        Ok(())
    }
}
