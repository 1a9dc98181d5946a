//! Optional `key=value` config file. Values act as defaults; explicit
//! command-line flags always win.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use gait_triage::{Error, Result};

/// Every key a config file may set. Matches the long flag names of the
/// subcommands that consume them; switch-style flags (`--strict`,
/// `--svg`, `--no-ensemble`) stay flag-only.
const KNOWN_KEYS: &[&str] = &[
    "jobs",
    "seed",
    "n-good",
    "n-bad",
    "duration-s",
    "n-fft",
    "stft-hop",
    "n-mels",
    "fmin-hz",
    "fmax-hz",
    "db-floor",
    "window-s",
    "hop-s",
    "min-prominence-ratio",
    "folds",
    "budget-s",
    "test-fraction",
    "threshold",
];

#[derive(Debug, Default)]
pub struct Config {
    values: HashMap<String, String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let body = std::fs::read_to_string(path)?;
        let mut values = HashMap::new();
        for (n, raw) in body.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse(format!(
                    "config line {}: expected key=value, got '{line}'",
                    n + 1
                )));
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Parse(format!(
                    "config line {}: unknown key '{key}'",
                    n + 1
                )));
            }
            if values
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::Parse(format!(
                    "config line {}: duplicate key '{key}'",
                    n + 1
                )));
            }
        }
        Ok(Config { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key), "unregistered config key {key}");
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| Error::Parse(format!("config key '{key}': {e}"))),
        }
    }

    /// Flag value if given, else config value, else `default`.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Like [`Config::resolve`] but without a default.
    pub fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}
