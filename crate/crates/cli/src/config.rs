//! `key = value` configuration files and flag/config/default resolution.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Keys accepted in a configuration file. They match the long flag names.
pub const KNOWN_KEYS: &[&str] = &[
    "audio-dir",
    "text-dir",
    "dict",
    "models",
    "out-dir",
    "rank",
    "frame-advance-ms",
    "workers",
    "method",
    "seed",
    "ref-dir",
    "hyp-dir",
    "tier",
    "data",
    "transcription",
    "members",
    "train-utterances",
    "epochs",
    "learning-rate",
    "batch-size",
    "l2",
];

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::parse(&text, Some(path.to_path_buf()))
    }

    pub fn parse(text: &str, path: Option<PathBuf>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", i + 1))?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("config line {}: unknown key `{key}`", i + 1);
            }
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            values.insert(key, value.to_string());
        }
        Ok(Self { path, values })
    }

    fn origin(&self) -> String {
        self.path
            .as_ref()
            .map_or_else(|| "config".to_string(), |p| p.display().to_string())
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key), "unlisted key {key}");
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("{}: bad value for `{key}`: {e}", self.origin()))
            })
            .transpose()
    }

    /// Relative paths in a config file are taken relative to the file.
    pub fn get_path(&self, key: &str) -> Option<PathBuf> {
        let v = self.values.get(key)?;
        let p = PathBuf::from(v);
        match (&self.path, p.is_relative()) {
            (Some(cfg), true) => Some(cfg.parent().unwrap_or(Path::new(".")).join(p)),
            _ => Some(p),
        }
    }

    /// Flag value, else config value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn pick_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn pick_path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.get_path(key))
    }

    pub fn require_path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
        self.pick_path(flag, key)
            .ok_or_else(|| anyhow!("missing required setting `--{key}`"))
    }
}
