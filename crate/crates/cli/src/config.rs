//! `key = value` run configuration. Command-line flags override the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::InputError;

/// Every key the config file may set. Dashes and underscores are
/// interchangeable in keys.
pub const KEYS: &[&str] = &[
    "shops",
    "population",
    "cards",
    "land_price",
    "out_dir",
    "seed",
    "threads",
    "exact_distances",
    "gamma",
    "peak_radius_m",
    "min_peak_density",
    "cutoff_m",
    "min_cluster_size",
    "method",
    "tiers",
    "max_iter",
    "tol",
    "per_product",
    "bins",
    "kind",
    "levels",
    "k_factor",
    "base_spacing_km",
    "shops_per_center",
    "jitter_m",
    "radius_km",
    "groups_per_center",
    "range_profile",
    "n_blobs",
    "shops_per_blob",
    "sigma_m",
    "spacing_km",
    "products_per_blob",
];

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; values may be wrapped in double quotes.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, InputError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| InputError(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(InputError(format!("config line {}: unknown key `{}`", n + 1, k.trim())));
        }
        let mut value = v.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        if map.insert(key.clone(), value.to_string()).is_some() {
            return Err(InputError(format!("config line {}: `{key}` set twice", n + 1)));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Settings> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError(format!("cannot read config {}: {e}", path.display())))?;
        Ok(Settings {
            file: parse_config(&text)?,
        })
    }

    /// The flag value if given, else the config value, else `None`.
    pub fn opt<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, InputError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| InputError(format!("config `{key}`: invalid value `{v}`: {e}"))),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, InputError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.opt(key, flag)?.unwrap_or(default))
    }

    /// Boolean switches: a set flag wins, otherwise the file decides.
    pub fn switch(&self, key: &str, flag: bool) -> Result<bool, InputError> {
        if flag {
            return Ok(true);
        }
        self.get(key, None, false)
    }

    pub fn path(&self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>, InputError> {
        self.opt(key, flag)
    }

    pub fn require_path(&self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, InputError> {
        self.path(key, flag)?.ok_or_else(|| {
            InputError(format!(
                "missing input: pass --{} or set `{key}` in the config file",
                key.replace('_', "-")
            ))
        })
    }
}
