//! Flat `key = value` text files for run configurations and manifests.
//! Blank lines and `#` comments are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io;
use crate::separator::{InitialSeparation, RunConfig};

/// Ordered key-value pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    pairs: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        let key = key.into();
        let value = value.to_string();
        match self.pairs.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.pairs.push((key, value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut kv = KeyValues::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, idx + 1, "expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(origin, idx + 1, "empty key"));
            }
            if kv.get(key).is_some() {
                return Err(Error::parse(
                    origin,
                    idx + 1,
                    format!("duplicate key {key:?}"),
                ));
            }
            kv.pairs.push((key.to_string(), value.trim().to_string()));
        }
        Ok(kv)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

pub const CONFIG_KEYS: [&str; 11] = [
    "algorithm",
    "gradient_variant",
    "block_size",
    "epochs",
    "eta",
    "beta1",
    "beta2",
    "epsilon",
    "mu",
    "alpha",
    "seed",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, origin: &Path) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(origin, 0, format!("invalid value {value:?} for {key}")))
}

/// Applies every key in `kv` on top of `base`. Unknown keys are errors.
/// `w0` is `identity` or a path to a matrix CSV, relative to the config
/// file's directory.
pub fn apply_config(base: RunConfig, kv: &KeyValues, origin: &Path) -> Result<RunConfig> {
    let mut c = base;
    for (key, value) in kv.iter() {
        match key {
            "algorithm" => c.algorithm = value.parse()?,
            "gradient_variant" => c.gradient_variant = value.parse()?,
            "block_size" => c.block_size = parse_value(key, value, origin)?,
            "epochs" => c.epochs = parse_value(key, value, origin)?,
            "eta" => c.adam.eta = parse_value(key, value, origin)?,
            "beta1" => c.adam.beta1 = parse_value(key, value, origin)?,
            "beta2" => c.adam.beta2 = parse_value(key, value, origin)?,
            "epsilon" => c.adam.epsilon = parse_value(key, value, origin)?,
            "mu" => c.mu = parse_value(key, value, origin)?,
            "alpha" => c.alpha = parse_value(key, value, origin)?,
            "seed" => c.seed = parse_value(key, value, origin)?,
            "w0" => {
                c.w0 = if value == "identity" {
                    InitialSeparation::Identity
                } else {
                    let base_dir = origin.parent().unwrap_or(Path::new("."));
                    let p: PathBuf = base_dir.join(value);
                    InitialSeparation::Explicit(io::read_matrix_csv(p)?)
                }
            }
            other => {
                return Err(Error::parse(
                    origin,
                    0,
                    format!("unknown config key {other:?}"),
                ))
            }
        }
    }
    c.validate()?;
    Ok(c)
}

pub fn read_config(path: impl AsRef<Path>, base: RunConfig) -> Result<RunConfig> {
    let path = path.as_ref();
    apply_config(base, &KeyValues::read(path)?, path)
}

/// Key-value form of a config. An explicit `w0` is written as `explicit`
/// and must be stored separately by the caller.
pub fn config_to_kv(c: &RunConfig) -> KeyValues {
    let mut kv = KeyValues::new();
    kv.set("algorithm", c.algorithm.name())
        .set("gradient_variant", c.gradient_variant.name())
        .set("block_size", c.block_size)
        .set("epochs", c.epochs)
        .set("eta", io::format_f64(c.adam.eta))
        .set("beta1", io::format_f64(c.adam.beta1))
        .set("beta2", io::format_f64(c.adam.beta2))
        .set("epsilon", io::format_f64(c.adam.epsilon))
        .set("mu", io::format_f64(c.mu))
        .set("alpha", io::format_f64(c.alpha))
        .set("seed", c.seed)
        .set(
            "w0",
            match c.w0 {
                InitialSeparation::Identity => "identity",
                InitialSeparation::Explicit(_) => "explicit",
            },
        );
    kv
}
