//! Flat `key = value` configuration files for [`SimConfig`].
//!
//! One assignment per line; `#` starts a comment. Keys mirror the field
//! names of [`SimConfig`]. Missing keys keep their defaults, while unknown or
//! repeated keys are errors.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use dglm_core::bandit::ThompsonVariant;
use dglm_core::sim::SimConfig;

use crate::error::{Error, Result};

pub const KEYS: &[&str] = &[
    "num_arms",
    "rounds",
    "repetitions",
    "k1",
    "k2",
    "drift_rate",
    "drift_corr",
    "cont_corr",
    "sigma_y2",
    "seed",
    "thompson_variant",
];

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Config {
        line,
        message: format!("invalid value {raw:?} for {key}"),
    })
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut config = SimConfig::default();
    let mut seen = HashSet::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, raw) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            message: format!("expected key = value, found {content:?}"),
        })?;
        let key = key.trim();
        let raw = raw.trim().trim_matches('"');
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                line,
                message: format!("unknown key {key:?}"),
            });
        }
        if !seen.insert(key.to_owned()) {
            return Err(Error::Config {
                line,
                message: format!("duplicate key {key:?}"),
            });
        }
        match key {
            "num_arms" => config.num_arms = value(line, key, raw)?,
            "rounds" => config.rounds = value(line, key, raw)?,
            "repetitions" => config.repetitions = value(line, key, raw)?,
            "k1" => config.k1 = value(line, key, raw)?,
            "k2" => config.k2 = value(line, key, raw)?,
            "drift_rate" => config.drift_rate = value(line, key, raw)?,
            "drift_corr" => config.drift_corr = value(line, key, raw)?,
            "cont_corr" => config.cont_corr = value(line, key, raw)?,
            "sigma_y2" => config.sigma_y2 = value(line, key, raw)?,
            "seed" => config.seed = value(line, key, raw)?,
            "thompson_variant" => {
                config.thompson_variant =
                    ThompsonVariant::parse(raw).ok_or_else(|| Error::Config {
                        line,
                        message: format!("thompson_variant must be per_arm or shared, got {raw:?}"),
                    })?
            }
            _ => unreachable!("key list and match arms disagree"),
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_config(&text)
}

/// Writes every field, in a form [`parse_config`] reads back exactly.
pub fn render_config(config: &SimConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "num_arms = {}", config.num_arms);
    let _ = writeln!(out, "rounds = {}", config.rounds);
    let _ = writeln!(out, "repetitions = {}", config.repetitions);
    let _ = writeln!(out, "k1 = {}", config.k1);
    let _ = writeln!(out, "k2 = {}", config.k2);
    let _ = writeln!(out, "drift_rate = {}", config.drift_rate);
    let _ = writeln!(out, "drift_corr = {}", config.drift_corr);
    let _ = writeln!(out, "cont_corr = {}", config.cont_corr);
    let _ = writeln!(out, "sigma_y2 = {}", config.sigma_y2);
    let _ = writeln!(out, "seed = {}", config.seed);
    let _ = writeln!(out, "thompson_variant = {}", config.thompson_variant.as_str());
    out
}
