//! TOML experiment files: one table per simulator section.
//!
//! ```toml
//! [content]
//! num_contents = 200
//!
//! [caching]
//! capacity = 25
//! ```
//!
//! Every key is optional; missing keys take the simulator defaults.

use std::collections::BTreeMap;
use std::path::Path;

use edgecache::sim::SimConfig;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{}unknown key `{key}`{}", line_prefix(*.line), suggestion(.nearest))]
    UnknownKey {
        key: String,
        line: Option<usize>,
        nearest: Option<String>,
    },
    #[error("{}{message}", line_prefix(*.line))]
    Invalid { message: String, line: Option<usize> },
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

fn suggestion(nearest: &Option<String>) -> String {
    nearest
        .as_ref()
        .map(|k| format!("; did you mean `{k}`?"))
        .unwrap_or_default()
}

/// Dotted names of every accepted key, grouped by section.
pub fn known_keys() -> BTreeMap<String, Vec<String>> {
    // Options are filled so they show up in the serialized table.
    let mut cfg = SimConfig::default();
    cfg.network.noise_variance = Some(1.0);
    cfg.clustering.alpha = Some(0.0);
    cfg.clustering.sigma_l = Some(1.0);
    let table = Table::try_from(&cfg).expect("default config serializes");
    table
        .into_iter()
        .map(|(section, v)| {
            let keys = match v {
                Value::Table(t) => t.keys().cloned().collect(),
                _ => Vec::new(),
            };
            (section, keys)
        })
        .collect()
}

/// Closest accepted dotted key to `key`, if any is reasonably close.
pub fn nearest_key(key: &str) -> Option<String> {
    let all: Vec<String> = known_keys()
        .into_iter()
        .flat_map(|(s, ks)| ks.into_iter().map(move |k| format!("{s}.{k}")))
        .collect();
    let (section, leaf) = key.split_once('.').unwrap_or(("", key));
    all.into_iter()
        .map(|k| {
            let (ks, kl) = k.split_once('.').expect("dotted");
            // Prefer keys in the same section, then close spellings.
            let dist = strsim::levenshtein(leaf, kl) + if ks == section { 0 } else { 2 };
            (dist, k)
        })
        .filter(|(d, _)| *d <= 4)
        .min()
        .map(|(_, k)| k)
}

/// 1-based line where `dotted` (a section or `section.key`) is assigned
/// in `src`, found by a line scan that tracks `[section]` headers.
pub fn locate_key(src: &str, dotted: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = h.trim().to_string();
            if current == dotted {
                return Some(i + 1);
            }
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else {
            continue;
        };
        let lhs = lhs.trim().trim_matches('"');
        let full = if current.is_empty() {
            lhs.to_string()
        } else {
            format!("{current}.{lhs}")
        };
        if full == dotted || full.starts_with(&format!("{dotted}.")) {
            return Some(i + 1);
        }
    }
    None
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Unknown keys of `table`, as dotted names.
pub fn unknown_keys(table: &Table) -> Vec<String> {
    let known = known_keys();
    let mut out = Vec::new();
    for (section, v) in table {
        match known.get(section) {
            None => out.push(section.clone()),
            Some(keys) => {
                if let Value::Table(t) = v {
                    out.extend(
                        t.keys()
                            .filter(|k| !keys.contains(k))
                            .map(|k| format!("{section}.{k}")),
                    );
                }
            }
        }
    }
    out
}

fn unknown_key_error(src: &str, key: String) -> ConfigError {
    ConfigError::UnknownKey {
        line: locate_key(src, &key),
        nearest: nearest_key(&key),
        key,
    }
}

/// Line of the key a validation message is about, if it was set in `src`.
fn blame_line(src: &str, message: &str) -> Option<usize> {
    let key = if message.starts_with("T1") {
        "sim.t1".to_string()
    } else if message.starts_with("T2") {
        "sim.t2".to_string()
    } else if message.starts_with("slots_total") {
        "sim.slots_total".to_string()
    } else {
        message
            .split(|c: char| c.is_whitespace() || c == ':')
            .next()
            .unwrap_or("")
            .to_string()
    };
    locate_key(src, &key)
}

/// Parses and validates an experiment file's text.
pub fn parse_config_str(src: &str) -> Result<SimConfig, ConfigError> {
    let table: Table = toml::from_str(src).map_err(|e| ConfigError::Invalid {
        line: e.span().map(|s| line_of_offset(src, s.start)),
        message: e.message().to_string(),
    })?;
    if let Some(key) = unknown_keys(&table).into_iter().next() {
        return Err(unknown_key_error(src, key));
    }
    let cfg: SimConfig = toml::from_str(src).map_err(|e| ConfigError::Invalid {
        line: e.span().map(|s| line_of_offset(src, s.start)),
        message: e.message().to_string(),
    })?;
    cfg.validate().map_err(|e| {
        let message = match e {
            edgecache::Error::Config(m) => m,
            other => other.to_string(),
        };
        ConfigError::Invalid {
            line: blame_line(src, &message),
            message,
        }
    })?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&src)
}

/// Canonical text form; parsing it back yields the same config.
pub fn to_toml(cfg: &SimConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

/// Sets `section.key` on `cfg` to `value`. `network.lambda_ratio` is a
/// derived key that sets `lambda_sbs = ratio * lambda_ue`.
pub fn set_key(cfg: &SimConfig, dotted: &str, value: &Value) -> Result<SimConfig, ConfigError> {
    if dotted == "network.lambda_ratio" {
        let ratio = value.as_float().or_else(|| value.as_integer().map(|i| i as f64));
        let ratio = ratio.ok_or_else(|| ConfigError::Invalid {
            message: format!("network.lambda_ratio must be a number, got {value}"),
            line: None,
        })?;
        let mut out = cfg.clone();
        out.network.lambda_sbs = ratio * out.network.lambda_ue;
        return Ok(out);
    }
    let (section, key) = dotted.split_once('.').ok_or_else(|| ConfigError::UnknownKey {
        key: dotted.to_string(),
        line: None,
        nearest: nearest_key(dotted),
    })?;
    let known = known_keys();
    if !known.get(section).is_some_and(|ks| ks.iter().any(|k| k == key)) {
        return Err(ConfigError::UnknownKey {
            key: dotted.to_string(),
            line: None,
            nearest: nearest_key(dotted),
        });
    }
    let mut table = Table::try_from(cfg).expect("config serializes");
    let sec = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    if let Value::Table(t) = sec {
        t.insert(key.to_string(), value.clone());
    }
    Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Invalid {
        message: format!("{dotted}: {}", e.message()),
        line: None,
    })
}
