//! Sweep grid files.
//!
//! ```toml
//! base = "dense.toml"          # optional, relative to this file
//!
//! [set]                        # fixed overrides
//! "content.num_contents" = 200
//!
//! [axes]                       # cartesian product, keys in sorted order
//! "sim.scheme" = ["proposed", "b1", "b2"]
//! "caching.capacity" = [10, 25, 50, 100]
//! ```

use std::path::Path;

use edgecache::sim::SimConfig;
use serde::Deserialize;
use toml::{Table, Value};

use crate::config::{parse_config, set_key, ConfigError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    base: Option<String>,
    #[serde(default)]
    set: Table,
    #[serde(default)]
    axes: Table,
}

/// One grid point: its overrides (for display) and the resolved config.
#[derive(Debug, Clone)]
pub struct Cell {
    pub overrides: Vec<(String, Value)>,
    pub config: SimConfig,
}

impl Cell {
    pub fn label(&self) -> String {
        if self.overrides.is_empty() {
            return "(base)".into();
        }
        self.overrides
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn parse_grid(path: &Path) -> Result<Vec<Cell>, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let base = match toml::from_str::<GridFile>(&src) {
        Ok(GridFile { base: Some(b), .. }) => {
            let dir = path.parent().unwrap_or(Path::new("."));
            Some(parse_config(&dir.join(b))?)
        }
        _ => None,
    };
    parse_grid_str(&src, base.unwrap_or_default())
}

/// Expands a grid file's text over `base`.
pub fn parse_grid_str(src: &str, base: SimConfig) -> Result<Vec<Cell>, ConfigError> {
    let grid: GridFile = toml::from_str(src).map_err(|e| ConfigError::Invalid {
        line: e
            .span()
            .map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1),
        message: e.message().to_string(),
    })?;
    let mut base = base;
    for (k, v) in &grid.set {
        base = set_key(&base, k, v)?;
    }
    let mut axes: Vec<(String, Vec<Value>)> = Vec::new();
    for (k, v) in grid.axes {
        match v {
            Value::Array(vals) if !vals.is_empty() => axes.push((k, vals)),
            _ => {
                return Err(ConfigError::Invalid {
                    message: format!("axis `{k}` must be a non-empty array"),
                    line: crate::config::locate_key(src, &format!("axes.{k}")),
                })
            }
        }
    }
    let mut cells = vec![Cell {
        overrides: Vec::new(),
        config: base,
    }];
    for (key, values) in &axes {
        let mut next = Vec::with_capacity(cells.len() * values.len());
        for cell in &cells {
            for v in values {
                let mut overrides = cell.overrides.clone();
                overrides.push((key.clone(), v.clone()));
                next.push(Cell {
                    config: set_key(&cell.config, key, v)?,
                    overrides,
                });
            }
        }
        cells = next;
    }
    for c in &cells {
        c.config.validate().map_err(|e| ConfigError::Invalid {
            message: format!("cell {}: {e}", c.label()),
            line: None,
        })?;
    }
    Ok(cells)
}
