//! Output directories and provenance headers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "EDGECACHE_OUT";

pub fn version_string() -> String {
    format!("edgecache {}", env!("CARGO_PKG_VERSION"))
}

/// Hex SHA-256 of the canonical config text.
pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Where a command writes and what it records about itself.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub parallel: Option<usize>,
    pub debug_dumps: bool,
    pub overwrite: bool,
    pub config_hash: String,
}

impl RunManifest {
    /// `#`-prefixed lines placed at the top of every CSV; `cmd_plot` and
    /// the csv reader skip them.
    pub fn header(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let mut h = format!(
            "# version: {}\n# config_sha256: {}\n# seeds: {}\n",
            version_string(),
            self.config_hash,
            seeds.join(",")
        );
        if let Some(p) = &self.config_path {
            h.push_str(&format!("# config: {}\n", p.display()));
        }
        h
    }

    /// Creates the output directory if needed.
    pub fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating output directory {}", self.out_dir.display()))
    }

    /// Path of `name` in the output directory, refusing to clobber an
    /// existing file unless overwriting was requested.
    pub fn target(&self, name: &str) -> Result<PathBuf> {
        let p = self.out_dir.join(name);
        if p.exists() && !self.overwrite {
            bail!("{} already exists (pass --overwrite to replace it)", p.display());
        }
        Ok(p)
    }

    /// Fails before any work is done if one of `names` would be clobbered.
    pub fn check_targets(&self, names: &[&str]) -> Result<()> {
        for n in names {
            self.target(n)?;
        }
        Ok(())
    }

    pub fn write(&self, name: &str, body: &[u8]) -> Result<PathBuf> {
        let p = self.target(name)?;
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut f = fs::File::create(&p).with_context(|| format!("writing {}", p.display()))?;
        f.write_all(body)?;
        Ok(p)
    }

    /// Writes a CSV body behind the provenance header.
    pub fn write_csv(&self, name: &str, body: &[u8]) -> Result<PathBuf> {
        let mut all = self.header().into_bytes();
        all.extend_from_slice(body);
        self.write(name, &all)
    }
}

/// Resolves `--out`, falling back to `$EDGECACHE_OUT/<default_name>` and
/// then `./results/<default_name>`.
pub fn resolve_out_dir(out: Option<&Path>, default_name: &str) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"));
    root.join(default_name)
}
