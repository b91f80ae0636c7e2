//! TOML run files: the same keys as the CLI flags, with flags taking
//! precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Optional experiment settings loaded from a TOML file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub p: Option<f64>,
    pub protocol: Option<String>,
    pub family: Option<String>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub const_scale: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
