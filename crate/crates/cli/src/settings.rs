use std::env;
use std::path::{Path, PathBuf};

use datascope::Exec;
use serde::Deserialize;

/// Optional TOML defaults. Every key is also a flag, and the flag wins.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_root: Option<PathBuf>,
    pub state_dir: Option<PathBuf>,
    pub check_counts: Option<bool>,
    pub sequential: Option<bool>,
    pub port: Option<u16>,
    pub seed: Option<u64>,
    pub perplexity: Option<f64>,
    pub iterations: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

pub struct Settings {
    pub data_root: PathBuf,
    pub state_dir: PathBuf,
    pub check_counts: bool,
    pub exec: Exec,
}

impl Settings {
    /// Flag, then config file, then `DATASCOPE_*` environment, then default.
    pub fn resolve(
        data_root: &Option<PathBuf>,
        state_dir: &Option<PathBuf>,
        no_count_check: bool,
        sequential: bool,
        file: &FileConfig,
    ) -> Self {
        let pick = |flag: &Option<PathBuf>, from_file: &Option<PathBuf>, var: &str, default: &str| {
            flag.clone()
                .or_else(|| from_file.clone())
                .or_else(|| env::var_os(var).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(default))
        };
        Settings {
            data_root: pick(data_root, &file.data_root, "DATASCOPE_DATA_ROOT", "data"),
            state_dir: pick(state_dir, &file.state_dir, "DATASCOPE_STATE_DIR", "state"),
            check_counts: !no_count_check && file.check_counts.unwrap_or(true),
            exec: if sequential || file.sequential.unwrap_or(false) {
                Exec::Sequential
            } else {
                Exec::Parallel
            },
        }
    }
}
