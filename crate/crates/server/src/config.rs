use std::env;
use std::path::PathBuf;

use datascope::Exec;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub port: u16,
    /// Holds `20ng/`, `mnist/` and `zenodo-8337723/`.
    pub data_root: PathBuf,
    /// Sessions, hypotheses and layouts are written here.
    pub state_dir: PathBuf,
    /// Reject corpora whose document count differs from the published one.
    pub check_counts: bool,
    pub exec: Exec,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            port: 8080,
            data_root: PathBuf::from("data"),
            state_dir: PathBuf::from("state"),
            check_counts: true,
            exec: Exec::default(),
        }
    }
}

impl ServerConfig {
    /// Reads `DATASCOPE_PORT`, `DATASCOPE_DATA_ROOT` and `DATASCOPE_STATE_DIR`
    /// over the defaults.
    pub fn from_env() -> Result<Self, String> {
        let mut cfg = ServerConfig::default();
        if let Ok(p) = env::var("DATASCOPE_PORT") {
            cfg.port = p
                .trim()
                .parse()
                .map_err(|_| format!("DATASCOPE_PORT={p:?} is not a port number"))?;
        }
        if let Some(d) = env::var_os("DATASCOPE_DATA_ROOT") {
            cfg.data_root = d.into();
        }
        if let Some(d) = env::var_os("DATASCOPE_STATE_DIR") {
            cfg.state_dir = d.into();
        }
        Ok(cfg)
    }
}
