//! Run manifests: what was run, on which inputs, producing which files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
    /// Number of files hashed; directories are hashed file by file in path order.
    pub files: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
    pub wall_time_secs: f64,
    pub tool_version: &'static str,
}

pub struct Recorder {
    command: String,
    start: Instant,
    config: serde_json::Value,
    seeds: Vec<u64>,
    inputs: Vec<InputHash>,
}

fn files_under(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            files_under(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

fn file_digest(p: &Path) -> io::Result<String> {
    let mut h = Sha256::new();
    io::copy(&mut fs::File::open(p)?, &mut h)?;
    Ok(hex::encode(h.finalize()))
}

/// SHA-256 of a file, or of `relative path \0 file digest \n` lines for a directory.
pub fn hash_input(path: &Path) -> io::Result<InputHash> {
    if path.is_dir() {
        let mut files = Vec::new();
        files_under(path, &mut files)?;
        files.sort();
        let mut h = Sha256::new();
        for f in &files {
            let rel = f.strip_prefix(path).unwrap_or(f);
            h.update(rel.to_string_lossy().as_bytes());
            h.update(b"\0");
            h.update(file_digest(f)?.as_bytes());
            h.update(b"\n");
        }
        Ok(InputHash {
            path: path.display().to_string(),
            sha256: hex::encode(h.finalize()),
            files: files.len(),
        })
    } else {
        Ok(InputHash {
            path: path.display().to_string(),
            sha256: file_digest(path)?,
            files: 1,
        })
    }
}

impl Recorder {
    pub fn start(command: &str, config: impl Serialize) -> Self {
        Recorder {
            command: command.to_string(),
            start: Instant::now(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            seeds: Vec::new(),
            inputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, s: u64) {
        if !self.seeds.contains(&s) {
            self.seeds.push(s);
        }
    }

    pub fn input(&mut self, path: &Path) -> io::Result<()> {
        self.inputs.push(hash_input(path)?);
        Ok(())
    }

    /// Writes the manifest to `path` and returns it.
    pub fn finish(self, outputs: &[PathBuf], path: &Path) -> io::Result<RunManifest> {
        let m = RunManifest {
            command: self.command,
            config: self.config,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            wall_time_secs: self.start.elapsed().as_secs_f64(),
            tool_version: env!("CARGO_PKG_VERSION"),
        };
        fs::write(path, serde_json::to_vec_pretty(&m)?)?;
        Ok(m)
    }
}
