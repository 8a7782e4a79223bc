//! Layouts on disk: `{id}.csv`, `{id}.json` sidecar, `{id}.features.csv` and `{id}.svg`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, ErrorKind, Write};
use std::path::{Path, PathBuf};

use datascope::layout::{read_features_csv, write_features_csv, EmbeddingLayout, LayoutError, LayoutSidecar};
use datascope::pipeline::PipelineOutput;
use ndarray::Array2;

pub struct LayoutStore {
    dir: PathBuf,
}

pub fn valid_layout_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Debug)]
pub enum LayoutLookup {
    InvalidId,
    NotFound,
    Failed(LayoutError),
}

impl From<LayoutError> for LayoutLookup {
    fn from(e: LayoutError) -> Self {
        match e {
            LayoutError::Io(ref io) if io.kind() == ErrorKind::NotFound => LayoutLookup::NotFound,
            other => LayoutLookup::Failed(other),
        }
    }
}

impl From<std::io::Error> for LayoutLookup {
    fn from(e: std::io::Error) -> Self {
        LayoutError::from(e).into()
    }
}

/// Writes `bytes` next to `path` and renames it into place.
fn write_atomic(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<(), LayoutError>) -> Result<(), LayoutError> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write(&mut w)?;
        w.flush()?;
        w.get_ref().sync_data()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

impl LayoutStore {
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Paths of the four files of a layout, in write order.
    pub fn paths(&self, id: &str) -> Vec<PathBuf> {
        [".csv", ".features.csv", ".svg", ".json"]
            .iter()
            .map(|s| self.dir.join(format!("{id}{s}")))
            .collect()
    }

    pub fn open(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(LayoutStore {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    fn file(&self, id: &str, suffix: &str) -> Result<PathBuf, LayoutLookup> {
        if !valid_layout_id(id) {
            return Err(LayoutLookup::InvalidId);
        }
        Ok(self.dir.join(format!("{id}{suffix}")))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.file(id, ".json").is_ok_and(|p| p.is_file())
    }

    /// Ids with a sidecar, sorted. Other JSON files (run manifests) are skipped.
    pub fn list(&self) -> std::io::Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == "json") {
                if let Some(s) = p.file_stem().and_then(|s| s.to_str()).filter(|s| valid_layout_id(s)) {
                    ids.push(s.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// The sidecar goes last, so a layout only becomes visible once complete.
    pub fn save(&self, id: &str, out: &PipelineOutput) -> Result<(), LayoutLookup> {
        let csv = self.file(id, ".csv")?;
        write_atomic(&csv, |w| out.layout.write_csv(w))?;
        write_atomic(&self.file(id, ".features.csv")?, |w| {
            write_features_csv(&out.layout.ids, &out.features, w)
        })?;
        write_atomic(&self.file(id, ".svg")?, |w| Ok(w.write_all(out.layout.to_svg(&[]).as_bytes())?))?;
        let side = out.layout.sidecar(out.kl_after_exaggeration);
        write_atomic(&self.file(id, ".json")?, |w| Ok(serde_json::to_writer_pretty(w, &side)?))?;
        Ok(())
    }

    pub fn sidecar(&self, id: &str) -> Result<LayoutSidecar, LayoutLookup> {
        let f = File::open(self.file(id, ".json")?)?;
        Ok(serde_json::from_reader(BufReader::new(f)).map_err(LayoutError::from)?)
    }

    pub fn load(&self, id: &str) -> Result<EmbeddingLayout, LayoutLookup> {
        let side = File::open(self.file(id, ".json")?)?;
        let csv = File::open(self.file(id, ".csv")?)?;
        Ok(EmbeddingLayout::read(BufReader::new(csv), BufReader::new(side))?)
    }

    pub fn features(&self, id: &str) -> Result<(Vec<u64>, Array2<f64>), LayoutLookup> {
        let f = File::open(self.file(id, ".features.csv")?)?;
        Ok(read_features_csv(BufReader::new(f))?)
    }

    pub fn svg(&self, id: &str) -> Result<String, LayoutLookup> {
        Ok(fs::read_to_string(self.file(id, ".svg")?)?)
    }
}
