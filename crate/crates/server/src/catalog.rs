//! Lazily loaded datasets under a data root.

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use datascope::mnist::{load_split, ImageSet, Split};
use datascope::newsgroups::{load_corpus_with, scan_corpus, Corpus, CorpusVersion};
use datascope::Exec;
use serde::Serialize;

pub const NEWSGROUPS: &str = "20ng";
pub const MNIST: &str = "mnist";

type Slot<T> = OnceLock<Result<Arc<T>, CatalogError>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CatalogError {
    UnknownDataset(String),
    /// A version or split name that does not exist.
    BadVersion(String),
    /// The files are missing or failed to load.
    Unavailable(String),
}

impl std::fmt::Display for CatalogError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CatalogError::UnknownDataset(d) => write!(f, "unknown dataset {d:?} (20ng | mnist)"),
            CatalogError::BadVersion(m) | CatalogError::Unavailable(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CatalogError {}

/// Each dataset is read at most once per process; a failed load is remembered
/// too, so a missing directory is not rescanned on every request.
pub struct Catalog {
    data_root: PathBuf,
    check_counts: bool,
    exec: Exec,
    corpora: [Slot<Corpus>; 3],
    splits: [Slot<ImageSet>; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct VersionInfo {
    pub version: String,
    pub path: String,
    pub present: bool,
    pub loaded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub id: &'static str,
    pub kind: &'static str,
    pub versions: Vec<VersionInfo>,
}

fn version_slot(v: CorpusVersion) -> usize {
    match v {
        CorpusVersion::Original => 0,
        CorpusVersion::NoDuplicates18846 => 1,
        CorpusVersion::FromSubject18828 => 2,
    }
}

fn split_slot(s: Split) -> usize {
    match s {
        Split::Train => 0,
        Split::Test => 1,
    }
}

impl Catalog {
    pub fn new(data_root: impl Into<PathBuf>, check_counts: bool, exec: Exec) -> Self {
        Catalog {
            data_root: data_root.into(),
            check_counts,
            exec,
            corpora: Default::default(),
            splits: Default::default(),
        }
    }

    /// Serves `corpus` for its version instead of reading it from disk.
    pub fn with_corpus(self, corpus: Corpus) -> Self {
        let _ = self.corpora[version_slot(corpus.version)].set(Ok(Arc::new(corpus)));
        self
    }

    pub fn with_images(self, set: ImageSet) -> Self {
        let _ = self.splits[split_slot(set.split)].set(Ok(Arc::new(set)));
        self
    }

    pub fn data_root(&self) -> &Path {
        &self.data_root
    }

    pub fn corpus_dir(&self, v: CorpusVersion) -> PathBuf {
        self.data_root.join(NEWSGROUPS).join(v.default_dir_name())
    }

    pub fn mnist_dir(&self) -> PathBuf {
        self.data_root.join(MNIST)
    }

    fn corpus_present(&self, v: CorpusVersion) -> bool {
        self.corpora[version_slot(v)].get().is_some_and(|r| r.is_ok()) || self.corpus_dir(v).is_dir()
    }

    fn split_present(&self, s: Split) -> bool {
        self.splits[split_slot(s)].get().is_some_and(|r| r.is_ok()) || self.mnist_dir().is_dir()
    }

    /// The first version that is loaded or has a directory on disk.
    pub fn default_version(&self) -> Option<CorpusVersion> {
        CorpusVersion::ALL.into_iter().find(|&v| self.corpus_present(v))
    }

    pub fn corpus(&self, v: CorpusVersion) -> Result<Arc<Corpus>, CatalogError> {
        self.corpora[version_slot(v)]
            .get_or_init(|| {
                let dir = self.corpus_dir(v);
                if !dir.is_dir() {
                    return Err(CatalogError::Unavailable(format!(
                        "20 Newsgroups version {v} not found at {}",
                        dir.display()
                    )));
                }
                let unavailable = |e: datascope::newsgroups::IngestError| CatalogError::Unavailable(e.to_string());
                let corpus = if self.check_counts {
                    load_corpus_with(&dir, v, self.exec).map_err(unavailable)?
                } else {
                    Corpus::from_documents_unchecked(v, scan_corpus(&dir, self.exec).map_err(unavailable)?)
                };
                tracing::info!(version = %v, documents = corpus.len(), "loaded corpus");
                Ok(Arc::new(corpus))
            })
            .clone()
    }

    pub fn images(&self, s: Split) -> Result<Arc<ImageSet>, CatalogError> {
        self.splits[split_slot(s)]
            .get_or_init(|| {
                let dir = self.mnist_dir();
                let set = load_split(&dir, s).map_err(|e| CatalogError::Unavailable(e.to_string()))?;
                if self.check_counts && set.len() != s.expected_count() {
                    return Err(CatalogError::Unavailable(format!(
                        "MNIST {} has {} images, expected {}",
                        s.as_str(),
                        set.len(),
                        s.expected_count()
                    )));
                }
                tracing::info!(split = s.as_str(), images = set.len(), "loaded images");
                Ok(Arc::new(set))
            })
            .clone()
    }

    /// Available datasets without loading anything.
    pub fn list(&self) -> Vec<DatasetInfo> {
        let text = CorpusVersion::ALL
            .into_iter()
            .map(|v| VersionInfo {
                version: v.as_str().to_string(),
                path: self.corpus_dir(v).display().to_string(),
                present: self.corpus_present(v),
                loaded: self.corpora[version_slot(v)].get().is_some_and(|r| r.is_ok()),
            })
            .collect();
        let images = [Split::Train, Split::Test]
            .into_iter()
            .map(|s| VersionInfo {
                version: s.as_str().to_string(),
                path: self.mnist_dir().display().to_string(),
                present: self.split_present(s),
                loaded: self.splits[split_slot(s)].get().is_some_and(|r| r.is_ok()),
            })
            .collect();
        vec![
            DatasetInfo {
                id: NEWSGROUPS,
                kind: "text",
                versions: text,
            },
            DatasetInfo {
                id: MNIST,
                kind: "image",
                versions: images,
            },
        ]
    }

    /// `(ids, labels)` of a dataset, for sessions and hypotheses that are not
    /// tied to a layout.
    pub fn samples(&self, dataset: &str, version: Option<&str>) -> Result<(Vec<u64>, Vec<String>), CatalogError> {
        match dataset {
            NEWSGROUPS => {
                let v = self.resolve_version(version)?;
                let c = self.corpus(v)?;
                Ok((
                    c.documents.iter().map(|d| d.id).collect(),
                    c.documents.iter().map(|d| d.label.clone()).collect(),
                ))
            }
            MNIST => {
                let s = resolve_split(version)?;
                let set = self.images(s)?;
                Ok((
                    set.samples.iter().map(|x| x.index as u64).collect(),
                    set.samples.iter().map(|x| x.label.to_string()).collect(),
                ))
            }
            other => Err(CatalogError::UnknownDataset(other.to_string())),
        }
    }

    pub fn resolve_version(&self, version: Option<&str>) -> Result<CorpusVersion, CatalogError> {
        match version {
            Some(v) => v
                .parse()
                .map_err(|e: datascope::newsgroups::IngestError| CatalogError::BadVersion(e.to_string())),
            None => self.default_version().ok_or_else(|| {
                CatalogError::Unavailable(format!(
                    "no 20 Newsgroups version under {}",
                    self.data_root.join(NEWSGROUPS).display()
                ))
            }),
        }
    }
}

pub fn resolve_split(split: Option<&str>) -> Result<Split, CatalogError> {
    match split.unwrap_or("train") {
        "train" => Ok(Split::Train),
        "test" | "t10k" => Ok(Split::Test),
        other => Err(CatalogError::BadVersion(format!("unknown MNIST split {other:?} (train | test)"))),
    }
}
