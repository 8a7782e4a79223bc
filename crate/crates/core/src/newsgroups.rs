//! Loader for the 20 Newsgroups mail distribution.
//!
//! The published tarballs unpack to one directory per newsgroup with one file
//! per message, named by its article number. The "bydate" variant adds one more
//! level (`*-train/`, `*-test/`); both layouts are accepted.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Exec;

/// The twenty newsgroup names, in lexicographic order.
pub const NEWSGROUPS: [&str; 20] = [
    "alt.atheism",
    "comp.graphics",
    "comp.os.ms-windows.misc",
    "comp.sys.ibm.pc.hardware",
    "comp.sys.mac.hardware",
    "comp.windows.x",
    "misc.forsale",
    "rec.autos",
    "rec.motorcycles",
    "rec.sport.baseball",
    "rec.sport.hockey",
    "sci.crypt",
    "sci.electronics",
    "sci.med",
    "sci.space",
    "soc.religion.christian",
    "talk.politics.guns",
    "talk.politics.mideast",
    "talk.politics.misc",
    "talk.religion.misc",
];

/// Author key used when a document carries no `From` header.
pub const MISSING_AUTHOR: &str = "<missing>";

pub fn is_newsgroup(name: &str) -> bool {
    NEWSGROUPS.binary_search(&name).is_ok()
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("expected {expected} documents for version {version}, found {found}")]
    VersionMismatch {
        version: CorpusVersion,
        expected: usize,
        found: usize,
    },
    #[error("directory {0:?} is not one of the 20 newsgroups")]
    UnknownLabel(String),
    #[error("file name {0:?} is not a numeric document id")]
    InvalidDocumentId(PathBuf),
    #[error("unknown corpus version {0:?}")]
    UnknownVersion(String),
    #[error("i/o error at {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The three published versions of the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusVersion {
    /// `20_newsgroups.tar.gz`, all headers kept.
    Original,
    /// `20news-bydate.tar.gz`, duplicates and some headers removed.
    #[serde(rename = "no-duplicates-18846")]
    NoDuplicates18846,
    /// `20news-18828.tar.gz`, only From and Subject headers kept.
    #[serde(rename = "from-subject-18828")]
    FromSubject18828,
}

impl CorpusVersion {
    pub const ALL: [CorpusVersion; 3] = [
        CorpusVersion::Original,
        CorpusVersion::NoDuplicates18846,
        CorpusVersion::FromSubject18828,
    ];

    pub fn expected_count(self) -> usize {
        match self {
            CorpusVersion::Original => 19997,
            CorpusVersion::NoDuplicates18846 => 18846,
            CorpusVersion::FromSubject18828 => 18828,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CorpusVersion::Original => "original",
            CorpusVersion::NoDuplicates18846 => "no-duplicates-18846",
            CorpusVersion::FromSubject18828 => "from-subject-18828",
        }
    }

    /// Directory name the tarball unpacks to.
    pub fn default_dir_name(self) -> &'static str {
        match self {
            CorpusVersion::Original => "20_newsgroups",
            CorpusVersion::NoDuplicates18846 => "20news-bydate",
            CorpusVersion::FromSubject18828 => "20news-18828",
        }
    }
}

impl fmt::Display for CorpusVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CorpusVersion {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" | "19997" => Ok(CorpusVersion::Original),
            "no-duplicates-18846" | "bydate" | "18846" => Ok(CorpusVersion::NoDuplicates18846),
            "from-subject-18828" | "18828" => Ok(CorpusVersion::FromSubject18828),
            other => Err(IngestError::UnknownVersion(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseWarning {
    /// No blank line was found; the whole file was taken as headers.
    MissingHeaderSeparator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: u64,
    pub label: String,
    pub headers: Vec<(String, String)>,
    pub body_lines: Vec<String>,
    pub quote_flags: Vec<bool>,
    /// Header lines exactly as they appeared, continuation lines included.
    #[serde(skip)]
    pub raw_header_lines: Vec<String>,
    #[serde(skip)]
    pub has_separator: bool,
    #[serde(skip)]
    pub trailing_newline: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ParseWarning>,
}

/// A quote line starts with `>` after optional leading whitespace.
pub fn is_quote_line(line: &str) -> bool {
    line.trim_start().starts_with('>')
}

fn is_blank(line: &str) -> bool {
    line.trim_end_matches('\r').is_empty()
}

/// Parses one message file. Never fails: a missing header/body separator is
/// recorded as a warning on the returned document.
pub fn parse_document(bytes: &[u8], id: u64, label: &str) -> RawDocument {
    let text = String::from_utf8_lossy(bytes);
    let trailing_newline = text.ends_with('\n');
    let content = text.strip_suffix('\n').unwrap_or(&text);
    let mut lines: Vec<&str> = if text.is_empty() {
        Vec::new()
    } else {
        content.split('\n').collect()
    };

    let separator = lines.iter().position(|l| is_blank(l));
    let (header_part, body_part) = match separator {
        Some(i) => {
            let body = lines.split_off(i + 1);
            lines.truncate(i);
            (lines, body)
        }
        None => (lines, Vec::new()),
    };

    let mut headers: Vec<(String, String)> = Vec::new();
    for line in &header_part {
        let line = line.trim_end_matches('\r');
        let continuation = line.starts_with(' ') || line.starts_with('\t');
        if continuation {
            if let Some((_, value)) = headers.last_mut() {
                let extra = line.trim();
                if !extra.is_empty() {
                    if !value.is_empty() {
                        value.push(' ');
                    }
                    value.push_str(extra);
                }
                continue;
            }
        }
        match line.split_once(':') {
            Some((name, value)) => headers.push((name.trim().to_string(), value.trim().to_string())),
            None => headers.push((line.trim().to_string(), String::new())),
        }
    }

    let body_lines: Vec<String> = body_part.iter().map(|s| s.to_string()).collect();
    let quote_flags = body_lines.iter().map(|l| is_quote_line(l)).collect();
    let mut warnings = Vec::new();
    if separator.is_none() {
        tracing::warn!(id, label, "no blank line separating headers from body");
        warnings.push(ParseWarning::MissingHeaderSeparator);
    }

    RawDocument {
        id,
        label: label.to_string(),
        headers,
        body_lines,
        quote_flags,
        raw_header_lines: header_part.iter().map(|s| s.to_string()).collect(),
        has_separator: separator.is_some(),
        trailing_newline,
        warnings,
    }
}

impl RawDocument {
    /// First header value with the given name (case-sensitive, as written in the file).
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    /// Number of header lines as they appeared in the file.
    pub fn header_line_count(&self) -> usize {
        self.raw_header_lines.len()
    }

    pub fn quote_line_count(&self) -> usize {
        self.quote_flags.iter().filter(|&&q| q).count()
    }

    /// Rebuilds the file content: raw header lines, blank line, body.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut lines: Vec<&str> = self.raw_header_lines.iter().map(String::as_str).collect();
        if self.has_separator {
            lines.push("");
        }
        lines.extend(self.body_lines.iter().map(String::as_str));
        let mut out = lines.join("\n");
        if self.trailing_newline {
            out.push('\n');
        }
        out.into_bytes()
    }

    /// Body text, optionally leaving out quote lines.
    pub fn body_text(&self, include_quotes: bool) -> String {
        let mut out = String::new();
        for (line, &quoted) in self.body_lines.iter().zip(&self.quote_flags) {
            if quoted && !include_quotes {
                continue;
            }
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// Author key: the first `From` value, trimmed at both ends, or [`MISSING_AUTHOR`].
pub fn author_of(doc: &RawDocument) -> &str {
    doc.header("From").map(str::trim).unwrap_or(MISSING_AUTHOR)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub version: CorpusVersion,
    pub documents: Vec<RawDocument>,
    pub label_set: Vec<String>,
}

impl Corpus {
    /// Wraps already-parsed documents after checking the count against the version.
    pub fn new(version: CorpusVersion, mut documents: Vec<RawDocument>) -> Result<Self, IngestError> {
        if documents.len() != version.expected_count() {
            return Err(IngestError::VersionMismatch {
                version,
                expected: version.expected_count(),
                found: documents.len(),
            });
        }
        sort_documents(&mut documents);
        Ok(Self::from_documents_unchecked(version, documents))
    }

    /// Builds a corpus without the document-count check. Used for fixtures and subsets.
    pub fn from_documents_unchecked(version: CorpusVersion, mut documents: Vec<RawDocument>) -> Self {
        sort_documents(&mut documents);
        Corpus {
            version,
            documents,
            label_set: NEWSGROUPS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// First document with the given id in (label, id) order.
    pub fn find(&self, id: u64) -> Option<&RawDocument> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Document ids carrying `label`, ascending.
    pub fn ids_with_label(&self, label: &str) -> Vec<u64> {
        self.documents
            .iter()
            .filter(|d| d.label == label)
            .map(|d| d.id)
            .collect()
    }

    /// Writes one JSON object per document: `{id, label, headers, body, quote_flags}`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        #[derive(Serialize)]
        struct Record<'a> {
            id: u64,
            label: &'a str,
            headers: &'a [(String, String)],
            body: &'a [String],
            quote_flags: &'a [bool],
        }
        for d in &self.documents {
            let rec = Record {
                id: d.id,
                label: &d.label,
                headers: &d.headers,
                body: &d.body_lines,
                quote_flags: &d.quote_flags,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn sort_documents(docs: &mut [RawDocument]) {
    docs.sort_by(|a, b| a.label.cmp(&b.label).then(a.id.cmp(&b.id)));
}

fn list_dir(path: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(path).map_err(io_err(path))? {
        let entry = entry.map_err(io_err(path))?;
        let name = entry.file_name();
        if name.to_string_lossy().starts_with('.') {
            continue;
        }
        out.push(entry.path());
    }
    out.sort();
    Ok(out)
}

/// Collects `(label, file)` pairs, descending into split directories
/// (`20news-bydate-train/` etc.) when the root holds no newsgroup directories.
fn collect_files(root: &Path) -> Result<Vec<(String, PathBuf)>, IngestError> {
    let mut label_dirs = Vec::new();
    for dir in list_dir(root)?.into_iter().filter(|p| p.is_dir()) {
        let name = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        if is_newsgroup(&name) {
            label_dirs.push((name, dir));
        } else {
            let inner: Vec<PathBuf> = list_dir(&dir)?.into_iter().filter(|p| p.is_dir()).collect();
            let inner_names: Vec<String> = inner
                .iter()
                .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
                .collect();
            if !inner.is_empty() && inner_names.iter().all(|n| is_newsgroup(n)) {
                label_dirs.extend(inner_names.into_iter().zip(inner));
            } else {
                return Err(IngestError::UnknownLabel(name));
            }
        }
    }
    let mut files = Vec::new();
    for (label, dir) in label_dirs {
        for file in list_dir(&dir)?.into_iter().filter(|p| p.is_file()) {
            files.push((label.clone(), file));
        }
    }
    Ok(files)
}

/// Parses every document below `root` without checking the total count.
pub fn scan_corpus(root: &Path, exec: Exec) -> Result<Vec<RawDocument>, IngestError> {
    let files = collect_files(root)?;
    let parsed = exec.map_slice(&files, |(label, path)| -> Result<RawDocument, IngestError> {
        let id = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.parse::<u64>().ok())
            .ok_or_else(|| IngestError::InvalidDocumentId(path.clone()))?;
        let bytes = fs::read(path).map_err(io_err(path))?;
        Ok(parse_document(&bytes, id, label))
    });
    let mut docs = parsed.into_iter().collect::<Result<Vec<_>, _>>()?;
    sort_documents(&mut docs);
    Ok(docs)
}

/// Loads a full corpus version. The document count must match the version exactly.
pub fn load_corpus(root: &Path, version: CorpusVersion) -> Result<Corpus, IngestError> {
    load_corpus_with(root, version, Exec::default())
}

pub fn load_corpus_with(root: &Path, version: CorpusVersion, exec: Exec) -> Result<Corpus, IngestError> {
    let docs = scan_corpus(root, exec)?;
    Corpus::new(version, docs)
}
