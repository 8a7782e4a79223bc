//! MNIST IDX reader.
//!
//! IDX layout: a big-endian `u32` magic (2051 for images, 2049 for labels),
//! one big-endian `u32` per dimension, then row-major unsigned bytes.
//! Gzip-compressed inputs are detected by their `1f 8b` prefix.

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;
pub const SIDE: usize = 28;
pub const PIXELS: usize = SIDE * SIDE;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("bad magic number {found} (expected {expected})")]
    BadMagic { expected: u32, found: u32 },
    #[error("image dimensions {rows}x{cols}, expected 28x28")]
    DimensionMismatch { rows: u32, cols: u32 },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("file truncated: need {needed} bytes, have {have}")]
    TruncatedFile { needed: usize, have: usize },
    #[error("label {0} outside 0..=9")]
    InvalidLabel(u8),
    #[error("no IDX file for {0:?} found in {1:?}")]
    MissingFile(String, PathBuf),
    #[error("i/o error at {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn expected_count(self) -> usize {
        match self {
            Split::Train => 60000,
            Split::Test => 10000,
        }
    }

    fn file_prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub index: usize,
    pub pixels: Vec<u8>,
    pub label: u8,
}

impl std::fmt::Debug for Sample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Sample")
            .field("index", &self.index)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl Sample {
    pub fn pixel(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * SIDE + col]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSet {
    pub split: Split,
    pub samples: Vec<Sample>,
}

fn maybe_gunzip(bytes: &[u8]) -> io::Result<std::borrow::Cow<'_, [u8]>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes).read_to_end(&mut out)?;
        Ok(out.into())
    } else {
        Ok(bytes.into())
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32, IdxError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(IdxError::TruncatedFile {
            needed: offset + 4,
            have: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<(), IdxError> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(IdxError::BadMagic { expected, found });
    }
    Ok(())
}

/// Pairs image `i` with label `i`.
pub fn parse_idx(images: &[u8], labels: &[u8], split: Split) -> Result<ImageSet, IdxError> {
    let gz_err = |source| IdxError::Io {
        path: PathBuf::from("<gzip>"),
        source,
    };
    let images = maybe_gunzip(images).map_err(gz_err)?;
    let labels = maybe_gunzip(labels).map_err(gz_err)?;

    check_magic(&images, IMAGE_MAGIC)?;
    check_magic(&labels, LABEL_MAGIC)?;
    let n_images = be_u32(&images, 4)? as usize;
    let rows = be_u32(&images, 8)?;
    let cols = be_u32(&images, 12)?;
    if rows as usize != SIDE || cols as usize != SIDE {
        return Err(IdxError::DimensionMismatch { rows, cols });
    }
    let n_labels = be_u32(&labels, 4)? as usize;
    if n_images != n_labels {
        return Err(IdxError::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }

    let image_bytes = 16 + n_images * PIXELS;
    if images.len() < image_bytes {
        return Err(IdxError::TruncatedFile {
            needed: image_bytes,
            have: images.len(),
        });
    }
    let label_bytes = 8 + n_labels;
    if labels.len() < label_bytes {
        return Err(IdxError::TruncatedFile {
            needed: label_bytes,
            have: labels.len(),
        });
    }

    let samples = images[16..image_bytes]
        .chunks_exact(PIXELS)
        .zip(&labels[8..label_bytes])
        .enumerate()
        .map(|(index, (px, &label))| {
            if label > 9 {
                return Err(IdxError::InvalidLabel(label));
            }
            Ok(Sample {
                index,
                pixels: px.to_vec(),
                label,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ImageSet { split, samples })
}

impl ImageSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Serializes back to uncompressed `(images, labels)` IDX bytes.
    pub fn to_idx(&self) -> (Vec<u8>, Vec<u8>) {
        let n = self.samples.len() as u32;
        let mut images = Vec::with_capacity(16 + self.samples.len() * PIXELS);
        for v in [IMAGE_MAGIC, n, SIDE as u32, SIDE as u32] {
            images.extend_from_slice(&v.to_be_bytes());
        }
        let mut labels = Vec::with_capacity(8 + self.samples.len());
        labels.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        labels.extend_from_slice(&n.to_be_bytes());
        for s in &self.samples {
            images.extend_from_slice(&s.pixels);
            labels.push(s.label);
        }
        (images, labels)
    }

    pub fn label_counts(&self) -> [usize; 10] {
        let mut counts = [0; 10];
        for s in &self.samples {
            counts[s.label as usize] += 1;
        }
        counts
    }
}

/// Sample indices carrying `label`, ascending. This is the order coding queues use.
pub fn samples_with_label(set: &ImageSet, label: u8) -> Vec<usize> {
    set.samples
        .iter()
        .filter(|s| s.label == label)
        .map(|s| s.index)
        .collect()
}

fn find_file(dir: &Path, split: Split, kind: &str) -> Result<PathBuf, IdxError> {
    let stem = format!("{}-{}", split.file_prefix(), kind);
    let candidates = [
        stem.clone(),
        format!("{stem}.gz"),
        stem.replacen("-idx", ".idx", 1),
        format!("{}.gz", stem.replacen("-idx", ".idx", 1)),
    ];
    candidates
        .iter()
        .map(|c| dir.join(c))
        .find(|p| p.is_file())
        .ok_or_else(|| IdxError::MissingFile(stem, dir.to_path_buf()))
}

/// Loads `train-*` or `t10k-*` files from a directory holding the canonical distribution.
pub fn load_split(dir: &Path, split: Split) -> Result<ImageSet, IdxError> {
    let read = |p: &Path| {
        fs::read(p).map_err(|source| IdxError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let images = read(&find_file(dir, split, "images-idx3-ubyte")?)?;
    let labels = read(&find_file(dir, split, "labels-idx1-ubyte")?)?;
    parse_idx(&images, &labels, split)
}
