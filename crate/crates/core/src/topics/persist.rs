//! Binary model files.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic     8 bytes   "DSCPLSI\0" or "DSCPLDA\0"
//! version   u32       currently 1
//! header    model-specific scalars (see `save`)
//! vocab     u64 n_documents, u64 V, then V x (u64 df, u32 len, utf-8 bytes)
//! arrays    row-major f64 (LSI) or u32 (LDA) payloads
//! ```

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use super::{LdaModel, LsiConfig, LsiModel, TopicError};
use crate::vectorize::{RowNorm, Vocabulary, Weighting};

pub const LSI_MAGIC: &[u8; 8] = b"DSCPLSI\0";
pub const LDA_MAGIC: &[u8; 8] = b"DSCPLDA\0";
pub const FORMAT_VERSION: u32 = 1;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.0.write_all(&[v])
    }
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn vocab(&mut self, vocab: &Vocabulary) -> std::io::Result<()> {
        self.u64(vocab.n_documents as u64)?;
        self.u64(vocab.len() as u64)?;
        for (t, &df) in vocab.terms.iter().zip(&vocab.document_frequency) {
            self.u64(df as u64)?;
            self.u32(t.len() as u32)?;
            self.0.write_all(t.as_bytes())?;
        }
        Ok(())
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], TopicError> {
        let mut b = [0u8; N];
        self.0
            .read_exact(&mut b)
            .map_err(|e| TopicError::BadModelFile(format!("truncated: {e}")))?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8, TopicError> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32, TopicError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64, TopicError> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn usize(&mut self) -> Result<usize, TopicError> {
        usize::try_from(self.u64()?).map_err(|_| TopicError::BadModelFile("size overflow".into()))
    }
    fn f64(&mut self) -> Result<f64, TopicError> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn header(&mut self, magic: &[u8; 8]) -> Result<(), TopicError> {
        let found: [u8; 8] = self.bytes()?;
        if &found != magic {
            return Err(TopicError::BadModelFile(format!("bad magic {found:?}")));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(TopicError::BadModelFile(format!("unsupported version {version}")));
        }
        Ok(())
    }
    fn vocab(&mut self) -> Result<Vocabulary, TopicError> {
        let n_documents = self.usize()?;
        let v = self.usize()?;
        let mut terms = Vec::with_capacity(v.min(1 << 20));
        let mut dfs = Vec::with_capacity(v.min(1 << 20));
        for _ in 0..v {
            dfs.push(self.usize()?);
            let len = self.u32()? as usize;
            let mut buf = vec![0u8; len];
            self.0
                .read_exact(&mut buf)
                .map_err(|e| TopicError::BadModelFile(format!("truncated vocabulary: {e}")))?;
            terms.push(String::from_utf8(buf).map_err(|_| TopicError::BadModelFile("term is not utf-8".into()))?);
        }
        Ok(Vocabulary {
            terms,
            document_frequency: dfs,
            n_documents,
        })
    }
}

fn weighting_code(w: Weighting) -> u8 {
    match w {
        Weighting::Counts => 0,
        Weighting::Tfidf => 1,
    }
}

fn norm_code(n: RowNorm) -> u8 {
    match n {
        RowNorm::None => 0,
        RowNorm::L2 => 1,
    }
}

impl LsiModel {
    pub fn save<W: Write>(&self, out: W) -> Result<(), TopicError> {
        let mut w = Writer(out);
        w.0.write_all(LSI_MAGIC)?;
        w.u32(FORMAT_VERSION)?;
        w.u64(self.config.k as u64)?;
        w.u64(self.config.oversample as u64)?;
        w.u64(self.config.power_iterations as u64)?;
        w.u64(self.config.seed)?;
        w.u64(self.effective_rank as u64)?;
        w.u8(weighting_code(self.weighting))?;
        w.u8(norm_code(self.row_norm))?;
        w.vocab(&self.vocabulary)?;
        for &s in &self.singular_values {
            w.f64(s)?;
        }
        for &x in self.term_factors.iter() {
            w.f64(x)?;
        }
        Ok(())
    }

    pub fn load<R: Read>(input: R) -> Result<Self, TopicError> {
        let mut r = Reader(input);
        r.header(LSI_MAGIC)?;
        let config = LsiConfig {
            k: r.usize()?,
            oversample: r.usize()?,
            power_iterations: r.usize()?,
            seed: r.u64()?,
        };
        let effective_rank = r.usize()?;
        let weighting = match r.u8()? {
            0 => Weighting::Counts,
            1 => Weighting::Tfidf,
            x => return Err(TopicError::BadModelFile(format!("weighting code {x}"))),
        };
        let row_norm = match r.u8()? {
            0 => RowNorm::None,
            1 => RowNorm::L2,
            x => return Err(TopicError::BadModelFile(format!("row norm code {x}"))),
        };
        let vocabulary = r.vocab()?;
        let k = config.k;
        let singular_values = (0..k).map(|_| r.f64()).collect::<Result<Array1<f64>, _>>()?;
        let data = (0..vocabulary.len() * k).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let term_factors =
            Array2::from_shape_vec((vocabulary.len(), k), data).map_err(|e| TopicError::BadModelFile(e.to_string()))?;
        Ok(LsiModel {
            config,
            singular_values,
            term_factors,
            vocabulary,
            weighting,
            row_norm,
            effective_rank,
        })
    }
}

impl LdaModel {
    pub fn save<W: Write>(&self, out: W) -> Result<(), TopicError> {
        let mut w = Writer(out);
        w.0.write_all(LDA_MAGIC)?;
        w.u32(FORMAT_VERSION)?;
        w.u64(self.topics as u64)?;
        w.u64(self.doc_topic_counts.nrows() as u64)?;
        w.f64(self.alpha)?;
        w.f64(self.beta)?;
        w.u64(self.iterations as u64)?;
        w.u64(self.seed)?;
        w.vocab(&self.vocabulary)?;
        for &c in self.topic_word_counts.iter() {
            w.u32(c)?;
        }
        for &c in self.doc_topic_counts.iter() {
            w.u32(c)?;
        }
        Ok(())
    }

    pub fn load<R: Read>(input: R) -> Result<Self, TopicError> {
        let mut r = Reader(input);
        r.header(LDA_MAGIC)?;
        let topics = r.usize()?;
        let n = r.usize()?;
        let alpha = r.f64()?;
        let beta = r.f64()?;
        let iterations = r.usize()?;
        let seed = r.u64()?;
        let vocabulary = r.vocab()?;
        let v = vocabulary.len();
        let tw = (0..topics * v).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        let dt = (0..n * topics).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        let bad = |e: ndarray::ShapeError| TopicError::BadModelFile(e.to_string());
        let topic_word_counts = Array2::from_shape_vec((topics, v), tw).map_err(bad)?;
        let doc_topic_counts = Array2::from_shape_vec((n, topics), dt).map_err(bad)?;
        let topic_totals = topic_word_counts
            .outer_iter()
            .map(|row| row.iter().map(|&c| c as u64).sum())
            .collect();
        Ok(LdaModel {
            topics,
            alpha,
            beta,
            iterations,
            seed,
            topic_word_counts,
            doc_topic_counts,
            topic_totals,
            vocabulary,
        })
    }
}
