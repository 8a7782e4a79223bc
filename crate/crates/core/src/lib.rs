//! Dataset interrogation: ingest 20 Newsgroups and MNIST, describe corpora,
//! fit topic models, lay out samples with t-SNE, inspect same-label
//! neighborhoods, code samples, and test hypotheses against the evidence.

pub mod coding;
pub mod hypothesis;
pub mod layout;
pub mod mnist;
pub mod neighborhood;
pub mod newsgroups;
pub mod par;
pub mod pipeline;
pub mod stats;
pub mod topics;
pub mod tsne;
pub mod vectorize;

pub use par::Exec;
