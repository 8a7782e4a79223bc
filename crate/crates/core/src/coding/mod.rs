//! Coding sessions: sample queues, code assignment, saturation tracking.
//!
//! A session is the fold of an append-only event log. Every mutating operation
//! produces exactly one or two events and [`CodingSession::replay`] rebuilds the
//! same state from the log.

mod store;
mod zenodo;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neighborhood::{euclidean, PointSet};

pub use store::SessionStore;
pub use zenodo::{import_coding_csv, ColumnMapping, ImportOptions};

/// Default saturation window, in assignments.
pub const DEFAULT_WINDOW: usize = 25;

#[derive(Debug, Error)]
pub enum CodingError {
    #[error("label {0:?} has no samples in this dataset")]
    UnknownLabel(String),
    #[error("code {0:?} is not in the codebook")]
    UnknownCode(String),
    #[error("code {0:?} already exists")]
    DuplicateCode(String),
    #[error("code names must be nonempty")]
    EmptyCodeName,
    #[error("sample {0} has not been taken from the queue yet")]
    NotYetSampled(u64),
    #[error("sample {0} does not belong to the session's label")]
    UnknownSample(u64),
    #[error("the queue is empty")]
    QueueEmpty,
    #[error("theoretical sampling needs an embedding containing the anchors")]
    MissingEmbedding,
    #[error("session is read-only")]
    ReadOnly,
    #[error("expected ordinal {expected}, session is at {actual}")]
    OrdinalConflict { expected: u64, actual: u64 },
    #[error("saturation window must be at least 1")]
    InvalidWindow,
    #[error("session {0:?} not found")]
    NotFound(String),
    #[error("session {0:?} already exists")]
    AlreadyExists(String),
    #[error("invalid session id {0:?}")]
    InvalidSessionId(String),
    #[error("corrupt event log: {0}")]
    Replay(String),
    #[error("import: {0}")]
    Import(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CodingError {
    /// Errors caused by a request that breaks a session rule (as opposed to I/O or corruption).
    pub fn is_rule_violation(&self) -> bool {
        matches!(
            self,
            CodingError::UnknownCode(_)
                | CodingError::DuplicateCode(_)
                | CodingError::EmptyCodeName
                | CodingError::NotYetSampled(_)
                | CodingError::UnknownSample(_)
                | CodingError::QueueEmpty
                | CodingError::ReadOnly
                | CodingError::InvalidWindow
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Strategy {
    /// Ascending sample ids.
    Lexicographic,
    SeededRandom { seed: u64 },
    /// Ascending distance to the nearest anchor in the active embedding.
    Theoretical { anchors: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Code {
    pub name: String,
    pub description: String,
    /// 1-based index of the assignment at which the code became available.
    pub created_at_sample_ordinal: u64,
    /// Whether samples with this code fit the label's nominal category.
    pub matches_category: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub codes: Vec<Code>,
}

impl Codebook {
    pub fn get(&self, name: &str) -> Option<&Code> {
        self.codes.iter().find(|c| c.name == name)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub sample: u64,
    pub code: String,
    pub memo: String,
    /// Ordinal of the event that made this assignment.
    pub ordinal: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewCode {
    pub description: String,
    #[serde(default)]
    pub matches_category: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    SessionCreated {
        session: String,
        dataset: String,
        label: String,
        strategy: Strategy,
        queue: Vec<u64>,
        #[serde(default)]
        read_only: bool,
    },
    Dequeued {
        sample: u64,
    },
    CodeCreated {
        name: String,
        description: String,
        #[serde(default)]
        matches_category: bool,
    },
    CodeAssigned {
        sample: u64,
        code: String,
        #[serde(default)]
        memo: String,
        /// Previous code of the sample, when this is a reassignment.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        previous: Option<String>,
    },
}

/// One line of a session file: `{type, ordinal, timestamp, payload}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawEvent", try_from = "RawEvent")]
pub struct Event {
    pub ordinal: u64,
    pub timestamp: String,
    pub kind: EventKind,
}

#[derive(Serialize, Deserialize)]
struct RawEvent {
    #[serde(rename = "type")]
    ty: String,
    ordinal: u64,
    timestamp: String,
    payload: serde_json::Value,
}

impl From<Event> for RawEvent {
    fn from(e: Event) -> Self {
        // externally tagged enum serializes as {"variant": payload}
        let v = serde_json::to_value(&e.kind).expect("event kinds serialize");
        let (ty, payload) = match v {
            serde_json::Value::Object(m) if m.len() == 1 => m.into_iter().next().unwrap(),
            other => unreachable!("unexpected event encoding {other}"),
        };
        RawEvent {
            ty,
            ordinal: e.ordinal,
            timestamp: e.timestamp,
            payload,
        }
    }
}

impl TryFrom<RawEvent> for Event {
    type Error = String;
    fn try_from(r: RawEvent) -> Result<Self, String> {
        let mut m = serde_json::Map::new();
        m.insert(r.ty, r.payload);
        let kind = serde_json::from_value(serde_json::Value::Object(m)).map_err(|e| e.to_string())?;
        Ok(Event {
            ordinal: r.ordinal,
            timestamp: r.timestamp,
            kind,
        })
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeCount {
    pub name: String,
    pub count: usize,
    pub matches_category: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSummary {
    /// In codebook order.
    pub codes: Vec<CodeCount>,
    /// Codes with at least one sample.
    pub codes_used: usize,
    pub coded_samples: usize,
    /// Samples whose code matches the label's category.
    pub fit_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturationState {
    pub window: usize,
    pub assignments: usize,
    pub new_codes_in_window: usize,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodingSession {
    pub id: String,
    pub dataset: String,
    pub label: String,
    pub strategy: Strategy,
    pub read_only: bool,
    queue: VecDeque<u64>,
    members: BTreeSet<u64>,
    sampled: Vec<u64>,
    sampled_set: BTreeSet<u64>,
    current: BTreeMap<u64, Assignment>,
    codebook: Codebook,
    assignment_events: u64,
    events: Vec<Event>,
}

/// Orders the samples of `label` according to `strategy`.
pub fn build_queue(
    ids: &[u64],
    labels: &[String],
    label: &str,
    strategy: &Strategy,
    embedding: Option<&PointSet>,
) -> Result<Vec<u64>, CodingError> {
    let mut members: Vec<u64> = ids
        .iter()
        .zip(labels)
        .filter(|(_, l)| *l == label)
        .map(|(&id, _)| id)
        .collect();
    if members.is_empty() {
        return Err(CodingError::UnknownLabel(label.to_string()));
    }
    members.sort_unstable();
    members.dedup();
    match strategy {
        Strategy::Lexicographic => {}
        Strategy::SeededRandom { seed } => {
            members.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
        }
        Strategy::Theoretical { anchors } => {
            let emb = embedding.ok_or(CodingError::MissingEmbedding)?;
            let row_of: BTreeMap<u64, usize> = emb.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
            let anchor_rows: Vec<usize> = anchors
                .iter()
                .map(|a| row_of.get(a).copied().ok_or(CodingError::UnknownSample(*a)))
                .collect::<Result<_, _>>()?;
            if anchor_rows.is_empty() {
                return Err(CodingError::MissingEmbedding);
            }
            let mut keyed = Vec::with_capacity(members.len());
            for &m in &members {
                let r = *row_of.get(&m).ok_or(CodingError::MissingEmbedding)?;
                let d = anchor_rows
                    .iter()
                    .map(|&a| euclidean(emb.points.row(a), emb.points.row(r)))
                    .fold(f64::INFINITY, f64::min);
                keyed.push((d, m));
            }
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            members = keyed.into_iter().map(|(_, m)| m).collect();
        }
    }
    Ok(members)
}

impl CodingSession {
    /// Starts a session on the samples of `label`.
    pub fn create(
        session_id: &str,
        dataset: &str,
        ids: &[u64],
        labels: &[String],
        label: &str,
        strategy: Strategy,
        embedding: Option<&PointSet>,
    ) -> Result<Self, CodingError> {
        let queue = build_queue(ids, labels, label, &strategy, embedding)?;
        Self::from_queue(session_id, dataset, label, strategy, queue, false)
    }

    /// Starts a session with an explicit queue.
    pub fn from_queue(
        session_id: &str,
        dataset: &str,
        label: &str,
        strategy: Strategy,
        queue: Vec<u64>,
        read_only: bool,
    ) -> Result<Self, CodingError> {
        if queue.is_empty() {
            return Err(CodingError::UnknownLabel(label.to_string()));
        }
        let first = Event {
            ordinal: 1,
            timestamp: now(),
            kind: EventKind::SessionCreated {
                session: session_id.to_string(),
                dataset: dataset.to_string(),
                label: label.to_string(),
                strategy,
                queue,
                read_only,
            },
        };
        Self::replay([first])
    }

    /// Rebuilds a session from its event log.
    pub fn replay<I: IntoIterator<Item = Event>>(events: I) -> Result<Self, CodingError> {
        let mut it = events.into_iter();
        let first = it.next().ok_or_else(|| CodingError::Replay("empty log".into()))?;
        let EventKind::SessionCreated {
            session,
            dataset,
            label,
            strategy,
            queue,
            read_only,
        } = &first.kind
        else {
            return Err(CodingError::Replay("first event must be session-created".into()));
        };
        if first.ordinal != 1 {
            return Err(CodingError::Replay(format!("first ordinal is {}", first.ordinal)));
        }
        let mut s = CodingSession {
            id: session.clone(),
            dataset: dataset.clone(),
            label: label.clone(),
            strategy: strategy.clone(),
            read_only: *read_only,
            queue: queue.iter().copied().collect(),
            members: queue.iter().copied().collect(),
            sampled: Vec::new(),
            sampled_set: BTreeSet::new(),
            current: BTreeMap::new(),
            codebook: Codebook::default(),
            assignment_events: 0,
            events: vec![first],
        };
        for ev in it {
            if ev.ordinal != s.last_ordinal() + 1 {
                return Err(CodingError::Replay(format!(
                    "ordinal {} follows {}",
                    ev.ordinal,
                    s.last_ordinal()
                )));
            }
            s.apply(&ev.kind).map_err(|e| CodingError::Replay(format!("event {}: {e}", ev.ordinal)))?;
            s.events.push(ev);
        }
        Ok(s)
    }

    /// Validates and applies one event body. State is untouched on error.
    fn apply(&mut self, kind: &EventKind) -> Result<(), CodingError> {
        match kind {
            EventKind::SessionCreated { .. } => Err(CodingError::Replay("duplicate session-created".into())),
            EventKind::Dequeued { sample } => {
                if self.queue.front() != Some(sample) {
                    return Err(match self.queue.front() {
                        None => CodingError::QueueEmpty,
                        Some(_) => CodingError::Replay(format!("sample {sample} is not at the queue head")),
                    });
                }
                self.queue.pop_front();
                self.sampled.push(*sample);
                self.sampled_set.insert(*sample);
                Ok(())
            }
            EventKind::CodeCreated {
                name,
                description,
                matches_category,
            } => {
                if name.trim().is_empty() {
                    return Err(CodingError::EmptyCodeName);
                }
                if self.codebook.get(name).is_some() {
                    return Err(CodingError::DuplicateCode(name.clone()));
                }
                self.codebook.codes.push(Code {
                    name: name.clone(),
                    description: description.clone(),
                    created_at_sample_ordinal: self.assignment_events + 1,
                    matches_category: *matches_category,
                });
                Ok(())
            }
            EventKind::CodeAssigned {
                sample, code, memo, ..
            } => {
                if self.codebook.get(code).is_none() {
                    return Err(CodingError::UnknownCode(code.clone()));
                }
                if !self.sampled_set.contains(sample) {
                    return Err(if self.members.contains(sample) {
                        CodingError::NotYetSampled(*sample)
                    } else {
                        CodingError::UnknownSample(*sample)
                    });
                }
                self.assignment_events += 1;
                self.current.insert(
                    *sample,
                    Assignment {
                        sample: *sample,
                        code: code.clone(),
                        memo: memo.clone(),
                        ordinal: self.last_ordinal() + 1,
                    },
                );
                Ok(())
            }
        }
    }

    fn commit(&mut self, kind: EventKind) -> Result<&Event, CodingError> {
        if self.read_only {
            return Err(CodingError::ReadOnly);
        }
        self.apply(&kind)?;
        let ev = Event {
            ordinal: self.last_ordinal() + 1,
            timestamp: now(),
            kind,
        };
        self.events.push(ev);
        Ok(self.events.last().unwrap())
    }

    /// Applies a client-submitted event body, optionally checking the ordinal the
    /// client last saw. Returns the new events.
    pub fn submit(&mut self, expected_ordinal: Option<u64>, kind: EventKind) -> Result<Vec<Event>, CodingError> {
        if let Some(expected) = expected_ordinal {
            if expected != self.last_ordinal() {
                return Err(CodingError::OrdinalConflict {
                    expected,
                    actual: self.last_ordinal(),
                });
            }
        }
        let before = self.events.len();
        match kind {
            EventKind::SessionCreated { .. } => {
                return Err(CodingError::Replay("session already created".into()));
            }
            EventKind::Dequeued { sample } => {
                if self.queue.front() != Some(&sample) {
                    return Err(if self.members.contains(&sample) {
                        CodingError::NotYetSampled(sample)
                    } else {
                        CodingError::UnknownSample(sample)
                    });
                }
                self.commit(EventKind::Dequeued { sample })?;
            }
            EventKind::CodeAssigned { sample, code, memo, .. } => {
                self.assign_code(sample, &code, &memo, None)?;
            }
            k @ EventKind::CodeCreated { .. } => {
                self.commit(k)?;
            }
        }
        Ok(self.events[before..].to_vec())
    }

    pub fn last_ordinal(&self) -> u64 {
        self.events.last().map_or(0, |e| e.ordinal)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn queue(&self) -> impl Iterator<Item = u64> + '_ {
        self.queue.iter().copied()
    }

    pub fn sampled(&self) -> &[u64] {
        &self.sampled
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    /// Current assignments ordered by ordinal.
    pub fn assignments(&self) -> Vec<&Assignment> {
        let mut v: Vec<&Assignment> = self.current.values().collect();
        v.sort_by_key(|a| a.ordinal);
        v
    }

    pub fn code_of(&self, sample: u64) -> Option<&str> {
        self.current.get(&sample).map(|a| a.code.as_str())
    }

    /// Takes the next sample from the queue for close reading.
    pub fn next_sample(&mut self) -> Result<u64, CodingError> {
        let sample = *self.queue.front().ok_or(CodingError::QueueEmpty)?;
        self.commit(EventKind::Dequeued { sample })?;
        Ok(sample)
    }

    pub fn create_code(&mut self, name: &str, description: &str, matches_category: bool) -> Result<(), CodingError> {
        self.commit(EventKind::CodeCreated {
            name: name.to_string(),
            description: description.to_string(),
            matches_category,
        })?;
        Ok(())
    }

    /// Assigns `code` to a dequeued sample. With `create`, a missing code is
    /// added first; both events are committed or neither is.
    pub fn assign_code(
        &mut self,
        sample: u64,
        code: &str,
        memo: &str,
        create: Option<NewCode>,
    ) -> Result<u64, CodingError> {
        if self.read_only {
            return Err(CodingError::ReadOnly);
        }
        let needs_code = self.codebook.get(code).is_none();
        if needs_code && create.is_none() {
            return Err(CodingError::UnknownCode(code.to_string()));
        }
        if !self.sampled_set.contains(&sample) {
            return Err(if self.members.contains(&sample) {
                CodingError::NotYetSampled(sample)
            } else {
                CodingError::UnknownSample(sample)
            });
        }
        if needs_code {
            let nc = create.unwrap();
            self.commit(EventKind::CodeCreated {
                name: code.to_string(),
                description: nc.description,
                matches_category: nc.matches_category,
            })?;
        }
        let previous = self.current.get(&sample).map(|a| a.code.clone());
        let ev = self.commit(EventKind::CodeAssigned {
            sample,
            code: code.to_string(),
            memo: memo.to_string(),
            previous,
        })?;
        Ok(ev.ordinal)
    }

    pub fn code_summary(&self) -> CodeSummary {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for a in self.current.values() {
            *counts.entry(a.code.as_str()).or_default() += 1;
        }
        let codes: Vec<CodeCount> = self
            .codebook
            .codes
            .iter()
            .map(|c| CodeCount {
                name: c.name.clone(),
                count: counts.get(c.name.as_str()).copied().unwrap_or(0),
                matches_category: c.matches_category,
            })
            .collect();
        CodeSummary {
            codes_used: codes.iter().filter(|c| c.count > 0).count(),
            coded_samples: self.current.len(),
            fit_count: codes.iter().filter(|c| c.matches_category).map(|c| c.count).sum(),
            codes,
        }
    }

    /// Saturated once at least `window` assignments were made and none of the
    /// last `window` of them came with a new code.
    pub fn saturation_state(&self, window: usize) -> Result<SaturationState, CodingError> {
        if window == 0 {
            return Err(CodingError::InvalidWindow);
        }
        let total = self.assignment_events;
        let start = total.saturating_sub(window as u64);
        let new_codes = self
            .codebook
            .codes
            .iter()
            .filter(|c| c.created_at_sample_ordinal > start)
            .count();
        Ok(SaturationState {
            window,
            assignments: total as usize,
            new_codes_in_window: new_codes,
            saturated: total >= window as u64 && new_codes == 0,
        })
    }

    /// Session file contents: one JSON event per line.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&serde_json::to_string(e).expect("events serialize"));
            s.push('\n');
        }
        s
    }

    pub fn from_jsonl(text: &str) -> Result<Self, CodingError> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str::<Event>)
            .collect::<Result<Vec<_>, _>>()?;
        Self::replay(events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn session() -> CodingSession {
        let ids = [53, 51, 60, 52, 99];
        let l = labels(&["a", "a", "a", "a", "b"]);
        CodingSession::create("s1", "20ng", &ids, &l, "a", Strategy::Lexicographic, None).unwrap()
    }

    #[test]
    fn lexicographic_queue_ascends() {
        let s = session();
        assert_eq!(s.queue().collect::<Vec<_>>(), vec![51, 52, 53, 60]);
    }

    #[test]
    fn unknown_label() {
        let ids = [1, 2];
        let l = labels(&["a", "a"]);
        let err = CodingSession::create("s", "d", &ids, &l, "zzz", Strategy::Lexicographic, None).unwrap_err();
        assert!(matches!(err, CodingError::UnknownLabel(_)));
    }

    #[test]
    fn seeded_random_is_a_deterministic_permutation() {
        let ids: Vec<u64> = (0..50).collect();
        let l = vec!["x".to_string(); 50];
        let st = Strategy::SeededRandom { seed: 4 };
        let a = build_queue(&ids, &l, "x", &st, None).unwrap();
        let b = build_queue(&ids, &l, "x", &st, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, ids);
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, ids);
    }

    #[test]
    fn theoretical_orders_by_anchor_distance() {
        let p = array![[0.0], [5.0], [1.0], [10.0], [2.0]];
        let ids = [1u64, 2, 3, 4, 5];
        let l = labels(&["a"; 5]);
        let set = PointSet::new(p.view(), &ids, &l).unwrap();
        let st = Strategy::Theoretical { anchors: vec![4] };
        let q = build_queue(&ids, &l, "a", &st, Some(&set)).unwrap();
        assert_eq!(q, vec![4, 2, 5, 3, 1]);
        let missing = build_queue(&ids, &l, "a", &st, None).unwrap_err();
        assert!(matches!(missing, CodingError::MissingEmbedding));
    }

    #[test]
    fn assign_then_summary() {
        let mut s = session();
        let x = s.next_sample().unwrap();
        assert_eq!(x, 51);
        s.create_code("religion", "about belief", true).unwrap();
        s.assign_code(51, "religion", "", None).unwrap();
        let sum = s.code_summary();
        assert_eq!(sum.coded_samples, 1);
        assert_eq!(sum.fit_count, 1);
        assert_eq!(sum.codes[0].count, 1);
    }

    #[test]
    fn rule_violations() {
        let mut s = session();
        s.create_code("c", "", false).unwrap();
        assert!(matches!(s.assign_code(52, "c", "", None), Err(CodingError::NotYetSampled(52))));
        s.next_sample().unwrap();
        assert!(matches!(s.assign_code(51, "nope", "", None), Err(CodingError::UnknownCode(_))));
        assert!(matches!(s.assign_code(99, "c", "", None), Err(CodingError::UnknownSample(99))));
        assert!(matches!(s.create_code("c", "", false), Err(CodingError::DuplicateCode(_))));
        assert!(matches!(s.create_code("  ", "", false), Err(CodingError::EmptyCodeName)));
        // failed calls leave no events behind
        assert_eq!(s.events().len(), 3);
    }

    #[test]
    fn assign_with_create_is_atomic() {
        let mut s = session();
        s.next_sample().unwrap();
        let nc = NewCode {
            description: "d".into(),
            matches_category: false,
        };
        // not yet sampled: neither the code nor the assignment is recorded
        assert!(s.assign_code(52, "fresh", "", Some(nc.clone())).is_err());
        assert!(s.codebook().is_empty());
        let ord = s.assign_code(51, "fresh", "", Some(nc)).unwrap();
        assert_eq!(ord, 4);
        assert_eq!(s.codebook().len(), 1);
    }

    #[test]
    fn reassignment_replaces_and_logs() {
        let mut s = session();
        s.next_sample().unwrap();
        s.create_code("a", "", false).unwrap();
        s.create_code("b", "", true).unwrap();
        s.assign_code(51, "a", "", None).unwrap();
        s.assign_code(51, "b", "changed my mind", None).unwrap();
        assert_eq!(s.code_of(51), Some("b"));
        assert_eq!(s.code_summary().coded_samples, 1);
        let EventKind::CodeAssigned { previous, .. } = &s.events().last().unwrap().kind else {
            panic!()
        };
        assert_eq!(previous.as_deref(), Some("a"));
    }

    #[test]
    fn queue_and_sampled_are_disjoint() {
        let mut s = session();
        s.next_sample().unwrap();
        s.next_sample().unwrap();
        let q: BTreeSet<u64> = s.queue().collect();
        assert!(s.sampled().iter().all(|x| !q.contains(x)));
    }

    #[test]
    fn empty_session_summary_is_zero() {
        let s = session();
        let sum = s.code_summary();
        assert_eq!((sum.codes_used, sum.coded_samples, sum.fit_count), (0, 0, 0));
    }

    #[test]
    fn saturation_hand_trace() {
        // codes first used at assignments 1, 2 and 5; eight assignments in total
        let ids: Vec<u64> = (1..=8).collect();
        let l = vec!["a".to_string(); 8];
        let mut s = CodingSession::create("s", "d", &ids, &l, "a", Strategy::Lexicographic, None).unwrap();
        let plan = ["x", "y", "x", "y", "z", "x", "y", "z"];
        for (i, code) in plan.iter().enumerate() {
            let sample = s.next_sample().unwrap();
            let create = s.codebook().get(code).is_none().then(|| NewCode {
                description: String::new(),
                matches_category: false,
            });
            s.assign_code(sample, code, "", create).unwrap();
            if i == 4 {
                let st = s.saturation_state(3).unwrap();
                assert!(!st.saturated);
                assert_eq!(st.new_codes_in_window, 1);
            }
        }
        let created: Vec<u64> = s.codebook().codes.iter().map(|c| c.created_at_sample_ordinal).collect();
        assert_eq!(created, vec![1, 2, 5]);
        assert!(s.saturation_state(3).unwrap().saturated);
        assert!(!s.saturation_state(4).unwrap().saturated);
        assert!(matches!(s.saturation_state(0), Err(CodingError::InvalidWindow)));
    }

    #[test]
    fn event_line_shape_and_replay() {
        let mut s = session();
        s.next_sample().unwrap();
        s.assign_code(
            51,
            "c",
            "m",
            Some(NewCode {
                description: "d".into(),
                matches_category: true,
            }),
        )
        .unwrap();
        let text = s.to_jsonl();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        let keys: BTreeSet<&str> = first.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, BTreeSet::from(["type", "ordinal", "timestamp", "payload"]));
        assert_eq!(first["type"], "session-created");
        let back = CodingSession::from_jsonl(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn submit_checks_ordinal() {
        let mut s = session();
        let err = s.submit(Some(7), EventKind::Dequeued { sample: 51 }).unwrap_err();
        assert!(matches!(err, CodingError::OrdinalConflict { expected: 7, actual: 1 }));
        let evs = s.submit(Some(1), EventKind::Dequeued { sample: 51 }).unwrap();
        assert_eq!(evs[0].ordinal, 2);
    }
}
