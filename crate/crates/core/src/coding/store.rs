//! Durable session storage: one append-only JSONL file per session.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{CodingError, CodingSession, Event, EventKind};

/// Serializes writers per store; readers replay from disk or the cache.
pub struct SessionStore {
    dir: PathBuf,
    cache: Mutex<BTreeMap<String, CodingSession>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl SessionStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CodingError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(SessionStore {
            dir,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    fn path(&self, id: &str) -> Result<PathBuf, CodingError> {
        if !valid_id(id) {
            return Err(CodingError::InvalidSessionId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.jsonl")))
    }

    pub fn list(&self) -> Result<Vec<String>, CodingError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = p.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Persists a new session with its full log.
    pub fn create(&self, session: &CodingSession) -> Result<(), CodingError> {
        let mut cache = self.cache.lock().expect("store lock");
        let path = self.path(&session.id)?;
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => CodingError::AlreadyExists(session.id.clone()),
                _ => e.into(),
            })?;
        f.write_all(session.to_jsonl().as_bytes())?;
        f.sync_all()?;
        cache.insert(session.id.clone(), session.clone());
        Ok(())
    }

    fn read(&self, id: &str) -> Result<CodingSession, CodingError> {
        let path = self.path(id)?;
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(CodingError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        let mut lines: Vec<&str> = text.split_inclusive('\n').collect();
        // a torn final write has no newline; it was never acknowledged, so cut
        // it off before anything else is appended behind it
        if let Some(torn) = lines.pop_if(|l| !l.ends_with('\n')) {
            let keep = (text.len() - torn.len()) as u64;
            OpenOptions::new().write(true).open(&path)?.set_len(keep)?;
        }
        let events = lines
            .iter()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<Event>(l))
            .collect::<Result<Vec<_>, _>>()?;
        CodingSession::replay(events)
    }

    pub fn load(&self, id: &str) -> Result<CodingSession, CodingError> {
        let mut cache = self.cache.lock().expect("store lock");
        if let Some(s) = cache.get(id) {
            return Ok(s.clone());
        }
        let s = self.read(id)?;
        cache.insert(id.to_string(), s.clone());
        Ok(s)
    }

    /// Applies an event and appends the resulting records before returning them.
    pub fn submit(&self, id: &str, expected_ordinal: Option<u64>, kind: EventKind) -> Result<Vec<Event>, CodingError> {
        self.apply(id, expected_ordinal, |s| s.submit(None, kind)).map(|(_, events)| events)
    }

    /// Runs `op` against the session and durably appends every event it
    /// produced. Nothing is written if `op` fails.
    pub fn apply<T>(
        &self,
        id: &str,
        expected_ordinal: Option<u64>,
        op: impl FnOnce(&mut CodingSession) -> Result<T, CodingError>,
    ) -> Result<(T, Vec<Event>), CodingError> {
        let mut cache = self.cache.lock().expect("store lock");
        let mut session = match cache.get(id) {
            Some(s) => s.clone(),
            None => self.read(id)?,
        };
        if let Some(expected) = expected_ordinal {
            if expected != session.last_ordinal() {
                return Err(CodingError::OrdinalConflict {
                    expected,
                    actual: session.last_ordinal(),
                });
            }
        }
        let before = session.events().len();
        let out = op(&mut session)?;
        let events = session.events()[before..].to_vec();
        if !events.is_empty() {
            let mut buf = String::new();
            for e in &events {
                buf.push_str(&serde_json::to_string(e)?);
                buf.push('\n');
            }
            let mut f: File = OpenOptions::new().append(true).open(self.path(id)?)?;
            f.write_all(buf.as_bytes())?;
            f.sync_data()?;
        }
        cache.insert(id.to_string(), session);
        Ok((out, events))
    }
}
