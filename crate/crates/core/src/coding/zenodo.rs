//! Imports a published document-to-code table as a read-only session.
//!
//! Column names are matched loosely since the table layout is not fixed: the id
//! column is the first of `id`, `document`, `file`, ... present, the code column
//! the first of `code`, `category`, ... present. Either can be overridden. Category fit comes from an
//! explicit code list, a yes/no column, or (absent both) codes whose name contains
//! the last dotted segment of the label, e.g. `atheism` for `alt.atheism`.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{CodingError, CodingSession, Event, EventKind, Strategy};

const ID_HEADERS: &[&str] = &[
    "id",
    "doc_id",
    "document_id",
    "document",
    "doc",
    "docid",
    "file",
    "filename",
    "sample",
    "sample_id",
];
const CODE_HEADERS: &[&str] = &["code", "codes", "coding", "category", "categories", "tag"];
const MEMO_HEADERS: &[&str] = &["memo", "note", "notes", "comment", "comments"];
const FIT_HEADERS: &[&str] = &["fit", "fits", "fits_category", "matches_category", "atheism", "is_atheism"];

/// Fixed timestamp for imported events so that imports are reproducible.
const IMPORT_TIMESTAMP: &str = "1970-01-01T00:00:00.000Z";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub id: Option<String>,
    pub code: Option<String>,
    pub memo: Option<String>,
    pub fit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportOptions {
    pub session_id: String,
    pub dataset: String,
    pub label: String,
    pub columns: ColumnMapping,
    /// Codes that fit the label's category. Empty means "infer".
    pub fit_codes: Vec<String>,
}

impl Default for ImportOptions {
    fn default() -> Self {
        ImportOptions {
            session_id: "zenodo-8337723".into(),
            dataset: "20ng".into(),
            label: "alt.atheism".into(),
            columns: ColumnMapping::default(),
            fit_codes: Vec::new(),
        }
    }
}

fn find_column(headers: &[String], wanted: Option<&str>, candidates: &[&str]) -> Option<usize> {
    let norm = |s: &str| s.trim().trim_start_matches('\u{feff}').to_ascii_lowercase().replace([' ', '-'], "_");
    if let Some(w) = wanted {
        return headers.iter().position(|h| norm(h) == norm(w));
    }
    candidates
        .iter()
        .find_map(|c| headers.iter().position(|h| norm(h) == *c))
}

fn truthy(s: &str) -> bool {
    matches!(
        s.trim().to_ascii_lowercase().as_str(),
        "1" | "y" | "yes" | "true" | "x" | "fit" | "fits"
    )
}

/// Extracts the trailing integer of values like `51060` or `alt.atheism/51060`.
fn parse_doc_id(raw: &str) -> Option<u64> {
    let t = raw.trim();
    let digits: String = t
        .chars()
        .rev()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

fn sniff_delimiter(text: &str) -> u8 {
    let first = text.lines().next().unwrap_or("");
    b",;\t"
        .iter()
        .copied()
        .max_by_key(|&d| first.bytes().filter(|&b| b == d).count())
        .unwrap_or(b',')
}

/// Reads the table and replays it as dequeue + assign events in file order.
pub fn import_coding_csv<R: Read>(mut input: R, opts: &ImportOptions) -> Result<CodingSession, CodingError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(&text))
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    let id_col = find_column(&headers, opts.columns.id.as_deref(), ID_HEADERS)
        .ok_or_else(|| CodingError::Import(format!("no document id column among {headers:?}")))?;
    let code_col = find_column(&headers, opts.columns.code.as_deref(), CODE_HEADERS)
        .ok_or_else(|| CodingError::Import(format!("no code column among {headers:?}")))?;
    let memo_col = find_column(&headers, opts.columns.memo.as_deref(), MEMO_HEADERS);
    let fit_col = find_column(&headers, opts.columns.fit.as_deref(), FIT_HEADERS);

    let mut rows: Vec<(u64, String, String)> = Vec::new();
    let mut fit_votes: BTreeMap<String, bool> = BTreeMap::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let raw_id = rec.get(id_col).unwrap_or("");
        let id = parse_doc_id(raw_id)
            .ok_or_else(|| CodingError::Import(format!("row {}: bad document id {raw_id:?}", line + 2)))?;
        let code = rec.get(code_col).unwrap_or("").trim().to_string();
        if code.is_empty() {
            return Err(CodingError::Import(format!("row {}: empty code", line + 2)));
        }
        let memo = memo_col.and_then(|c| rec.get(c)).unwrap_or("").trim().to_string();
        if let Some(fc) = fit_col {
            let v = truthy(rec.get(fc).unwrap_or(""));
            *fit_votes.entry(code.clone()).or_insert(false) |= v;
        }
        rows.push((id, code, memo));
    }
    if rows.is_empty() {
        return Err(CodingError::Import("no rows".into()));
    }

    let category = opts.label.rsplit('.').next().unwrap_or(&opts.label).to_ascii_lowercase();
    let fits = |code: &str| -> bool {
        if !opts.fit_codes.is_empty() {
            opts.fit_codes.iter().any(|c| c.eq_ignore_ascii_case(code))
        } else if fit_col.is_some() {
            fit_votes.get(code).copied().unwrap_or(false)
        } else {
            code.to_ascii_lowercase().contains(&category)
        }
    };

    let mut queue: Vec<u64> = Vec::new();
    for (id, _, _) in &rows {
        if !queue.contains(id) {
            queue.push(*id);
        }
    }
    let mut events = vec![EventKind::SessionCreated {
        session: opts.session_id.clone(),
        dataset: opts.dataset.clone(),
        label: opts.label.clone(),
        strategy: Strategy::Lexicographic,
        queue: queue.clone(),
        read_only: true,
    }];
    let mut seen_codes: Vec<String> = Vec::new();
    let mut dequeued = 0usize;
    let mut current: BTreeMap<u64, String> = BTreeMap::new();
    for (id, code, memo) in rows {
        let pos = queue.iter().position(|&q| q == id).unwrap();
        while dequeued <= pos {
            events.push(EventKind::Dequeued { sample: queue[dequeued] });
            dequeued += 1;
        }
        if !seen_codes.contains(&code) {
            events.push(EventKind::CodeCreated {
                name: code.clone(),
                description: String::new(),
                matches_category: fits(&code),
            });
            seen_codes.push(code.clone());
        }
        let previous = current.insert(id, code.clone());
        events.push(EventKind::CodeAssigned {
            sample: id,
            code,
            memo,
            previous,
        });
    }
    CodingSession::replay(events.into_iter().enumerate().map(|(i, kind)| Event {
        ordinal: i as u64 + 1,
        timestamp: IMPORT_TIMESTAMP.to_string(),
        kind,
    }))
}
