//! Hypotheses tested through visualization: registration, evidence, verdicts,
//! and deterministic reports with a dataset usage audit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coding::{CodeSummary, SaturationState};
use crate::layout::{EmbeddingLayout, Provenance};
use crate::neighborhood::NeighborReport;

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error("sample {0} does not carry the hypothesis label")]
    UnknownSample(u64),
    #[error("label {0:?} does not occur in the dataset")]
    UnknownLabel(String),
    #[error("the null hypothesis must be stated")]
    MissingNullStatement,
    #[error("hypothesis is closed")]
    Closed,
    #[error("a verdict needs quantitative evidence (layout or neighborhood) and qualitative evidence (coding or excerpt); have {quantitative} and {qualitative}")]
    InsufficientEvidence { quantitative: usize, qualitative: usize },
    #[error("hypothesis {0:?} not found")]
    NotFound(String),
    #[error("invalid hypothesis id {0:?}")]
    InvalidId(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Open,
    NullRejected,
    NullRetained,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Open => "open",
            Status::NullRejected => "null-rejected",
            Status::NullRetained => "null-retained",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    RejectNull,
    RetainNull,
}

impl FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reject" | "reject-null" | "null-rejected" => Ok(Verdict::RejectNull),
            "retain" | "retain-null" | "null-retained" => Ok(Verdict::RetainNull),
            _ => Err(format!("unknown verdict {s:?} (reject | retain)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Evidence {
    /// A 2-D layout, by id, with the points to highlight.
    Layout {
        layout_id: String,
        provenance: Provenance,
        #[serde(default)]
        highlights: Vec<u64>,
        #[serde(default)]
        note: String,
    },
    Neighborhood {
        layout_id: String,
        provenance: Provenance,
        report: NeighborReport,
    },
    Coding {
        session_id: String,
        summary: CodeSummary,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        saturation: Option<SaturationState>,
    },
    Excerpt {
        sample: u64,
        text: String,
        #[serde(default)]
        note: String,
    },
}

impl Evidence {
    pub fn is_quantitative(&self) -> bool {
        matches!(self, Evidence::Layout { .. } | Evidence::Neighborhood { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Evidence::Layout { .. } => "layout",
            Evidence::Neighborhood { .. } => "neighborhood",
            Evidence::Coding { .. } => "coding",
            Evidence::Excerpt { .. } => "excerpt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub verdict: Verdict,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    pub statement: String,
    pub null_statement: String,
    pub dataset: String,
    pub label: String,
    pub supporting: Vec<u64>,
    pub status: Status,
    pub evidence: Vec<Evidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictRecord>,
}

/// Registers an open hypothesis about samples of `label`. `ids` and `labels`
/// describe the dataset's samples.
#[allow(clippy::too_many_arguments)]
pub fn register_hypothesis(
    id: &str,
    statement: &str,
    null_statement: &str,
    dataset: &str,
    label: &str,
    supporting: &[u64],
    ids: &[u64],
    labels: &[String],
) -> Result<Hypothesis, HypothesisError> {
    if null_statement.trim().is_empty() {
        return Err(HypothesisError::MissingNullStatement);
    }
    let members: BTreeSet<u64> = ids
        .iter()
        .zip(labels)
        .filter(|(_, l)| *l == label)
        .map(|(&i, _)| i)
        .collect();
    if members.is_empty() {
        return Err(HypothesisError::UnknownLabel(label.to_string()));
    }
    if let Some(&bad) = supporting.iter().find(|s| !members.contains(s)) {
        return Err(HypothesisError::UnknownSample(bad));
    }
    Ok(Hypothesis {
        id: id.to_string(),
        statement: statement.to_string(),
        null_statement: null_statement.to_string(),
        dataset: dataset.to_string(),
        label: label.to_string(),
        supporting: supporting.to_vec(),
        status: Status::Open,
        evidence: Vec::new(),
        verdict: None,
    })
}

impl Hypothesis {
    pub fn attach_evidence(&mut self, evidence: Evidence) -> Result<usize, HypothesisError> {
        if self.status != Status::Open {
            return Err(HypothesisError::Closed);
        }
        self.evidence.push(evidence);
        Ok(self.evidence.len() - 1)
    }

    pub fn evidence_counts(&self) -> (usize, usize) {
        let q = self.evidence.iter().filter(|e| e.is_quantitative()).count();
        (q, self.evidence.len() - q)
    }

    /// Closes the hypothesis. Requires at least one quantitative and one
    /// qualitative piece of evidence.
    pub fn record_verdict(&mut self, verdict: Verdict, rationale: &str) -> Result<(), HypothesisError> {
        if self.status != Status::Open {
            return Err(HypothesisError::Closed);
        }
        let (quantitative, qualitative) = self.evidence_counts();
        if quantitative == 0 || qualitative == 0 {
            return Err(HypothesisError::InsufficientEvidence {
                quantitative,
                qualitative,
            });
        }
        self.status = match verdict {
            Verdict::RejectNull => Status::NullRejected,
            Verdict::RetainNull => Status::NullRetained,
        };
        self.verdict = Some(VerdictRecord {
            verdict,
            rationale: rationale.to_string(),
        });
        Ok(())
    }
}

/// `yes`, `(yes)` / `partial`, `no`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditValue {
    Yes,
    Partial,
    No,
}

impl fmt::Display for AuditValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuditValue::Yes => "yes",
            AuditValue::Partial => "partial",
            AuditValue::No => "no",
        })
    }
}

impl FromStr for AuditValue {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "y" => Ok(AuditValue::Yes),
            "partial" | "(yes)" | "indirect" => Ok(AuditValue::Partial),
            "no" | "n" => Ok(AuditValue::No),
            other => Err(format!("unknown audit value {other:?} (yes | partial | no)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageAudit {
    pub dataset: String,
    pub source_given: Option<AuditValue>,
    pub explicit_choice: Option<AuditValue>,
    pub content_stated: Option<AuditValue>,
    pub example_given: Option<AuditValue>,
    pub suitability_analyzed: Option<AuditValue>,
    #[serde(default)]
    pub notes: String,
}

impl UsageAudit {
    pub fn fields(&self) -> [(&'static str, Option<AuditValue>); 5] {
        [
            ("source_given", self.source_given),
            ("explicit_choice", self.explicit_choice),
            ("content_stated", self.content_stated),
            ("example_given", self.example_given),
            ("suitability_analyzed", self.suitability_analyzed),
        ]
    }

    pub fn missing_fields(&self) -> Vec<&'static str> {
        self.fields().into_iter().filter(|(_, v)| v.is_none()).map(|(n, _)| n).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_fields().is_empty()
    }
}

/// Machine-readable twin of a rendered report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub hypothesis: Hypothesis,
    pub audit: UsageAudit,
    pub complete: bool,
    pub incomplete_reasons: Vec<String>,
    pub assets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub markdown: String,
    pub json: String,
    /// `(file name, svg)` for each layout figure; also inlined in the markdown.
    pub assets: Vec<(String, String)>,
    pub complete: bool,
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn fmt_ratio(r: Option<f64>) -> String {
    r.map_or_else(|| "unbounded".to_string(), |v| format!("{v:.3}"))
}

fn provenance_line(p: &Provenance) -> String {
    format!(
        "dataset `{}` ({}), model `{}`, t-SNE perplexity {} / {} iterations, seed {}",
        p.dataset,
        p.dataset_version,
        serde_json::to_string(&p.topic_model).unwrap_or_default(),
        p.tsne.perplexity,
        p.tsne.iterations,
        p.seed
    )
}

/// Renders markdown with inline SVG figures plus the JSON twin. Output depends
/// only on the arguments. Reports for open hypotheses or with unanswered audit
/// fields are marked incomplete.
pub fn render_report(h: &Hypothesis, audit: &UsageAudit, layouts: &BTreeMap<String, EmbeddingLayout>) -> Report {
    let mut reasons = Vec::new();
    if h.status == Status::Open {
        reasons.push("no verdict recorded".to_string());
    }
    for f in audit.missing_fields() {
        reasons.push(format!("audit field {f} missing"));
    }
    let mut assets = Vec::new();
    let mut md = String::new();
    let _ = writeln!(md, "# Hypothesis {}\n", h.id);
    if !reasons.is_empty() {
        let _ = writeln!(md, "> **INCOMPLETE**: {}\n", reasons.join("; "));
    }
    let _ = writeln!(md, "| field | value |\n|---|---|");
    let _ = writeln!(md, "| statement | {} |", md_cell(&h.statement));
    let _ = writeln!(md, "| null hypothesis | {} |", md_cell(&h.null_statement));
    let _ = writeln!(md, "| dataset | {} |", md_cell(&h.dataset));
    let _ = writeln!(md, "| label | {} |", md_cell(&h.label));
    let supporting: Vec<String> = h.supporting.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(md, "| supporting samples | {} |", supporting.join(", "));
    let _ = writeln!(md, "| status | {} |\n", h.status);

    let _ = writeln!(md, "## Evidence\n");
    if h.evidence.is_empty() {
        let _ = writeln!(md, "_none attached_\n");
    }
    for (i, ev) in h.evidence.iter().enumerate() {
        let _ = writeln!(md, "### {}. {}\n", i + 1, ev.kind_name());
        match ev {
            Evidence::Layout {
                layout_id,
                provenance,
                highlights,
                note,
            } => {
                let _ = writeln!(md, "Layout `{layout_id}`: {}\n", provenance_line(provenance));
                if !note.is_empty() {
                    let _ = writeln!(md, "{note}\n");
                }
                match layouts.get(layout_id) {
                    Some(l) => {
                        let svg = l.to_svg(highlights);
                        let name = format!("{}-evidence-{}.svg", h.id, i + 1);
                        let _ = writeln!(md, "{}", svg.trim_end());
                        let _ = writeln!(md);
                        assets.push((name, svg));
                    }
                    None => {
                        let _ = writeln!(md, "_layout `{layout_id}` not available; figure omitted_\n");
                    }
                }
            }
            Evidence::Neighborhood {
                layout_id,
                provenance,
                report,
            } => {
                let _ = writeln!(md, "From `{layout_id}`: {}\n", provenance_line(provenance));
                let _ = writeln!(md, "| anchor | label | space | nearest | farthest | ratio |\n|---|---|---|---|---|---|");
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} ({:.6}) | {} ({:.6}) | {} |",
                    report.anchor,
                    md_cell(&report.label),
                    report.space,
                    report.nearest.id,
                    report.nearest.distance,
                    report.farthest.id,
                    report.farthest.distance,
                    fmt_ratio(report.ratio)
                );
                if let Some(c) = &report.comparison {
                    let _ = writeln!(
                        md,
                        "\nComparison {}: distance {:.6}, {} times the nearest distance.",
                        c.id,
                        c.distance,
                        fmt_ratio(c.ratio)
                    );
                }
                let _ = writeln!(md);
            }
            Evidence::Coding {
                session_id,
                summary,
                saturation,
            } => {
                let _ = writeln!(md, "Session `{session_id}`\n");
                let _ = writeln!(md, "| code | samples | fits category |\n|---|---|---|");
                for c in &summary.codes {
                    let fit = if c.matches_category { "yes" } else { "no" };
                    let _ = writeln!(md, "| {} | {} | {fit} |", md_cell(&c.name), c.count);
                }
                let _ = writeln!(
                    md,
                    "\n{} codes used, {} coded samples, {} fit the category.",
                    summary.codes_used, summary.coded_samples, summary.fit_count
                );
                if let Some(s) = saturation {
                    let _ = writeln!(
                        md,
                        "Saturation (window {}): {} new codes, {}.",
                        s.window,
                        s.new_codes_in_window,
                        if s.saturated { "saturated" } else { "not saturated" }
                    );
                }
                let _ = writeln!(md);
            }
            Evidence::Excerpt { sample, text, note } => {
                let _ = writeln!(md, "Sample {sample}:\n");
                for line in text.lines() {
                    let _ = writeln!(md, "    {line}");
                }
                let _ = writeln!(md);
                if !note.is_empty() {
                    let _ = writeln!(md, "{note}\n");
                }
            }
        }
    }

    let _ = writeln!(md, "## Verdict\n");
    match &h.verdict {
        Some(v) => {
            let _ = writeln!(md, "**{}**: {}\n", h.status, v.rationale);
        }
        None => {
            let _ = writeln!(md, "_pending_\n");
        }
    }

    let _ = writeln!(md, "## Dataset usage audit: {}\n", md_cell(&audit.dataset));
    let _ = writeln!(md, "| criterion | value |\n|---|---|");
    for (name, v) in audit.fields() {
        let shown = v.map_or_else(|| "MISSING".to_string(), |v| v.to_string());
        let _ = writeln!(md, "| {name} | {shown} |");
    }
    if !audit.notes.is_empty() {
        let _ = writeln!(md, "\n{}", audit.notes);
    }

    let complete = reasons.is_empty();
    let twin = ReportJson {
        hypothesis: h.clone(),
        audit: audit.clone(),
        complete,
        incomplete_reasons: reasons,
        assets: assets.iter().map(|(n, _)| n.clone()).collect(),
    };
    Report {
        markdown: md,
        json: serde_json::to_string_pretty(&twin).expect("report serializes") + "\n",
        assets,
        complete,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredHypothesis {
    pub hypothesis: Hypothesis,
    #[serde(default)]
    pub audit: UsageAudit,
}

/// One JSON file per hypothesis, replaced atomically on save.
pub struct HypothesisStore {
    dir: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl HypothesisStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, HypothesisError> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(HypothesisStore {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    fn path(&self, id: &str) -> Result<PathBuf, HypothesisError> {
        if !valid_id(id) {
            return Err(HypothesisError::InvalidId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    pub fn save(&self, rec: &StoredHypothesis) -> Result<(), HypothesisError> {
        let path = self.path(&rec.hypothesis.id)?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(rec)?)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn load(&self, id: &str) -> Result<StoredHypothesis, HypothesisError> {
        let path = self.path(id)?;
        match fs::read(&path) {
            Ok(b) => Ok(serde_json::from_slice(&b)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(HypothesisError::NotFound(id.to_string())),
            Err(e) => Err(e.into()),
        }
    }

    pub fn list(&self) -> Result<Vec<String>, HypothesisError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == "json") {
                if let Some(s) = p.file_stem().and_then(|s| s.to_str()) {
                    out.push(s.to_string());
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::CodeCount;
    use crate::layout::TopicModelSpec;
    use crate::neighborhood::{Neighbor, Space};
    use crate::tsne::TsneConfig;
    use ndarray::array;

    fn prov() -> Provenance {
        Provenance {
            dataset: "mnist".into(),
            dataset_version: "train".into(),
            vectorizer: None,
            topic_model: TopicModelSpec::Raw,
            tsne: TsneConfig::default(),
            seed: 3,
            subsample: None,
        }
    }

    fn dataset() -> (Vec<u64>, Vec<String>) {
        let ids = vec![1, 21, 451, 34486, 7];
        let labels = ["0", "0", "0", "0", "1"].iter().map(|s| s.to_string()).collect();
        (ids, labels)
    }

    fn open_hypothesis() -> Hypothesis {
        let (ids, labels) = dataset();
        register_hypothesis(
            "h1",
            "zeros are zeros",
            "the dataset is not suitable",
            "mnist",
            "0",
            &[1, 21, 451, 34486],
            &ids,
            &labels,
        )
        .unwrap()
    }

    fn layout_evidence() -> Evidence {
        Evidence::Layout {
            layout_id: "l1".into(),
            provenance: prov(),
            highlights: vec![21],
            note: String::new(),
        }
    }

    fn coding_evidence() -> Evidence {
        Evidence::Coding {
            session_id: "s".into(),
            summary: CodeSummary {
                codes: vec![CodeCount {
                    name: "zero".into(),
                    count: 100,
                    matches_category: true,
                }],
                codes_used: 1,
                coded_samples: 100,
                fit_count: 100,
            },
            saturation: None,
        }
    }

    fn full_audit() -> UsageAudit {
        UsageAudit {
            dataset: "mnist".into(),
            source_given: Some(AuditValue::Yes),
            explicit_choice: Some(AuditValue::Partial),
            content_stated: Some(AuditValue::Yes),
            example_given: Some(AuditValue::No),
            suitability_analyzed: Some(AuditValue::No),
            notes: String::new(),
        }
    }

    #[test]
    fn register_checks_label_membership() {
        let h = open_hypothesis();
        assert_eq!(h.status, Status::Open);
        let (ids, labels) = dataset();
        let err = register_hypothesis("h", "s", "n", "mnist", "0", &[7], &ids, &labels).unwrap_err();
        assert!(matches!(err, HypothesisError::UnknownSample(7)));
        let err = register_hypothesis("h", "s", "", "mnist", "0", &[1], &ids, &labels).unwrap_err();
        assert!(matches!(err, HypothesisError::MissingNullStatement));
    }

    #[test]
    fn verdict_gating() {
        let mut h = open_hypothesis();
        assert!(matches!(
            h.record_verdict(Verdict::RejectNull, "r"),
            Err(HypothesisError::InsufficientEvidence { .. })
        ));
        h.attach_evidence(layout_evidence()).unwrap();
        assert!(matches!(
            h.record_verdict(Verdict::RejectNull, "r"),
            Err(HypothesisError::InsufficientEvidence {
                quantitative: 1,
                qualitative: 0
            })
        ));
        h.attach_evidence(coding_evidence()).unwrap();
        h.record_verdict(Verdict::RejectNull, "r").unwrap();
        assert_eq!(h.status, Status::NullRejected);
        assert!(matches!(h.attach_evidence(layout_evidence()), Err(HypothesisError::Closed)));
    }

    #[test]
    fn report_lists_evidence_and_audit() {
        let mut h = open_hypothesis();
        h.attach_evidence(layout_evidence()).unwrap();
        h.attach_evidence(Evidence::Neighborhood {
            layout_id: "l1".into(),
            provenance: prov(),
            report: NeighborReport {
                anchor: 1,
                label: "0".into(),
                space: Space::LayoutSpace,
                metric: "euclidean".into(),
                nearest: Neighbor { id: 21, distance: 1.0 },
                farthest: Neighbor { id: 451, distance: 3.0 },
                ratio: Some(3.0),
                comparison: None,
                distances: None,
            },
        })
        .unwrap();
        h.attach_evidence(coding_evidence()).unwrap();
        h.record_verdict(Verdict::RejectNull, "zeros cluster together").unwrap();
        let mut layouts = BTreeMap::new();
        layouts.insert(
            "l1".to_string(),
            EmbeddingLayout {
                ids: vec![1, 21, 451, 34486, 7],
                labels: dataset().1,
                points: array![[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [0.5, 0.5], [9.0, 9.0]],
                final_kl: 0.1,
                provenance: prov(),
            },
        );
        let r = render_report(&h, &full_audit(), &layouts);
        assert!(r.complete);
        assert!(!r.markdown.contains("INCOMPLETE"));
        for f in ["source_given", "explicit_choice", "content_stated", "example_given", "suitability_analyzed"] {
            assert!(r.markdown.contains(f), "{f}");
        }
        assert!(r.markdown.contains("<svg"));
        assert!(r.markdown.contains("| zero | 100 | yes |"));
        assert_eq!(r.assets.len(), 1);
        assert_eq!(r, render_report(&h, &full_audit(), &layouts));
        let twin: ReportJson = serde_json::from_str(&r.json).unwrap();
        assert_eq!(twin.hypothesis, h);
    }

    #[test]
    fn missing_audit_field_marks_incomplete() {
        let mut audit = full_audit();
        audit.example_given = None;
        let r = render_report(&open_hypothesis(), &audit, &BTreeMap::new());
        assert!(!r.complete);
        assert!(r.markdown.contains("INCOMPLETE"));
        assert!(r.markdown.contains("| example_given | MISSING |"));
    }

    #[test]
    fn audit_value_parsing() {
        assert_eq!("(yes)".parse::<AuditValue>().unwrap(), AuditValue::Partial);
        assert_eq!("Yes".parse::<AuditValue>().unwrap(), AuditValue::Yes);
        assert!("maybe".parse::<AuditValue>().is_err());
    }

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = HypothesisStore::open(dir.path()).unwrap();
        let rec = StoredHypothesis {
            hypothesis: open_hypothesis(),
            audit: full_audit(),
        };
        store.save(&rec).unwrap();
        assert_eq!(store.load("h1").unwrap(), rec);
        assert_eq!(store.list().unwrap(), vec!["h1"]);
        assert!(matches!(store.load("zz"), Err(HypothesisError::NotFound(_))));
    }
}
