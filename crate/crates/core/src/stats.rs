//! Descriptive corpus statistics: author concentration, post and line shares,
//! quote ratios.
//!
//! Everything is computed from an [`AuthorTally`], which merges across corpus
//! partitions, so per-part results can be combined map-reduce style.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::newsgroups::{author_of, Corpus, CorpusVersion, RawDocument};

/// Which lines count towards line totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineRule {
    /// Body lines only.
    #[default]
    Body,
    /// Every line of the file: headers, the blank separator and the body.
    WithHeaders,
}

impl LineRule {
    pub const ALL: [LineRule; 2] = [LineRule::Body, LineRule::WithHeaders];

    pub fn as_str(self) -> &'static str {
        match self {
            LineRule::Body => "body",
            LineRule::WithHeaders => "with-headers",
        }
    }

    pub fn lines_of(self, doc: &RawDocument) -> u64 {
        let body = doc.body_lines.len() as u64;
        match self {
            LineRule::Body => body,
            LineRule::WithHeaders => body + doc.header_line_count() as u64 + u64::from(doc.has_separator),
        }
    }
}

impl std::str::FromStr for LineRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "body" => Ok(LineRule::Body),
            "with-headers" | "all" => Ok(LineRule::WithHeaders),
            other => Err(format!("unknown line rule {other:?} (expected body|with-headers)")),
        }
    }
}

impl fmt::Display for LineRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An exact ratio. Rounded only for display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub num: u64,
    pub den: u64,
}

impl Share {
    pub fn new(num: u64, den: u64) -> Self {
        Share { num, den }
    }

    /// The ratio as a float; 0 when the denominator is 0.
    pub fn value(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }

    /// Percentage rounded to two decimals of the fraction, e.g. `72%`.
    pub fn percent(self) -> String {
        format!("{:.0}%", (self.value() * 100.0).round())
    }
}

impl PartialOrd for Share {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        let l = self.num as u128 * other.den as u128;
        let r = other.num as u128 * self.den as u128;
        Some(l.cmp(&r))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorEntry {
    pub posts: u64,
    pub lines: u64,
    pub quote_lines: u64,
}

/// Per-author post and line counts under one line rule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorTally {
    pub line_rule: LineRule,
    pub authors: BTreeMap<String, AuthorEntry>,
}

impl AuthorTally {
    pub fn new(line_rule: LineRule) -> Self {
        AuthorTally {
            line_rule,
            authors: BTreeMap::new(),
        }
    }

    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a RawDocument>, line_rule: LineRule) -> Self {
        let mut tally = AuthorTally::new(line_rule);
        for d in docs {
            tally.add(d);
        }
        tally
    }

    pub fn add(&mut self, doc: &RawDocument) {
        let e = self.authors.entry(author_of(doc).to_string()).or_default();
        e.posts += 1;
        e.lines += self.line_rule.lines_of(doc);
        e.quote_lines += doc.quote_line_count() as u64;
    }

    /// Combines two tallies. Both must use the same line rule.
    pub fn merge(mut self, other: AuthorTally) -> AuthorTally {
        assert_eq!(self.line_rule, other.line_rule, "merging tallies with different line rules");
        for (k, v) in other.authors {
            let e = self.authors.entry(k).or_default();
            e.posts += v.posts;
            e.lines += v.lines;
            e.quote_lines += v.quote_lines;
        }
        self
    }

    pub fn author_count(&self) -> u64 {
        self.authors.len() as u64
    }

    pub fn total_posts(&self) -> u64 {
        self.authors.values().map(|e| e.posts).sum()
    }

    pub fn total_lines(&self) -> u64 {
        self.authors.values().map(|e| e.lines).sum()
    }

    pub fn total_quote_lines(&self) -> u64 {
        self.authors.values().map(|e| e.quote_lines).sum()
    }

    pub fn summary(&self, threshold: u64) -> ContributionSummary {
        let (mut authors, mut posts, mut lines) = (0u64, 0u64, 0u64);
        for e in self.authors.values().filter(|e| e.posts >= threshold) {
            authors += 1;
            posts += e.posts;
            lines += e.lines;
        }
        ContributionSummary {
            threshold,
            author_count: authors,
            author_share: Share::new(authors, self.author_count()),
            post_count: posts,
            post_share: Share::new(posts, self.total_posts()),
            line_count: lines,
            line_share: Share::new(lines, self.total_lines()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributionSummary {
    pub threshold: u64,
    pub author_count: u64,
    pub author_share: Share,
    pub post_count: u64,
    pub post_share: Share,
    pub line_count: u64,
    pub line_share: Share,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoteStats {
    pub total_lines: u64,
    pub quote_lines: u64,
    pub ratio: Share,
}

/// Documents grouped by author key.
pub fn author_index(corpus: &Corpus) -> BTreeMap<String, Vec<u64>> {
    let mut index: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for d in &corpus.documents {
        index.entry(author_of(d).to_string()).or_default().push(d.id);
    }
    index
}

/// One summary per threshold. Thresholds must be at least 1.
pub fn contribution_summary(corpus: &Corpus, thresholds: &[u64], line_rule: LineRule) -> Vec<ContributionSummary> {
    let tally = AuthorTally::from_documents(&corpus.documents, line_rule);
    thresholds.iter().map(|&t| tally.summary(t.max(1))).collect()
}

pub fn quote_stats(corpus: &Corpus, line_rule: LineRule) -> QuoteStats {
    let tally = AuthorTally::from_documents(&corpus.documents, line_rule);
    quote_stats_from(&tally)
}

fn quote_stats_from(tally: &AuthorTally) -> QuoteStats {
    let total = tally.total_lines();
    let quotes = tally.total_quote_lines();
    QuoteStats {
        total_lines: total,
        quote_lines: quotes,
        ratio: Share::new(quotes, total),
    }
}

pub const DEFAULT_THRESHOLDS: [u64; 3] = [2, 3, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub version: CorpusVersion,
    pub line_rule: LineRule,
    pub document_count: u64,
    pub unique_authors: u64,
    pub total_lines: u64,
    pub contributions: Vec<ContributionSummary>,
    pub quotes: QuoteStats,
}

impl StatsReport {
    pub fn compute(corpus: &Corpus, line_rule: LineRule, thresholds: &[u64]) -> Self {
        let tally = AuthorTally::from_documents(&corpus.documents, line_rule);
        StatsReport {
            version: corpus.version,
            line_rule,
            document_count: corpus.len() as u64,
            unique_authors: tally.author_count(),
            total_lines: tally.total_lines(),
            contributions: thresholds.iter().map(|&t| tally.summary(t.max(1))).collect(),
            quotes: quote_stats_from(&tally),
        }
    }

    /// Plain-text rendering: documents, authors, contributions, lines, quotes.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "version            {}", self.version);
        let _ = writeln!(s, "line rule          {}", self.line_rule);
        let _ = writeln!(s, "documents          {}", self.document_count);
        let _ = writeln!(s, "unique authors     {}", self.unique_authors);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:>9} {:>8} {:>7} {:>8} {:>7} {:>9} {:>7}",
            "min posts", "authors", "share", "posts", "share", "lines", "share"
        );
        for c in &self.contributions {
            let _ = writeln!(
                s,
                "{:>9} {:>8} {:>7} {:>8} {:>7} {:>9} {:>7}",
                c.threshold,
                c.author_count,
                c.author_share.percent(),
                c.post_count,
                c.post_share.percent(),
                c.line_count,
                c.line_share.percent()
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "total lines        {}", self.total_lines);
        let _ = writeln!(
            s,
            "quote lines        {} ({:.2}%)",
            self.quotes.quote_lines,
            self.quotes.ratio.value() * 100.0
        );
        s
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::newsgroups::parse_document;
    use proptest::prelude::*;

    fn arb_docs() -> impl Strategy<Value = Vec<RawDocument>> {
        proptest::collection::vec((0u8..6, 0usize..5, 0usize..3), 0..40).prop_map(|specs| {
            specs
                .into_iter()
                .enumerate()
                .map(|(i, (author, plain, quoted))| {
                    let mut body: Vec<String> = (0..plain).map(|j| format!("line {j}")).collect();
                    body.extend((0..quoted).map(|j| format!("> q {j}")));
                    let text = format!("From: author{author}\n\n{}\n", body.join("\n"));
                    parse_document(text.as_bytes(), i as u64, "sci.space")
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn merge_of_parts_equals_whole(docs in arb_docs(), cut in 0usize..40) {
            let cut = cut.min(docs.len());
            let whole = AuthorTally::from_documents(&docs, LineRule::Body);
            let left = AuthorTally::from_documents(&docs[..cut], LineRule::Body);
            let right = AuthorTally::from_documents(&docs[cut..], LineRule::Body);
            prop_assert_eq!(left.merge(right), whole.clone());
            prop_assert_eq!(whole.total_posts(), docs.len() as u64);
        }

        #[test]
        fn thresholds_are_monotone(docs in arb_docs()) {
            let tally = AuthorTally::from_documents(&docs, LineRule::WithHeaders);
            let sums: Vec<_> = (1..8).map(|t| tally.summary(t)).collect();
            for w in sums.windows(2) {
                prop_assert!(w[1].author_count <= w[0].author_count);
                prop_assert!(w[1].post_count <= w[0].post_count);
                prop_assert!(w[1].line_count <= w[0].line_count);
                prop_assert!(w[1].post_share <= w[0].post_share);
                prop_assert!(w[1].line_share <= w[0].line_share);
                prop_assert!(w[1].author_share <= w[0].author_share);
            }
            for s in &sums {
                prop_assert!(s.post_share.value() <= 1.0 && s.line_share.value() <= 1.0);
            }
        }
    }
}
