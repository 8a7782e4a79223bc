//! 2-D layouts with their provenance, plus CSV / JSON / SVG export.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topics::{LdaConfig, LsiConfig};
use crate::tsne::{TsneConfig, TsneRun};
use crate::vectorize::VectorizerConfig;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("layout csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad layout csv: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which representation fed the dimensionality reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "model")]
pub enum TopicModelSpec {
    Lsi(LsiConfig),
    Lda(LdaConfig),
    /// The vectors were used as-is (e.g. flattened pixels).
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsample {
    pub size: usize,
    pub seed: u64,
}

/// Everything needed to recompute a layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset: String,
    pub dataset_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectorizer: Option<VectorizerConfig>,
    pub topic_model: TopicModelSpec,
    pub tsne: TsneConfig,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<Subsample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingLayout {
    pub ids: Vec<u64>,
    pub labels: Vec<String>,
    /// `N x 2`.
    pub points: Array2<f64>,
    pub final_kl: f64,
    pub provenance: Provenance,
}

/// JSON sidecar written next to a layout CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutSidecar {
    pub provenance: Provenance,
    pub final_kl: f64,
    pub kl_after_exaggeration: Option<f64>,
    pub points: usize,
}

impl EmbeddingLayout {
    pub fn from_run(ids: Vec<u64>, labels: Vec<String>, run: &TsneRun, provenance: Provenance) -> Self {
        assert_eq!(ids.len(), run.points.nrows());
        assert_eq!(labels.len(), ids.len());
        EmbeddingLayout {
            ids,
            labels,
            points: run.points.clone(),
            final_kl: run.final_kl,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position_of(&self, id: u64) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|v| v.is_finite())
    }

    /// CSV with header `id,x,y,label`, coordinates in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LayoutError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "x", "y", "label"])?;
        for (i, (&id, label)) in self.ids.iter().zip(&self.labels).enumerate() {
            w.write_record([
                id.to_string(),
                format!("{:?}", self.points[[i, 0]]),
                format!("{:?}", self.points[[i, 1]]),
                label.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn sidecar(&self, kl_after_exaggeration: Option<f64>) -> LayoutSidecar {
        LayoutSidecar {
            provenance: self.provenance.clone(),
            final_kl: self.final_kl,
            kl_after_exaggeration,
            points: self.len(),
        }
    }

    /// Reads a layout CSV and its sidecar back.
    pub fn read<R1: Read, R2: Read>(csv_in: R1, sidecar: R2) -> Result<Self, LayoutError> {
        let side: LayoutSidecar = serde_json::from_reader(sidecar)?;
        let (ids, labels, points) = read_points_csv(csv_in)?;
        Ok(EmbeddingLayout {
            ids,
            labels,
            points,
            final_kl: side.final_kl,
            provenance: side.provenance,
        })
    }

    pub fn to_svg(&self, highlights: &[u64]) -> String {
        scatter_svg(&self.points, &self.labels, &self.ids, highlights)
    }
}

/// `(ids, labels, N x 2 points)`.
pub type PointRows = (Vec<u64>, Vec<String>, Array2<f64>);

/// Parses `id,x,y,label` rows.
pub fn read_points_csv<R: Read>(input: R) -> Result<PointRows, LayoutError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "x", "y", "label"] {
        return Err(LayoutError::Format(format!("expected header id,x,y,label, got {headers:?}")));
    }
    let (mut ids, mut labels, mut coords) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let parse_f = |s: &str| s.parse::<f64>().map_err(|_| LayoutError::Format(format!("bad coordinate {s:?}")));
        ids.push(
            rec[0]
                .parse()
                .map_err(|_| LayoutError::Format(format!("bad id {:?}", &rec[0])))?,
        );
        coords.push(parse_f(&rec[1])?);
        coords.push(parse_f(&rec[2])?);
        labels.push(rec[3].to_string());
    }
    let n = ids.len();
    let points = Array2::from_shape_vec((n, 2), coords).map_err(|e| LayoutError::Format(e.to_string()))?;
    Ok((ids, labels, points))
}

/// Topic-space (or any dense) features as `id,f0,f1,...` rows.
pub fn write_features_csv<W: Write>(ids: &[u64], features: &Array2<f64>, out: W) -> Result<(), LayoutError> {
    if ids.len() != features.nrows() {
        return Err(LayoutError::Format(format!("{} ids for {} rows", ids.len(), features.nrows())));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend((0..features.ncols()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for (id, row) in ids.iter().zip(features.outer_iter()) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv<R: Read>(input: R) -> Result<(Vec<u64>, Array2<f64>), LayoutError> {
    let mut r = csv::Reader::from_reader(input);
    let width = r.headers()?.len();
    if width < 2 || &r.headers()?[0] != "id" {
        return Err(LayoutError::Format("expected header id,f0,...".into()));
    }
    let (mut ids, mut values) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        ids.push(rec[0].parse().map_err(|_| LayoutError::Format(format!("bad id {:?}", &rec[0])))?);
        for v in rec.iter().skip(1) {
            values.push(v.parse::<f64>().map_err(|_| LayoutError::Format(format!("bad value {v:?}")))?);
        }
    }
    let n = ids.len();
    let features = Array2::from_shape_vec((n, width - 1), values).map_err(|e| LayoutError::Format(e.to_string()))?;
    Ok((ids, features))
}

const PALETTE: [&str; 20] = [
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Scatter plot colored by label; `highlights` are drawn enlarged and annotated with their id.
pub fn scatter_svg(points: &Array2<f64>, labels: &[String], ids: &[u64], highlights: &[u64]) -> String {
    const SIZE: f64 = 800.0;
    const PAD: f64 = 40.0;
    let n = points.nrows();
    let (mut minx, mut maxx, mut miny, mut maxy) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for i in 0..n {
        minx = minx.min(points[[i, 0]]);
        maxx = maxx.max(points[[i, 0]]);
        miny = miny.min(points[[i, 1]]);
        maxy = maxy.max(points[[i, 1]]);
    }
    let span = (maxx - minx).max(maxy - miny).max(1e-12);
    let sx = |x: f64| PAD + (x - minx) / span * (SIZE - 2.0 * PAD);
    let sy = |y: f64| SIZE - PAD - (y - miny) / span * (SIZE - 2.0 * PAD);

    let mut classes: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        let next = classes.len();
        classes.entry(l.as_str()).or_insert(next);
    }
    // stable colors: rank of the label in sorted order
    let color_of: BTreeMap<&str, &str> = classes
        .keys()
        .enumerate()
        .map(|(rank, &l)| (l, PALETTE[rank % PALETTE.len()]))
        .collect();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for i in 0..n {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="{}" fill-opacity="0.7"/>"#,
            sx(points[[i, 0]]),
            sy(points[[i, 1]]),
            color_of[labels[i].as_str()]
        );
    }
    for &h in highlights {
        if let Some(i) = ids.iter().position(|&x| x == h) {
            let (cx, cy) = (sx(points[[i, 0]]), sy(points[[i, 1]]));
            let _ = writeln!(
                s,
                r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="6" fill="none" stroke="black" stroke-width="2"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
                cx + 8.0,
                cy - 8.0,
                h
            );
        }
    }
    for (rank, (label, color)) in color_of.iter().enumerate() {
        let y = 14.0 + rank as f64 * 13.0;
        let _ = writeln!(s, r#"<rect x="4" y="{:.0}" width="9" height="9" fill="{color}"/>"#, y - 8.0);
        let _ = writeln!(
            s,
            r#"<text x="16" y="{y:.0}" font-family="sans-serif" font-size="10">{}</text>"#,
            xml_escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}
