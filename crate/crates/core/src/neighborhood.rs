//! Same-label nearest / farthest neighbor queries by exhaustive scan.

use std::fmt;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NeighborError {
    #[error("anchor {0} is not in the point set")]
    UnknownAnchor(u64),
    #[error("comparison id {0} is not in the point set")]
    UnknownComparison(u64),
    #[error("no point other than anchor {anchor} carries label {label:?}")]
    NoNeighbor { anchor: u64, label: String },
    #[error("{points} points but {ids} ids and {labels} labels")]
    ShapeMismatch { points: usize, ids: usize, labels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    /// Topic-model (or raw vector) coordinates.
    TopicSpace,
    /// The 2-D layout.
    LayoutSpace,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::TopicSpace => "topic-space",
            Space::LayoutSpace => "layout-space",
        })
    }
}

impl std::str::FromStr for Space {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "topic" | "topic-space" => Ok(Space::TopicSpace),
            "layout" | "layout-space" => Ok(Space::LayoutSpace),
            _ => Err(format!("unknown space {s:?} (topic-space | layout-space)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: u64,
    pub distance: f64,
}

/// Labeled points: row `i` of `points` has id `ids[i]` and label `labels[i]`.
#[derive(Debug, Clone, Copy)]
pub struct PointSet<'a> {
    pub points: ArrayView2<'a, f64>,
    pub ids: &'a [u64],
    pub labels: &'a [String],
}

impl<'a> PointSet<'a> {
    pub fn new(points: ArrayView2<'a, f64>, ids: &'a [u64], labels: &'a [String]) -> Result<Self, NeighborError> {
        if points.nrows() != ids.len() || ids.len() != labels.len() {
            return Err(NeighborError::ShapeMismatch {
                points: points.nrows(),
                ids: ids.len(),
                labels: labels.len(),
            });
        }
        Ok(PointSet { points, ids, labels })
    }

    fn row_of(&self, id: u64) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }
}

pub fn euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distances from the anchor to every other point labeled `label`, sorted by
/// distance then id.
pub fn same_label_distances(set: &PointSet, anchor: u64, label: &str) -> Result<Vec<Neighbor>, NeighborError> {
    let a = set.row_of(anchor).ok_or(NeighborError::UnknownAnchor(anchor))?;
    let mut out: Vec<Neighbor> = (0..set.ids.len())
        .filter(|&i| set.labels[i] == label && set.ids[i] != anchor)
        .map(|i| Neighbor {
            id: set.ids[i],
            distance: euclidean(set.points.row(a), set.points.row(i)),
        })
        .collect();
    out.sort_by(|x, y| x.distance.total_cmp(&y.distance).then(x.id.cmp(&y.id)));
    Ok(out)
}

fn extreme(set: &PointSet, anchor: u64, label: &str, farthest: bool) -> Result<Neighbor, NeighborError> {
    let all = same_label_distances(set, anchor, label)?;
    let pick = if farthest {
        // largest distance, smallest id among ties
        all.iter().copied().reduce(|best, c| if c.distance > best.distance { c } else { best })
    } else {
        all.first().copied()
    };
    pick.ok_or_else(|| NeighborError::NoNeighbor {
        anchor,
        label: label.to_string(),
    })
}

/// Closest point with `label`, excluding the anchor. Ties go to the smaller id.
pub fn nearest_in_label(set: &PointSet, anchor: u64, label: &str) -> Result<Neighbor, NeighborError> {
    extreme(set, anchor, label, false)
}

/// Most distant point with `label`, excluding the anchor. Ties go to the smaller id.
pub fn farthest_in_label(set: &PointSet, anchor: u64, label: &str) -> Result<Neighbor, NeighborError> {
    extreme(set, anchor, label, true)
}

/// `distance / nearest`, with `0 / 0 = 1` and `None` for a positive distance over zero.
fn ratio(distance: f64, nearest: f64) -> Option<f64> {
    if distance == 0.0 {
        Some(1.0)
    } else if nearest == 0.0 {
        None
    } else {
        Some(distance / nearest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub id: u64,
    pub distance: f64,
    /// `distance / nearest.distance`; `None` when unbounded.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborReport {
    pub anchor: u64,
    pub label: String,
    pub space: Space,
    pub metric: String,
    pub nearest: Neighbor,
    pub farthest: Neighbor,
    /// `farthest / nearest`; `None` when the nearest neighbor coincides with the
    /// anchor but the farthest does not.
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<Neighbor>>,
}

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    /// Defaults to the anchor's own label.
    pub label: Option<String>,
    pub comparison: Option<u64>,
    pub include_distances: bool,
}

pub fn neighbor_report(
    set: &PointSet,
    space: Space,
    anchor: u64,
    opts: &ReportOptions,
) -> Result<NeighborReport, NeighborError> {
    let a = set.row_of(anchor).ok_or(NeighborError::UnknownAnchor(anchor))?;
    let label = opts.label.clone().unwrap_or_else(|| set.labels[a].clone());
    let all = same_label_distances(set, anchor, &label)?;
    let nearest = *all.first().ok_or_else(|| NeighborError::NoNeighbor {
        anchor,
        label: label.clone(),
    })?;
    let farthest = farthest_in_label(set, anchor, &label)?;
    let comparison = match opts.comparison {
        None => None,
        Some(c) => {
            let row = set.row_of(c).ok_or(NeighborError::UnknownComparison(c))?;
            let distance = euclidean(set.points.row(a), set.points.row(row));
            Some(Comparison {
                id: c,
                distance,
                ratio: ratio(distance, nearest.distance),
            })
        }
    };
    Ok(NeighborReport {
        anchor,
        label,
        space,
        metric: "euclidean".into(),
        nearest,
        farthest,
        ratio: ratio(farthest.distance, nearest.distance),
        comparison,
        distances: opts.include_distances.then_some(all),
    })
}

impl NeighborReport {
    pub fn to_table(&self) -> String {
        let fmt_ratio = |r: Option<f64>| r.map_or("unbounded".to_string(), |v| format!("{v:.3}"));
        let mut s = format!(
            "anchor    {}\nlabel     {}\nspace     {}\nmetric    {}\nnearest   {}  d={:.6}\nfarthest  {}  d={:.6}\nratio     {}\n",
            self.anchor,
            self.label,
            self.space,
            self.metric,
            self.nearest.id,
            self.nearest.distance,
            self.farthest.id,
            self.farthest.distance,
            fmt_ratio(self.ratio)
        );
        if let Some(c) = &self.comparison {
            s.push_str(&format!(
                "compare   {}  d={:.6}  ratio={}\n",
                c.id,
                c.distance,
                fmt_ratio(c.ratio)
            ));
        }
        s
    }
}
