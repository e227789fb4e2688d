use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::edit::edit_score;
use super::frame::{accuracy, check_pair, macro_prf_jaccard};
use super::overlap::f1_at_tau;
use super::segments::SegmentList;
use crate::error::{Error, Result};

/// The eight scalar metrics, all in percent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub jaccard: f64,
    pub edit: f64,
    pub f1_25: f64,
    pub f1_50: f64,
    pub f1_75: f64,
}

impl MetricValues {
    pub const NAMES: [&'static str; 8] = [
        "accuracy", "precision", "recall", "jaccard", "edit", "f1_25", "f1_50", "f1_75",
    ];

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.accuracy,
            self.precision,
            self.recall,
            self.jaccard,
            self.edit,
            self.f1_25,
            self.f1_50,
            self.f1_75,
        ]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        Self {
            accuracy: v[0],
            precision: v[1],
            recall: v[2],
            jaccard: v[3],
            edit: v[4],
            f1_25: v[5],
            f1_50: v[6],
            f1_75: v[7],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoMetrics {
    pub video_id: String,
    #[serde(flatten)]
    pub values: MetricValues,
    pub num_pred_segments: usize,
    pub num_gt_segments: usize,
}

pub fn video_metrics(video_id: &str, pred: &[usize], gt: &[usize]) -> Result<VideoMetrics> {
    check_pair(pred, gt)?;
    let ps = SegmentList::from_labels(pred)?;
    let gs = SegmentList::from_labels(gt)?;
    let m = macro_prf_jaccard(pred, gt)?;
    Ok(VideoMetrics {
        video_id: video_id.to_string(),
        values: MetricValues {
            accuracy: accuracy(pred, gt)?,
            precision: m.precision,
            recall: m.recall,
            jaccard: m.jaccard,
            edit: edit_score(&ps, &gs),
            f1_25: f1_at_tau(&ps, &gs, 25.0),
            f1_50: f1_at_tau(&ps, &gs, 50.0),
            f1_75: f1_at_tau(&ps, &gs, 75.0),
        },
        num_pred_segments: ps.len(),
        num_gt_segments: gs.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub num_videos: usize,
    pub mean: MetricValues,
    pub std: MetricValues,
}

/// Per-video metrics with their unweighted mean and sample standard
/// deviation across videos.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub std_convention: String,
    pub videos: Vec<VideoMetrics>,
    pub aggregate: Aggregate,
}

/// Mean and sample (`n - 1`) standard deviation; the deviation of a single
/// value is 0.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no values to aggregate".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

pub fn aggregate(videos: Vec<VideoMetrics>) -> Result<MetricReport> {
    if videos.is_empty() {
        return Err(Error::EmptyInput("no videos to aggregate".into()));
    }
    let mut mean = [0.0; 8];
    let mut std = [0.0; 8];
    for k in 0..8 {
        let col: Vec<f64> = videos.iter().map(|v| v.values.to_array()[k]).collect();
        (mean[k], std[k]) = mean_std(&col)?;
    }
    Ok(MetricReport {
        std_convention: "sample".into(),
        aggregate: Aggregate {
            num_videos: videos.len(),
            mean: MetricValues::from_array(mean),
            std: MetricValues::from_array(std),
        },
        videos,
    })
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Data(format!("metric report: {e}")))
    }

    /// One row per video then an `aggregate` row. Video rows leave the
    /// `_std` columns empty; the aggregate row leaves the segment counts
    /// empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("video_id");
        for n in MetricValues::NAMES {
            write!(out, ",{n}").unwrap();
        }
        out.push_str(",num_pred_segments,num_gt_segments");
        for n in MetricValues::NAMES {
            write!(out, ",{n}_std").unwrap();
        }
        out.push('\n');
        for v in &self.videos {
            out.push_str(&v.video_id);
            for x in v.values.to_array() {
                write!(out, ",{x}").unwrap();
            }
            write!(out, ",{},{}", v.num_pred_segments, v.num_gt_segments).unwrap();
            out.push_str(&",".repeat(8));
            out.push('\n');
        }
        out.push_str("aggregate");
        for x in self.aggregate.mean.to_array() {
            write!(out, ",{x}").unwrap();
        }
        out.push_str(",,");
        for x in self.aggregate.std.to_array() {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
        out
    }
}
