//! Frame-wise and segmental evaluation of phase predictions.

mod edit;
mod frame;
mod overlap;
mod report;
mod segments;

pub use edit::{edit_score, levenshtein};
pub use frame::{accuracy, macro_prf_jaccard, MacroScores};
pub use overlap::{f1_at_tau, match_counts};
pub use report::{aggregate, mean_std, video_metrics, Aggregate, MetricReport, MetricValues, VideoMetrics};
pub use segments::{segments_from_frames, Fps, PhaseSequence, Segment, SegmentList};
