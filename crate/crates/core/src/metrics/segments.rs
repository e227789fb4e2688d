use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame rate as a ratio (`num / den` frames per second).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fps {
    pub num: u32,
    pub den: u32,
}

impl Default for Fps {
    fn default() -> Self {
        Self { num: 1, den: 1 }
    }
}

/// Frame-level phase labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseSequence {
    labels: Vec<usize>,
    num_classes: usize,
    fps: Fps,
}

impl PhaseSequence {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("phase sequence has no frames".into()));
        }
        if let Some((t, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::Data(format!(
                "label {y} at frame {t} is outside [0, {num_classes})"
            )));
        }
        Ok(Self {
            labels,
            num_classes,
            fps: Fps::default(),
        })
    }

    pub fn with_fps(mut self, fps: Fps) -> Self {
        self.fps = fps;
        self
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn fps(&self) -> Fps {
        self.fps
    }

    pub fn segments(&self) -> SegmentList {
        segments_from_frames(self)
    }
}

/// A maximal run of one label, `end` exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub label: usize,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Run-length encoding of a label sequence. Runs tile `[0, T)` and
/// neighbouring runs always carry different labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentList {
    segments: Vec<Segment>,
}

impl SegmentList {
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let Some(&first) = labels.first() else {
            return Err(Error::EmptyInput("cannot segment an empty sequence".into()));
        };
        let mut segments = Vec::new();
        let mut cur = Segment {
            label: first,
            start: 0,
            end: 1,
        };
        for (t, &y) in labels.iter().enumerate().skip(1) {
            if y == cur.label {
                cur.end = t + 1;
            } else {
                segments.push(cur);
                cur = Segment {
                    label: y,
                    start: t,
                    end: t + 1,
                };
            }
        }
        segments.push(cur);
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.label).collect()
    }

    pub fn num_frames(&self) -> usize {
        self.segments.last().map_or(0, |s| s.end)
    }

    pub fn to_frames(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_frames());
        for s in &self.segments {
            out.extend(std::iter::repeat_n(s.label, s.len()));
        }
        out
    }
}

pub fn segments_from_frames(seq: &PhaseSequence) -> SegmentList {
    SegmentList::from_labels(seq.labels()).expect("phase sequences are non-empty")
}
