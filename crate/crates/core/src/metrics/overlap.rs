use super::segments::{Segment, SegmentList};

fn overlap(a: &Segment, b: &Segment) -> (usize, usize) {
    let inter = a.end.min(b.end).saturating_sub(a.start.max(b.start));
    let union = a.len() + b.len() - inter;
    (inter, union)
}

/// True iff `inter / union ≥ tau / 100`, compared without forming the ratio.
fn passes(inter: usize, union: usize, tau: f64) -> bool {
    inter as f64 * 100.0 >= tau * union as f64
}

/// Counts from greedy matching: `(tp, fp, fn)`.
pub fn match_counts(pred: &SegmentList, gt: &SegmentList, tau: f64) -> (usize, usize, usize) {
    let gts = gt.segments();
    let mut used = vec![false; gts.len()];
    let (mut tp, mut fp) = (0, 0);
    for p in pred.segments() {
        // best unmatched same-label gt segment by IoU; first wins on ties
        let mut best: Option<(usize, usize, usize)> = None;
        for (j, g) in gts.iter().enumerate() {
            if used[j] || g.label != p.label {
                continue;
            }
            let (inter, union) = overlap(p, g);
            let better = match best {
                None => true,
                Some((_, bi, bu)) => inter * bu > bi * union,
            };
            if better {
                best = Some((j, inter, union));
            }
        }
        match best {
            Some((j, inter, union)) if passes(inter, union, tau) => {
                used[j] = true;
                tp += 1;
            }
            _ => fp += 1,
        }
    }
    (tp, fp, gts.len() - tp)
}

pub(crate) fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        100.0 * 2.0 * p * r / (p + r)
    }
}

/// Segmental F1 at IoU threshold `tau` percent.
pub fn f1_at_tau(pred: &SegmentList, gt: &SegmentList, tau: f64) -> f64 {
    let (tp, fp, fn_) = match_counts(pred, gt, tau);
    f1_from_counts(tp, fp, fn_)
}
