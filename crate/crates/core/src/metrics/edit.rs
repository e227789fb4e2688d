use super::segments::SegmentList;

/// Levenshtein distance with unit insert, delete and substitute costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `100 · (1 - LEV / max(|pred|, |gt|))` over segment label sequences.
pub fn edit_score(pred: &SegmentList, gt: &SegmentList) -> f64 {
    let p = pred.labels();
    let g = gt.labels();
    let norm = p.len().max(g.len());
    if norm == 0 {
        return 100.0;
    }
    let d = levenshtein(&p, &g);
    (100.0 * (1.0 - d as f64 / norm as f64)).max(0.0)
}
