//! Brute-force reference implementations of the evaluation metrics.
//!
//! Written independently of the library: frame sets are bitmasks, the
//! edit distance is a memoised top-down recursion, and the confusion-matrix
//! scores are read off a dense `C × C` table.

#![allow(dead_code)]

use phaseseg::metrics;

pub const TAUS: [f64; 3] = [25.0, 50.0, 75.0];

#[derive(Clone, Copy, Debug)]
pub struct Run {
    pub label: usize,
    pub mask: u64,
}

/// Maximal runs; the sequence must have at most 64 frames.
pub fn runs(labels: &[usize]) -> Vec<Run> {
    assert!(!labels.is_empty() && labels.len() <= 64);
    let mut out: Vec<Run> = Vec::new();
    for (t, &y) in labels.iter().enumerate() {
        match out.last_mut() {
            Some(r) if r.label == y => r.mask |= 1 << t,
            _ => out.push(Run { label: y, mask: 1 << t }),
        }
    }
    out
}

pub fn accuracy(pred: &[usize], gt: &[usize]) -> f64 {
    let hits = (0..gt.len()).filter(|&t| pred[t] == gt[t]).count();
    hits as f64 * 100.0 / gt.len() as f64
}

/// Macro (precision, recall, jaccard) from the dense confusion matrix,
/// rows = ground truth, columns = prediction.
pub fn confusion_scores(pred: &[usize], gt: &[usize]) -> (f64, f64, f64) {
    let c = pred.iter().chain(gt).copied().max().unwrap() + 1;
    let mut m = vec![vec![0usize; c]; c];
    for t in 0..gt.len() {
        m[gt[t]][pred[t]] += 1;
    }
    let (mut ps, mut rs, mut js, mut n) = (vec![], vec![], vec![], 0);
    for k in 0..c {
        let row: usize = m[k].iter().sum();
        let col: usize = (0..c).map(|i| m[i][k]).sum();
        if row == 0 && col == 0 {
            continue;
        }
        let diag = m[k][k] as f64;
        ps.push(if col == 0 { 0.0 } else { diag / col as f64 });
        rs.push(if row == 0 { 0.0 } else { diag / row as f64 });
        js.push(diag / (row + col - m[k][k]) as f64);
        n += 1;
    }
    let avg = |v: &[f64]| 100.0 * v.iter().sum::<f64>() / n as f64;
    (avg(&ps), avg(&rs), avg(&js))
}

fn lev_rec(a: &[usize], b: &[usize], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
    if let Some(v) = memo[i][j] {
        return v;
    }
    let v = if i == a.len() {
        b.len() - j
    } else if j == b.len() {
        a.len() - i
    } else {
        let keep = lev_rec(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = lev_rec(a, b, i + 1, j, memo) + 1;
        let ins = lev_rec(a, b, i, j + 1, memo) + 1;
        keep.min(del).min(ins)
    };
    memo[i][j] = Some(v);
    v
}

pub fn levenshtein(a: &[usize], b: &[usize]) -> usize {
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    lev_rec(a, b, 0, 0, &mut memo)
}

pub fn edit(pred: &[usize], gt: &[usize]) -> (usize, f64) {
    let p: Vec<usize> = runs(pred).iter().map(|r| r.label).collect();
    let g: Vec<usize> = runs(gt).iter().map(|r| r.label).collect();
    let d = levenshtein(&p, &g);
    let score = 100.0 - 100.0 * d as f64 / p.len().max(g.len()) as f64;
    (d, score.max(0.0))
}

fn iou(a: u64, b: u64) -> f64 {
    (a & b).count_ones() as f64 / (a | b).count_ones() as f64
}

/// Greedy matching: `(tp, fp, fn)`.
pub fn greedy_counts(pred: &[usize], gt: &[usize], tau: f64) -> (usize, usize, usize) {
    let pr = runs(pred);
    let gr = runs(gt);
    let mut taken = vec![false; gr.len()];
    let mut tp = 0;
    for p in &pr {
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gr.iter().enumerate() {
            if taken[j] || g.label != p.label {
                continue;
            }
            let v = iou(p.mask, g.mask);
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        if let Some((j, v)) = best {
            if v >= tau / 100.0 {
                taken[j] = true;
                tp += 1;
            }
        }
    }
    (tp, pr.len() - tp, gr.len() - tp)
}

/// Largest number of disjoint same-label pairs with IoU ≥ τ, by exhaustive
/// search over assignments.
pub fn optimal_tp(pred: &[usize], gt: &[usize], tau: f64) -> usize {
    let pr = runs(pred);
    let gr = runs(gt);
    fn go(i: usize, used: u64, pr: &[Run], gr: &[Run], tau: f64) -> usize {
        if i == pr.len() {
            return 0;
        }
        let mut best = go(i + 1, used, pr, gr, tau);
        for (j, g) in gr.iter().enumerate() {
            if used >> j & 1 == 0 && g.label == pr[i].label && iou(pr[i].mask, g.mask) >= tau / 100.0 {
                best = best.max(1 + go(i + 1, used | 1 << j, pr, gr, tau));
            }
        }
        best
    }
    go(0, 0, &pr, &gr, tau)
}

pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let prec = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let rec = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    if prec == 0.0 && rec == 0.0 {
        0.0
    } else {
        200.0 * prec * rec / (prec + rec)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

/// Compares every library metric on one pair against the oracles.
pub fn check_pair(pred: &[usize], gt: &[usize]) -> Result<(), String> {
    let lib = metrics::video_metrics("x", pred, gt).map_err(|e| e.to_string())?;
    let v = lib.values;
    let fail = |what: &str, a: String, b: String| {
        Err(format!("{what}: library {a}, oracle {b} (pred {pred:?}, gt {gt:?})"))
    };
    let acc = accuracy(pred, gt);
    if !close(v.accuracy, acc) {
        return fail("accuracy", v.accuracy.to_string(), acc.to_string());
    }
    let (p, r, j) = confusion_scores(pred, gt);
    if !close(v.precision, p) || !close(v.recall, r) || !close(v.jaccard, j) {
        return fail(
            "macro scores",
            format!("{} {} {}", v.precision, v.recall, v.jaccard),
            format!("{p} {r} {j}"),
        );
    }
    let pl: Vec<usize> = runs(pred).iter().map(|r| r.label).collect();
    let gl: Vec<usize> = runs(gt).iter().map(|r| r.label).collect();
    if lib.num_pred_segments != pl.len() || lib.num_gt_segments != gl.len() {
        return fail("segment counts", lib.num_pred_segments.to_string(), pl.len().to_string());
    }
    let (d, e) = edit(pred, gt);
    let lib_d = metrics::levenshtein(&pl, &gl);
    if lib_d != d {
        return fail("levenshtein", lib_d.to_string(), d.to_string());
    }
    if !close(v.edit, e) {
        return fail("edit", v.edit.to_string(), e.to_string());
    }
    let ps = metrics::SegmentList::from_labels(pred).unwrap();
    let gs = metrics::SegmentList::from_labels(gt).unwrap();
    for (tau, lib_f1) in TAUS.iter().zip([v.f1_25, v.f1_50, v.f1_75]) {
        let counts = greedy_counts(pred, gt, *tau);
        let lib_counts = metrics::match_counts(&ps, &gs, *tau);
        if counts != lib_counts {
            return fail(&format!("match counts @{tau}"), format!("{lib_counts:?}"), format!("{counts:?}"));
        }
        let f = f1(counts.0, counts.1, counts.2);
        if !close(lib_f1, f) {
            return fail(&format!("f1@{tau}"), lib_f1.to_string(), f.to_string());
        }
    }
    Ok(())
}

/// Label sequences of length `t` over `c` classes in which classes first
/// appear in increasing order. Every sequence is a relabeling of exactly one
/// of these.
pub fn canonical_sequences(t: usize, c: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, t: usize, c: usize, next: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for y in 0..(next + 1).min(c) {
            cur.push(y);
            go(cur, t, c, next.max(y + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), t, c, 0, &mut out);
    out
}

/// All `c^t` label sequences of length `t`.
pub fn all_sequences(t: usize, c: usize) -> Vec<Vec<usize>> {
    let n = c.pow(t as u32);
    (0..n)
        .map(|mut code| {
            (0..t)
                .map(|_| {
                    let y = code % c;
                    code /= c;
                    y
                })
                .collect()
        })
        .collect()
}

/// Result of an exhaustive sweep.
#[derive(Debug, Default)]
pub struct Sweep {
    pub pairs: usize,
    pub failures: Vec<String>,
    /// `(tau, pred, gt, greedy_tp, optimal_tp)` where greedy falls short.
    pub greedy_deviations: Vec<(f64, Vec<usize>, Vec<usize>, usize, usize)>,
}

/// Every pair with `T ≤ max_t` and `C ≤ 3`. Metrics are invariant under a
/// joint relabeling, so the ground truth can be restricted to canonical
/// sequences while the prediction ranges over everything.
pub fn exhaustive_sweep(max_t: usize, c: usize) -> Sweep {
    let mut s = Sweep::default();
    for t in 1..=max_t {
        let preds = all_sequences(t, c);
        for gt in canonical_sequences(t, c) {
            for pred in &preds {
                s.pairs += 1;
                if let Err(e) = check_pair(pred, &gt) {
                    if s.failures.len() < 20 {
                        s.failures.push(e);
                    }
                }
                for tau in TAUS {
                    let g = greedy_counts(pred, &gt, tau).0;
                    let o = optimal_tp(pred, &gt, tau);
                    if g != o {
                        s.greedy_deviations.push((tau, pred.clone(), gt.clone(), g, o));
                    }
                }
            }
        }
    }
    s
}
