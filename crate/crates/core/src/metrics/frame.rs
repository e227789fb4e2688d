use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn check_pair(pred: &[usize], gt: &[usize]) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::Data(format!(
            "prediction has {} frames, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    if gt.is_empty() {
        return Err(Error::EmptyInput("no frames to score".into()));
    }
    Ok(())
}

/// Percentage of frames whose predicted label equals the ground truth.
pub fn accuracy(pred: &[usize], gt: &[usize]) -> Result<f64> {
    check_pair(pred, gt)?;
    let correct = pred.iter().zip(gt).filter(|(p, g)| p == g).count();
    Ok(100.0 * correct as f64 / gt.len() as f64)
}

/// Macro-averaged frame-wise precision, recall and Jaccard, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub jaccard: f64,
}

/// Per-class counts averaged over the classes that occur in either
/// sequence. A class never predicted scores precision 0; a class predicted
/// but absent from the ground truth scores recall 0.
pub fn macro_prf_jaccard(pred: &[usize], gt: &[usize]) -> Result<MacroScores> {
    check_pair(pred, gt)?;
    let num = pred.iter().chain(gt).max().map_or(0, |m| m + 1);
    let mut tp = vec![0usize; num];
    let mut fp = vec![0usize; num];
    let mut fn_ = vec![0usize; num];
    for (&p, &g) in pred.iter().zip(gt) {
        if p == g {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[g] += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut p_sum, mut r_sum, mut j_sum, mut n) = (0.0, 0.0, 0.0, 0usize);
    for c in 0..num {
        if tp[c] + fp[c] + fn_[c] == 0 {
            continue;
        }
        p_sum += ratio(tp[c], tp[c] + fp[c]);
        r_sum += ratio(tp[c], tp[c] + fn_[c]);
        j_sum += ratio(tp[c], tp[c] + fp[c] + fn_[c]);
        n += 1;
    }
    let n = n as f64;
    Ok(MacroScores {
        precision: 100.0 * p_sum / n,
        recall: 100.0 * r_sum / n,
        jaccard: 100.0 * j_sum / n,
    })
}
