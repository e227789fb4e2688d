use serde::{Deserialize, Serialize};

use super::workflow::{DurationLaw, LabelSwap, WorkflowModel};

/// Anatomical phases of the esophagectomy-like preset; indices 11 and 12
/// are the non-standard-action and camera-out-of-body classes.
pub const RAMIE_ANATOMICAL: usize = 11;
pub const RAMIE_CLASSES: usize = 13;
pub const AUTOLAPARO_CLASSES: usize = 7;

/// Probability mass that leaves the nominal next phase of the
/// esophagectomy-like preset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamieOptions {
    /// Jump over the next phase.
    pub skip: f64,
    /// Go back to the previous phase.
    pub ret: f64,
    /// Enter one of the two non-anatomical classes.
    pub interrupt: f64,
}

impl Default for RamieOptions {
    fn default() -> Self {
        Self {
            skip: 0.05,
            ret: 0.1,
            interrupt: 0.25,
        }
    }
}

// Heterogeneous means (frames at 1 fps) so classes are imbalanced.
const RAMIE_MEANS: [f64; RAMIE_CLASSES] = [
    60.0, 110.0, 45.0, 150.0, 90.0, 70.0, 170.0, 55.0, 100.0, 80.0, 65.0, 25.0, 12.0,
];

pub fn ramie_preset(opts: RamieOptions) -> WorkflowModel {
    let c = RAMIE_CLASSES;
    let a = RAMIE_ANATOMICAL;
    let last = a - 1;
    let mut transitions = vec![vec![0.0; c]; c];
    for (i, row) in transitions.iter_mut().enumerate() {
        if i >= last {
            // never consulted: terminal and interrupt rows
            for (j, p) in row.iter_mut().enumerate().take(a) {
                if j != i {
                    *p = 1.0;
                }
            }
        } else {
            row[i + 1] = 1.0;
            let mut take = |j: usize, mass: f64| {
                row[j] += mass;
                row[i + 1] -= mass;
            };
            if i + 2 <= last {
                take(i + 2, opts.skip);
            }
            if i > 0 {
                take(i - 1, opts.ret);
            }
            take(a, opts.interrupt * 0.6);
            take(a + 1, opts.interrupt * 0.4);
        }
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= sum);
    }
    let durations = RAMIE_MEANS
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            if i < a {
                DurationLaw::new(m, 4.0, 8)
            } else {
                DurationLaw::new(m, 2.0, 3)
            }
        })
        .collect();
    WorkflowModel {
        num_classes: c,
        transitions,
        durations,
        ambiguity_width: 4,
        initial: 0,
        terminal: Some(last),
        interrupt_classes: vec![a, a + 1],
        label_swaps: vec![],
        nominal_length: nominal(&RAMIE_MEANS[..a], opts.interrupt, &RAMIE_MEANS[a..]),
    }
}

fn nominal(path: &[f64], interrupt: f64, interrupts: &[f64]) -> f64 {
    let per_interrupt = interrupts.iter().sum::<f64>() / interrupts.len() as f64;
    path.iter().sum::<f64>() + interrupt * (path.len() - 1) as f64 * per_interrupt
}

const AUTOLAPARO_MEANS: [f64; AUTOLAPARO_CLASSES] = [90.0, 260.0, 140.0, 420.0, 120.0, 200.0, 110.0];

/// Strictly sequential seven-phase workflow in which phases 2 and 3
/// (indices 1 and 2) trade places with probability `swap`.
pub fn autolaparo_preset(swap: f64) -> WorkflowModel {
    let c = AUTOLAPARO_CLASSES;
    let transitions = (0..c)
        .map(|i| {
            let mut row = vec![0.0; c];
            row[if i + 1 < c { i + 1 } else { 0 }] = 1.0;
            row
        })
        .collect();
    WorkflowModel {
        num_classes: c,
        transitions,
        durations: AUTOLAPARO_MEANS.iter().map(|&m| DurationLaw::new(m, 3.0, 10)).collect(),
        ambiguity_width: 6,
        initial: 0,
        terminal: Some(c - 1),
        interrupt_classes: vec![],
        label_swaps: vec![LabelSwap {
            a: 1,
            b: 2,
            probability: swap,
        }],
        nominal_length: AUTOLAPARO_MEANS.iter().sum(),
    }
}

/// A short strictly sequential workflow with equal phase lengths, meant for
/// overfitting checks rather than realism.
pub fn tiny_preset(num_classes: usize) -> WorkflowModel {
    let c = num_classes;
    WorkflowModel {
        num_classes: c,
        transitions: (0..c)
            .map(|i| {
                let mut row = vec![0.0; c];
                row[(i + 1) % c] = 1.0;
                row
            })
            .collect(),
        durations: vec![DurationLaw::new(40.0, 20.0, 10); c],
        ambiguity_width: 0,
        initial: 0,
        terminal: Some(c - 1),
        interrupt_classes: vec![],
        label_swaps: vec![],
        nominal_length: 40.0 * c as f64,
    }
}
