use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::PhaseSequence;

/// Run length of one phase: `min + NB(mean - min, dispersion)` frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationLaw {
    pub mean: f64,
    pub dispersion: f64,
    pub min: usize,
}

impl DurationLaw {
    pub fn new(mean: f64, dispersion: f64, min: usize) -> Self {
        Self {
            mean,
            dispersion,
            min,
        }
    }

    /// Negative binomial as a gamma-Poisson mixture, mean scaled by `scale`.
    fn sample<R: Rng>(&self, scale: f64, rng: &mut R) -> usize {
        let excess = self.mean * scale - self.min as f64;
        if excess <= 0.0 {
            return self.min;
        }
        let gamma = Gamma::new(self.dispersion, excess / self.dispersion).expect("validated law");
        let rate: f64 = gamma.sample(rng);
        if rate <= 0.0 {
            return self.min;
        }
        let extra: f64 = Poisson::new(rate).expect("positive rate").sample(rng);
        self.min + extra as usize
    }
}

/// Probability that the relative order of two classes is exchanged in a
/// video.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSwap {
    pub a: usize,
    pub b: usize,
    pub probability: f64,
}

/// Semi-Markov description of a procedure.
///
/// Rows of `transitions` for the terminal class and for interrupt classes
/// are never consulted: the terminal phase runs to the end of the video and
/// an interrupt returns to the phase it interrupted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkflowModel {
    pub num_classes: usize,
    pub transitions: Vec<Vec<f64>>,
    pub durations: Vec<DurationLaw>,
    pub ambiguity_width: usize,
    pub initial: usize,
    pub terminal: Option<usize>,
    pub interrupt_classes: Vec<usize>,
    pub label_swaps: Vec<LabelSwap>,
    /// Expected length at scale 1; duration means are scaled by
    /// `target_length / nominal_length`.
    pub nominal_length: f64,
}

impl WorkflowModel {
    pub fn validate(&self) -> Result<()> {
        let c = self.num_classes;
        let bad = |m: String| Err(Error::Config(m));
        if c < 1 {
            return bad("workflow needs at least one class".into());
        }
        if self.transitions.len() != c || self.durations.len() != c {
            return bad(format!("workflow with {c} classes needs {c} rows and duration laws"));
        }
        for (i, row) in self.transitions.iter().enumerate() {
            if row.len() != c {
                return bad(format!("transition row {i} has {} entries", row.len()));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return bad(format!("transition row {i} has an entry outside [0, 1]"));
            }
            if c > 1 && (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad(format!("transition row {i} does not sum to 1"));
            }
            if row[i] != 0.0 {
                return bad(format!("transition row {i} has a self-transition"));
            }
        }
        for (i, d) in self.durations.iter().enumerate() {
            if d.min < 1 || !(d.mean > 0.0) || !(d.dispersion > 0.0) {
                return bad(format!("duration law of class {i} needs min ≥ 1 and positive mean and dispersion"));
            }
        }
        let in_range = |k: usize| k < c;
        if !in_range(self.initial)
            || self.terminal.is_some_and(|t| !in_range(t))
            || !self.interrupt_classes.iter().all(|&k| in_range(k))
            || !self.label_swaps.iter().all(|s| in_range(s.a) && in_range(s.b))
        {
            return bad("workflow references a class outside [0, C)".into());
        }
        if self.interrupt_classes.contains(&self.initial) {
            return bad("the initial phase cannot be an interrupt".into());
        }
        if self.label_swaps.iter().any(|s| !(0.0..=1.0).contains(&s.probability)) {
            return bad("swap probability outside [0, 1]".into());
        }
        if !(self.nominal_length > 0.0) {
            return bad("nominal length must be positive".into());
        }
        Ok(())
    }

    /// Shortest possible video that reaches the terminal phase (or the
    /// initial phase's minimum when there is none), using minimum durations.
    pub fn min_total_length(&self) -> usize {
        let mins: Vec<usize> = self.durations.iter().map(|d| d.min).collect();
        let Some(term) = self.terminal else {
            return mins[self.initial];
        };
        // Bellman-Ford style relaxation over positive-probability edges
        let c = self.num_classes;
        let mut best = vec![usize::MAX; c];
        best[self.initial] = mins[self.initial];
        for _ in 0..c {
            for i in 0..c {
                if best[i] == usize::MAX || i == term || self.interrupt_classes.contains(&i) {
                    continue;
                }
                for j in 0..c {
                    if self.transitions[i][j] > 0.0 && !self.interrupt_classes.contains(&j) {
                        best[j] = best[j].min(best[i] + mins[j]);
                    }
                }
            }
        }
        if best[term] == usize::MAX {
            mins[self.initial]
        } else {
            best[term]
        }
    }

    fn next_state<R: Rng>(&self, from: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let row = &self.transitions[from];
        let mut acc = 0.0;
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // rounding: the last positive entry
        row.iter().rposition(|&p| p > 0.0).unwrap_or(from)
    }
}

/// Samples one video of exactly `target_length` frames.
///
/// Runs are drawn phase by phase; the terminal phase absorbs the remaining
/// frames, and a final run cut short of its minimum is merged into its
/// predecessor.
pub fn generate_video(model: &WorkflowModel, seed: u64, target_length: usize) -> Result<PhaseSequence> {
    model.validate()?;
    let min_len = model.min_total_length();
    if target_length < min_len {
        return Err(Error::Generation(format!(
            "target length {target_length} is below the workflow minimum of {min_len} frames"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = model.num_classes;
    let mut perm: Vec<usize> = (0..c).collect();
    for s in &model.label_swaps {
        if rng.random_bool(s.probability) {
            perm.swap(s.a, s.b);
        }
    }
    let scale = target_length as f64 / model.nominal_length;

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut total = 0;
    let mut state = model.initial;
    let mut resume: Option<usize> = None;
    while total < target_length {
        let label = perm[state];
        let len = if Some(state) == model.terminal {
            target_length - total
        } else {
            model.durations[label].sample(scale, &mut rng)
        };
        let len = len.min(target_length - total);
        runs.push((label, len));
        total += len;
        state = if let Some(r) = resume.take() {
            r
        } else if c == 1 {
            state
        } else {
            let next = model.next_state(state, &mut rng);
            if model.interrupt_classes.contains(&next) {
                resume = Some(state);
            }
            next
        };
    }
    if runs.len() > 1 {
        let (label, len) = *runs.last().expect("non-empty");
        if len < model.durations[label].min {
            runs.pop();
            runs.last_mut().expect("predecessor").1 += len;
        }
    }
    let mut labels = Vec::with_capacity(target_length);
    for (label, len) in runs {
        labels.extend(std::iter::repeat(label).take(len));
    }
    PhaseSequence::new(labels, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::SegmentList;

    fn chain(c: usize, min: usize) -> WorkflowModel {
        let transitions = (0..c)
            .map(|i| {
                let mut row = vec![0.0; c];
                row[(i + 1) % c] = 1.0;
                row
            })
            .collect();
        WorkflowModel {
            num_classes: c,
            transitions,
            durations: vec![DurationLaw::new(20.0, 2.0, min); c],
            ambiguity_width: 0,
            initial: 0,
            terminal: Some(c - 1),
            interrupt_classes: vec![],
            label_swaps: vec![],
            nominal_length: 20.0 * c as f64,
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let m = chain(4, 3);
        assert_eq!(generate_video(&m, 9, 200).unwrap(), generate_video(&m, 9, 200).unwrap());
        assert_ne!(generate_video(&m, 9, 200).unwrap(), generate_video(&m, 10, 200).unwrap());
    }

    #[test]
    fn exact_length_and_minimum_run() {
        let m = chain(5, 5);
        for seed in 0..200 {
            let v = generate_video(&m, seed, 150).unwrap();
            assert_eq!(v.len(), 150);
            for s in SegmentList::from_labels(v.labels()).unwrap().segments() {
                assert!(s.len() >= 5, "seed {seed}: run of {}", s.len());
            }
        }
    }

    #[test]
    fn too_short_target_is_an_error() {
        let m = chain(4, 10);
        assert_eq!(m.min_total_length(), 40);
        assert!(matches!(generate_video(&m, 0, 39), Err(Error::Generation(_))));
        assert!(generate_video(&m, 0, 40).is_ok());
    }

    #[test]
    fn invalid_rows_rejected() {
        let mut m = chain(3, 1);
        m.transitions[0] = vec![0.0, 0.5, 0.4];
        assert!(m.validate().is_err());
        let mut m = chain(3, 1);
        m.transitions[1] = vec![0.0, 1.0, 0.0];
        assert!(m.validate().is_err());
        let mut m = chain(3, 1);
        m.durations[2].min = 0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn empirical_transitions_match_matrix() {
        let p = vec![
            vec![0.0, 0.5, 0.3, 0.2],
            vec![0.6, 0.0, 0.1, 0.3],
            vec![0.25, 0.25, 0.0, 0.5],
            vec![0.1, 0.7, 0.2, 0.0],
        ];
        let m = WorkflowModel {
            num_classes: 4,
            transitions: p.clone(),
            durations: vec![DurationLaw::new(3.0, 5.0, 1); 4],
            ambiguity_width: 0,
            initial: 0,
            terminal: None,
            interrupt_classes: vec![],
            label_swaps: vec![],
            // unit duration scale at the 300-frame target below
            nominal_length: 300.0,
        };
        let mut counts = vec![vec![0usize; 4]; 4];
        let mut n = 0;
        let mut seed = 0;
        while n < 10_000 {
            let v = generate_video(&m, seed, 300).unwrap();
            let s = SegmentList::from_labels(v.labels()).unwrap();
            // the last run may have absorbed a truncated successor
            let segs = &s.segments()[..s.len() - 1];
            for w in segs.windows(2) {
                counts[w[0].label][w[1].label] += 1;
                n += 1;
            }
            seed += 1;
        }
        for i in 0..4 {
            let row: usize = counts[i].iter().sum();
            for j in 0..4 {
                let f = counts[i][j] as f64 / row as f64;
                assert!((f - p[i][j]).abs() < 0.05, "cell ({i},{j}): {f} vs {}; {counts:?}", p[i][j]);
            }
        }
    }
}
