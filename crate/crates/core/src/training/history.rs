use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of one completed epoch. Validation fields are absent when there
/// is no validation split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
    pub val_edit: Option<f64>,
}

/// Per-epoch records plus wall-clock seconds. Only the records are part of
/// the reproducible history; timings are kept apart so that runs with the
/// same inputs produce identical history files.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub seconds: Vec<f64>,
}

const HEADER: &str = "epoch,train_loss,val_accuracy,val_edit";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: EpochRecord, seconds: f64) {
        debug_assert_eq!(record.epoch, self.records.len() + 1);
        self.records.push(record);
        self.seconds.push(seconds);
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{HEADER}\n");
        for r in &self.records {
            writeln!(s, "{},{},{},{}", r.epoch, r.train_loss, opt(r.val_accuracy), opt(r.val_edit)).unwrap();
        }
        s
    }

    pub fn timing_csv(&self) -> String {
        let mut s = String::from("epoch,seconds\n");
        for (r, t) in self.records.iter().zip(&self.seconds) {
            writeln!(s, "{},{t}", r.epoch).unwrap();
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(Error::Data(format!("history must start with {HEADER:?}")));
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let bad = || Error::Data(format!("history line {}: {line:?}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let num = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad())
                }
            };
            records.push(EpochRecord {
                epoch: f[0].parse().map_err(|_| bad())?,
                train_loss: num(f[1])?.ok_or_else(bad)?,
                val_accuracy: num(f[2])?,
                val_edit: num(f[3])?,
            });
        }
        let seconds = vec![0.0; records.len()];
        Ok(Self { records, seconds })
    }
}
