use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::evaluate::evaluate_model;
use super::history::{EpochRecord, TrainHistory};
use crate::autodiff::{adam_step, AdamState, Graph, Tensor};
use crate::error::{Error, Result};
use crate::loss::total_loss;
use crate::model::{Checkpoint, Model, ModelConfig, OptimizerMeta};
use crate::synthdata::{DatasetManifest, Split, Video};

/// Best and final parameters of a run with its history.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Highest validation accuracy, ties broken by edit score; the final
    /// epoch when there is no validation split.
    pub best: Checkpoint,
    pub best_epoch: usize,
    pub last: Checkpoint,
    /// Full-precision parameters after the last epoch.
    pub model: Model,
    pub history: TrainHistory,
}

// shuffling draws from its own stream so it is independent of the init
const SHUFFLE_STREAM: u64 = 0x5348_5546;

fn check_shapes(model_cfg: &ModelConfig, videos: &[Video]) -> Result<()> {
    for v in videos {
        if v.features.dim() != model_cfg.input_dim {
            return Err(Error::Config(format!(
                "video {:?} has feature dimension {}, model expects {}",
                v.id,
                v.features.dim(),
                model_cfg.input_dim
            )));
        }
        if v.labels.num_classes() > model_cfg.num_classes {
            return Err(Error::Config(format!(
                "video {:?} has {} classes, model predicts {}",
                v.id,
                v.labels.num_classes(),
                model_cfg.num_classes
            )));
        }
    }
    Ok(())
}

/// One optimisation step on a full video; returns the loss before the
/// update.
pub fn train_step(
    model: &mut Model,
    features: &Tensor,
    labels: &[usize],
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<f64> {
    let mut g = Graph::new();
    let p = model.bind(&mut g)?;
    let x = g.constant(features.clone())?;
    let stages = model.forward_graph(&mut g, &p, x)?;
    let loss = total_loss(&mut g, &stages, labels, &cfg.loss())?;
    let value = g.value(loss).data()[0];
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("loss is {value}")));
    }
    let grads = g.backward(loss)?;
    let vars = p.iter();
    let zeros: Vec<Vec<f64>> = model
        .params()
        .iter()
        .iter()
        .zip(&vars)
        .map(|(t, v)| if grads.get(**v).is_some() { Vec::new() } else { vec![0.0; t.numel()] })
        .collect();
    let grad_refs: Vec<&[f64]> = vars
        .iter()
        .zip(&zeros)
        .map(|(v, z)| grads.get(**v).unwrap_or(z))
        .collect();
    let mut slices: Vec<&mut [f64]> = model.params_mut().iter_mut().into_iter().map(|t| t.data_mut()).collect();
    adam_step(&mut slices, &grad_refs, state, &cfg.adam())?;
    Ok(value)
}

/// What the epoch hook asks the trainer to do next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Trains on in-memory videos. `on_epoch` sees every record and the current
/// full-precision model; an error from it aborts training.
pub fn train_videos(
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    train: &[Video],
    val: &[Video],
    on_epoch: &mut dyn FnMut(&EpochRecord, &Model) -> Result<Control>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model_cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Data("no training videos".into()));
    }
    check_shapes(model_cfg, train)?;
    check_shapes(model_cfg, val)?;

    let mut model = Model::new(model_cfg.clone(), cfg.seed)?;
    let mut state = AdamState::new(model.params().iter().iter().map(|t| t.numel()));
    let inputs: Vec<Tensor> = train.iter().map(|v| v.features.to_tensor()).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let optimizer = OptimizerMeta {
        adam: cfg.adam(),
        ..OptimizerMeta::default()
    };
    let snapshot = |m: &Model, epoch| Checkpoint::from_model(m, optimizer.clone(), cfg.loss(), epoch, cfg.seed);

    let mut history = TrainHistory::default();
    let mut best: Option<(f64, f64, usize, Checkpoint)> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let loss = train_step(&mut model, &inputs[i], train[i].labels.labels(), &mut state, cfg).map_err(|e| {
                match e {
                    Error::NonFinite(m) => Error::NonFinite(format!("epoch {epoch}, video {:?}: {m}", train[i].id)),
                    other => other,
                }
            })?;
            total += loss;
        }
        let mut record = EpochRecord {
            epoch,
            train_loss: total / train.len() as f64,
            val_accuracy: None,
            val_edit: None,
        };
        if !val.is_empty() {
            // scored exactly as the saved f32 checkpoint will be
            let rounded = model.rounded_to_f32();
            let (report, _) = evaluate_model(&rounded, val, None)?;
            let (acc, edit) = (report.aggregate.mean.accuracy, report.aggregate.mean.edit);
            record.val_accuracy = Some(acc);
            record.val_edit = Some(edit);
            let better = best.as_ref().is_none_or(|&(a, e, _, _)| acc > a || (acc == a && edit > e));
            if better {
                best = Some((acc, edit, epoch, snapshot(&rounded, epoch)));
            }
        }
        history.push(record.clone(), start.elapsed().as_secs_f64());
        if on_epoch(&record, &model)? == Control::Stop {
            break;
        }
        if let (Some(patience), Some((_, _, best_epoch, _))) = (cfg.patience, &best) {
            if epoch - best_epoch >= patience {
                break;
            }
        }
    }
    let last_epoch = history.len();
    let last = snapshot(&model, last_epoch);
    let (best, best_epoch) = match best {
        Some((_, _, e, c)) => (c, e),
        None => (last.clone(), last_epoch),
    };
    Ok(TrainOutcome {
        best,
        best_epoch,
        last,
        model,
        history,
    })
}

/// Trains on the manifest's train split, validating on its val split.
pub fn train(cfg: &TrainConfig, manifest: &DatasetManifest, model_cfg: &ModelConfig) -> Result<TrainOutcome> {
    if model_cfg.num_classes != manifest.num_classes || model_cfg.input_dim != manifest.feature_dim {
        return Err(Error::Config(format!(
            "model is {} classes × {} features, dataset is {} × {}",
            model_cfg.num_classes, model_cfg.input_dim, manifest.num_classes, manifest.feature_dim
        )));
    }
    let train = manifest.load_split(Split::Train)?;
    let val = manifest.load_split(Split::Val)?;
    train_videos(cfg, model_cfg, &train, &val, &mut |_, _| Ok(Control::Continue))
}
