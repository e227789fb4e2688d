use crate::error::{Error, Result};
use crate::metrics::{aggregate, video_metrics, MetricReport};
use crate::model::{Checkpoint, Model};
use crate::synthdata::{DatasetManifest, Split, Video};

/// Per-video predictions of stage `stage` (the final stage when `None`),
/// scored against the ground truth.
pub fn evaluate_model(
    model: &Model,
    videos: &[Video],
    stage: Option<usize>,
) -> Result<(MetricReport, Vec<(String, Vec<usize>)>)> {
    Ok(evaluate_stages(model, videos, &[stage])?.pop().expect("one stage"))
}

/// Reports for several stages from a single forward pass per video.
pub fn evaluate_stages(
    model: &Model,
    videos: &[Video],
    stages: &[Option<usize>],
) -> Result<Vec<(MetricReport, Vec<(String, Vec<usize>)>)>> {
    let num_stages = model.config().num_stages();
    let idx: Vec<usize> = stages.iter().map(|s| s.unwrap_or(num_stages - 1)).collect();
    if let Some(&bad) = idx.iter().find(|&&s| s >= num_stages) {
        return Err(Error::Parameter(format!("stage {bad} out of range, model has {num_stages}")));
    }
    let mut rows: Vec<Vec<_>> = vec![Vec::new(); idx.len()];
    let mut preds: Vec<Vec<(String, Vec<usize>)>> = vec![Vec::new(); idx.len()];
    for v in videos {
        let logits = model.forward(&v.features)?;
        for (k, &s) in idx.iter().enumerate() {
            let p = logits.labels(s);
            rows[k].push(video_metrics(&v.id, &p, v.labels.labels())?);
            preds[k].push((v.id.clone(), p));
        }
    }
    rows.into_iter()
        .zip(preds)
        .map(|(r, p)| Ok((aggregate(r)?, p)))
        .collect()
}

/// Scores a checkpoint on one split of a dataset.
pub fn evaluate(
    checkpoint: &Checkpoint,
    manifest: &DatasetManifest,
    split: Split,
) -> Result<(MetricReport, Vec<(String, Vec<usize>)>)> {
    let cfg = &checkpoint.meta.model;
    if cfg.input_dim != manifest.feature_dim {
        return Err(Error::Config(format!(
            "checkpoint expects {}-dimensional features, dataset has {}",
            cfg.input_dim, manifest.feature_dim
        )));
    }
    if cfg.num_classes < manifest.num_classes {
        return Err(Error::Config(format!(
            "checkpoint predicts {} classes, dataset has {}",
            cfg.num_classes, manifest.num_classes
        )));
    }
    let model = checkpoint.model()?;
    let videos = manifest.load_split(split)?;
    if videos.is_empty() {
        return Err(Error::EmptyInput(format!("split {} has no videos", split.name())));
    }
    evaluate_model(&model, &videos, None)
}
