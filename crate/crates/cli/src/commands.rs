use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, ErrorKind, Read, Write};
use std::path::Path;

use phaseseg::metrics::{aggregate, video_metrics, SegmentList};
use phaseseg::model::{Checkpoint, ModelConfig, OptimizerMeta, StreamingSession};
use phaseseg::synthdata::{
    generate_dataset, labels_to_string, load_labels, parse_csv_row, write_dataset, DatasetConfig, DatasetManifest,
    Split, FEATURE_MAGIC, FEATURE_VERSION,
};
use phaseseg::training::{evaluate, evaluate_model, train_videos, Control, TrainConfig};
use phaseseg::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::overrides::resolve;
use crate::staging::{write, Staging};
use crate::svg::ribbon;
use crate::{PresetName, StreamFormat};

/// Splits `n` videos 14:4:9 with at least one training video.
pub fn split_counts(n: usize) -> (usize, usize, usize) {
    let train = ((n * 14) as f64 / 27.0).round() as usize;
    let val = ((n * 4) as f64 / 27.0).round() as usize;
    let train = train.max(n.min(1));
    let val = val.min(n - train);
    (train, val, n - train - val)
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializes") + "\n"
}

pub fn gen(
    preset: Option<PresetName>,
    videos: Option<usize>,
    seed: Option<u64>,
    out: &Path,
    config: Option<&Path>,
    sets: &[String],
) -> Result<()> {
    let cfg: DatasetConfig = resolve(&DatasetConfig::default(), config, sets, |v| {
        if let Some(p) = preset {
            let name = match p {
                PresetName::Ramie => "ramie",
                PresetName::Autolaparo => "autolaparo",
                PresetName::Tiny => "tiny",
            };
            if v["preset"]["name"] != name {
                v["preset"] = json!({ "name": name });
            }
        }
        if let Some(n) = videos {
            let (a, b, c) = split_counts(n);
            v["num_train"] = json!(a);
            v["num_val"] = json!(b);
            v["num_test"] = json!(c);
        }
        if let Some(s) = seed {
            v["seed"] = json!(s);
        }
    })?;
    let (manifest, data) = generate_dataset(&cfg)?;
    let staging = Staging::new(out)?;
    write_dataset(staging.path(), &manifest, &data)?;
    write(&staging.path().join("config.json"), pretty(&cfg))?;
    let out = staging.commit()?;
    println!(
        "train {}, val {}, test {} videos, {} classes, {}-dim features -> {}",
        cfg.num_train,
        cfg.num_val,
        cfg.num_test,
        manifest.num_classes,
        manifest.feature_dim,
        out.display()
    );
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub model: ModelConfig,
}

pub fn train(
    manifest_path: &Path,
    out: &Path,
    seed: Option<u64>,
    epochs: Option<usize>,
    config: Option<&Path>,
    sets: &[String],
    quiet: bool,
) -> Result<()> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let defaults = RunConfig {
        train: TrainConfig::default(),
        model: ModelConfig::new(manifest.num_classes, manifest.feature_dim),
    };
    let run: RunConfig = resolve(&defaults, config, sets, |v| {
        if let Some(s) = seed {
            v["train"]["seed"] = json!(s);
        }
        if let Some(e) = epochs {
            v["train"]["epochs"] = json!(e);
        }
    })?;
    if run.model.input_dim != manifest.feature_dim || run.model.num_classes < manifest.num_classes {
        return Err(Error::Config(format!(
            "model is {} classes × {} features, dataset is {} × {}",
            run.model.num_classes, run.model.input_dim, manifest.num_classes, manifest.feature_dim
        )));
    }
    let train = manifest.load_split(Split::Train)?;
    let val = manifest.load_split(Split::Val)?;
    let staging = Staging::new(out)?;
    let every = run.train.checkpoint_every;
    let ckpt_dir = staging.path().join("checkpoints");
    let outcome = train_videos(&run.train, &run.model, &train, &val, &mut |r, m| {
        if !quiet {
            let val = match (r.val_accuracy, r.val_edit) {
                (Some(a), Some(e)) => format!(", val accuracy {a:.2}, val edit {e:.2}"),
                _ => String::new(),
            };
            eprintln!("epoch {}: train loss {:.5}{val}", r.epoch, r.train_loss);
        }
        if every > 0 && r.epoch % every == 0 {
            fs::create_dir_all(&ckpt_dir).map_err(|e| Error::io(&ckpt_dir, e))?;
            let optimizer = OptimizerMeta {
                adam: run.train.adam(),
                ..OptimizerMeta::default()
            };
            let c = Checkpoint::from_model(m, optimizer, run.train.loss(), r.epoch, run.train.seed);
            c.save(&ckpt_dir.join(format!("epoch_{:04}.pseg", r.epoch)))?;
        }
        Ok(Control::Continue)
    })?;
    let dir = staging.path();
    outcome.best.save(&dir.join("checkpoint.pseg"))?;
    outcome.last.save(&dir.join("last.pseg"))?;
    write(&dir.join("history.csv"), outcome.history.to_csv())?;
    write(&dir.join("timing.csv"), outcome.history.timing_csv())?;
    write(&dir.join("config.json"), pretty(&run))?;
    let (split, videos) = if val.is_empty() { ("train", &train) } else { ("val", &val) };
    let (report, _) = evaluate_model(&outcome.best.model()?, videos, None)?;
    write(&dir.join("report.json"), report.to_json() + "\n")?;
    write(&dir.join("report.csv"), report.to_csv())?;
    let out = staging.commit()?;
    let m = &report.aggregate.mean;
    println!(
        "best epoch {} of {}: {split} accuracy {:.2}, edit {:.2} -> {}",
        outcome.best_epoch,
        outcome.history.len(),
        m.accuracy,
        m.edit,
        out.display()
    );
    Ok(())
}

pub fn eval(checkpoint: &Path, manifest: &Path, split: &str, out: &Path) -> Result<()> {
    let split = Split::parse(split)?;
    let ckpt = Checkpoint::load(checkpoint)?;
    let manifest = DatasetManifest::load(manifest)?;
    let (report, preds) = evaluate(&ckpt, &manifest, split)?;
    let staging = Staging::new(out)?;
    let dir = staging.path();
    write(&dir.join("report.json"), report.to_json() + "\n")?;
    write(&dir.join("report.csv"), report.to_csv())?;
    for (id, labels) in &preds {
        write(&dir.join("predictions").join(format!("{id}.txt")), labels_to_string(labels))?;
    }
    let out = staging.commit()?;
    let (m, s) = (&report.aggregate.mean, &report.aggregate.std);
    println!(
        "{} videos: accuracy {:.2} ± {:.2}, edit {:.2} ± {:.2}, F1@50 {:.2} -> {}",
        report.aggregate.num_videos,
        m.accuracy,
        s.accuracy,
        m.edit,
        s.edit,
        m.f1_50,
        out.display()
    );
    Ok(())
}

fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(n) => got += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

fn emit(session: &mut StreamingSession, frame: usize, row: &[f32], out: &mut dyn Write) -> Result<()> {
    let label = session.push_f32(row).map_err(|e| match e {
        Error::Dimension(m) | Error::NonFinite(m) => Error::Data(m),
        other => other,
    })?;
    writeln!(out, "{label}")
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(format!("<label output, frame {frame}>"), e))
}

pub fn infer(checkpoint: &Path, input: Option<&Path>, format: Option<StreamFormat>, out: Option<&Path>) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let model = ckpt.model()?;
    let dim = model.config().input_dim;
    let input = input.filter(|p| p.as_os_str() != "-");
    let format = format.unwrap_or(match input.and_then(|p| p.extension()) {
        Some(e) if e.eq_ignore_ascii_case("phsf") => StreamFormat::Phsf,
        _ => StreamFormat::Csv,
    });
    let mut reader: Box<dyn BufRead> = match input {
        Some(p) => Box::new(BufReader::new(File::open(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufReader::new(io::stdin())),
    };
    let mut writer: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).map_err(|e| Error::io(p, e))?),
        None => Box::new(io::stdout().lock()),
    };
    let source = input.map_or("<stdin>".to_string(), |p| p.display().to_string());
    let io_err = |e| Error::io(&source, e);
    let mut session = StreamingSession::new(&model);
    match format {
        StreamFormat::Csv => {
            let mut frame = 0;
            let mut line = String::new();
            loop {
                line.clear();
                if reader.read_line(&mut line).map_err(io_err)? == 0 {
                    break;
                }
                if line.trim().is_empty() {
                    continue;
                }
                let row = parse_csv_row(line.trim()).map_err(|m| Error::Data(format!("frame {frame}: {m}")))?;
                if row.len() != dim {
                    return Err(Error::Data(format!(
                        "frame {frame} has {} values, model expects {dim}",
                        row.len()
                    )));
                }
                emit(&mut session, frame, &row, &mut *writer)?;
                frame += 1;
            }
        }
        StreamFormat::Phsf => {
            let mut header = [0u8; 16];
            let got = read_full(&mut reader, &mut header).map_err(io_err)?;
            if got == 0 {
                return Ok(());
            }
            if got < 16 {
                return Err(Error::format(got as u64, "stream header truncated"));
            }
            if &header[..4] != FEATURE_MAGIC {
                return Err(Error::format(0, "not a feature stream (bad magic)"));
            }
            let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes")) as usize;
            if word(4) != FEATURE_VERSION as usize {
                return Err(Error::format(4, format!("unsupported feature version {}", word(4))));
            }
            let (frames, d) = (word(8), word(12));
            if d != dim {
                return Err(Error::Dimension(format!("stream has {d}-dimensional frames, model expects {dim}")));
            }
            let mut buf = vec![0u8; 4 * d];
            for frame in 0..frames {
                let got = read_full(&mut reader, &mut buf).map_err(io_err)?;
                if got < buf.len() {
                    return Err(Error::format(
                        (16 + frame * buf.len() + got) as u64,
                        format!("frame {frame} truncated"),
                    ));
                }
                let row: Vec<f32> = buf.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
                emit(&mut session, frame, &row, &mut *writer)?;
            }
        }
    }
    Ok(())
}

pub fn report(pred_dir: &Path, gt_dir: &Path, out: &Path) -> Result<()> {
    let mut names: Vec<String> = fs::read_dir(pred_dir)
        .map_err(|e| Error::io(pred_dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".txt"))
        .collect();
    names.sort();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut ribbons = Vec::new();
    for name in &names {
        let id = name.trim_end_matches(".txt").to_string();
        let gt_path = gt_dir.join(name);
        if !gt_path.is_file() {
            skipped.push(format!("{id}: no ground truth at {}", gt_path.display()));
            continue;
        }
        let pred = load_labels(&pred_dir.join(name))?;
        let gt = load_labels(&gt_path)?;
        if pred.len() != gt.len() || gt.is_empty() {
            skipped.push(format!("{id}: {} predicted frames vs {} ground-truth frames", pred.len(), gt.len()));
            continue;
        }
        let m = video_metrics(&id, &pred, &gt)?;
        let svg = ribbon(&id, &SegmentList::from_labels(&gt)?, &SegmentList::from_labels(&pred)?);
        ribbons.push((id, svg));
        rows.push(m);
    }
    for s in &skipped {
        eprintln!("skipped {s}");
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("no scorable prediction files in {}", pred_dir.display())));
    }
    let report = aggregate(rows)?;
    let staging = Staging::new(out)?;
    let dir = staging.path();
    write(&dir.join("report.json"), report.to_json() + "\n")?;
    write(&dir.join("report.csv"), report.to_csv())?;
    let mut counts = String::from("video_id,num_pred_segments,num_gt_segments\n");
    for v in &report.videos {
        counts.push_str(&format!("{},{},{}\n", v.video_id, v.num_pred_segments, v.num_gt_segments));
    }
    write(&dir.join("segments.csv"), counts)?;
    for (id, svg) in &ribbons {
        write(&dir.join("ribbons").join(format!("{id}.svg")), svg)?;
    }
    let out = staging.commit()?;
    let m = &report.aggregate.mean;
    println!(
        "{} videos: accuracy {:.2}, edit {:.2}, F1@25/50/75 {:.2}/{:.2}/{:.2} -> {}",
        report.aggregate.num_videos,
        m.accuracy,
        m.edit,
        m.f1_25,
        m.f1_50,
        m.f1_75,
        out.display()
    );
    if !skipped.is_empty() {
        return Err(Error::Data(format!("{} video(s) skipped", skipped.len())));
    }
    Ok(())
}
