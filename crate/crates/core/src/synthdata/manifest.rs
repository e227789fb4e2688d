use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{synthesize_features, AnchorSet, FeatureNoise, FeatureSequence};
use super::io::{load_features_any, load_labels, save_features, save_labels};
use super::presets::{autolaparo_preset, ramie_preset, tiny_preset, RamieOptions};
use super::workflow::{generate_video, WorkflowModel};
use crate::error::{Error, Result};
use crate::metrics::PhaseSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split {s:?}, expected train, val or test"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative to the manifest's directory.
    pub features: PathBuf,
    pub labels: PathBuf,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub videos: Vec<ManifestEntry>,
    /// Directory the entry paths resolve against; set on load.
    #[serde(skip)]
    pub root: PathBuf,
}

/// One loaded video.
#[derive(Clone, Debug, PartialEq)]
pub struct Video {
    pub id: String,
    pub features: FeatureSequence,
    pub labels: PhaseSequence,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for v in &self.videos {
            if !seen.insert(v.id.as_str()) {
                return Err(Error::Data(format!("duplicate video id {:?} in manifest", v.id)));
            }
        }
        if self.num_classes == 0 || self.feature_dim == 0 {
            return Err(Error::Data("manifest needs positive num_classes and feature_dim".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str, root: &Path) -> Result<Self> {
        let mut m: Self = serde_json::from_str(text).map_err(|e| Error::Data(format!("manifest: {e}")))?;
        m.root = root.to_path_buf();
        m.validate()?;
        Ok(m)
    }

    /// Parses and validates; every referenced file must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().unwrap_or(Path::new("."));
        let m = Self::from_json(&text, root)?;
        for v in &m.videos {
            for p in [&v.features, &v.labels] {
                let full = m.root.join(p);
                if !full.is_file() {
                    return Err(Error::Data(format!(
                        "video {:?}: {} does not exist",
                        v.id,
                        full.display()
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn entries(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.videos.iter().filter(move |v| v.split == split)
    }

    pub fn load_video(&self, entry: &ManifestEntry) -> Result<Video> {
        let features = load_features_any(&self.root.join(&entry.features))?;
        let labels = load_labels(&self.root.join(&entry.labels))?;
        if features.dim() != self.feature_dim {
            return Err(Error::Dimension(format!(
                "video {:?} has feature dimension {}, manifest says {}",
                entry.id,
                features.dim(),
                self.feature_dim
            )));
        }
        if labels.len() != features.num_frames() {
            return Err(Error::Data(format!(
                "video {:?} has {} feature frames but {} labels",
                entry.id,
                features.num_frames(),
                labels.len()
            )));
        }
        let labels = PhaseSequence::new(labels, self.num_classes)
            .map_err(|e| Error::Data(format!("video {:?}: {e}", entry.id)))?;
        Ok(Video {
            id: entry.id.clone(),
            features,
            labels,
        })
    }

    pub fn load_split(&self, split: Split) -> Result<Vec<Video>> {
        self.entries(split).map(|e| self.load_video(e)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum Preset {
    Ramie {
        #[serde(default)]
        options: RamieOptions,
    },
    Autolaparo {
        #[serde(default = "default_swap")]
        swap_probability: f64,
    },
    Tiny {
        #[serde(default = "default_tiny_classes")]
        num_classes: usize,
    },
}

fn default_tiny_classes() -> usize {
    5
}

fn default_swap() -> f64 {
    0.25
}

impl Preset {
    pub fn workflow(&self) -> WorkflowModel {
        match *self {
            Preset::Ramie { options } => ramie_preset(options),
            Preset::Autolaparo { swap_probability } => autolaparo_preset(swap_probability),
            Preset::Tiny { num_classes } => tiny_preset(num_classes),
        }
    }
}

/// Parameters of a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub preset: Preset,
    pub num_train: usize,
    pub num_val: usize,
    pub num_test: usize,
    pub min_length: usize,
    pub max_length: usize,
    pub feature_dim: usize,
    pub noise: FeatureNoise,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Ramie {
                options: RamieOptions::default(),
            },
            num_train: 14,
            num_val: 4,
            num_test: 9,
            min_length: 500,
            max_length: 1500,
            feature_dim: 64,
            noise: FeatureNoise::default(),
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_length < 1 || self.min_length > self.max_length {
            return Err(Error::Config("need 1 ≤ min_length ≤ max_length".into()));
        }
        if self.feature_dim < 2 {
            return Err(Error::Config("feature_dim must be at least 2".into()));
        }
        if self.num_train + self.num_val + self.num_test == 0 {
            return Err(Error::Config("dataset has no videos".into()));
        }
        self.preset.workflow().validate()
    }

    pub fn video_ids(&self) -> Vec<(String, Split)> {
        let mut out = Vec::new();
        for (split, n) in [(Split::Train, self.num_train), (Split::Val, self.num_val), (Split::Test, self.num_test)] {
            out.extend((0..n).map(|i| (format!("{}_{i:03}", split.name()), split)));
        }
        out
    }
}

/// 64-bit FNV-1a; a stable way to turn a video id into a seed.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed owned by one video, so generation does not depend on order.
pub fn video_seed(seed: u64, id: &str) -> u64 {
    fnv1a(id.as_bytes()) ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Generates every video in memory. Labels, lengths and noise come from the
/// per-video seed; class anchors from the dataset seed alone.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<(DatasetManifest, Vec<Video>)> {
    cfg.validate()?;
    let workflow = cfg.preset.workflow();
    let anchors = AnchorSet::new(workflow.num_classes, cfg.feature_dim, cfg.seed)?;
    let mut videos = Vec::new();
    let mut entries = Vec::new();
    for (id, split) in cfg.video_ids() {
        let mut rng = ChaCha8Rng::seed_from_u64(video_seed(cfg.seed, &id));
        let length = rng.random_range(cfg.min_length..=cfg.max_length);
        let labels = generate_video(&workflow, rng.random(), length)?;
        let features = synthesize_features(&labels, &anchors, &cfg.noise, rng.random())?;
        entries.push(ManifestEntry {
            features: PathBuf::from(format!("features/{id}.phsf")),
            labels: PathBuf::from(format!("labels/{id}.txt")),
            id: id.clone(),
            split,
        });
        videos.push(Video { id, features, labels });
    }
    let manifest = DatasetManifest {
        num_classes: workflow.num_classes,
        feature_dim: cfg.feature_dim,
        videos: entries,
        root: PathBuf::new(),
    };
    Ok((manifest, videos))
}

/// Writes features, labels and `manifest.json` under `dir`; returns the
/// manifest path.
pub fn write_dataset(dir: &Path, manifest: &DatasetManifest, videos: &[Video]) -> Result<PathBuf> {
    for sub in ["features", "labels"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    for (e, v) in manifest.videos.iter().zip(videos) {
        save_features(&v.features, &dir.join(&e.features))?;
        save_labels(v.labels.labels(), &dir.join(&e.labels))?;
    }
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}
