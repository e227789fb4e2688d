//! Synthetic surgical-workflow datasets and the feature/label file formats.

mod features;
mod io;
mod manifest;
mod presets;
mod workflow;

pub use features::{blend_weights, synthesize_features, AnchorSet, FeatureNoise, FeatureSequence, Source};
pub use io::{
    features_from_bytes, features_from_csv, features_to_bytes, labels_from_str, labels_to_string, load_features,
    load_features_any, load_features_csv, load_labels, save_features, save_labels, FEATURE_MAGIC, FEATURE_VERSION,
};
pub use io::parse_csv_row;
pub use manifest::{
    generate_dataset, video_seed, write_dataset, DatasetConfig, DatasetManifest, ManifestEntry, Preset, Split, Video,
};
pub use presets::{autolaparo_preset, ramie_preset, tiny_preset, RamieOptions, AUTOLAPARO_CLASSES, RAMIE_ANATOMICAL, RAMIE_CLASSES};
pub use workflow::{generate_video, DurationLaw, LabelSwap, WorkflowModel};
