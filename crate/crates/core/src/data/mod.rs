//! Recordings, windowed segment sets, synthetic data, fold splitting, and the SEGD container.

mod folds;
mod montage;
mod recording;
mod segd;
mod segments;
mod synthetic;

pub use folds::{contiguous_kfold, stratified_kfold, FoldSplit};
pub use montage::{default_channel_names, MONTAGE_62};
pub use recording::{
    segment_recording, window_starts, LabelStream, Recording, DEFAULT_OVERLAP_SECONDS, DEFAULT_SAMPLE_RATE_HZ,
    DEFAULT_WINDOW_SECONDS,
};
pub use segd::{decode_segments, encode_segments, load_segments, save_segments, SEGD_MAGIC, SEGD_VERSION};
pub use segments::{SegmentMeta, SegmentSet, N_CLASSES};
pub use synthetic::{make_synthetic_dataset, shuffle_labels, SyntheticSpec};
