//! Encoder (input projection, timestamp-mask hook, dilated residual stack) and classifier head.

mod checkpoint;
mod config;
#[allow(clippy::module_inception)]
mod model;
mod network;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointHeader, ParamEntry, CKPT_MAGIC,
    CKPT_VERSION,
};
pub use config::{ClassifierConfig, EncoderConfig};
pub use model::{BoundModel, Model};
pub use network::{classifier_layout, encoder_layout, Classifier, Encoder};
