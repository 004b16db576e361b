//! Small convolutional trajectory regressor with reverse-mode gradients.

mod adam;
mod checkpoint;
pub mod layers;
mod model;
mod state;
mod tensor;

pub use adam::Adam;
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointHeader,
    CHECKPOINT_MAGIC,
};
pub use layers::{Activation, BackwardMode};
pub use model::{
    heatmap_from_gradient, rgb_to_input, ArchConfig, ForwardTape, Gradients, RegressorModel,
    SaliencyTarget, INPUT_CHANNELS, OUTPUT_DIM,
};
pub use state::{raw_state_features, StateNorm, STATE_DIM};
pub use tensor::Tensor;
