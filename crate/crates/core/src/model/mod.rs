//! A small convolutional network stack with exact backpropagation and Adam.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod network;
pub mod ops;
pub mod params;
pub mod real;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use gradcheck::{
    check_model_gradients, check_stack_gradients, relative_error, GradCheckConfig, GradCheckReport,
};
pub use init::init_weights;
pub use layers::{
    depthwise_separable_weight_count, full_conv_weight_count, receptive_field, LayerSpec, Shape3,
    TensorShape,
};
pub use network::{
    build_model, build_model_for, forward_batch, loss_and_gradients, predict_probabilities,
    softmax_cross_entropy, LayerStack, ModelName, ModelSpec, Trace,
};
pub use params::{Gradients, ParamTensor, Parameters};
pub use real::Real;
