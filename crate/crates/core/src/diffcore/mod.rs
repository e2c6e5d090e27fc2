//! Dense tensors and a small feedforward network with reverse-mode gradients.

mod io;
mod model;
mod tensor;

pub use io::{
    decode_model, decode_tensor, encode_model, encode_tensor, load_model, load_tensor, save_model,
    save_tensor, FORMAT_VERSION, MODEL_MAGIC, TENSOR_MAGIC,
};
pub use model::{
    finite_diff_grad, sigmoid, Activation, DenseLayer, DiffModel, GradientSet, ScoreModel,
};
pub use tensor::Tensor;
