//! Dense `f64` tensors, a reverse-mode tape, parameter sets and Adam.

mod adam;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use params::{ParamSet, PARAMS_FORMAT};
pub use tape::{gelu_scalar, Gradients, Tape, Var};
pub use tensor::Tensor;
