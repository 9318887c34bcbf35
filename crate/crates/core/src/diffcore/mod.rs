//! Reverse-mode automatic differentiation over dense `f64` matrices, with the
//! building blocks every network here is made of: affine layers, MLPs, an
//! LSTM cell, Gumbel-Softmax sampling and Adam.

mod adam;
mod gumbel;
mod lstm;
mod nn;
mod params;
mod tape;

pub use adam::AdamState;
pub use gumbel::{argmax, argmax_one_hot, gumbel_softmax, sample_gumbel};
pub use lstm::LstmCell;
pub use nn::{mlp_forward, Activation, Linear, Mlp};
pub use params::{clip_global_norm, global_norm, Bound, ParamId, ParamStore};
pub use tape::{sigmoid, CustomBackward, Tape, Tensor, Unary, Var};
