//! Minimal reverse-mode autodiff with the layers, losses and optimizer the
//! matching and delay models need.

mod adam;
mod graph;
pub mod kernels;
mod params;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use graph::{
    cosine_similarity, sigmoid, softmax_in_place, squared_distance, Graph, Var, LOG_CLAMP,
    TRIPLET_MARGIN,
};
pub use params::{glorot_uniform, ParamSet, FORMAT_VERSION, MAGIC};
pub(crate) use params::{read_header, read_planes, write_header, write_planes};
pub use tensor::Tensor;
