//! Multi-task bi-LSTM slot filling with optional open-vocabulary character
//! embeddings, plus a synthetic multi-app corpus and the experiment drivers
//! built on top.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod params;
pub mod recurrent;
pub mod scalar;
pub mod tensor;
pub mod vocab;
pub mod corpus;
pub mod gradcheck;
pub mod model;
pub mod training;
pub mod evaluation;
pub mod experiments;

pub use params::{ParamId, ParamStore};
pub use scalar::Scalar;
pub use tensor::{GradientMap, Graph, NodeId, Tensor, TensorError};

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type ParamStore64 = ParamStore<f64>;
pub type ParamStore32 = ParamStore<f32>;
pub type GradientMap64 = GradientMap<f64>;
pub type GradientMap32 = GradientMap<f32>;
pub type Graph64<'p> = Graph<'p, f64>;
pub type Graph32<'p> = Graph<'p, f32>;
pub type Model64 = model::Model<f64>;
pub type Model32 = model::Model<f32>;
