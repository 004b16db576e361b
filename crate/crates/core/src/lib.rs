//! Environmental losses for behavioral-cloning trajectory regressors.
//!
//! A desk-scale toolkit: synthetic driving scenes, raster scene encoding,
//! exact distance fields, social and road losses with analytic gradients, a
//! small convolutional regressor with guided backpropagation, and safety and
//! awareness metrics.

pub mod config;
pub mod distfield;
mod error;
pub mod geometry;
pub mod losses;
pub mod metrics;
pub mod netcore;
pub mod raster;
mod real;
pub mod scene;
pub mod trainer;

pub use error::{Error, Result};
pub use real::Real;

pub type DistanceField32 = distfield::DistanceField<f32>;
pub type DistanceField64 = distfield::DistanceField<f64>;
pub type Tensor32 = netcore::Tensor<f32>;
pub type Tensor64 = netcore::Tensor<f64>;
pub type Model32 = netcore::RegressorModel<f32>;
pub type Model64 = netcore::RegressorModel<f64>;
pub type Adam32 = netcore::Adam<f32>;
pub type Adam64 = netcore::Adam<f64>;
