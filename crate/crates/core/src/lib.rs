//! Event-driven spiking convolutional networks with unsupervised layer-wise
//! training.
//!
//! The pipeline runs from grayscale images to classification accuracy:
//!
//! 1. [`encoder`] filters an image with a difference of Gaussians, splits the
//!    response into on/off channels and latency-codes every pixel into at most
//!    one spike.
//! 2. [`simulator`] propagates spikes through stacked integrate-and-fire
//!    convolution, pooling and fully-connected layers, one sample at a time.
//! 3. [`plasticity`] holds the STDP weight rules and the two threshold rules
//!    (target timestamp and winner-take-all homeostasis).
//! 4. [`trainer`] trains one layer at a time on a single column and copies the
//!    learned filters onto every column.
//! 5. [`readout`] decodes output spikes into feature vectors, and
//!    [`classifier`] fits a linear SVM on them.

pub mod classifier;
pub mod config;
pub mod datasets;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod model_io;
pub mod network;
pub mod plasticity;
pub mod readout;
pub mod rng;
pub mod simulator;
pub mod trainer;
pub mod types;

pub use error::{Error, Result};
pub use network::{LayerKind, LayerSpec, Network, NetworkSpec};
pub use types::{Image, Shape3, SpikeEvent};
