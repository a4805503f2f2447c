//! Dynamic scene classification from per-frame CNN features.
//!
//! A video arrives as an `M x D` matrix of frame features. It is reduced to a
//! fixed-length descriptor by temporally orderless statistics (mean, standard
//! deviation, skewness, kurtosis, max) or by VLAD encoding, then classified by
//! one-vs-rest SVMs evaluated with leave-one-video-out cross-validation.

pub mod aggregation;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod model;
pub mod sampling;
pub mod svm;
pub mod synth;
pub mod vlad;

pub use error::{Error, Result};
pub use model::{
    descriptor_concat, validate_manifest, DatasetManifest, FeatureMatrix, LabelSpace, Measure,
    Normalization, VideoDescriptor, VideoRecord,
};
