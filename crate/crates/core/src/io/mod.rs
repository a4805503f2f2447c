//! On-disk formats: feature files, manifests, and the model container.

pub mod container;
mod feature_file;
mod manifest;
mod models;

pub use container::{Container, ContainerKind};
pub use feature_file::{
    decode_feature_matrix, encode_feature_matrix, encode_raw, read_feature_file,
    write_feature_file, HEADER_LEN,
};
pub use manifest::{
    load_features, parse_manifest, read_manifest, write_manifest, ManifestFile, VideoEntry,
};
pub use models::{
    svm_from_container, svm_to_container, vlad_from_container, vlad_to_container, DescriptorSet,
};
