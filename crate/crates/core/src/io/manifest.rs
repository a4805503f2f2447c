//! JSON dataset manifest.
//!
//! ```json
//! {
//!   "name": "yupenn-hybrid-fc7",
//!   "dim": 4096,
//!   "classes": ["beach", "elevator"],
//!   "videos": [
//!     { "id": "beach_01", "class": "beach", "frames": 145,
//!       "feature_file": "features/beach_01.safv", "fps": 30.0 }
//!   ]
//! }
//! ```
//!
//! Relative `feature_file` paths resolve against the manifest's directory.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_feature_file;
use crate::model::{validate_manifest, DatasetManifest, FeatureMatrix, LabelSpace, VideoRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub classes: Vec<String>,
    pub videos: Vec<VideoEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoEntry {
    pub id: String,
    pub class: String,
    pub frames: usize,
    pub feature_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
}

impl ManifestFile {
    pub fn into_manifest(self, base_dir: &Path) -> Result<DatasetManifest> {
        Ok(DatasetManifest {
            name: self.name,
            dim: self.dim,
            label_space: LabelSpace::new(self.classes)?,
            videos: self
                .videos
                .into_iter()
                .map(|v| VideoRecord {
                    id: v.id,
                    class: v.class,
                    total_frames: v.frames,
                    feature_path: v.feature_file.into(),
                    fps: v.fps,
                })
                .collect(),
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn from_manifest(m: &DatasetManifest) -> Self {
        Self {
            name: m.name.clone(),
            dim: m.dim,
            classes: m.label_space.names().to_vec(),
            videos: m
                .videos
                .iter()
                .map(|v| VideoEntry {
                    id: v.id.clone(),
                    class: v.class.clone(),
                    frames: v.total_frames,
                    feature_file: v.feature_path.to_string_lossy().replace('\\', "/"),
                    fps: v.fps,
                })
                .collect(),
        }
    }
}

/// Parses without validating.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<DatasetManifest> {
    let file: ManifestFile =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    file.into_manifest(base_dir)
}

/// Reads and validates a manifest.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let m = parse_manifest(&text, base)?;
    validate_manifest(m).map_err(Error::Manifest)
}

pub fn write_manifest(path: impl AsRef<Path>, m: &DatasetManifest) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(&ManifestFile::from_manifest(m))
        .map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads every video's feature matrix, checking frame counts and a common
/// dimension.
pub fn load_features(m: &DatasetManifest) -> Result<Vec<FeatureMatrix>> {
    let features = m
        .videos
        .par_iter()
        .map(|v| read_feature_file(m.feature_path(v)))
        .collect::<Result<Vec<_>>>()?;
    for (v, x) in m.videos.iter().zip(&features) {
        if x.rows() != v.total_frames {
            return Err(Error::Format(format!(
                "video `{}` declares {} frames but its feature file has {}",
                v.id,
                v.total_frames,
                x.rows()
            )));
        }
    }
    let expected = m.dim.or_else(|| features.first().map(FeatureMatrix::cols));
    if let Some(dim) = expected {
        for (v, x) in m.videos.iter().zip(&features) {
            if x.cols() != dim {
                return Err(Error::Format(format!(
                    "video `{}` has feature dimension {}, expected {dim}",
                    v.id,
                    x.cols()
                )));
            }
        }
    }
    Ok(features)
}
