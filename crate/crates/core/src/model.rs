//! Shared data types: per-frame feature matrices, video descriptors, the
//! label space and the dataset manifest.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::FrameSelection;

/// Per-frame activations of one video: row `i` is the descriptor of the
/// `i`-th stored frame.
///
/// Values are kept in single precision, which is how they are stored on disk;
/// all statistics are computed in double precision.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f32>,
    post_relu: bool,
}

impl FeatureMatrix {
    pub fn new(data: Array2<f32>, post_relu: bool) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Empty(
                "feature matrix must have at least one row and column",
            ));
        }
        for ((row, col), &v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            if post_relu && v < 0.0 {
                return Err(Error::Format(format!(
                    "negative value {v} at ({row}, {col}) in a post-ReLU matrix"
                )));
            }
        }
        Ok(Self { data, post_relu })
    }

    pub fn from_rows(rows: &[Vec<f32>], post_relu: bool) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        let data = Array2::from_shape_vec((rows.len(), cols), flat)
            .map_err(|e| Error::Format(e.to_string()))?;
        Self::new(data, post_relu)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn post_relu(&self) -> bool {
        self.post_relu
    }

    pub fn data(&self) -> &Array2<f32> {
        &self.data
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f32> {
        self.data.row(i)
    }

    /// Keeps only the frames of a selection (1-based indices into the rows).
    pub fn select(&self, selection: &FrameSelection) -> Result<Self> {
        let zero_based: Vec<usize> = selection.indices.iter().map(|&i| i - 1).collect();
        if let Some(&bad) = zero_based.iter().find(|&&i| i >= self.rows()) {
            return Err(Error::FrameCount {
                requested: bad + 1,
                total: self.rows(),
            });
        }
        Ok(Self {
            data: self.data.select(Axis(0), &zero_based),
            post_relu: self.post_relu,
        })
    }
}

/// The temporal pooling measures, in canonical concatenation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Mean,
    Sd,
    Skew,
    Kurt,
    Max,
    Vlad,
}

impl Measure {
    pub const MOMENTS: [Measure; 5] = [
        Measure::Mean,
        Measure::Sd,
        Measure::Skew,
        Measure::Kurt,
        Measure::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Mean => "mean",
            Measure::Sd => "sd",
            Measure::Skew => "skew",
            Measure::Kurt => "kurt",
            Measure::Max => "max",
            Measure::Vlad => "vlad",
        }
    }

    /// Skewness and kurtosis are undefined for a single frame.
    pub fn needs_two_frames(self) -> bool {
        matches!(self, Measure::Skew | Measure::Kurt)
    }

    /// Whether the measure can produce negative values from non-negative input.
    pub fn may_be_negative(self) -> bool {
        matches!(self, Measure::Skew | Measure::Vlad)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(Measure::Mean),
            "sd" | "std" => Ok(Measure::Sd),
            "skew" => Ok(Measure::Skew),
            "kurt" | "kurtosis" => Ok(Measure::Kurt),
            "max" => Ok(Measure::Max),
            "vlad" => Ok(Measure::Vlad),
            other => Err(Error::InvalidParameter(format!(
                "unknown measure `{other}`"
            ))),
        }
    }
}

/// Parses a comma separated measure list such as `mean,sd`.
pub fn parse_measures(list: &str) -> Result<Vec<Measure>> {
    let measures = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Measure::from_str)
        .collect::<Result<Vec<_>>>()?;
    if measures.is_empty() {
        return Err(Error::Empty("measure list"));
    }
    Ok(measures)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub measure: Measure,
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Raw concatenation.
    None,
    /// Every block scaled to unit Euclidean norm independently.
    #[default]
    PerBlock,
    /// The whole concatenated vector scaled to unit norm.
    Whole,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Normalization::None),
            "per-block" => Ok(Normalization::PerBlock),
            "whole" => Ok(Normalization::Whole),
            other => Err(Error::InvalidParameter(format!(
                "unknown normalization `{other}` (expected none, per-block or whole)"
            ))),
        }
    }
}

/// Final fixed-length representation of a video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoDescriptor {
    pub values: Vec<f64>,
    pub blocks: Vec<Block>,
    pub normalization: Normalization,
}

/// Concatenates measure blocks in canonical order (mean, sd, skew, kurt, max, vlad).
pub fn descriptor_concat(blocks: Vec<(Measure, Vec<f64>)>) -> Result<VideoDescriptor> {
    if blocks.is_empty() {
        return Err(Error::Empty("descriptor block list"));
    }
    let mut blocks = blocks;
    blocks.sort_by_key(|(m, _)| *m);
    if let Some(w) = blocks.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateMeasure(w[0].0));
    }
    let total = blocks.iter().map(|(_, v)| v.len()).sum();
    let mut values = Vec::with_capacity(total);
    let mut layout = Vec::with_capacity(blocks.len());
    for (measure, v) in blocks {
        layout.push(Block {
            measure,
            offset: values.len(),
            len: v.len(),
        });
        values.extend(v);
    }
    Ok(VideoDescriptor {
        values,
        blocks: layout,
        normalization: Normalization::None,
    })
}

impl VideoDescriptor {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, measure: Measure) -> Option<&[f64]> {
        self.blocks
            .iter()
            .find(|b| b.measure == measure)
            .map(|b| &self.values[b.offset..b.offset + b.len])
    }

    pub fn measures(&self) -> Vec<Measure> {
        self.blocks.iter().map(|b| b.measure).collect()
    }

    /// Merges two descriptors of the same video, keeping canonical block order.
    pub fn concat(&self, other: &VideoDescriptor) -> Result<VideoDescriptor> {
        let parts = self
            .split()
            .into_iter()
            .chain(other.split())
            .collect::<Vec<_>>();
        let mut out = descriptor_concat(parts)?;
        if self.normalization == other.normalization {
            out.normalization = self.normalization;
        }
        Ok(out)
    }

    fn split(&self) -> Vec<(Measure, Vec<f64>)> {
        self.blocks
            .iter()
            .map(|b| (b.measure, self.values[b.offset..b.offset + b.len].to_vec()))
            .collect()
    }

    pub fn normalize(&mut self, normalization: Normalization) {
        match normalization {
            Normalization::None => {}
            Normalization::PerBlock => {
                for b in &self.blocks {
                    l2_normalize(&mut self.values[b.offset..b.offset + b.len]);
                }
            }
            Normalization::Whole => l2_normalize(&mut self.values),
        }
        self.normalization = normalization;
    }
}

/// Scales `v` to unit Euclidean norm; all-zero vectors stay zero.
pub fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Ordered class names; ids are positions in sorted name order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    classes: Vec<String>,
}

impl LabelSpace {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut classes: Vec<String> = names.into_iter().map(Into::into).collect();
        classes.sort();
        if let Some(w) = classes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "duplicate class name `{}`",
                w[0]
            )));
        }
        Ok(Self { classes })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.classes.binary_search_by(|c| c.as_str().cmp(name)).ok()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.classes[id]
    }

    pub fn names(&self) -> &[String] {
        &self.classes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub id: String,
    pub class: String,
    /// Frame count of the source video.
    pub total_frames: usize,
    pub feature_path: PathBuf,
    pub fps: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    /// Feature dimension shared by every video.
    pub dim: Option<usize>,
    pub label_space: LabelSpace,
    pub videos: Vec<VideoRecord>,
    /// Directory relative feature paths are resolved against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn feature_path(&self, video: &VideoRecord) -> PathBuf {
        if video.feature_path.is_absolute() {
            video.feature_path.clone()
        } else {
            self.base_dir.join(&video.feature_path)
        }
    }

    /// Class id of every video, in manifest order.
    pub fn labels(&self) -> Result<Vec<usize>> {
        self.videos
            .iter()
            .map(|v| {
                self.label_space.id(&v.class).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "video `{}` has unknown class `{}`",
                        v.id, v.class
                    ))
                })
            })
            .collect()
    }

    pub fn class_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts: BTreeMap<&str, usize> = self
            .label_space
            .names()
            .iter()
            .map(|n| (n.as_str(), 0))
            .collect();
        for v in &self.videos {
            if let Some(c) = counts.get_mut(v.class.as_str()) {
                *c += 1;
            }
        }
        counts
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateId(String),
    UnknownClass { video: String, class: String },
    MissingFeatureFile { video: String, path: PathBuf },
    ZeroFrames(String),
    EmptyClass(String),
    NoClasses,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "duplicate video id `{id}`"),
            Violation::UnknownClass { video, class } => {
                write!(f, "video `{video}`: unknown class `{class}`")
            }
            Violation::MissingFeatureFile { video, path } => {
                write!(
                    f,
                    "video `{video}`: missing feature file {}",
                    path.display()
                )
            }
            Violation::ZeroFrames(video) => write!(f, "video `{video}`: zero-frame video"),
            Violation::EmptyClass(class) => write!(f, "empty class `{class}`"),
            Violation::NoClasses => write!(f, "manifest declares no classes"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ManifestReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ManifestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every manifest invariant and reports all violations at once.
pub fn validate_manifest(
    m: DatasetManifest,
) -> std::result::Result<DatasetManifest, ManifestReport> {
    let mut report = ManifestReport::default();
    if m.label_space.is_empty() {
        report.violations.push(Violation::NoClasses);
    }
    let mut seen = HashSet::new();
    for v in &m.videos {
        if !seen.insert(v.id.as_str()) {
            report.violations.push(Violation::DuplicateId(v.id.clone()));
        }
        if m.label_space.id(&v.class).is_none() {
            report.violations.push(Violation::UnknownClass {
                video: v.id.clone(),
                class: v.class.clone(),
            });
        }
        if v.total_frames == 0 {
            report.violations.push(Violation::ZeroFrames(v.id.clone()));
        }
        let path = m.feature_path(v);
        if !Path::new(&path).is_file() {
            report.violations.push(Violation::MissingFeatureFile {
                video: v.id.clone(),
                path,
            });
        }
    }
    for (class, count) in m.class_counts() {
        if count == 0 {
            report
                .violations
                .push(Violation::EmptyClass(class.to_string()));
        }
    }
    if report.violations.is_empty() {
        Ok(m)
    } else {
        Err(report)
    }
}
