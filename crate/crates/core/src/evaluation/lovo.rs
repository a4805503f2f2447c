use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::report::{EvalConfig, EvaluationReport};
use crate::model::{DatasetManifest, LabelSpace, VideoDescriptor};
use crate::svm::{predict, train_ovr_subset, KernelSource, SvmParams};

/// Training indices for the fold that holds out `held`.
pub fn fold_training_set(n: usize, held: usize) -> Vec<usize> {
    let train: Vec<usize> = (0..n).filter(|&i| i != held).collect();
    assert!(
        !train.contains(&held),
        "held-out sample leaked into its own fold"
    );
    train
}

/// Leave-one-out predictions: sample `v` is classified by a one-vs-rest model
/// trained on every other sample.
pub fn lovo_predict(
    data: ArrayView2<'_, f64>,
    labels: &[usize],
    label_space: &LabelSpace,
    params: &SvmParams,
) -> Result<Vec<usize>> {
    let n = data.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    let mut storage = None;
    let kernel = KernelSource::for_data(params.kernel, data, &mut storage);
    (0..n)
        .into_par_iter()
        .map(|held| {
            let train = fold_training_set(n, held);
            let model = train_ovr_subset(data, kernel, &train, labels, label_space, params)?;
            Ok(predict(&model, data.row(held))?.label)
        })
        .collect()
}

/// Notes for classes that have a single video: their held-out fold has no
/// positive examples of the class, so that video cannot be classified correctly.
pub fn single_video_warnings(manifest: &DatasetManifest) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in &manifest.videos {
        *counts.entry(v.class.as_str()).or_default() += 1;
    }
    counts
        .into_iter()
        .filter(|&(_, n)| n == 1)
        .map(|(class, _)| {
            let msg = format!(
                "class `{class}` has a single video; its held-out fold trains without positives"
            );
            log::warn!("{msg}");
            msg
        })
        .collect()
}

pub(crate) fn descriptor_matrix(descriptors: &[VideoDescriptor]) -> Result<Array2<f64>> {
    let len = descriptors
        .first()
        .ok_or(Error::Empty("no descriptors"))?
        .len();
    if let Some(d) = descriptors.iter().find(|d| d.len() != len) {
        return Err(Error::DimensionMismatch {
            expected: len,
            actual: d.len(),
        });
    }
    Ok(Array2::from_shape_fn((descriptors.len(), len), |(i, j)| {
        descriptors[i].values[j]
    }))
}

/// Leave-one-video-out evaluation of precomputed video descriptors.
pub fn lovo_evaluate(
    manifest: &DatasetManifest,
    descriptors: &[VideoDescriptor],
    params: &SvmParams,
) -> Result<EvaluationReport> {
    if descriptors.len() != manifest.videos.len() {
        return Err(Error::InvalidParameter(format!(
            "missing descriptors: {} videos but {} descriptors",
            manifest.videos.len(),
            descriptors.len()
        )));
    }
    if manifest.label_space.len() < 2 {
        return Err(Error::InvalidParameter(
            "LOVO needs at least two classes".into(),
        ));
    }
    let labels = manifest.labels()?;
    let data = descriptor_matrix(descriptors)?;
    let warnings = single_video_warnings(manifest);
    let predicted = lovo_predict(data.view(), &labels, &manifest.label_space, params)?;
    let ids: Vec<String> = manifest.videos.iter().map(|v| v.id.clone()).collect();
    let config = EvalConfig {
        protocol: "lovo".into(),
        kernel: Some(params.kernel),
        c: Some(params.c),
        measures: descriptors.first().map(VideoDescriptor::measures),
        normalization: descriptors.first().map(|d| d.normalization),
        ..EvalConfig::default()
    };
    Ok(EvaluationReport::from_predictions(
        &manifest.label_space,
        &ids,
        &labels,
        &predicted,
        config,
        warnings,
    ))
}
