use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::lovo::single_video_warnings;
use crate::evaluation::report::{EvalConfig, EvaluationReport};
use crate::model::{DatasetManifest, FeatureMatrix};
use crate::sampling::{linspace_indices, SamplingMode};
use crate::svm::{predict, train_ovr_subset, KernelSource, OvrSvmModel, SvmParams};

#[derive(Clone, Debug, PartialEq)]
pub struct VoteOutcome {
    pub label: usize,
    /// Frames predicted as each class.
    pub votes: Vec<usize>,
    /// Per-class decision values summed over frames.
    pub decision_sums: Vec<f64>,
}

/// Most frequent per-frame prediction. Ties go to the tied class with the
/// largest summed decision value, then to the lowest class id.
pub fn majority_vote_classify(frame_model: &OvrSvmModel, x: &FeatureMatrix) -> Result<VoteOutcome> {
    if x.cols() != frame_model.dim {
        return Err(Error::DimensionMismatch {
            expected: frame_model.dim,
            actual: x.cols(),
        });
    }
    let k = frame_model.label_space.len();
    let mut votes = vec![0usize; k];
    let mut decision_sums = vec![0.0; k];
    for row in x.data().rows() {
        let frame = row.mapv(f64::from);
        let p = predict(frame_model, frame.view())?;
        votes[p.label] += 1;
        for (s, d) in decision_sums.iter_mut().zip(&p.decision_values) {
            *s += d;
        }
    }
    let top = *votes.iter().max().ok_or(Error::Empty("no classes"))?;
    let mut label = None;
    for c in (0..k).filter(|&c| votes[c] == top) {
        match label {
            None => label = Some(c),
            Some(best) if decision_sums[c] > decision_sums[best] => label = Some(c),
            _ => {}
        }
    }
    Ok(VoteOutcome {
        label: label.expect("at least one class has the top count"),
        votes,
        decision_sums,
    })
}

/// Leave-one-video-out majority voting: the frame classifier is trained on
/// every frame of the other videos, each labelled with its video's class, and
/// the held-out video is classified by voting over `n_frames` linearly spaced
/// frames (capped at the frames it has).
pub fn lovo_majority_vote(
    manifest: &DatasetManifest,
    features: &[FeatureMatrix],
    n_frames: usize,
    params: &SvmParams,
) -> Result<EvaluationReport> {
    if features.len() != manifest.videos.len() {
        return Err(Error::InvalidParameter(format!(
            "{} videos but {} feature matrices",
            manifest.videos.len(),
            features.len()
        )));
    }
    if n_frames == 0 {
        return Err(Error::InvalidParameter(
            "n_frames must be at least 1".into(),
        ));
    }
    let labels = manifest.labels()?;
    let dim = features.first().ok_or(Error::Empty("no videos"))?.cols();
    let total: usize = features.iter().map(FeatureMatrix::rows).sum();

    let mut data = Array2::<f64>::zeros((total, dim));
    let mut frame_labels = Vec::with_capacity(total);
    let mut owner = Vec::with_capacity(total);
    let mut r = 0;
    for (v, x) in features.iter().enumerate() {
        if x.cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.cols(),
            });
        }
        data.slice_mut(ndarray::s![r..r + x.rows(), ..])
            .assign(&x.data().mapv(f64::from));
        frame_labels.extend(std::iter::repeat_n(labels[v], x.rows()));
        owner.extend(std::iter::repeat_n(v, x.rows()));
        r += x.rows();
    }

    let mut warnings = single_video_warnings(manifest);
    if let Some(short) = features.iter().position(|x| x.rows() < n_frames) {
        let msg = format!(
            "video `{}` has fewer than {n_frames} frames; short videos vote with all their frames",
            manifest.videos[short].id
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut storage = None;
    let kernel = KernelSource::for_data(params.kernel, data.view(), &mut storage);
    let predicted = (0..features.len())
        .into_par_iter()
        .map(|held| {
            let train: Vec<usize> = (0..total).filter(|&i| owner[i] != held).collect();
            assert!(
                train.iter().all(|&i| owner[i] != held),
                "held-out frames leaked into training"
            );
            let model = train_ovr_subset(
                data.view(),
                kernel,
                &train,
                &frame_labels,
                &manifest.label_space,
                params,
            )?;
            let x = &features[held];
            let sel = linspace_indices(x.rows(), n_frames.min(x.rows()))?;
            Ok(majority_vote_classify(&model, &x.select(&sel)?)?.label)
        })
        .collect::<Result<Vec<_>>>()?;

    let ids: Vec<String> = manifest.videos.iter().map(|v| v.id.clone()).collect();
    let config = EvalConfig {
        protocol: "vote".into(),
        kernel: Some(params.kernel),
        c: Some(params.c),
        n_frames: Some(n_frames),
        sampling: Some(SamplingMode::Linear),
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

/// Per-frame decisions of one video, one row per frame.
pub fn frame_decisions(frame_model: &OvrSvmModel, x: &FeatureMatrix) -> Result<Array2<f64>> {
    let k = frame_model.label_space.len();
    let mut out = Array2::zeros((x.rows(), k));
    for (row, mut dst) in x.data().axis_iter(Axis(0)).zip(out.rows_mut()) {
        let dv = frame_model.decision_values(row.mapv(f64::from).view())?;
        dst.assign(&ndarray::ArrayView1::from(&dv));
    }
    Ok(out)
}
