use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::container::{Container, ContainerKind};
use crate::model::{Block, LabelSpace, Normalization, VideoDescriptor};
use crate::svm::{BinarySvmModel, ClassModel, KernelKind, OvrSvmModel, TrainingSummary};
use crate::vlad::{Codebook, PcaModel, VladModel, VladNormalization};

fn meta_field<T: for<'de> Deserialize<'de>>(c: &Container, key: &str) -> Result<T> {
    let v = c
        .meta
        .get(key)
        .ok_or_else(|| Error::Format(format!("container meta lacks `{key}`")))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::Format(format!("meta `{key}`: {e}")))
}

fn row(v: &Array1<f64>) -> Array2<f64> {
    v.clone().insert_axis(ndarray::Axis(0))
}

fn single_row(a: &Array2<f64>, name: &str) -> Result<Array1<f64>> {
    if a.nrows() != 1 {
        return Err(Error::Format(format!("array `{name}` must have one row")));
    }
    Ok(a.row(0).to_owned())
}

/// Aggregated descriptors of a whole dataset, one row per video.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorSet {
    pub ids: Vec<String>,
    pub classes: Vec<String>,
    pub descriptors: Vec<VideoDescriptor>,
}

impl DescriptorSet {
    pub fn to_container(&self) -> Result<Container> {
        let first = self
            .descriptors
            .first()
            .ok_or(Error::Empty("descriptor set"))?;
        let len = first.len();
        if let Some(d) = self.descriptors.iter().find(|d| d.blocks != first.blocks) {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: d.len(),
            });
        }
        let mut c = Container::new(
            ContainerKind::Descriptors,
            json!({
                "ids": self.ids,
                "classes": self.classes,
                "blocks": first.blocks,
                "normalization": first.normalization,
            }),
        );
        let mut a = Array2::zeros((self.descriptors.len(), len));
        for (mut r, d) in a.rows_mut().into_iter().zip(&self.descriptors) {
            r.assign(&ndarray::ArrayView1::from(&d.values));
        }
        c.push("descriptors", a);
        Ok(c)
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(ContainerKind::Descriptors)?;
        let ids: Vec<String> = meta_field(c, "ids")?;
        let classes: Vec<String> = meta_field(c, "classes")?;
        let blocks: Vec<Block> = meta_field(c, "blocks")?;
        let normalization: Normalization = meta_field(c, "normalization")?;
        let a = c.array("descriptors")?;
        if a.nrows() != ids.len() || classes.len() != ids.len() {
            return Err(Error::Format("descriptor rows do not match ids".into()));
        }
        let descriptors = a
            .rows()
            .into_iter()
            .map(|r| VideoDescriptor {
                values: r.to_vec(),
                blocks: blocks.clone(),
                normalization,
            })
            .collect();
        Ok(Self {
            ids,
            classes,
            descriptors,
        })
    }

    pub fn matrix(&self) -> Array2<f64> {
        let cols = self.descriptors.first().map_or(0, VideoDescriptor::len);
        Array2::from_shape_fn((self.descriptors.len(), cols), |(i, j)| {
            self.descriptors[i].values[j]
        })
    }
}

pub fn vlad_to_container(m: &VladModel) -> Container {
    let mut c = Container::new(
        ContainerKind::Vlad,
        json!({
            "k": m.codebook.k(),
            "d_prime": m.pca.d_prime(),
            "dim": m.pca.dim(),
            "normalization": m.normalization,
            "inertia": m.codebook.inertia,
            "history": m.codebook.history,
        }),
    );
    c.push("pca_mean", row(&m.pca.mean));
    c.push("pca_components", m.pca.components.clone());
    c.push("pca_scales", row(&m.pca.scales));
    c.push("centers", m.codebook.centers.clone());
    c
}

pub fn vlad_from_container(c: &Container) -> Result<VladModel> {
    c.expect_kind(ContainerKind::Vlad)?;
    let k: usize = meta_field(c, "k")?;
    let d_prime: usize = meta_field(c, "d_prime")?;
    let dim: usize = meta_field(c, "dim")?;
    let pca = PcaModel {
        mean: single_row(c.array("pca_mean")?, "pca_mean")?,
        components: c.array("pca_components")?.clone(),
        scales: single_row(c.array("pca_scales")?, "pca_scales")?,
    };
    let centers = c.array("centers")?.clone();
    if pca.dim() != dim
        || pca.d_prime() != d_prime
        || pca.components.ncols() != dim
        || pca.scales.len() != d_prime
        || centers.dim() != (k, d_prime)
    {
        return Err(Error::Format(
            "VLAD model arrays disagree with header".into(),
        ));
    }
    Ok(VladModel {
        pca,
        codebook: Codebook {
            centers,
            inertia: meta_field(c, "inertia")?,
            history: meta_field(c, "history")?,
        },
        normalization: meta_field::<VladNormalization>(c, "normalization")?,
    })
}

#[derive(Serialize, Deserialize)]
struct ClassMeta {
    trained: bool,
    bias: f64,
    sv_indices: Vec<usize>,
    summary: Option<TrainingSummary>,
}

pub fn svm_to_container(m: &OvrSvmModel) -> Container {
    let classes: Vec<ClassMeta> = m
        .models
        .iter()
        .map(|cm| match cm {
            ClassModel::Trained(b) => ClassMeta {
                trained: true,
                bias: b.bias,
                sv_indices: b.sv_indices.clone(),
                summary: Some(b.summary),
            },
            ClassModel::Untrained => ClassMeta {
                trained: false,
                bias: 0.0,
                sv_indices: vec![],
                summary: None,
            },
        })
        .collect();
    let mut c = Container::new(
        ContainerKind::Svm,
        json!({
            "kernel": m.kernel,
            "c": m.c,
            "dim": m.dim,
            "label_space": m.label_space.names(),
            "models": classes,
        }),
    );
    for (i, cm) in m.models.iter().enumerate() {
        if let ClassModel::Trained(b) = cm {
            c.push(format!("sv.{i}"), b.support_vectors.clone());
            c.push(
                format!("coef.{i}"),
                Array1::from(b.coef.clone()).insert_axis(ndarray::Axis(0)),
            );
        }
    }
    c
}

pub fn svm_from_container(c: &Container) -> Result<OvrSvmModel> {
    c.expect_kind(ContainerKind::Svm)?;
    let kernel: KernelKind = meta_field(c, "kernel")?;
    let cost: f64 = meta_field(c, "c")?;
    let dim: usize = meta_field(c, "dim")?;
    let names: Vec<String> = meta_field(c, "label_space")?;
    let label_space = LabelSpace::new(names)?;
    let metas: Vec<ClassMeta> = meta_field(c, "models")?;
    if metas.len() != label_space.len() {
        return Err(Error::Format("one binary model per class expected".into()));
    }
    let models = metas
        .into_iter()
        .enumerate()
        .map(|(i, meta)| {
            if !meta.trained {
                return Ok(ClassModel::Untrained);
            }
            let sv = c.array(&format!("sv.{i}"))?.clone();
            let coef = single_row(c.array(&format!("coef.{i}"))?, "coef")?.to_vec();
            if sv.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: sv.ncols(),
                });
            }
            BinarySvmModel::from_parts(
                sv,
                coef,
                meta.bias,
                kernel,
                cost,
                meta.sv_indices,
                meta.summary.unwrap_or(TrainingSummary {
                    objective: f64::NAN,
                    kkt_gap: f64::NAN,
                    iterations: 0,
                }),
            )
            .map(ClassModel::Trained)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrSvmModel {
        label_space,
        models,
        kernel,
        c: cost,
        dim,
    })
}
