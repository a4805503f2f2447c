use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dynscene::aggregation::aggregate_videos;
use dynscene::evaluation::{
    frames_vs_accuracy, lovo_evaluate, lovo_majority_vote, EvaluationReport, DEFAULT_N_LIST,
    DEFAULT_TRIALS,
};
use dynscene::io::{
    load_features, read_feature_file, read_manifest, svm_from_container, svm_to_container,
    vlad_from_container, vlad_to_container, Container, DescriptorSet,
};
use dynscene::model::parse_measures;
use dynscene::sampling::SamplingMode;
use dynscene::svm::{predict, train_ovr, KernelKind, SvmParams, DEFAULT_C};
use dynscene::synth::{generate, SynthKind, SynthSpec};
use dynscene::vlad::{VladModel, VladNormalization, VladParams, DEFAULT_D_PRIME, DEFAULT_K};
use dynscene::{DatasetManifest, FeatureMatrix, Measure, Normalization, VideoDescriptor};

/// `println!` that keeps going when the reader has gone away, so output
/// files are still written after `| head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "dynscene",
    version,
    about = "Dynamic scene classification from per-frame CNN features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (manifest plus feature files).
    Synth(SynthArgs),
    /// Aggregate each video's frames into a descriptor.
    Aggregate(AggregateArgs),
    /// Fit or apply a VLAD encoder.
    #[command(subcommand)]
    Vlad(VladCommand),
    /// Train a one-vs-rest SVM on a whole dataset.
    Train(TrainArgs),
    /// Classify videos with a trained SVM.
    Predict(PredictArgs),
    /// Cross-validated evaluation.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Experiments over sampling parameters.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args)]
struct SynthArgs {
    /// variance, mean or vote
    #[arg(long, default_value = "variance")]
    kind: SynthKind,
    #[arg(long, default_value_t = 5)]
    classes: usize,
    #[arg(long, default_value_t = 10)]
    videos: usize,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

/// How video descriptors are built from frame features.
#[derive(Args, Clone)]
struct DescriptorArgs {
    /// Comma-separated: mean, sd, skew, kurt, max, vlad
    #[arg(long, default_value = "mean")]
    measures: String,
    /// Frames per video; all frames when omitted
    #[arg(long)]
    n_frames: Option<usize>,
    #[arg(long, default_value = "linear")]
    sampling: SamplingMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// none, per-block or whole
    #[arg(long = "normalize", default_value = "per-block")]
    normalization: Normalization,
    /// VLAD model, required when measures include vlad
    #[arg(long)]
    vlad_model: Option<PathBuf>,
}

#[derive(Args)]
struct AggregateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    desc: DescriptorArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum VladCommand {
    /// Fit PCA and the codebook on every frame of a dataset.
    Fit {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_D_PRIME)]
        d_prime: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// raw or power-l2
        #[arg(long, default_value = "power-l2")]
        normalization: VladNormalization,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a dataset or a single feature file.
    Encode {
        #[arg(long)]
        model: PathBuf,
        #[arg(
            long,
            conflicts_with = "features",
            required_unless_present = "features"
        )]
        manifest: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SvmArgs {
    /// linear or hik
    #[arg(long, default_value = "linear")]
    kernel: KernelKind,
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
}

/// Descriptors either precomputed or built from the manifest's features.
#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Precomputed descriptor file; overrides the descriptor options
    #[arg(long)]
    descriptors: Option<PathBuf>,
    #[command(flatten)]
    desc: DescriptorArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Descriptor file to classify
    #[arg(
        long,
        conflicts_with = "features",
        required_unless_present = "features"
    )]
    descriptors: Option<PathBuf>,
    /// Single feature file, aggregated with the descriptor options
    #[arg(long)]
    features: Option<PathBuf>,
    #[command(flatten)]
    desc: DescriptorArgs,
}

#[derive(Subcommand)]
enum EvaluateCommand {
    /// Leave-one-video-out cross-validation on video descriptors.
    Lovo {
        #[command(flatten)]
        input: InputArgs,
        /// linear, hik or both
        #[arg(long, default_value = "linear")]
        kernel: String,
        #[arg(long, default_value_t = DEFAULT_C)]
        c: f64,
        /// JSON report path
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Leave-one-video-out majority voting over per-frame predictions.
    Vote {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 10)]
        n_frames: usize,
        #[command(flatten)]
        svm: SvmArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Accuracy against the number of randomly drawn frames.
    Frames {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated frame counts
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_N_LIST)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        svm: SvmArgs,
        /// CSV with columns n, mean, min, max, std
        #[arg(long)]
        out: PathBuf,
        /// Full curve, including per-trial accuracies, as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn load_dataset(path: &Path) -> Result<(DatasetManifest, Vec<FeatureMatrix>)> {
    let manifest =
        read_manifest(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let features = load_features(&manifest).context("loading feature files")?;
    Ok((manifest, features))
}

fn read_vlad(path: &Path) -> Result<VladModel> {
    let c =
        Container::read(path).with_context(|| format!("reading VLAD model {}", path.display()))?;
    Ok(vlad_from_container(&c)?)
}

fn build_descriptors(
    features: &[FeatureMatrix],
    args: &DescriptorArgs,
) -> Result<Vec<VideoDescriptor>> {
    let measures = parse_measures(&args.measures)?;
    let moments: Vec<Measure> = measures
        .iter()
        .copied()
        .filter(|&m| m != Measure::Vlad)
        .collect();
    let frames = args.n_frames.map(|n| (n, args.sampling, args.seed));
    let vlad = if measures.contains(&Measure::Vlad) {
        let path = args
            .vlad_model
            .as_deref()
            .context("measure `vlad` needs --vlad-model")?;
        let model = read_vlad(path)?;
        if frames.is_some() {
            log::warn!(
                "VLAD codes use every frame; --n-frames applies to the moment measures only"
            );
        }
        Some(
            features
                .iter()
                .map(|x| model.encode(x))
                .collect::<dynscene::Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let mut out = if moments.is_empty() {
        vlad.clone().context("no measures")?
    } else {
        let m = aggregate_videos(features, &moments, Normalization::None, frames)?;
        match &vlad {
            Some(v) => m
                .iter()
                .zip(v)
                .map(|(a, b)| a.concat(b))
                .collect::<dynscene::Result<Vec<_>>>()?,
            None => m,
        }
    };
    for d in &mut out {
        d.normalize(args.normalization);
    }
    Ok(out)
}

/// Descriptors in manifest order, loaded from file or computed.
fn input_descriptors(input: &InputArgs) -> Result<(DatasetManifest, Vec<VideoDescriptor>)> {
    match &input.descriptors {
        Some(path) => {
            let manifest = read_manifest(&input.manifest)
                .with_context(|| format!("reading manifest {}", input.manifest.display()))?;
            let set = DescriptorSet::from_container(
                &Container::read(path)
                    .with_context(|| format!("reading descriptors {}", path.display()))?,
            )?;
            let descriptors = manifest
                .videos
                .iter()
                .map(|v| {
                    let i = set
                        .ids
                        .iter()
                        .position(|id| *id == v.id)
                        .with_context(|| format!("no descriptor for video `{}`", v.id))?;
                    Ok(set.descriptors[i].clone())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((manifest, descriptors))
        }
        None => {
            let (manifest, features) = load_dataset(&input.manifest)?;
            let descriptors = build_descriptors(&features, &input.desc)?;
            Ok((manifest, descriptors))
        }
    }
}

fn warn_hik_moments(kernel: KernelKind, descriptors: &[VideoDescriptor]) {
    if kernel == KernelKind::Hik {
        if let Some(d) = descriptors.first() {
            if d.measures().iter().any(|m| m.may_be_negative()) {
                log::warn!("histogram intersection on descriptors with negative entries is not a positive definite kernel");
            }
        }
    }
}

fn descriptor_set(manifest: &DatasetManifest, descriptors: Vec<VideoDescriptor>) -> DescriptorSet {
    DescriptorSet {
        ids: manifest.videos.iter().map(|v| v.id.clone()).collect(),
        classes: manifest.videos.iter().map(|v| v.class.clone()).collect(),
        descriptors,
    }
}

fn print_report(report: &EvaluationReport) {
    out!("{}", report.render_table());
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let spec = SynthSpec {
                classes: a.classes,
                videos_per_class: a.videos,
                frames: a.frames,
                dim: a.dim,
                seed: a.seed,
            };
            let data = generate(a.kind, &spec)?;
            let path = data.write(&a.out)?;
            out!("{}", path.display());
        }
        Command::Aggregate(a) => {
            let (manifest, features) = load_dataset(&a.manifest)?;
            let descriptors = build_descriptors(&features, &a.desc)?;
            descriptor_set(&manifest, descriptors)
                .to_container()?
                .write(&a.out)?;
        }
        Command::Vlad(VladCommand::Fit {
            manifest,
            k,
            d_prime,
            seed,
            normalization,
            out,
        }) => {
            let (_, features) = load_dataset(&manifest)?;
            let refs: Vec<&FeatureMatrix> = features.iter().collect();
            let params = VladParams {
                k,
                d_prime,
                seed,
                normalization,
            };
            let model = VladModel::fit(&refs, &params)?;
            log::info!("codebook inertia {}", model.codebook.inertia);
            vlad_to_container(&model).write(&out)?;
        }
        Command::Vlad(VladCommand::Encode {
            model,
            manifest,
            features,
            out,
        }) => {
            let model = read_vlad(&model)?;
            let set = match (manifest, features) {
                (Some(m), _) => {
                    let (manifest, features) = load_dataset(&m)?;
                    let codes = features
                        .iter()
                        .map(|x| model.encode(x))
                        .collect::<dynscene::Result<Vec<_>>>()?;
                    descriptor_set(&manifest, codes)
                }
                (None, Some(f)) => {
                    let x = read_feature_file(&f)?;
                    let id = f
                        .file_stem()
                        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                    DescriptorSet {
                        ids: vec![id],
                        classes: vec![String::new()],
                        descriptors: vec![model.encode(&x)?],
                    }
                }
                (None, None) => bail!("give --manifest or --features"),
            };
            set.to_container()?.write(&out)?;
        }
        Command::Train(a) => {
            let (manifest, descriptors) = input_descriptors(&a.input)?;
            warn_hik_moments(a.svm.kernel, &descriptors);
            let data = descriptor_set(&manifest, descriptors).matrix();
            let model = train_ovr(
                data.view(),
                &manifest.labels()?,
                &manifest.label_space,
                &SvmParams::new(a.svm.kernel, a.svm.c),
            )?;
            svm_to_container(&model).write(&a.out)?;
        }
        Command::Predict(a) => {
            let model = svm_from_container(&Container::read(&a.model)?)?;
            let set = match (a.descriptors, a.features) {
                (Some(p), _) => DescriptorSet::from_container(&Container::read(&p)?)?,
                (None, Some(f)) => {
                    let x = read_feature_file(&f)?;
                    let id = f
                        .file_stem()
                        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                    DescriptorSet {
                        ids: vec![id],
                        classes: vec![String::new()],
                        descriptors: build_descriptors(std::slice::from_ref(&x), &a.desc)?,
                    }
                }
                (None, None) => bail!("give --descriptors or --features"),
            };
            let data = set.matrix();
            for (id, row) in set.ids.iter().zip(data.rows()) {
                let p = predict(&model, row)?;
                out!("{id}\t{}", model.label_space.name(p.label));
            }
        }
        Command::Evaluate(EvaluateCommand::Lovo {
            input,
            kernel,
            c,
            report,
        }) => {
            let kernels = match kernel.as_str() {
                "both" => vec![KernelKind::Linear, KernelKind::Hik],
                k => vec![k.parse::<KernelKind>()?],
            };
            let (manifest, descriptors) = input_descriptors(&input)?;
            let mut reports = serde_json::Map::new();
            for k in &kernels {
                warn_hik_moments(*k, &descriptors);
                let mut r = lovo_evaluate(&manifest, &descriptors, &SvmParams::new(*k, c))?;
                if input.descriptors.is_none() {
                    r.config.n_frames = input.desc.n_frames;
                    r.config.sampling = input.desc.n_frames.map(|_| input.desc.sampling);
                    r.config.seed = input.desc.n_frames.map(|_| input.desc.seed);
                }
                if kernels.len() > 1 {
                    out!("kernel: {k}");
                }
                print_report(&r);
                reports.insert(k.to_string(), serde_json::to_value(&r)?);
            }
            if let Some(path) = report {
                let value = if kernels.len() == 1 {
                    reports
                        .into_iter()
                        .next()
                        .map(|(_, v)| v)
                        .unwrap_or_default()
                } else {
                    serde_json::Value::Object(reports)
                };
                std::fs::write(&path, serde_json::to_string_pretty(&value)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Evaluate(EvaluateCommand::Vote {
            manifest,
            n_frames,
            svm,
            report,
        }) => {
            let (manifest, features) = load_dataset(&manifest)?;
            let r = lovo_majority_vote(
                &manifest,
                &features,
                n_frames,
                &SvmParams::new(svm.kernel, svm.c),
            )?;
            print_report(&r);
            if let Some(path) = report {
                std::fs::write(&path, r.to_json() + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Experiment(ExperimentCommand::Frames {
            manifest,
            n_list,
            trials,
            seed,
            svm,
            out,
            json,
        }) => {
            let (manifest, features) = load_dataset(&manifest)?;
            let curve = frames_vs_accuracy(
                &manifest,
                &features,
                &n_list,
                trials,
                seed,
                &SvmParams::new(svm.kernel, svm.c),
            )?;
            curve.save_csv(&out)?;
            out!(
                "{:>5}  {:>8}  {:>8}  {:>8}  {:>8}",
                "n",
                "mean",
                "min",
                "max",
                "std"
            );
            for p in &curve.points {
                out!(
                    "{:>5}  {:>8.2}  {:>8.2}  {:>8.2}  {:>8.2}",
                    p.n,
                    p.mean,
                    p.min,
                    p.max,
                    p.std
                );
            }
            if let Some(path) = json {
                std::fs::write(&path, serde_json::to_string_pretty(&curve)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
