//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the summary is always printed.

mod common;

use std::time::{Duration, Instant};

use common::{
    check_kkt, column, dual_objective, malformed_feature_files, naive_moments, q_matrix, qp_oracle,
    random_features, rng, separable_problem, vlad_reference,
};
use dynscene::aggregation::{aggregate_combo, MomentSet, StreamingMoments};
use dynscene::evaluation::{
    frames_vs_accuracy, lovo_evaluate, lovo_majority_vote, DEFAULT_N_LIST, DEFAULT_TRIALS,
};
use dynscene::io::{decode_feature_matrix, read_feature_file, write_feature_file};
use dynscene::svm::{train_binary, KernelKind, SvmParams, DEFAULT_TOL};
use dynscene::synth::{generate, SynthKind, SynthSpec};
use dynscene::vlad::{kmeanspp_fit, vlad_encode, Codebook, KMeansParams, VladNormalization};
use dynscene::{FeatureMatrix, Measure, Normalization};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn moment_oracle() -> Outcome {
    let mut r = rng(1);
    let matrices: Vec<FeatureMatrix> = (0..200)
        .map(|_| {
            let rows = r.random_range(2..=500);
            random_features(&mut r, rows, 4096)
        })
        .collect();

    let start = Instant::now();
    let column_pass: Vec<MomentSet> = matrices.iter().map(MomentSet::compute).collect();
    let streamed: Vec<MomentSet> = matrices
        .iter()
        .map(|x| {
            let mut s = StreamingMoments::new(x.cols());
            for row in x.data().rows() {
                s.push_row(row.as_slice().unwrap()).unwrap();
            }
            s.finish().unwrap()
        })
        .collect();
    let elapsed = start.elapsed();

    let worst = matrices
        .par_iter()
        .zip(&column_pass)
        .zip(&streamed)
        .map(|((x, a), b)| {
            let mut worst = 0.0f64;
            for j in 0..x.cols() {
                let o = naive_moments(&column(x, j));
                for set in [a, b] {
                    for (got, want) in [
                        (set.mean[j], o.mean),
                        (set.sd[j], o.sd),
                        (set.skew[j], o.skew),
                        (set.kurt[j], o.kurt),
                        (set.max[j], o.max),
                    ] {
                        worst = worst.max((got - want).abs() / want.abs().max(1.0));
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    let detail = format!("worst relative error {worst:.2e}, aggregation time {elapsed:.2?}");
    if worst <= 1e-10 && elapsed < Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bits(s: &MomentSet) -> Vec<u64> {
    [&s.mean, &s.sd, &s.skew, &s.kurt, &s.max]
        .into_iter()
        .flat_map(|v| v.iter().map(|x| x.to_bits()))
        .collect()
}

fn permutation_invariance() -> Outcome {
    let mut r = rng(2);
    let all = [
        Measure::Mean,
        Measure::Sd,
        Measure::Skew,
        Measure::Kurt,
        Measure::Max,
    ];
    for case in 0..100 {
        let rows = r.random_range(2..=500);
        let x = random_features(&mut r, rows, 1024);
        let mut order: Vec<usize> = (0..rows).collect();
        order.shuffle(&mut r);
        let shuffled: Vec<Vec<f32>> = order.iter().map(|&i| x.row(i).to_vec()).collect();
        let y = FeatureMatrix::from_rows(&shuffled, false).unwrap();
        if bits(&MomentSet::compute(&x)) != bits(&MomentSet::compute(&y)) {
            return Err(format!("matrix {case}: moments differ"));
        }
        let a = aggregate_combo(&x, &all, Normalization::PerBlock).unwrap();
        let b = aggregate_combo(&y, &all, Normalization::PerBlock).unwrap();
        if a.values
            .iter()
            .map(|v| v.to_bits())
            .ne(b.values.iter().map(|v| v.to_bits()))
        {
            return Err(format!("matrix {case}: descriptors differ"));
        }
    }
    Ok("100 matrices, all outputs bit-identical".into())
}

fn vlad_equivalence() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let m = r.random_range(1..=50);
        let k = r.random_range(2..=8);
        let d = r.random_range(1..=16);
        let frames = Array2::from_shape_fn((m, d), |_| r.random_range(-3.0..3.0));
        let centers = if case % 2 == 0 && m >= k {
            kmeanspp_fit(frames.view(), &KMeansParams::new(k, case as u64))
                .map(|c| c.centers)
                .ok()
        } else {
            None
        }
        .unwrap_or_else(|| Array2::from_shape_fn((k, d), |_| r.random_range(-3.0..3.0)));
        let codebook = Codebook {
            centers,
            inertia: 0.0,
            history: vec![],
        };
        for (norm, power) in [
            (VladNormalization::Raw, false),
            (VladNormalization::PowerL2, true),
        ] {
            let got = vlad_encode(&codebook, frames.view(), norm).unwrap().values;
            let want = vlad_reference(codebook.centers.view(), frames.view(), power);
            for (a, b) in got.iter().zip(&want) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let detail = format!("100 instances, worst abs difference {worst:.2e}");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn kmeans_sanity() -> Outcome {
    let dim = 4;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let far: Vec<f64> = (0..dim).map(|j| if j == 0 { 100.0 } else { 0.0 }).collect();
    let mut recovered = 0;
    for seed in 0..100u64 {
        let mut r = rng(1000 + seed);
        let points = Array2::from_shape_fn((200, dim), |(i, j)| {
            let base = if i % 2 == 0 { 0.0 } else { far[j] };
            base + normal.sample(&mut r)
        });
        let cb =
            kmeanspp_fit(points.view(), &KMeansParams::new(2, seed)).map_err(|e| e.to_string())?;
        if cb.history.windows(2).any(|w| w[1] > w[0]) {
            return Err(format!("seed {seed}: inertia increased {:?}", cb.history));
        }
        let near = |target: &[f64]| {
            cb.centers.rows().into_iter().any(|c| {
                c.iter()
                    .zip(target)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
                    < 1.0
            })
        };
        if near(&vec![0.0; dim]) && near(&far) {
            recovered += 1;
        }
    }
    let detail =
        format!("{recovered}/100 seeds recover both means within 1 sd; inertia non-increasing");
    if recovered >= 99 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn svm_correctness() -> Outcome {
    let mut r = rng(4);
    let mut models = 0;
    for case in 0..50 {
        let n = r.random_range(4..=40);
        let (x, y) = separable_problem(&mut r, n, 3, 0.05);
        let model = train_binary(x.view(), &y, &SvmParams::new(KernelKind::Linear, 1e3))
            .map_err(|e| e.to_string())?;
        let correct = (0..n)
            .filter(|&i| y[i] * model.decision(x.row(i)).unwrap() > 0.0)
            .count();
        if correct != n {
            return Err(format!("separable problem {case}: {correct}/{n} correct"));
        }
        check_kkt(&model, x.view(), &y, DEFAULT_TOL + 1e-9)
            .map_err(|e| format!("separable {case}: {e}"))?;
        models += 1;
    }
    let mut worst_gap = 0.0f64;
    for case in 0..30 {
        let n = r.random_range(4..=20);
        let kernel = if case % 2 == 0 {
            KernelKind::Linear
        } else {
            KernelKind::Hik
        };
        let c = [0.1, 1.0, 10.0][case % 3];
        let x = Array2::from_shape_fn((n, 3), |_| r.random_range(0.0..1.0));
        let mut y: Vec<f64> = (0..n)
            .map(|_| if r.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        y[0] = 1.0;
        y[1] = -1.0;
        let model =
            train_binary(x.view(), &y, &SvmParams::new(kernel, c)).map_err(|e| e.to_string())?;
        check_kkt(&model, x.view(), &y, DEFAULT_TOL + 1e-9)
            .map_err(|e| format!("QP case {case}: {e}"))?;
        let q = q_matrix(kernel, x.view(), &y);
        let (_, oracle) = qp_oracle(&q, &y, c, 50_000);
        let ours = dual_objective(&q, &common::alphas(&model, &y));
        worst_gap = worst_gap.max((ours - oracle).abs());
        models += 1;
    }
    let detail = format!(
        "50/50 separable problems fit at C=1e3; KKT holds on {models} models; worst dual objective gap {worst_gap:.2e}"
    );
    if worst_gap <= 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn synthetic_end_to_end() -> Outcome {
    let start = Instant::now();
    let data = generate(SynthKind::Variance, &SynthSpec::default()).map_err(|e| e.to_string())?;
    let manifest = data.manifest();
    let params = SvmParams::new(KernelKind::Linear, 1.0);
    let accuracy = |m: Measure| -> Result<f64, String> {
        let desc = data
            .features
            .iter()
            .map(|x| aggregate_combo(x, &[m], Normalization::PerBlock))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        Ok(lovo_evaluate(&manifest, &desc, &params)
            .map_err(|e| e.to_string())?
            .overall_accuracy)
    };
    let sd = accuracy(Measure::Sd)?;
    let mean = accuracy(Measure::Mean)?;
    let elapsed = start.elapsed();
    let detail = format!("sd {sd:.1}%, mean {mean:.1}%, {elapsed:.2?}");
    if sd >= 95.0 && mean <= 40.0 && elapsed < Duration::from_secs(120) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn frames_vs_accuracy_shape() -> Outcome {
    let data = generate(SynthKind::Mean, &SynthSpec::default()).map_err(|e| e.to_string())?;
    let manifest = data.manifest();
    let params = SvmParams::new(KernelKind::Linear, 1.0);
    let run = || {
        frames_vs_accuracy(
            &manifest,
            &data.features,
            &DEFAULT_N_LIST,
            DEFAULT_TRIALS,
            7,
            &params,
        )
    };
    let a = run().map_err(|e| e.to_string())?;
    let b = run().map_err(|e| e.to_string())?;
    let one = a.point(1).unwrap();
    let thirty = a.point(30).unwrap();
    let detail = format!(
        "N=1 mean {:.1} spread {:.1}; N=30 mean {:.1} spread {:.1}; repeat identical: {}",
        one.mean,
        one.spread(),
        thirty.mean,
        thirty.spread(),
        a == b
    );
    if thirty.mean >= one.mean + 10.0 && thirty.spread() < one.spread() && a == b {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn majority_vote_property() -> Outcome {
    let spec = SynthSpec {
        classes: 4,
        videos_per_class: 6,
        frames: 30,
        dim: 16,
        seed: 0,
    };
    let data = generate(SynthKind::Vote, &spec).map_err(|e| e.to_string())?;
    let manifest = data.manifest();
    let params = SvmParams::new(KernelKind::Linear, 1.0);
    let vote =
        lovo_majority_vote(&manifest, &data.features, 10, &params).map_err(|e| e.to_string())?;
    let single =
        lovo_majority_vote(&manifest, &data.features, 1, &params).map_err(|e| e.to_string())?;
    let detail = format!(
        "10-frame vote {:.1}% vs single center frame {:.1}%",
        vote.overall_accuracy, single.overall_accuracy
    );
    if vote.overall_accuracy > single.overall_accuracy {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn format_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(5);
    for case in 0..1000 {
        let rows = r.random_range(1..=64);
        let cols = r.random_range(1..=64);
        let relu = r.random_bool(0.5);
        let data = Array2::from_shape_fn((rows, cols), |_| loop {
            let mut bits: u32 = r.random();
            if relu {
                bits &= 0x7fff_ffff;
            }
            let v = f32::from_bits(bits);
            if v.is_finite() {
                break v;
            }
        });
        let x = FeatureMatrix::new(data, relu).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{case}.safv"));
        write_feature_file(&path, &x).map_err(|e| e.to_string())?;
        let y = read_feature_file(&path).map_err(|e| e.to_string())?;
        let same = y.post_relu() == relu
            && y.data().dim() == x.data().dim()
            && x.data()
                .iter()
                .zip(y.data())
                .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            return Err(format!("file {case} ({rows}x{cols}) did not round-trip"));
        }
    }
    let corpus = malformed_feature_files();
    if let Some((name, _)) = corpus
        .iter()
        .find(|(_, b)| decode_feature_matrix(b).is_ok())
    {
        return Err(format!("malformed input accepted: {name}"));
    }
    Ok(format!(
        "1000 files bit-exact; {} malformed inputs rejected",
        corpus.len()
    ))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("moment oracle equivalence", moment_oracle),
        ("permutation invariance", permutation_invariance),
        ("VLAD brute-force equivalence", vlad_equivalence),
        ("K-Means++ sanity", kmeans_sanity),
        ("SVM correctness", svm_correctness),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("frames-vs-accuracy shape", frames_vs_accuracy_shape),
        ("majority-vote property", majority_vote_property),
        ("format round-trip", format_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.1?}]", start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{:.1?}]", start.elapsed());
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
