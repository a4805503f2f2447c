mod common;

use common::{rng, vlad_reference};
use dynscene::vlad::{
    fit_pca, kmeanspp_fit, vlad_encode, Codebook, KMeansParams, VladNormalization,
};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn codebook(centers: Array2<f64>) -> Codebook {
    Codebook {
        centers,
        inertia: 0.0,
        history: vec![],
    }
}

fn grid(rows: usize, cols: usize, v: Vec<f64>) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols), v).unwrap()
}

proptest! {
    #[test]
    fn encode_matches_double_loop(
        (m, k, d, frames, centers) in (1usize..30, 1usize..6, 1usize..8).prop_flat_map(|(m, k, d)| {
            (
                Just(m),
                Just(k),
                Just(d),
                prop::collection::vec(-5.0f64..5.0, m * d),
                prop::collection::vec(-5.0f64..5.0, k * d),
            )
        }),
        power in any::<bool>(),
    ) {
        let frames = grid(m, d, frames);
        let cb = codebook(grid(k, d, centers));
        let norm = if power { VladNormalization::PowerL2 } else { VladNormalization::Raw };
        let got = vlad_encode(&cb, frames.view(), norm).unwrap().values;
        let want = vlad_reference(cb.centers.view(), frames.view(), power);
        prop_assert_eq!(got.len(), k * d);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn normalized_code_is_unit_or_zero(frames in prop::collection::vec(-3.0f64..3.0, 24)) {
        let frames = grid(8, 3, frames);
        let cb = codebook(grid(2, 3, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]));
        let v = vlad_encode(&cb, frames.view(), VladNormalization::PowerL2).unwrap().values;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_inertia_never_increases(seed in any::<u64>(), k in 2usize..6) {
        let mut r = rng(seed);
        let points = Array2::from_shape_fn((60, 3), |_| r.random_range(-10.0..10.0));
        let cb = kmeanspp_fit(points.view(), &KMeansParams::new(k, seed)).unwrap();
        prop_assert!(!cb.history.is_empty());
        for w in cb.history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", cb.history);
        }
        prop_assert_eq!(cb.centers.nrows(), k);
    }
}

#[test]
fn pca_whitening_gives_identity_covariance() {
    let mut r = rng(4);
    let scales = [5.0, 2.0, 1.0, 0.5, 0.1, 3.0];
    let x = Array2::from_shape_fn((500, 6), |(_, j)| r.random_range(-1.0..1.0) * scales[j]);
    let model = fit_pca(x.view(), 4).unwrap();
    let z = model.project_rows(x.view()).unwrap();
    let n = z.nrows() as f64;
    let mean = z.mean_axis(ndarray::Axis(0)).unwrap();
    let centered = &z - &mean.insert_axis(ndarray::Axis(0));
    let cov = centered.t().dot(&centered) / n;
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!(
                (cov[[i, j]] - want).abs() < 1e-8,
                "cov[{i},{j}] = {}",
                cov[[i, j]]
            );
        }
    }
}

#[test]
fn kmeans_recovers_three_separated_groups() {
    let mut r = rng(8);
    let truth = [[0.0, 0.0], [50.0, 0.0], [0.0, 50.0]];
    let points = Array2::from_shape_fn((300, 2), |(i, j)| {
        truth[i % 3][j] + r.random_range(-1.0..1.0)
    });
    let cb = kmeanspp_fit(points.view(), &KMeansParams::new(3, 1)).unwrap();
    for t in truth {
        let hit = cb
            .centers
            .rows()
            .into_iter()
            .any(|c| ((c[0] - t[0]).powi(2) + (c[1] - t[1]).powi(2)).sqrt() < 1.0);
        assert!(hit, "{t:?} not recovered: {:?}", cb.centers);
    }
}
