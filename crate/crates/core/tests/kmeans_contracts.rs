use epiclust::metrics::rand_index;
use epiclust::mvclust::{
    kernel_kmeans, kernel_kmeans_fit, kernel_matrix, kmeans, kmeans_fit, InitKind, KMeansConfig, KernelSpec, Metric,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Gaussian-ish mixture: `groups` centres with uniform jitter.
fn mixture() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..=4, 2usize..=4, 6usize..=15).prop_flat_map(|(groups, p, per)| {
        (
            prop::collection::vec(prop::collection::vec(-20.0f64..20.0, p), groups),
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, p), groups * per),
        )
            .prop_map(move |(centres, jitter)| {
                DMatrix::from_fn(groups * per, p, |i, j| centres[i % groups][j] + jitter[i][j])
            })
    })
}

/// Distinct points only: with duplicated rows a distance tie is decided by
/// roundoff, which differs between kernel and coordinate arithmetic.
fn distinct_mixture() -> impl Strategy<Value = DMatrix<f64>> {
    mixture().prop_filter("duplicate rows", |x| {
        let n = x.nrows();
        (0..n).all(|i| (i + 1..n).all(|j| (x.row(i) - x.row(j)).norm() > 1e-3))
    })
}

fn affine() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-2.0f64..2.0, 16),
        prop::collection::vec(-50.0f64..50.0, 4),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn objective_never_increases(x in mixture(), k in 2usize..=5, seed: u64) {
        prop_assume!(k <= x.nrows());
        for init in InitKind::ALL {
            for metric in [Metric::Euclidean, Metric::Mahalanobis] {
                let fit = kmeans_fit(&x, k, init, metric, seed, &KMeansConfig::default()).unwrap();
                prop_assert!(!fit.trace.is_empty());
                for w in fit.trace.windows(2) {
                    prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{init:?} {metric:?}: {:?}", fit.trace);
                }
                let last = *fit.trace.last().unwrap();
                prop_assert!((fit.objective - last).abs() <= 1e-9 * last.max(1.0));
            }
        }
    }

    #[test]
    fn mahalanobis_ignores_invertible_affine_maps(x in mixture(), (a, b) in affine(), k in 2usize..=4, seed: u64) {
        let p = x.ncols();
        let a = DMatrix::from_fn(p, p, |i, j| a[i * 4 + j] + if i == j { 3.0 } else { 0.0 });
        let sv = a.clone().singular_values();
        prop_assume!(sv.min() > 0.2 * sv.max());
        let mut y = &x * a.transpose();
        for mut row in y.row_iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += b[j];
            }
        }
        let px = kmeans(&x, k, InitKind::KMeansPlusPlus, Metric::Mahalanobis, seed).unwrap();
        let py = kmeans(&y, k, InitKind::KMeansPlusPlus, Metric::Mahalanobis, seed).unwrap();
        prop_assert_eq!(rand_index(&px, py.assign()).unwrap(), 1.0);
    }

    #[test]
    fn linear_kernel_equals_euclidean(x in distinct_mixture(), k in 2usize..=4, seed: u64) {
        let gram = kernel_matrix(&x, &KernelSpec::Linear).unwrap();
        for init in [InitKind::Forgy, InitKind::KMeansPlusPlus, InitKind::RandomPartition, InitKind::WardInit] {
            let a = kernel_kmeans(&gram, k, init, seed).unwrap();
            let b = kmeans(&x, k, init, Metric::Euclidean, seed).unwrap();
            prop_assert_eq!(rand_index(&a, b.assign()).unwrap(), 1.0, "{:?}", init);
        }
    }

    #[test]
    fn kernel_objective_never_increases(x in mixture(), k in 2usize..=4, seed: u64) {
        let gram = kernel_matrix(&x, &KernelSpec::Gaussian { sigma: 5.0 }).unwrap();
        let fit = kernel_kmeans_fit(&gram, k, InitKind::KMeansPlusPlus, seed, &KMeansConfig::default()).unwrap();
        for w in fit.trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn same_seed_same_partition(x in mixture(), k in 2usize..=4, seed: u64) {
        for init in InitKind::ALL {
            let a = kmeans(&x, k, init, Metric::Euclidean, seed).unwrap();
            let b = kmeans(&x, k, init, Metric::Euclidean, seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
