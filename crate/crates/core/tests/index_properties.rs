use epiclust::indexes::{snap_ties, IndexTable};
use epiclust::{compute_index, enumerate_combos, FunctionalSample, Grid, IndexKind, SmoothedTriple};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn sample(values: DMatrix<f64>) -> FunctionalSample {
    let m = values.ncols();
    FunctionalSample::new(values, Grid::uniform(0.0, 1.0, m).unwrap(), None).unwrap()
}

/// Samples whose columns have no repeated values.
fn tie_free() -> impl Strategy<Value = FunctionalSample> {
    (3usize..=30, 5usize..=50).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec(-1e3f64..1e3, n), m).prop_filter_map(
            "tied column",
            move |cols| {
                for c in &cols {
                    let mut s = c.clone();
                    s.sort_by(f64::total_cmp);
                    if s.windows(2).any(|w| w[0] == w[1]) {
                        return None;
                    }
                }
                Some(sample(DMatrix::from_fn(n, m, |i, j| cols[j][i])))
            },
        )
    })
}

fn brute_mei(s: &FunctionalSample) -> Vec<f64> {
    let x = s.values();
    let (n, m) = x.shape();
    (0..n)
        .map(|i| {
            let mut above = 0usize;
            for j in 0..n {
                for t in 0..m {
                    if x[(j, t)] >= x[(i, t)] {
                        above += 1;
                    }
                }
            }
            1.0 - above as f64 / (n * m) as f64
        })
        .collect()
}

fn brute_ei_hi(s: &FunctionalSample) -> (Vec<f64>, Vec<f64>) {
    let x = s.values();
    let (n, m) = x.shape();
    let n_f = n as f64;
    let mut ei = Vec::new();
    let mut hi = Vec::new();
    for i in 0..n {
        let above = (0..n).filter(|&j| (0..m).all(|t| x[(j, t)] >= x[(i, t)])).count();
        let below = (0..n).filter(|&j| (0..m).all(|t| x[(j, t)] <= x[(i, t)])).count();
        ei.push(1.0 - above as f64 / n_f);
        hi.push(below as f64 / n_f);
    }
    (ei, hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn mhi_minus_mei_is_one_over_n(s in tie_free()) {
        let mei = compute_index(IndexKind::Mei, &s);
        let mhi = compute_index(IndexKind::Mhi, &s);
        let n = s.n_curves() as f64;
        for (a, b) in mei.iter().zip(&mhi) {
            prop_assert!((b - a - 1.0 / n).abs() <= 1e-12);
        }
    }

    #[test]
    fn mei_matches_brute_force(s in tie_free()) {
        prop_assert_eq!(compute_index(IndexKind::Mei, &s), brute_mei(&s));
    }

    #[test]
    fn ei_hi_match_brute_force(s in tie_free()) {
        let (ei, hi) = brute_ei_hi(&s);
        prop_assert_eq!(compute_index(IndexKind::Ei, &s), ei);
        prop_assert_eq!(compute_index(IndexKind::Hi, &s), hi);
    }

    #[test]
    fn indexes_lie_in_unit_interval(s in tie_free()) {
        for kind in [IndexKind::Ei, IndexKind::Hi, IndexKind::Mei, IndexKind::Mhi] {
            for v in compute_index(kind, &s) {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    /// Offsets `o_0 < o_1 < ...` added to one base curve give a fully ordered
    /// sample; the curve of rank `r` (0 = lowest) has EI = MEI = r / n and
    /// HI = MHI = (r + 1) / n.
    #[test]
    fn nested_curves_follow_rank_closed_forms(
        base in prop::collection::vec(-5.0f64..5.0, 5..40),
        perm in Just(()).prop_perturb(|_, mut rng| {
            let mut p: Vec<usize> = (0..12).collect();
            for i in (1..p.len()).rev() {
                p.swap(i, rng.random_range(0..=i));
            }
            p
        }),
        n in 2usize..=12,
    ) {
        let order: Vec<usize> = perm.into_iter().filter(|&r| r < n).collect();
        let m = base.len();
        let x = DMatrix::from_fn(n, m, |i, t| base[t] + 10.0 * order[i] as f64);
        let s = sample(x);
        let nf = n as f64;
        let ei = compute_index(IndexKind::Ei, &s);
        let hi = compute_index(IndexKind::Hi, &s);
        let mei = compute_index(IndexKind::Mei, &s);
        let mhi = compute_index(IndexKind::Mhi, &s);
        for i in 0..n {
            let r = order[i] as f64;
            prop_assert_eq!(ei[i], 1.0 - (nf - r) / nf);
            prop_assert_eq!(hi[i], (r + 1.0) / nf);
            prop_assert_eq!(mei[i], 1.0 - ((nf - r) * m as f64) / (nf * m as f64));
            prop_assert_eq!(mhi[i], ((r + 1.0) * m as f64) / (nf * m as f64));
        }
    }

    /// Index values depend only on the pointwise ordering of curves.
    #[test]
    fn indexes_invariant_under_monotone_transform(s in tie_free()) {
        let t = sample(s.values().map(|v| v.atan() * 3.0 + 1.0));
        for kind in [IndexKind::Ei, IndexKind::Hi, IndexKind::Mei] {
            prop_assert_eq!(compute_index(kind, &s), compute_index(kind, &t));
        }
    }

    #[test]
    fn snapping_leaves_tie_free_samples_alone(s in tie_free()) {
        let scale = s.values().amax();
        let gap = s.values().column_iter().map(|c| {
            let mut v: Vec<f64> = c.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
        }).fold(f64::INFINITY, f64::min);
        prop_assume!(gap > 1e-6 * scale);
        prop_assert_eq!(snap_ties(&s), s);
    }
}

#[test]
fn snapping_merges_roundoff_ties() {
    let a = [0.3, 1.0, 2.0, 1.5, 0.7];
    let x = DMatrix::from_fn(3, 5, |i, t| match i {
        0 => a[t],
        1 => a[t] + if t % 2 == 0 { 1e-13 } else { -1e-13 },
        _ => a[t] + 1.0,
    });
    let s = sample(x);
    let snapped = snap_ties(&s);
    assert_eq!(snapped.values().row(0), snapped.values().row(1));
    let ei = compute_index(IndexKind::Ei, &snapped);
    assert_eq!(ei[0], ei[1]);
    // Without snapping the two copies would not bound each other.
    let raw = compute_index(IndexKind::Ei, &s);
    assert_ne!(raw[0], ei[0]);
}

#[test]
fn table_features_match_direct_assembly() {
    let x = DMatrix::from_fn(8, 12, |i, t| ((i * 7 + t * 3) % 11) as f64 * 0.37 + (t as f64 * 0.4 + i as f64).sin());
    let data = sample(x.clone());
    let d1 = sample(x.map(|v| v.cos()));
    let d2 = sample(x.map(|v| v * v - 1.0));
    let triple = SmoothedTriple { data, d1, d2 };
    let table = IndexTable::new(&triple);
    for combo in enumerate_combos() {
        let direct = epiclust::assemble_features(&triple, &combo);
        assert_eq!(table.features(&combo), direct, "{combo}");
    }
}
