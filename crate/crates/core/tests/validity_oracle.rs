mod common;

use common::{naive_calinski_harabasz, naive_davies_bouldin, naive_silhouette, random_partition};
use custvec_core::evaluation::{calinski_harabasz, davies_bouldin, knee_select_k, silhouette};
use proptest::prelude::*;

#[test]
fn indices_match_naive_double_loops() {
    for seed in 0..500 {
        let (pts, a) = random_partition(seed, 7);
        let s = silhouette(&pts, &a).unwrap();
        let ch = calinski_harabasz(&pts, &a).unwrap();
        let db = davies_bouldin(&pts, &a).unwrap();
        assert!((s - naive_silhouette(&pts, &a)).abs() <= 1e-9, "seed {seed}");
        assert!((ch - naive_calinski_harabasz(&pts, &a)).abs() <= 1e-9 * ch.abs().max(1.0), "seed {seed}");
        assert!((db - naive_davies_bouldin(&pts, &a)).abs() <= 1e-9, "seed {seed}");
        assert!((-1.0..=1.0).contains(&s) && ch >= 0.0 && db >= 0.0);
    }
}

#[test]
fn separated_beats_crossed_on_every_index() {
    let pts: Vec<Vec<f64>> = [0.0, 1.0, 10.0, 11.0].iter().map(|&x| vec![x, 0.0, 0.0]).collect();
    let good = [0, 0, 1, 1];
    let bad = [0, 1, 0, 1];
    assert!(silhouette(&pts, &good).unwrap() > silhouette(&pts, &bad).unwrap());
    assert!(calinski_harabasz(&pts, &good).unwrap() > calinski_harabasz(&pts, &bad).unwrap());
    assert!(davies_bouldin(&pts, &good).unwrap() < davies_bouldin(&pts, &bad).unwrap());
}

proptest! {
    #[test]
    fn silhouette_ignores_label_names(seed in 0u64..10_000, offset in 1usize..50) {
        let (pts, a) = random_partition(seed, 7);
        let renamed: Vec<usize> = a.iter().map(|l| (l * 7 + offset) % 1000).collect();
        prop_assert_eq!(silhouette(&pts, &a).unwrap(), silhouette(&pts, &renamed).unwrap());
    }

    #[test]
    fn knee_is_scale_and_shift_invariant(
        drops in prop::collection::vec(0.01f64..100.0, 3..9),
        scale in 1e-3f64..1e3,
        shift in 0usize..20,
    ) {
        let mut curve = Vec::new();
        let mut v = drops.iter().sum::<f64>() + 1.0;
        for d in &drops {
            curve.push(v);
            v -= d;
        }
        let ks: Vec<usize> = (1..=curve.len()).collect();
        let shifted: Vec<usize> = ks.iter().map(|k| k + shift).collect();
        let scaled: Vec<f64> = curve.iter().map(|c| c * scale).collect();
        let base = knee_select_k(&ks, &curve).unwrap();
        prop_assert!(ks.contains(&base.chosen_k));
        prop_assert_eq!(knee_select_k(&ks, &scaled).unwrap().chosen_k, base.chosen_k);
        prop_assert_eq!(knee_select_k(&shifted, &curve).unwrap().chosen_k, base.chosen_k + shift);
    }
}
