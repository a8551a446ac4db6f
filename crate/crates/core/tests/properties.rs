use abstain_rank::calibration::{abstention_rate, pearson, threshold_for_rate};
use abstain_rank::confidence::{
    conf_gap12, conf_max, conf_std, fit_linear, Logistic3Model, ReferencePair,
};
use abstain_rank::dataio::{
    dataset_to_jsonl, read_jsonl, split_indices, synth_generate, SynthConfig,
};
use abstain_rank::eval::{curve_from_values, evaluate_values, random_auc_from_values};
use abstain_rank::metrics::{
    mean_metric, metric, sort_scores, MetricKind, RerankDataset, RerankInstance,
};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..12).prop_flat_map(|k| {
        (
            prop::collection::vec(prop_oneof![(-4.0f64..4.0), (0u8..3).prop_map(f64::from)], k),
            prop::collection::vec(any::<bool>(), k),
            0..k,
        )
            .prop_map(|(z, mut y, i)| {
                y[i] = true;
                (z, y)
            })
    })
}

fn dataset() -> impl Strategy<Value = RerankDataset> {
    (2usize..8).prop_flat_map(|k| {
        let row = (
            prop::collection::vec(-4.0f64..4.0, k),
            prop::collection::vec(any::<bool>(), k),
            0..k,
        );
        prop::collection::vec(row, 2..30).prop_map(|rows| {
            let instances = rows
                .into_iter()
                .enumerate()
                .map(|(i, (z, mut y, p))| {
                    y[p] = true;
                    RerankInstance::from_parts(format!("i{i}"), z, y).unwrap()
                })
                .collect();
            RerankDataset::new(instances).unwrap()
        })
    })
}

/// Moves each element of `v` to the position given by sorting `keys`.
fn permute<T: Clone>(v: &[T], keys: &[u32]) -> Vec<T> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by_key(|&i| {
        keys[i % keys.len()]
            .wrapping_mul(2_654_435_761)
            .wrapping_add(i as u32)
    });
    order.iter().map(|&i| v[i].clone()).collect()
}

fn no_ties(z: &[f64]) -> bool {
    let s = sort_scores(z);
    s.windows(2).all(|w| w[0] < w[1])
}

proptest! {
    #[test]
    fn metrics_in_unit_interval((z, y) in instance()) {
        for kind in MetricKind::ALL {
            let v = metric(kind, &z, &y).unwrap();
            prop_assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn metrics_ignore_document_order_without_ties((z, y) in instance(), keys in prop::collection::vec(any::<u32>(), 1..12)) {
        prop_assume!(no_ties(&z));
        let pairs: Vec<(f64, bool)> = z.iter().copied().zip(y.iter().copied()).collect();
        let shuffled = permute(&pairs, &keys);
        let (pz, py): (Vec<f64>, Vec<bool>) = shuffled.into_iter().unzip();
        for kind in MetricKind::ALL {
            prop_assert_eq!(metric(kind, &z, &y).unwrap(), metric(kind, &pz, &py).unwrap());
        }
    }

    #[test]
    fn reference_free_confidences_ignore_order(z in prop::collection::vec(-5.0f64..5.0, 2..15), keys in prop::collection::vec(any::<u32>(), 1..15)) {
        let p = permute(&z, &keys);
        prop_assert_eq!(conf_max(&z), conf_max(&p));
        prop_assert_eq!(conf_gap12(&z), conf_gap12(&p));
        prop_assert!((conf_std(&z) - conf_std(&p)).abs() <= 1e-12);
    }

    #[test]
    fn gap_and_std_are_shift_invariant(z in prop::collection::vec(-5.0f64..5.0, 2..15), c in -10.0f64..10.0) {
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        prop_assert!((conf_gap12(&z) - conf_gap12(&shifted)).abs() <= 1e-9);
        prop_assert!((conf_std(&z) - conf_std(&shifted)).abs() <= 1e-9);
        prop_assert!(conf_gap12(&z) >= 0.0 && conf_std(&z) >= 0.0);
    }

    #[test]
    fn logistic_probabilities_sum_to_one(
        weights in prop::collection::vec(-3.0f64..3.0, 15),
        z in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        let mut model = Logistic3Model::zeros(4);
        for (c, row) in model.weights.iter_mut().enumerate() {
            row.copy_from_slice(&weights[c * 5..c * 5 + 5]);
        }
        let p = model.probabilities(&z).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn ridge_prediction_is_finite_and_reproducible(
        rows in prop::collection::vec((prop::collection::vec(-3.0f64..3.0, 3), 0.0f64..1.0), 2..40),
    ) {
        let pairs: Vec<ReferencePair> = rows
            .iter()
            .map(|(x, y)| ReferencePair::new(sort_scores(x), *y).unwrap())
            .collect();
        let a = fit_linear(&pairs, 0.1).unwrap();
        let b = fit_linear(&pairs, 0.1).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.intercept.is_finite() && a.coefficients.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn curve_starts_at_mean_metric(ds in dataset(), conf_seed in prop::collection::vec(-1.0f64..1.0, 30)) {
        for kind in MetricKind::ALL {
            let m = ds.metric_values(kind).unwrap();
            let c: Vec<f64> = (0..m.len()).map(|i| conf_seed[i]).collect();
            let curve = curve_from_values(&c, &m).unwrap();
            prop_assert_eq!(curve.points()[0].performance, mean_metric(&ds, kind).unwrap());
            prop_assert_eq!(curve.len(), m.len());
            for (j, p) in curve.points().iter().enumerate() {
                prop_assert_eq!(p.abstention_rate, j as f64 / m.len() as f64);
            }
        }
    }

    #[test]
    fn auc_is_bounded_by_oracle(ds in dataset(), conf_seed in prop::collection::vec(-1.0f64..1.0, 30)) {
        let m = ds.metric_values(MetricKind::Ap).unwrap();
        prop_assume!(m.iter().any(|v| *v != m[0]));
        let c: Vec<f64> = (0..m.len()).map(|i| conf_seed[i]).collect();
        let rep = evaluate_values(&c, &m, MetricKind::Ap, "t").unwrap();
        prop_assert!(rep.auc <= rep.auc_oracle + 1e-12);
        prop_assert!(rep.nauc <= 1.0 + 1e-9);
        prop_assert_eq!(rep.auc_random, random_auc_from_values(&m).unwrap());
    }

    #[test]
    fn rate_threshold_is_monotone_and_tight(
        conf in prop::collection::vec(-3.0f64..3.0, 1..80),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let t_lo = threshold_for_rate(&conf, lo, None).unwrap();
        let t_hi = threshold_for_rate(&conf, hi, None).unwrap();
        prop_assert!(t_lo.tau <= t_hi.tau);
        prop_assert!(t_lo.expected_rate <= t_hi.expected_rate);
        // achieved rate never undershoots the target
        prop_assert!(t_hi.expected_rate + 1e-12 >= hi);
        prop_assert_eq!(abstention_rate(&conf, t_hi.tau), t_hi.expected_rate);
    }

    #[test]
    fn pearson_is_affine_invariant(
        xs in prop::collection::vec(-5.0f64..5.0, 3..40),
        a in 0.1f64..10.0,
        b in -10.0f64..10.0,
    ) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * x + i as f64).collect();
        let r = match pearson(&xs, &ys) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        let mapped: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        prop_assert!((pearson(&mapped, &ys).unwrap() - r).abs() <= 1e-9);
        prop_assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn jsonl_round_trip(ds in dataset()) {
        let text = dataset_to_jsonl(&ds);
        let back = read_jsonl(text.as_bytes()).unwrap();
        prop_assert_eq!(&back, &ds);
    }

    #[test]
    fn split_partitions_indices(n in 2usize..500, ratio in 0.05f64..0.95, seed in any::<u64>()) {
        if let Ok((r, t)) = split_indices(n, ratio, seed) {
            prop_assert!(!r.is_empty() && !t.is_empty());
            let mut all: Vec<usize> = r.iter().chain(&t).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(split_indices(n, ratio, seed).unwrap(), (r, t));
        }
    }
}

#[test]
fn random_auc_matches_shuffled_expectation() {
    use abstain_rank::dataio::seeded_rng;
    use rand::seq::SliceRandom;

    let m: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
    let mut rng = seeded_rng(11, 0);
    let mut conf: Vec<f64> = (0..m.len()).map(|i| i as f64).collect();
    let shuffles = 4000;
    let mut total = 0.0;
    for _ in 0..shuffles {
        conf.shuffle(&mut rng);
        total += abstain_rank::eval::auc(&curve_from_values(&conf, &m).unwrap()).unwrap();
    }
    let expected = random_auc_from_values(&m).unwrap();
    assert!((total / shuffles as f64 - expected).abs() <= 0.01);
}

fn synth(n: usize, separability: f64, seed: u64) -> RerankDataset {
    synth_generate(&SynthConfig {
        n_instances: n,
        k: 10,
        separability,
        noise_sigma: 1.0,
        positives_range: (1, 5),
        rng_seed: seed,
    })
    .unwrap()
}

#[test]
fn uninformative_synth_gives_null_nauc() {
    use abstain_rank::confidence::Method;
    use abstain_rank::eval::evaluate;

    let mut total = 0.0;
    let runs = 50;
    for seed in 0..runs {
        let ds = synth(400, 0.0, seed);
        let (r, t) = split_indices(ds.len(), 0.5, seed).unwrap();
        let model = Method::linear()
            .fit(&ds.subset(&r).unwrap(), MetricKind::Ap)
            .unwrap();
        total += evaluate(&ds.subset(&t).unwrap(), &model, MetricKind::Ap)
            .unwrap()
            .nauc;
    }
    assert!(
        (total / runs as f64).abs() <= 0.05,
        "mean nauc {}",
        total / runs as f64
    );
}

#[test]
fn well_separated_synth_is_nearly_perfect() {
    let ds = synth(500, 1000.0, 3);
    assert!(mean_metric(&ds, MetricKind::Ap).unwrap() > 0.99);
}
