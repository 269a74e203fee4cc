use std::sync::Arc;

use imputebench::impute::{MethodConfig, MiceSettings};
use imputebench::inference::{enumerate_estimands, estimate_all, pool, EstimandKind, EstimandOptions, PointEstimate};
use imputebench::metrics::{asb, quantile_summary, AsbVariant, SUMMARY_PROBS};
use imputebench::missingness::apply_mcar;
use imputebench::rng::SeedStream;
use imputebench::tabular::{CategoricalDecode, Column, Dataset, EncodingMap, Schema, VariableSpec};
use imputebench::trees::{fit_cart, Features, Target, TreeParams};
use proptest::prelude::*;

fn pooled_inputs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..1.0, 1e-6f64..0.05), 2..12)
}

fn mixed(levels: Vec<u32>, reals: Vec<f64>) -> Dataset {
    let schema = Arc::new(
        Schema::new(vec![
            VariableSpec::categorical("c", ["a", "b", "c"]),
            VariableSpec::continuous("x"),
            VariableSpec::binary("b", ["n", "y"]),
        ])
        .unwrap(),
    );
    let bin: Vec<u32> = levels.iter().map(|l| l % 2).collect();
    Dataset::complete(schema, vec![Column::Discrete(levels), Column::Continuous(reals), Column::Discrete(bin)]).unwrap()
}

fn mixed_data() -> impl Strategy<Value = Dataset> {
    (20usize..60).prop_flat_map(|n| {
        (prop::collection::vec(0u32..3, n), prop::collection::vec(-5.0f64..5.0, n)).prop_map(|(l, r)| mixed(l, r))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pooled_variance_bounds(inputs in pooled_inputs()) {
        let est: Vec<PointEstimate> = inputs.iter().map(|&(q, u)| PointEstimate { q, u }).collect();
        let p = pool(&est, 0.95).unwrap();
        let l = est.len() as f64;
        prop_assert!(p.t_total >= p.u_bar);
        prop_assert!(p.t_total >= (1.0 + 1.0 / l) * p.b - 1e-15);
        prop_assert!(p.ci_low <= p.q_bar && p.q_bar <= p.ci_high);
    }

    #[test]
    fn dof_depends_only_on_variance_ratio(inputs in pooled_inputs(), c in 0.1f64..10.0) {
        let est: Vec<PointEstimate> = inputs.iter().map(|&(q, u)| PointEstimate { q, u }).collect();
        let scaled: Vec<PointEstimate> = inputs.iter().map(|&(q, u)| PointEstimate { q: q * c, u: u * c * c }).collect();
        let (a, b) = (pool(&est, 0.95).unwrap(), pool(&scaled, 0.95).unwrap());
        if a.nu.is_finite() {
            prop_assert!((a.nu - b.nu).abs() <= 1e-8 * a.nu.max(1.0));
        }
        prop_assert!((b.q_bar - c * a.q_bar).abs() <= 1e-12 * c.max(1.0));
        prop_assert!((b.t_total.sqrt() - c * a.t_total.sqrt()).abs() <= 1e-10 * c.max(1.0));
    }

    #[test]
    fn asb_is_non_negative_and_zero_at_truth(q in 0.01f64..1.0, devs in prop::collection::vec(-0.1f64..0.1, 1..20)) {
        let q_bars: Vec<f64> = devs.iter().map(|d| q + d).collect();
        for variant in [AsbVariant::AbsoluteOfSum, AsbVariant::SumOfAbsolute] {
            prop_assert!(asb(&q_bars, q, variant).unwrap() >= 0.0);
            prop_assert_eq!(asb(&vec![q; devs.len()], q, variant).unwrap(), 0.0);
        }
        prop_assert!(asb(&q_bars, q, AsbVariant::AbsoluteOfSum).unwrap() <= asb(&q_bars, q, AsbVariant::SumOfAbsolute).unwrap() + 1e-12);
    }

    #[test]
    fn quantile_summary_is_monotone(values in prop::collection::vec(-100.0f64..100.0, 1..50)) {
        let q = quantile_summary(&values, &SUMMARY_PROBS).unwrap();
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(q[0] >= lo && q[4] <= hi);
    }

    #[test]
    fn mcar_keeps_observed_cells(data in mixed_data(), rate in 0.0f64..0.9, seed in any::<u64>()) {
        let amputed = apply_mcar(&data, rate, &mut SeedStream::new(seed).rng()).unwrap();
        prop_assert!(amputed.is_completed_by(&data));
    }

    #[test]
    fn marginal_estimates_sum_to_one(data in mixed_data()) {
        // estimands over a discrete-only view: drop the continuous column
        let schema = Arc::new(Schema::new(vec![
            VariableSpec::categorical("c", ["a", "b", "c"]),
            VariableSpec::binary("b", ["n", "y"]),
        ]).unwrap());
        let view = Dataset::complete(schema, vec![data.column(0).clone(), data.column(2).clone()]).unwrap();
        let estimands = enumerate_estimands(&view, None, 1, &EstimandOptions::default()).unwrap();
        let est = estimate_all(&view, &estimands).unwrap();
        for (e, p) in estimands.iter().zip(&est) {
            prop_assert!((0.0..=1.0).contains(&p.q));
            if e.kind == EstimandKind::Marginal {
                prop_assert!((p.q - e.population_value).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn encoding_round_trips_complete_data(data in mixed_data()) {
        let map = EncodingMap::fit(&data).unwrap();
        let (values, _) = map.encode(&data).unwrap();
        let back = map.decode_into(&values, &data, CategoricalDecode::Argmax, &mut SeedStream::new(0).rng()).unwrap();
        prop_assert!(data.is_completed_by(&back));
        let columns = map.decode(&values).unwrap();
        for (j, col) in columns.iter().enumerate() {
            match (col, data.column(j)) {
                (Column::Discrete(a), Column::Discrete(b)) => prop_assert_eq!(a, b),
                (Column::Continuous(a), Column::Continuous(b)) => {
                    for (x, y) in a.iter().zip(b) {
                        prop_assert!((x - y).abs() < 1e-9);
                    }
                }
                _ => prop_assert!(false),
            }
        }
    }

    #[test]
    fn tree_leaves_partition_rows(data in mixed_data(), min_leaf in 1usize..6) {
        let features = Features::new(vec![data.column(0), data.column(1)], vec![3, 0]).unwrap();
        let target = Target::from_column(data.column(2), 2);
        let rows: Vec<usize> = (0..data.n_rows()).collect();
        let params = TreeParams { min_leaf, ..TreeParams::default() };
        let tree = fit_cart(&features, target, &rows, &params).unwrap();
        let mut seen: Vec<usize> = tree.leaf_rows().concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, rows.clone());
        for leaf in tree.leaf_rows() {
            prop_assert!(leaf.len() >= min_leaf);
        }
        for &r in &rows {
            let id = tree.leaf_for_row(&features, r).unwrap();
            prop_assert!(tree.leaf_rows().iter().any(|l| l.contains(&r)) && id < tree.nodes().len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mice_preserves_observed_cells(data in mixed_data(), seed in any::<u64>()) {
        let amputed = apply_mcar(&data, 0.3, &mut SeedStream::new(seed).rng()).unwrap();
        let method = MethodConfig::MiceCart(MiceSettings { iterations: 2, ..MiceSettings::default() });
        match method.impute(&amputed, 2, &mut SeedStream::new(seed).named("mice").rng()) {
            Ok(out) => {
                for d in &out.datasets {
                    prop_assert!(amputed.is_completed_by(d));
                }
            }
            // a column left with no observed value cannot be imputed
            Err(e) => prop_assert!(matches!(e, imputebench::Error::AllMissing { .. }), "{e}"),
        }
    }
}
