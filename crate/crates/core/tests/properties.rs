//! Property-based invariants for the pipeline's statistical and text
//! plumbing: rank statistics must respect monotone transforms, correlation
//! must be symmetric, aggregation must conserve probability mass, and the
//! tokenizer must be idempotent.

use proptest::prelude::*;

use emergence_core::align::{lag_correlation, IndicatorSeries};
use emergence_core::corpus::{build_corpus, tokenize, PreprocessConfig, RawDocument};
use emergence_core::lda::DenseMatrix;
use emergence_core::synthgen::{greedy_cosine_match, term_strings, top_n_overlap};
use emergence_core::trend::{aggregate, mann_kendall, sen_slope, SeriesPoint, TopicSeries};

/// Integer-lattice values: ties occur often and all the affine transforms
/// used below stay exact in floating point.
fn lattice_series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20i32..=20, 4..=40)
        .prop_map(|v| v.into_iter().map(f64::from).collect())
}

fn topic_series(values: Vec<f64>) -> TopicSeries {
    TopicSeries {
        topic: 0,
        points: values
            .into_iter()
            .enumerate()
            .map(|(t, value)| SeriesPoint {
                period: t as i32,
                value,
                n_docs: 1,
            })
            .collect(),
    }
}

proptest! {
    /// S, tau, and the p-value are rank statistics: any strictly increasing
    /// transform of the values must leave them untouched. Eighths-lattice
    /// affine maps are exact in f64, so the match is bitwise.
    #[test]
    fn mann_kendall_is_invariant_under_monotone_transforms(
        values in lattice_series(),
        a in 1i32..=40,
        b in -40i32..=40,
    ) {
        let base = mann_kendall(&values).unwrap();

        let affine: Vec<f64> = values
            .iter()
            .map(|&x| f64::from(a) / 8.0 * x + f64::from(b) / 8.0)
            .collect();
        let got = mann_kendall(&affine).unwrap();
        prop_assert_eq!(got.s, base.s);
        prop_assert_eq!(got.tau, base.tau);
        prop_assert_eq!(got.var_s, base.var_s);
        prop_assert_eq!(got.z, base.z);
        prop_assert_eq!(got.p_value, base.p_value);

        let exp: Vec<f64> = values.iter().map(|&x| (x / 10.0).exp()).collect();
        let got = mann_kendall(&exp).unwrap();
        prop_assert_eq!(got.s, base.s);
        prop_assert_eq!(got.tau, base.tau);
        prop_assert_eq!(got.p_value, base.p_value);
    }

    /// Reversing time negates S, tau, and z but keeps the variance, the
    /// p-value, and degeneracy.
    #[test]
    fn mann_kendall_reversal_antisymmetry(values in lattice_series()) {
        let forward = mann_kendall(&values).unwrap();
        let reversed: Vec<f64> = values.iter().rev().copied().collect();
        let backward = mann_kendall(&reversed).unwrap();
        prop_assert_eq!(backward.s, -forward.s);
        prop_assert_eq!(backward.tau, -forward.tau);
        prop_assert_eq!(backward.var_s, forward.var_s);
        prop_assert_eq!(backward.z, -forward.z);
        prop_assert_eq!(backward.p_value, forward.p_value);
        prop_assert_eq!(backward.degenerate, forward.degenerate);
    }

    /// Basic ranges that must hold for any input.
    #[test]
    fn mann_kendall_outputs_stay_in_range(values in lattice_series()) {
        let mk = mann_kendall(&values).unwrap();
        prop_assert!((-1.0..=1.0).contains(&mk.tau));
        prop_assert!((0.0..=1.0).contains(&mk.p_value));
        prop_assert!(mk.var_s >= 0.0);
        prop_assert_eq!(mk.z > 0.0, mk.s > 1);
        prop_assert_eq!(mk.z < 0.0, mk.s < -1);
        prop_assert_eq!(mk.tau.signum() as i64 * mk.s.signum(), mk.s.signum().pow(2));
    }

    /// Scaling the values by a positive constant scales the slope and both
    /// confidence bounds by the same constant, and the point estimate always
    /// sits inside its own interval.
    #[test]
    fn sen_slope_scales_linearly(
        values in lattice_series(),
        k in 1i32..=40,
    ) {
        let n = values.len();
        let periods: Vec<i32> = (0..n as i32).collect();
        let var_s = mann_kendall(&values).unwrap().var_s;
        let base = sen_slope(&periods, &values, 0.95, var_s).unwrap();
        prop_assert!(base.ci_low <= base.slope && base.slope <= base.ci_high);

        let a = f64::from(k) / 8.0;
        let scaled_vals: Vec<f64> = values.iter().map(|&x| a * x).collect();
        let scaled = sen_slope(&periods, &scaled_vals, 0.95, var_s).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
        prop_assert!(close(scaled.slope, a * base.slope));
        prop_assert!(close(scaled.ci_low, a * base.ci_low));
        prop_assert!(close(scaled.ci_high, a * base.ci_high));
    }

    /// Correlating topic against indicator at lag L must equal correlating
    /// indicator against topic at lag -L: same pairs, symmetric statistic.
    #[test]
    fn lag_profile_is_symmetric_under_role_swap(
        a_vals in prop::collection::vec(-50i32..=50, 12..=30),
        b_vals in prop::collection::vec(-50i32..=50, 12..=30),
        max_lag in 0i32..=6,
    ) {
        let a: Vec<f64> = a_vals.iter().map(|&v| f64::from(v) / 4.0).collect();
        let b: Vec<f64> = b_vals.iter().map(|&v| f64::from(v) / 4.0).collect();

        let topic_a = topic_series(a.clone());
        let ind_b = IndicatorSeries {
            name: "b".into(),
            points: b.iter().enumerate().map(|(t, &v)| (t as i32, v)).collect(),
        };
        let topic_b = topic_series(b);
        let ind_a = IndicatorSeries {
            name: "a".into(),
            points: a.iter().enumerate().map(|(t, &v)| (t as i32, v)).collect(),
        };

        let ab = lag_correlation(&topic_a, &ind_b, max_lag, 3);
        let ba = lag_correlation(&topic_b, &ind_a, max_lag, 3);
        match (ab, ba) {
            (Ok(ab), Ok(ba)) => {
                prop_assert_eq!(ab.profile.len(), ba.profile.len());
                for p in &ab.profile {
                    let q = ba.profile.iter().find(|q| q.lag == -p.lag).unwrap();
                    prop_assert_eq!(q.n, p.n);
                    prop_assert!((q.corr - p.corr).abs() < 1e-12,
                        "lag {}: {} vs {}", p.lag, p.corr, q.corr);
                }
                prop_assert!((ab.max_corr - ba.max_corr).abs() < 1e-12);
            }
            (Err(_), Err(_)) => {}
            (ab, ba) => prop_assert!(false, "asymmetric outcome: {ab:?} vs {ba:?}"),
        }
    }

    /// Per-period mean proportions over topics must sum to one wherever the
    /// document proportions do.
    #[test]
    fn aggregate_conserves_probability_mass(
        raw in prop::collection::vec(
            (prop::collection::vec(1u32..=100, 3), 0i32..=5),
            1..=40,
        ),
    ) {
        let rows: Vec<Vec<f64>> = raw
            .iter()
            .map(|(w, _)| {
                let total: u32 = w.iter().sum();
                w.iter().map(|&x| f64::from(x) / f64::from(total)).collect()
            })
            .collect();
        let periods: Vec<i32> = raw.iter().map(|&(_, p)| p).collect();
        let theta = DenseMatrix::from_rows(&rows);

        let series = aggregate(&theta, &periods).unwrap();
        prop_assert_eq!(series.len(), 3);
        let grid = series[0].periods();
        let mut expect = periods.clone();
        expect.sort_unstable();
        expect.dedup();
        prop_assert_eq!(&grid, &expect);

        for (i, &period) in grid.iter().enumerate() {
            let total: f64 = series.iter().map(|s| s.points[i].value).sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "period {period}: {total}");
            let docs_here = periods.iter().filter(|&&p| p == period).count();
            for s in &series {
                prop_assert_eq!(s.points[i].n_docs, docs_here);
                prop_assert_eq!(s.points[i].period, period);
            }
        }
    }

    /// Tokenizing already-tokenized text changes nothing, for both the
    /// default and the passthrough profiles.
    #[test]
    fn tokenize_is_idempotent(text in ".{0,200}") {
        for config in [PreprocessConfig::default(), PreprocessConfig::passthrough()] {
            let once = tokenize(&text, &config);
            let again = tokenize(&once.join(" "), &config);
            prop_assert_eq!(once, again);
        }
    }

    /// Every generated token lands in the matrix: nothing is pruned under
    /// the passthrough profile and totals are conserved; documents with no
    /// tokens are dropped by id in input order.
    #[test]
    fn passthrough_corpus_conserves_tokens(
        docs in prop::collection::vec(prop::collection::vec(0usize..15, 0..30), 1..20),
    ) {
        let terms = term_strings(15);
        let raw: Vec<RawDocument> = docs
            .iter()
            .enumerate()
            .map(|(i, toks)| RawDocument {
                id: format!("d{i}"),
                period: 2000 + (i % 4) as i32,
                text: toks.iter().map(|&t| terms[t].clone()).collect::<Vec<_>>().join(" "),
            })
            .collect();
        let total: usize = docs.iter().map(Vec::len).sum();
        prop_assume!(total > 0);

        let built = build_corpus(&raw, &PreprocessConfig::passthrough()).unwrap();
        prop_assert_eq!(built.matrix.total_tokens(), total);
        let expect_dropped: Vec<String> = docs
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_empty())
            .map(|(i, _)| format!("d{i}"))
            .collect();
        prop_assert_eq!(built.dropped, expect_dropped);
        prop_assert_eq!(built.matrix.n_docs() + docs.iter().filter(|t| t.is_empty()).count(), docs.len());
    }

    /// Greedy matching always returns a permutation with cosines in [0, 1]
    /// for non-negative rows, and top-n overlap is symmetric and bounded.
    #[test]
    fn matching_helpers_behave(
        est in prop::collection::vec(prop::collection::vec(1u32..100, 6), 4),
        truth in prop::collection::vec(prop::collection::vec(1u32..100, 6), 4),
        n in 1usize..=6,
    ) {
        let to_rows = |m: &Vec<Vec<u32>>| -> Vec<Vec<f64>> {
            m.iter()
                .map(|r| r.iter().map(|&x| f64::from(x)).collect())
                .collect()
        };
        let est_m = DenseMatrix::from_rows(&to_rows(&est));
        let truth_m = DenseMatrix::from_rows(&to_rows(&truth));
        let matches = greedy_cosine_match(&est_m, &truth_m);

        let mut est_seen: Vec<usize> = matches.iter().map(|m| m.estimated).collect();
        let mut truth_seen: Vec<usize> = matches.iter().map(|m| m.truth).collect();
        est_seen.sort_unstable();
        truth_seen.sort_unstable();
        prop_assert_eq!(est_seen, (0..4).collect::<Vec<_>>());
        prop_assert_eq!(truth_seen, (0..4).collect::<Vec<_>>());
        for m in &matches {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&m.cosine));
        }

        let a = &to_rows(&est)[0];
        let b = &to_rows(&truth)[0];
        let ab = top_n_overlap(a, b, n);
        prop_assert!(ab <= n);
        prop_assert_eq!(ab, top_n_overlap(b, a, n));
        prop_assert_eq!(top_n_overlap(a, a, n), n.min(a.len()));
    }
}
