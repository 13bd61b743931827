mod common;

use crowd_agg::baselines;
use crowd_agg::eval::groups::sample_virtual_groups;
use crowd_agg::eval::stats::mcnemar_p;
use crowd_agg::features::{acr_features, rcr_features, RcrOptions};
use crowd_agg::io::{assemble, read_answer_key, read_responses_jsonl, write_answer_key, write_responses_jsonl};
use crowd_agg::model::{support_distribution, IngestOptions, Response, ResponseSet};
use crowd_agg::result::AggregationResult;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const RULES: [fn(&ResponseSet) -> AggregationResult; 5] = [
    baselines::majority_rule,
    baselines::weighted_confidence,
    baselines::highest_avg_confidence,
    baselines::surprisingly_popular,
    baselines::surprisingly_popular_out_group,
];

fn response_set() -> impl Strategy<Value = ResponseSet> {
    (any::<u64>(), 2usize..=6, 3usize..=30)
        .prop_map(|(seed, m, n)| common::random_set(&mut ChaCha8Rng::seed_from_u64(seed), m, n))
}

fn reorder(rs: &ResponseSet, order: &[usize]) -> ResponseSet {
    ResponseSet::new(
        rs.answer_set().clone(),
        order.iter().map(|&i| rs.responses()[i].clone()).collect(),
    )
    .unwrap()
}

/// Moves answer `a` to position `perm[a]` in votes and predictions.
fn relabel(rs: &ResponseSet, perm: &[usize]) -> ResponseSet {
    let responses = rs
        .responses()
        .iter()
        .map(|r| {
            let mut ps = vec![0.0; perm.len()];
            for (a, &p) in perm.iter().enumerate() {
                ps[p] = r.predicted_support[a];
            }
            Response {
                vote: perm[r.vote],
                predicted_support: ps,
                ..r.clone()
            }
        })
        .collect();
    ResponseSet::new(rs.answer_set().clone(), responses).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn support_is_a_distribution(rs in response_set()) {
        let s = support_distribution(&rs);
        let total: f64 = (0..rs.m()).map(|a| s.get(a)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((0..rs.m()).all(|a| s.get(a) >= 0.0));
    }

    #[test]
    fn masked_features_read_zero(rs in response_set()) {
        let opts = RcrOptions::default();
        for r in rs.responses() {
            let f = rcr_features(r, &rs, &opts).unwrap();
            for (v, &missing) in f.values().iter().zip(&f.missing) {
                prop_assert!(v.is_finite());
                prop_assert!(!missing || *v == 0.0);
            }
        }
        for a in 0..rs.m() {
            let f = acr_features(a, &rs).unwrap();
            for (v, &missing) in f.values().iter().zip(&f.missing) {
                prop_assert!(v.is_finite());
                prop_assert!(!missing || *v == 0.0);
            }
        }
    }

    #[test]
    fn rules_ignore_response_order(rs in response_set(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..rs.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = reorder(&rs, &order);
        for rule in RULES {
            let (a, b) = (rule(&rs), rule(&shuffled));
            for (x, y) in a.scores.iter().zip(&b.scores) {
                prop_assert!(x == y || (x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rule_scores_follow_answer_relabeling(rs in response_set(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..rs.m()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let moved = relabel(&rs, &perm);
        for rule in RULES {
            let (a, b) = (rule(&rs), rule(&moved));
            for (i, &p) in perm.iter().enumerate() {
                let (x, y) = (a.scores[i], b.scores[p]);
                prop_assert!(x == y || (x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mcnemar_is_a_symmetric_probability(b in 0usize..200, c in 0usize..200) {
        let p = mcnemar_p(b, c);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p, mcnemar_p(c, b));
        // moving one discordant pair toward balance never makes it more significant
        if b > c + 1 {
            prop_assert!(mcnemar_p(b - 1, c + 1) >= p);
        }
    }

    #[test]
    fn jsonl_round_trip_is_lossless(rs in response_set()) {
        let (mut data, mut key) = (Vec::new(), Vec::new());
        write_responses_jsonl(std::slice::from_ref(&rs), &mut data).unwrap();
        write_answer_key(std::slice::from_ref(&rs), &mut key).unwrap();
        let records = read_responses_jsonl(data.as_slice(), "mem").unwrap();
        let key = read_answer_key(key.as_slice(), "key").unwrap();
        let back = assemble(records, &key, &IngestOptions::default(), "mem").unwrap();
        prop_assert_eq!(back, vec![rs]);
    }

    #[test]
    fn groups_are_subsets_of_their_pool(rs in response_set(), size in 1usize..=3, seed in any::<u64>()) {
        let groups = sample_virtual_groups(std::slice::from_ref(&rs), size, 3, seed).unwrap();
        prop_assert_eq!(&groups, &sample_virtual_groups(std::slice::from_ref(&rs), size, 3, seed).unwrap());
        for g in &groups {
            prop_assert_eq!(g.responses.len(), size);
            let mut ids: Vec<&str> = g.responses.responses().iter().map(|r| r.respondent_id.as_str()).collect();
            ids.dedup();
            prop_assert_eq!(ids.len(), size);
            prop_assert!(g.responses.responses().iter().all(|r| rs.responses().contains(r)));
        }
    }
}
