mod common;

use bshap_core::attribution::{
    baseline_shapley, explain, explain_additive, explain_exact, explain_pairwise, explain_triple,
    AttributionPath, AttributionSpace, Grouping,
};
use bshap_core::FeatureSpace;
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn exact_matches_permutation_oracle(
        (k, text, (xd, xa)) in (2usize..=6).prop_flat_map(|k| (Just(k), model(k, k), point_pair(k)))
    ) {
        let m = parse(&text, k);
        let space = FeatureSpace::numbered(k);
        let r = explain_exact(
            &m,
            &space.point(xd.clone()).unwrap(),
            &space.point(xa.clone()).unwrap(),
            &Grouping::singletons(&space),
            AttributionSpace::Link,
        )
        .unwrap();
        let oracle = permutation_shapley(&|x| m.score(x), &xd, &xa, &singletons(k));
        close(&r.contributions, &oracle, 1e-10)?;
    }

    #[test]
    fn grouped_exact_matches_oracle(text in model(5, 3), (xd, xa) in point_pair(5), cut in 1usize..5) {
        let m = parse(&text, 5);
        let space = FeatureSpace::numbered(5);
        let names: Vec<String> = space.names().map(String::from).collect();
        let g = Grouping::from_names(&space, [("a", names[..cut].to_vec()), ("b", names[cut..].to_vec())]).unwrap();
        let r = explain(
            &m,
            &space.point(xd.clone()).unwrap(),
            &space.point(xa.clone()).unwrap(),
            &g,
            AttributionSpace::Link,
        )
        .unwrap();
        prop_assert_eq!(r.path, AttributionPath::Exact);
        let units = vec![(0..cut).collect::<Vec<_>>(), (cut..5).collect()];
        close(&r.contributions, &permutation_shapley(&|x| m.score(x), &xd, &xa, &units), 1e-10)?;
    }

    #[test]
    fn probability_space_matches_oracle(text in model(4, 4), (xd, xa) in point_pair(4)) {
        let m = parse(&text, 4);
        let space = FeatureSpace::numbered(4);
        let r = explain(
            &m,
            &space.point(xd.clone()).unwrap(),
            &space.point(xa.clone()).unwrap(),
            &Grouping::singletons(&space),
            AttributionSpace::Probability,
        )
        .unwrap();
        let oracle = permutation_shapley(&|x| m.probability(x), &xd, &xa, &singletons(4));
        close(&r.contributions, &oracle, 1e-10)?;
    }

    #[test]
    fn closed_forms_match_exact(
        (order, k, text, (xd, xa)) in (1usize..=3, 3usize..=7)
            .prop_flat_map(|(order, k)| (Just(order), Just(k), model(k, order), point_pair(k)))
    ) {
        let m = parse(&text, k);
        let space = FeatureSpace::numbered(k);
        let (d, a) = (space.point(xd).unwrap(), space.point(xa).unwrap());
        let exact = explain_exact(&m, &d, &a, &Grouping::singletons(&space), AttributionSpace::Link).unwrap();
        let fast = match order {
            1 => explain_additive(&m, &d, &a),
            2 => explain_pairwise(&m, &d, &a),
            _ => explain_triple(&m, &d, &a),
        }
        .unwrap();
        close(&fast.contributions, &exact.contributions, 1e-10)?;
        prop_assert!((fast.total - exact.total).abs() <= 1e-10 * exact.total.abs().max(1.0));
    }
}

#[test]
fn raw_game_on_a_closure() {
    let f = bshap_core::model::FnScorer::new(3, |x: &[f64]| {
        x[0] * x[1] + x[2].powi(3) - x[0] * x[1] * x[2]
    });
    let xd = [1.0, -2.0, 0.5];
    let xa = [0.3, 0.7, -1.0];
    let out = baseline_shapley(&f, &xd, &xa, &singletons(3)).unwrap();
    use bshap_core::Scorer;
    let oracle = permutation_shapley(&|x| f.score(x), &xd, &xa, &singletons(3));
    for (a, b) in out.contributions.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12);
    }
}
