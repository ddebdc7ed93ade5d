use proptest::prelude::*;

use prodent::bowen::{OrbitContext, PackingMode};
use prodent::covers::{ball_cover, join, min_subcover_cardinality, refines, Cover};
use prodent::measures::{partition_entropy, FiniteMeasure, FinitePartition, Provenance};
use prodent::spaces::{
    eval_product_metric, iterated_metric_eval, sample_grid, IteratedMetric, Metric, ProductMetric,
    WeightRule,
};
use prodent::systems::{parse_system, SystemSpec};

fn torus_point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, dim)
}

fn mixed_metric() -> ProductMetric {
    ProductMetric::new(
        vec![
            Metric::TorusWrap { dim: 1 },
            Metric::Arctan { dim: 1 },
            Metric::Clamped { dim: 1 },
            Metric::TorusWrap { dim: 1 },
        ],
        WeightRule::Harmonic,
    )
    .unwrap()
}

/// Members over `{0..ground}` as bit masks, padded so every element is
/// covered by the first member that hits it or by the last member.
fn cover_strategy(ground: usize) -> impl Strategy<Value = Cover> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), ground), 1..6).prop_map(
        move |rows| {
            let mut members: Vec<Vec<usize>> = rows
                .iter()
                .map(|r| (0..ground).filter(|&x| r[x]).collect())
                .collect();
            let uncovered: Vec<usize> = (0..ground)
                .filter(|x| !members.iter().any(|m| m.contains(x)))
                .collect();
            members.push(uncovered);
            members.retain(|m| !m.is_empty());
            Cover::new(ground, &members).unwrap()
        },
    )
}

fn exact(a: &Cover) -> usize {
    min_subcover_cardinality(a, None).unwrap().value().unwrap()
}

fn labels_strategy(ground: usize, cells: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..cells, ground)
}

fn finite_system(size: usize) -> impl Strategy<Value = SystemSpec> {
    (
        prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), size),
        prop::collection::vec(0..size, size),
    )
        .prop_map(|(pts, map)| SystemSpec::Finite {
            distances: pts
                .iter()
                .map(|a| {
                    pts.iter()
                        .map(|b| (a.0 - b.0).hypot(a.1 - b.1) / 2f64.sqrt())
                        .collect()
                })
                .collect(),
            map,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_metric_axioms(x in torus_point(4), y in torus_point(4), z in torus_point(4)) {
        let pm = mixed_metric();
        let d = |a: &[f64], b: &[f64]| eval_product_metric(a, b, &pm).unwrap().value;
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
        prop_assert!(d(&x, &y) <= 1.0);
    }

    #[test]
    fn orbit_metric_grows_with_horizon(x in torus_point(2), y in torus_point(2)) {
        let cat = SystemSpec::torus(vec![vec![2, 1], vec![1, 1]]);
        let mut last = 0.0;
        for n in 1..=6 {
            let im = IteratedMetric::canonical(cat.clone(), n).unwrap();
            let d = iterated_metric_eval(&x, &y, &im).unwrap();
            prop_assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn orbit_metric_of_identity_is_the_base(x in torus_point(2), y in torus_point(2)) {
        let id = parse_system("identity:dim=2").unwrap();
        let base = id.canonical_metric().unwrap();
        let im = IteratedMetric::canonical(id, 5).unwrap();
        prop_assert_eq!(iterated_metric_eval(&x, &y, &im).unwrap(), base.eval(&x, &y).unwrap());
    }

    #[test]
    fn join_is_subadditive(a in cover_strategy(10), b in cover_strategy(10)) {
        let ab = join(&a, &b).unwrap();
        prop_assert!(refines(&ab, &a) && refines(&ab, &b));
        prop_assert!(exact(&ab) <= exact(&a) * exact(&b));
    }

    #[test]
    fn refinement_never_lowers_cover_number(a in cover_strategy(10), b in cover_strategy(10)) {
        // A∨B refines A
        let ab = join(&a, &b).unwrap();
        prop_assert!(exact(&ab) >= exact(&a));
    }

    #[test]
    fn cover_json_roundtrip(a in cover_strategy(12)) {
        let text = serde_json::to_string(&a).unwrap();
        let back: Cover = serde_json::from_str(&text).unwrap();
        prop_assert!(back.same_members(&a));
    }

    #[test]
    fn entropy_is_subadditive(
        lc in labels_strategy(16, 4),
        ld in labels_strategy(16, 3),
        w in prop::collection::vec(0.01..1.0f64, 16),
    ) {
        let total: f64 = w.iter().sum();
        let mu = FiniteMeasure::atoms(w.iter().map(|v| v / total).collect()).unwrap();
        let c = FinitePartition::from_labels(&lc, Provenance::Given).unwrap();
        let d = FinitePartition::from_labels(&ld, Provenance::Given).unwrap();
        let joint: Vec<usize> = lc.iter().zip(&ld).map(|(a, b)| a * 3 + b).collect();
        let cd = FinitePartition::from_labels(&joint, Provenance::Given).unwrap();
        let (hc, hd, hcd) = (
            partition_entropy(&mu, &c).unwrap(),
            partition_entropy(&mu, &d).unwrap(),
            partition_entropy(&mu, &cd).unwrap(),
        );
        prop_assert!(hcd <= hc + hd + 1e-12);
        prop_assert!(hcd + 1e-12 >= hc.max(hd));
        prop_assert!(hc <= (c.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn separated_counts_are_monotone(spec in finite_system(9)) {
        let space = sample_grid(&spec, 1.0).unwrap();
        let ctx = OrbitContext::new(&space, &spec, 4).unwrap();
        for eps in [0.1, 0.3] {
            let counts: Vec<usize> = (1..=4)
                .map(|n| ctx.max_separated(n, eps, PackingMode::Exact).unwrap().count)
                .collect();
            prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        }
        for n in 1..=4 {
            let fine = ctx.max_separated(n, 0.1, PackingMode::Exact).unwrap().count;
            let coarse = ctx.max_separated(n, 0.3, PackingMode::Exact).unwrap().count;
            prop_assert!(fine >= coarse);
        }
    }

    #[test]
    fn sandwich_holds(spec in finite_system(10), n in 1usize..=3, eps in 0.05..0.6f64) {
        let space = sample_grid(&spec, 1.0).unwrap();
        let ctx = OrbitContext::new(&space, &spec, 3).unwrap();
        let r = ctx.sandwich_check(n, eps).unwrap();
        prop_assert!(r.tie || r.holds(), "{:?}", r);
    }

    #[test]
    fn ball_covers_refine_as_radius_shrinks(r in 0.02..0.5f64) {
        let space = sample_grid(&SystemSpec::circle_map(1), 1.0 / 64.0).unwrap();
        let metric = space.metric().clone();
        let fine = ball_cover(&space, &metric, r / 2.0).unwrap();
        let coarse = ball_cover(&space, &metric, r).unwrap();
        prop_assert!(refines(&fine, &coarse));
    }

    #[test]
    fn spec_labels_roundtrip(m in 2u32..5, k in 1usize..4, a in -3i64..4, b in -3i64..4) {
        for spec in [
            SystemSpec::full_shift(m),
            SystemSpec::full_shift(m).power(k),
            SystemSpec::torus(vec![vec![a, b], vec![b, a]]),
            SystemSpec::circle_map(a),
        ] {
            prop_assert_eq!(parse_system(&spec.label()).unwrap(), spec.clone());
            let json = serde_json::to_string(&spec).unwrap();
            prop_assert_eq!(parse_system(&json).unwrap(), spec);
        }
    }
}
