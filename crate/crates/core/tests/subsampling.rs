use std::collections::HashSet;

use heatfit::geometry::dist;
use heatfit::subsample::{subsample, subsample_replay, verify_separation, ChartMode, SubsampleConfig};
use heatfit::{PointCloud, SpatialIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(n: usize, dim: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::from_flat(dim, (0..n * dim).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_invariants(n in 1usize..200, seed in any::<u64>(), r in 0.05f64..0.5, eps in 0.05f64..0.95, ambient in any::<bool>()) {
        let cloud = random_cloud(n, 2, seed);
        let mut cfg = SubsampleConfig::new(r, eps, 2, seed).unwrap();
        if ambient {
            cfg.chart_mode = ChartMode::Ambient;
        }
        let index = SpatialIndex::build(&cloud).unwrap();
        let res = subsample(&cloud, &cfg, &index).unwrap();

        let mut order = res.order.clone();
        order.sort_unstable();
        prop_assert_eq!(order, (0..n).collect::<Vec<_>>());
        let unique: HashSet<_> = res.accepted.iter().collect();
        prop_assert_eq!(unique.len(), res.accepted.len());
        prop_assert!(!res.accepted.is_empty());

        // every point lies within r of some batch center
        for i in 0..n {
            let covered = res.batch_centers().iter().any(|&c| dist(cloud.point(i), cloud.point(c)) <= r);
            prop_assert!(covered, "point {} not covered", i);
        }

        // same-batch accepted pairs respect the single-reference bound in ambient mode
        if ambient {
            let bound = cfg.separation_bound();
            for b in &res.batches {
                let acc: Vec<usize> = b.candidates.iter().copied().filter(|i| res.accepted.contains(i)).collect();
                for (x, &i) in acc.iter().enumerate() {
                    for &j in &acc[x + 1..] {
                        prop_assert!(dist(cloud.point(i), cloud.point(j)) >= bound * (1.0 - 1e-9));
                    }
                }
            }
        }

        let again = subsample(&cloud, &cfg, &index).unwrap();
        prop_assert_eq!(&again, &res);
        let replay = subsample_replay(&cloud, &cfg, &index, &res.batch_centers()).unwrap();
        prop_assert_eq!(&replay, &res);
    }

    #[test]
    fn higher_threshold_never_accepts_more(seed in any::<u64>(), eps in 0.05f64..0.9, bump in 0.01f64..0.5) {
        let cloud = random_cloud(300, 2, seed);
        let index = SpatialIndex::build(&cloud).unwrap();
        let mut lo = SubsampleConfig::new(0.2, eps, 2, seed).unwrap();
        lo.chart_mode = ChartMode::Ambient;
        let base = subsample(&cloud, &lo, &index).unwrap();
        let hi = SubsampleConfig { threshold: (eps + bump).min(0.99), ..lo };
        let raised = subsample_replay(&cloud, &hi, &index, &base.batch_centers()).unwrap();
        prop_assert!(raised.accepted.len() <= base.accepted.len(), "{} > {}", raised.accepted.len(), base.accepted.len());
    }
}

#[test]
fn separation_on_dense_line() {
    let rows: Vec<[f64; 1]> = (0..2001).map(|i| [i as f64 * 0.0005]).collect();
    let cloud = PointCloud::from_rows(&rows).unwrap();
    let mut cfg = SubsampleConfig::new(0.1, 0.3, 1, 3).unwrap();
    cfg.chart_mode = ChartMode::Ambient;
    let res = subsample(&cloud, &cfg, &SpatialIndex::build(&cloud).unwrap()).unwrap();
    let sep = verify_separation(&cloud, &res.accepted).unwrap();
    assert!(sep > 0.0);
    assert!(res.accepted.len() < 2001 / 4);
}
