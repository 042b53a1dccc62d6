use edgecache::caching::{
    cache_update, gibbs_eviction_distribution, map_policy, mixed_policy, random_replacement,
    time_average_update, update_cost, CacheState, FronthaulModel,
};
use edgecache::clustering::ClassPartition;
use edgecache::learning::{bg_distribution, learner_step, LearnerState, LearningSchedule};
use edgecache::net::{generate_deployment, nearest_cached_sbs, Coverage};
use edgecache::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn on_simplex(p: &[f64]) -> bool {
    p.iter().all(|&x| x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-9
}

fn partition(labels: &[usize]) -> ClassPartition {
    ClassPartition::from_labels(labels)
}

fn cheap_fronthaul() -> FronthaulModel<f64> {
    FronthaulModel::equal_split(1e9, 4, 1.0, 50, 1e6, 1.0).unwrap()
}

proptest! {
    #[test]
    fn learner_policy_stays_on_simplex(
        steps in prop::collection::vec((0usize..4, -5.0f64..5.0), 1..200),
        xi in 0.001f64..10.0,
    ) {
        let sched = LearningSchedule::default();
        let mut s = LearnerState::new(4, xi).unwrap();
        for (a, u) in steps {
            s = learner_step(&s, a, u, &sched).unwrap();
            prop_assert!(on_simplex(&s.policy));
        }
    }

    #[test]
    fn learner_step_is_pure(a in 0usize..3, u in -1.0f64..1.0, t in 1u64..1000) {
        let sched = LearningSchedule::default();
        let mut s = LearnerState::new(3, 0.05).unwrap();
        s.step = t;
        s.regret_est = vec![0.1, -0.3, 0.2];
        let x = learner_step(&s, a, u, &sched).unwrap();
        let y = learner_step(&s, a, u, &sched).unwrap();
        prop_assert_eq!(x, y);
        prop_assert_eq!(s.step, t);
    }

    #[test]
    fn bg_shift_invariance_for_positive_regrets(
        r in prop::collection::vec(0.0f64..2.0, 2..6),
        c in 0.0f64..3.0,
        xi in 0.1f64..5.0,
    ) {
        let shifted: Vec<f64> = r.iter().map(|x| x + c).collect();
        let a = bg_distribution(&r, xi).unwrap();
        let b = bg_distribution(&shifted, xi).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_stays_on_simplex(p in simplex(5), q in simplex(5), beta in 0.0f64..=1.0) {
        prop_assert!(on_simplex(&mixed_policy(&p, &q, beta).unwrap()));
    }

    #[test]
    fn mapped_policy_stays_on_simplex(
        from in prop::collection::vec(0usize..4, 12),
        to in prop::collection::vec(0usize..3, 12),
        seed in 0u64..1000,
    ) {
        let (from, to) = (partition(&from), partition(&to));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..from.num_classes()).map(|_| rand::Rng::random::<f64>(&mut rng) + 0.01).collect();
        let total: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|x| x / total).collect();
        prop_assert!(on_simplex(&map_policy(&pi, &from, &to).unwrap()));
        let same = map_policy(&pi, &from, &from).unwrap();
        for (a, b) in same.iter().zip(&pi) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cache_never_overflows(
        labels in prop::collection::vec(0usize..5, 30),
        d in 1usize..10,
        ops in prop::collection::vec((0u8..3, 0usize..4), 1..40),
        seed in 0u64..1000,
    ) {
        let part = partition(&labels);
        let k = part.num_classes();
        let mixed = vec![1.0 / k as f64; k];
        let fh = cheap_fronthaul();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cache = CacheState::<f64>::new(d, 30);
        for f in 0..d {
            cache.insert(f, 0.0);
        }
        let counts: Vec<u64> = (0..30u64).map(|f| (f * 7919) % 13).collect();
        for (op, n) in ops {
            let n = n.min(cache.len());
            let next = match op {
                0 => cache_update(&cache, &mixed, &part, n, &fh, &mut rng).unwrap(),
                1 => random_replacement(&cache, n, &fh, &mut rng).unwrap(),
                _ => time_average_update(&cache, &counts, &fh).unwrap(),
            };
            prop_assert!(next.cache.len() <= d);
            prop_assert_eq!(next.cache.tallies().len(), next.cache.len());
            prop_assert!(next.cost.epsilon > 0.0 && next.cost.epsilon <= 1.0);
            cache = next.cache;
        }
    }

    #[test]
    fn raising_a_tally_lowers_only_its_eviction_odds(
        tallies in prop::collection::vec(0.0f64..5.0, 2..8),
        pick in 0usize..8,
        bump in 0.01f64..3.0,
    ) {
        let n = tallies.len();
        let pick = pick % n;
        let mut cache = CacheState::<f64>::new(n, n);
        for (f, &t) in tallies.iter().enumerate() {
            cache.insert(f, t);
        }
        let before = gibbs_eviction_distribution(&cache).unwrap();
        cache.set_tally(pick, tallies[pick] + bump);
        let after = gibbs_eviction_distribution(&cache).unwrap();
        for i in 0..n {
            if i == pick {
                prop_assert!(after[i] < before[i]);
            } else {
                prop_assert!(after[i] > before[i]);
            }
        }
    }

    #[test]
    fn epsilon_in_unit_interval_or_explicit_error(
        n in 0usize..20,
        lp in 0.1f64..10.0,
        cf in 1e6f64..1e10,
        s in 1usize..50,
        t2 in 1u64..100,
    ) {
        let fh = FronthaulModel::equal_split(cf, s, lp, t2, 1e7, 1.0).unwrap();
        let tau = lp * n as f64 * 1e7 / (cf / s as f64);
        match update_cost(n, &fh) {
            Ok(c) => {
                prop_assert!(tau < t2 as f64);
                prop_assert!(c.epsilon > 0.0 && c.epsilon <= 1.0);
                prop_assert!((c.tau_slots - tau).abs() <= 1e-9 * tau.max(1.0));
            }
            Err(Error::InfeasibleUpdate { .. }) => prop_assert!(tau >= t2 as f64),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn update_depends_only_on_the_mixture(
        pl in simplex(3),
        seed in 0u64..1000,
        beta in 0.1f64..0.9,
    ) {
        // A second (local, cloud) pair with the same mixture.
        let pc = vec![1.0 / 3.0; 3];
        let mix = mixed_policy(&pl, &pc, beta).unwrap();
        let pl2: Vec<f64> = mix.clone();
        let pc2 = mix.clone();
        let mix2 = mixed_policy(&pl2, &pc2, beta).unwrap();
        let labels: Vec<usize> = (0..24).map(|f| f % 3).collect();
        let part = partition(&labels);
        let mut cache = CacheState::<f64>::new(6, 24);
        for f in 0..6 {
            cache.insert(f * 4, f as f64 * 0.1);
        }
        let fh = cheap_fronthaul();
        let a = cache_update(&cache, &mix, &part, 2, &fh, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = cache_update(&cache, &mix2, &part, 2, &fh, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a.cache.contents(), b.cache.contents());
        prop_assert_eq!(a.evicted, b.evicted);
    }

    #[test]
    fn presorted_coverage_agrees_with_direct_search(seed in 0u64..200) {
        let dep = generate_deployment(5e-5, 2e-4, 300.0, seed).unwrap();
        let cov = Coverage::new(&dep, 120.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let caches: Vec<CacheState<f64>> = (0..dep.num_sbs())
            .map(|_| {
                let mut c = CacheState::new(3, 10);
                for f in rand::seq::index::sample(&mut rng, 10, 3) {
                    c.insert(f, 0.0);
                }
                c
            })
            .collect();
        for u in 0..dep.num_ues() {
            for f in 0..10 {
                prop_assert_eq!(
                    cov.nearest_cached(u, f, &caches),
                    nearest_cached_sbs(u, f, &dep, &caches, 120.0)
                );
            }
        }
    }

    #[test]
    fn partition_labels_are_compact(labels in prop::collection::vec(0usize..50, 1..40)) {
        let p = partition(&labels);
        let total: usize = (0..p.num_classes()).map(|k| p.class_size(k)).sum();
        prop_assert_eq!(total, labels.len());
        for f in 0..labels.len() {
            prop_assert!(p.members(p.class_of(f)).contains(&f));
        }
    }
}

#[test]
fn single_precision_learner_stays_on_simplex() {
    let sched = LearningSchedule::<f32>::new([0.6, 0.7, 0.8]).unwrap();
    let mut s: edgecache::LearnerF32 = LearnerState::new(3, 0.05).unwrap();
    for t in 0..5000 {
        s = learner_step(&s, t % 3, (t % 7) as f32 * 0.1, &sched).unwrap();
    }
    let sum: f32 = s.policy.iter().sum();
    assert!((sum - 1.0).abs() < 1e-5);
    assert!(s.policy.iter().all(|&p| p >= 0.0));
}
