use codensity_core::fiber::{
    self, bottom, join, leq, meet, pullback, pushforward, top, CarrierMap, FiberElement, FiberKind, Relation,
};
use codensity_core::fixpoint::{gfp, is_bisimulation, Mode};
use codensity_core::game::{extract_strategies, largest_invariant, verify_invariant, Player};
use codensity_core::instances::{
    build_dfa_game, build_kripke_game, build_prob_game, build_similarity_game, generating_set_from_separator,
    Instance, SimVariant,
};
use codensity_core::lifting::{relation_element, transform};
use codensity_core::system::{random, FiniteSystem};
use codensity_core::{Carrier, Q};
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_element(rng: &mut ChaCha8Rng, kind: FiberKind, carrier: &Carrier) -> FiberElement {
    let n = carrier.len();
    match kind {
        FiberKind::PseudoMetric => FiberElement::pseudometric(carrier, random::metric(rng, n, 4)).unwrap(),
        FiberKind::Topology => {
            let subbasis: Vec<u64> = (0..rng.gen_range(0..4)).map(|_| random::subset(rng, n)).collect();
            FiberElement::topology_generated_by(carrier, &subbasis).unwrap()
        }
        _ => {
            let density = rng.gen_range(0.0..1.0);
            let rel = Relation::from_fn(n, |_, _| rng.gen_bool(density));
            relation_element(kind, carrier, rel).unwrap()
        }
    }
}

fn kinds() -> impl Strategy<Value = FiberKind> {
    prop::sample::select(FiberKind::ALL.to_vec())
}

fn random_map(rng: &mut ChaCha8Rng, source: &Carrier, target: &Carrier) -> CarrierMap {
    let table = (0..source.len()).map(|_| rng.gen_range(0..target.len())).collect();
    CarrierMap::new(source.clone(), target.clone(), table).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_and_bounds(kind in kinds(), n in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = Carrier::numbered(n).unwrap();
        let a = random_element(&mut rng, kind, &c);
        let b = random_element(&mut rng, kind, &c);
        prop_assert!(leq(&a, &a).unwrap());
        prop_assert!(leq(&a, &top(kind, &c)).unwrap());
        prop_assert!(leq(&bottom(kind, &c), &a).unwrap());
        if leq(&a, &b).unwrap() && leq(&b, &a).unwrap() {
            prop_assert_eq!(&a, &b);
        }
        let m = meet(&[a.clone(), b.clone()]).unwrap();
        let j = join(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(&m, &meet(&[b.clone(), a.clone()]).unwrap());
        prop_assert_eq!(&meet(&[a.clone(), a.clone()]).unwrap(), &a);
        prop_assert!(leq(&m, &a).unwrap() && leq(&m, &b).unwrap());
        prop_assert!(leq(&a, &j).unwrap() && leq(&b, &j).unwrap());
        m.validate().unwrap();
        j.validate().unwrap();
    }

    #[test]
    fn pullback_meets_and_adjunction(kind in kinds(), n in 1usize..=4, m in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (source, target) = (Carrier::numbered(n).unwrap(), Carrier::numbered(m).unwrap());
        let f = random_map(&mut rng, &source, &target);
        let a = random_element(&mut rng, kind, &target);
        let b = random_element(&mut rng, kind, &target);
        let lhs = pullback(&f, &meet(&[a.clone(), b.clone()]).unwrap()).unwrap();
        let rhs = meet(&[pullback(&f, &a).unwrap(), pullback(&f, &b).unwrap()]).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(pullback(&f, &top(kind, &target)).unwrap(), top(kind, &source));
        let p = random_element(&mut rng, kind, &source);
        let pushed = pushforward(&f, &p).unwrap();
        prop_assert_eq!(leq(&pushed, &a).unwrap(), leq(&p, &pullback(&f, &a).unwrap()).unwrap());
        prop_assert!(fiber::is_decent(&f, &p, &pushed).unwrap());
    }

    #[test]
    fn generating_sets_reconstruct(n in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = Carrier::numbered(n).unwrap();
        for kind in [FiberKind::EquivRel, FiberKind::Preorder, FiberKind::PseudoMetric] {
            let gens = generating_set_from_separator(kind, &c).unwrap();
            let p = random_element(&mut rng, kind, &c);
            prop_assert_eq!(gens.reconstruct(&p).unwrap(), p);
        }
    }

    #[test]
    fn kripke_fixed_point_and_game(n in 1usize..=6, density in 0.1f64..0.7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = random::kripke(&mut rng, n, density);
        let system = FiniteSystem::from(frame.clone());
        let params = Instance::KripkeBisim.params(&system).unwrap();
        let report = gfp(&system, &params, FiberKind::EquivRel, Mode::Exact).unwrap();
        prop_assert!(is_bisimulation(&system, &params, &report.result).unwrap());
        prop_assert_eq!(&transform(&system, &params, &report.result).unwrap(), &report.result);
        prop_assert!(is_bisimulation(&system, &params, &bottom(FiberKind::EquivRel, system.carrier())).unwrap());
        for w in report.history.windows(2) {
            prop_assert!(leq(&w[1], &w[0]).unwrap());
        }
        let game = build_kripke_game(&frame).unwrap();
        prop_assert_eq!(&game.region(), report.result.relation().unwrap());
        let arena = game.arena();
        let invariant = largest_invariant(arena);
        prop_assert!(verify_invariant(arena, &invariant));
        let (dup, spoiler) = extract_strategies(arena, &game.solved.solution);
        prop_assert!(dup.is_consistent(arena) && spoiler.is_consistent(arena));
        for (&from, &to) in &dup.choice {
            prop_assert_eq!(arena.owner(from), Player::Duplicator);
            prop_assert!(game.solved.solution.duplicator_wins[to]);
        }
    }

    #[test]
    fn similarity_fixed_points(n in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = random::kripke(&mut rng, n, 0.35);
        let system = FiniteSystem::from(frame.clone());
        for variant in [SimVariant::Lower, SimVariant::Upper, SimVariant::Convex] {
            let instance = Instance::KripkeSim(variant);
            let params = instance.params(&system).unwrap();
            let report = gfp(&system, &params, FiberKind::Preorder, Mode::Exact).unwrap();
            let game = build_similarity_game(&frame, variant).unwrap();
            prop_assert_eq!(&game.region(), report.result.relation().unwrap());
        }
    }

    #[test]
    fn transform_is_monotone(n in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chain = random::markov(&mut rng, n, 4);
        let system = FiniteSystem::from(chain);
        let params = Instance::ProbBisim.params(&system).unwrap();
        let c = system.carrier().clone();
        let a = random_element(&mut rng, FiberKind::EquivRel, &c);
        let b = random_element(&mut rng, FiberKind::EquivRel, &c);
        let lower = meet(&[a.clone(), b]).unwrap();
        prop_assert!(leq(&transform(&system, &params, &lower).unwrap(), &transform(&system, &params, &a).unwrap()).unwrap());
        let metric = Instance::BisimMetric.params(&system).unwrap();
        let d = random_element(&mut rng, FiberKind::PseudoMetric, &c);
        let e = random_element(&mut rng, FiberKind::PseudoMetric, &c);
        let below = meet(&[d.clone(), e]).unwrap();
        prop_assert!(leq(&transform(&system, &metric, &below).unwrap(), &transform(&system, &metric, &d).unwrap()).unwrap());
    }

    #[test]
    fn prob_and_dfa_games_match_fixed_points(n in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chain = random::markov_clustered(&mut rng, n, 4);
        let system = FiniteSystem::from(chain.clone());
        let report = gfp(&system, &Instance::ProbBisim.params(&system).unwrap(), FiberKind::EquivRel, Mode::Exact).unwrap();
        prop_assert_eq!(&build_prob_game(&chain).unwrap().region(), report.result.relation().unwrap());
        let dfa = random::dfa(&mut rng, n, 2);
        let system = FiniteSystem::from(dfa.clone());
        let report = gfp(&system, &Instance::DfaLang.params(&system).unwrap(), FiberKind::EquivRel, Mode::Exact).unwrap();
        prop_assert_eq!(&build_dfa_game(&dfa).unwrap().region(), report.result.relation().unwrap());
    }

    #[test]
    fn expectation_of_constants(n in 1usize..=5, num in 0i64..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chain = random::markov(&mut rng, n, 6);
        let v = Q::new(num.into(), 6.into());
        for x in 0..n {
            prop_assert_eq!(chain.expectation(x, &vec![v.clone(); n]), &v * chain.total_mass(x));
        }
        prop_assert!(chain.expectation(0, &vec![Q::zero(); n]).is_zero());
    }
}
