use codensity::format::{fixture_document, parse_document, to_json, Document};
use codensity::report::{solve, SolveOptions};
use codensity_core::instances::Instance;
use codensity_core::system::{fixtures, random, FiniteSystem};
use codensity_core::Carrier;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn shipped_fixture_files_match_builtins() {
    for name in fixtures::NAMES {
        let path = format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(parse_document(&text).unwrap(), fixture_document(name).unwrap(), "{name}");
        assert_eq!(to_json(&fixture_document(name).unwrap()), text, "{name}");
    }
}

fn random_document(kind: u8, n: usize, seed: u64) -> Document {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let system: FiniteSystem = match kind {
        0 => random::kripke(&mut rng, n, 0.4).into(),
        1 => random::markov(&mut rng, n, 6).into(),
        2 => random::dfa(&mut rng, n, 2).into(),
        3 => random::nfa(&mut rng, n, 2, 0.3).into(),
        _ => {
            let c = Carrier::new((0..n).map(|i| format!("m{i}"))).unwrap();
            return Document::Metric(c, random::metric(&mut rng, n, 5));
        }
    };
    Document::System(system)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn documents_round_trip(kind in 0u8..5, n in 1usize..6, seed in any::<u64>()) {
        let doc = random_document(kind, n, seed);
        let text = to_json(&doc);
        let back = parse_document(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(to_json(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reports_are_deterministic(kind in 0u8..3, n in 1usize..5, seed in any::<u64>()) {
        let doc = random_document(kind, n, seed);
        let instance = match kind {
            0 => Instance::KripkeBisim,
            1 => Instance::ProbBisim,
            _ => Instance::DfaLang,
        };
        let a = solve(&doc, instance, &SolveOptions::default()).unwrap();
        let b = solve(&doc, instance, &SolveOptions::default()).unwrap();
        prop_assert_eq!(a.text, b.text);
        prop_assert_eq!(a.json, b.json);
    }
}
