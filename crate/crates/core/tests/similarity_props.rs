mod common;

use std::collections::HashSet;

use govaudit::evm::{disassemble, serialize, strip_push_arguments, Opcode};
use govaudit::similarity::{
    contracts_similar, MultisetJaccard, SequenceSimilarity, SetJaccard, DEFAULT_NGRAM, DEFAULT_THRESHOLD,
};
use proptest::prelude::*;

/// Jaccard over 5-byte windows of the opcode stream, computed with std sets only.
fn oracle_score(a: &[u8], b: &[u8]) -> f64 {
    let grams = |code: &[u8]| -> HashSet<Vec<u8>> {
        let ops: Vec<u8> = disassemble(code).iter().map(|i| i.opcode.byte()).collect();
        ops.windows(5).map(|w| w.to_vec()).collect()
    };
    let (x, y) = (grams(a), grams(b));
    if x.is_empty() && y.is_empty() {
        return 1.0;
    }
    let inter = x.intersection(&y).count() as f64;
    let union = x.union(&y).count() as f64;
    inter / union
}

/// Same code with every PUSH payload replaced by bytes from `seed`.
fn repaint_pushes(code: &[u8], seed: u64) -> Vec<u8> {
    let mut state = seed | 1;
    let mut ins = disassemble(code);
    for i in &mut ins {
        let present = i.immediate.len() - i.padding;
        for b in &mut i.immediate[..present] {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            *b = state as u8;
        }
    }
    serialize(&ins)
}

fn fixture_codes() -> Vec<Vec<u8>> {
    common::compiled().iter().map(|c| c.runtime()).collect()
}

/// Deletes or duplicates a few instructions to move a fixture away from itself.
fn perturb(code: &[u8], edits: &[(usize, bool)]) -> Vec<u8> {
    let mut ins = disassemble(code);
    for (at, dup) in edits {
        if ins.is_empty() {
            break;
        }
        let k = at % ins.len();
        if *dup {
            let copy = ins[k].clone();
            ins.insert(k, copy);
        } else {
            ins.remove(k);
        }
    }
    serialize(&ins)
}

#[test]
fn push_payload_invariance_on_fixtures() {
    for (i, code) in fixture_codes().iter().enumerate() {
        let other = repaint_pushes(code, 0x9e37_79b9 + i as u64);
        assert_ne!(&other, code);
        assert_eq!(
            strip_push_arguments(&disassemble(&other)),
            strip_push_arguments(&disassemble(code))
        );
        let d = contracts_similar(code, &other, DEFAULT_THRESHOLD);
        assert_eq!(d.score, 1.0, "fixture {i}");
        assert!(d.similar);
    }
}

#[test]
fn compiler_variants_of_one_template() {
    let fixtures = common::compiled();
    let a = common::compiled_named("GovernorTemplate", "0.8.26", false).runtime();
    let b = common::compiled_named("GovernorTemplate", "0.8.26", true).runtime();
    let unrelated = common::compiled_named("Counter", "0.8.26", false).runtime();
    assert!(fixtures.len() > 3);
    assert!(contracts_similar(&a, &unrelated, DEFAULT_THRESHOLD).score < DEFAULT_THRESHOLD);
    let d = contracts_similar(&a, &b, DEFAULT_THRESHOLD);
    assert!((d.score - oracle_score(&a, &b)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn decision_stable_at_threshold(
        i in 0usize..33,
        j in 0usize..33,
        same in any::<bool>(),
        edits in proptest::collection::vec((any::<usize>(), any::<bool>()), 0..40),
        seed in any::<u64>(),
    ) {
        let codes = fixture_codes();
        let a = &codes[i % codes.len()];
        let j = if same { i } else { j };
        let b = perturb(&codes[j % codes.len()], &edits);
        let expected = oracle_score(a, &b);
        let forward = contracts_similar(a, &b, DEFAULT_THRESHOLD);
        let backward = contracts_similar(&b, a, DEFAULT_THRESHOLD);
        prop_assert!((forward.score - expected).abs() < 1e-12);
        prop_assert_eq!(forward.score, backward.score);
        prop_assert_eq!(forward.similar, expected >= 0.8);
        prop_assert_eq!(forward.similar, backward.similar);
        let repainted = contracts_similar(&repaint_pushes(a, seed), &repaint_pushes(&b, !seed), DEFAULT_THRESHOLD);
        prop_assert_eq!(repainted.score, forward.score);
        prop_assert_eq!(repainted.similar, forward.similar);
    }

    #[test]
    fn kernels_symmetric_bounded_reflexive(
        a in proptest::collection::vec(0u8..=255, 0..200),
        b in proptest::collection::vec(0u8..=255, 0..200),
        n in 1usize..8,
    ) {
        let a: Vec<Opcode> = a.into_iter().map(Opcode).collect();
        let b: Vec<Opcode> = b.into_iter().map(Opcode).collect();
        let kernels: [&dyn SequenceSimilarity; 2] = [&SetJaccard { n }, &MultisetJaccard { n }];
        for k in kernels {
            let s = k.score(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s, k.score(&b, &a));
            prop_assert_eq!(k.score(&a, &a), 1.0);
        }
    }
}

#[test]
fn default_ngram_is_five() {
    assert_eq!(DEFAULT_NGRAM, 5);
    assert_eq!(DEFAULT_THRESHOLD, 0.8);
}
