mod common;

use common::*;
use masp_lab::envs::{read_trajectories, rollout, write_trajectories, EnvSpec};
use masp_lab::mining::{
    build_action_space, inject_noise, mine_macros, ActionSpace, AugmentedAction, MacroAction, MacroManifest,
    SubsequenceCounts,
};
use masp_lab::streams::{stream, Stream};
use masp_lab::Error;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

#[test]
fn mining_matches_brute_force_on_random_corpora() {
    for seed in 0..100 {
        let mut r = rng(seed);
        let corpus = random_corpus(&mut r, 500);
        let l_min = r.gen_range(2..=3);
        let l_max = l_min + r.gen_range(0..=2);
        let k = r.gen_range(1..=40);
        let expected = brute_force_mine(&corpus, k, l_min, l_max);
        let got = mine_macros(&corpus, k, l_min, l_max).unwrap();
        let got_seqs: Vec<Vec<usize>> = got.iter().map(|m| m.0.clone()).collect();
        let want_seqs: Vec<Vec<usize>> = expected.iter().map(|(s, _)| s.clone()).collect();
        assert_eq!(got_seqs, want_seqs, "seed {seed}");
        let mut counts = SubsequenceCounts::default();
        for t in &corpus {
            counts.add(t, l_min, l_max);
        }
        for (seq, c) in &expected {
            assert_eq!(counts.get(seq), *c, "seed {seed} count of {seq:?}");
        }
    }
}

#[test]
fn merge_is_order_independent() {
    let mut r = rng(3);
    let corpus = random_corpus(&mut r, 300);
    let parts: Vec<SubsequenceCounts> = corpus.iter().map(|t| SubsequenceCounts::count(t, 2, 4)).collect();
    let mut fwd = SubsequenceCounts::default();
    for p in parts.iter().cloned() {
        fwd.merge(p);
    }
    let mut rev = SubsequenceCounts::default();
    for p in parts.into_iter().rev() {
        rev.merge(p);
    }
    assert_eq!(fwd.ranked(), rev.ranked());
}

#[test]
fn scripted_keydoor_corpus_yields_short_macros() {
    let mut env = EnvSpec::default().build().unwrap();
    let mut seeds = stream(0, Stream::Corpus);
    let corpus: Vec<_> = (0..100)
        .map(|_| rollout(&mut env, seeds.gen(), |e| e.scripted_action()).unwrap())
        .collect();
    assert!(corpus.iter().all(|e| e.success));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    write_trajectories(&path, &corpus).unwrap();
    let back = read_trajectories(&path).unwrap();
    assert_eq!(back, corpus);
    let actions: Vec<Vec<usize>> = back.into_iter().map(|e| e.actions).collect();
    let macros = mine_macros(&actions, 8, 2, 4).unwrap();
    assert!(macros.len() <= 8);
    assert!(macros.iter().all(|m| (2..=4).contains(&m.len())));

    let manifest = MacroManifest::new(6, &macros, 8, 2, 4);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    manifest.write(&a).unwrap();
    MacroManifest::new(6, &mine_macros(&actions, 8, 2, 4).unwrap(), 8, 2, 4).write(&b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn missing_corpus_hints_at_a_fix() {
    let err = read_trajectories(std::path::Path::new("/nonexistent/corpus.jsonl")).unwrap_err();
    assert!(matches!(err, Error::File { .. }));
    assert!(err.to_string().contains("corpus"));
}

#[test]
fn noise_replays_the_seeded_bernoulli_draws() {
    let mut r = rng(11);
    let macros: Vec<MacroAction> = (0..32)
        .map(|_| MacroAction((0..r.gen_range(2..=4)).map(|_| r.gen_range(0..6)).collect()))
        .collect();
    let noisy = inject_noise(&macros, 0.5, 6, 42).unwrap();
    let mut replay = ChaCha8Rng::seed_from_u64(42);
    let mut replaced = 0;
    for (orig, got) in macros.iter().zip(&noisy) {
        if replay.gen::<f64>() < 0.5 {
            replaced += 1;
            let fresh: Vec<usize> = (0..orig.len()).map(|_| replay.gen_range(0..6)).collect();
            assert_eq!(got.0, fresh);
        } else {
            assert_eq!(got, orig);
        }
    }
    assert!(replaced > 0 && replaced < 32);
    assert_eq!(inject_noise(&macros, 0.0, 6, 1).unwrap(), macros);
    let all = inject_noise(&macros, 1.0, 6, 1).unwrap();
    let lens = |v: &[MacroAction]| v.iter().map(MacroAction::len).collect::<Vec<_>>();
    assert_eq!(lens(&all), lens(&macros));
}

#[test]
fn thirty_two_macros_on_six_primitives() {
    let macros: Vec<MacroAction> = (0..32).map(|i| MacroAction(vec![i % 6, i / 6, 0])).collect();
    let built = build_action_space(6, &macros).unwrap();
    assert_eq!(built.space.len(), 38);
    assert_eq!(built.space.decode(6), Some(AugmentedAction::Macro(0)));
    let dup = build_action_space(6, &[macros[0].clone(), macros[0].clone(), MacroAction(vec![1])]).unwrap();
    assert_eq!((dup.space.len(), dup.dropped), (7, 2));
    assert!(build_action_space(6, &[MacroAction(vec![0, 6])]).is_err());
}

proptest! {
    #[test]
    fn decode_encode_roundtrip(macros in prop::collection::vec(prop::collection::vec(0usize..5, 2..5), 0..10)) {
        let macros: Vec<MacroAction> = macros.into_iter().map(MacroAction).collect();
        let space: ActionSpace = build_action_space(5, &macros).unwrap().space;
        for i in 0..space.len() {
            let a = space.decode(i).unwrap();
            prop_assert_eq!(space.encode(a), Some(i));
        }
        prop_assert!(space.decode(space.len()).is_none());
    }

    #[test]
    fn noise_preserves_lengths(p in 0.0f64..=1.0, seed in any::<u64>()) {
        let macros = vec![MacroAction(vec![0, 1]), MacroAction(vec![2, 2, 3]), MacroAction(vec![1, 0, 1, 0])];
        let out = inject_noise(&macros, p, 4, seed).unwrap();
        prop_assert_eq!(out.len(), 3);
        for (a, b) in out.iter().zip(&macros) {
            prop_assert_eq!(a.len(), b.len());
        }
    }
}
