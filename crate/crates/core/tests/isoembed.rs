mod common;

use common::{fixture, random, FIXTURES};
use proptest::prelude::*;
use rayless::check::scramble;
use rayless::error::Error;
use rayless::finite::truncate;
use rayless::isoembed::{align_embeddings, embed, maps_kernel_onto, twin_check, verify_witness, EmbedOutcome, Embedding, SearchConfig, TwinVerdict};
use rayless::normal::{canonical_code, iso_tuples};
use rayless::oracle::{finite_embed, finite_iso, instantiate_witness, ORACLE_CAP};
use rayless::witness::{compose, EmbeddingWitness, Mode};
use rayless::Edge;

fn twins(a: &str, b: &str, mode: Mode) -> (Embedding, Embedding) {
    match twin_check(&fixture(a), &fixture(b), mode, SearchConfig::default()).unwrap() {
        TwinVerdict::Twins { phi, psi } => (phi, psi),
        other => panic!("{a} {b} {mode}: {}", other.label()),
    }
}

fn transfers(e: &Embedding) {
    for n in [3, 5, 10] {
        let n = n.max(e.witness.exceptions_needed(&e.source.pres));
        let inst = instantiate_witness(&e.witness, &e.source.pres, &e.target.pres, n).unwrap();
        inst.check(e.witness.mode == Mode::Strong).unwrap();
    }
}

#[test]
fn codes_separate_the_fixtures() {
    for a in FIXTURES {
        for b in FIXTURES {
            let same = canonical_code(&fixture(a)).unwrap() == canonical_code(&fixture(b)).unwrap();
            assert_eq!(same, a == b, "{a} {b}");
            assert_eq!(iso_tuples(&fixture(a), &fixture(b)).unwrap().is_some(), a == b);
        }
    }
}

#[test]
fn k2inf_weak_twins() {
    let (phi, psi) = twins("k2inf", "k2inf-minus-e", Mode::Weak);
    for e in [&phi, &psi] {
        assert!(verify_witness(&e.witness, &e.source, &e.target, Mode::Weak).unwrap());
        assert!(maps_kernel_onto(&e.witness, &e.source, &e.target).unwrap());
        transfers(e);
    }
}

#[test]
fn k2inf_has_no_strong_twin_here() {
    let v = twin_check(&fixture("k2inf"), &fixture("k2inf-minus-e"), Mode::Strong, SearchConfig::default()).unwrap();
    assert!(matches!(v, TwinVerdict::NotTwins(_)), "{}", v.label());
    let out = embed(&fixture("k2inf-minus-e"), &fixture("k2inf"), Mode::Strong, SearchConfig::default()).unwrap();
    assert!(matches!(out, EmbedOutcome::None(_)));
    // the finite shadow of the same fact
    let g = truncate(&fixture("k2inf-minus-e").pres, 3).unwrap();
    let h = truncate(&fixture("k2inf").pres, 4).unwrap();
    assert!(finite_embed(&g, &h, true).unwrap().is_none());
    assert!(finite_embed(&g, &h, false).unwrap().is_some());
}

#[test]
fn spider_twins_in_both_modes() {
    for mode in [Mode::Weak, Mode::Strong] {
        let (phi, psi) = twins("spiderT", "spiderTprime", mode);
        for e in [&phi, &psi] {
            assert!(verify_witness(&e.witness, &e.source, &e.target, mode).unwrap());
            assert!(maps_kernel_onto(&e.witness, &e.source, &e.target).unwrap());
            transfers(e);
        }
    }
}

#[test]
fn alignment_fixes_the_finite_part() {
    for (a, b, mode) in [("k2inf", "k2inf-minus-e", Mode::Weak), ("spiderT", "spiderTprime", Mode::Strong)] {
        let (phi, psi) = twins(a, b, mode);
        let (aligned, order) = align_embeddings(&phi, &psi).unwrap();
        assert!(order >= 1);
        assert!(verify_witness(&aligned.witness, &aligned.source, &aligned.target, mode).unwrap());
        let iota = compose(&aligned.witness, &phi.source.pres, &psi.witness).unwrap();
        for v in &phi.source.pres.vertices {
            let t = &iota.top.vertices[v];
            assert!(t.path.is_empty() && &t.name == v, "{a}: {v} moves");
        }
    }
}

#[test]
fn weak_twins_agree_on_the_finite_part() {
    let (phi, _) = twins("k2inf", "k2inf-minus-e", Mode::Weak);
    let (g, h) = (&phi.source.pres, &phi.target.pres);
    let image = |v: &String| phi.witness.top.vertices[v].name.clone();
    let mapped: Vec<Edge> = g.edges.iter().map(|e| Edge::new(image(&e.0), image(&e.1))).collect();
    assert_eq!(mapped.len(), h.edges.len());
    assert!(mapped.iter().all(|e| h.edges.contains(e)));
}

#[test]
fn star_embeds_in_stars_but_not_back() {
    let out = embed(&fixture("star"), &fixture("stars"), Mode::Strong, SearchConfig::default()).unwrap();
    let EmbedOutcome::Found(e) = out else { panic!("expected an embedding") };
    transfers(&e);
    let back = embed(&fixture("stars"), &fixture("star"), Mode::Weak, SearchConfig::default()).unwrap();
    assert!(matches!(back, EmbedOutcome::None(_)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scrambled_copies_are_isomorphic(seed in any::<u64>()) {
        let t = random(seed);
        let u = scramble(&t, seed);
        prop_assert_eq!(canonical_code(&t).unwrap(), canonical_code(&u).unwrap());
        let (ng, nh, iso) = iso_tuples(&t, &u).unwrap().expect("isomorphic");
        let w = EmbeddingWitness::from_iso(&ng.pres, &iso, Mode::Strong);
        prop_assert!(verify_witness(&w, &ng, &nh, Mode::Strong).unwrap());
        for n in [1, 2, 3] {
            let (a, b) = (truncate(&ng.pres, n).unwrap(), truncate(&nh.pres, n).unwrap());
            if a.len() <= ORACLE_CAP {
                match finite_iso(&a, &b) {
                    Ok(m) => prop_assert!(m.is_some()),
                    Err(Error::OracleCap(_)) => {}
                    Err(e) => prop_assert!(false, "{}", e),
                }
            }
        }
    }

    #[test]
    fn codes_agree_with_iso(s in any::<u64>(), t in any::<u64>()) {
        let (g, h) = (random(s), random(t));
        let same = canonical_code(&g).unwrap() == canonical_code(&h).unwrap();
        prop_assert_eq!(same, iso_tuples(&g, &h).unwrap().is_some());
    }

    #[test]
    fn embeddings_into_supergraphs_transfer(seed in any::<u64>(), strong in any::<bool>()) {
        let g = random(seed);
        prop_assume!(!g.pres.classes.is_empty());
        let bigger = rayless::GraphTuple {
            x: g.x.clone(),
            pres: g.pres.add_class_copies(&[0], rayless::Multiplicity::Finite(1)).unwrap(),
        };
        let mode = if strong { Mode::Strong } else { Mode::Weak };
        match embed(&g, &bigger, mode, SearchConfig { budget: 20_000 }).unwrap() {
            EmbedOutcome::Found(e) => {
                prop_assert!(verify_witness(&e.witness, &e.source, &e.target, mode).unwrap());
                transfers(&e);
            }
            EmbedOutcome::None(why) => prop_assert!(false, "no embedding into a supergraph: {}", why),
            EmbedOutcome::Unknown(_) => {}
        }
    }
}
