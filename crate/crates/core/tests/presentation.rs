mod common;

use common::{fixture, random, FIXTURES};
use proptest::prelude::*;
use rayless::decompose::delete_locations;
use rayless::error::Error;
use rayless::finite::truncate;
use rayless::format::{parse, serialize};
use rayless::{Location, Multiplicity};
use std::collections::BTreeSet;

#[test]
fn fixtures_round_trip() {
    for name in FIXTURES {
        let t = fixture(name);
        assert_eq!(parse(&serialize(&t)).unwrap(), t, "{name}");
    }
}

#[test]
fn golden_seed_zero() {
    let golden = include_str!("golden/seed0.rpg");
    assert_eq!(serialize(&random(0)), golden);
    assert_eq!(parse(golden).unwrap(), random(0));
}

#[test]
fn parse_errors_are_reported() {
    let cases = [
        ("(graph (vertices a a))", "duplicate"),
        ("(graph (vertices a) (edges (a a)))", "self"),
        ("(graph (vertices a) (edges (a b)))", "unbound"),
        ("(graph (vertices a) (class (mult 0) (graph (vertices b))))", "zero"),
        ("(graph (vertices a)", "syntax"),
        ("(tuple (x q) (graph (vertices a)))", "distinguished"),
    ];
    for (text, what) in cases {
        let e = parse(text).unwrap_err();
        let ok = match what {
            "duplicate" => matches!(e, Error::DuplicateName(_)),
            "self" => matches!(e, Error::SelfLoop(_)),
            "unbound" => matches!(e, Error::UnboundName(_)),
            "zero" => matches!(e, Error::ZeroMultiplicity),
            "syntax" => matches!(e, Error::Syntax { .. }),
            _ => matches!(e, Error::BadDistinguished(_)),
        };
        assert!(ok, "{text}: {e:?}");
    }
}

#[test]
fn star_truncations() {
    let star = fixture("star");
    for n in 1..6 {
        let g = truncate(&star.pres, n).unwrap();
        assert_eq!(g.len(), n + 1);
        assert_eq!(g.edge_count(), n);
    }
    assert_eq!(star.pres.cardinality(), Multiplicity::Omega);
    assert_eq!(fixture("triangle").pres.cardinality(), Multiplicity::Finite(3));
}

#[test]
fn deleting_the_star_centre() {
    let star = fixture("star");
    let pieces = delete_locations(&star.pres, &BTreeSet::from([Location::top("c")])).unwrap();
    assert_eq!(pieces.len(), 1);
    assert_eq!(pieces[0].mult, Multiplicity::Omega);
    assert!(pieces[0].pres.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_round_trip(seed in any::<u64>()) {
        let t = random(seed);
        prop_assert!(t.validate().is_ok());
        prop_assert_eq!(parse(&serialize(&t)).unwrap(), t);
    }

    #[test]
    fn random_is_deterministic(seed in any::<u64>()) {
        prop_assert_eq!(random(seed), random(seed));
    }

    #[test]
    fn truncation_is_monotone(seed in any::<u64>(), m in 1usize..3) {
        let t = random(seed);
        let small = truncate(&t.pres, m).unwrap();
        let big = truncate(&t.pres, m + 1).unwrap();
        let kept = big.induced(|loc| small.index_of(loc).is_some());
        prop_assert_eq!(kept.len(), small.len());
        prop_assert_eq!(kept.edge_locations(), small.edge_locations());
    }

    #[test]
    fn deletion_matches_truncation(seed in any::<u64>(), pick in any::<u64>()) {
        let t = random(seed);
        let g = truncate(&t.pres, 2).unwrap();
        prop_assume!(!g.is_empty());
        let chosen = g.vertices()[(pick as usize) % g.len()].clone();
        let set = BTreeSet::from([chosen.clone()]);
        let pieces = delete_locations(&t.pres, &set).unwrap();
        let comps = g.induced(|l| *l != chosen).components().len();
        // an infinite piece keeps at least one copy in the truncation at 2
        let copies: usize = pieces.iter().map(|p| p.mult.finite().map_or(1, |m| m as usize)).sum();
        if pieces.iter().all(|p| p.mult.is_finite()) {
            prop_assert_eq!(comps, copies);
        } else {
            prop_assert!(comps >= copies);
        }
    }

    #[test]
    fn finite_cardinality_is_stable(seed in any::<u64>()) {
        let t = random(seed);
        let sizes: Vec<usize> = (2..5).map(|n| truncate(&t.pres, n).unwrap().len()).collect();
        let stable = sizes.windows(2).all(|w| w[0] == w[1]);
        prop_assert_eq!(t.pres.is_finite(), stable);
    }
}
