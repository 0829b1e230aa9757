mod common;

use common::fixture;
use rayless::isoembed::{verify_witness, SearchConfig};
use rayless::normal::iso_tuples;
use rayless::oracle::instantiate_witness;
use rayless::rank::{is_connected_tuple, rank};
use rayless::twingen::{check_partition, generate_twins, image_avoids_on_truncation, image_meets, Case, Generation, NodeSet};
use rayless::witness::Mode;
use rayless::Multiplicity;

fn generation(g: &str, h: &str, mode: Mode, k: usize) -> Generation {
    generate_twins(&fixture(g), &fixture(h), mode, k, SearchConfig::default()).unwrap()
}

fn pairs() -> [(&'static str, &'static str, Mode, Case); 2] {
    [("spiderT", "spiderTprime", Mode::Strong, Case::Infinite), ("k2inf-minus-e", "k2inf", Mode::Weak, Case::Finite)]
}

fn everything() -> NodeSet {
    NodeSet {
        finite: Default::default(),
        from: Some(0),
    }
}

#[test]
fn gamma_is_functional() {
    for (g, h, mode, _) in pairs() {
        let gen = generation(g, h, mode, 1);
        for (c, k) in gen.gamma.nodes_below(40) {
            assert_eq!(gen.gamma.out_degree(c, k), 1, "{g}: copy {k} of class {c}");
            let (j, v) = gen.gamma.out(c, k).unwrap();
            assert!(gen.gamma.mults[j].contains(v as usize));
        }
    }
}

#[test]
fn partition_invariants() {
    for (g, h, mode, case) in pairs() {
        let gen = generation(g, h, mode, 1);
        assert_eq!(gen.case, case);
        check_partition(&gen.gamma, &gen.parts, 30).unwrap();
        let a = gen.mismatch.class;
        let found = gen.parts.a[a].cardinality();
        match (gen.mismatch.count, gen.mismatch.partner_count) {
            (Multiplicity::Omega, _) => assert_eq!(found, Multiplicity::Omega),
            (Multiplicity::Finite(cg), Multiplicity::Finite(ch)) => {
                assert!(found.is_omega() || found.finite().unwrap() >= cg - ch)
            }
            other => panic!("impossible counts {other:?}"),
        }
    }
}

#[test]
fn gamma_leaves_room() {
    for (g, h, mode, _) in pairs() {
        let gen = generation(g, h, mode, 1);
        let a = gen.mismatch.class;
        let base = &gen.base;
        assert!(verify_witness(&gen.gamma_map, base, base, mode).unwrap());
        assert!(!image_meets(&gen.gamma_map, &base.pres, a, &gen.parts.a[a]));
        for n in 1..=20 {
            assert!(image_avoids_on_truncation(&gen.gamma_map, &base.pres, a, &gen.parts.a[a], n).unwrap(), "{g} n={n}");
        }
    }
}

#[test]
fn beta_avoids_the_whole_class() {
    let gen = generation("spiderT", "spiderTprime", Mode::Strong, 1);
    let beta = gen.beta.as_ref().expect("infinite case builds beta");
    let a = gen.mismatch.class;
    assert!(verify_witness(beta, &gen.base, &gen.base, Mode::Strong).unwrap());
    assert!(!image_meets(beta, &gen.base.pres, a, &everything()));
    for n in 1..=20 {
        assert!(image_avoids_on_truncation(beta, &gen.base.pres, a, &everything(), n).unwrap());
    }
}

#[test]
fn generator_contract() {
    for (g, h, mode, _) in pairs() {
        let gen = generation(g, h, mode, 6);
        assert_eq!(gen.twins.len(), 6);
        let first_connected = is_connected_tuple(&gen.first).unwrap();
        for (i, t) in gen.twins.iter().enumerate() {
            assert!(t.verified);
            assert!(verify_witness(&t.into, &gen.first, &t.tuple, mode).unwrap());
            assert!(verify_witness(&t.back, &t.tuple, &gen.first, mode).unwrap());
            assert_eq!(rank(&t.tuple.pres), rank(&gen.first.pres));
            if first_connected {
                assert!(is_connected_tuple(&t.tuple).unwrap());
            }
            assert!(iso_tuples(&t.tuple, &gen.first).unwrap().is_none());
            for u in &gen.twins[..i] {
                assert!(iso_tuples(&t.tuple, &u.tuple).unwrap().is_none());
            }
            for n in [3, 5, 10] {
                let n1 = n.max(t.into.exceptions_needed(&gen.first.pres));
                instantiate_witness(&t.into, &gen.first.pres, &t.tuple.pres, n1).unwrap().check(mode == Mode::Strong).unwrap();
                let n2 = n.max(t.back.exceptions_needed(&t.tuple.pres));
                instantiate_witness(&t.back, &t.tuple.pres, &gen.first.pres, n2).unwrap().check(mode == Mode::Strong).unwrap();
            }
        }
    }
}

#[test]
fn k2inf_family_adds_pendant_vertices() {
    let gen = generation("k2inf-minus-e", "k2inf", Mode::Weak, 4);
    let counts: Vec<Multiplicity> = gen.twins.iter().map(|t| t.count).collect();
    assert_eq!(counts, (2..=5).map(Multiplicity::Finite).collect::<Vec<_>>());
}

#[test]
fn spider_family_keeps_finitely_many_short_legs() {
    let gen = generation("spiderT", "spiderTprime", Mode::Strong, 4);
    let counts: Vec<Multiplicity> = gen.twins.iter().map(|t| t.count).collect();
    assert_eq!(counts, (1..=4).map(Multiplicity::Finite).collect::<Vec<_>>());
}

#[test]
fn swapped_inputs_still_give_twins_of_the_first() {
    let gen = generation("k2inf", "k2inf-minus-e", Mode::Weak, 3);
    assert!(gen.swapped);
    for t in &gen.twins {
        assert!(verify_witness(&t.into, &gen.first, &t.tuple, Mode::Weak).unwrap());
        assert!(verify_witness(&t.back, &t.tuple, &gen.first, Mode::Weak).unwrap());
    }
}

#[test]
fn refuses_non_twins() {
    assert!(generate_twins(&fixture("k2inf"), &fixture("k2inf-minus-e"), Mode::Strong, 2, SearchConfig::default()).is_err());
    assert!(generate_twins(&fixture("star"), &fixture("star"), Mode::Weak, 2, SearchConfig::default()).is_err());
}
