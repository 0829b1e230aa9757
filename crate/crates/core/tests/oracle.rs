mod common;

use common::{fixture, random};
use rayless::error::Error;
use rayless::finite::{truncate, FiniteGraph};
use rayless::oracle::{finite_embed, finite_iso, instantiate_witness};
use rayless::witness::{EmbeddingWitness, Index, Mode};
use rayless::Location;

fn graph(n: usize, edges: &[(usize, usize)]) -> FiniteGraph {
    let mut g = FiniteGraph::new();
    for i in 0..n {
        g.add_vertex(Location::top(format!("v{i}")));
    }
    for &(a, b) in edges {
        g.add_edge(a, b);
    }
    g
}

fn star(k: usize) -> FiniteGraph {
    graph(k + 1, &(1..=k).map(|i| (0, i)).collect::<Vec<_>>())
}

#[test]
fn small_embeddings() {
    assert!(finite_embed(&star(3), &star(5), true).unwrap().is_some());
    let path = graph(4, &[(0, 1), (1, 2), (2, 3)]);
    assert!(finite_embed(&star(3), &path, false).unwrap().is_none());
    let triangle = graph(3, &[(0, 1), (1, 2), (0, 2)]);
    assert!(finite_embed(&path.induced(|l| l.name != "v3"), &triangle, false).unwrap().is_some());
    assert!(finite_embed(&path.induced(|l| l.name != "v3"), &triangle, true).unwrap().is_none());
}

#[test]
fn isomorphism_of_relabelled_graphs() {
    let a = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]);
    let b = graph(5, &[(4, 3), (3, 2), (2, 1), (1, 0), (0, 4), (4, 2)]);
    let m = finite_iso(&a, &b).unwrap().expect("isomorphic");
    assert_eq!(m.map.len(), 5);
    assert!(finite_iso(&star(3), &graph(4, &[(0, 1), (1, 2), (2, 3)])).unwrap().is_none());
}

#[test]
fn oracle_refuses_large_inputs() {
    let big = star(60);
    assert!(matches!(finite_iso(&big, &big), Err(Error::OracleCap(_))));
}

#[test]
fn identity_witness_instantiates_as_identity() {
    let t = fixture("spiderT");
    let w = EmbeddingWitness::identity(&t.pres, Mode::Strong);
    let inst = instantiate_witness(&w, &t.pres, &t.pres, 3).unwrap();
    inst.check(true).unwrap();
    for (i, &j) in inst.map.iter().enumerate() {
        assert_eq!(inst.source.vertices()[i], inst.target.vertices()[j]);
    }
}

#[test]
fn corrupted_witness_is_caught() {
    let t = fixture("star");
    let mut w = EmbeddingWitness::identity(&t.pres, Mode::Strong);
    let leaf = w.top.classes[0][0].map.vertices.get_mut("l").unwrap();
    leaf.path[0].1 = Index::Const(0);
    let inst = instantiate_witness(&w, &t.pres, &t.pres, 3).unwrap();
    assert!(inst.check(false).is_err());
}

#[test]
fn truncation_too_small_for_exceptions() {
    let t = fixture("star");
    let mut w = EmbeddingWitness::identity(&t.pres, Mode::Strong);
    let tail = w.top.classes[0].remove(0);
    for j in 0..4 {
        let mut seg = tail.clone();
        seg.copies = rayless::witness::Copies::One(j);
        w.top.classes[0].push(seg);
    }
    let mut rest = tail;
    rest.copies = rayless::witness::Copies::From(4);
    w.top.classes[0].push(rest);
    assert!(matches!(instantiate_witness(&w, &t.pres, &t.pres, 2), Err(Error::TruncationTooSmall { .. })));
}

#[test]
fn thousand_random_presentations_validate() {
    for seed in 0..1000 {
        random(seed).validate().unwrap();
    }
}

#[test]
fn truncations_of_normal_forms_match() {
    for name in common::FIXTURES {
        let t = fixture(name);
        let nf = rayless::normal::normalize(&t).unwrap();
        for n in [2, 3, 4] {
            let (a, b) = (truncate(&t.pres, n).unwrap(), truncate(&nf.pres, n).unwrap());
            assert!(finite_iso(&a, &b).unwrap().is_some(), "{name} at {n}");
        }
    }
}
