//! Normal form, canonical codes and isomorphism of tuples.
//!
//! In normal form the top finite part of a tuple is `X ∪ K(G)` and every class
//! is one isomorphism type of component of `G - (X ∪ K(G))`, relative to the
//! identity on the top part. A component is stored with its own kernel as
//! finite part (finite components are stored flat), recursively. Two normal
//! forms realize isomorphic tuples exactly when they are equal up to renaming
//! and class order, which the canonical code detects.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::canon::{canonize, isomorphism, ColoredGraph};
use crate::decompose::{flatten, split_at, unfold};
use crate::error::Result;
use crate::presentation::{ComponentClass, GraphTuple, Multiplicity, Name, NameSupply, Presentation};
use crate::rank::kernel;

pub type Code = Vec<u32>;

const TOP_VERTEX: u32 = 0;
const DISTINGUISHED: u32 = 1;
const INNER_VERTEX: u32 = 2;
const OMEGA_CLASS: u32 = 3;
const FINITE_CLASS: u32 = 16;
const LABEL: u32 = 1 << 31;

const EDGE: usize = 0;
const MEMBER: usize = 1;
const NEST: usize = 2;

/// A presentation laid out as a colored graph: one node per vertex of each
/// level, one node per class, arcs for edges, level membership and nesting.
pub(crate) struct Skeleton {
    pub graph: ColoredGraph,
    /// For every node: `Some((class path, name))` for vertex nodes.
    pub vertex_of: Vec<Option<(Vec<usize>, Name)>>,
    /// For every node: `Some(class path)` for class nodes.
    pub class_of: Vec<Option<Vec<usize>>>,
}

impl Skeleton {
    pub fn build(p: &Presentation, labels: &BTreeMap<Name, u32>, x: &BTreeSet<Name>) -> Skeleton {
        let mut s = Skeleton {
            graph: ColoredGraph::new(Vec::new(), 3),
            vertex_of: Vec::new(),
            class_of: Vec::new(),
        };
        let mut scope = Vec::new();
        for (name, &label) in labels {
            let node = s.push(LABEL + label, None, None);
            scope.push((name.clone(), node));
        }
        s.add_level(p, None, &mut Vec::new(), &mut scope, x);
        s
    }

    fn push(&mut self, color: u32, vertex: Option<(Vec<usize>, Name)>, class: Option<Vec<usize>>) -> usize {
        self.graph.colors.push(color);
        for rel in &mut self.graph.relations {
            rel.push(Vec::new());
        }
        self.vertex_of.push(vertex);
        self.class_of.push(class);
        self.graph.colors.len() - 1
    }

    fn add_level(
        &mut self,
        p: &Presentation,
        parent: Option<usize>,
        path: &mut Vec<usize>,
        scope: &mut Vec<(Name, usize)>,
        x: &BTreeSet<Name>,
    ) {
        let depth = scope.len();
        for v in &p.vertices {
            let color = match parent {
                None if x.contains(v) => DISTINGUISHED,
                None => TOP_VERTEX,
                Some(_) => INNER_VERTEX,
            };
            let node = self.push(color, Some((path.clone(), v.clone())), None);
            if let Some(c) = parent {
                self.graph.add_arc(MEMBER, node, c);
            }
            scope.push((v.clone(), node));
        }
        let lookup = |scope: &[(Name, usize)], n: &str| scope.iter().rev().find(|(m, _)| m == n).map(|&(_, i)| i);
        for e in &p.edges {
            if let (Some(a), Some(b)) = (lookup(scope, &e.0), lookup(scope, &e.1)) {
                self.graph.add_edge(EDGE, a, b);
            }
        }
        for (i, class) in p.classes.iter().enumerate() {
            let color = match class.mult {
                Multiplicity::Omega => OMEGA_CLASS,
                Multiplicity::Finite(m) => FINITE_CLASS + m.min(u64::from(LABEL - FINITE_CLASS - 1)) as u32,
            };
            path.push(i);
            let node = self.push(color, None, Some(path.clone()));
            if let Some(c) = parent {
                self.graph.add_arc(NEST, node, c);
            }
            self.add_level(&class.child, Some(node), path, scope, x);
            path.pop();
        }
        scope.truncate(depth);
    }
}

/// Labels boundary names by their position in sorted order.
pub fn boundary_labels<'a>(names: impl IntoIterator<Item = &'a Name>) -> BTreeMap<Name, u32> {
    let sorted: BTreeSet<&Name> = names.into_iter().collect();
    sorted.into_iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect()
}

/// Code of a normalized presentation relative to labeled boundary names.
pub fn code_with_labels(p: &Presentation, labels: &BTreeMap<Name, u32>) -> Code {
    canonize(&Skeleton::build(p, labels, &BTreeSet::new()).graph).certificate
}

/// Canonical code of a tuple: equal codes exactly for isomorphic tuples.
pub fn canonical_code(t: &GraphTuple) -> Result<Code> {
    let n = normalize(t)?;
    Ok(canonize(&Skeleton::build(&n.pres, &BTreeMap::new(), &n.x).graph).certificate)
}

/// Normal form of a tuple.
pub fn normalize(t: &GraphTuple) -> Result<GraphTuple> {
    let k = kernel(&t.pres)?.locations;
    let mut supply = NameSupply::for_presentation(&t.pres);
    let (unfolded, names) = unfold(&t.pres, &k, &mut supply)?;
    let mut xbar: BTreeSet<Name> = t.x.clone();
    xbar.extend(names.into_values());
    let pres = normalize_around(&unfolded, &xbar, &BTreeSet::new(), &mut supply)?;
    Ok(GraphTuple { x: t.x.clone(), pres })
}

/// Normal form of the component `c` (connected once its boundary is removed).
fn normalize_component(c: &Presentation, boundary: &BTreeSet<Name>, supply: &mut NameSupply) -> Result<Presentation> {
    if c.is_finite() {
        let mut flat = flatten(c, supply)?;
        flat.vertices.sort();
        return Ok(flat);
    }
    let k = kernel(c)?.locations;
    let (unfolded, names) = unfold(c, &k, supply)?;
    let keep: BTreeSet<Name> = names.into_values().collect();
    normalize_around(&unfolded, &keep, boundary, supply)
}

/// Keeps `keep` (top-level vertices of `p`) as finite part and turns the
/// components of the rest into grouped, normalized classes.
fn normalize_around(
    p: &Presentation,
    keep: &BTreeSet<Name>,
    boundary: &BTreeSet<Name>,
    supply: &mut NameSupply,
) -> Result<Presentation> {
    let (mut top, pieces) = split_at(p, keep);
    top.vertices.sort();
    let inner: BTreeSet<Name> = boundary.iter().chain(keep.iter()).cloned().collect();
    let labels = boundary_labels(&inner);
    let mut grouped: BTreeMap<Code, ComponentClass> = BTreeMap::new();
    for piece in pieces {
        let child = normalize_component(&piece.pres, &inner, supply)?;
        let code = code_with_labels(&child, &labels);
        grouped
            .entry(code)
            .and_modify(|c| c.mult = c.mult.add(piece.mult))
            .or_insert(ComponentClass { mult: piece.mult, child });
    }
    top.classes = grouped.into_values().collect();
    Ok(top)
}

/// Components sharing a boundary, grouped into isomorphism classes relative
/// to the identity on the boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IClassTable {
    pub representatives: Vec<Presentation>,
    pub counts: Vec<Multiplicity>,
    pub codes: Vec<Code>,
}

pub fn group_iclasses(components: &[(Presentation, Multiplicity)], boundary: &BTreeSet<Name>) -> Result<IClassTable> {
    let labels = boundary_labels(boundary);
    let mut table = IClassTable {
        representatives: Vec::new(),
        counts: Vec::new(),
        codes: Vec::new(),
    };
    for (c, m) in components {
        let mut supply = NameSupply::for_presentation(c);
        supply.reserve(boundary.iter().cloned());
        let n = normalize_component(c, boundary, &mut supply)?;
        let code = code_with_labels(&n, &labels);
        match table.codes.iter().position(|k| *k == code) {
            Some(i) => table.counts[i] = table.counts[i].add(*m),
            None => {
                table.representatives.push(n);
                table.counts.push(*m);
                table.codes.push(code);
            }
        }
    }
    Ok(table)
}

/// An isomorphism between two normal forms: a bijection of the finite part
/// and a multiplicity-preserving bijection of classes, recursively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsoWitness {
    pub eta: BTreeMap<Name, Name>,
    /// `classes[i] = (j, w)`: source class `i` goes to target class `j`.
    pub classes: Vec<(usize, IsoWitness)>,
}

/// Isomorphism of two normalized presentations relative to labeled
/// boundary names (labels must agree on both sides).
pub fn iso_normalized(
    g: &Presentation,
    h: &Presentation,
    labels_g: &BTreeMap<Name, u32>,
    labels_h: &BTreeMap<Name, u32>,
    x_g: &BTreeSet<Name>,
    x_h: &BTreeSet<Name>,
) -> Option<IsoWitness> {
    let sg = Skeleton::build(g, labels_g, x_g);
    let sh = Skeleton::build(h, labels_h, x_h);
    let map = isomorphism(&sg.graph, &sh.graph)?;
    let mut vertex_map: BTreeMap<(Vec<usize>, Name), Name> = BTreeMap::new();
    let mut class_map: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for (u, &v) in map.iter().enumerate() {
        if let (Some(a), Some((_, b))) = (&sg.vertex_of[u], &sh.vertex_of[v]) {
            vertex_map.insert(a.clone(), b.clone());
        }
        if let (Some(a), Some(b)) = (&sg.class_of[u], &sh.class_of[v]) {
            class_map.insert(a.clone(), *b.last().expect("class paths are nonempty"));
        }
    }
    Some(assemble(g, &mut Vec::new(), &vertex_map, &class_map))
}

fn assemble(
    p: &Presentation,
    path: &mut Vec<usize>,
    vertex_map: &BTreeMap<(Vec<usize>, Name), Name>,
    class_map: &BTreeMap<Vec<usize>, usize>,
) -> IsoWitness {
    let eta = p
        .vertices
        .iter()
        .map(|v| (v.clone(), vertex_map[&(path.clone(), v.clone())].clone()))
        .collect();
    let classes = p
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            path.push(i);
            let j = class_map[path.as_slice()];
            let w = assemble(&c.child, path, vertex_map, class_map);
            path.pop();
            (j, w)
        })
        .collect();
    IsoWitness { eta, classes }
}

/// Isomorphism of tuples, as a witness between their normal forms.
pub fn iso_tuples(g: &GraphTuple, h: &GraphTuple) -> Result<Option<(GraphTuple, GraphTuple, IsoWitness)>> {
    let ng = normalize(g)?;
    let nh = normalize(h)?;
    let none = BTreeMap::new();
    let w = iso_normalized(&ng.pres, &nh.pres, &none, &none, &ng.x, &nh.x);
    Ok(w.map(|w| (ng, nh, w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    fn tuple(text: &str) -> GraphTuple {
        parse(text).unwrap()
    }

    const K2INF: &str = "(graph (vertices a b) (class (mult w) (graph (vertices u) (edges (u a) (u b)))))";
    const K2INF_E: &str = "(graph (vertices a b) (class (mult w) (graph (vertices u) (edges (u a) (u b)))) (class (mult 1) (graph (vertices v) (edges (v a)))))";

    #[test]
    fn star_nesting_is_flattened() {
        let nested = tuple("(graph (vertices c) (class (mult w) (graph (vertices) (class (mult 1) (graph (vertices l) (edges (l c)))))))");
        let flat = tuple("(graph (vertices z) (class (mult w) (graph (vertices q) (edges (q z)))))");
        let n = normalize(&nested).unwrap();
        assert_eq!(n.pres.vertices, vec!["c"]);
        assert_eq!(n.pres.classes.len(), 1);
        assert_eq!(n.pres.classes[0].child.vertices.len(), 1);
        assert_eq!(canonical_code(&nested).unwrap(), canonical_code(&flat).unwrap());
    }

    #[test]
    fn identical_classes_merge() {
        let t = tuple("(graph (vertices a b) (class (mult w) (graph (vertices u) (edges (u a) (u b)))) (class (mult w) (graph (vertices w) (edges (w b) (w a)))))");
        let n = normalize(&t).unwrap();
        assert_eq!(n.pres.classes.len(), 1);
        assert_eq!(n.pres.classes[0].mult, Multiplicity::Omega);
    }

    #[test]
    fn k2inf_minus_edge_normal_form() {
        // An edge of K_{2,inf} removed: one leaf keeps only the edge to a.
        let n = normalize(&tuple(K2INF_E)).unwrap();
        assert_eq!(n.pres.vertices, vec!["a", "b"]);
        let mut mults: Vec<Multiplicity> = n.pres.classes.iter().map(|c| c.mult).collect();
        mults.sort();
        assert_eq!(mults, vec![Multiplicity::Finite(1), Multiplicity::Omega]);
        assert_ne!(canonical_code(&tuple(K2INF)).unwrap(), canonical_code(&tuple(K2INF_E)).unwrap());
    }

    #[test]
    fn spiders_differ() {
        let t = tuple("(graph (vertices c) (class (mult w) (graph (vertices x) (edges (x c)))) (class (mult w) (graph (vertices y z) (edges (y c) (y z)))))");
        let t2 = tuple("(graph (vertices c) (class (mult w) (graph (vertices y z) (edges (y c) (y z)))))");
        assert_ne!(canonical_code(&t).unwrap(), canonical_code(&t2).unwrap());
    }

    #[test]
    fn iso_witness_for_relabeled_star() {
        let a = tuple("(graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))");
        let b = tuple("(graph (vertices m) (class (mult w) (graph (vertices q) (edges (m q)))))");
        let (_, _, w) = iso_tuples(&a, &b).unwrap().unwrap();
        assert_eq!(w.eta["c"], "m");
        assert_eq!(w.classes[0].1.eta["l"], "q");
        assert!(iso_tuples(&tuple(K2INF), &tuple(K2INF_E)).unwrap().is_none());
    }

    #[test]
    fn normalize_is_idempotent_on_codes() {
        for text in [K2INF, K2INF_E] {
            let n = normalize(&tuple(text)).unwrap();
            let nn = normalize(&n).unwrap();
            assert_eq!(canonical_code(&n).unwrap(), canonical_code(&nn).unwrap());
            assert!(iso_tuples(&n, &nn).unwrap().is_some());
        }
    }

    #[test]
    fn iclass_table() {
        let a = tuple("(graph (vertices a b) (class (mult 1) (graph (vertices u) (edges (u a) (u b)))))").pres;
        let comp = a.classes[0].child.clone();
        let other = tuple("(graph (vertices a b) (class (mult 1) (graph (vertices v) (edges (v a)))))").pres.classes[0].child.clone();
        let boundary: BTreeSet<Name> = ["a".to_string(), "b".to_string()].into();
        let table = group_iclasses(
            &[(comp.clone(), Multiplicity::Omega), (other, Multiplicity::ONE), (comp, Multiplicity::Finite(2))],
            &boundary,
        )
        .unwrap();
        assert_eq!(table.counts, vec![Multiplicity::Omega, Multiplicity::ONE]);
        assert!(group_iclasses(&[], &boundary).unwrap().representatives.is_empty());
    }
}
