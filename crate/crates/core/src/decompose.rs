//! Symbolic surgery on presentations: pulling individual copies up to the
//! top level, splitting the realization into connected components, and
//! deleting finite vertex sets. Classes untouched by the surgery keep their
//! multiplicities and are never expanded.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::presentation::{ComponentClass, GraphTuple, Location, Multiplicity, Name, NameSupply, Presentation};

/// A connected piece of a realization, repeated `mult` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub pres: Presentation,
    pub mult: Multiplicity,
}

/// Inlines every class copy on the way to `targets`, so that afterwards all
/// targets are vertices of the top-level finite part. Returns the new
/// presentation and the new top-level name of every target.
pub fn unfold(
    p: &Presentation,
    targets: &BTreeSet<Location>,
    supply: &mut NameSupply,
) -> Result<(Presentation, BTreeMap<Location, Name>)> {
    let mut names = BTreeMap::new();
    let mut per_copy: BTreeMap<(usize, usize), BTreeSet<Location>> = BTreeMap::new();
    for loc in targets {
        match loc.path.split_first() {
            None => {
                if !p.has_vertex(&loc.name) {
                    return Err(Error::InvalidLocation(loc.to_string()));
                }
                names.insert(loc.clone(), loc.name.clone());
            }
            Some((&(class, copy), rest)) => {
                match p.classes.get(class) {
                    Some(c) if c.mult.contains(copy) => {}
                    _ => return Err(Error::InvalidLocation(loc.to_string())),
                }
                per_copy
                    .entry((class, copy))
                    .or_default()
                    .insert(Location::new(rest.to_vec(), loc.name.clone()));
            }
        }
    }
    let mut out = Presentation {
        vertices: p.vertices.clone(),
        edges: p.edges.clone(),
        classes: Vec::new(),
    };
    let mut removed = vec![0u64; p.classes.len()];
    let mut inlined = Vec::new();
    for ((class, copy), subs) in per_copy {
        let (child, sub_names) = unfold(&p.classes[class].child, &subs, supply)?;
        let rename: BTreeMap<Name, Name> = child
            .vertices
            .iter()
            .map(|v| (v.clone(), supply.fresh(v)))
            .collect();
        let child = child.renamed(&rename);
        out.vertices.extend(child.vertices);
        out.edges.extend(child.edges);
        inlined.extend(child.classes);
        for (sub, name) in sub_names {
            let mut path = vec![(class, copy)];
            path.extend(sub.path);
            names.insert(Location::new(path, sub.name), rename[&name].clone());
        }
        removed[class] += 1;
    }
    for (class, k) in p.classes.iter().zip(removed) {
        match class.mult.sub(k) {
            Some(Multiplicity::Finite(0)) => {}
            Some(mult) => out.classes.push(ComponentClass {
                mult,
                child: class.child.clone(),
            }),
            None => unreachable!("copy indices were checked against the multiplicity"),
        }
    }
    out.classes.extend(inlined);
    Ok((out, names))
}

/// Expands a finite presentation into a single level.
pub fn flatten(p: &Presentation, supply: &mut NameSupply) -> Result<Presentation> {
    let mut out = Presentation {
        vertices: p.vertices.clone(),
        edges: p.edges.clone(),
        classes: Vec::new(),
    };
    for class in &p.classes {
        let copies = class.mult.finite().ok_or(Error::Infinite)?;
        let child = flatten(&class.child, supply)?;
        for _ in 0..copies {
            let rename: BTreeMap<Name, Name> = child
                .vertices
                .iter()
                .map(|v| (v.clone(), supply.fresh(v)))
                .collect();
            let copy = child.renamed(&rename);
            out.vertices.extend(copy.vertices);
            out.edges.extend(copy.edges);
        }
    }
    Ok(out)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the realization of `p` (names bound outside `p`
/// are boundary, not vertices). Every returned presentation is connected
/// and every one of its classes is itself a connected piece.
pub fn components(p: &Presentation) -> Vec<Component> {
    let local: HashMap<&str, usize> = p
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let mut uf = UnionFind::new(p.vertices.len());
    for e in &p.edges {
        if let (Some(&a), Some(&b)) = (local.get(e.0.as_str()), local.get(e.1.as_str())) {
            uf.union(a, b);
        }
    }
    let mut anchored: Vec<(usize, Component)> = Vec::new();
    let mut free = Vec::new();
    for class in &p.classes {
        for piece in components(&class.child) {
            let mult = class.mult.mul(piece.mult);
            let touched: Vec<usize> = piece
                .pres
                .free_names()
                .iter()
                .filter_map(|n| local.get(n.as_str()).copied())
                .collect();
            match touched.split_first() {
                None => free.push(Component {
                    pres: piece.pres,
                    mult,
                }),
                Some((&first, rest)) => {
                    for &t in rest {
                        uf.union(first, t);
                    }
                    anchored.push((
                        first,
                        Component {
                            pres: piece.pres,
                            mult,
                        },
                    ));
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Presentation> = BTreeMap::new();
    for (i, v) in p.vertices.iter().enumerate() {
        let root = uf.find(i);
        groups.entry(root).or_default().vertices.push(v.clone());
    }
    for e in &p.edges {
        let anchor = local
            .get(e.0.as_str())
            .or_else(|| local.get(e.1.as_str()))
            .copied()
            .expect("validated edges have a local endpoint");
        let root = uf.find(anchor);
        groups.get_mut(&root).expect("group exists").edges.insert(e.clone());
    }
    for (anchor, piece) in anchored {
        let root = uf.find(anchor);
        groups
            .get_mut(&root)
            .expect("group exists")
            .classes
            .push(ComponentClass {
                mult: piece.mult,
                child: piece.pres,
            });
    }
    let mut out: Vec<Component> = groups
        .into_values()
        .map(|pres| Component {
            pres,
            mult: Multiplicity::ONE,
        })
        .collect();
    out.extend(free.into_iter().filter(|c| c.mult != Multiplicity::Finite(0)));
    out.retain(|c| c.pres.cardinality() != Multiplicity::Finite(0));
    out
}

/// Splits `p` at a set of its top-level vertices: returns the presentation of
/// the kept vertices alone, and the components of the rest, whose edges to
/// the kept vertices remain as boundary references.
pub fn split_at(p: &Presentation, keep: &BTreeSet<Name>) -> (Presentation, Vec<Component>) {
    let kept = Presentation {
        vertices: p.vertices.iter().filter(|v| keep.contains(*v)).cloned().collect(),
        edges: p
            .edges
            .iter()
            .filter(|e| {
                (keep.contains(&e.0) || !p.has_vertex(&e.0)) && (keep.contains(&e.1) || !p.has_vertex(&e.1))
            })
            .cloned()
            .collect(),
        classes: Vec::new(),
    };
    let rest = Presentation {
        vertices: p.vertices.iter().filter(|v| !keep.contains(*v)).cloned().collect(),
        edges: p
            .edges
            .iter()
            .filter(|e| {
                (p.has_vertex(&e.0) && !keep.contains(&e.0)) || (p.has_vertex(&e.1) && !keep.contains(&e.1))
            })
            .cloned()
            .collect(),
        classes: p.classes.clone(),
    };
    (kept, components(&rest))
}

/// Components of the realization minus a finite set of vertices, each as a
/// presentation with empty boundary.
pub fn delete_locations(p: &Presentation, t: &BTreeSet<Location>) -> Result<Vec<Component>> {
    let (pieces, deleted) = delete_keeping_boundary(p, t)?;
    Ok(pieces
        .into_iter()
        .map(|c| Component {
            pres: c.pres.without_references(&deleted),
            mult: c.mult,
        })
        .collect())
}

/// Like [`delete_locations`] but keeps edges to the deleted vertices as
/// references to their (possibly renamed) names, returned alongside.
pub(crate) fn delete_keeping_boundary(
    p: &Presentation,
    t: &BTreeSet<Location>,
) -> Result<(Vec<Component>, BTreeSet<Name>)> {
    let mut supply = NameSupply::for_presentation(p);
    let (unfolded, names) = unfold(p, t, &mut supply)?;
    let deleted: BTreeSet<Name> = names.into_values().collect();
    let (_, pieces) = split_at(&unfolded, &deleted);
    Ok((pieces, deleted))
}

/// Components of the realization minus the distinguished set.
pub fn tuple_minus_x_components(t: &GraphTuple) -> Result<Vec<Component>> {
    let x: BTreeSet<Location> = t.x.iter().map(|v| Location::top(v.clone())).collect();
    delete_locations(&t.pres, &x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::truncate;
    use crate::format::parse;
    use Multiplicity::{Finite, Omega};

    fn pres(text: &str) -> Presentation {
        parse(text).unwrap().pres
    }

    const STAR: &str = "(graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))";
    const K2INF: &str = "(graph (vertices a b) (class (mult w) (graph (vertices u) (edges (u a) (u b)))))";

    #[test]
    fn deleting_the_star_centre() {
        let comps = delete_locations(&pres(STAR), &[Location::top("c")].into()).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].mult, Omega);
        assert_eq!(comps[0].pres.cardinality(), Finite(1));
    }

    #[test]
    fn deleting_nothing_keeps_connected_graph() {
        let p = pres(K2INF);
        let comps = delete_locations(&p, &BTreeSet::new()).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].mult, Finite(1));
        assert_eq!(comps[0].pres, p);
    }

    #[test]
    fn deleting_one_side_of_k2_infinity_leaves_a_star() {
        let comps = delete_locations(&pres(K2INF), &[Location::top("a")].into()).unwrap();
        assert_eq!(comps.len(), 1);
        let g = truncate(&comps[0].pres, 4).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.edge_count(), 4);
        assert_eq!((0..5).map(|v| g.degree(v)).max(), Some(4));
    }

    #[test]
    fn unfolding_a_nested_copy() {
        let p = pres("(graph (vertices) (class (mult w) (graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))))");
        let target = Location::new(vec![(0, 1), (0, 0)], "l");
        let mut supply = NameSupply::for_presentation(&p);
        let (q, names) = unfold(&p, &[target.clone()].into(), &mut supply).unwrap();
        q.validate().unwrap();
        let l = &names[&target];
        assert!(q.has_vertex(l));
        assert_eq!(q.classes.len(), 2);
        assert_eq!(q.cardinality(), Omega);
    }

    #[test]
    fn components_flatten_redundant_nesting() {
        let p = pres("(graph (vertices) (class (mult w) (graph (vertices) (class (mult 2) (graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))))))");
        let comps = components(&p);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].mult, Omega);
        assert_eq!(comps[0].pres.vertices, vec!["c"]);
    }

    #[test]
    fn deletion_matches_truncation_components() {
        let p = pres(K2INF);
        let t: BTreeSet<Location> = [Location::new(vec![(0, 0)], "u")].into();
        let comps = delete_locations(&p, &t).unwrap();
        assert_eq!(comps.len(), 1);
        for n in 2..5 {
            let whole = truncate(&p, n).unwrap();
            let rest = whole.induced(|l| !t.contains(l));
            let piece = truncate(&comps[0].pres, n - 1).unwrap();
            assert_eq!(rest.len(), piece.len());
            assert_eq!(rest.edge_count(), piece.edge_count());
        }
    }

    #[test]
    fn flatten_expands_finite_classes() {
        let p = pres("(graph (vertices c) (class (mult 3) (graph (vertices l m) (edges (l c) (l m)))))");
        let mut supply = NameSupply::for_presentation(&p);
        let flat = flatten(&p, &mut supply).unwrap();
        assert_eq!(flat.vertices.len(), 7);
        assert_eq!(flat.edges.len(), 6);
        assert!(flat.classes.is_empty());
        flat.validate().unwrap();
    }
}
