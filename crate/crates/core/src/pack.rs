//! Level-aligned embedding search for normal forms of higher rank.
//!
//! The finite part of each source level goes into the finite part of the
//! matching target level, and every source class is packed into one target
//! class, one source copy per target copy. Answers are positive only: a
//! witness is returned after verification, otherwise the outcome is unknown.

use std::collections::{BTreeMap, BTreeSet};

use crate::isoembed::{verify_witness, EmbedOutcome, Embedding, SearchConfig};
use crate::presentation::{Edge, GraphTuple, Multiplicity, Name, Presentation};
use crate::rank::{kernel, rank};
use crate::witness::{Copies, EmbeddingWitness, Index, LevelMap, Mode, Segment, TargetLoc};

struct Search {
    mode: Mode,
    nodes: u64,
    budget: u64,
}

/// Boundary context: source names in scope and where they went.
#[derive(Clone, Default)]
struct Scope {
    map: BTreeMap<Name, Name>,
}

fn edge(p: &Presentation, a: &str, b: &str) -> bool {
    p.edges.contains(&Edge::new(a, b))
}

/// Per source class: target class, copy offset and stride.
struct Layout {
    place: Vec<(usize, i64, u64)>,
}

impl Search {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        self.nodes <= self.budget
    }

    /// Whether the finite part of `s` may go to the finite part of `t`
    /// under `assign`, given the boundary scope.
    fn consistent(&self, s: &Presentation, t: &Presentation, scope: &Scope, assign: &[(Name, Name)]) -> bool {
        let (v, w) = assign.last().expect("nonempty");
        for (v2, w2) in &assign[..assign.len() - 1] {
            let se = edge(s, v, v2);
            let te = edge(t, w, w2);
            if (se && !te) || (self.mode == Mode::Strong && te && !se) {
                return false;
            }
        }
        for (b, y) in &scope.map {
            let se = edge(s, v, b);
            let te = edge(t, w, y);
            if (se && !te) || (self.mode == Mode::Strong && te && !se) {
                return false;
            }
        }
        true
    }

    /// Finds a witness level for `s` inside `t`; `x` restricts the images
    /// of distinguished source vertices at the top.
    fn level(
        &mut self,
        s: &Presentation,
        t: &Presentation,
        scope: &Scope,
        x: Option<(&BTreeSet<Name>, &BTreeSet<Name>)>,
        prefix: &[(usize, Index)],
    ) -> Option<LevelMap> {
        let mut assign = Vec::new();
        self.place_vertices(s, t, scope, x, prefix, &mut assign)
    }

    fn place_vertices(
        &mut self,
        s: &Presentation,
        t: &Presentation,
        scope: &Scope,
        x: Option<(&BTreeSet<Name>, &BTreeSet<Name>)>,
        prefix: &[(usize, Index)],
        assign: &mut Vec<(Name, Name)>,
    ) -> Option<LevelMap> {
        if !self.tick() {
            return None;
        }
        if assign.len() == s.vertices.len() {
            return self.place_classes(s, t, scope, prefix, assign);
        }
        let v = &s.vertices[assign.len()];
        for w in &t.vertices {
            if assign.iter().any(|(_, u)| u == w) {
                continue;
            }
            if let Some((xs, ys)) = x {
                if xs.contains(v) && !ys.contains(w) {
                    continue;
                }
            }
            assign.push((v.clone(), w.clone()));
            if self.consistent(s, t, scope, assign) {
                if let Some(found) = self.place_vertices(s, t, scope, x, prefix, assign) {
                    return Some(found);
                }
            }
            assign.pop();
        }
        None
    }

    fn place_classes(
        &mut self,
        s: &Presentation,
        t: &Presentation,
        scope: &Scope,
        prefix: &[(usize, Index)],
        assign: &[(Name, Name)],
    ) -> Option<LevelMap> {
        let mut inner = scope.clone();
        for (v, w) in assign {
            inner.map.insert(v.clone(), w.clone());
        }
        let depth = prefix.len();
        // Which target classes can host one copy of each source class.
        let mut hosts: Vec<Vec<usize>> = Vec::new();
        for c in &s.classes {
            let mut ok = Vec::new();
            for (j, d) in t.classes.iter().enumerate() {
                if c.mult.is_omega() && !d.mult.is_omega() {
                    continue;
                }
                let mut probe = prefix.to_vec();
                probe.push((j, Index::var(depth)));
                if self.level(&c.child, &d.child, &inner, None, &probe).is_some() {
                    ok.push(j);
                }
            }
            if ok.is_empty() {
                return None;
            }
            hosts.push(ok);
        }
        let layout = self.allocate(s, t, &hosts, 0, &mut vec![None; s.classes.len()])?;
        let mut out = LevelMap::default();
        for (v, w) in assign {
            out.vertices.insert(
                v.clone(),
                TargetLoc {
                    path: prefix.to_vec(),
                    name: w.clone(),
                },
            );
        }
        for (c, &(j, offset, stride)) in s.classes.iter().zip(&layout.place) {
            let mut probe = prefix.to_vec();
            probe.push((
                j,
                Index::Affine {
                    var: depth,
                    offset,
                    stride,
                },
            ));
            let map = self.level(&c.child, &t.classes[j].child, &inner, None, &probe)?;
            out.classes.push(vec![Segment {
                copies: Copies::From(0),
                map,
            }]);
        }
        Some(out)
    }

    /// Chooses a host for every source class respecting capacities.
    fn allocate(
        &mut self,
        s: &Presentation,
        t: &Presentation,
        hosts: &[Vec<usize>],
        i: usize,
        choice: &mut Vec<Option<usize>>,
    ) -> Option<Layout> {
        if !self.tick() {
            return None;
        }
        if i == hosts.len() {
            return Some(layout(s, t, choice));
        }
        for &j in &hosts[i] {
            choice[i] = Some(j);
            if fits(s, t, choice, j) {
                if let Some(l) = self.allocate(s, t, hosts, i + 1, choice) {
                    return Some(l);
                }
            }
            choice[i] = None;
        }
        None
    }
}

fn fits(s: &Presentation, t: &Presentation, choice: &[Option<usize>], j: usize) -> bool {
    match t.classes[j].mult {
        Multiplicity::Omega => true,
        Multiplicity::Finite(cap) => {
            let mut total = 0u64;
            for (c, ch) in s.classes.iter().zip(choice) {
                if *ch == Some(j) {
                    match c.mult {
                        Multiplicity::Finite(m) => total += m,
                        Multiplicity::Omega => return false,
                    }
                }
            }
            total <= cap
        }
    }
}

fn layout(s: &Presentation, t: &Presentation, choice: &[Option<usize>]) -> Layout {
    let mut place = vec![(0, 0, 1); s.classes.len()];
    for j in 0..t.classes.len() {
        let members: Vec<usize> = (0..s.classes.len()).filter(|&i| choice[i] == Some(j)).collect();
        let mut next = 0i64;
        for &i in &members {
            if let Multiplicity::Finite(m) = s.classes[i].mult {
                place[i] = (j, next, 1);
                next += m as i64;
            }
        }
        let omegas: Vec<usize> = members.into_iter().filter(|&i| s.classes[i].mult.is_omega()).collect();
        for (r, &i) in omegas.iter().enumerate() {
            place[i] = (j, next + r as i64, omegas.len() as u64);
        }
    }
    Layout { place }
}

/// Level-aligned search between normal forms; only positive answers are
/// definite.
pub fn embed_levels(g: &GraphTuple, h: &GraphTuple, mode: Mode, config: SearchConfig) -> EmbedOutcome {
    let mut search = Search {
        mode,
        nodes: 0,
        budget: config.budget,
    };
    match search.level(&g.pres, &h.pres, &Scope::default(), Some((&g.x, &h.x)), &[]) {
        Some(top) => {
            let witness = EmbeddingWitness { mode, top };
            match verify_witness(&witness, g, h, mode) {
                Ok(true) => EmbedOutcome::Found(Embedding {
                    source: g.clone(),
                    target: h.clone(),
                    witness,
                }),
                _ => EmbedOutcome::Unknown("level-aligned candidate failed verification".into()),
            }
        }
        None if search.nodes > search.budget => {
            EmbedOutcome::Unknown(format!("search budget of {} nodes exhausted", config.budget))
        }
        None => EmbedOutcome::Unknown("no level-aligned embedding; other embeddings were not searched".into()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PackOutcome {
    Found(Vec<LevelMap>),
    None(String),
    Unknown(String),
}

/// Packs the copies of several connected source components, all sharing
/// one boundary, disjointly into the copies of one target class. `boundary`
/// maps source boundary names to target boundary names. Returns one level
/// map per source class, for the first variable of its copies.
pub fn pack(
    sources: &[(Presentation, Multiplicity)],
    target: &Presentation,
    target_mult: Multiplicity,
    boundary: &BTreeMap<Name, Name>,
    mode: Mode,
    config: SearchConfig,
) -> PackOutcome {
    if sources.is_empty() {
        return PackOutcome::Found(Vec::new());
    }
    // Connected subgraphs of full rank meet the kernel of the target, so
    // disjoint ones need distinct kernel vertices.
    let r = rank(target);
    if r > 0 {
        let kernel_size = kernel(target).map(|k| k.locations.len() as u64).unwrap_or(u64::MAX);
        let mut full = Multiplicity::Finite(0);
        for (c, m) in sources {
            if rank(c) == r {
                full = full.add(*m);
            }
        }
        let capacity = target_mult.mul(Multiplicity::Finite(kernel_size));
        let over = match (full, capacity) {
            (Multiplicity::Omega, Multiplicity::Finite(_)) => true,
            (Multiplicity::Finite(a), Multiplicity::Finite(b)) => a > b,
            _ => false,
        };
        if over {
            return PackOutcome::None(format!(
                "{full} full-rank components need distinct kernel vertices of the target, only {capacity} exist"
            ));
        }
    }
    let wrapper_s = Presentation {
        vertices: Vec::new(),
        edges: Default::default(),
        classes: sources
            .iter()
            .map(|(c, m)| crate::presentation::ComponentClass { mult: *m, child: c.clone() })
            .collect(),
    };
    let wrapper_t = Presentation::new().with_class(target_mult, target.clone());
    let mut search = Search {
        mode,
        nodes: 0,
        budget: config.budget,
    };
    let scope = Scope { map: boundary.clone() };
    match search.level(&wrapper_s, &wrapper_t, &scope, None, &[]) {
        Some(level) => PackOutcome::Found(
            level
                .classes
                .into_iter()
                .map(|mut segs| segs.remove(0).map)
                .collect(),
        ),
        None => PackOutcome::Unknown("no copy-per-copy packing found".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    fn child(text: &str) -> Presentation {
        parse(text).unwrap().pres.classes[0].child.clone()
    }

    #[test]
    fn two_leaves_into_fresh_copies() {
        let leaf = child("(graph (vertices a b) (class (mult 1) (graph (vertices v) (edges (v a)))))");
        let host = child("(graph (vertices a b) (class (mult w) (graph (vertices u) (edges (u a) (u b)))))");
        let boundary: BTreeMap<Name, Name> = [("a".into(), "a".into()), ("b".into(), "b".into())].into();
        match pack(&[(leaf, Multiplicity::Finite(2))], &host, Multiplicity::Omega, &boundary, Mode::Weak, SearchConfig::default()) {
            PackOutcome::Found(maps) => assert_eq!(maps.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_stars_do_not_fit_in_one() {
        let star = parse("(graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))").unwrap().pres;
        let out = pack(
            &[(star.clone(), Multiplicity::Finite(2))],
            &star,
            Multiplicity::ONE,
            &BTreeMap::new(),
            Mode::Weak,
            SearchConfig::default(),
        );
        assert!(matches!(out, PackOutcome::None(_)));
    }

    #[test]
    fn empty_sources() {
        let star = parse("(graph (vertices c))").unwrap().pres;
        assert_eq!(
            pack(&[], &star, Multiplicity::ONE, &BTreeMap::new(), Mode::Strong, SearchConfig::default()),
            PackOutcome::Found(Vec::new())
        );
    }
}
