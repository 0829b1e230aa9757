//! Infinite families of twins from one twin pair.
//!
//! Nodes of the digraph Γ are the copies of the top-level classes of a
//! normal form, arcs follow a self-embedding ι that fixes the finite part.
//! Node sets are stored per class as a finite set plus an optional tail of
//! all copies from some index on; every query below reduces to such data.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::isoembed::{align_embeddings, maps_kernel_onto, twin_check, verify_witness, SearchConfig, TwinVerdict};
use crate::normal::{boundary_labels, canonical_code, code_with_labels};
use crate::presentation::{GraphTuple, Multiplicity, Name, Presentation};
use crate::rank::{is_connected_tuple, rank};
use crate::witness::{compose, Copies, EmbeddingWitness, Index, LevelMap, Mode, Segment};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NodeSet {
    pub finite: BTreeSet<u64>,
    pub from: Option<u64>,
}

impl NodeSet {
    pub fn contains(&self, k: u64) -> bool {
        self.finite.contains(&k) || self.from.is_some_and(|s| k >= s)
    }

    pub fn is_empty(&self) -> bool {
        self.finite.is_empty() && self.from.is_none()
    }

    pub fn cardinality(&self) -> Multiplicity {
        match self.from {
            Some(_) => Multiplicity::Omega,
            None => Multiplicity::Finite(self.finite.len() as u64),
        }
    }

    /// Whether `offset + stride * k` lies in the set for some `k` in the
    /// domain (`k >= start`, and `k <= end` when given).
    fn meets_progression(&self, offset: i64, stride: u64, start: u64, end: Option<u64>) -> bool {
        let value = |k: u64| offset + (stride * k) as i64;
        if let Some(s) = self.from {
            match end {
                None => return true,
                Some(e) if value(e) >= s as i64 => return true,
                Some(_) => {}
            }
        }
        self.finite.iter().any(|&f| {
            let d = f as i64 - offset;
            if stride == 0 {
                return d == 0;
            }
            d >= 0 && d % stride as i64 == 0 && {
                let k = (d / stride as i64) as u64;
                k >= start && end.is_none_or(|e| k <= e)
            }
        })
    }
}

/// One arc family: copies of a class sent into copies of a target class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Arc {
    pub copies: Copies,
    pub target_class: usize,
    pub index: Index,
}

/// The digraph Γ on component copies induced by a self-embedding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassDigraph {
    pub mults: Vec<Multiplicity>,
    pub arcs: Vec<Vec<Arc>>,
}

impl ClassDigraph {
    fn arc(&self, class: usize, k: u64) -> Option<&Arc> {
        self.arcs[class].iter().find(|a| a.copies.contains(k))
    }

    /// The out-neighbour of copy `k` of `class`.
    pub fn out(&self, class: usize, k: u64) -> Option<(usize, u64)> {
        let a = self.arc(class, k)?;
        a.index.eval(&[k]).map(|j| (a.target_class, j))
    }

    /// Out-degree of a node: the number of arc families covering it.
    pub fn out_degree(&self, class: usize, k: u64) -> usize {
        self.arcs[class].iter().filter(|a| a.copies.contains(k)).count()
    }

    fn tail(&self, class: usize) -> Option<(u64, &Arc)> {
        self.arcs[class].iter().find_map(|a| match a.copies {
            Copies::From(s) if self.mults[class].is_omega() => Some((s, a)),
            _ => None,
        })
    }

    /// Every node with copy index below `n`.
    pub fn nodes_below(&self, n: u64) -> Vec<(usize, u64)> {
        let mut out = Vec::new();
        for (c, m) in self.mults.iter().enumerate() {
            let limit = m.finite().unwrap_or(n).min(n);
            out.extend((0..limit).map(|k| (c, k)));
        }
        out
    }
}

/// Builds Γ from a self-embedding `iota` of the normal form `g` that fixes
/// its finite part.
pub fn build_gamma(g: &GraphTuple, iota: &EmbeddingWitness) -> Result<ClassDigraph> {
    for v in &g.pres.vertices {
        match iota.top.vertices.get(v) {
            Some(t) if t.path.is_empty() && &t.name == v => {}
            _ => return Err(Error::Precondition(format!("self-embedding moves `{v}`; align it first"))),
        }
    }
    let mut arcs = Vec::new();
    for (segs, class) in iota.top.classes.iter().zip(&g.pres.classes) {
        let mut out = Vec::new();
        for s in segs {
            let targets = s.map.targets();
            let first = targets
                .first()
                .and_then(|t| t.path.first())
                .copied()
                .ok_or_else(|| Error::Precondition("a component is mapped into the finite part".into()))?;
            if targets.iter().any(|t| t.path.first() != Some(&first)) {
                return Err(Error::Precondition("a component is split across components".into()));
            }
            let copies = match (s.copies, class.mult) {
                (Copies::From(j), Multiplicity::Finite(m)) => {
                    for k in j..m {
                        out.push(Arc {
                            copies: Copies::One(k),
                            target_class: first.0,
                            index: Index::Const(first.1.eval(&[k]).unwrap_or(0)),
                        });
                    }
                    continue;
                }
                (c, _) => c,
            };
            out.push(Arc {
                copies,
                target_class: first.0,
                index: first.1,
            });
        }
        arcs.push(out);
    }
    Ok(ClassDigraph {
        mults: g.pres.classes.iter().map(|c| c.mult).collect(),
        arcs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    /// Class of the first tuple with more copies than its partner.
    pub class: usize,
    /// The partner class of the second tuple under η, if any.
    pub partner: Option<usize>,
    pub count: Multiplicity,
    pub partner_count: Multiplicity,
}

fn exceeds(a: Multiplicity, b: Multiplicity) -> bool {
    match (a, b) {
        (Multiplicity::Omega, Multiplicity::Finite(_)) => true,
        (Multiplicity::Finite(x), Multiplicity::Finite(y)) => x > y,
        _ => false,
    }
}

/// A class `A` of `g` whose number of copies exceeds the number of copies
/// of the class of `h` that is isomorphic to it relative to `eta` (zero when
/// there is none). `None` when no class of `g` has more copies.
pub fn find_mismatch(g: &GraphTuple, h: &GraphTuple, eta: &BTreeMap<Name, Name>) -> Result<Option<Mismatch>> {
    let labels_h = boundary_labels(&h.pres.vertices);
    let mut labels_g = BTreeMap::new();
    for v in &g.pres.vertices {
        let image = eta
            .get(v)
            .ok_or_else(|| Error::Precondition(format!("η does not map `{v}`")))?;
        let label = labels_h
            .get(image)
            .ok_or_else(|| Error::Precondition(format!("η maps `{v}` outside the finite part")))?;
        labels_g.insert(v.clone(), *label);
    }
    let codes_h: Vec<_> = h.pres.classes.iter().map(|c| code_with_labels(&c.child, &labels_h)).collect();
    for (i, class) in g.pres.classes.iter().enumerate() {
        let code = code_with_labels(&class.child, &labels_g);
        let partner = codes_h.iter().position(|c| *c == code);
        let partner_count = partner.map_or(Multiplicity::Finite(0), |j| h.pres.classes[j].mult);
        if exceeds(class.mult, partner_count) {
            return Ok(Some(Mismatch {
                class: i,
                partner,
                count: class.mult,
                partner_count,
            }));
        }
    }
    Ok(None)
}

/// The partition (𝒜⁻, 𝒜, 𝒜⁺) of the nodes of Γ, stored per class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TriPartition {
    pub class: usize,
    pub minus: Vec<NodeSet>,
    pub a: Vec<NodeSet>,
    pub plus: Vec<NodeSet>,
}

impl TriPartition {
    pub fn part_of(&self, class: usize, k: u64) -> Part {
        if self.minus[class].contains(k) {
            Part::Minus
        } else if self.a[class].contains(k) {
            Part::A
        } else {
            Part::Plus
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Part {
    Minus,
    A,
    Plus,
}

enum TailFate {
    Hits,
    Escapes,
    Lands(usize, u64),
}

const ORBIT_CAP: usize = 100_000;

struct Orbits<'a> {
    gamma: &'a ClassDigraph,
    target: usize,
    tails: BTreeMap<usize, (u64, TailFate)>,
}

impl Orbits<'_> {
    /// Follows the tail of `class` symbolically: for all copies from the
    /// returned threshold on, the orbit either reaches the target class,
    /// runs off to ever larger copies avoiding it, or reaches one fixed
    /// node.
    fn tail_fate(gamma: &ClassDigraph, class: usize, target: usize) -> Result<Option<(u64, TailFate)>> {
        let Some((start, _)) = gamma.tail(class) else {
            return Ok(None);
        };
        let mut threshold = start;
        let mut seen: Vec<(usize, i64, u64)> = Vec::new();
        let (mut c, mut offset, mut stride) = (class, 0i64, 1u64);
        loop {
            let (t, arc) = gamma
                .tail(c)
                .ok_or_else(|| Error::Precondition("infinitely many copies sent into a finite class".into()))?;
            let need = (t as i64 - offset + stride as i64 - 1).div_euclid(stride as i64);
            threshold = threshold.max(need.max(0) as u64);
            seen.push((c, offset, stride));
            let next = arc.index;
            match next {
                Index::Const(v) => {
                    return Ok(Some((
                        threshold,
                        if arc.target_class == target { TailFate::Hits } else { TailFate::Lands(arc.target_class, v) },
                    )));
                }
                Index::Affine { offset: o, stride: s, .. } => {
                    offset = o + s as i64 * offset;
                    stride *= s;
                    c = arc.target_class;
                }
            }
            if c == target {
                return Ok(Some((threshold, TailFate::Hits)));
            }
            if let Some(&(_, o1, s1)) = seen.iter().find(|(d, _, _)| *d == c) {
                let grows = stride > s1 || (stride == s1 && offset >= o1);
                if !grows {
                    return Err(Error::Precondition("self-embedding moves copies downwards".into()));
                }
                if stride > s1 {
                    let need = (o1 - offset).div_euclid((stride - s1) as i64) + 1;
                    threshold = threshold.max(need.max(0) as u64);
                }
                return Ok(Some((threshold, TailFate::Escapes)));
            }
        }
    }

    /// Whether a directed path of positive length leads from the node to
    /// the target class.
    fn reaches(&self, class: usize, k: u64) -> Result<bool> {
        let mut visited = BTreeSet::new();
        let (mut c, mut k) = (class, k);
        for _ in 0..ORBIT_CAP {
            if let Some((t, fate)) = self.tails.get(&c) {
                if k >= *t && self.gamma.tail(c).is_some_and(|(s, _)| k >= s) {
                    match fate {
                        TailFate::Hits => return Ok(true),
                        TailFate::Escapes => return Ok(false),
                        TailFate::Lands(j, v) => {
                            if !visited.insert((*j, *v)) {
                                return Ok(false);
                            }
                            (c, k) = (*j, *v);
                            continue;
                        }
                    }
                }
            }
            let (j, v) = self
                .gamma
                .out(c, k)
                .ok_or_else(|| Error::Precondition(format!("copy {k} of class {c} has no out-neighbour")))?;
            if j == self.target {
                return Ok(true);
            }
            if !visited.insert((j, v)) {
                return Ok(false);
            }
            (c, k) = (j, v);
        }
        Err(Error::Precondition("orbit did not settle".into()))
    }
}

/// Splits the nodes of Γ for the class `a` of the mismatch.
pub fn split_classes(gamma: &ClassDigraph, a: usize) -> Result<TriPartition> {
    let mut tails = BTreeMap::new();
    for c in 0..gamma.mults.len() {
        if let Some(fate) = Orbits::tail_fate(gamma, c, a)? {
            tails.insert(c, fate);
        }
    }
    let orbits = Orbits { gamma, target: a, tails };
    let n = gamma.mults.len();
    let mut parts = TriPartition {
        class: a,
        minus: vec![NodeSet::default(); n],
        a: vec![NodeSet::default(); n],
        plus: vec![NodeSet::default(); n],
    };
    for c in 0..n {
        let in_a = |k: u64| c == a && gamma.out(c, k).is_some_and(|(j, _)| j != a);
        let classify = |k: u64, parts: &mut TriPartition| -> Result<()> {
            let set = if in_a(k) {
                &mut parts.a[c]
            } else if orbits.reaches(c, k)? {
                &mut parts.minus[c]
            } else {
                &mut parts.plus[c]
            };
            set.finite.insert(k);
            Ok(())
        };
        match (gamma.mults[c], orbits.tails.get(&c)) {
            (Multiplicity::Finite(m), _) => {
                for k in 0..m {
                    classify(k, &mut parts)?;
                }
            }
            (Multiplicity::Omega, Some((t, fate))) => {
                let (start, arc) = gamma.tail(c).expect("tail exists");
                let limit = (*t).max(start);
                for k in 0..limit {
                    classify(k, &mut parts)?;
                }
                let set = if c == a && arc.target_class != a {
                    &mut parts.a[c]
                } else {
                    let hits = match fate {
                        TailFate::Hits => true,
                        TailFate::Escapes => false,
                        TailFate::Lands(j, v) => *j == a || orbits.reaches(*j, *v)?,
                    };
                    if hits {
                        &mut parts.minus[c]
                    } else {
                        &mut parts.plus[c]
                    }
                };
                set.from = Some(limit);
            }
            (Multiplicity::Omega, None) => {
                return Err(Error::Precondition("infinite class without a tail".into()));
            }
        }
    }
    for (c, set) in parts.a.iter().enumerate() {
        for &k in &set.finite {
            if orbits.reaches(c, k)? {
                return Err(Error::Precondition(format!(
                    "a directed path leads from copy {k} of the mismatched class back into its isomorphism class"
                )));
            }
        }
    }
    Ok(parts)
}

/// Checks the partition invariants on all nodes below `n` and on the tails:
/// the three parts partition, 𝒜 is independent and the out-neighbours of
/// 𝒜 ∪ 𝒜⁺ lie in 𝒜⁺.
pub fn check_partition(gamma: &ClassDigraph, parts: &TriPartition, n: u64) -> std::result::Result<(), String> {
    let bound = parts
        .minus
        .iter()
        .chain(&parts.a)
        .chain(&parts.plus)
        .flat_map(|s| s.finite.iter().copied().chain(s.from))
        .max()
        .unwrap_or(0)
        + n;
    for (c, k) in gamma.nodes_below(bound) {
        let count = [&parts.minus[c], &parts.a[c], &parts.plus[c]]
            .iter()
            .filter(|s| s.contains(k))
            .count();
        if count != 1 {
            return Err(format!("copy {k} of class {c} lies in {count} parts"));
        }
        let part = parts.part_of(c, k);
        let (j, v) = gamma.out(c, k).ok_or_else(|| format!("copy {k} of class {c} has no arc"))?;
        let next = parts.part_of(j, v);
        if part == Part::A && next == Part::A {
            return Err(format!("arc inside 𝒜 from copy {k} of class {c}"));
        }
        if part != Part::Minus && next != Part::Plus {
            return Err(format!("copy {k} of class {c} leaves 𝒜⁺"));
        }
    }
    Ok(())
}

fn identity_class_map(p: &Presentation, class: usize) -> LevelMap {
    let id = EmbeddingWitness::identity(p, Mode::Strong);
    id.top.classes[class][0].map.clone()
}

/// The map γ: identity on the components in 𝒜⁻ and on the finite part, ι on
/// every other component.
pub fn build_gamma_selfembed(g: &GraphTuple, iota: &EmbeddingWitness, parts: &TriPartition) -> Result<EmbeddingWitness> {
    let mut top = LevelMap {
        vertices: iota.top.vertices.clone(),
        classes: Vec::new(),
    };
    for (c, class) in g.pres.classes.iter().enumerate() {
        let ident = identity_class_map(&g.pres, c);
        let iota_map = |k: u64| -> Result<LevelMap> {
            iota.top
                .segment(c, k)
                .map(|s| s.map.clone())
                .ok_or_else(|| Error::StructuralMismatch(format!("copy {k} of class {c} not covered")))
        };
        let mut segs = Vec::new();
        let minus = &parts.minus[c];
        let mut singles: BTreeSet<u64> = parts.minus[c].finite.clone();
        singles.extend(&parts.a[c].finite);
        singles.extend(&parts.plus[c].finite);
        for k in singles {
            let map = if minus.contains(k) { ident.bind(0, k) } else { iota_map(k)?.bind(0, k) };
            segs.push(Segment {
                copies: Copies::One(k),
                map,
            });
        }
        if class.mult.is_omega() {
            let from = [&parts.minus[c], &parts.a[c], &parts.plus[c]]
                .iter()
                .find_map(|s| s.from)
                .ok_or_else(|| Error::Precondition("infinite class without a tail part".into()))?;
            let map = if minus.from.is_some() {
                ident
            } else {
                let start = iota.top.classes[c]
                    .iter()
                    .find_map(|s| match s.copies {
                        Copies::From(t) => Some(t),
                        Copies::One(_) => None,
                    })
                    .unwrap_or(0);
                if start > from {
                    return Err(Error::Precondition("tail of ι starts after the partition tail".into()));
                }
                iota_map(from)?
            };
            segs.push(Segment {
                copies: Copies::From(from),
                map,
            });
        }
        top.classes.push(segs);
    }
    Ok(EmbeddingWitness { mode: iota.mode, top })
}

/// Whether the image of `w` meets the given copies of class `a` (outside
/// the finite part), decided on the witness symbols.
pub fn image_meets(w: &EmbeddingWitness, g: &Presentation, a: usize, copies: &NodeSet) -> bool {
    for (segs, class) in w.top.classes.iter().zip(&g.classes) {
        for s in segs {
            for t in s.map.targets() {
                let Some(&(j, idx)) = t.path.first() else { continue };
                if j != a {
                    continue;
                }
                let (start, end) = match (s.copies, class.mult) {
                    (Copies::One(k), _) => (k, Some(k)),
                    (Copies::From(k), Multiplicity::Finite(m)) => (k, Some(m.saturating_sub(1))),
                    (Copies::From(k), Multiplicity::Omega) => (k, None),
                };
                let hit = match idx {
                    Index::Const(v) => copies.contains(v),
                    Index::Affine { offset, stride, .. } => copies.meets_progression(offset, stride, start, end),
                };
                if hit {
                    return true;
                }
            }
        }
    }
    false
}

/// β = φ², where φ is γ changed on the copies of the mismatched class
/// outside 𝒜 so that they go into copies in 𝒜 instead.
pub fn build_beta(g: &GraphTuple, gamma_w: &EmbeddingWitness, parts: &TriPartition) -> Result<EmbeddingWitness> {
    let a = parts.class;
    if !g.pres.classes[a].mult.is_omega() {
        return Err(Error::Precondition("β needs infinitely many copies of the mismatched class".into()));
    }
    let free = &parts.a[a];
    let Some(free_from) = free.from else {
        return Err(Error::Precondition("𝒜 is finite although its class is infinite".into()));
    };
    let ident = identity_class_map(&g.pres, a);
    let rest: Vec<Segment> = gamma_w.top.classes[a]
        .iter()
        .filter(|s| match s.copies {
            Copies::One(k) => free.contains(k),
            Copies::From(k) => free.contains(k) && free.from.is_some_and(|f| f <= k),
        })
        .cloned()
        .collect();
    let mut segs = rest;
    let mut moved: Vec<u64> = parts.minus[a].finite.iter().chain(&parts.plus[a].finite).copied().collect();
    moved.sort_unstable();
    for (r, k) in moved.iter().enumerate() {
        let target = free_from + 2 * r as u64 + 1;
        let map = ident.bind(0, 0);
        segs.push(Segment {
            copies: Copies::One(*k),
            map: retarget(&map, a, Index::Const(target)),
        });
    }
    let tail_from = parts.minus[a].from.or(parts.plus[a].from);
    if let Some(t) = tail_from {
        let base = free_from + 2 * moved.len() as u64;
        segs.push(Segment {
            copies: Copies::From(t),
            map: retarget(
                &ident,
                a,
                Index::Affine {
                    var: 0,
                    offset: base as i64 - 2 * t as i64,
                    stride: 2,
                },
            ),
        });
    }
    segs.sort_by_key(|s| match s.copies {
        Copies::One(j) => (0, j),
        Copies::From(j) => (1, j),
    });
    let mut phi = gamma_w.clone();
    phi.top.classes[a] = segs;
    compose(&phi, &g.pres, &phi)
}

/// Rewrites the top-level copy index of every target in `map`.
fn retarget(map: &LevelMap, class: usize, index: Index) -> LevelMap {
    let mut out = map.clone();
    fn walk(level: &mut LevelMap, class: usize, index: Index) {
        for t in level.vertices.values_mut() {
            if let Some(first) = t.path.first_mut() {
                *first = (class, index);
            }
        }
        for segs in &mut level.classes {
            for s in segs {
                walk(&mut s.map, class, index);
            }
        }
    }
    walk(&mut out, class, index);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// The mismatched isomorphism class is finite: copies are added.
    Finite,
    /// It is infinite: all but finitely many copies are removed.
    Infinite,
}

/// One generated twin with its embeddings against the base tuple.
#[derive(Debug, Clone)]
pub struct Twin {
    pub tuple: GraphTuple,
    /// Embedding of the base normal form into the twin.
    pub into: EmbeddingWitness,
    /// Embedding of the twin into the base normal form.
    pub back: EmbeddingWitness,
    pub count: Multiplicity,
    pub rank: usize,
    pub connected: bool,
    pub verified: bool,
}

/// Everything the construction produced, for inspection and reports.
#[derive(Debug, Clone)]
pub struct Generation {
    /// Normal form of the tuple whose twins were built.
    pub base: GraphTuple,
    /// Whether the roles of the inputs were exchanged to find a mismatch.
    pub swapped: bool,
    pub case: Case,
    pub mismatch: Mismatch,
    pub iota: EmbeddingWitness,
    pub gamma: ClassDigraph,
    pub parts: TriPartition,
    pub gamma_map: EmbeddingWitness,
    pub beta: Option<EmbeddingWitness>,
    pub twins: Vec<Twin>,
    /// The twins are twins of this normal form of the first input.
    pub first: GraphTuple,
}

struct Candidate {
    pres: Presentation,
    into: EmbeddingWitness,
    back: EmbeddingWitness,
    count: Multiplicity,
}

fn finite_candidates(
    g: &GraphTuple,
    gamma_w: &EmbeddingWitness,
    parts: &TriPartition,
    how_many: usize,
) -> Result<Vec<Candidate>> {
    let a = parts.class;
    let m = g.pres.classes[a].mult.finite().expect("finite case");
    let chosen = *parts.a[a]
        .finite
        .iter()
        .next()
        .ok_or_else(|| Error::Precondition("𝒜 is empty".into()))?;
    let mut powers = vec![EmbeddingWitness::identity(&g.pres, gamma_w.mode)];
    let mut out = Vec::new();
    for i in 1..=how_many as u64 {
        let next = compose(powers.last().expect("nonempty"), &g.pres, gamma_w)?;
        powers.push(next);
        let pres = g.pres.add_class_copies(&[a], Multiplicity::Finite(i))?;
        let gi = &powers[i as usize];
        let mut back = gi.clone();
        let mut segs = Vec::new();
        for k in 0..m {
            let s = gi.top.segment(a, k).ok_or_else(|| Error::StructuralMismatch("uncovered copy".into()))?;
            segs.push(Segment {
                copies: Copies::One(k),
                map: s.map.bind(0, k),
            });
        }
        for t in 1..=i {
            let power = &powers[(t - 1) as usize];
            let s = power
                .top
                .segment(a, chosen)
                .ok_or_else(|| Error::StructuralMismatch("uncovered copy".into()))?;
            segs.push(Segment {
                copies: Copies::One(m + t - 1),
                map: s.map.bind(0, chosen),
            });
        }
        back.top.classes[a] = segs;
        out.push(Candidate {
            into: EmbeddingWitness::identity(&g.pres, gamma_w.mode),
            back,
            pres,
            count: Multiplicity::Finite(m + i),
        });
    }
    Ok(out)
}

fn infinite_candidates(g: &GraphTuple, beta: &EmbeddingWitness, a: usize, how_many: usize) -> Result<Vec<Candidate>> {
    (1..=how_many as u64)
        .map(|i| {
            let pres = g.pres.with_multiplicity(&[a], Multiplicity::Finite(i))?;
            Ok(Candidate {
                into: beta.clone(),
                back: EmbeddingWitness::identity(&pres, beta.mode),
                pres,
                count: Multiplicity::Finite(i),
            })
        })
        .collect()
}

/// Builds `k` pairwise non-isomorphic twins of `g`, given that `g` and `h`
/// are twins in the given mode.
pub fn generate_twins(g: &GraphTuple, h: &GraphTuple, mode: Mode, k: usize, config: SearchConfig) -> Result<Generation> {
    let verdict = twin_check(g, h, mode, config)?;
    let TwinVerdict::Twins { phi, psi } = verdict else {
        return Err(Error::Precondition(format!("inputs are not {mode} twins: {}", verdict.label())));
    };
    if phi.source.pres.is_finite() {
        return Err(Error::Precondition("finite graphs have no twins".into()));
    }
    for (w, s, t) in [(&phi.witness, &phi.source, &phi.target), (&psi.witness, &psi.source, &psi.target)] {
        if !maps_kernel_onto(w, s, t)? {
            return Err(Error::Precondition("an embedding does not map the kernel onto the kernel".into()));
        }
    }
    let (phi_a, _) = align_embeddings(&phi, &psi)?;
    let eta: BTreeMap<Name, Name> = phi_a
        .witness
        .top
        .vertices
        .iter()
        .map(|(v, t)| (v.clone(), t.name.clone()))
        .collect();
    let forward = find_mismatch(&phi.source, &phi.target, &eta)?;
    let (swapped, base_phi, base_psi, mismatch) = match forward {
        Some(m) => (false, phi_a, psi.clone(), m),
        None => {
            let (psi_a, _) = align_embeddings(&psi, &phi)?;
            let eta: BTreeMap<Name, Name> = psi_a
                .witness
                .top
                .vertices
                .iter()
                .map(|(v, t)| (v.clone(), t.name.clone()))
                .collect();
            let m = find_mismatch(&psi.source, &psi.target, &eta)?
                .ok_or_else(|| Error::Precondition("class counts agree under η; the tuples are isomorphic".into()))?;
            (true, psi_a, phi.clone(), m)
        }
    };
    let base = base_phi.source.clone();
    let iota = compose(&base_phi.witness, &base.pres, &base_psi.witness)?;
    let gamma = build_gamma(&base, &iota)?;
    let parts = split_classes(&gamma, mismatch.class)?;
    let gamma_map = build_gamma_selfembed(&base, &iota, &parts)?;
    let a = mismatch.class;
    let want = 4 * k + 8;
    let (case, beta, candidates) = if base.pres.classes[a].mult.is_omega() {
        let beta = build_beta(&base, &gamma_map, &parts)?;
        let c = infinite_candidates(&base, &beta, a, want)?;
        (Case::Infinite, Some(beta), c)
    } else {
        (Case::Finite, None, finite_candidates(&base, &gamma_map, &parts, want)?)
    };
    let first = phi.source.clone();
    let mut seen = vec![canonical_code(&first)?];
    if swapped {
        seen.push(canonical_code(&base)?);
    }
    let first_connected = is_connected_tuple(&first)?;
    let mut twins = Vec::new();
    for c in candidates {
        if twins.len() == k {
            break;
        }
        let tuple = GraphTuple {
            x: base.x.clone(),
            pres: c.pres,
        };
        let code = canonical_code(&tuple)?;
        if seen.contains(&code) {
            continue;
        }
        seen.push(code);
        let (into, back) = if swapped {
            (
                compose(&phi.witness, &first.pres, &c.into)?,
                compose(&c.back, &tuple.pres, &psi.witness)?,
            )
        } else {
            (c.into, c.back)
        };
        let verified = verify_witness(&into, &first, &tuple, mode)? && verify_witness(&back, &tuple, &first, mode)?;
        let connected = is_connected_tuple(&tuple)? || !first_connected;
        twins.push(Twin {
            rank: rank(&tuple.pres),
            connected,
            verified,
            count: c.count,
            into,
            back,
            tuple,
        });
    }
    Ok(Generation {
        base,
        swapped,
        case,
        mismatch,
        iota,
        gamma,
        parts,
        gamma_map,
        beta,
        twins,
        first,
    })
}

/// Whether the image of `w` (a map out of the normal form `g`) lies outside
/// every copy of class `a` in `copies`, checked on the truncation at `n`.
pub fn image_avoids_on_truncation(
    w: &EmbeddingWitness,
    g: &Presentation,
    a: usize,
    copies: &NodeSet,
    n: usize,
) -> Result<bool> {
    let inst = crate::oracle::instantiate_witness(w, g, g, n)?;
    Ok(inst
        .image()
        .iter()
        .all(|loc| !matches!(loc.path.first(), Some(&(c, k)) if c == a && copies.contains(k as u64))))
}
