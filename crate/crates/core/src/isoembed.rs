//! Embedding search, witness verification and twin certificates.
//!
//! All searches run on normal forms, so witnesses map the normal form of
//! the source into the normal form of the target.
//!
//! When both sides have rank at most one, every class child is a finite
//! graph and the search is complete: the finitely many vertices outside
//! infinite classes are placed one by one (copies of a target class are
//! interchangeable, so a vertex may only open the first unused copy), and
//! each infinite source class is sent wholesale into fresh copies of one
//! infinite target class. Any embedding sends all but finitely many copies of
//! an infinite class into untouched target copies, and rerouting every copy
//! there keeps the map an embedding, so nothing else needs to be tried. In
//! higher rank the search aligns levels and only reports positive answers.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::normal::{iso_tuples, normalize, IsoWitness};
use crate::oracle::instantiate_witness;
use crate::presentation::{Edge, GraphTuple, Location, Multiplicity, Name, Presentation};
use crate::rank::{kernel, rank};
use crate::witness::{compose, Copies, EmbeddingWitness, Index, LevelMap, Mode, Segment, TargetLoc};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Backtracking limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub budget: u64,
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig { budget: DEFAULT_BUDGET }
    }
}

impl SearchConfig {
    /// Reads `RPG_SEARCH_BUDGET`, falling back to the default.
    pub fn from_env() -> SearchConfig {
        let budget = std::env::var("RPG_SEARCH_BUDGET")
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(DEFAULT_BUDGET);
        SearchConfig { budget }
    }
}

/// An embedding between normal forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    pub source: GraphTuple,
    pub target: GraphTuple,
    pub witness: EmbeddingWitness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedOutcome {
    Found(Embedding),
    /// The search space was exhausted without a witness.
    None(String),
    Unknown(String),
}

/// Checks that `w` maps `(g, X)` into `(h, Y)` as an embedding of the given
/// mode. The symbolic part checks totality and ranges of every target
/// index; injectivity and edge conditions are then checked on a truncation
/// large enough to contain every exceptional copy and the first few copies
/// of every tail.
pub fn verify_witness(w: &EmbeddingWitness, g: &GraphTuple, h: &GraphTuple, mode: Mode) -> Result<bool> {
    w.check_structure(&g.pres, &h.pres)?;
    if mode == Mode::Strong && w.mode == Mode::Weak {
        return Ok(false);
    }
    for x in &g.x {
        match w.top.vertices.get(x) {
            Some(t) if t.path.is_empty() && h.x.contains(&t.name) => {}
            _ => return Ok(false),
        }
    }
    let (stride, offset) = w.max_stride_and_offset();
    let n = (w.exceptions_needed(&g.pres) + offset as usize + 2 * stride as usize + 2).min(64);
    let inst = instantiate_witness(w, &g.pres, &h.pres, n)?;
    Ok(inst.check(mode == Mode::Strong).is_ok())
}

/// Maps each kernel vertex of the source to its image: `K(G) -> K(H)`
/// exactly, as sets of locations.
pub fn maps_kernel_onto(w: &EmbeddingWitness, g: &GraphTuple, h: &GraphTuple) -> Result<bool> {
    let kg = kernel(&g.pres)?.locations;
    let kh = kernel(&h.pres)?.locations;
    let image: BTreeSet<Location> = kg.iter().filter_map(|l| w.image(l)).collect();
    Ok(image == kh)
}

/// Top-level vertex of a normal form, or a vertex inside one copy of a
/// top-level class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    Top(Name),
    Copy(usize, u64, Name),
}

fn has_edge(p: &Presentation, a: &str, b: &str) -> bool {
    p.edges.contains(&Edge::new(a, b))
}

fn slot_adjacent(p: &Presentation, a: &Slot, b: &Slot) -> bool {
    match (a, b) {
        (Slot::Top(x), Slot::Top(y)) => has_edge(p, x, y),
        (Slot::Top(x), Slot::Copy(i, _, v)) | (Slot::Copy(i, _, v), Slot::Top(x)) => has_edge(&p.classes[*i].child, v, x),
        (Slot::Copy(i, c, v), Slot::Copy(j, d, w)) => i == j && c == d && has_edge(&p.classes[*i].child, v, w),
    }
}

struct Flat<'a> {
    g: &'a GraphTuple,
    h: &'a GraphTuple,
    mode: Mode,
    /// Source vertices placed individually, in placement order.
    core: Vec<Slot>,
    /// Index in `core` after which all top-level source vertices are placed.
    top_done: usize,
    omega_classes: Vec<usize>,
    placed: Vec<Slot>,
    used_slots: BTreeSet<Slot>,
    /// Number of opened copies per target class.
    opened: Vec<u64>,
    nodes: u64,
    budget: u64,
}

enum Step {
    Found(BTreeMap<usize, (usize, BTreeMap<Name, Name>)>),
    Exhausted,
    OutOfBudget,
}

impl Flat<'_> {
    fn candidates(&self) -> Vec<Slot> {
        let mut out: Vec<Slot> = self.h.pres.vertices.iter().map(|v| Slot::Top(v.clone())).collect();
        for (j, class) in self.h.pres.classes.iter().enumerate() {
            let open = (self.opened[j] + 1).min(match class.mult {
                Multiplicity::Finite(m) => m,
                Multiplicity::Omega => u64::MAX,
            });
            for c in 0..open {
                out.extend(class.child.vertices.iter().map(|v| Slot::Copy(j, c, v.clone())));
            }
        }
        out
    }

    fn fits(&self, s: &Slot, t: &Slot) -> bool {
        if self.used_slots.contains(t) {
            return false;
        }
        if let Slot::Top(x) = s {
            if self.g.x.contains(x) && !matches!(t, Slot::Top(y) if self.h.x.contains(y)) {
                return false;
            }
        }
        for (s2, t2) in self.core.iter().zip(&self.placed) {
            let se = slot_adjacent(&self.g.pres, s, s2);
            let te = slot_adjacent(&self.h.pres, t, t2);
            if (se && !te) || (self.mode == Mode::Strong && te && !se) {
                return false;
            }
        }
        true
    }

    /// Images of top-level source vertices, by name.
    fn top_images(&self) -> BTreeMap<&Name, &Slot> {
        self.core
            .iter()
            .zip(&self.placed)
            .filter_map(|(s, t)| match s {
                Slot::Top(x) => Some((x, t)),
                Slot::Copy(..) => None,
            })
            .collect()
    }

    /// A map of the child of source class `i` into one fresh copy of target
    /// class `j`. With `strict`, target top vertices adjacent to the copy
    /// must not be images of anything but the matching boundary neighbors.
    fn accept(&self, i: usize, j: usize, strict: bool) -> Option<BTreeMap<Name, Name>> {
        let c = &self.g.pres.classes[i].child;
        let d = &self.h.pres.classes[j].child;
        let tops = self.top_images();
        let image_owner: BTreeMap<&Name, &Slot> = self
            .placed
            .iter()
            .zip(&self.core)
            .filter_map(|(t, s)| match t {
                Slot::Top(y) => Some((y, s)),
                Slot::Copy(..) => None,
            })
            .collect();
        let order: Vec<&Name> = c.vertices.iter().collect();
        let mut assign: Vec<&Name> = Vec::new();
        let mut used: BTreeSet<&Name> = BTreeSet::new();
        #[allow(clippy::too_many_arguments)]
        fn go<'a>(
            k: usize,
            order: &[&'a Name],
            c: &'a Presentation,
            d: &'a Presentation,
            tops: &BTreeMap<&Name, &Slot>,
            owners: &BTreeMap<&Name, &Slot>,
            mode: Mode,
            strict: bool,
            assign: &mut Vec<&'a Name>,
            used: &mut BTreeSet<&'a Name>,
        ) -> bool {
            if k == order.len() {
                return true;
            }
            let v = order[k];
            'cand: for w in &d.vertices {
                if used.contains(w) {
                    continue;
                }
                for (v2, w2) in order[..k].iter().zip(assign.iter()) {
                    let se = has_edge(c, v, v2);
                    let te = has_edge(d, w, w2);
                    if (se && !te) || (mode == Mode::Strong && te && !se) {
                        continue 'cand;
                    }
                }
                for e in &c.edges {
                    if !e.has(v) {
                        continue;
                    }
                    let x = e.other(v);
                    if c.has_vertex(x) {
                        continue;
                    }
                    match tops.get(&x.to_string()) {
                        Some(Slot::Top(y)) if has_edge(d, w, y) => {}
                        _ => continue 'cand,
                    }
                }
                if mode == Mode::Strong && strict {
                    for e in &d.edges {
                        if !e.has(w) {
                            continue;
                        }
                        let y = e.other(w);
                        if d.has_vertex(y) {
                            continue;
                        }
                        match owners.get(&y.to_string()) {
                            None => {}
                            Some(Slot::Top(x)) if has_edge(c, v, x) => {}
                            Some(_) => continue 'cand,
                        }
                    }
                }
                assign.push(w);
                used.insert(w);
                if go(k + 1, order, c, d, tops, owners, mode, strict, assign, used) {
                    return true;
                }
                assign.pop();
                used.remove(w);
            }
            false
        }
        if go(0, &order, c, d, &tops, &image_owner, self.mode, strict, &mut assign, &mut used) {
            Some(
                order
                    .iter()
                    .zip(&assign)
                    .map(|(v, w)| ((*v).clone(), (*w).clone()))
                    .collect(),
            )
        } else {
            None
        }
    }

    fn omega_targets(&self) -> Vec<usize> {
        self.h
            .pres
            .classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.mult.is_omega())
            .map(|(j, _)| j)
            .collect()
    }

    fn tails(&self, strict: bool) -> Option<BTreeMap<usize, (usize, BTreeMap<Name, Name>)>> {
        let targets = self.omega_targets();
        let mut out = BTreeMap::new();
        for &i in &self.omega_classes {
            let found = targets.iter().find_map(|&j| self.accept(i, j, strict).map(|m| (j, m)))?;
            out.insert(i, found);
        }
        Some(out)
    }

    fn search(&mut self, k: usize) -> Step {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Step::OutOfBudget;
        }
        if k == self.top_done && self.tails(false).is_none() {
            return Step::Exhausted;
        }
        if k == self.core.len() {
            return match self.tails(true) {
                Some(t) => Step::Found(t),
                None => Step::Exhausted,
            };
        }
        let s = self.core[k].clone();
        for t in self.candidates() {
            if !self.fits(&s, &t) {
                continue;
            }
            let opened_before = self.opened.clone();
            if let Slot::Copy(j, c, _) = &t {
                self.opened[*j] = self.opened[*j].max(c + 1);
            }
            self.placed.push(t.clone());
            self.used_slots.insert(t.clone());
            match self.search(k + 1) {
                Step::Exhausted => {}
                other => return other,
            }
            self.placed.pop();
            self.used_slots.remove(&t);
            self.opened = opened_before;
        }
        Step::Exhausted
    }

    fn witness(&self, tails: &BTreeMap<usize, (usize, BTreeMap<Name, Name>)>) -> EmbeddingWitness {
        let loc = |t: &Slot| match t {
            Slot::Top(y) => TargetLoc::top(y.clone()),
            Slot::Copy(j, c, v) => TargetLoc {
                path: vec![(*j, Index::Const(*c))],
                name: v.clone(),
            },
        };
        let mut top = LevelMap::default();
        let mut per_copy: BTreeMap<(usize, u64), BTreeMap<Name, TargetLoc>> = BTreeMap::new();
        for (s, t) in self.core.iter().zip(&self.placed) {
            match s {
                Slot::Top(x) => {
                    top.vertices.insert(x.clone(), loc(t));
                }
                Slot::Copy(i, c, v) => {
                    per_copy.entry((*i, *c)).or_default().insert(v.clone(), loc(t));
                }
            }
        }
        let mut sharing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&i, (j, _)) in tails {
            sharing.entry(*j).or_default().push(i);
        }
        for (i, class) in self.g.pres.classes.iter().enumerate() {
            let segs = match class.mult {
                Multiplicity::Finite(m) => (0..m)
                    .map(|c| Segment {
                        copies: Copies::One(c),
                        map: LevelMap {
                            vertices: per_copy.remove(&(i, c)).unwrap_or_default(),
                            classes: Vec::new(),
                        },
                    })
                    .collect(),
                Multiplicity::Omega => {
                    let (j, names) = &tails[&i];
                    let group = &sharing[j];
                    let r = group.iter().position(|&x| x == i).expect("member") as i64;
                    let index = Index::Affine {
                        var: 0,
                        offset: self.opened[*j] as i64 + r,
                        stride: group.len() as u64,
                    };
                    vec![Segment {
                        copies: Copies::From(0),
                        map: LevelMap {
                            vertices: names
                                .iter()
                                .map(|(v, w)| {
                                    (
                                        v.clone(),
                                        TargetLoc {
                                            path: vec![(*j, index)],
                                            name: w.clone(),
                                        },
                                    )
                                })
                                .collect(),
                            classes: Vec::new(),
                        },
                    }]
                }
            };
            top.classes.push(segs);
        }
        EmbeddingWitness { mode: self.mode, top }
    }
}

fn is_flat(p: &Presentation) -> bool {
    p.classes.iter().all(|c| c.child.classes.is_empty())
}

/// Complete search between normal forms of rank at most one.
fn embed_flat(g: &GraphTuple, h: &GraphTuple, mode: Mode, config: SearchConfig) -> EmbedOutcome {
    let mut core: Vec<Slot> = Vec::new();
    let mut tops: Vec<&Name> = g.pres.vertices.iter().collect();
    tops.sort_by_key(|v| (!g.x.contains(*v), v.to_string()));
    core.extend(tops.into_iter().map(|v| Slot::Top(v.clone())));
    let top_done = core.len();
    let mut omega_classes = Vec::new();
    for (i, class) in g.pres.classes.iter().enumerate() {
        match class.mult {
            Multiplicity::Finite(m) => {
                for c in 0..m {
                    core.extend(class.child.vertices.iter().map(|v| Slot::Copy(i, c, v.clone())));
                }
            }
            Multiplicity::Omega => omega_classes.push(i),
        }
    }
    let mut flat = Flat {
        g,
        h,
        mode,
        core,
        top_done,
        omega_classes,
        placed: Vec::new(),
        used_slots: BTreeSet::new(),
        opened: vec![0; h.pres.classes.len()],
        nodes: 0,
        budget: config.budget,
    };
    match flat.search(0) {
        Step::Found(tails) => {
            let witness = flat.witness(&tails);
            EmbedOutcome::Found(Embedding {
                source: g.clone(),
                target: h.clone(),
                witness,
            })
        }
        Step::Exhausted => EmbedOutcome::None("exhaustive search found no embedding".into()),
        Step::OutOfBudget => EmbedOutcome::Unknown(format!("search budget of {} nodes exhausted", config.budget)),
    }
}

/// Searches for an embedding of `(g, X)` into `(h, Y)`.
pub fn embed(g: &GraphTuple, h: &GraphTuple, mode: Mode, config: SearchConfig) -> Result<EmbedOutcome> {
    if let Some((ng, nh, iso)) = iso_tuples(g, h)? {
        let witness = EmbeddingWitness::from_iso(&ng.pres, &iso, mode);
        return Ok(EmbedOutcome::Found(Embedding {
            source: ng,
            target: nh,
            witness,
        }));
    }
    let ng = normalize(g)?;
    let nh = normalize(h)?;
    let (rg, rh) = (rank(&ng.pres), rank(&nh.pres));
    if rg > rh {
        return Ok(EmbedOutcome::None(format!("source rank {rg} exceeds target rank {rh}")));
    }
    if g.x.len() > h.x.len() {
        return Ok(EmbedOutcome::None("more distinguished vertices in the source".into()));
    }
    let outcome = if is_flat(&ng.pres) && is_flat(&nh.pres) {
        embed_flat(&ng, &nh, mode, config)
    } else {
        crate::pack::embed_levels(&ng, &nh, mode, config)
    };
    if !matches!(outcome, EmbedOutcome::Unknown(_)) || !ng.x.is_empty() || !nh.x.is_empty() {
        return Ok(outcome);
    }
    if let Some(found) = embed_into_one_copy(&ng, &nh, rg, mode, config)? {
        return Ok(EmbedOutcome::Found(found));
    }
    Ok(outcome)
}

/// Tries to embed `ng` inside a single copy of one top-level class of `nh`.
/// Only classes whose child, cut off from the top part, is already in
/// normal form are tried, so the witness lifts unchanged.
fn embed_into_one_copy(ng: &GraphTuple, nh: &GraphTuple, rg: usize, mode: Mode, config: SearchConfig) -> Result<Option<Embedding>> {
    let top: BTreeSet<Name> = nh.pres.vertices.iter().cloned().collect();
    for (i, class) in nh.pres.classes.iter().enumerate() {
        let child = GraphTuple::graph(class.child.without_references(&top));
        if rank(&child.pres) < rg || normalize(&child)? != child {
            continue;
        }
        if let EmbedOutcome::Found(e) = embed(ng, &child, mode, config)? {
            if e.source != *ng {
                continue;
            }
            let witness = e.witness.nested_in(i, 0);
            if verify_witness(&witness, ng, nh, mode)? {
                return Ok(Some(Embedding {
                    source: ng.clone(),
                    target: nh.clone(),
                    witness,
                }));
            }
        }
    }
    Ok(None)
}

/// Result of comparing two tuples for twinship.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TwinVerdict {
    Isomorphic(GraphTuple, GraphTuple, IsoWitness),
    Twins { phi: Embedding, psi: Embedding },
    NotTwins(String),
    Unknown(String),
}

impl TwinVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            TwinVerdict::Isomorphic(..) => "isomorphic",
            TwinVerdict::Twins { .. } => "twins",
            TwinVerdict::NotTwins(_) => "not-twins",
            TwinVerdict::Unknown(_) => "unknown",
        }
    }
}

pub fn twin_check(g: &GraphTuple, h: &GraphTuple, mode: Mode, config: SearchConfig) -> Result<TwinVerdict> {
    if let Some((ng, nh, iso)) = iso_tuples(g, h)? {
        return Ok(TwinVerdict::Isomorphic(ng, nh, iso));
    }
    if g.x.len() != h.x.len() {
        return Ok(TwinVerdict::NotTwins("distinguished sets differ in size".into()));
    }
    let phi = embed(g, h, mode, config)?;
    if let EmbedOutcome::None(why) = &phi {
        return Ok(TwinVerdict::NotTwins(format!("no embedding of the first into the second: {why}")));
    }
    let psi = embed(h, g, mode, config)?;
    match (phi, psi) {
        (_, EmbedOutcome::None(why)) => Ok(TwinVerdict::NotTwins(format!(
            "no embedding of the second into the first: {why}"
        ))),
        (EmbedOutcome::Found(phi), EmbedOutcome::Found(psi)) => Ok(TwinVerdict::Twins { phi, psi }),
        (EmbedOutcome::Unknown(why), _) | (_, EmbedOutcome::Unknown(why)) => Ok(TwinVerdict::Unknown(why)),
        (EmbedOutcome::None(_), _) => unreachable!("handled above"),
    }
}

/// The permutation `psi ∘ phi` induces on the top-level vertices.
fn top_permutation(phi: &EmbeddingWitness, psi: &EmbeddingWitness, g: &Presentation) -> Result<BTreeMap<Name, Name>> {
    let mut perm = BTreeMap::new();
    for v in &g.vertices {
        let mid = phi
            .image(&Location::top(v.clone()))
            .ok_or_else(|| Error::StructuralMismatch(format!("`{v}` has no image")))?;
        let back = psi
            .image(&mid)
            .ok_or_else(|| Error::StructuralMismatch(format!("`{mid}` has no image")))?;
        if !mid.path.is_empty() || !back.path.is_empty() {
            return Err(Error::Precondition(
                "embeddings do not map kernels onto kernels".into(),
            ));
        }
        perm.insert(v.clone(), back.name);
    }
    let values: BTreeSet<&Name> = perm.values().collect();
    if values.len() != perm.len() || values.iter().any(|v| !g.has_vertex(v)) {
        return Err(Error::Precondition("composition does not permute the finite part".into()));
    }
    Ok(perm)
}

/// Replaces `phi` by `phi ∘ iota^(k-1)` where `iota = psi ∘ phi` and `k`
/// is the order of the permutation `iota` induces on the finite part, so
/// that the new `psi ∘ phi` fixes the finite part pointwise. Returns the new
/// `phi` and `k`.
pub fn align_embeddings(phi: &Embedding, psi: &Embedding) -> Result<(Embedding, usize)> {
    let g = &phi.source.pres;
    let perm = top_permutation(&phi.witness, &psi.witness, g)?;
    let mut order = 1;
    let mut current = perm.clone();
    while current.iter().any(|(a, b)| a != b) {
        current = current.iter().map(|(a, b)| (a.clone(), perm[b].clone())).collect();
        order += 1;
    }
    let iota = compose(&phi.witness, g, &psi.witness)?;
    let mut power = EmbeddingWitness::identity(g, iota.mode);
    for _ in 1..order {
        power = compose(&power, g, &iota)?;
    }
    let mut aligned = compose(&power, g, &phi.witness)?;
    aligned.mode = phi.witness.mode;
    Ok((
        Embedding {
            source: phi.source.clone(),
            target: phi.target.clone(),
            witness: aligned,
        },
        order,
    ))
}

/// Summary of a witness for reports.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessSummary {
    pub mode: Mode,
    pub verified: bool,
    pub rendering: String,
}
