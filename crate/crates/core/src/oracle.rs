//! Brute force on finite truncations, used as ground truth for the symbolic
//! engines.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::finite::{truncate, FiniteGraph};
use crate::presentation::{ComponentClass, Edge, GraphTuple, Location, Multiplicity, Name, Presentation};
use crate::witness::{EmbeddingWitness, LevelMap};

/// Largest pattern graph the exhaustive searches accept.
pub const ORACLE_CAP: usize = 40;
const NODE_BUDGET: u64 = 5_000_000;

/// An injective map between the vertex sets of two finite graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMatch {
    pub map: BTreeMap<Location, Location>,
}

struct Matcher<'a> {
    g: &'a FiniteGraph,
    h: &'a FiniteGraph,
    induced: bool,
    order: Vec<usize>,
    map: Vec<Option<usize>>,
    used: Vec<bool>,
    nodes: u64,
}

impl Matcher<'_> {
    fn consistent(&self, v: usize, w: usize) -> bool {
        if self.h.degree(w) < self.g.degree(v) {
            return false;
        }
        for (u, image) in self.map.iter().enumerate() {
            let Some(x) = *image else { continue };
            let ge = self.g.has_edge(u, v);
            let he = self.h.has_edge(x, w);
            if (ge && !he) || (self.induced && he && !ge) {
                return false;
            }
        }
        true
    }

    fn search(&mut self, i: usize) -> Result<bool> {
        if i == self.order.len() {
            return Ok(true);
        }
        self.nodes += 1;
        if self.nodes > NODE_BUDGET {
            return Err(Error::OracleCap(format!("search exceeded {NODE_BUDGET} nodes")));
        }
        let v = self.order[i];
        let anchor = self.g.neighbors(v).iter().find_map(|&u| self.map[u]);
        let candidates: Vec<usize> = match anchor {
            Some(x) => self.h.neighbors(x).iter().copied().collect(),
            None => (0..self.h.len()).collect(),
        };
        for w in candidates {
            if self.used[w] || !self.consistent(v, w) {
                continue;
            }
            self.map[v] = Some(w);
            self.used[w] = true;
            if self.search(i + 1)? {
                return Ok(true);
            }
            self.map[v] = None;
            self.used[w] = false;
        }
        Ok(false)
    }
}

/// Vertex order in which each vertex after the first of its component has
/// an earlier neighbor, highest degrees first.
fn connected_order(g: &FiniteGraph) -> Vec<usize> {
    let mut seen = vec![false; g.len()];
    let mut order = Vec::with_capacity(g.len());
    let mut starts: Vec<usize> = (0..g.len()).collect();
    starts.sort_by_key(|&v| std::cmp::Reverse(g.degree(v)));
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = g.neighbors(v).iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| std::cmp::Reverse(g.degree(w)));
            for w in next {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order
}

fn run(g: &FiniteGraph, h: &FiniteGraph, induced: bool) -> Result<Option<Vec<usize>>> {
    if g.len() > ORACLE_CAP {
        return Err(Error::OracleCap(format!("{} vertices exceed the cap of {ORACLE_CAP}", g.len())));
    }
    if g.len() > h.len() {
        return Ok(None);
    }
    let mut m = Matcher {
        g,
        h,
        induced,
        order: connected_order(g),
        map: vec![None; g.len()],
        used: vec![false; h.len()],
        nodes: 0,
    };
    if m.search(0)? {
        Ok(Some(m.map.into_iter().map(|x| x.expect("complete")).collect()))
    } else {
        Ok(None)
    }
}

fn to_match(g: &FiniteGraph, h: &FiniteGraph, map: Vec<usize>) -> FiniteMatch {
    FiniteMatch {
        map: map
            .into_iter()
            .enumerate()
            .map(|(v, w)| (g.vertices()[v].clone(), h.vertices()[w].clone()))
            .collect(),
    }
}

/// An injective homomorphism `g -> h` (induced when asked), by exhaustive
/// backtracking.
pub fn finite_embed(g: &FiniteGraph, h: &FiniteGraph, induced: bool) -> Result<Option<FiniteMatch>> {
    Ok(run(g, h, induced)?.map(|m| to_match(g, h, m)))
}

fn degree_sequence(g: &FiniteGraph) -> Vec<usize> {
    let mut d: Vec<usize> = (0..g.len()).map(|v| g.degree(v)).collect();
    d.sort_unstable();
    d
}

/// An isomorphism `g -> h`, by exhaustive backtracking.
pub fn finite_iso(g: &FiniteGraph, h: &FiniteGraph) -> Result<Option<FiniteMatch>> {
    if g.len() != h.len() || g.edge_count() != h.edge_count() || degree_sequence(g) != degree_sequence(h) {
        return Ok(None);
    }
    finite_embed(g, h, true)
}

/// A witness realized on truncations: the source truncated at `n`, the
/// target truncated far enough to contain every image, and the vertex map.
#[derive(Debug, Clone)]
pub struct Instance {
    pub source: FiniteGraph,
    pub target: FiniteGraph,
    pub map: Vec<usize>,
}

/// Largest copy index used in a target location, plus one.
fn target_extent(level: &LevelMap, vars: &mut Vec<u64>, g: &Presentation, n: usize, out: &mut usize) {
    for t in level.vertices.values() {
        if let Some(loc) = t.eval(vars) {
            for &(_, j) in &loc.path {
                *out = (*out).max(j + 1);
            }
        }
    }
    for (segs, class) in level.classes.iter().zip(&g.classes) {
        for j in 0..class.mult.truncated(n) {
            if let Some(s) = segs.iter().find(|s| s.copies.contains(j as u64)) {
                vars.push(j as u64);
                target_extent(&s.map, vars, &class.child, n, out);
                vars.pop();
            }
        }
    }
}

/// Materializes `w : g -> h` on the truncation of `g` at `n`.
pub fn instantiate_witness(w: &EmbeddingWitness, g: &Presentation, h: &Presentation, n: usize) -> Result<Instance> {
    let needed = w.exceptions_needed(g);
    if n < needed.max(1) {
        return Err(Error::TruncationTooSmall { n, needed });
    }
    let source = truncate(g, n)?;
    let mut extent = n;
    target_extent(&w.top, &mut Vec::new(), g, n, &mut extent);
    let target = truncate(h, extent)?;
    let mut map = Vec::with_capacity(source.len());
    for loc in source.vertices() {
        let image = w
            .image(loc)
            .ok_or_else(|| Error::StructuralMismatch(format!("no image for {loc}")))?;
        let idx = target
            .index_of(&image)
            .ok_or_else(|| Error::StructuralMismatch(format!("{loc} maps to missing vertex {image}")))?;
        map.push(idx);
    }
    Ok(Instance { source, target, map })
}

impl Instance {
    /// Checks injectivity, edge preservation and, when `induced`, that no
    /// extra edges appear among the images.
    pub fn check(&self, induced: bool) -> std::result::Result<(), String> {
        let mut preimage = vec![None; self.target.len()];
        for (v, &w) in self.map.iter().enumerate() {
            if let Some(u) = preimage[w] {
                return Err(format!(
                    "{} and {} both map to {}",
                    self.source.vertices()[u],
                    self.source.vertices()[v],
                    self.target.vertices()[w]
                ));
            }
            preimage[w] = Some(v);
        }
        for (a, b) in self.source.edges() {
            if !self.target.has_edge(self.map[a], self.map[b]) {
                return Err(format!(
                    "edge {} -- {} is not preserved",
                    self.source.vertices()[a],
                    self.source.vertices()[b]
                ));
            }
        }
        if induced {
            for (v, &w) in self.map.iter().enumerate() {
                for &x in self.target.neighbors(w) {
                    if let Some(u) = preimage[x] {
                        if !self.source.has_edge(u, v) {
                            return Err(format!(
                                "images of {} and {} are adjacent",
                                self.source.vertices()[u],
                                self.source.vertices()[v]
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Target vertices hit by the map.
    pub fn image(&self) -> BTreeSet<Location> {
        self.map.iter().map(|&w| self.target.vertices()[w].clone()).collect()
    }
}

/// Size limits for [`random_presentation`].
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub depth: usize,
    pub finite_part: usize,
    pub classes: usize,
}

impl Default for Limits {
    fn default() -> Limits {
        Limits {
            depth: 2,
            finite_part: 4,
            classes: 3,
        }
    }
}

struct Generator {
    rng: ChaCha8Rng,
    counter: usize,
    limits: Limits,
}

impl Generator {
    fn level(&mut self, depth: usize, scope: &[Name], min_vertices: usize) -> Presentation {
        let count = self.rng.gen_range(min_vertices..=self.limits.finite_part);
        let prefix = ["a", "b", "c", "d"][depth.min(3)];
        let vertices: Vec<Name> = (0..count)
            .map(|_| {
                self.counter += 1;
                format!("{prefix}{}", self.counter)
            })
            .collect();
        let mut edges = BTreeSet::new();
        for (i, v) in vertices.iter().enumerate() {
            for w in &vertices[..i] {
                if self.rng.gen_bool(0.35) {
                    edges.insert(Edge::new(v.clone(), w.clone()));
                }
            }
            for w in scope {
                if self.rng.gen_bool(0.3) {
                    edges.insert(Edge::new(v.clone(), w.clone()));
                }
            }
        }
        let mut classes = Vec::new();
        if depth < self.limits.depth {
            let mut inner: Vec<Name> = scope.to_vec();
            inner.extend(vertices.iter().cloned());
            let class_count = self.rng.gen_range(0..=self.limits.classes);
            for _ in 0..class_count {
                let mult = match self.rng.gen_range(0..3) {
                    0 => Multiplicity::Finite(1),
                    1 => Multiplicity::Finite(2),
                    _ => Multiplicity::Omega,
                };
                let child = self.level(depth + 1, &inner, 1);
                classes.push(ComponentClass { mult, child });
            }
        }
        Presentation {
            vertices,
            edges,
            classes,
        }
    }
}

/// A valid random tuple; equal seeds give equal tuples.
pub fn random_presentation(seed: u64, limits: Limits) -> GraphTuple {
    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        counter: 0,
        limits,
    };
    let pres = gen.level(0, &[], 0);
    let x = pres
        .vertices
        .iter()
        .filter(|_| gen.rng.gen_bool(0.3))
        .cloned()
        .collect();
    GraphTuple { x, pres }
}
