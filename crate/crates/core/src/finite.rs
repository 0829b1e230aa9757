//! Finite truncations of presentations.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::presentation::{Location, Presentation};

/// A finite simple graph whose vertices are realization [`Location`]s.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FiniteGraph {
    vertices: Vec<Location>,
    index: HashMap<Location, usize>,
    adj: Vec<BTreeSet<usize>>,
}

impl FiniteGraph {
    pub fn new() -> FiniteGraph {
        FiniteGraph::default()
    }

    pub fn add_vertex(&mut self, loc: Location) -> usize {
        if let Some(&i) = self.index.get(&loc) {
            return i;
        }
        let i = self.vertices.len();
        self.index.insert(loc.clone(), i);
        self.vertices.push(loc);
        self.adj.push(BTreeSet::new());
        i
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Location] {
        &self.vertices
    }

    pub fn index_of(&self, loc: &Location) -> Option<usize> {
        self.index.get(loc).copied()
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as index pairs `(a, b)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    pub fn edge_locations(&self) -> BTreeSet<(Location, Location)> {
        self.edges()
            .map(|(a, b)| {
                let (x, y) = (self.vertices[a].clone(), self.vertices[b].clone());
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect()
    }

    /// Connected components as sorted vertex index lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on the vertices for which `keep` holds.
    pub fn induced(&self, keep: impl Fn(&Location) -> bool) -> FiniteGraph {
        let mut out = FiniteGraph::new();
        let mut map = vec![None; self.len()];
        for (i, loc) in self.vertices.iter().enumerate() {
            if keep(loc) {
                map[i] = Some(out.add_vertex(loc.clone()));
            }
        }
        for (a, b) in self.edges() {
            if let (Some(x), Some(y)) = (map[a], map[b]) {
                out.add_edge(x, y);
            }
        }
        out
    }

    /// Graphviz rendering with locations as quoted identifiers.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph {\n");
        for v in &self.vertices {
            let _ = writeln!(out, "  \"{v}\";");
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  \"{}\" -- \"{}\";", self.vertices[a], self.vertices[b]);
        }
        out.push_str("}\n");
        out
    }
}

/// The realization with every `Omega` multiplicity replaced by `n`.
/// Vertices are listed depth-first: a level's own vertices, then its classes
/// copy by copy.
pub fn truncate(p: &Presentation, n: usize) -> Result<FiniteGraph> {
    if n == 0 {
        return Err(Error::Precondition("truncation needs n >= 1".into()));
    }
    let mut g = FiniteGraph::new();
    let mut scopes: Vec<(Vec<(usize, usize)>, &Presentation)> = Vec::new();
    walk(p, &mut Vec::new(), &mut scopes, n, &mut g);
    Ok(g)
}

fn walk<'a>(
    p: &'a Presentation,
    path: &mut Vec<(usize, usize)>,
    scopes: &mut Vec<(Vec<(usize, usize)>, &'a Presentation)>,
    n: usize,
    g: &mut FiniteGraph,
) {
    for v in &p.vertices {
        g.add_vertex(Location::new(path.clone(), v.clone()));
    }
    scopes.push((path.clone(), p));
    for e in &p.edges {
        let a = resolve(scopes, &e.0);
        let b = resolve(scopes, &e.1);
        if let (Some(a), Some(b)) = (a, b) {
            let (a, b) = (g.add_vertex(a), g.add_vertex(b));
            g.add_edge(a, b);
        }
    }
    for (i, class) in p.classes.iter().enumerate() {
        for j in 0..class.mult.truncated(n) {
            path.push((i, j));
            walk(&class.child, path, scopes, n, g);
            path.pop();
        }
    }
    scopes.pop();
}

fn resolve(scopes: &[(Vec<(usize, usize)>, &Presentation)], name: &str) -> Option<Location> {
    scopes
        .iter()
        .rev()
        .find(|(_, level)| level.has_vertex(name))
        .map(|(path, _)| Location::new(path.clone(), name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    #[test]
    fn star_truncation() {
        let t = parse("(graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))").unwrap();
        let g = truncate(&t.pres, 3).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.degree(0), 3);
    }

    #[test]
    fn k2_infinity_truncation() {
        let t = parse("(graph (vertices a b) (class (mult w) (graph (vertices u) (edges (u a) (u b)))))").unwrap();
        let g = truncate(&t.pres, 2).unwrap();
        assert_eq!((g.len(), g.edge_count()), (4, 4));
    }

    #[test]
    fn omega_union_of_stars() {
        let t = parse(
            "(graph (vertices) (class (mult w) (graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))))",
        )
        .unwrap();
        let g = truncate(&t.pres, 2).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.components().len(), 2);
    }

    #[test]
    fn dot_output() {
        let t = parse("(graph (vertices a b) (edges (a b)))").unwrap();
        let dot = truncate(&t.pres, 1).unwrap().to_dot();
        assert!(dot.contains("\"a\" -- \"b\";"));
        assert!(dot.starts_with("graph {"));
    }
}
