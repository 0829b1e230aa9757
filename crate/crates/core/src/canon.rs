//! Canonical labeling of small vertex-colored graphs with several arc
//! relations, by individualization and refinement. Subtrees of the search
//! tree that are images of already explored ones under a discovered
//! automorphism are skipped.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredGraph {
    pub colors: Vec<u32>,
    /// `relations[r][u]` lists the heads of the arcs `u -> v` of relation `r`.
    /// Symmetric relations list both directions.
    pub relations: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canonical {
    /// `labeling[u]` is the canonical position of node `u`.
    pub labeling: Vec<usize>,
    pub certificate: Vec<u32>,
}

impl ColoredGraph {
    pub fn new(colors: Vec<u32>, relation_count: usize) -> ColoredGraph {
        let n = colors.len();
        ColoredGraph {
            colors,
            relations: vec![vec![Vec::new(); n]; relation_count],
        }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn add_arc(&mut self, relation: usize, u: usize, v: usize) {
        self.relations[relation][u].push(v);
    }

    pub fn add_edge(&mut self, relation: usize, u: usize, v: usize) {
        self.relations[relation][u].push(v);
        self.relations[relation][v].push(u);
    }

    fn reversed(&self) -> Vec<Vec<Vec<usize>>> {
        self.relations
            .iter()
            .map(|rel| {
                let mut rev = vec![Vec::new(); self.len()];
                for (u, heads) in rel.iter().enumerate() {
                    for &v in heads {
                        rev[v].push(u);
                    }
                }
                rev
            })
            .collect()
    }

    /// Encoding of the graph relabeled by `labeling`.
    fn certificate(&self, labeling: &[usize]) -> Vec<u32> {
        let n = self.len();
        let mut inverse = vec![0; n];
        for (u, &pos) in labeling.iter().enumerate() {
            inverse[pos] = u;
        }
        let mut out = Vec::with_capacity(n + 4 * n);
        out.push(n as u32);
        out.extend(inverse.iter().map(|&u| self.colors[u]));
        for rel in &self.relations {
            let mut arcs: Vec<(u32, u32)> = rel
                .iter()
                .enumerate()
                .flat_map(|(u, heads)| heads.iter().map(move |&v| (labeling[u] as u32, labeling[v] as u32)))
                .collect();
            arcs.sort_unstable();
            out.push(u32::MAX);
            out.push(arcs.len() as u32);
            for (a, b) in arcs {
                out.push(a);
                out.push(b);
            }
        }
        out
    }
}

struct Search<'a> {
    graph: &'a ColoredGraph,
    reversed: Vec<Vec<Vec<usize>>>,
    best: Option<(Vec<u32>, Vec<usize>)>,
    seen: HashMap<Vec<u32>, Vec<usize>>,
    path: Vec<usize>,
}

impl Search<'_> {
    fn refine(&self, cells: &mut Vec<Vec<usize>>) {
        let n = self.graph.len();
        let mut cell_of = vec![0usize; n];
        loop {
            for (i, cell) in cells.iter().enumerate() {
                for &v in cell {
                    cell_of[v] = i;
                }
            }
            let mut next = Vec::with_capacity(cells.len());
            let mut changed = false;
            for cell in cells.iter() {
                if cell.len() == 1 {
                    next.push(cell.clone());
                    continue;
                }
                let mut keyed: Vec<(Vec<usize>, usize)> = cell
                    .iter()
                    .map(|&v| {
                        let mut sig = Vec::new();
                        for (rel, rev) in self.graph.relations.iter().zip(&self.reversed) {
                            let mut out: Vec<usize> = rel[v].iter().map(|&w| cell_of[w]).collect();
                            out.sort_unstable();
                            let mut inc: Vec<usize> = rev[v].iter().map(|&w| cell_of[w]).collect();
                            inc.sort_unstable();
                            sig.push(out.len());
                            sig.extend(out);
                            sig.push(usize::MAX);
                            sig.push(inc.len());
                            sig.extend(inc);
                            sig.push(usize::MAX);
                        }
                        (sig, v)
                    })
                    .collect();
                keyed.sort();
                let mut start = 0;
                for i in 1..=keyed.len() {
                    if i == keyed.len() || keyed[i].0 != keyed[start].0 {
                        next.push(keyed[start..i].iter().map(|(_, v)| *v).collect());
                        start = i;
                    }
                }
                if next.len() > 0 && keyed.len() != next.last().map_or(0, Vec::len) {
                    changed = true;
                }
            }
            *cells = next;
            if !changed {
                return;
            }
        }
    }

    /// Returns `Some(depth)` when the caller at that depth should abandon
    /// the current child subtree.
    fn explore(&mut self, mut cells: Vec<Vec<usize>>) -> Option<usize> {
        self.refine(&mut cells);
        let target = cells.iter().position(|c| c.len() > 1);
        let Some(target) = target else {
            let mut labeling = vec![0; self.graph.len()];
            for (pos, cell) in cells.iter().enumerate() {
                labeling[cell[0]] = pos;
            }
            let cert = self.graph.certificate(&labeling);
            if let Some(previous) = self.seen.get(&cert) {
                let common = previous
                    .iter()
                    .zip(&self.path)
                    .take_while(|(a, b)| a == b)
                    .count();
                return Some(common);
            }
            self.seen.insert(cert.clone(), self.path.clone());
            if self.best.as_ref().is_none_or(|(best, _)| cert > *best) {
                self.best = Some((cert, labeling));
            }
            return None;
        };
        let depth = self.path.len();
        let choices = cells[target].clone();
        for v in choices {
            let mut child = Vec::with_capacity(cells.len() + 1);
            child.extend_from_slice(&cells[..target]);
            child.push(vec![v]);
            child.push(cells[target].iter().copied().filter(|&w| w != v).collect());
            child.extend_from_slice(&cells[target + 1..]);
            self.path.push(v);
            let result = self.explore(child);
            self.path.pop();
            if let Some(f) = result {
                if f < depth {
                    return Some(f);
                }
            }
        }
        None
    }
}

/// Canonical labeling: two colored graphs get equal certificates iff they
/// are isomorphic (color-, relation- and arc-preserving).
pub fn canonize(graph: &ColoredGraph) -> Canonical {
    if graph.is_empty() {
        return Canonical {
            labeling: Vec::new(),
            certificate: graph.certificate(&[]),
        };
    }
    let mut by_color: Vec<(u32, usize)> = graph.colors.iter().copied().zip(0..).collect();
    by_color.sort_unstable();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for (i, &(color, v)) in by_color.iter().enumerate() {
        if i == 0 || by_color[i - 1].0 != color {
            cells.push(Vec::new());
        }
        cells.last_mut().expect("pushed").push(v);
    }
    let mut search = Search {
        graph,
        reversed: graph.reversed(),
        best: None,
        seen: HashMap::new(),
        path: Vec::new(),
    };
    search.explore(cells);
    let (certificate, labeling) = search.best.expect("at least one leaf");
    Canonical {
        labeling,
        certificate,
    }
}

/// An isomorphism `g -> h` as a node map, when one exists.
pub fn isomorphism(g: &ColoredGraph, h: &ColoredGraph) -> Option<Vec<usize>> {
    let cg = canonize(g);
    let ch = canonize(h);
    if cg.certificate != ch.certificate {
        return None;
    }
    let mut at_position = vec![0; h.len()];
    for (v, &pos) in ch.labeling.iter().enumerate() {
        at_position[pos] = v;
    }
    Some(cg.labeling.iter().map(|&pos| at_position[pos]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> ColoredGraph {
        let mut g = ColoredGraph::new(vec![0; n], 1);
        for &(a, b) in edges {
            g.add_edge(0, a, b);
        }
        g
    }

    #[test]
    fn cycles_and_paths() {
        let c5 = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let other = graph(5, &[(0, 2), (2, 1), (1, 4), (4, 3), (3, 0)]);
        let p5 = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(canonize(&c5).certificate, canonize(&other).certificate);
        assert_ne!(canonize(&c5).certificate, canonize(&p5).certificate);
        let map = isomorphism(&c5, &other).unwrap();
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)] {
            assert!(other.relations[0][map[a]].contains(&map[b]));
        }
    }

    #[test]
    fn colors_matter() {
        let mut a = graph(2, &[(0, 1)]);
        let mut b = graph(2, &[(0, 1)]);
        a.colors = vec![1, 0];
        b.colors = vec![0, 1];
        assert_eq!(canonize(&a).certificate, canonize(&b).certificate);
        b.colors = vec![0, 0];
        assert_ne!(canonize(&a).certificate, canonize(&b).certificate);
    }

    #[test]
    fn directed_relations() {
        let mut a = ColoredGraph::new(vec![0; 3], 1);
        a.add_arc(0, 0, 1);
        a.add_arc(0, 1, 2);
        let mut b = ColoredGraph::new(vec![0; 3], 1);
        b.add_arc(0, 2, 1);
        b.add_arc(0, 1, 0);
        let mut c = ColoredGraph::new(vec![0; 3], 1);
        c.add_arc(0, 0, 1);
        c.add_arc(0, 2, 1);
        assert_eq!(canonize(&a).certificate, canonize(&b).certificate);
        assert_ne!(canonize(&a).certificate, canonize(&c).certificate);
    }

    #[test]
    fn highly_symmetric_inputs_finish() {
        // Disjoint union of 8 copies of K_{1,4}: large automorphism group.
        let mut edges = Vec::new();
        for k in 0..8 {
            for l in 1..5 {
                edges.push((5 * k, 5 * k + l));
            }
        }
        let g = graph(40, &edges);
        let c = canonize(&g);
        let mut relabeled = vec![0; 40];
        for (i, slot) in relabeled.iter_mut().enumerate() {
            *slot = (i * 7) % 40;
        }
        let h = graph(
            40,
            &edges.iter().map(|&(a, b)| (relabeled[a], relabeled[b])).collect::<Vec<_>>(),
        );
        assert_eq!(c.certificate, canonize(&h).certificate);
    }
}
