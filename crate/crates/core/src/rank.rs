//! Schmidt rank and kernels of presentations.
//!
//! The realization of a presentation minus its top finite part is the
//! disjoint union of the connected pieces of its class copies, and removing
//! finitely many vertices never changes the rank. So the rank of a
//! presentation is obtained by [`combine`] over those pieces.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::decompose::{components, delete_locations, Component};
use crate::error::Result;
use crate::presentation::{GraphTuple, Location, Multiplicity, Presentation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelResult {
    pub locations: BTreeSet<Location>,
    pub witness_rank: usize,
}

/// Rank of a disjoint union of graphs of the given ranks and copy counts
/// (empty parts excluded).
pub fn combine(parts: impl IntoIterator<Item = (usize, Multiplicity)>) -> usize {
    let mut top: Option<(usize, Multiplicity)> = None;
    for (r, m) in parts {
        top = match top {
            Some((best, count)) if best == r => Some((best, count.add(m))),
            Some((best, count)) if best > r => Some((best, count)),
            _ => Some((r, m)),
        };
    }
    match top {
        None => 0,
        Some((r, Multiplicity::Omega)) => r + 1,
        Some((r, _)) => r,
    }
}

/// Rank of the realization of `p`, ignoring names bound outside `p`.
pub fn rank(p: &Presentation) -> usize {
    if p.is_finite() {
        return 0;
    }
    combine(class_pieces(p).into_iter().map(|(_, r, m)| (r, m)))
}

/// Rank and total multiplicity of every connected piece of every class,
/// tagged with the class index.
fn class_pieces(p: &Presentation) -> Vec<(usize, usize, Multiplicity)> {
    let mut out = Vec::new();
    for (i, class) in p.classes.iter().enumerate() {
        for piece in components(&class.child) {
            out.push((i, rank(&piece.pres), class.mult.mul(piece.mult)));
        }
    }
    out
}

/// A finite separator witnessing `rank(p)`: every component of the
/// realization minus the returned set has smaller rank. Empty for finite `p`.
pub fn kernel_witness(p: &Presentation) -> BTreeSet<Location> {
    let mut out = BTreeSet::new();
    if p.is_finite() {
        return out;
    }
    collect_witness(p, &mut Vec::new(), &mut out);
    out
}

fn collect_witness(p: &Presentation, path: &mut Vec<(usize, usize)>, out: &mut BTreeSet<Location>) {
    for v in &p.vertices {
        out.insert(Location::new(path.clone(), v.clone()));
    }
    let pieces = class_pieces(p);
    let Some(top) = pieces.iter().map(|&(_, r, _)| r).max() else {
        return;
    };
    let infinitely_many = pieces.iter().any(|&(_, r, m)| r == top && m.is_omega());
    if top == 0 || infinitely_many {
        return;
    }
    let chosen: BTreeSet<usize> = pieces.iter().filter(|&&(_, r, _)| r == top).map(|&(i, _, _)| i).collect();
    for i in chosen {
        let class = &p.classes[i];
        let copies = class.mult.finite().expect("finitely many top-rank copies") as usize;
        for j in 0..copies {
            path.push((i, j));
            collect_witness(&class.child, path, out);
            path.pop();
        }
    }
}

/// Whether every component of the realization minus `s` has rank below `r`.
pub fn separates_below(p: &Presentation, s: &BTreeSet<Location>, r: usize) -> Result<bool> {
    let pieces = delete_locations(p, s)?;
    Ok(pieces.iter().all(|c| rank(&c.pres) < r))
}

/// The kernel: the unique minimal finite separator witnessing the rank.
///
/// Valid separators are closed under supersets and have a unique minimal
/// element, so a vertex of a valid witness belongs to the kernel exactly
/// when the witness without it is no longer valid.
pub fn kernel(p: &Presentation) -> Result<KernelResult> {
    let r = rank(p);
    if r == 0 {
        return Ok(KernelResult {
            locations: BTreeSet::new(),
            witness_rank: 0,
        });
    }
    let witness = kernel_witness(p);
    let mut locations = BTreeSet::new();
    for v in &witness {
        let mut smaller = witness.clone();
        smaller.remove(v);
        if !separates_below(p, &smaller, r)? {
            locations.insert(v.clone());
        }
    }
    Ok(KernelResult {
        locations,
        witness_rank: r,
    })
}

/// Rank of the realization minus `t`, recombined from its components.
pub fn rank_after_deleting(p: &Presentation, t: &BTreeSet<Location>) -> Result<usize> {
    let pieces: Vec<Component> = delete_locations(p, t)?;
    Ok(combine(pieces.iter().map(|c| (rank(&c.pres), c.mult))))
}

/// Whether the realization minus the distinguished set is connected.
pub fn is_connected_tuple(t: &GraphTuple) -> Result<bool> {
    let pieces = crate::decompose::tuple_minus_x_components(t)?;
    Ok(matches!(pieces.as_slice(), [only] if only.mult == Multiplicity::ONE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    const STAR: &str = "(graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))";
    const K2INF: &str = "(graph (vertices a b) (class (mult w) (graph (vertices u) (edges (u a) (u b)))))";
    const STARS: &str =
        "(graph (vertices) (class (mult w) (graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))))";

    fn kernel_names(text: &str) -> Vec<String> {
        kernel(&parse(text).unwrap().pres)
            .unwrap()
            .locations
            .into_iter()
            .map(|l| l.to_string())
            .collect()
    }

    #[test]
    fn fixture_ranks_and_kernels() {
        let triangle = "(graph (vertices a b c) (edges (a b) (b c) (a c)))";
        assert_eq!(rank(&parse(triangle).unwrap().pres), 0);
        assert!(kernel_names(triangle).is_empty());
        assert_eq!(rank(&parse(STAR).unwrap().pres), 1);
        assert_eq!(kernel_names(STAR), vec!["c"]);
        assert_eq!(rank(&parse(STARS).unwrap().pres), 2);
        assert!(kernel_names(STARS).is_empty());
        assert_eq!(rank(&parse(K2INF).unwrap().pres), 1);
        assert_eq!(kernel_names(K2INF), vec!["a", "b"]);
    }

    #[test]
    fn kernel_inside_a_class() {
        // A finite path a - c where c is the centre of an infinite star held
        // in a class of multiplicity one.
        let text = "(graph (vertices a) (class (mult 1) (graph (vertices c) (edges (c a)) (class (mult w) (graph (vertices l) (edges (l c)))))))";
        assert_eq!(kernel_names(text), vec!["0.0/c"]);
    }

    #[test]
    fn finitely_many_stars_keep_rank_one() {
        let text = "(graph (vertices) (class (mult 3) (graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))))";
        let p = parse(text).unwrap().pres;
        assert_eq!(rank(&p), 1);
        assert_eq!(kernel(&p).unwrap().locations.len(), 3);
    }

    #[test]
    fn connectivity() {
        let star = parse(STAR).unwrap();
        assert!(is_connected_tuple(&star).unwrap());
        let pointed = GraphTuple::new(["c"], star.pres.clone()).unwrap();
        assert!(!is_connected_tuple(&pointed).unwrap());
        assert!(!is_connected_tuple(&parse(STARS).unwrap()).unwrap());
    }

    #[test]
    fn combine_rules() {
        use Multiplicity::{Finite, Omega};
        assert_eq!(combine([]), 0);
        assert_eq!(combine([(0, Finite(3))]), 0);
        assert_eq!(combine([(0, Omega)]), 1);
        assert_eq!(combine([(1, Finite(2)), (0, Omega)]), 1);
        assert_eq!(combine([(1, Finite(2)), (1, Omega)]), 2);
        assert_eq!(combine([(2, Finite(1)), (1, Omega)]), 2);
    }
}
