//! Finite encodings of infinite rayless graphs.
//!
//! A [`Presentation`] is a finite part (named vertices and edges) together
//! with a list of component classes. Each class holds a child presentation
//! and a [`Multiplicity`]; the realization contains that many disjoint copies
//! of the child, all glued to the same enclosing vertices. Edges at a level
//! join a local vertex to another local vertex or to a vertex bound by an
//! enclosing level.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Name = String;

/// Number of copies of a component class: a positive natural or countably
/// many. `Finite(0)` only shows up as a vertex count, never as a class
/// multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Multiplicity {
    Finite(u64),
    Omega,
}

impl Multiplicity {
    pub const ONE: Multiplicity = Multiplicity::Finite(1);

    pub fn is_finite(self) -> bool {
        matches!(self, Multiplicity::Finite(_))
    }

    pub fn is_omega(self) -> bool {
        matches!(self, Multiplicity::Omega)
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Multiplicity::Finite(n) => Some(n),
            Multiplicity::Omega => None,
        }
    }

    /// Cardinal sum; `Omega` absorbs.
    pub fn add(self, other: Multiplicity) -> Multiplicity {
        match (self, other) {
            (Multiplicity::Finite(a), Multiplicity::Finite(b)) => Multiplicity::Finite(a + b),
            _ => Multiplicity::Omega,
        }
    }

    /// Cardinal product; zero annihilates, otherwise `Omega` absorbs.
    pub fn mul(self, other: Multiplicity) -> Multiplicity {
        match (self, other) {
            (Multiplicity::Finite(0), _) | (_, Multiplicity::Finite(0)) => Multiplicity::Finite(0),
            (Multiplicity::Finite(a), Multiplicity::Finite(b)) => Multiplicity::Finite(a * b),
            _ => Multiplicity::Omega,
        }
    }

    /// Subtracts finitely many copies. `Omega - k = Omega`.
    pub fn sub(self, k: u64) -> Option<Multiplicity> {
        match self {
            Multiplicity::Finite(n) if k <= n => Some(Multiplicity::Finite(n - k)),
            Multiplicity::Finite(_) => None,
            Multiplicity::Omega => Some(Multiplicity::Omega),
        }
    }

    /// Number of copies present in a truncation where `Omega` becomes `n`.
    pub fn truncated(self, n: usize) -> usize {
        match self {
            Multiplicity::Finite(m) => m as usize,
            Multiplicity::Omega => n,
        }
    }

    /// Whether copy index `j` exists.
    pub fn contains(self, j: usize) -> bool {
        match self {
            Multiplicity::Finite(m) => (j as u64) < m,
            Multiplicity::Omega => true,
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(n) => write!(f, "{n}"),
            Multiplicity::Omega => write!(f, "w"),
        }
    }
}

/// An undirected edge stored with its endpoints in sorted order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge(pub Name, pub Name);

impl Edge {
    pub fn new(a: impl Into<Name>, b: impl Into<Name>) -> Edge {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn has(&self, v: &str) -> bool {
        self.0 == v || self.1 == v
    }

    /// The endpoint that is not `v`.
    pub fn other(&self, v: &str) -> &str {
        if self.0 == v {
            &self.1
        } else {
            &self.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentClass {
    pub mult: Multiplicity,
    pub child: Presentation,
}

/// One level of a presentation. The boundary of a level is implicit: it is
/// the set of names bound by the enclosing levels (empty at the top).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Presentation {
    pub vertices: Vec<Name>,
    pub edges: BTreeSet<Edge>,
    pub classes: Vec<ComponentClass>,
}

/// A presentation with a distinguished finite set of top-level vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphTuple {
    pub x: BTreeSet<Name>,
    pub pres: Presentation,
}

/// Address of one vertex of the realization: the (class, copy) choices made
/// while descending, followed by the local name at the level reached.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub path: Vec<(usize, usize)>,
    pub name: Name,
}

impl Location {
    pub fn top(name: impl Into<Name>) -> Location {
        Location {
            path: Vec::new(),
            name: name.into(),
        }
    }

    pub fn new(path: Vec<(usize, usize)>, name: impl Into<Name>) -> Location {
        Location {
            path,
            name: name.into(),
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (class, copy) in &self.path {
            write!(f, "{class}.{copy}/")?;
        }
        write!(f, "{}", self.name)
    }
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Presentation {
    pub fn new() -> Presentation {
        Presentation::default()
    }

    /// Finite graph with the given vertices and edges.
    pub fn finite<V, E>(vertices: V, edges: E) -> Presentation
    where
        V: IntoIterator,
        V::Item: Into<Name>,
        E: IntoIterator<Item = (&'static str, &'static str)>,
    {
        Presentation {
            vertices: vertices.into_iter().map(Into::into).collect(),
            edges: edges.into_iter().map(|(a, b)| Edge::new(a, b)).collect(),
            classes: Vec::new(),
        }
    }

    pub fn with_class(mut self, mult: Multiplicity, child: Presentation) -> Presentation {
        self.classes.push(ComponentClass { mult, child });
        self
    }

    pub fn has_vertex(&self, name: &str) -> bool {
        self.vertices.iter().any(|v| v == name)
    }

    /// Checks naming, scoping and simplicity for a top-level presentation.
    pub fn validate(&self) -> Result<()> {
        self.validate_in(&mut Vec::new())
    }

    /// Validates a presentation whose boundary is `boundary`.
    pub fn validate_with_boundary(&self, boundary: &[Name]) -> Result<()> {
        let mut scope: Vec<Name> = boundary.to_vec();
        self.validate_in(&mut scope)
    }

    fn validate_in(&self, scope: &mut Vec<Name>) -> Result<()> {
        let mut local = HashSet::new();
        for v in &self.vertices {
            if !is_valid_name(v) {
                return Err(Error::InvalidName(v.clone()));
            }
            if !local.insert(v.as_str()) || scope.contains(v) {
                return Err(Error::DuplicateName(v.clone()));
            }
        }
        for e in &self.edges {
            if e.0 == e.1 {
                return Err(Error::SelfLoop(e.0.clone()));
            }
            let l0 = local.contains(e.0.as_str());
            let l1 = local.contains(e.1.as_str());
            for (is_local, name) in [(l0, &e.0), (l1, &e.1)] {
                if !is_local && !scope.contains(name) {
                    return Err(Error::UnboundName(name.clone()));
                }
            }
            if !l0 && !l1 {
                return Err(Error::ForeignEdge(e.0.clone(), e.1.clone()));
            }
        }
        for class in &self.classes {
            if class.mult == Multiplicity::Finite(0) {
                return Err(Error::ZeroMultiplicity);
            }
        }
        let depth = scope.len();
        scope.extend(self.vertices.iter().cloned());
        let result = self
            .classes
            .iter()
            .try_for_each(|class| class.child.validate_in(scope));
        scope.truncate(depth);
        result
    }

    /// Number of vertices of the realization.
    pub fn cardinality(&self) -> Multiplicity {
        self.classes.iter().fold(
            Multiplicity::Finite(self.vertices.len() as u64),
            |acc, class| acc.add(class.mult.mul(class.child.cardinality())),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.cardinality().is_finite()
    }

    /// Number of nested class levels below this one.
    pub fn depth(&self) -> usize {
        self.classes
            .iter()
            .map(|c| 1 + c.child.depth())
            .max()
            .unwrap_or(0)
    }

    /// Names referenced by edges in this subtree but bound outside of it.
    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        let depth = bound.len();
        bound.extend(self.vertices.iter().cloned());
        for e in &self.edges {
            for n in [&e.0, &e.1] {
                if !bound.contains(n) {
                    out.insert(n.clone());
                }
            }
        }
        for class in &self.classes {
            class.child.collect_free(bound, out);
        }
        bound.truncate(depth);
    }

    /// Every name occurring anywhere in the subtree.
    pub fn all_names(&self, out: &mut HashSet<Name>) {
        out.extend(self.vertices.iter().cloned());
        for e in &self.edges {
            out.insert(e.0.clone());
            out.insert(e.1.clone());
        }
        for class in &self.classes {
            class.child.all_names(out);
        }
    }

    /// Renames every occurrence (binding and reference) of the given names.
    /// Names are never shadowed, so a plain substitution is capture-free as
    /// long as the new names are fresh for the subtree.
    pub fn renamed(&self, map: &BTreeMap<Name, Name>) -> Presentation {
        if map.is_empty() {
            return self.clone();
        }
        let r = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
        Presentation {
            vertices: self.vertices.iter().map(r).collect(),
            edges: self.edges.iter().map(|e| Edge::new(r(&e.0), r(&e.1))).collect(),
            classes: self
                .classes
                .iter()
                .map(|c| ComponentClass {
                    mult: c.mult,
                    child: c.child.renamed(map),
                })
                .collect(),
        }
    }

    /// Drops every edge that mentions one of `names`, at all levels.
    pub fn without_references(&self, names: &BTreeSet<Name>) -> Presentation {
        Presentation {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .filter(|e| !names.contains(&e.0) && !names.contains(&e.1))
                .cloned()
                .collect(),
            classes: self
                .classes
                .iter()
                .map(|c| ComponentClass {
                    mult: c.mult,
                    child: c.child.without_references(names),
                })
                .collect(),
        }
    }

    fn class_at_mut(&mut self, class_path: &[usize]) -> Result<&mut ComponentClass> {
        let (&first, rest) = class_path
            .split_first()
            .ok_or_else(|| Error::InvalidClassPath(class_path.to_vec()))?;
        let class = self
            .classes
            .get_mut(first)
            .ok_or_else(|| Error::InvalidClassPath(class_path.to_vec()))?;
        if rest.is_empty() {
            Ok(class)
        } else {
            class.child.class_at_mut(rest).map_err(|_| Error::InvalidClassPath(class_path.to_vec()))
        }
    }

    /// Adds `k` copies to the class reached by following class indices.
    /// Nested classes are templates, so the change applies to every copy of
    /// the enclosing classes.
    pub fn add_class_copies(&self, class_path: &[usize], k: Multiplicity) -> Result<Presentation> {
        let mut out = self.clone();
        let class = out.class_at_mut(class_path)?;
        class.mult = class.mult.add(k);
        Ok(out)
    }

    /// Removes `k` copies. Removing finitely many copies from `Omega` leaves
    /// `Omega`; a finite class must keep at least one copy.
    pub fn remove_class_copies(
        &self,
        class_path: &[usize],
        k: Multiplicity,
    ) -> Result<Presentation> {
        let mut out = self.clone();
        let class = out.class_at_mut(class_path)?;
        let current = class.mult;
        let k = match k {
            Multiplicity::Finite(k) => k,
            Multiplicity::Omega => {
                return Err(Error::Precondition(
                    "cannot remove infinitely many copies".into(),
                ))
            }
        };
        match current.sub(k) {
            Some(Multiplicity::Finite(0)) | None => Err(Error::RemovalExceedsMultiplicity {
                remove: k,
                current: current.finite().unwrap_or(0),
            }),
            Some(m) => {
                class.mult = m;
                Ok(out)
            }
        }
    }

    /// Replaces the multiplicity of a class outright.
    pub fn with_multiplicity(&self, class_path: &[usize], mult: Multiplicity) -> Result<Presentation> {
        if mult == Multiplicity::Finite(0) {
            return Err(Error::ZeroMultiplicity);
        }
        let mut out = self.clone();
        out.class_at_mut(class_path)?.mult = mult;
        Ok(out)
    }

    /// Whether `loc` addresses a vertex of the realization.
    pub fn contains_location(&self, loc: &Location) -> bool {
        let mut level = self;
        for &(class, copy) in &loc.path {
            match level.classes.get(class) {
                Some(c) if c.mult.contains(copy) => level = &c.child,
                _ => return false,
            }
        }
        level.has_vertex(&loc.name)
    }

    /// The level reached by following `path`, ignoring copy indices.
    pub fn level_at(&self, path: &[(usize, usize)]) -> Option<&Presentation> {
        let mut level = self;
        for &(class, copy) in path {
            let c = level.classes.get(class)?;
            if !c.mult.contains(copy) {
                return None;
            }
            level = &c.child;
        }
        Some(level)
    }
}

impl GraphTuple {
    pub fn new(x: impl IntoIterator<Item = impl Into<Name>>, pres: Presentation) -> Result<GraphTuple> {
        let t = GraphTuple {
            x: x.into_iter().map(Into::into).collect(),
            pres,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn graph(pres: Presentation) -> GraphTuple {
        GraphTuple {
            x: BTreeSet::new(),
            pres,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pres.validate()?;
        for v in &self.x {
            if !self.pres.has_vertex(v) {
                return Err(Error::BadDistinguished(v.clone()));
            }
        }
        Ok(())
    }
}

/// Source of names that are fresh for a whole presentation tree.
#[derive(Debug, Clone, Default)]
pub struct NameSupply {
    used: HashSet<Name>,
}

impl NameSupply {
    pub fn for_presentation(p: &Presentation) -> NameSupply {
        let mut used = HashSet::new();
        p.all_names(&mut used);
        NameSupply { used }
    }

    pub fn reserve(&mut self, names: impl IntoIterator<Item = Name>) {
        self.used.extend(names);
    }

    pub fn fresh(&mut self, base: &str) -> Name {
        let stem = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
        let stem = if stem.is_empty() { "v" } else { stem };
        if !self.used.contains(base) && is_valid_name(base) {
            self.used.insert(base.to_string());
            return base.to_string();
        }
        let mut i = 1usize;
        loop {
            let candidate = format!("{stem}_{i}");
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Multiplicity::{Finite, Omega};

    fn star() -> Presentation {
        Presentation::finite(["c"], []).with_class(Omega, Presentation::finite(["l"], [("l", "c")]))
    }

    #[test]
    fn multiplicity_arithmetic() {
        assert_eq!(Finite(1).add(Finite(1)), Finite(2));
        assert_eq!(Omega.sub(3), Some(Omega));
        assert_eq!(Finite(2).sub(3), None);
        assert_eq!(Omega.mul(Finite(0)), Finite(0));
        assert_eq!(Omega.add(Omega), Omega);
        assert!(Finite(100) < Omega);
    }

    #[test]
    fn cardinalities() {
        let triangle = Presentation::finite(["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")]);
        assert_eq!(triangle.cardinality(), Finite(3));
        assert_eq!(star().cardinality(), Omega);
        let five = Presentation::finite(["c"], []).with_class(Finite(5), Presentation::finite(["l"], [("l", "c")]));
        assert_eq!(five.cardinality(), Finite(6));
    }

    #[test]
    fn validation_errors() {
        let unbound = Presentation::finite(["a"], [("a", "zzz")]);
        assert_eq!(unbound.validate(), Err(Error::UnboundName("zzz".into())));
        let shadow = Presentation::finite(["a"], []).with_class(Omega, Presentation::finite(["a"], []));
        assert_eq!(shadow.validate(), Err(Error::DuplicateName("a".into())));
        let zero = Presentation::finite(["a"], []).with_class(Finite(0), Presentation::finite(["b"], []));
        assert_eq!(zero.validate(), Err(Error::ZeroMultiplicity));
        assert!(star().validate().is_ok());
    }

    #[test]
    fn class_copy_arithmetic() {
        let k2 = Presentation::finite(["a", "b"], [])
            .with_class(Omega, Presentation::finite(["u"], [("u", "a"), ("u", "b")]))
            .with_class(Finite(1), Presentation::finite(["v"], [("v", "a")]));
        let added = k2.add_class_copies(&[1], Finite(1)).unwrap();
        assert_eq!(added.classes[1].mult, Finite(2));
        let removed = k2.remove_class_copies(&[0], Finite(3)).unwrap();
        assert_eq!(removed.classes[0].mult, Omega);
        assert!(matches!(
            k2.remove_class_copies(&[1], Finite(1)),
            Err(Error::RemovalExceedsMultiplicity { .. })
        ));
    }

    #[test]
    fn fresh_names_avoid_everything() {
        let mut supply = NameSupply::for_presentation(&star());
        assert_eq!(supply.fresh("l"), "l_1");
        assert_eq!(supply.fresh("l"), "l_2");
        assert_eq!(supply.fresh("q"), "q");
    }
}
