//! Finitely represented embeddings between presentations.
//!
//! A witness follows the class structure of its source. Every source class
//! is covered by segments: single copies, or a tail of all copies from some
//! index on. Inside a segment the source copy index is a variable, and every
//! target copy index is either a constant or an affine function
//! `offset + stride * k` of one variable in scope.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::IsoWitness;
use crate::presentation::{Location, Multiplicity, Name, Presentation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Weak,
    Strong,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "weak" => Ok(Mode::Weak),
            "strong" => Ok(Mode::Strong),
            other => Err(Error::Precondition(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Weak => "weak",
            Mode::Strong => "strong",
        })
    }
}

/// A target copy index. `var` is the depth of the source level whose copy
/// index it reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Index {
    Const(u64),
    Affine { var: usize, offset: i64, stride: u64 },
}

impl Index {
    pub fn var(var: usize) -> Index {
        Index::Affine {
            var,
            offset: 0,
            stride: 1,
        }
    }

    pub fn eval(&self, vars: &[u64]) -> Option<u64> {
        match *self {
            Index::Const(c) => Some(c),
            Index::Affine { var, offset, stride } => {
                let v = offset + (stride * vars[var]) as i64;
                u64::try_from(v).ok()
            }
        }
    }

    /// Substitutes the source variable `var` by `value`.
    fn then(self, inner: Index) -> Index {
        match (self, inner) {
            (Index::Const(c), _) => Index::Const(c),
            (Index::Affine { offset, stride, .. }, Index::Const(c)) => {
                Index::Const((offset + (stride * c) as i64) as u64)
            }
            (
                Index::Affine { offset, stride, .. },
                Index::Affine {
                    var,
                    offset: o,
                    stride: s,
                },
            ) => Index::Affine {
                var,
                offset: offset + stride as i64 * o,
                stride: stride * s,
            },
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Index::Const(c) => write!(f, "{c}"),
            Index::Affine { var, offset, stride } => write!(f, "{offset}+{stride}k{var}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetLoc {
    pub path: Vec<(usize, Index)>,
    pub name: Name,
}

impl TargetLoc {
    pub fn top(name: impl Into<Name>) -> TargetLoc {
        TargetLoc {
            path: Vec::new(),
            name: name.into(),
        }
    }

    pub fn eval(&self, vars: &[u64]) -> Option<Location> {
        let path = self
            .path
            .iter()
            .map(|(c, i)| i.eval(vars).map(|j| (*c, j as usize)))
            .collect::<Option<Vec<_>>>()?;
        Some(Location::new(path, self.name.clone()))
    }
}

impl fmt::Display for TargetLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, i) in &self.path {
            write!(f, "{c}.{i}/")?;
        }
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Copies {
    One(u64),
    /// Every copy with index at least the given one.
    From(u64),
}

impl Copies {
    pub fn contains(self, j: u64) -> bool {
        match self {
            Copies::One(i) => i == j,
            Copies::From(s) => j >= s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub copies: Copies,
    pub map: LevelMap,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelMap {
    pub vertices: BTreeMap<Name, TargetLoc>,
    pub classes: Vec<Vec<Segment>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmbeddingWitness {
    pub mode: Mode,
    pub top: LevelMap,
}

impl LevelMap {
    pub fn segment(&self, class: usize, copy: u64) -> Option<&Segment> {
        self.classes.get(class)?.iter().find(|s| s.copies.contains(copy))
    }

    /// Replaces the variable `var` by the constant `value` throughout.
    pub fn bind(&self, var: usize, value: u64) -> LevelMap {
        let fix = |i: Index| match i {
            Index::Affine { var: v, offset, stride } if v == var => {
                Index::Const((offset + (stride * value) as i64) as u64)
            }
            other => other,
        };
        LevelMap {
            vertices: self
                .vertices
                .iter()
                .map(|(v, t)| {
                    (
                        v.clone(),
                        TargetLoc {
                            path: t.path.iter().map(|&(c, i)| (c, fix(i))).collect(),
                            name: t.name.clone(),
                        },
                    )
                })
                .collect(),
            classes: self
                .classes
                .iter()
                .map(|segs| {
                    segs.iter()
                        .map(|s| Segment {
                            copies: s.copies,
                            map: s.map.bind(var, value),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    fn prefixed(&self, class: usize, copy: u64) -> LevelMap {
        let mut out = self.clone();
        for t in out.vertices.values_mut() {
            t.path.insert(0, (class, Index::Const(copy)));
        }
        for segs in &mut out.classes {
            for s in segs {
                s.map = s.map.prefixed(class, copy);
            }
        }
        out
    }

    /// Every target location mentioned at this level or below.
    pub fn targets(&self) -> Vec<&TargetLoc> {
        let mut out: Vec<&TargetLoc> = self.vertices.values().collect();
        for segs in &self.classes {
            for s in segs {
                out.extend(s.map.targets());
            }
        }
        out
    }
}

impl EmbeddingWitness {
    /// Image of a source location.
    pub fn image(&self, loc: &Location) -> Option<Location> {
        let mut level = &self.top;
        let mut vars = Vec::with_capacity(loc.path.len());
        for &(class, copy) in &loc.path {
            level = &level.segment(class, copy as u64)?.map;
            vars.push(copy as u64);
        }
        level.vertices.get(&loc.name)?.eval(&vars)
    }

    /// Identity embedding of `p` into itself.
    /// The same map followed by the inclusion of the target as copy `copy`
    /// of top-level class `class` of a larger presentation.
    pub fn nested_in(&self, class: usize, copy: u64) -> EmbeddingWitness {
        EmbeddingWitness {
            mode: self.mode,
            top: self.top.prefixed(class, copy),
        }
    }

    pub fn identity(p: &Presentation, mode: Mode) -> EmbeddingWitness {
        fn level(p: &Presentation, prefix: &mut Vec<(usize, Index)>) -> LevelMap {
            LevelMap {
                vertices: p
                    .vertices
                    .iter()
                    .map(|v| {
                        (
                            v.clone(),
                            TargetLoc {
                                path: prefix.clone(),
                                name: v.clone(),
                            },
                        )
                    })
                    .collect(),
                classes: p
                    .classes
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        prefix.push((i, Index::var(prefix.len())));
                        let map = level(&c.child, prefix);
                        prefix.pop();
                        vec![Segment {
                            copies: Copies::From(0),
                            map,
                        }]
                    })
                    .collect(),
            }
        }
        EmbeddingWitness {
            mode,
            top: level(p, &mut Vec::new()),
        }
    }

    /// The embedding underlying an isomorphism of normal forms.
    pub fn from_iso(g: &Presentation, iso: &IsoWitness, mode: Mode) -> EmbeddingWitness {
        fn level(p: &Presentation, iso: &IsoWitness, prefix: &mut Vec<(usize, Index)>) -> LevelMap {
            LevelMap {
                vertices: iso
                    .eta
                    .iter()
                    .filter(|(v, _)| p.has_vertex(v))
                    .map(|(v, w)| {
                        (
                            v.clone(),
                            TargetLoc {
                                path: prefix.clone(),
                                name: w.clone(),
                            },
                        )
                    })
                    .collect(),
                classes: p
                    .classes
                    .iter()
                    .zip(&iso.classes)
                    .map(|(c, (j, sub))| {
                        prefix.push((*j, Index::var(prefix.len())));
                        let map = level(&c.child, sub, prefix);
                        prefix.pop();
                        vec![Segment {
                            copies: Copies::From(0),
                            map,
                        }]
                    })
                    .collect(),
            }
        }
        EmbeddingWitness {
            mode,
            top: level(g, iso, &mut Vec::new()),
        }
    }

    /// Largest exceptional copy index plus one, over source classes of
    /// infinite multiplicity: truncations below this miss an exception.
    pub fn exceptions_needed(&self, g: &Presentation) -> usize {
        fn walk(level: &LevelMap, p: &Presentation) -> u64 {
            let mut need = 0;
            for (segments, class) in level.classes.iter().zip(&p.classes) {
                for s in segments {
                    if let (Copies::One(j), Multiplicity::Omega) = (s.copies, class.mult) {
                        need = need.max(j + 1);
                    }
                    if let (Copies::From(j), Multiplicity::Omega) = (s.copies, class.mult) {
                        need = need.max(j);
                    }
                    need = need.max(walk(&s.map, &class.child));
                }
            }
            need
        }
        walk(&self.top, g) as usize
    }

    /// Checks that the witness is a total map from the realization of `g`
    /// into locations of the realization of `h`: segments cover every copy
    /// exactly once, and every target location exists for all values of the
    /// variables.
    pub fn check_structure(&self, g: &Presentation, h: &Presentation) -> Result<()> {
        check_level(&self.top, g, h, &mut Vec::new())
    }

    pub fn max_stride_and_offset(&self) -> (u64, u64) {
        fn walk(level: &LevelMap, acc: &mut (u64, u64)) {
            for t in level.vertices.values() {
                for (_, i) in &t.path {
                    match *i {
                        Index::Const(c) => acc.1 = acc.1.max(c),
                        Index::Affine { offset, stride, .. } => {
                            acc.0 = acc.0.max(stride);
                            acc.1 = acc.1.max(offset.unsigned_abs());
                        }
                    }
                }
            }
            for segs in &level.classes {
                for s in segs {
                    let (Copies::One(j) | Copies::From(j)) = s.copies;
                    acc.1 = acc.1.max(j);
                    walk(&s.map, acc);
                }
            }
        }
        let mut acc = (1, 0);
        walk(&self.top, &mut acc);
        acc
    }

    /// Text rendering, one line per mapped vertex.
    pub fn render(&self) -> String {
        fn walk(level: &LevelMap, prefix: &str, out: &mut String) {
            for (v, t) in &level.vertices {
                let _ = writeln!(out, "  {prefix}{v} -> {t}");
            }
            for (i, segs) in level.classes.iter().enumerate() {
                for s in segs {
                    let copies = match s.copies {
                        Copies::One(j) => format!("{j}"),
                        Copies::From(j) => format!("k{}>={j}", prefix.matches('/').count()),
                    };
                    walk(&s.map, &format!("{prefix}{i}.{copies}/"), out);
                }
            }
        }
        let mut out = format!("(witness (mode {})\n", self.mode);
        walk(&self.top, "", &mut out);
        out.push_str(")\n");
        out
    }
}

/// Possible values of a variable: a single constant, a finite range, or
/// every natural from some start on.
#[derive(Debug, Clone, Copy)]
enum Domain {
    Range(u64, u64),
    From(u64),
}

fn check_index(i: Index, domains: &[Domain], mult: Multiplicity) -> bool {
    let (lo, hi) = match i {
        Index::Const(c) => (Some(c as i64), Some(c as i64)),
        Index::Affine { var, offset, stride } => match domains.get(var) {
            None => return false,
            Some(Domain::Range(a, b)) => (Some(offset + (stride * a) as i64), Some(offset + (stride * b) as i64)),
            Some(Domain::From(a)) => (Some(offset + (stride * a) as i64), None),
        },
    };
    if lo.is_none_or(|l| l < 0) {
        return false;
    }
    match (mult, hi) {
        (Multiplicity::Omega, _) => true,
        (Multiplicity::Finite(m), Some(h)) => (h as u64) < m,
        (Multiplicity::Finite(_), None) => false,
    }
}

fn check_level(level: &LevelMap, g: &Presentation, h: &Presentation, domains: &mut Vec<Domain>) -> Result<()> {
    let mismatch = |m: String| Err(Error::StructuralMismatch(m));
    for v in &g.vertices {
        let Some(t) = level.vertices.get(v) else {
            return mismatch(format!("vertex `{v}` is not mapped"));
        };
        let mut target = h;
        for &(c, i) in &t.path {
            let Some(class) = target.classes.get(c) else {
                return mismatch(format!("`{v}` maps into missing class {c}"));
            };
            if !check_index(i, domains, class.mult) {
                return mismatch(format!("`{v}` maps to copy {i} outside class {c}"));
            }
            target = &class.child;
        }
        if !target.has_vertex(&t.name) {
            return mismatch(format!("`{v}` maps to unknown vertex `{}`", t.name));
        }
    }
    if level.vertices.len() != g.vertices.len() {
        return mismatch("witness maps vertices absent from the source".into());
    }
    if level.classes.len() != g.classes.len() {
        return mismatch("class count differs from the source".into());
    }
    for (segs, class) in level.classes.iter().zip(&g.classes) {
        let mut ones: Vec<u64> = Vec::new();
        let mut tail = None;
        for s in segs {
            match s.copies {
                Copies::One(j) => ones.push(j),
                Copies::From(j) if tail.is_none() => tail = Some(j),
                Copies::From(_) => return mismatch("two tails in one class".into()),
            }
        }
        ones.sort_unstable();
        if ones.windows(2).any(|w| w[0] == w[1]) {
            return mismatch("a copy is covered twice".into());
        }
        let covered = |j: u64| ones.binary_search(&j).is_ok() || tail.is_some_and(|t| j >= t);
        match class.mult {
            Multiplicity::Finite(m) => {
                if !(0..m).all(covered) || ones.iter().any(|&j| j >= m) || tail.is_some_and(|t| t > m) {
                    return mismatch(format!("segments do not cover the {m} copies"));
                }
            }
            Multiplicity::Omega => {
                let Some(t) = tail else {
                    return mismatch("infinite class without a tail".into());
                };
                if !(0..t).all(covered) || ones.iter().any(|&j| j >= t) {
                    return mismatch("segments overlap or leave gaps".into());
                }
            }
        }
        for s in segs {
            domains.push(match (s.copies, class.mult) {
                (Copies::One(j), _) => Domain::Range(j, j),
                (Copies::From(j), Multiplicity::Finite(m)) => Domain::Range(j, m.max(j + 1) - 1),
                (Copies::From(j), Multiplicity::Omega) => Domain::From(j),
            });
            let r = check_level(&s.map, &class.child, h, domains);
            domains.pop();
            r?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Var {
    Const(u64),
    Tail(u64),
}

enum ComposeError {
    Peel { var: usize, at: u64 },
    Fail(Error),
}

impl From<Error> for ComposeError {
    fn from(e: Error) -> ComposeError {
        ComposeError::Fail(e)
    }
}

fn resolve(i: Index, vars: &[Var]) -> Index {
    match i {
        Index::Affine { var, offset, stride } => match vars[var] {
            Var::Const(c) => Index::Const((offset + (stride * c) as i64) as u64),
            Var::Tail(_) if stride == 0 => Index::Const(offset as u64),
            Var::Tail(_) => i,
        },
        c => c,
    }
}

/// Evaluates `psi` at a location whose copy indices may be affine in tail
/// variables of the outer composition.
fn apply_symbolic(psi: &LevelMap, loc: &TargetLoc, vars: &[Var]) -> std::result::Result<TargetLoc, ComposeError> {
    let mut level = psi;
    let mut bound: Vec<Index> = Vec::new();
    for &(class, idx) in &loc.path {
        let idx = resolve(idx, vars);
        let segs = level
            .classes
            .get(class)
            .ok_or_else(|| Error::StructuralMismatch(format!("no class {class} in second witness")))?;
        let seg = match idx {
            Index::Const(c) => segs.iter().find(|s| s.copies.contains(c)),
            Index::Affine { var, offset, stride } => {
                let Var::Tail(start) = vars[var] else { unreachable!("constants resolved") };
                let tail = segs.iter().find_map(|s| match s.copies {
                    Copies::From(t) => Some(t),
                    Copies::One(_) => None,
                });
                let Some(t) = tail else {
                    return Err(Error::StructuralMismatch("infinitely many copies into a finite class".into()).into());
                };
                let first = offset + (stride * start) as i64;
                if first < t as i64 {
                    let need = (t as i64 - offset + stride as i64 - 1).div_euclid(stride as i64);
                    return Err(ComposeError::Peel {
                        var,
                        at: need.max(start as i64 + 1) as u64,
                    });
                }
                segs.iter().find(|s| matches!(s.copies, Copies::From(_)))
            }
        };
        let seg = seg.ok_or_else(|| Error::StructuralMismatch(format!("copy {idx} of class {class} is not covered")))?;
        bound.push(idx);
        level = &seg.map;
    }
    let t = level
        .vertices
        .get(&loc.name)
        .ok_or_else(|| Error::StructuralMismatch(format!("`{}` not mapped by second witness", loc.name)))?;
    Ok(TargetLoc {
        path: t
            .path
            .iter()
            .map(|&(c, i)| match i {
                Index::Const(_) => (c, i),
                Index::Affine { var, .. } => (c, i.then(bound[var])),
            })
            .collect(),
        name: t.name.clone(),
    })
}

fn compose_level(
    phi: &LevelMap,
    g: &Presentation,
    psi: &LevelMap,
    vars: &mut Vec<Var>,
) -> std::result::Result<LevelMap, ComposeError> {
    let mut out = LevelMap::default();
    for (v, t) in &phi.vertices {
        out.vertices.insert(v.clone(), apply_symbolic(psi, t, vars)?);
    }
    for (segs, class) in phi.classes.iter().zip(&g.classes) {
        let mut done = Vec::new();
        let mut pending: Vec<(Copies, &LevelMap)> = Vec::new();
        for s in segs {
            match (s.copies, class.mult) {
                (Copies::From(j), Multiplicity::Finite(m)) => {
                    pending.extend((j..m).map(|c| (Copies::One(c), &s.map)));
                }
                (c, _) => pending.push((c, &s.map)),
            }
        }
        while let Some((copies, map)) = pending.pop() {
            let depth = vars.len();
            vars.push(match copies {
                Copies::One(j) => Var::Const(j),
                Copies::From(j) => Var::Tail(j),
            });
            let r = compose_level(map, &class.child, psi, vars);
            vars.pop();
            match (r, copies) {
                (Ok(m), _) => done.push(Segment { copies, map: m }),
                (Err(ComposeError::Peel { var, at }), Copies::From(j)) if var == depth => {
                    pending.extend((j..at).map(|c| (Copies::One(c), map)));
                    pending.push((Copies::From(at), map));
                }
                (Err(e), _) => return Err(e),
            }
        }
        done.sort_by_key(|s| match s.copies {
            Copies::One(j) => (0, j),
            Copies::From(j) => (1, j),
        });
        out.classes.push(done);
    }
    Ok(out)
}

/// The composition `psi ∘ phi` of witnesses `g -> h` and `h -> k`.
pub fn compose(phi: &EmbeddingWitness, g: &Presentation, psi: &EmbeddingWitness) -> Result<EmbeddingWitness> {
    match compose_level(&phi.top, g, &psi.top, &mut Vec::new()) {
        Ok(top) => Ok(EmbeddingWitness {
            mode: if phi.mode == Mode::Strong && psi.mode == Mode::Strong {
                Mode::Strong
            } else {
                Mode::Weak
            },
            top,
        }),
        Err(ComposeError::Fail(e)) => Err(e),
        Err(ComposeError::Peel { .. }) => Err(Error::StructuralMismatch("unresolved tail split".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    fn star() -> Presentation {
        parse("(graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c)))))").unwrap().pres
    }

    fn shift(by: i64, stride: u64) -> EmbeddingWitness {
        let mut w = EmbeddingWitness::identity(&star(), Mode::Strong);
        w.top.classes[0][0].map.vertices.get_mut("l").unwrap().path[0].1 = Index::Affine {
            var: 0,
            offset: by,
            stride,
        };
        w
    }

    #[test]
    fn identity_images() {
        let w = EmbeddingWitness::identity(&star(), Mode::Weak);
        let loc = Location::new(vec![(0, 7)], "l");
        assert_eq!(w.image(&loc), Some(loc));
        assert!(w.check_structure(&star(), &star()).is_ok());
    }

    #[test]
    fn composition_of_shifts() {
        let a = shift(1, 2);
        let b = shift(3, 1);
        let c = compose(&a, &star(), &b).unwrap();
        for k in 0..5 {
            let loc = Location::new(vec![(0, k)], "l");
            assert_eq!(c.image(&loc), b.image(&a.image(&loc).unwrap()));
        }
    }

    #[test]
    fn composition_peels_exceptions() {
        // The second witness treats copies 0 and 1 separately.
        let a = shift(0, 1);
        let mut b = shift(5, 1);
        let map = b.top.classes[0][0].map.clone();
        let mut special = map.clone();
        special.vertices.get_mut("l").unwrap().path[0].1 = Index::Const(0);
        let mut special1 = map.clone();
        special1.vertices.get_mut("l").unwrap().path[0].1 = Index::Const(1);
        b.top.classes[0] = vec![
            Segment { copies: Copies::One(0), map: special },
            Segment { copies: Copies::One(1), map: special1 },
            Segment { copies: Copies::From(2), map },
        ];
        assert!(b.check_structure(&star(), &star()).is_ok());
        let c = compose(&a, &star(), &b).unwrap();
        assert_eq!(c.top.classes[0].len(), 3);
        for k in 0..6 {
            let loc = Location::new(vec![(0, k)], "l");
            assert_eq!(c.image(&loc), b.image(&a.image(&loc).unwrap()));
        }
    }

    #[test]
    fn structure_errors() {
        let finite = parse("(graph (vertices c) (class (mult 2) (graph (vertices l) (edges (l c)))))").unwrap().pres;
        let w = EmbeddingWitness::identity(&star(), Mode::Weak);
        assert!(w.check_structure(&star(), &finite).is_err());
        let mut gap = shift(0, 1);
        gap.top.classes[0][0].copies = Copies::From(1);
        assert!(gap.check_structure(&star(), &star()).is_err());
    }
}
