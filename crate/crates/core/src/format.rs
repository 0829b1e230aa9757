//! Textual format: parenthesized expressions with `;` line comments.
//!
//! ```text
//! tuple   := "(tuple" "(x" name* ")" graph ")"
//! graph   := "(graph" "(vertices" name* ")" ["(edges" pair* ")"] class* ")"
//! class   := "(class" "(mult" (nat | "w") ")" graph ")"
//! pair    := "(" name name ")"
//! ```
//!
//! A bare `graph` is accepted as a tuple with an empty distinguished set.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::presentation::{ComponentClass, Edge, GraphTuple, Multiplicity, Presentation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom { text: String, line: usize, column: usize },
    List { items: Vec<Sexp>, line: usize, column: usize },
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom { line, column, .. } | Sexp::List { line, column, .. } => (*line, *column),
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let (line, column) = self.pos();
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }

    /// A list whose head is the atom `head`; returns the remaining items.
    fn tagged(&self, head: &str) -> Result<&[Sexp]> {
        match self.list() {
            Some([first, rest @ ..]) if first.atom() == Some(head) => Ok(rest),
            _ => Err(self.error(format!("expected ({head} ...)"))),
        }
    }

    fn head(&self) -> Option<&str> {
        self.list().and_then(|items| items.first()).and_then(Sexp::atom)
    }
}

/// Reads every top-level expression in `text`.
pub fn read_sexps(text: &str) -> Result<Vec<Sexp>> {
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut top = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                stack.push((Vec::new(), line, column));
                column += 1;
            }
            ')' => {
                chars.next();
                let (items, l, c) = stack.pop().ok_or(Error::Syntax {
                    line,
                    column,
                    message: "unbalanced `)`".into(),
                })?;
                column += 1;
                let node = Sexp::List {
                    items,
                    line: l,
                    column: c,
                };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(node),
                    None => top.push(node),
                }
            }
            _ => {
                let (l, c) = (line, column);
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    text.push(c);
                    chars.next();
                    column += 1;
                }
                let node = Sexp::Atom {
                    text,
                    line: l,
                    column: c,
                };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(node),
                    None => top.push(node),
                }
            }
        }
    }
    if let Some((_, l, c)) = stack.pop() {
        return Err(Error::Syntax {
            line: l,
            column: c,
            message: "unclosed `(`".into(),
        });
    }
    Ok(top)
}

fn name_atom(s: &Sexp) -> Result<String> {
    match s.atom() {
        Some(text) if crate::presentation::is_valid_name(text) => Ok(text.to_string()),
        Some(text) => Err(s.error(format!("invalid name `{text}`"))),
        None => Err(s.error("expected a name")),
    }
}

fn parse_graph(s: &Sexp) -> Result<Presentation> {
    let items = s.tagged("graph")?;
    let mut iter = items.iter().peekable();
    let vertices_node = iter
        .next()
        .ok_or_else(|| s.error("graph needs a (vertices ...) list"))?;
    let vertices = vertices_node
        .tagged("vertices")?
        .iter()
        .map(name_atom)
        .collect::<Result<Vec<_>>>()?;
    let mut edges = BTreeSet::new();
    if iter.peek().and_then(|n| n.head()) == Some("edges") {
        let node = iter.next().expect("peeked");
        for pair in node.tagged("edges")? {
            match pair.list() {
                Some([a, b]) => {
                    let edge = Edge::new(name_atom(a)?, name_atom(b)?);
                    if !edges.insert(edge.clone()) {
                        return Err(Error::ParallelEdge(edge.0, edge.1));
                    }
                }
                _ => return Err(pair.error("edge must be a pair (a b)")),
            }
        }
    }
    let mut classes = Vec::new();
    for node in iter {
        let rest = node.tagged("class")?;
        let [mult_node, child] = rest else {
            return Err(node.error("class needs (mult ...) and a graph"));
        };
        let mult = match mult_node.tagged("mult")? {
            [m] => match m.atom() {
                Some("w") => Multiplicity::Omega,
                Some(text) => match text.parse::<u64>() {
                    Ok(0) => return Err(Error::ZeroMultiplicity),
                    Ok(n) => Multiplicity::Finite(n),
                    Err(_) => return Err(m.error(format!("bad multiplicity `{text}`"))),
                },
                None => return Err(m.error("bad multiplicity")),
            },
            _ => return Err(mult_node.error("mult takes one value")),
        };
        classes.push(ComponentClass {
            mult,
            child: parse_graph(child)?,
        });
    }
    Ok(Presentation {
        vertices,
        edges,
        classes,
    })
}

fn tuple_from_sexp(s: &Sexp) -> Result<GraphTuple> {
    let tuple = match s.head() {
        Some("graph") => GraphTuple::graph(parse_graph(s)?),
        Some("tuple") => {
            let items = s.tagged("tuple")?;
            let [x_node, graph] = items else {
                return Err(s.error("tuple needs (x ...) and a graph"));
            };
            let x = x_node
                .tagged("x")?
                .iter()
                .map(name_atom)
                .collect::<Result<BTreeSet<_>>>()?;
            GraphTuple {
                x,
                pres: parse_graph(graph)?,
            }
        }
        _ => return Err(s.error("expected (tuple ...) or (graph ...)")),
    };
    tuple.validate()?;
    Ok(tuple)
}

/// Parses exactly one tuple (or bare graph) from `text`.
pub fn parse(text: &str) -> Result<GraphTuple> {
    let exprs = read_sexps(text)?;
    match exprs.as_slice() {
        [one] => tuple_from_sexp(one),
        [] => Err(Error::Syntax {
            line: 1,
            column: 1,
            message: "empty input".into(),
        }),
        [_, second, ..] => Err(second.error("expected a single tuple")),
    }
}

fn write_graph(p: &Presentation, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    let _ = write!(out, "{pad}(graph (vertices");
    for v in &p.vertices {
        let _ = write!(out, " {v}");
    }
    out.push(')');
    if !p.edges.is_empty() {
        out.push_str(" (edges");
        for e in &p.edges {
            let _ = write!(out, " ({} {})", e.0, e.1);
        }
        out.push(')');
    }
    for class in &p.classes {
        let _ = write!(out, "\n{pad}  (class (mult {})\n", class.mult);
        write_graph(&class.child, indent + 2, out);
        out.push(')');
    }
    out.push(')');
}

pub fn serialize_graph(p: &Presentation) -> String {
    let mut out = String::new();
    write_graph(p, 0, &mut out);
    out
}

pub fn serialize(t: &GraphTuple) -> String {
    let mut out = String::from("(tuple (x");
    for v in &t.x {
        let _ = write!(out, " {v}");
    }
    out.push_str(")\n");
    write_graph(&t.pres, 1, &mut out);
    out.push_str(")\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_infinite_star() {
        let t = parse("(tuple (x) (graph (vertices c) (class (mult w) (graph (vertices l) (edges (l c))))))").unwrap();
        assert!(t.x.is_empty());
        assert_eq!(t.pres.vertices, vec!["c"]);
        assert_eq!(t.pres.classes[0].mult, Multiplicity::Omega);
        assert_eq!(t.pres.classes[0].child.edges.iter().next(), Some(&Edge::new("c", "l")));
    }

    #[test]
    fn parses_k2_infinity() {
        let t = parse("(tuple (x) (graph (vertices a b) (class (mult w) (graph (vertices u) (edges (u a) (u b))))))").unwrap();
        assert_eq!(t.pres.vertices, vec!["a", "b"]);
        assert_eq!(t.pres.classes[0].child.edges.len(), 2);
    }

    #[test]
    fn reports_unbound_names() {
        assert_eq!(
            parse("(graph (vertices a) (edges (a zzz)))"),
            Err(Error::UnboundName("zzz".into()))
        );
    }

    #[test]
    fn reports_positions_and_bad_input() {
        match parse("(tuple (x)\n  (graph (vertices 1a)))") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 20)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("(graph (vertices a)"), Err(Error::Syntax { .. })));
        assert_eq!(
            parse("(graph (vertices a) (class (mult 0) (graph (vertices b))))"),
            Err(Error::ZeroMultiplicity)
        );
        assert_eq!(
            parse("(graph (vertices a a))"),
            Err(Error::DuplicateName("a".into()))
        );
        assert!(matches!(
            parse("(graph (vertices a) (class (mult 1) (graph (vertices a))))"),
            Err(Error::DuplicateName(_))
        ));
    }

    #[test]
    fn comments_are_skipped() {
        let t = parse("; a star\n(graph (vertices c) ; centre\n (class (mult 3) (graph (vertices l) (edges (l c)))))").unwrap();
        assert_eq!(t.pres.cardinality(), Multiplicity::Finite(4));
    }

    #[test]
    fn serialization_reparses() {
        let text = "(tuple (x a) (graph (vertices a b) (edges (a b)) (class (mult w) (graph (vertices u v) (edges (u a) (u v) (v b)) (class (mult 2) (graph (vertices z) (edges (z u))))))))";
        let t = parse(text).unwrap();
        assert_eq!(parse(&serialize(&t)).unwrap(), t);
    }
}
