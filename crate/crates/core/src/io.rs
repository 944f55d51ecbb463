//! Text formats: the edge-list graph format and dataset CSV.
//!
//! ```text
//! class: cpdag
//! # comment
//! A -> B
//! B -- C
//! node: D
//! ```
//!
//! Edges are `A -> B`, `A <- B`, `A -- B` or `A <-> B`. The `class:` line
//! is required; `node:` lines declare isolated nodes. Node order is order of
//! first appearance.

use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, Graph, GraphBuilder, GraphClass};
use crate::meek;
use crate::scalar::Scalar;
use crate::scm::Dataset;

/// Parses and validates a graph. CPDAG and maxPDAG inputs must be closed
/// under Meek's rules; CPDAG inputs must also equal the CPDAG of the DAGs
/// they represent.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut class: Option<GraphClass> = None;
    let mut items: Vec<(usize, Item)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        if let Some(rest) = line.strip_prefix("class:") {
            if class.is_some() {
                return Err(err("duplicate class line".into()));
            }
            class = Some(rest.parse().map_err(|e: Error| err(e.to_string()))?);
        } else if let Some(rest) = line.strip_prefix("node:") {
            let name = rest.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(err(format!("bad node line `{line}`")));
            }
            items.push((line_no, Item::Node(name.to_string())));
        } else {
            let (a, kind, b, flipped) = split_edge(line).ok_or_else(|| err(format!("cannot read `{line}`")))?;
            items.push((line_no, Item::Edge(a, kind, b, flipped)));
        }
    }
    let class = class.ok_or(Error::Parse { line: 0, msg: "missing `class:` line".into() })?;

    let mut b = GraphBuilder::new(class);
    let mut pairs = HashSet::new();
    for (line, item) in items {
        let err = |e: Error| Error::Parse { line, msg: e.to_string() };
        match item {
            Item::Node(name) => {
                b.node(&name).map_err(err)?;
            }
            Item::Edge(from, kind, to, flipped) => {
                if from == to {
                    return Err(Error::Parse { line, msg: format!("self-loop at `{from}`") });
                }
                let key = if from < to { (from.clone(), to.clone()) } else { (to.clone(), from.clone()) };
                let slot = if kind == EdgeKind::Bidirected { 1 } else { 0 };
                if !pairs.insert((key, slot)) {
                    return Err(Error::Parse { line, msg: format!("second edge between `{from}` and `{to}`") });
                }
                // Register nodes in the order they are written.
                let (first, second) = if flipped { (&to, &from) } else { (&from, &to) };
                b.node(first).map_err(err)?;
                b.node(second).map_err(err)?;
                b.edge(&from, &to, kind).map_err(err)?;
            }
        }
    }
    let g = b.build()?;
    if class.is_pdag() {
        meek::check_closed(&g)?;
    }
    if class == GraphClass::Cpdag {
        let cp = meek::dag_to_cpdag(&meek::consistent_extension(&g)?)?;
        if !cp.same_as(&g) {
            let diff = g
                .edges()
                .into_iter()
                .find(|e| cp.mark(e.from, e.to) != g.mark(e.from, e.to))
                .map(|e| format!("edge {} {} {} differs from the class CPDAG", g.name(e.from), e.kind.symbol(), g.name(e.to)))
                .unwrap_or_else(|| "edges differ from the class CPDAG".into());
            return Err(Error::NotCpdag(diff));
        }
    }
    Ok(g)
}

enum Item {
    Node(String),
    Edge(String, EdgeKind, String, bool),
}

fn split_edge(line: &str) -> Option<(String, EdgeKind, String, bool)> {
    for (op, kind, flip) in [
        ("<->", EdgeKind::Bidirected, false),
        ("->", EdgeKind::Directed, false),
        ("<-", EdgeKind::Directed, true),
        ("--", EdgeKind::Undirected, false),
    ] {
        if let Some((l, r)) = line.split_once(op) {
            let (l, r) = (l.trim(), r.trim());
            if l.is_empty() || r.is_empty() || l.contains(char::is_whitespace) || r.contains(char::is_whitespace) {
                return None;
            }
            return Some(if flip { (r.into(), kind, l.into(), true) } else { (l.into(), kind, r.into(), false) });
        }
    }
    None
}

/// Canonical edge-list text; `parse_graph` reads it back to an equal graph.
pub fn format_graph(g: &Graph) -> String {
    let mut out = format!("class: {}\n", g.class());
    for v in 0..g.n() {
        let isolated = g.parents_of(v).is_empty()
            && g.children_of(v).is_empty()
            && g.siblings_of(v).is_empty()
            && g.spouses_of(v).is_empty();
        if isolated {
            let _ = writeln!(out, "node: {}", g.name(v));
        }
    }
    for e in g.edges() {
        let _ = writeln!(out, "{} {} {}", g.name(e.from), e.kind.symbol(), g.name(e.to));
    }
    out
}

impl std::fmt::Display for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_graph(self))
    }
}

/// Reads a dataset: a header of node names, then numeric rows.
pub fn read_dataset<T: Scalar>(reader: impl std::io::Read) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let names: Vec<String> = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.iter().map(str::to_string).collect();
    let p = names.len();
    let mut values: Vec<T> = Vec::new();
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        if rec.len() != p {
            return Err(Error::Csv(format!("row {} has {} fields, expected {p}", i + 1, rec.len())));
        }
        for field in rec.iter() {
            let x: f64 = field.parse().map_err(|_| Error::Csv(format!("row {}: `{field}` is not a number", i + 1)))?;
            values.push(T::of(x));
        }
        n += 1;
    }
    Dataset::new(names, DMatrix::from_row_slice(n, p, &values))
}

/// Writes a dataset with 17 significant digits per value.
pub fn write_dataset<T: Scalar>(data: &Dataset<T>, writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(data.names()).map_err(csv_err)?;
    let values = data.values();
    for i in 0..data.n() {
        w.write_record((0..data.p()).map(|j| format!("{:.16e}", values[(i, j)].f64()))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_dag() {
        let g = parse_graph("class: dag\nA -> B").unwrap();
        assert_eq!(g.n(), 2);
        assert!(g.has_directed(0, 1));
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_graph("class: dag\nA -> B\nB => C").unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, msg: "cannot read `B => C`".into() });
        assert!(matches!(parse_graph("A -> B"), Err(Error::Parse { line: 0, .. })));
    }

    #[test]
    fn rejects_unclosed_cpdag() {
        let err = parse_graph("class: cpdag\nA -> B\nB -- C").unwrap_err();
        assert!(matches!(err, Error::NotClosed { rule: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_incomplete_cpdag() {
        // Closed under Meek's rules but A -> B is reversible.
        let err = parse_graph("class: cpdag\nA -> B").unwrap_err();
        assert!(matches!(err, Error::NotCpdag(_)), "{err}");
        assert!(parse_graph("class: maxpdag\nA -> B").is_ok());
    }

    #[test]
    fn comments_isolated_nodes_and_reverse_arrows() {
        let g = parse_graph("class: dag # header\n# only a comment\nnode: Z\nB <- A\n").unwrap();
        assert_eq!(g.names(), &["Z".to_string(), "B".into(), "A".into()]);
        assert!(g.has_directed(g.id("A").unwrap(), g.id("B").unwrap()));
        assert_eq!(format_graph(&g), "class: dag\nnode: Z\nA -> B\n");
    }
}
