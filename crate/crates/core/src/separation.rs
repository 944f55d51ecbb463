//! Blocking of definite-status paths and d-/m-separation.

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphClass, NodeId, NodeSet, Path, Status, Step, triple_status};

/// Is `a` separated from `b` given `c`?
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationQuery {
    pub a: NodeSet,
    pub b: NodeSet,
    pub c: NodeSet,
}

impl SeparationQuery {
    pub fn new(a: NodeSet, b: NodeSet, c: NodeSet) -> Self {
        SeparationQuery { a, b, c }
    }

    fn validate(&self, g: &Graph) -> Result<()> {
        g.check(&self.a)?;
        g.check(&self.b)?;
        g.check(&self.c)?;
        for (l, r, what) in [(&self.a, &self.b, "a and b"), (&self.a, &self.c, "a and c"), (&self.b, &self.c, "b and c")] {
            if !l.is_disjoint(r) {
                return Err(Error::Overlap(format!("{what} share {}", g.fmt_set(&l.intersection(r)))));
            }
        }
        Ok(())
    }
}

/// A definite-status path is blocked by `c` if it has a non-collider in `c`
/// or a collider outside `an(c)`.
pub fn is_blocked(g: &Graph, p: &Path, c: &NodeSet) -> Result<bool> {
    g.check(c)?;
    if !g.is_definite_status(p) {
        return Err(Error::NotDefiniteStatus);
    }
    let an_c = g.reach(c.iter(), &[g.parents_table()], None);
    let nodes = p.nodes();
    for i in 1..nodes.len().saturating_sub(1) {
        let v = nodes[i];
        let blocked = match g.status_at(p, i) {
            Status::Collider => !an_c[v],
            Status::NonCollider => c.contains(v),
            Status::Indefinite => unreachable!("checked above"),
        };
        if blocked {
            return Ok(true);
        }
    }
    Ok(false)
}

/// True iff every definite-status path between `q.a` and `q.b` is blocked
/// by `q.c`.
///
/// DAGs and ADMGs use reachability over (node, arrowhead) states. PDAG
/// classes need the non-adjacency test on `--` triples, which depends on
/// the path, so they are answered by path search.
pub fn separated(g: &Graph, q: &SeparationQuery) -> Result<bool> {
    q.validate(g)?;
    if q.a.is_empty() || q.b.is_empty() {
        return Ok(true);
    }
    let n = g.n();
    match g.class() {
        GraphClass::Dag | GraphClass::Admg => {
            Ok(!m_connected(g, &q.a.to_mask(n), &q.b.to_mask(n), &q.c.to_mask(n), &|_, _| false))
        }
        _ => Ok(open_path(g, q)?.is_none()),
    }
}

/// One open definite-status path between `q.a` and `q.b`, if any.
pub fn open_path(g: &Graph, q: &SeparationQuery) -> Result<Option<Path>> {
    q.validate(g)?;
    let n = g.n();
    let a = q.a.to_mask(n);
    let b = q.b.to_mask(n);
    let interior: Vec<bool> = (0..n).map(|v| !a[v] && !b[v]).collect();
    Ok(search_open_paths(g, &q.a.to_vec(), &b, &interior, &q.c.to_mask(n), &mut |_, _| true))
}

/// Bayes-ball reachability for DAGs and ADMGs. Directed edges `u -> w` with
/// `skip(u, w)` are treated as absent, which is how the proper back-door
/// graph is formed without copying.
pub(crate) fn m_connected(g: &Graph, a: &[bool], b: &[bool], c: &[bool], skip: &dyn Fn(NodeId, NodeId) -> bool) -> bool {
    let n = g.n();
    // Ancestors of C in the graph with skipped edges removed.
    let mut an_c = c.to_vec();
    let mut stack: Vec<NodeId> = (0..n).filter(|&v| c[v]).collect();
    while let Some(v) = stack.pop() {
        for &u in g.parents_of(v) {
            if !an_c[u] && !skip(u, v) {
                an_c[u] = true;
                stack.push(u);
            }
        }
    }

    // State: (node, entered through an arrowhead). `None` marks a start.
    let mut visited = vec![[false; 2]; n];
    let mut stack: Vec<(NodeId, Option<bool>)> = (0..n).filter(|&v| a[v]).map(|v| (v, None)).collect();
    while let Some((v, head_in)) = stack.pop() {
        let mut moves: Vec<(NodeId, bool, bool)> = Vec::new();
        for &w in g.children_of(v) {
            if !skip(v, w) {
                moves.push((w, false, true));
            }
        }
        for &u in g.parents_of(v) {
            if !skip(u, v) {
                moves.push((u, true, false));
            }
        }
        for &w in g.spouses_of(v) {
            moves.push((w, true, true));
        }
        for (w, head_at_v, head_at_w) in moves {
            if let Some(head_in) = head_in {
                let pass = if head_in && head_at_v { an_c[v] } else { !c[v] };
                if !pass {
                    continue;
                }
            }
            if b[w] {
                return true;
            }
            let slot = &mut visited[w][head_at_w as usize];
            if !*slot {
                *slot = true;
                stack.push((w, Some(head_at_w)));
            }
        }
    }
    false
}

/// Depth-first search over simple paths from `starts` to nodes flagged in
/// `is_target`, pruning as soon as an interior node is blocked by `c` or has
/// indefinite status. Interior nodes must be flagged in `interior_ok`.
/// Complete open paths are offered to `accept`; the first accepted one is
/// returned. Paths continue through targets that are also allowed interiors.
pub(crate) fn search_open_paths(
    g: &Graph,
    starts: &[NodeId],
    is_target: &[bool],
    interior_ok: &[bool],
    c: &[bool],
    accept: &mut dyn FnMut(&[NodeId], &[Step]) -> bool,
) -> Option<Path> {
    let n = g.n();
    let an_c = g.reach((0..n).filter(|&v| c[v]), &[g.parents_table()], None);
    let mut search = Search { g, is_target, interior_ok, c, an_c, on_path: vec![false; n], nodes: Vec::new(), steps: Vec::new() };
    for &s in starts {
        search.nodes.clear();
        search.steps.clear();
        search.nodes.push(s);
        search.on_path[s] = true;
        if search.extend(accept) {
            return Some(Path::from_parts_unchecked(search.nodes, search.steps));
        }
        search.on_path[s] = false;
    }
    None
}

struct Search<'a> {
    g: &'a Graph,
    is_target: &'a [bool],
    interior_ok: &'a [bool],
    c: &'a [bool],
    an_c: Vec<bool>,
    on_path: Vec<bool>,
    nodes: Vec<NodeId>,
    steps: Vec<Step>,
}

impl Search<'_> {
    /// Returns true with `nodes`/`steps` holding the accepted path.
    fn extend(&mut self, accept: &mut dyn FnMut(&[NodeId], &[Step]) -> bool) -> bool {
        let g = self.g;
        let u = *self.nodes.last().expect("non-empty");
        let neighbours: Vec<(NodeId, Step)> = g
            .children_of(u)
            .iter()
            .chain(g.parents_of(u))
            .chain(g.siblings_of(u))
            .chain(g.spouses_of(u))
            .copied()
            .flat_map(|w| Step::between(g, u, w).map(move |s| (w, s)))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        for (w, step) in neighbours {
            if self.on_path[w] {
                continue;
            }
            if self.nodes.len() >= 2 {
                let prev = self.nodes[self.nodes.len() - 2];
                let left = *self.steps.last().expect("non-empty");
                let open = match triple_status(g, prev, left, w, step) {
                    Status::Collider => self.an_c[u],
                    Status::NonCollider => !self.c[u],
                    Status::Indefinite => false,
                };
                if !open {
                    continue;
                }
            }
            self.nodes.push(w);
            self.steps.push(step);
            if self.is_target[w] && accept(&self.nodes, &self.steps) {
                return true;
            }
            if self.interior_ok[w] {
                self.on_path[w] = true;
                let found = self.extend(accept);
                self.on_path[w] = false;
                if found {
                    return true;
                }
            }
            self.nodes.pop();
            self.steps.pop();
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    #[test]
    fn collider_opens_on_conditioning() {
        let mut b = GraphBuilder::new(GraphClass::Dag);
        b.directed("A", "B").unwrap().directed("C", "B").unwrap();
        let g = b.build().unwrap();
        let p = Path::parse(&g, "A -> B <- C").unwrap();
        assert!(is_blocked(&g, &p, &NodeSet::new()).unwrap());
        assert!(!is_blocked(&g, &p, &g.set(&["B"]).unwrap()).unwrap());
        let q = SeparationQuery::new(g.set(&["A"]).unwrap(), g.set(&["C"]).unwrap(), g.set(&["B"]).unwrap());
        assert!(!separated(&g, &q).unwrap());
        assert_eq!(open_path(&g, &q).unwrap().unwrap().display(&g).to_string(), "A -> B <- C");
    }

    #[test]
    fn overlapping_query_is_an_error() {
        let mut b = GraphBuilder::new(GraphClass::Dag);
        b.directed("A", "B").unwrap();
        let g = b.build().unwrap();
        let a = g.set(&["A"]).unwrap();
        assert!(separated(&g, &SeparationQuery::new(a.clone(), a.clone(), NodeSet::new())).is_err());
    }
}
