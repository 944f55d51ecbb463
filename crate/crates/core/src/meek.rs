//! Meek's orientation rules, background knowledge, CPDAG construction and
//! enumeration of the DAGs a CPDAG or maxPDAG represents.

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphClass, NodeId, BI, IN, OUT, UND};

/// Orientations to impose on a CPDAG or maxPDAG.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BackgroundKnowledge {
    required: Vec<(NodeId, NodeId)>,
}

impl BackgroundKnowledge {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        BackgroundKnowledge { required: pairs.into_iter().collect() }
    }

    /// Requires `tail -> head`.
    pub fn require(&mut self, tail: NodeId, head: NodeId) -> &mut Self {
        self.required.push((tail, head));
        self
    }

    /// Parses `A->B` items separated by commas.
    pub fn parse(g: &Graph, text: &str) -> Result<Self> {
        let mut bg = BackgroundKnowledge::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (t, h) = item
                .split_once("->")
                .ok_or_else(|| Error::BadBackground(format!("expected `A->B`, got `{item}`")))?;
            bg.require(g.id(t.trim())?, g.id(h.trim())?);
        }
        Ok(bg)
    }

    pub fn pairs(&self) -> &[(NodeId, NodeId)] {
        &self.required
    }

    pub fn is_empty(&self) -> bool {
        self.required.is_empty()
    }

    fn validate(&self, g: &Graph) -> Result<()> {
        for (i, &(t, h)) in self.required.iter().enumerate() {
            g.check_node(t)?;
            g.check_node(h)?;
            if t == h || !g.is_adjacent(t, h) {
                return Err(Error::BadBackground(format!("`{}` and `{}` are not adjacent", g.name(t), g.name(h))));
            }
            if self.required[..i].contains(&(h, t)) {
                return Err(Error::BadBackground(format!(
                    "both orientations of {} -- {} requested",
                    g.name(t),
                    g.name(h)
                )));
            }
        }
        Ok(())
    }
}

/// Mutable copy of a PDAG's marks with its fixed skeleton.
struct Work {
    n: usize,
    m: Vec<u8>,
    adj: Vec<Vec<NodeId>>,
}

impl Work {
    fn new(g: &Graph) -> Work {
        let n = g.n();
        let m = g.marks().to_vec();
        let adj = (0..n).map(|a| (0..n).filter(|&b| m[a * n + b] != 0).collect()).collect();
        Work { n, m, adj }
    }

    #[inline]
    fn und(&self, a: NodeId, b: NodeId) -> bool {
        self.m[a * self.n + b] & UND != 0
    }

    #[inline]
    fn dir(&self, a: NodeId, b: NodeId) -> bool {
        self.m[a * self.n + b] & OUT != 0
    }

    #[inline]
    fn adj(&self, a: NodeId, b: NodeId) -> bool {
        self.m[a * self.n + b] != 0
    }

    fn orient(&mut self, a: NodeId, b: NodeId) {
        self.m[a * self.n + b] = OUT;
        self.m[b * self.n + a] = IN;
    }

    /// The first of Rules 1-4 that orients the undirected edge `a -- b` as
    /// `a -> b`.
    fn forced(&self, a: NodeId, b: NodeId) -> Option<u8> {
        let adj = &self.adj[a];
        // Rule 1: c -> a -- b, c and b non-adjacent.
        if adj.iter().any(|&c| self.dir(c, a) && !self.adj(c, b)) {
            return Some(1);
        }
        // Rule 2: a -> c -> b.
        if adj.iter().any(|&c| self.dir(a, c) && self.dir(c, b)) {
            return Some(2);
        }
        // Rule 3: a -- c -> b and a -- d -> b, c and d non-adjacent.
        let kites: Vec<NodeId> = adj.iter().copied().filter(|&c| self.und(a, c) && self.dir(c, b)).collect();
        for (i, &c) in kites.iter().enumerate() {
            if kites[i + 1..].iter().any(|&d| !self.adj(c, d)) {
                return Some(3);
            }
        }
        // Rule 4: a -- c -> d -> b with a -- d, c and b non-adjacent.
        for &c in adj {
            if !self.und(a, c) || self.adj(c, b) {
                continue;
            }
            if self.adj[c].iter().any(|&d| self.dir(c, d) && self.dir(d, b) && self.und(a, d)) {
                return Some(4);
            }
        }
        None
    }

    /// Applies the rules until a full pass orients nothing.
    fn close(&mut self) {
        loop {
            let mut changed = false;
            for a in 0..self.n {
                for i in 0..self.adj[a].len() {
                    let b = self.adj[a][i];
                    if self.und(a, b) && self.forced(a, b).is_some() {
                        self.orient(a, b);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn first_forced(&self) -> Option<(u8, NodeId, NodeId)> {
        for a in 0..self.n {
            for &b in &self.adj[a] {
                if self.und(a, b) {
                    if let Some(rule) = self.forced(a, b) {
                        return Some((rule, a, b));
                    }
                }
            }
        }
        None
    }

    /// A v-structure `a -> b <- c` in the working marks that `orig` lacks.
    fn new_vstructure(&self, orig: &Graph) -> Option<(NodeId, NodeId, NodeId)> {
        for b in 0..self.n {
            let pa: Vec<NodeId> = self.adj[b].iter().copied().filter(|&a| self.dir(a, b)).collect();
            for (i, &a) in pa.iter().enumerate() {
                for &c in &pa[i + 1..] {
                    if !self.adj(a, c) && !(orig.has_directed(a, b) && orig.has_directed(c, b)) {
                        return Some((a, b, c));
                    }
                }
            }
        }
        None
    }

    fn has_undirected(&self) -> bool {
        self.m.iter().any(|&x| x & UND != 0)
    }

    /// Is there a directed path from `from` to `to`?
    fn directed_path(&self, from: NodeId, to: NodeId) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            if u == to {
                return true;
            }
            for &w in &self.adj[u] {
                if !seen[w] && self.dir(u, w) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }
}

fn require_pdag(g: &Graph) -> Result<()> {
    match g.class() {
        GraphClass::Dag | GraphClass::Cpdag | GraphClass::MaxPdag => Ok(()),
        other => Err(Error::WrongClass { expected: "cpdag or maxpdag", found: other.as_str() }),
    }
}

fn vstructure_error(g: &Graph, (a, b, c): (NodeId, NodeId, NodeId)) -> Error {
    Error::Inconsistent(format!("new v-structure {} -> {} <- {}", g.name(a), g.name(b), g.name(c)))
}

/// Fails with the first rule that would still orient an edge.
pub fn check_closed(g: &Graph) -> Result<()> {
    require_pdag(g)?;
    match Work::new(g).first_forced() {
        Some((rule, a, b)) => Err(Error::NotClosed { rule, edge: format!("{} -> {}", g.name(a), g.name(b)) }),
        None => Ok(()),
    }
}

/// Applies Meek's Rules 1-4 to a fixpoint.
///
/// The result keeps the class of `g` when nothing changes and is a maxPDAG
/// otherwise. Inputs whose closure would create a cycle or a new
/// v-structure are rejected.
pub fn close_under_meek(g: &Graph) -> Result<Graph> {
    require_pdag(g)?;
    let mut w = Work::new(g);
    w.close();
    if w.m == g.marks() {
        return Ok(g.clone());
    }
    if let Some(v) = w.new_vstructure(g) {
        return Err(vstructure_error(g, v));
    }
    g.with_marks(GraphClass::MaxPdag, w.m)
        .map_err(|e| Error::Inconsistent(e.to_string()))
}

/// Imposes `bg` one orientation at a time, closing under Meek's rules after
/// each. Returns `None` when the orientations contradict the graph, that is
/// when they would create a new v-structure or a directed cycle.
pub fn construct_max_pdag(g: &Graph, bg: &BackgroundKnowledge) -> Result<Option<Graph>> {
    require_pdag(g)?;
    bg.validate(g)?;
    let mut w = Work::new(g);
    for &(t, h) in bg.pairs() {
        if w.dir(h, t) {
            return Ok(None);
        }
        if w.und(t, h) {
            w.orient(t, h);
            w.close();
        }
    }
    if w.new_vstructure(g).is_some() {
        return Ok(None);
    }
    let class = if g.class() == GraphClass::Dag { GraphClass::Dag } else { GraphClass::MaxPdag };
    match g.with_marks(class, w.m) {
        Ok(out) => Ok(Some(out)),
        Err(Error::Cycle(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// The CPDAG of a DAG by compelled-edge labelling.
///
/// Edges are ordered by the topological position of their head, then by
/// descending position of their tail. Each edge in that order is labelled
/// compelled or reversible from the labels of the edges into its tail.
pub fn dag_to_cpdag(d: &Graph) -> Result<Graph> {
    if d.class() != GraphClass::Dag {
        return Err(Error::WrongClass { expected: "dag", found: d.class().as_str() });
    }
    let n = d.n();
    let order = d.topological_order()?;
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut edges = Vec::new();
    for &y in &order {
        let mut pa = d.parents_of(y).to_vec();
        pa.sort_by_key(|&x| std::cmp::Reverse(pos[x]));
        edges.extend(pa.into_iter().map(|x| (x, y)));
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Label {
        Unknown,
        Compelled,
        Reversible,
    }
    let mut label = vec![Label::Unknown; n * n];
    let idx = |x: NodeId, y: NodeId| x * n + y;

    for &(x, y) in &edges {
        if label[idx(x, y)] != Label::Unknown {
            continue;
        }
        let mut done = false;
        for &w in d.parents_of(x) {
            if label[idx(w, x)] != Label::Compelled {
                continue;
            }
            if !d.has_directed(w, y) {
                for &p in d.parents_of(y) {
                    label[idx(p, y)] = Label::Compelled;
                }
                done = true;
                break;
            }
            label[idx(w, y)] = Label::Compelled;
        }
        if done {
            continue;
        }
        let compelled = d.parents_of(y).iter().any(|&z| z != x && !d.has_directed(z, x));
        let l = if compelled { Label::Compelled } else { Label::Reversible };
        for &p in d.parents_of(y) {
            if label[idx(p, y)] == Label::Unknown {
                label[idx(p, y)] = l;
            }
        }
    }

    let mut marks = d.marks().to_vec();
    for &(x, y) in &edges {
        if label[idx(x, y)] == Label::Reversible {
            marks[idx(x, y)] = UND;
            marks[idx(y, x)] = UND;
        }
    }
    d.with_marks(GraphClass::Cpdag, marks)
}

/// Largest number of undirected edges [`enumerate_class_dags`] accepts.
pub const ENUMERATION_LIMIT: usize = 20;

/// Every DAG represented by a CPDAG or maxPDAG: all acyclic orientations of
/// the undirected edges that add no v-structure. Sorted by edge marks.
pub fn enumerate_class_dags(g: &Graph) -> Result<Vec<Graph>> {
    require_pdag(g)?;
    let und: Vec<(NodeId, NodeId)> =
        g.edges().into_iter().filter(|e| e.kind == crate::graph::EdgeKind::Undirected).map(|e| (e.from, e.to)).collect();
    if und.len() > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(und.len(), ENUMERATION_LIMIT));
    }
    let mut w = Work::new(g);
    let mut out = Vec::new();
    enumerate_rec(&mut w, &und, 0, &mut out);
    out.sort();
    out.into_iter().map(|m| g.with_marks(GraphClass::Dag, m)).collect()
}

fn enumerate_rec(w: &mut Work, und: &[(NodeId, NodeId)], i: usize, out: &mut Vec<Vec<u8>>) {
    let Some(&(a, b)) = und.get(i) else {
        out.push(w.m.clone());
        return;
    };
    for (t, h) in [(a, b), (b, a)] {
        if w.directed_path(h, t) {
            continue;
        }
        let no_new_collider = w.adj[h].iter().all(|&c| c == t || !w.dir(c, h) || w.adj(c, t));
        if !no_new_collider {
            continue;
        }
        let saved = (w.m[t * w.n + h], w.m[h * w.n + t]);
        w.orient(t, h);
        enumerate_rec(w, und, i + 1, out);
        w.m[t * w.n + h] = saved.0;
        w.m[h * w.n + t] = saved.1;
    }
}

/// One DAG in the class of `g`.
///
/// Undirected edges are taken in lexicographic order of their endpoint
/// names and oriented from the smaller name to the larger, with Meek
/// closure after each step. On a valid maxPDAG any single orientation is
/// consistent, so the first choice always survives.
pub fn consistent_extension(g: &Graph) -> Result<Graph> {
    require_pdag(g)?;
    if g.class() == GraphClass::Dag {
        return Ok(g.clone());
    }
    let n = g.n();
    let mut rank: Vec<NodeId> = (0..n).collect();
    rank.sort_by(|&a, &b| g.name(a).cmp(g.name(b)));
    let mut w = Work::new(g);
    while w.has_undirected() {
        let mut pick = None;
        'outer: for (ia, &a) in rank.iter().enumerate() {
            for &b in &rank[ia + 1..] {
                if w.und(a, b) {
                    pick = Some((a, b));
                    break 'outer;
                }
            }
        }
        let (a, b) = pick.expect("an undirected edge exists");
        w.orient(a, b);
        w.close();
    }
    if let Some(v) = w.new_vstructure(g) {
        return Err(vstructure_error(g, v));
    }
    debug_assert!(w.m.iter().all(|&x| x & BI == 0));
    g.with_marks(GraphClass::Dag, w.m).map_err(|e| Error::Inconsistent(e.to_string()))
}
