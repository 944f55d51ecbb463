//! Mixed graphs over named nodes and the structural queries on them.
//!
//! A [`Graph`] is immutable. Every unordered node pair has one mark byte per
//! direction, so an ADMG pair can carry a directed and a bidirected edge at
//! once. Adjacency lists are derived from the marks when the graph is built.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Dense node index, valid for the graph that produced it.
pub type NodeId = usize;

// Mark bits stored at `marks[i * n + j]`, read from the point of view of `i`.
pub(crate) const OUT: u8 = 1;
pub(crate) const IN: u8 = 2;
pub(crate) const UND: u8 = 4;
pub(crate) const BI: u8 = 8;
const SIMPLE: u8 = OUT | IN | UND;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GraphClass {
    Dag,
    Cpdag,
    MaxPdag,
    Admg,
    /// Directed, undirected and bidirected edges together. Only produced by
    /// the forbidden projection of a maxPDAG when no adjustment set exists.
    Mixed,
}

impl GraphClass {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphClass::Dag => "dag",
            GraphClass::Cpdag => "cpdag",
            GraphClass::MaxPdag => "maxpdag",
            GraphClass::Admg => "admg",
            GraphClass::Mixed => "mixed",
        }
    }

    /// CPDAG or maxPDAG.
    pub fn is_pdag(self) -> bool {
        matches!(self, GraphClass::Cpdag | GraphClass::MaxPdag)
    }

    fn allows(self, kind: EdgeKind) -> bool {
        match kind {
            EdgeKind::Directed => true,
            EdgeKind::Undirected => !matches!(self, GraphClass::Dag | GraphClass::Admg),
            EdgeKind::Bidirected => matches!(self, GraphClass::Admg | GraphClass::Mixed),
        }
    }
}

impl fmt::Display for GraphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dag" => Ok(GraphClass::Dag),
            "cpdag" => Ok(GraphClass::Cpdag),
            "maxpdag" => Ok(GraphClass::MaxPdag),
            "admg" => Ok(GraphClass::Admg),
            "mixed" => Ok(GraphClass::Mixed),
            other => Err(Error::InvalidParameter(format!("unknown graph class `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Directed,
    Undirected,
    Bidirected,
}

impl EdgeKind {
    pub fn symbol(self) -> &'static str {
        match self {
            EdgeKind::Directed => "->",
            EdgeKind::Undirected => "--",
            EdgeKind::Bidirected => "<->",
        }
    }
}

/// An edge. Directed edges point `from -> to`; for the symmetric kinds
/// `from < to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
}

/// Ordered, duplicate-free set of node indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(BTreeSet<NodeId>);

impl NodeSet {
    pub fn new() -> Self {
        NodeSet(BTreeSet::new())
    }

    pub fn singleton(v: NodeId) -> Self {
        NodeSet(BTreeSet::from([v]))
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }

    pub fn to_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &v in &self.0 {
            if v < n {
                mask[v] = true;
            }
        }
        mask
    }

    pub fn insert(&mut self, v: NodeId) -> bool {
        self.0.insert(v)
    }

    pub fn remove(&mut self, v: NodeId) -> bool {
        self.0.remove(&v)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn first(&self) -> Option<NodeId> {
        self.0.first().copied()
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.union(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.intersection(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn to_vec(&self) -> Vec<NodeId> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        NodeSet(iter.into_iter().collect())
    }
}

impl IntoIterator for NodeSet {
    type Item = NodeId;
    type IntoIter = std::collections::btree_set::IntoIter<NodeId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a NodeSet {
    type Item = NodeId;
    type IntoIter = std::iter::Copied<std::collections::btree_set::Iter<'a, NodeId>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

impl Extend<NodeId> for NodeSet {
    fn extend<I: IntoIterator<Item = NodeId>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

#[derive(Debug, PartialEq, Eq)]
pub(crate) struct Names {
    list: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl Names {
    pub(crate) fn new(list: Vec<String>) -> Result<Arc<Names>> {
        let mut index = HashMap::with_capacity(list.len());
        for (i, name) in list.iter().enumerate() {
            check_name(name)?;
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        Ok(Arc::new(Names { list, index }))
    }
}

fn check_name(name: &str) -> Result<()> {
    let bad = name.is_empty()
        || name.chars().any(|c| c.is_whitespace() || matches!(c, ',' | '#' | ';'))
        || name.contains("->")
        || name.contains("<-")
        || name.contains("--")
        || name.ends_with(':');
    if bad {
        Err(Error::InvalidName(name.to_string()))
    } else {
        Ok(())
    }
}

/// A graph over named nodes with a class tag.
#[derive(Clone)]
pub struct Graph {
    class: GraphClass,
    names: Arc<Names>,
    marks: Vec<u8>,
    pa: Vec<Vec<NodeId>>,
    ch: Vec<Vec<NodeId>>,
    sib: Vec<Vec<NodeId>>,
    sp: Vec<Vec<NodeId>>,
    chain: bool,
}

impl Graph {
    /// Builds a graph from raw marks, enforcing the class invariants except
    /// Meek closure (see [`crate::meek::check_closed`]).
    pub(crate) fn from_marks(class: GraphClass, names: Arc<Names>, marks: Vec<u8>) -> Result<Graph> {
        let n = names.list.len();
        debug_assert_eq!(marks.len(), n * n);
        let name = |v: NodeId| names.list[v].clone();
        let mut pa = vec![Vec::new(); n];
        let mut ch = vec![Vec::new(); n];
        let mut sib = vec![Vec::new(); n];
        let mut sp = vec![Vec::new(); n];
        for i in 0..n {
            if marks[i * n + i] != 0 {
                return Err(Error::SelfLoop(name(i)));
            }
            for j in 0..n {
                let m = marks[i * n + j];
                if m == 0 {
                    continue;
                }
                let mirror = marks[j * n + i];
                let expect = (if m & OUT != 0 { IN } else { 0 })
                    | (if m & IN != 0 { OUT } else { 0 })
                    | (m & (UND | BI));
                if mirror != expect || (m & SIMPLE).count_ones() > 1 {
                    return Err(Error::ConflictingEdges(name(i), name(j)));
                }
                let kinds = [(OUT, EdgeKind::Directed), (UND, EdgeKind::Undirected), (BI, EdgeKind::Bidirected)];
                for (bit, kind) in kinds {
                    if m & bit != 0 && !class.allows(kind) {
                        return Err(Error::EdgeNotAllowed {
                            edge: format!("{} {} {}", name(i), kind.symbol(), name(j)),
                            class: class.as_str(),
                        });
                    }
                }
                if m & BI != 0 && m & UND != 0 && class != GraphClass::Mixed {
                    return Err(Error::ConflictingEdges(name(i), name(j)));
                }
                if m & OUT != 0 {
                    ch[i].push(j);
                }
                if m & IN != 0 {
                    pa[i].push(j);
                }
                if m & UND != 0 {
                    sib[i].push(j);
                }
                if m & BI != 0 {
                    sp[i].push(j);
                }
            }
        }
        let mut g = Graph { class, names, marks, pa, ch, sib, sp, chain: false };
        g.topological_order()?;
        g.chain = g.compute_chain();
        Ok(g)
    }

    /// Same nodes as `self`, new marks and class.
    pub(crate) fn with_marks(&self, class: GraphClass, marks: Vec<u8>) -> Result<Graph> {
        Graph::from_marks(class, self.names.clone(), marks)
    }

    pub(crate) fn marks(&self) -> &[u8] {
        &self.marks
    }

    #[inline]
    pub(crate) fn mark(&self, a: NodeId, b: NodeId) -> u8 {
        self.marks[a * self.n() + b]
    }

    pub fn class(&self) -> GraphClass {
        self.class
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.names.list.len()
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.names.list[v]
    }

    /// Node names in index order.
    pub fn names(&self) -> &[String] {
        &self.names.list
    }

    pub fn id(&self, name: &str) -> Result<NodeId> {
        self.names.index.get(name).copied().ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    /// Looks up several names at once.
    pub fn set<S: AsRef<str>>(&self, names: &[S]) -> Result<NodeSet> {
        names.iter().map(|s| self.id(s.as_ref())).collect()
    }

    /// Parses a comma-separated node list; blanks are ignored.
    pub fn parse_set(&self, list: &str) -> Result<NodeSet> {
        list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| self.id(s)).collect()
    }

    /// Member names sorted lexicographically.
    pub fn sorted_names(&self, s: &NodeSet) -> Vec<&str> {
        let mut v: Vec<&str> = s.iter().map(|i| self.name(i)).collect();
        v.sort_unstable();
        v
    }

    /// `{A, B}` with sorted names.
    pub fn fmt_set(&self, s: &NodeSet) -> String {
        format!("{{{}}}", self.sorted_names(s).join(", "))
    }

    pub fn check(&self, s: &NodeSet) -> Result<()> {
        match s.iter().find(|&v| v >= self.n()) {
            Some(v) => Err(Error::NodeOutOfRange(v)),
            None => Ok(()),
        }
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange(v))
        }
    }

    pub fn parents_of(&self, v: NodeId) -> &[NodeId] {
        &self.pa[v]
    }

    pub fn children_of(&self, v: NodeId) -> &[NodeId] {
        &self.ch[v]
    }

    pub fn siblings_of(&self, v: NodeId) -> &[NodeId] {
        &self.sib[v]
    }

    pub fn spouses_of(&self, v: NodeId) -> &[NodeId] {
        &self.sp[v]
    }

    pub fn is_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.mark(a, b) != 0
    }

    /// `a -> b`.
    pub fn has_directed(&self, a: NodeId, b: NodeId) -> bool {
        self.mark(a, b) & OUT != 0
    }

    pub fn has_undirected(&self, a: NodeId, b: NodeId) -> bool {
        self.mark(a, b) & UND != 0
    }

    pub fn has_bidirected(&self, a: NodeId, b: NodeId) -> bool {
        self.mark(a, b) & BI != 0
    }

    /// All edges, directed first by tail then head, symmetric kinds with
    /// `from < to`.
    pub fn edges(&self) -> Vec<Edge> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let m = self.mark(i, j);
                if m & OUT != 0 {
                    out.push(Edge { from: i, to: j, kind: EdgeKind::Directed });
                }
                if i < j && m & UND != 0 {
                    out.push(Edge { from: i, to: j, kind: EdgeKind::Undirected });
                }
                if i < j && m & BI != 0 {
                    out.push(Edge { from: i, to: j, kind: EdgeKind::Bidirected });
                }
            }
        }
        out
    }

    pub fn undirected_edge_count(&self) -> usize {
        self.sib.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn parents(&self, s: &NodeSet) -> Result<NodeSet> {
        self.check(s)?;
        Ok(s.iter().flat_map(|v| self.pa[v].iter().copied()).collect())
    }

    pub fn children(&self, s: &NodeSet) -> Result<NodeSet> {
        self.check(s)?;
        Ok(s.iter().flat_map(|v| self.ch[v].iter().copied()).collect())
    }

    pub fn siblings(&self, s: &NodeSet) -> Result<NodeSet> {
        self.check(s)?;
        Ok(s.iter().flat_map(|v| self.sib[v].iter().copied()).collect())
    }

    pub fn spouses(&self, s: &NodeSet) -> Result<NodeSet> {
        self.check(s)?;
        Ok(s.iter().flat_map(|v| self.sp[v].iter().copied()).collect())
    }

    /// Nodes reachable from `s` along directed edges, `s` included.
    pub fn descendants(&self, s: &NodeSet) -> Result<NodeSet> {
        self.check(s)?;
        Ok(NodeSet::from_mask(&self.reach(s.iter(), &[&self.ch], None)))
    }

    /// Nodes with a directed path into `s`, `s` included.
    pub fn ancestors(&self, s: &NodeSet) -> Result<NodeSet> {
        self.check(s)?;
        Ok(NodeSet::from_mask(&self.reach(s.iter(), &[&self.pa], None)))
    }

    /// Nodes at the end of a possibly causal path starting in `s`, `s`
    /// included. A path is possibly causal if no later node has a directed
    /// edge into an earlier one, checked over all pairs.
    pub fn possible_descendants(&self, s: &NodeSet) -> Result<NodeSet> {
        self.check(s)?;
        self.require_pdag_like()?;
        let starts: Vec<Vec<NodeId>> = s.iter().map(|v| vec![v]).collect();
        Ok(NodeSet::from_mask(&self.possibly_causal_reach(&starts, &vec![false; self.n()], true)))
    }

    /// Nodes at the start of a possibly causal path ending in `s`, `s`
    /// included.
    pub fn possible_ancestors(&self, s: &NodeSet) -> Result<NodeSet> {
        self.check(s)?;
        self.require_pdag_like()?;
        let starts: Vec<Vec<NodeId>> = s.iter().map(|v| vec![v]).collect();
        Ok(NodeSet::from_mask(&self.possibly_causal_reach(&starts, &vec![false; self.n()], false)))
    }

    /// [`Graph::possible_descendants`] by depth-first search over simple
    /// paths, never taking the reachability shortcut.
    pub fn possible_descendants_exact(&self, s: &NodeSet) -> Result<NodeSet> {
        self.check(s)?;
        self.require_pdag_like()?;
        let starts: Vec<Vec<NodeId>> = s.iter().map(|v| vec![v]).collect();
        Ok(NodeSet::from_mask(&self.exact_reach(&starts, &vec![false; self.n()], true)))
    }

    /// [`Graph::possible_ancestors`] by exhaustive path search.
    pub fn possible_ancestors_exact(&self, s: &NodeSet) -> Result<NodeSet> {
        self.check(s)?;
        self.require_pdag_like()?;
        let starts: Vec<Vec<NodeId>> = s.iter().map(|v| vec![v]).collect();
        Ok(NodeSet::from_mask(&self.exact_reach(&starts, &vec![false; self.n()], false)))
    }

    fn require_pdag_like(&self) -> Result<()> {
        match self.class {
            GraphClass::Dag | GraphClass::Cpdag | GraphClass::MaxPdag => Ok(()),
            other => Err(Error::WrongClass { expected: "dag, cpdag or maxpdag", found: other.as_str() }),
        }
    }

    /// True when no cycle mixes directed and undirected edges, i.e. the graph
    /// is a chain graph. On such graphs every path over `->`/`--` edges is
    /// possibly causal, so plain reachability is exact.
    pub fn is_chain_graph(&self) -> bool {
        self.chain
    }

    fn compute_chain(&self) -> bool {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut k = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = k;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &w in &self.sib[u] {
                    if comp[w] == usize::MAX {
                        comp[w] = k;
                        stack.push(w);
                    }
                }
            }
            k += 1;
        }
        let mut indeg = vec![0usize; k];
        let mut out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
        for u in 0..n {
            for &w in &self.ch[u] {
                if comp[u] == comp[w] {
                    return false;
                }
                if out[comp[u]].insert(comp[w]) {
                    indeg[comp[w]] += 1;
                }
            }
        }
        let mut queue: Vec<usize> = (0..k).filter(|&c| indeg[c] == 0).collect();
        let mut seen = 0;
        while let Some(c) = queue.pop() {
            seen += 1;
            for &d in &out[c] {
                indeg[d] -= 1;
                if indeg[d] == 0 {
                    queue.push(d);
                }
            }
        }
        seen == k
    }

    /// Breadth-first closure of `start` over the union of adjacency tables,
    /// never entering nodes flagged in `avoid`.
    pub(crate) fn reach(
        &self,
        start: impl IntoIterator<Item = NodeId>,
        tables: &[&Vec<Vec<NodeId>>],
        avoid: Option<&[bool]>,
    ) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut queue = VecDeque::new();
        for s in start {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for table in tables {
                for &w in &table[u] {
                    if !seen[w] && !avoid.is_some_and(|a| a[w]) {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        seen
    }

    pub(crate) fn children_table(&self) -> &Vec<Vec<NodeId>> {
        &self.ch
    }

    pub(crate) fn parents_table(&self) -> &Vec<Vec<NodeId>> {
        &self.pa
    }

    pub(crate) fn siblings_table(&self) -> &Vec<Vec<NodeId>> {
        &self.sib
    }

    /// Endpoints of possibly causal paths that begin with one of `prefixes`
    /// and otherwise avoid `avoid`. Prefix nodes count as reached. Every
    /// prefix must itself be possibly causal, and all prefix nodes except
    /// the last must be flagged in `avoid`. With `forward == false` paths
    /// are followed backwards, giving possible ancestors.
    pub(crate) fn possibly_causal_reach(&self, prefixes: &[Vec<NodeId>], avoid: &[bool], forward: bool) -> Vec<bool> {
        if self.chain {
            let mut reached = self.reach(
                prefixes.iter().filter_map(|p| p.last().copied()),
                &[if forward { &self.ch } else { &self.pa }, &self.sib],
                Some(avoid),
            );
            for p in prefixes {
                for &v in p {
                    reached[v] = true;
                }
            }
            reached
        } else {
            self.exact_reach(prefixes, avoid, forward)
        }
    }

    pub(crate) fn exact_reach(&self, prefixes: &[Vec<NodeId>], avoid: &[bool], forward: bool) -> Vec<bool> {
        let n = self.n();
        let mut reached = vec![false; n];
        let mut on_path = vec![false; n];
        for p in prefixes {
            for &v in p {
                reached[v] = true;
                on_path[v] = true;
            }
            if let Some(&last) = p.last() {
                self.extend_possible(last, forward, avoid, &mut on_path, &mut reached);
            }
            for &v in p {
                on_path[v] = false;
            }
        }
        reached
    }

    fn extend_possible(&self, u: NodeId, forward: bool, avoid: &[bool], on_path: &mut [bool], reached: &mut [bool]) {
        let step = if forward { &self.ch[u] } else { &self.pa[u] };
        for &w in step.iter().chain(self.sib[u].iter()) {
            if on_path[w] || avoid[w] {
                continue;
            }
            // Forward: w is the latest node and must not point back at the
            // path. Backward: w is the earliest and nothing on the path may
            // point at it.
            let back = if forward { &self.ch[w] } else { &self.pa[w] };
            if back.iter().any(|&v| on_path[v]) {
                continue;
            }
            reached[w] = true;
            on_path[w] = true;
            self.extend_possible(w, forward, avoid, on_path, reached);
            on_path[w] = false;
        }
    }

    /// Kahn's algorithm on the directed part, smallest index first.
    pub fn topological_order(&self) -> Result<Vec<NodeId>> {
        let n = self.n();
        let mut indeg: Vec<usize> = self.pa.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<NodeId> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &w in &self.ch[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&v| indeg[v] > 0).unwrap_or(0);
            return Err(Error::Cycle(self.name(stuck).to_string()));
        }
        Ok(order)
    }

    /// Every non-endpoint is a collider or a definite non-collider.
    pub fn is_definite_status(&self, p: &Path) -> bool {
        (1..p.nodes.len().saturating_sub(1)).all(|i| self.status_at(p, i) != Status::Indefinite)
    }

    /// No node on `p` has a directed edge into an earlier node on `p`.
    pub fn is_possibly_causal(&self, p: &Path) -> bool {
        let nodes = &p.nodes;
        (0..nodes.len()).all(|j| (0..j).all(|i| !self.has_directed(nodes[j], nodes[i])))
    }

    /// Every edge on `p` points forward.
    pub fn is_causal(&self, p: &Path) -> bool {
        p.steps.iter().all(|&s| s == Step::Forward)
    }

    pub(crate) fn status_at(&self, p: &Path, i: usize) -> Status {
        triple_status(self, p.nodes[i - 1], p.steps[i - 1], p.nodes[i + 1], p.steps[i])
    }

    /// Same nodes in the same order and same edges.
    pub fn same_as(&self, other: &Graph) -> bool {
        self.class == other.class && self.names.list == other.names.list && self.marks == other.marks
    }
}

/// Status of a middle node given the step that enters it and the step that
/// leaves it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Status {
    Collider,
    NonCollider,
    Indefinite,
}

pub(crate) fn triple_status(g: &Graph, prev: NodeId, left: Step, next: NodeId, right: Step) -> Status {
    let head_left = matches!(left, Step::Forward | Step::Bidirected);
    let head_right = matches!(right, Step::Backward | Step::Bidirected);
    if head_left && head_right {
        Status::Collider
    } else if left == Step::Backward || right == Step::Forward {
        Status::NonCollider
    } else if left == Step::Undirected && right == Step::Undirected && !g.is_adjacent(prev, next) {
        Status::NonCollider
    } else {
        Status::Indefinite
    }
}

/// Names-based equality: same class, node names and edges, in any order.
impl PartialEq for Graph {
    fn eq(&self, other: &Graph) -> bool {
        if self.class != other.class || self.n() != other.n() {
            return false;
        }
        let Ok(map) = self.names.list.iter().map(|s| other.id(s)).collect::<Result<Vec<_>>>() else {
            return false;
        };
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| self.mark(i, j) == other.mark(map[i], map[j])))
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph({}) ", self.class)?;
        f.debug_list()
            .entries(self.edges().iter().map(|e| {
                format!("{} {} {}", self.name(e.from), e.kind.symbol(), self.name(e.to))
            }))
            .finish()
    }
}

/// Incremental construction of a [`Graph`] by node name.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    class: GraphClass,
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<(NodeId, NodeId, EdgeKind)>,
}

impl GraphBuilder {
    pub fn new(class: GraphClass) -> Self {
        GraphBuilder { class, names: Vec::new(), index: HashMap::new(), edges: Vec::new() }
    }

    /// Returns the index of `name`, adding the node if needed.
    pub fn node(&mut self, name: &str) -> Result<NodeId> {
        if let Some(&i) = self.index.get(name) {
            return Ok(i);
        }
        check_name(name)?;
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        Ok(i)
    }

    pub fn edge(&mut self, from: &str, to: &str, kind: EdgeKind) -> Result<&mut Self> {
        let a = self.node(from)?;
        let b = self.node(to)?;
        self.edges.push((a, b, kind));
        Ok(self)
    }

    pub fn directed(&mut self, from: &str, to: &str) -> Result<&mut Self> {
        self.edge(from, to, EdgeKind::Directed)
    }

    pub fn undirected(&mut self, a: &str, b: &str) -> Result<&mut Self> {
        self.edge(a, b, EdgeKind::Undirected)
    }

    pub fn bidirected(&mut self, a: &str, b: &str) -> Result<&mut Self> {
        self.edge(a, b, EdgeKind::Bidirected)
    }

    pub fn build(self) -> Result<Graph> {
        let n = self.names.len();
        let mut marks = vec![0u8; n * n];
        for &(a, b, kind) in &self.edges {
            if a == b {
                return Err(Error::SelfLoop(self.names[a].clone()));
            }
            let (ab, ba) = match kind {
                EdgeKind::Directed => (OUT, IN),
                EdgeKind::Undirected => (UND, UND),
                EdgeKind::Bidirected => (BI, BI),
            };
            let cur = marks[a * n + b];
            let clash = if kind == EdgeKind::Bidirected { cur & BI != 0 } else { cur & SIMPLE != 0 };
            if clash {
                return Err(Error::ConflictingEdges(self.names[a].clone(), self.names[b].clone()));
            }
            marks[a * n + b] |= ab;
            marks[b * n + a] |= ba;
        }
        let names = Names::new(self.names)?;
        Graph::from_marks(self.class, names, marks)
    }
}

/// How a path moves from one node to the next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    /// `a -> b`
    Forward,
    /// `a <- b`
    Backward,
    /// `a -- b`
    Undirected,
    /// `a <-> b`
    Bidirected,
}

impl Step {
    pub fn symbol(self) -> &'static str {
        match self {
            Step::Forward => "->",
            Step::Backward => "<-",
            Step::Undirected => "--",
            Step::Bidirected => "<->",
        }
    }

    fn bit(self) -> u8 {
        match self {
            Step::Forward => OUT,
            Step::Backward => IN,
            Step::Undirected => UND,
            Step::Bidirected => BI,
        }
    }

    /// Steps available from `a` to `b` in `g`.
    pub(crate) fn between(g: &Graph, a: NodeId, b: NodeId) -> impl Iterator<Item = Step> {
        let m = g.mark(a, b);
        [Step::Forward, Step::Backward, Step::Undirected, Step::Bidirected]
            .into_iter()
            .filter(move |s| m & s.bit() != 0)
    }
}

/// A sequence of distinct nodes joined by edges of the graph it was built
/// against.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    nodes: Vec<NodeId>,
    steps: Vec<Step>,
}

impl Path {
    pub fn new(g: &Graph, nodes: Vec<NodeId>, steps: Vec<Step>) -> Result<Path> {
        if nodes.is_empty() || steps.len() + 1 != nodes.len() {
            return Err(Error::InvalidPath("node and edge counts do not match".into()));
        }
        let mut seen = vec![false; g.n()];
        for &v in &nodes {
            g.check_node(v)?;
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPath(format!("node `{}` repeats", g.name(v))));
            }
        }
        for (i, s) in steps.iter().enumerate() {
            if g.mark(nodes[i], nodes[i + 1]) & s.bit() == 0 {
                return Err(Error::InvalidPath(format!(
                    "no edge {} {} {}",
                    g.name(nodes[i]),
                    s.symbol(),
                    g.name(nodes[i + 1])
                )));
            }
        }
        Ok(Path { nodes, steps })
    }

    /// Infers the edges; fails if a pair carries more than one edge.
    pub fn from_nodes(g: &Graph, nodes: Vec<NodeId>) -> Result<Path> {
        let mut steps = Vec::with_capacity(nodes.len().saturating_sub(1));
        for w in nodes.windows(2) {
            g.check_node(w[0])?;
            g.check_node(w[1])?;
            let mut it = Step::between(g, w[0], w[1]);
            match (it.next(), it.next()) {
                (Some(s), None) => steps.push(s),
                (None, _) => {
                    return Err(Error::InvalidPath(format!(
                        "`{}` and `{}` are not adjacent",
                        g.name(w[0]),
                        g.name(w[1])
                    )))
                }
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidPath(format!(
                        "`{}` and `{}` share two edges; give the edges explicitly",
                        g.name(w[0]),
                        g.name(w[1])
                    )))
                }
            }
        }
        Path::new(g, nodes, steps)
    }

    /// Parses `A -> B <- C -- D <-> E`.
    pub fn parse(g: &Graph, text: &str) -> Result<Path> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len().is_multiple_of(2) {
            return Err(Error::InvalidPath(format!("cannot read `{text}`")));
        }
        let mut nodes = Vec::new();
        let mut steps = Vec::new();
        for (i, t) in tokens.iter().enumerate() {
            if i % 2 == 0 {
                nodes.push(g.id(t)?);
            } else {
                steps.push(match *t {
                    "->" => Step::Forward,
                    "<-" => Step::Backward,
                    "--" => Step::Undirected,
                    "<->" => Step::Bidirected,
                    other => return Err(Error::InvalidPath(format!("unknown edge `{other}`"))),
                });
            }
        }
        Path::new(g, nodes, steps)
    }

    pub(crate) fn from_parts_unchecked(nodes: Vec<NodeId>, steps: Vec<Step>) -> Path {
        Path { nodes, steps }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn first(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn last(&self) -> NodeId {
        *self.nodes.last().expect("paths are non-empty")
    }

    pub fn display<'a>(&'a self, g: &'a Graph) -> impl fmt::Display + 'a {
        PathDisplay { path: self, g }
    }
}

struct PathDisplay<'a> {
    path: &'a Path,
    g: &'a Graph,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.g.name(self.path.nodes[0]))?;
        for (s, &v) in self.path.steps.iter().zip(&self.path.nodes[1..]) {
            write!(f, " {} {}", s.symbol(), self.g.name(v))?;
        }
        Ok(())
    }
}
