//! Causal and forbidden nodes, amenability, the generalized adjustment
//! criterion, latent and forbidden projections, and the O- and O*-sets.
//!
//! DAGs and ADMGs are handled with reachability. For CPDAGs and maxPDAGs,
//! amenable problems are answered on a consistent extension (the forbidden
//! set and the O-set do not depend on which DAG of the class is used);
//! the remaining cases fall back to exhaustive path search.

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphClass, Names, NodeId, NodeSet, Step, BI, IN, OUT, UND};
use crate::meek;
use crate::separation::{m_connected, search_open_paths};

/// Treatments `x` and outcomes `y` in a graph.
#[derive(Clone, Debug)]
pub struct AdjustmentProblem<'g> {
    g: &'g Graph,
    x: NodeSet,
    y: NodeSet,
}

impl<'g> AdjustmentProblem<'g> {
    pub fn new(g: &'g Graph, x: NodeSet, y: NodeSet) -> Result<Self> {
        g.check(&x)?;
        g.check(&y)?;
        if x.is_empty() {
            return Err(Error::EmptySet("treatments"));
        }
        if y.is_empty() {
            return Err(Error::EmptySet("outcomes"));
        }
        if !x.is_disjoint(&y) {
            return Err(Error::Overlap(format!("treatments and outcomes share {}", g.fmt_set(&x.intersection(&y)))));
        }
        if g.class() == GraphClass::Mixed {
            return Err(Error::Unsupported("adjustment queries on mixed graphs".into()));
        }
        Ok(AdjustmentProblem { g, x, y })
    }

    /// Builds a problem from comma-separated node names.
    pub fn parse(g: &'g Graph, x: &str, y: &str) -> Result<Self> {
        Self::new(g, g.parse_set(x)?, g.parse_set(y)?)
    }

    pub fn graph(&self) -> &'g Graph {
        self.g
    }

    pub fn x(&self) -> &NodeSet {
        &self.x
    }

    pub fn y(&self) -> &NodeSet {
        &self.y
    }

    /// Splits the outcomes into those that are possible descendants of the
    /// treatments and those that are not. The effect on the latter is zero.
    /// Returns the reduced problem (if any outcome is left) and the dropped
    /// outcomes.
    pub fn reduce_outcomes(&self) -> Result<(Option<AdjustmentProblem<'g>>, NodeSet)> {
        let de = possible_descendants(self.g, &self.x)?;
        let kept = self.y.intersection(&de);
        let dropped = self.y.difference(&de);
        let reduced = if kept.is_empty() { None } else { Some(AdjustmentProblem { g: self.g, x: self.x.clone(), y: kept }) };
        Ok((reduced, dropped))
    }

    fn with_graph<'h>(&self, g: &'h Graph) -> AdjustmentProblem<'h> {
        AdjustmentProblem { g, x: self.x.clone(), y: self.y.clone() }
    }

    fn is_dag_like(&self) -> bool {
        matches!(self.g.class(), GraphClass::Dag | GraphClass::Admg)
    }
}

fn possible_descendants(g: &Graph, s: &NodeSet) -> Result<NodeSet> {
    match g.class() {
        GraphClass::Dag | GraphClass::Admg => g.descendants(s),
        _ => g.possible_descendants(s),
    }
}

fn possible_ancestors(g: &Graph, s: &NodeSet) -> Result<NodeSet> {
    match g.class() {
        GraphClass::Dag | GraphClass::Admg => g.ancestors(s),
        _ => g.possible_ancestors(s),
    }
}

/// Nodes on proper causal (all edges `->`) paths from `x` to `y`, minus `x`.
pub fn causal_nodes(p: &AdjustmentProblem) -> NodeSet {
    let g = p.g;
    let n = g.n();
    let xm = p.x.to_mask(n);
    let fwd = g.reach(p.x.iter(), &[g.children_table()], Some(&xm));
    let bwd = g.reach(p.y.iter(), &[g.parents_table()], Some(&xm));
    (0..n).filter(|&v| fwd[v] && bwd[v] && !xm[v]).collect()
}

/// Nodes on proper possibly causal paths from `x` to `y`, minus `x`, found
/// by enumerating paths. Equals [`causal_nodes`] on DAGs and ADMGs.
pub fn possibly_causal_nodes(p: &AdjustmentProblem) -> NodeSet {
    if p.is_dag_like() {
        return causal_nodes(p);
    }
    let g = p.g;
    let n = g.n();
    let xm = p.x.to_mask(n);
    let ym = p.y.to_mask(n);
    // A node can only lie on such a path if it reaches `y` over `->`/`--`
    // edges without passing through `x`.
    let useful = g.reach(p.y.iter(), &[g.parents_table(), g.siblings_table()], Some(&xm));
    let mut hit = vec![false; n];
    let mut on_path = vec![false; n];
    let mut path = Vec::new();
    for x in p.x.iter() {
        on_path[x] = true;
        path.push(x);
        posscn_dfs(g, &xm, &ym, &useful, &mut on_path, &mut path, &mut hit);
        path.pop();
        on_path[x] = false;
    }
    (0..n).filter(|&v| hit[v] && !xm[v]).collect()
}

fn posscn_dfs(
    g: &Graph,
    xm: &[bool],
    ym: &[bool],
    useful: &[bool],
    on_path: &mut [bool],
    path: &mut Vec<NodeId>,
    hit: &mut [bool],
) {
    let u = *path.last().expect("non-empty");
    for &w in g.children_of(u).iter().chain(g.siblings_of(u)) {
        if on_path[w] || xm[w] || !useful[w] || g.children_of(w).iter().any(|&v| on_path[v]) {
            continue;
        }
        on_path[w] = true;
        path.push(w);
        if ym[w] {
            for &v in path.iter() {
                hit[v] = true;
            }
        }
        posscn_dfs(g, xm, ym, useful, on_path, path, hit);
        path.pop();
        on_path[w] = false;
    }
}

/// `forb(x, y) = possde(posscn(x, y)) ∪ x`; `de(cn(x, y)) ∪ x` on DAGs.
pub fn forbidden_set(p: &AdjustmentProblem) -> Result<NodeSet> {
    if p.is_dag_like() {
        let cn = causal_nodes(p);
        return Ok(p.g.descendants(&cn)?.union(&p.x));
    }
    if amenable(p)? {
        let d = meek::consistent_extension(p.g)?;
        return forbidden_set(&p.with_graph(&d));
    }
    forbidden_set_exact(p)
}

/// [`forbidden_set`] straight from the definition, with possibly causal
/// nodes found by path enumeration.
pub fn forbidden_set_exact(p: &AdjustmentProblem) -> Result<NodeSet> {
    let cn = possibly_causal_nodes(p);
    Ok(possible_descendants(p.g, &cn)?.union(&p.x))
}

/// True iff every proper possibly causal path from `x` to `y` starts with a
/// directed edge out of `x`. Always true for DAGs and ADMGs.
pub fn amenable(p: &AdjustmentProblem) -> Result<bool> {
    if p.is_dag_like() {
        return Ok(true);
    }
    let g = p.g;
    let xm = p.x.to_mask(g.n());
    let prefixes: Vec<Vec<NodeId>> = p
        .x
        .iter()
        .flat_map(|x| g.siblings_of(x).iter().filter(|&&s| !xm[s]).map(move |&s| vec![x, s]))
        .collect();
    if prefixes.is_empty() {
        return Ok(true);
    }
    let reached = g.possibly_causal_reach(&prefixes, &xm, true);
    Ok(!p.y.iter().any(|y| reached[y]))
}

/// The generalized adjustment criterion: amenability, no forbidden node in
/// `z`, and every proper non-causal definite-status path from `x` to `y`
/// blocked by `z`.
pub fn is_valid_adjustment_set(p: &AdjustmentProblem, z: &NodeSet) -> Result<bool> {
    let g = p.g;
    g.check(z)?;
    let xy = p.x.union(&p.y);
    if !z.is_disjoint(&xy) {
        return Err(Error::Overlap(format!("adjustment set contains {}", g.fmt_set(&z.intersection(&xy)))));
    }
    if !amenable(p)? || !z.is_disjoint(&forbidden_set(p)?) {
        return Ok(false);
    }
    let n = g.n();
    if p.is_dag_like() {
        // m-separation in the proper back-door graph: the first edge of
        // every proper causal path is removed.
        let xm = p.x.to_mask(n);
        let cn = causal_nodes(p).to_mask(n);
        let skip = |u: NodeId, w: NodeId| xm[u] && cn[w];
        return Ok(!m_connected(g, &xm, &p.y.to_mask(n), &z.to_mask(n), &skip));
    }
    Ok(non_causal_open_path(p, z).is_none())
}

/// A proper, definite-status, non-possibly-causal path from `x` to `y` that
/// `z` leaves open. This is the path form of criterion (c) and works for
/// every graph class.
pub fn non_causal_open_path(p: &AdjustmentProblem, z: &NodeSet) -> Option<crate::graph::Path> {
    let g = p.g;
    let n = g.n();
    let xm = p.x.to_mask(n);
    let interior: Vec<bool> = xm.iter().map(|&b| !b).collect();
    search_open_paths(g, &p.x.to_vec(), &p.y.to_mask(n), &interior, &z.to_mask(n), &mut |nodes, steps| {
        !possibly_causal(g, nodes, steps)
    })
}

fn possibly_causal(g: &Graph, nodes: &[NodeId], steps: &[Step]) -> bool {
    if steps.iter().any(|s| matches!(s, Step::Backward | Step::Bidirected)) {
        return false;
    }
    (0..nodes.len()).all(|j| (0..j).all(|i| !g.has_directed(nodes[j], nodes[i])))
}

/// `possan(x ∪ y) ∖ (x ∪ y ∪ forb(x, y))`, which is a valid adjustment set
/// whenever one exists.
pub fn canonical_adjustment_set(p: &AdjustmentProblem) -> Result<NodeSet> {
    if !amenable(p)? {
        return Err(Error::NotAmenable);
    }
    let xy = p.x.union(&p.y);
    let an = possible_ancestors(p.g, &xy)?;
    Ok(an.difference(&xy).difference(&forbidden_set(p)?))
}

/// Whether any valid adjustment set exists. Requires `y ⊆ possde(x)`; use
/// [`AdjustmentProblem::reduce_outcomes`] first otherwise.
pub fn adjustment_set_exists(p: &AdjustmentProblem) -> Result<bool> {
    let g = p.g;
    let de = possible_descendants(g, &p.x)?;
    if !p.y.is_subset(&de) {
        return Err(Error::OutcomesNotReachable(g.fmt_set(&p.y.difference(&de))));
    }
    if !amenable(p)? {
        return Err(Error::NotAmenable);
    }
    match g.class() {
        // No treatment may descend from a causal node.
        GraphClass::Dag => Ok(g.descendants(&causal_nodes(p))?.is_disjoint(&p.x)),
        _ if p.y.len() == 1 => Ok(g.descendants(&causal_nodes(p))?.is_disjoint(&p.x)),
        _ => is_valid_adjustment_set(p, &canonical_adjustment_set(p)?),
    }
}

/// `O(x, y) = pa(cn(x, y)) ∖ forb(x, y)`. Defined even when no valid
/// adjustment set exists.
pub fn o_set(p: &AdjustmentProblem) -> Result<NodeSet> {
    if p.is_dag_like() {
        let cn = causal_nodes(p);
        return Ok(p.g.parents(&cn)?.difference(&forbidden_set(p)?));
    }
    if amenable(p)? && p.y.is_subset(&possible_descendants(p.g, &p.x)?) {
        let d = meek::consistent_extension(p.g)?;
        return o_set(&p.with_graph(&d));
    }
    o_set_exact(p)
}

/// [`o_set`] from the definition with possibly causal nodes.
pub fn o_set_exact(p: &AdjustmentProblem) -> Result<NodeSet> {
    let cn = possibly_causal_nodes(p);
    Ok(p.g.parents(&cn)?.difference(&forbidden_set_exact(p)?))
}

/// Marginalises a DAG onto `w`. Nodes outside `w` are latent; `a -> b` is
/// kept when a directed path from `a` to `b` has only latent interior nodes,
/// and `a <-> b` is added when some latent node reaches both through latent
/// nodes only.
pub fn latent_projection(d: &Graph, w: &NodeSet) -> Result<Graph> {
    if d.class() != GraphClass::Dag {
        return Err(Error::WrongClass { expected: "dag", found: d.class().as_str() });
    }
    d.check(w)?;
    let n = d.n();
    let wm = w.to_mask(n);
    let latent: Vec<bool> = wm.iter().map(|&b| !b).collect();
    let (names, index) = sub_names(d, w)?;
    let k = w.len();
    let mut marks = vec![0u8; k * k];
    for a in w.iter() {
        for b in directed_through(d, a, &latent) {
            set_edge(&mut marks, k, index[a].unwrap(), index[b].unwrap(), OUT);
        }
    }
    for l in (0..n).filter(|&v| latent[v]) {
        let hits = directed_through(d, l, &latent);
        add_bidirected(&mut marks, k, &hits.iter().map(|&v| index[v].unwrap()).collect::<Vec<_>>());
    }
    Graph::from_marks(GraphClass::Admg, names, marks)
}

/// Observed nodes reachable from `s` by directed paths whose interior nodes
/// are all flagged in `latent`.
fn directed_through(g: &Graph, s: NodeId, latent: &[bool]) -> Vec<NodeId> {
    let mut seen = vec![false; g.n()];
    seen[s] = true;
    let mut stack = vec![s];
    let mut out = Vec::new();
    while let Some(u) = stack.pop() {
        for &v in g.children_of(u) {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if latent[v] {
                stack.push(v);
            } else {
                out.push(v);
            }
        }
    }
    out.sort_unstable();
    out
}

fn add_bidirected(marks: &mut [u8], k: usize, nodes: &[NodeId]) {
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            set_edge(marks, k, a, b, BI);
        }
    }
}

fn set_edge(marks: &mut [u8], k: usize, a: NodeId, b: NodeId, kind: u8) {
    let mirror = match kind {
        OUT => IN,
        other => other,
    };
    marks[a * k + b] |= kind;
    marks[b * k + a] |= mirror;
}

fn sub_names(g: &Graph, keep: &NodeSet) -> Result<(std::sync::Arc<Names>, Vec<Option<NodeId>>)> {
    let mut index = vec![None; g.n()];
    let mut list = Vec::with_capacity(keep.len());
    for (i, v) in keep.iter().enumerate() {
        index[v] = Some(i);
        list.push(g.name(v).to_string());
    }
    Ok((Names::new(list)?, index))
}

/// The forbidden projection together with the node correspondence.
#[derive(Clone, Debug)]
pub struct ForbiddenProjection {
    pub graph: Graph,
    /// Kept nodes, as ids of the original graph.
    pub kept: NodeSet,
    /// Projected-out nodes, as ids of the original graph.
    pub removed: NodeSet,
    index: Vec<Option<NodeId>>,
}

impl ForbiddenProjection {
    /// Maps a set of original ids to projection ids. Fails on removed nodes.
    pub fn to_projection(&self, s: &NodeSet) -> Result<NodeSet> {
        s.iter()
            .map(|v| {
                self.index
                    .get(v)
                    .copied()
                    .flatten()
                    .ok_or_else(|| Error::InvalidParameter(format!("node {v} is not in the projection")))
            })
            .collect()
    }

    /// Maps projection ids back to original ids.
    pub fn to_original(&self, s: &NodeSet) -> NodeSet {
        let back: Vec<NodeId> = self.kept.to_vec();
        s.iter().map(|v| back[v]).collect()
    }

    /// The same problem posed on the projection.
    pub fn problem<'a>(&'a self, p: &AdjustmentProblem) -> Result<AdjustmentProblem<'a>> {
        AdjustmentProblem::new(&self.graph, self.to_projection(&p.x)?, self.to_projection(&p.y)?)
    }
}

/// Projects out `forb(x, y) ∖ (x ∪ y)`.
///
/// DAG input gives an ADMG. Amenable maxPDAG and CPDAG input with a single
/// outcome keeps undirected edges among kept nodes and adds bidirected edges
/// for non-collider paths `a <- ... -> b` through projected nodes; the result
/// is a maxPDAG, or a mixed graph if such bidirected edges appear.
pub fn forbidden_projection(p: &AdjustmentProblem) -> Result<ForbiddenProjection> {
    let g = p.g;
    let n = g.n();
    let forb = forbidden_set(p)?;
    let removed = forb.difference(&p.x).difference(&p.y);
    let kept: NodeSet = (0..n).filter(|&v| !removed.contains(v)).collect();
    match g.class() {
        GraphClass::Dag => {
            let graph = latent_projection(g, &kept)?;
            let (_, index) = sub_names(g, &kept)?;
            Ok(ForbiddenProjection { graph, kept, removed, index })
        }
        GraphClass::Cpdag | GraphClass::MaxPdag => {
            if p.y.len() != 1 {
                return Err(Error::Unsupported("forbidden projection of a maxPDAG needs a single outcome".into()));
            }
            if !amenable(p)? {
                return Err(Error::NotAmenable);
            }
            pdag_projection(g, kept, removed)
        }
        other => Err(Error::WrongClass { expected: "dag, cpdag or maxpdag", found: other.as_str() }),
    }
}

fn pdag_projection(g: &Graph, kept: NodeSet, removed: NodeSet) -> Result<ForbiddenProjection> {
    let n = g.n();
    let latent = removed.to_mask(n);
    let (names, index) = sub_names(g, &kept)?;
    let k = kept.len();
    let mut marks = vec![0u8; k * k];
    for a in kept.iter() {
        for b in directed_through(g, a, &latent) {
            set_edge(&mut marks, k, index[a].unwrap(), index[b].unwrap(), OUT);
        }
        for &b in g.siblings_of(a) {
            if let (Some(i), Some(j)) = (index[a], index[b]) {
                marks[i * k + j] |= UND;
            }
        }
    }
    for a in kept.iter() {
        let mut on_path = vec![false; n];
        on_path[a] = true;
        let mut ends = Vec::new();
        for &f in g.parents_of(a) {
            if latent[f] {
                on_path[f] = true;
                non_collider_ends(g, f, false, &latent, &mut on_path, &mut ends);
                on_path[f] = false;
            }
        }
        for b in ends {
            if b != a {
                set_edge(&mut marks, k, index[a].unwrap(), index[b].unwrap(), BI);
            }
        }
    }
    let class = if marks.iter().any(|&m| m & BI != 0) { GraphClass::Mixed } else { GraphClass::MaxPdag };
    let graph = Graph::from_marks(class, names, marks)?;
    Ok(ForbiddenProjection { graph, kept, removed, index })
}

/// Extends a simple path at latent node `u`, entered with an arrowhead at
/// `u` iff `head_in`. Collects observed endpoints reached by a final `->`
/// edge with every latent node a non-collider.
fn non_collider_ends(g: &Graph, u: NodeId, head_in: bool, latent: &[bool], on_path: &mut [bool], ends: &mut Vec<NodeId>) {
    let moves = g
        .children_of(u)
        .iter()
        .map(|&w| (w, false, true))
        .chain(g.parents_of(u).iter().map(|&w| (w, true, false)))
        .chain(g.siblings_of(u).iter().map(|&w| (w, false, false)));
    let moves: Vec<_> = moves.collect();
    for (w, head_at_u, head_at_w) in moves {
        if on_path[w] || (head_in && head_at_u) {
            continue;
        }
        if !latent[w] {
            if head_at_w {
                ends.push(w);
            }
            continue;
        }
        on_path[w] = true;
        non_collider_ends(g, w, head_at_w, latent, on_path, ends);
        on_path[w] = false;
    }
}

/// `pa(y)` in the forbidden projection, minus `x ∪ y`, as original ids.
pub fn o_star_set(p: &AdjustmentProblem) -> Result<NodeSet> {
    let proj = forbidden_projection(p)?;
    let py = proj.to_projection(&p.y)?;
    let pa = proj.to_original(&proj.graph.parents(&py)?);
    Ok(pa.difference(&p.x).difference(&p.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn dag(edges: &[(&str, &str)]) -> Graph {
        let mut b = GraphBuilder::new(GraphClass::Dag);
        for (a, c) in edges {
            b.directed(a, c).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn projection_rules() {
        let chain = dag(&[("A", "L"), ("L", "B")]);
        let w = chain.set(&["A", "B"]).unwrap();
        let pr = latent_projection(&chain, &w).unwrap();
        assert!(pr.has_directed(pr.id("A").unwrap(), pr.id("B").unwrap()));

        let fork = dag(&[("L", "A"), ("L", "B")]);
        let pr = latent_projection(&fork, &fork.set(&["A", "B"]).unwrap()).unwrap();
        assert!(pr.has_bidirected(0, 1));
        assert!(!pr.has_directed(0, 1) && !pr.has_directed(1, 0));

        let collider = dag(&[("A", "L"), ("B", "L")]);
        let pr = latent_projection(&collider, &collider.set(&["A", "B"]).unwrap()).unwrap();
        assert!(pr.edges().is_empty());
    }

    #[test]
    fn no_causal_path_means_no_causal_nodes() {
        let g = dag(&[("B", "A")]);
        let p = AdjustmentProblem::parse(&g, "A", "B").unwrap();
        assert!(causal_nodes(&p).is_empty());
        assert_eq!(forbidden_set(&p).unwrap(), g.set(&["A"]).unwrap());
        assert!(matches!(adjustment_set_exists(&p), Err(Error::OutcomesNotReachable(_))));
        let (reduced, dropped) = p.reduce_outcomes().unwrap();
        assert!(reduced.is_none());
        assert_eq!(dropped, g.set(&["B"]).unwrap());
    }

    #[test]
    fn problem_validation() {
        let g = dag(&[("A", "B")]);
        assert!(matches!(AdjustmentProblem::parse(&g, "A", "A"), Err(Error::Overlap(_))));
        assert!(matches!(AdjustmentProblem::new(&g, NodeSet::new(), g.set(&["B"]).unwrap()), Err(Error::EmptySet(_))));
        let p = AdjustmentProblem::parse(&g, "A", "B").unwrap();
        assert!(matches!(is_valid_adjustment_set(&p, &g.set(&["A"]).unwrap()), Err(Error::Overlap(_))));
    }

    #[test]
    fn undirected_start_breaks_amenability() {
        let mut b = GraphBuilder::new(GraphClass::Cpdag);
        b.undirected("X", "Y").unwrap();
        let g = b.build().unwrap();
        let p = AdjustmentProblem::parse(&g, "X", "Y").unwrap();
        assert!(!amenable(&p).unwrap());
        assert!(!is_valid_adjustment_set(&p, &NodeSet::new()).unwrap());
        assert_eq!(canonical_adjustment_set(&p), Err(Error::NotAmenable));
    }
}
