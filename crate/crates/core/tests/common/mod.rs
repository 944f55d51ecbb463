//! Brute-force oracles shared by the integration tests. They enumerate
//! simple paths directly and never call the library's search routines.

#![allow(dead_code)]

use adjustkit::{Graph, NodeId, NodeSet};

/// Edge kinds seen from `a` towards `b`: 'f' for a -> b, 'b' for a <- b,
/// 'u' for a -- b, 'd' for a <-> b.
pub fn edge_kinds(g: &Graph, a: NodeId, b: NodeId) -> Vec<char> {
    let mut out = Vec::new();
    if g.has_directed(a, b) {
        out.push('f');
    }
    if g.has_directed(b, a) {
        out.push('b');
    }
    if g.has_undirected(a, b) {
        out.push('u');
    }
    if g.has_bidirected(a, b) {
        out.push('d');
    }
    out
}

/// Every simple path (nodes, edge kinds) starting at `s`, up to any length.
pub fn all_paths_from(g: &Graph, s: NodeId) -> Vec<(Vec<NodeId>, Vec<char>)> {
    fn go(g: &Graph, nodes: &mut Vec<NodeId>, kinds: &mut Vec<char>, out: &mut Vec<(Vec<NodeId>, Vec<char>)>) {
        out.push((nodes.clone(), kinds.clone()));
        let u = *nodes.last().unwrap();
        for w in 0..g.n() {
            if nodes.contains(&w) {
                continue;
            }
            for k in edge_kinds(g, u, w) {
                nodes.push(w);
                kinds.push(k);
                go(g, nodes, kinds, out);
                nodes.pop();
                kinds.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(g, &mut vec![s], &mut Vec::new(), &mut out);
    out
}

pub fn is_directed_path(kinds: &[char]) -> bool {
    kinds.iter().all(|&k| k == 'f')
}

pub fn is_possibly_causal(g: &Graph, nodes: &[NodeId], kinds: &[char]) -> bool {
    kinds.iter().all(|&k| k == 'f' || k == 'u')
        && (0..nodes.len()).all(|j| (0..j).all(|i| !g.has_directed(nodes[j], nodes[i])))
}

/// 'c' collider, 'n' definite non-collider, '?' otherwise, for interior
/// position `i`.
pub fn status(g: &Graph, nodes: &[NodeId], kinds: &[char], i: usize) -> char {
    let into_mid = matches!(kinds[i - 1], 'f' | 'd');
    let out_of_mid_head = matches!(kinds[i], 'b' | 'd');
    if into_mid && out_of_mid_head {
        'c'
    } else if kinds[i - 1] == 'b' || kinds[i] == 'f' {
        'n'
    } else if kinds[i - 1] == 'u' && kinds[i] == 'u' && !g.is_adjacent(nodes[i - 1], nodes[i + 1]) {
        'n'
    } else {
        '?'
    }
}

pub fn ancestors_of(g: &Graph, s: &NodeSet) -> Vec<bool> {
    let mut an = s.to_mask(g.n());
    let mut changed = true;
    while changed {
        changed = false;
        for a in 0..g.n() {
            for b in 0..g.n() {
                if an[b] && !an[a] && g.has_directed(a, b) {
                    an[a] = true;
                    changed = true;
                }
            }
        }
    }
    an
}

/// Open given `z`: every interior definite, non-colliders outside `z`,
/// colliders in `an(z)`.
pub fn is_open(g: &Graph, nodes: &[NodeId], kinds: &[char], z: &NodeSet) -> Option<bool> {
    let an = ancestors_of(g, z);
    for i in 1..nodes.len().saturating_sub(1) {
        match status(g, nodes, kinds, i) {
            'c' if !an[nodes[i]] => return Some(false),
            'n' if z.contains(nodes[i]) => return Some(false),
            '?' => return None,
            _ => {}
        }
    }
    Some(true)
}

/// Proper paths from `x` to `y`: first node in `x`, no other node in `x`,
/// last node in `y`.
pub fn proper_paths(g: &Graph, x: &NodeSet, y: &NodeSet) -> Vec<(Vec<NodeId>, Vec<char>)> {
    x.iter()
        .flat_map(|s| all_paths_from(g, s))
        .filter(|(nodes, _)| nodes.len() > 1 && y.contains(*nodes.last().unwrap()) && nodes[1..].iter().all(|&v| !x.contains(v)))
        .collect()
}

pub fn causal_nodes(g: &Graph, x: &NodeSet, y: &NodeSet, possibly: bool) -> NodeSet {
    let mut out = NodeSet::new();
    for (nodes, kinds) in proper_paths(g, x, y) {
        let ok = if possibly { is_possibly_causal(g, &nodes, &kinds) } else { is_directed_path(&kinds) };
        if ok {
            out.extend(nodes[1..].iter().copied());
        }
    }
    out
}

pub fn descendants(g: &Graph, s: &NodeSet, possibly: bool) -> NodeSet {
    let mut out = s.clone();
    for v in s.iter() {
        for (nodes, kinds) in all_paths_from(g, v) {
            let ok = if possibly { is_possibly_causal(g, &nodes, &kinds) } else { is_directed_path(&kinds) };
            if ok {
                out.insert(*nodes.last().unwrap());
            }
        }
    }
    out
}

pub fn forbidden(g: &Graph, x: &NodeSet, y: &NodeSet, possibly: bool) -> NodeSet {
    descendants(g, &causal_nodes(g, x, y, possibly), possibly).union(x)
}

pub fn amenable(g: &Graph, x: &NodeSet, y: &NodeSet) -> bool {
    proper_paths(g, x, y)
        .into_iter()
        .filter(|(nodes, kinds)| is_possibly_causal(g, nodes, kinds))
        .all(|(_, kinds)| kinds[0] == 'f')
}

/// The generalized adjustment criterion checked path by path.
pub fn valid(g: &Graph, x: &NodeSet, y: &NodeSet, z: &NodeSet, possibly: bool) -> bool {
    if !amenable(g, x, y) || !z.is_disjoint(&forbidden(g, x, y, possibly)) {
        return false;
    }
    proper_paths(g, x, y).into_iter().all(|(nodes, kinds)| {
        let causal = if possibly { is_possibly_causal(g, &nodes, &kinds) } else { is_directed_path(&kinds) };
        causal || is_open(g, &nodes, &kinds, z) != Some(true)
    })
}

/// All subsets of `pool`.
pub fn subsets(pool: &[NodeId]) -> Vec<NodeSet> {
    (0u32..1 << pool.len()).map(|m| (0..pool.len()).filter(|&i| m >> i & 1 == 1).map(|i| pool[i]).collect()).collect()
}
