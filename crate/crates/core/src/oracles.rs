//! Brute-force reference computations used to check the fast code paths.
//!
//! Everything here works from first principles (edge subsets, connectivity, explicit
//! determinants) and avoids the flow, matroid and DP machinery it is meant to check.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};

use crate::blowup::BlowupGraph;
use crate::error::{Error, Result};
use crate::instance::{SteinerInstance, SteinerTree};
use crate::rational::{harmonic, int, Rational};
use crate::util::{bits, submasks, UnionFind};

/// Terminal cap for the Dreyfus–Wagner oracle.
pub const MAX_EXACT_TERMINALS: usize = 12;
/// Edge cap for removal enumeration.
pub const MAX_REMOVAL_EDGES: usize = 12;
/// Edge cap for splitting-set enumeration.
pub const MAX_SPLITTING_EDGES: usize = 20;

/// All-pairs shortest paths with next hops.
fn shortest_paths(inst: &SteinerInstance) -> (Vec<Vec<Option<Rational>>>, Vec<Vec<usize>>) {
    let n = inst.num_vertices();
    let mut dist: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
    let mut next = vec![vec![usize::MAX; n]; n];
    for v in 0..n {
        dist[v][v] = Some(Rational::zero());
        next[v][v] = v;
    }
    for e in inst.edges() {
        for (a, b) in [(e.u, e.v), (e.v, e.u)] {
            if dist[a][b].as_ref().is_none_or(|d| e.cost < *d) {
                dist[a][b] = Some(e.cost.clone());
                next[a][b] = b;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = dist[i][k].clone() else { continue };
            for j in 0..n {
                let Some(kj) = &dist[k][j] else { continue };
                let via = &ik + kj;
                if dist[i][j].as_ref().is_none_or(|d| via < *d) {
                    dist[i][j] = Some(via);
                    next[i][j] = next[i][k];
                }
            }
        }
    }
    (dist, next)
}

fn path_edges(inst: &SteinerInstance, next: &[Vec<usize>], mut a: usize, b: usize, out: &mut BTreeSet<usize>) {
    while a != b {
        let step = next[a][b];
        let e = inst
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| (e.u == a && e.v == step) || (e.v == a && e.u == step))
            .min_by(|x, y| x.1.cost.cmp(&y.1.cost).then(x.0.cmp(&y.0)))
            .map(|(i, _)| i)
            .expect("next hop is adjacent");
        out.insert(e);
        a = step;
    }
}

/// Optimal Steiner tree by the Dreyfus–Wagner subset DP.
pub fn exact_steiner_tree(inst: &SteinerInstance) -> Result<(Rational, SteinerTree)> {
    let r = inst.terminals().len();
    if r > MAX_EXACT_TERMINALS {
        return Err(Error::TooLarge(format!("{r} terminals for the exact oracle")));
    }
    if !inst.terminals_connected() {
        return Err(Error::InvalidInstance("terminals are not connected".into()));
    }
    if r <= 1 {
        return Ok((Rational::zero(), SteinerTree { edges: Vec::new(), cost: Rational::zero() }));
    }
    let n = inst.num_vertices();
    let (dist, next) = shortest_paths(inst);
    let terms = inst.terminals();
    #[derive(Clone)]
    enum Back {
        Leaf,
        Split(usize),
        Path(usize),
    }
    let full = (1usize << r) - 1;
    let mut dp: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; full + 1];
    let mut back: Vec<Vec<Back>> = vec![vec![Back::Leaf; n]; full + 1];
    let mut split_of: Vec<Vec<usize>> = vec![vec![0; n]; full + 1];
    for (i, &t) in terms.iter().enumerate() {
        for v in 0..n {
            dp[1 << i][v] = dist[t][v].clone();
            back[1 << i][v] = Back::Path(t);
        }
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        // merge two halves at v
        for v in 0..n {
            let mut sub = (mask - 1) & mask;
            while sub > 0 {
                if sub < (mask ^ sub) {
                    if let (Some(a), Some(b)) = (&dp[sub][v], &dp[mask ^ sub][v]) {
                        let total = a + b;
                        if dp[mask][v].as_ref().is_none_or(|d| total < *d) {
                            dp[mask][v] = Some(total);
                            back[mask][v] = Back::Split(sub);
                            split_of[mask][v] = sub;
                        }
                    }
                }
                sub = (sub - 1) & mask;
            }
        }
        // then move the merge point along shortest paths
        let merged = dp[mask].clone();
        for v in 0..n {
            for u in 0..n {
                if u == v {
                    continue;
                }
                if let (Some(a), Some(d)) = (&merged[u], &dist[u][v]) {
                    let total = a + d;
                    if dp[mask][v].as_ref().is_none_or(|c| total < *c) {
                        dp[mask][v] = Some(total);
                        back[mask][v] = Back::Path(u);
                    }
                }
            }
        }
    }
    let root = terms[0];
    let best = dp[full][root].clone().expect("connected terminals");
    let mut edges = BTreeSet::new();
    let mut stack = vec![(full, root)];
    while let Some((mask, v)) = stack.pop() {
        match back[mask][v].clone() {
            Back::Leaf => {}
            Back::Path(u) => {
                path_edges(inst, &next, u, v, &mut edges);
                if mask.count_ones() > 1 {
                    // the value at u came from a merge of the same mask
                    let sub = split_of[mask][u];
                    stack.push((sub, u));
                    stack.push((mask ^ sub, u));
                }
            }
            Back::Split(sub) => {
                stack.push((sub, v));
                stack.push((mask ^ sub, v));
            }
        }
    }
    let edges: Vec<usize> = edges.into_iter().collect();
    let cost: Rational = edges.iter().map(|&i| &inst.edge(i).cost).sum();
    if cost != best {
        return Err(Error::Internal("Dreyfus-Wagner reconstruction mismatch".into()));
    }
    Ok((best, SteinerTree { edges, cost }))
}

/// Cheapest tree by trying every edge subset; tiny instances only.
pub fn brute_force_steiner_cost(inst: &SteinerInstance) -> Result<Rational> {
    let m = inst.edges().len();
    if m > 20 {
        return Err(Error::TooLarge(format!("{m} edges for subset enumeration")));
    }
    let terms = inst.terminals();
    let mut best: Option<Rational> = None;
    for mask in 0u64..(1 << m) {
        let mut uf = UnionFind::new(inst.num_vertices());
        let mut cost = Rational::zero();
        for i in bits(mask) {
            let e = inst.edge(i);
            uf.union(e.u, e.v);
            cost += &e.cost;
        }
        if terms.iter().all(|&t| uf.same(t, terms[0])) && best.as_ref().is_none_or(|b| cost < *b) {
            best = Some(cost);
        }
    }
    best.ok_or_else(|| Error::InvalidInstance("terminals are not connected".into()))
}

/// Terminal-distance MST unfolded into graph edges, then pruned.
pub fn mst_two_approx(inst: &SteinerInstance) -> Result<SteinerTree> {
    if !inst.terminals_connected() {
        return Err(Error::InvalidInstance("terminals are not connected".into()));
    }
    let terms = inst.terminals();
    let (dist, next) = shortest_paths(inst);
    let mut in_tree = vec![false; terms.len()];
    let mut edges = BTreeSet::new();
    if terms.is_empty() {
        return Ok(SteinerTree { edges: Vec::new(), cost: Rational::zero() });
    }
    in_tree[0] = true;
    for _ in 1..terms.len() {
        let mut best: Option<(Rational, usize, usize)> = None;
        for i in (0..terms.len()).filter(|&i| in_tree[i]) {
            for j in (0..terms.len()).filter(|&j| !in_tree[j]) {
                let d = dist[terms[i]][terms[j]].clone().expect("connected");
                if best.as_ref().is_none_or(|b| d < b.0) {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("some terminal remains");
        in_tree[j] = true;
        path_edges(inst, &next, terms[i], terms[j], &mut edges);
    }
    let edges: Vec<usize> = edges.into_iter().collect();
    Ok(SteinerTree::pruned(inst, &edges))
}

/// Terminal sets of the connected parts (through Steiner vertices) of `g` minus `removed`,
/// plus `extra` copies of the terminal set `q`.
fn part_terminals(g: &BlowupGraph, removed: &BTreeSet<usize>, q: u64, extra: i64) -> Vec<u64> {
    let kept: Vec<_> = g.edges().iter().filter(|e| !removed.contains(&e.id)).collect();
    let mut uf = UnionFind::new(kept.len());
    let mut at: HashMap<usize, usize> = HashMap::new();
    for (i, e) in kept.iter().enumerate() {
        for x in [e.u, e.v] {
            if !g.is_terminal(x) {
                if let Some(&j) = at.get(&x) {
                    uf.union(i, j);
                } else {
                    at.insert(x, i);
                }
            }
        }
    }
    let mut sets: BTreeMap<usize, u64> = BTreeMap::new();
    for (i, e) in kept.iter().enumerate() {
        let entry = sets.entry(uf.find(i)).or_default();
        for x in [e.u, e.v] {
            if let Some(p) = g.terminal_position(x) {
                *entry |= 1 << p;
            }
        }
    }
    let mut out: Vec<u64> = sets.into_values().collect();
    out.extend(std::iter::repeat_n(q, extra as usize));
    out
}

fn feasible_parts(n: i64, r: usize, parts: &[u64]) -> bool {
    let full = (1u64 << r) - 1;
    (1..=full).all(|s| {
        let covered: i64 = parts.iter().map(|p| ((p & s).count_ones() as i64 - 1).max(0)).sum();
        let h = n * (s.count_ones() as i64 - 1) - covered;
        h >= 0 && (s != full || h == 0)
    })
}

/// B_Q: all minimal B ⊆ E(𝒳) with (𝒳 ⊛ Q) − B feasible, for a terminal set Q.
pub fn enumerate_minimal_removals(g: &BlowupGraph, q: u64) -> Result<Vec<BTreeSet<usize>>> {
    let ids = g.edge_ids();
    if ids.len() > MAX_REMOVAL_EDGES {
        return Err(Error::TooLarge(format!("{} edges for removal enumeration", ids.len())));
    }
    if g.num_terminals() > 16 {
        return Err(Error::TooLarge("too many terminals for removal enumeration".into()));
    }
    let m = ids.len();
    let to_set = |mask: u64| -> BTreeSet<usize> { bits(mask).map(|i| ids[i]).collect() };
    let feasible: Vec<bool> = (0u64..(1 << m))
        .map(|mask| feasible_parts(g.n(), g.num_terminals(), &part_terminals(g, &to_set(mask), q, g.n())))
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..(1 << m) {
        if !feasible[mask as usize] {
            continue;
        }
        // proper submasks, including the empty set
        let minimal = !feasible[0] && submasks(mask).skip(1).all(|sub| !feasible[sub as usize]);
        let minimal = minimal || mask == 0;
        if minimal {
            out.push(to_set(mask));
        }
    }
    Ok(out)
}

/// Terminals identified into one node; vertices without edges dropped. Returns the node of each
/// vertex and the node count.
fn contracted_nodes(g: &BlowupGraph) -> (HashMap<usize, usize>, usize) {
    let mut node: HashMap<usize, usize> = HashMap::new();
    let mut count = 1;
    for e in g.edges() {
        for x in [e.u, e.v] {
            if g.is_terminal(x) {
                node.insert(x, 0);
            } else if let std::collections::hash_map::Entry::Vacant(e) = node.entry(x) {
                e.insert(count);
                count += 1;
            }
        }
    }
    (node, count)
}

/// Every K whose complement is a spanning tree of the terminal-contracted multigraph.
pub fn enumerate_splitting_sets(g: &BlowupGraph) -> Result<Vec<BTreeSet<usize>>> {
    let ids = g.edge_ids();
    let m = ids.len();
    if m > MAX_SPLITTING_EDGES {
        return Err(Error::TooLarge(format!("{m} edges for splitting-set enumeration")));
    }
    let (node, count) = contracted_nodes(g);
    let mut out = Vec::new();
    for tree in 0u64..(1 << m) {
        if tree.count_ones() as usize != count - 1 {
            continue;
        }
        let mut uf = UnionFind::new(count);
        let acyclic = bits(tree).all(|i| {
            let e = g.edge(ids[i]);
            uf.union(node[&e.u], node[&e.v])
        });
        if acyclic {
            out.push((0..m).filter(|i| tree & (1 << i) == 0).map(|i| ids[i]).collect());
        }
    }
    Ok(out)
}

/// Number of spanning trees of the terminal-contracted multigraph (Kirchhoff).
pub fn spanning_tree_count(g: &BlowupGraph) -> Rational {
    let (node, count) = contracted_nodes(g);
    let k = count - 1;
    let mut lap = vec![vec![Rational::zero(); k]; k];
    for e in g.edges() {
        let (a, b) = (node[&e.u], node[&e.v]);
        if a == b {
            continue;
        }
        for (x, y) in [(a, b), (b, a)] {
            if x > 0 {
                lap[x - 1][x - 1] += int(1);
                if y > 0 {
                    lap[x - 1][y - 1] -= int(1);
                }
            }
        }
    }
    determinant(lap)
}

fn determinant(mut a: Vec<Vec<Rational>>) -> Rational {
    let n = a.len();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        det *= &a[col][col];
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            for c in col..n {
                let d = &f * &a[col][c];
                a[r][c] -= d;
            }
        }
    }
    det
}

/// Cleanup edge `e` is pendant in the piece once `w` is removed: one side of `e` has no terminal.
fn pendant_after(g: &BlowupGraph, piece_edges: &[usize], e: usize, w: &BTreeSet<usize>) -> bool {
    let edge = g.edge(e);
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &id in piece_edges {
        if id == e || w.contains(&id) {
            continue;
        }
        let f = g.edge(id);
        adj.entry(f.u).or_default().push(f.v);
        adj.entry(f.v).or_default().push(f.u);
    }
    let side_has_terminal = |start: usize| {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            if g.is_terminal(x) {
                return true;
            }
            for &y in adj.get(&x).into_iter().flatten() {
                if seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        false
    };
    !side_has_terminal(edge.u) || !side_has_terminal(edge.v)
}

/// All inclusion-minimal sets of core edges of `e`'s piece whose removal makes cleanup edge
/// `e` pendant.
pub fn minimal_witnesses(g: &BlowupGraph, core: &BTreeSet<usize>, e: usize) -> Result<Vec<BTreeSet<usize>>> {
    let piece = g
        .pieces()
        .iter()
        .find(|p| p.edges.contains(&e))
        .ok_or_else(|| Error::InvalidArgument(format!("edge {e} not in the graph")))?;
    let cand: Vec<usize> = piece.edges.iter().copied().filter(|id| core.contains(id)).collect();
    if cand.len() > 20 {
        return Err(Error::TooLarge("piece too large for witness enumeration".into()));
    }
    let mut found: Vec<BTreeSet<usize>> = Vec::new();
    let mut masks: Vec<u64> = (0u64..(1 << cand.len())).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let set: BTreeSet<usize> = bits(mask).map(|i| cand[i]).collect();
        if found.iter().any(|f| f.is_subset(&set)) {
            continue;
        }
        if pendant_after(g, &piece.edges, e, &set) {
            found.push(set);
        }
    }
    Ok(found)
}

/// Φ_K from exhaustively found witnesses; errors if some witness is not unique.
pub fn potential_by_enumeration(g: &BlowupGraph, core: &BTreeSet<usize>) -> Result<Rational> {
    let mut total = Rational::zero();
    for e in g.edges() {
        let size = if core.contains(&e.id) {
            1
        } else {
            let ws = minimal_witnesses(g, core, e.id)?;
            if ws.len() != 1 {
                return Err(Error::Invariant(format!("edge {} has {} minimal witnesses", e.id, ws.len())));
            }
            ws[0].len()
        };
        total += &e.cost * harmonic(size);
    }
    Ok(total)
}

/// Minimum of Φ_K over all splitting sets.
pub fn min_potential_by_enumeration(g: &BlowupGraph) -> Result<Rational> {
    let mut best: Option<Rational> = None;
    for k in enumerate_splitting_sets(g)? {
        let phi = potential_by_enumeration(g, &k)?;
        if best.as_ref().is_none_or(|b| phi < *b) {
            best = Some(phi);
        }
    }
    best.ok_or_else(|| Error::Internal("no splitting set".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_hypertree_mixture, random_piece};
    use crate::instance::{generate_random, Edge};
    use crate::rational::frac;
    use crate::splitting::is_splitting_set;

    fn edge(u: usize, v: usize, c: i64) -> Edge {
        Edge { u, v, cost: int(c) }
    }

    #[test]
    fn two_terminals_give_shortest_path() {
        let inst = SteinerInstance::new(4, vec![0, 3], vec![edge(0, 1, 2), edge(1, 3, 2), edge(0, 2, 1), edge(2, 3, 5)]).unwrap();
        let (cost, tree) = exact_steiner_tree(&inst).unwrap();
        assert_eq!(cost, int(4));
        assert_eq!(tree.edges, vec![0, 1]);
        assert_eq!(mst_two_approx(&inst).unwrap().cost, int(4));
    }

    #[test]
    fn cheap_hub_star() {
        let edges = vec![edge(0, 3, 1), edge(1, 3, 1), edge(2, 3, 1), edge(0, 1, 3), edge(1, 2, 3)];
        let inst = SteinerInstance::new(4, vec![0, 1, 2], edges).unwrap();
        let (cost, tree) = exact_steiner_tree(&inst).unwrap();
        assert_eq!(cost, int(3));
        assert_eq!(tree.edges, vec![0, 1, 2]);
    }

    #[test]
    fn dreyfus_wagner_matches_subset_enumeration() {
        for seed in 0..40 {
            let inst = generate_random(3 + seed as usize % 3, 1 + seed as usize % 3, &frac(1, 3), seed, seed % 4 == 0).unwrap();
            if inst.edges().len() > 16 {
                continue;
            }
            let (cost, tree) = exact_steiner_tree(&inst).unwrap();
            assert_eq!(cost, brute_force_steiner_cost(&inst).unwrap(), "seed {seed}");
            assert!(tree.spans_terminals(&inst) && tree.is_acyclic(&inst));
            let mst = mst_two_approx(&inst).unwrap();
            assert!(mst.cost <= &cost * int(2) && mst.cost >= cost);
        }
    }

    #[test]
    fn size_guards() {
        let inst = generate_random(13, 0, &frac(0, 1), 1, false).unwrap();
        assert!(matches!(exact_steiner_tree(&inst), Err(Error::TooLarge(_))));
        let g = random_piece(2, 12, true, 3).unwrap();
        assert!(matches!(enumerate_minimal_removals(&g, 0b11), Err(Error::TooLarge(_))));
    }

    #[test]
    fn splitting_set_count_is_the_tree_count() {
        for seed in 0..30 {
            let g = random_piece(seed, 1 + seed as usize % 4, seed % 2 == 0, 4).unwrap();
            let all = enumerate_splitting_sets(&g).unwrap();
            assert_eq!(int(all.len() as i64), spanning_tree_count(&g));
            assert!(all.iter().all(|k| is_splitting_set(&g, k)));
        }
        let single = random_piece(0, 0, true, 3).unwrap();
        assert_eq!(enumerate_splitting_sets(&single).unwrap(), vec![BTreeSet::from([0])]);
    }

    #[test]
    fn removals_have_size_n_times_q_minus_one() {
        for seed in 1..25 {
            let (inst, x) = random_hypertree_mixture(seed, 3, 1, 2).unwrap();
            let g = BlowupGraph::from_solution(&inst, &x).unwrap();
            if g.edges().len() > 10 {
                continue;
            }
            let ks = enumerate_splitting_sets(&g).unwrap();
            for q in [0b011u64, 0b111] {
                let removals = enumerate_minimal_removals(&g, q).unwrap();
                assert!(!removals.is_empty());
                for b in &removals {
                    assert_eq!(b.len() as i64, g.n() * (q.count_ones() as i64 - 1));
                }
                for k in &ks {
                    assert!(removals.iter().any(|b| b.is_subset(k)), "B_Q^K empty, seed {seed}");
                }
            }
        }
    }
}
