//! Splitting sets, witness sets, core-edge weights and the potential Φ_K(𝒳).
//!
//! A splitting set K is the complement of a spanning tree of 𝒳 with all terminals contracted.
//! Inside a piece every Steiner node then has exactly one cleanup edge leading towards a
//! terminal (its out-edge), and the cleanup edges form a forest rooted at the terminals.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blowup::{BEdge, BVertex, BlowupGraph, Piece};
use crate::error::{ensure, Error, Result};
use crate::rational::{harmonic_table, int, Rational};
use crate::util::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Random(u64),
    Dp,
    Quasi,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplittingState {
    /// Core edges K.
    pub core: BTreeSet<usize>,
    /// W(e) for every edge; `{e}` for core edges.
    pub witness: BTreeMap<usize, Vec<usize>>,
    /// w(e) for core edges.
    pub weights: BTreeMap<usize, Rational>,
    pub binarized: bool,
}

impl SplittingState {
    pub fn is_core(&self, id: usize) -> bool {
        self.core.contains(&id)
    }

    /// Φ_K(𝒳) = Σ_e c(e)·H(|W(e)|).
    pub fn potential(&self, g: &BlowupGraph) -> Rational {
        potential_of(g, &self.witness)
    }

    pub fn total_weight(&self) -> Rational {
        self.weights.values().sum()
    }
}

pub(crate) fn potential_of(g: &BlowupGraph, witness: &BTreeMap<usize, Vec<usize>>) -> Rational {
    let max = witness.values().map(Vec::len).max().unwrap_or(0);
    let h = harmonic_table(max);
    witness
        .iter()
        .filter(|(id, _)| g.has_edge(**id))
        .map(|(id, w)| &g.edge(*id).cost * &h[w.len()])
        .sum()
}

/// K is a splitting set iff the non-K edges form a spanning tree once all terminals are
/// identified. Vertices without edges are ignored.
pub fn is_splitting_set(g: &BlowupGraph, core: &BTreeSet<usize>) -> bool {
    if core.iter().any(|&id| !g.has_edge(id)) {
        return false;
    }
    let hub = g.vertices().len();
    let node = |v: usize| if g.is_terminal(v) { hub } else { v };
    let mut uf = UnionFind::new(hub + 1);
    let mut touched = BTreeSet::new();
    for e in g.edges() {
        touched.insert(node(e.u));
        touched.insert(node(e.v));
        if !core.contains(&e.id) && !uf.union(node(e.u), node(e.v)) {
            return false;
        }
    }
    touched.into_iter().all(|v| uf.same(v, hub))
}

fn piece_adjacency<'a>(g: &'a BlowupGraph, p: &Piece) -> HashMap<usize, Vec<&'a BEdge>> {
    let mut adj: HashMap<usize, Vec<&BEdge>> = HashMap::new();
    for &id in &p.edges {
        let e = g.edge(id);
        adj.entry(e.u).or_default().push(e);
        adj.entry(e.v).or_default().push(e);
    }
    adj
}

/// Witness sets and weights for a splitting set.
pub fn compute_witnesses_and_weights(g: &BlowupGraph, core: &BTreeSet<usize>) -> Result<SplittingState> {
    if !is_splitting_set(g, core) {
        return Err(Error::InvalidSplittingSet(
            "cleanup edges are not a spanning tree of the terminal-contracted graph".into(),
        ));
    }
    let mut witness: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for p in g.pieces() {
        let adj = piece_adjacency(g, p);
        // orient the cleanup forest towards the terminals
        let mut parent_edge: HashMap<usize, usize> = HashMap::new();
        let mut children: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut stack: Vec<usize> = p.vertices.iter().copied().filter(|&v| g.is_terminal(v)).collect();
        while let Some(x) = stack.pop() {
            for e in &adj[&x] {
                if core.contains(&e.id) || parent_edge.get(&x) == Some(&e.id) {
                    continue;
                }
                let y = e.other(x);
                if g.is_terminal(y) || parent_edge.contains_key(&y) {
                    continue;
                }
                parent_edge.insert(y, e.id);
                children.entry(x).or_default().push(y);
                stack.push(y);
            }
        }
        for &id in &p.edges {
            if core.contains(&id) {
                witness.insert(id, vec![id]);
                continue;
            }
            let e = g.edge(id);
            let tail = if parent_edge.get(&e.u) == Some(&id) { e.u } else { e.v };
            ensure!(parent_edge.get(&tail) == Some(&id), "cleanup edge {id} is not on a terminal path");
            let mut w = BTreeSet::new();
            let mut todo = vec![tail];
            while let Some(x) = todo.pop() {
                for f in &adj[&x] {
                    if core.contains(&f.id) {
                        w.insert(f.id);
                    }
                }
                if let Some(cs) = children.get(&x) {
                    todo.extend(cs);
                }
            }
            ensure!(!w.is_empty(), "cleanup edge {id} has an empty witness set");
            witness.insert(id, w.into_iter().collect());
        }
    }
    let mut weights: BTreeMap<usize, Rational> = core.iter().map(|&id| (id, g.edge(id).cost.clone())).collect();
    for (id, w) in &witness {
        if core.contains(id) {
            continue;
        }
        let share = &g.edge(*id).cost / int(w.len() as i64);
        for f in w {
            *weights.get_mut(f).expect("witness edges are core") += &share;
        }
    }
    let state = SplittingState {
        core: core.clone(),
        witness,
        weights,
        binarized: false,
    };
    ensure!(state.total_weight() == g.cost(), "core weights do not sum to cost(X)");
    Ok(state)
}

/// A blowup graph whose Steiner nodes of degree above three were replaced by caterpillars of
/// zero-cost edges.
#[derive(Clone, Debug)]
pub struct Binarized {
    pub graph: BlowupGraph,
    /// Vertex of the input graph each vertex stands for.
    pub cluster: Vec<usize>,
    pub auxiliary: BTreeSet<usize>,
}

pub fn binarize(g: &BlowupGraph) -> Result<Binarized> {
    let mut vertices: Vec<BVertex> = g.vertices().to_vec();
    let mut cluster: Vec<usize> = (0..vertices.len()).collect();
    let mut edges: Vec<BEdge> = g.edges().to_vec();
    let pos: HashMap<usize, usize> = edges.iter().enumerate().map(|(i, e)| (e.id, i)).collect();
    let mut next_id = g.max_edge_id().map_or(0, |m| m + 1);
    let mut auxiliary = BTreeSet::new();
    let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in g.edges() {
        for x in [e.u, e.v] {
            if !g.is_terminal(x) {
                incident.entry(x).or_default().push(e.id);
            }
        }
    }
    for (v, ids) in incident {
        if ids.len() <= 3 {
            continue;
        }
        let proto = g.edge(ids[0]).clone();
        let mut current = v;
        let d = ids.len();
        // v keeps ids[0], ids[1]; each later node takes one edge, the last one takes two
        for (i, &id) in ids.iter().enumerate().skip(2) {
            if i < d - 1 {
                let w = vertices.len();
                vertices.push(vertices[v].clone());
                cluster.push(v);
                edges.push(BEdge {
                    id: next_id,
                    u: current,
                    v: w,
                    cost: Rational::zero(),
                    origin: None,
                    component: proto.component,
                    copy: proto.copy,
                });
                auxiliary.insert(next_id);
                next_id += 1;
                current = w;
            }
            let e = &mut edges[pos[&id]];
            if e.u == v {
                e.u = current;
            } else {
                e.v = current;
            }
        }
    }
    Ok(Binarized {
        graph: BlowupGraph::new(g.n(), vertices, edges)?,
        cluster,
        auxiliary,
    })
}

/// Maps a splitting set of the binarized graph back: every original Steiner node keeps the
/// cheapest of its clusters' cleanup paths and the first edge of every other path becomes core.
pub fn map_back(g: &BlowupGraph, bin: &Binarized, state: &SplittingState) -> Result<SplittingState> {
    let bg = &bin.graph;
    // out-edge of every Steiner node of the binarized graph
    let mut out: HashMap<usize, usize> = HashMap::new();
    for p in bg.pieces() {
        let adj = piece_adjacency(bg, p);
        let mut stack: Vec<usize> = p.vertices.iter().copied().filter(|&v| bg.is_terminal(v)).collect();
        while let Some(x) = stack.pop() {
            for e in &adj[&x] {
                let y = e.other(x);
                if state.is_core(e.id) || bg.is_terminal(y) || out.contains_key(&y) || out.get(&x) == Some(&e.id) {
                    continue;
                }
                out.insert(y, e.id);
                stack.push(y);
            }
        }
    }
    let mut best: BTreeMap<usize, (Rational, usize)> = BTreeMap::new();
    for &x in out.keys() {
        let mut cost = Rational::zero();
        let mut exit = None;
        let mut at = x;
        loop {
            let id = out[&at];
            let e = bg.edge(id);
            cost += &e.cost;
            if exit.is_none() && !bin.auxiliary.contains(&id) {
                exit = Some(id);
            }
            at = e.other(at);
            if bg.is_terminal(at) {
                break;
            }
        }
        let exit = exit.ok_or_else(|| Error::Internal("cleanup path without an original edge".into()))?;
        let key = bin.cluster[x];
        let better = match best.get(&key) {
            None => true,
            Some((c, id)) => cost < *c || (cost == *c && exit < *id),
        };
        if better {
            best.insert(key, (cost, exit));
        }
    }
    let cleanup: BTreeSet<usize> = best.values().map(|(_, id)| *id).collect();
    let core: BTreeSet<usize> = g.edge_ids().into_iter().filter(|id| !cleanup.contains(id)).collect();
    compute_witnesses_and_weights(g, &core)
}

/// Per piece: the root edge (smallest id) is core and every Steiner node picks one of its edges
/// pointing away from the root edge uniformly at random as cleanup.
pub fn random_splitting_set(g: &BlowupGraph, seed: u64) -> Result<SplittingState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cleanup = BTreeSet::new();
    for p in g.pieces() {
        let adj = piece_adjacency(g, p);
        let root = g.edge(p.edges[0]);
        let mut toward: HashMap<usize, usize> = HashMap::from([(root.u, root.id), (root.v, root.id)]);
        let mut order = vec![root.u, root.v];
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            i += 1;
            for e in &adj[&x] {
                let y = e.other(x);
                if e.id != toward[&x] && !toward.contains_key(&y) {
                    toward.insert(y, e.id);
                    order.push(y);
                }
            }
        }
        let mut steiner: Vec<usize> = p.vertices.iter().copied().filter(|&v| !g.is_terminal(v)).collect();
        steiner.sort_unstable();
        for v in steiner {
            let outgoing: Vec<usize> = adj[&v].iter().map(|e| e.id).filter(|&id| id != toward[&v]).collect();
            let pick = outgoing[rng.gen_range(0..outgoing.len())];
            cleanup.insert(pick);
        }
    }
    let core = g.edge_ids().into_iter().filter(|id| !cleanup.contains(id)).collect();
    compute_witnesses_and_weights(g, &core)
}

/// Per star the cheapest edge (smallest id on ties) is the only cleanup edge. Single edges
/// between two terminals are core.
pub fn quasi_bipartite_splitting_set(g: &BlowupGraph) -> Result<SplittingState> {
    let mut cleanup = BTreeSet::new();
    for p in g.pieces() {
        let steiner: Vec<usize> = p.vertices.iter().copied().filter(|&v| !g.is_terminal(v)).collect();
        match steiner.len() {
            0 => {}
            1 if p.vertices.len() == p.edges.len() + 1 && p.edges.len() == p.size() => {
                let cheapest = p
                    .edges
                    .iter()
                    .min_by(|a, b| g.edge(**a).cost.cmp(&g.edge(**b).cost).then(a.cmp(b)))
                    .expect("stars have edges");
                cleanup.insert(*cheapest);
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "piece with edge {} is not a star",
                    p.edges[0]
                )))
            }
        }
    }
    let core = g.edge_ids().into_iter().filter(|id| !cleanup.contains(id)).collect();
    compute_witnesses_and_weights(g, &core)
}

/// A splitting set minimizing Φ_K(𝒳), by dynamic programming over each piece rooted at a
/// terminal leaf. Steiner nodes must have degree at most three.
pub fn optimal_splitting_set(g: &BlowupGraph) -> Result<SplittingState> {
    let mut cleanup = BTreeSet::new();
    let mut expected = Rational::zero();
    for p in g.pieces() {
        let dp = PieceDp::new(g, p)?;
        let (value, edges) = dp.solve();
        expected += value;
        cleanup.extend(edges);
    }
    let core = g.edge_ids().into_iter().filter(|id| !cleanup.contains(id)).collect();
    let state = compute_witnesses_and_weights(g, &core)?;
    ensure!(state.potential(g) == expected, "DP value disagrees with the potential of its splitting set");
    Ok(state)
}

/// Strategy dispatch. `Dp` binarizes first when needed and maps the result back.
pub fn choose_splitting_set(g: &BlowupGraph, strategy: Strategy) -> Result<SplittingState> {
    match strategy {
        Strategy::Random(seed) => random_splitting_set(g, seed),
        Strategy::Quasi => quasi_bipartite_splitting_set(g),
        Strategy::Dp => {
            let bin = binarize(g)?;
            if bin.auxiliary.is_empty() {
                return optimal_splitting_set(g);
            }
            let on_bin = optimal_splitting_set(&bin.graph)?;
            let mut mapped = map_back(g, &bin, &on_bin)?;
            ensure!(
                mapped.potential(g) <= on_bin.potential(&bin.graph),
                "mapping a binarized splitting set back increased the potential"
            );
            mapped.binarized = false;
            Ok(mapped)
        }
    }
}

/// Cost options of one child edge.
struct ChildEdge {
    id: usize,
    cost: Rational,
    /// `None` for a terminal child.
    child: Option<usize>,
}

/// Tables per Steiner node v of a piece rooted at a terminal leaf:
/// `a[v][α]`: cheapest cost of the edges below v when v's out-edge goes down into a child and
/// α core edges outside the subtree touch v's in-tree;
/// `b[v][β]`: cheapest cost of the edges below v when v's out-edge is its parent edge and β
/// core edges touch v's in-tree.
struct PieceDp {
    m: usize,
    h: Vec<Rational>,
    root_edge: Option<ChildEdge>,
    children: HashMap<usize, Vec<ChildEdge>>,
    a: HashMap<usize, Vec<Option<Rational>>>,
    b: HashMap<usize, Vec<Option<Rational>>>,
}

type Table = Vec<Option<Rational>>;

fn relax(slot: &mut Option<Rational>, value: Rational) -> bool {
    if slot.as_ref().is_none_or(|cur| value < *cur) {
        *slot = Some(value);
        true
    } else {
        false
    }
}

impl PieceDp {
    fn new(g: &BlowupGraph, p: &Piece) -> Result<Self> {
        let adj = piece_adjacency(g, p);
        let m = p.edges.len();
        for (&v, list) in &adj {
            if !g.is_terminal(v) && list.len() > 3 {
                return Err(Error::InvalidArgument(format!("Steiner vertex {v} has degree {}; binarize first", list.len())));
            }
        }
        let rho = *p.vertices.iter().find(|&&v| g.is_terminal(v)).expect("pieces contain terminals");
        let mut dp = PieceDp {
            m,
            h: harmonic_table(m + 1),
            root_edge: None,
            children: HashMap::new(),
            a: HashMap::new(),
            b: HashMap::new(),
        };
        let first = adj[&rho][0];
        let top = first.other(rho);
        dp.root_edge = Some(ChildEdge {
            id: first.id,
            cost: first.cost.clone(),
            child: (!g.is_terminal(top)).then_some(top),
        });
        let mut order = Vec::new();
        if !g.is_terminal(top) {
            let mut stack = vec![(top, first.id)];
            while let Some((v, via)) = stack.pop() {
                order.push(v);
                let mut kids = Vec::new();
                for e in &adj[&v] {
                    if e.id == via {
                        continue;
                    }
                    let c = e.other(v);
                    let steiner = !g.is_terminal(c);
                    kids.push(ChildEdge {
                        id: e.id,
                        cost: e.cost.clone(),
                        child: steiner.then_some(c),
                    });
                    if steiner {
                        stack.push((c, e.id));
                    }
                }
                kids.sort_by_key(|k| k.id);
                dp.children.insert(v, kids);
            }
        }
        for &v in order.iter().rev() {
            let (a, b) = dp.tables(v);
            dp.a.insert(v, a);
            dp.b.insert(v, b);
        }
        Ok(dp)
    }

    fn cost_h(&self, cost: &Rational, l: usize) -> Rational {
        cost * &self.h[l]
    }

    /// (k, cost, is core) options for a child edge that is not v's out-edge.
    fn side_options(&self, ce: &ChildEdge) -> Vec<(usize, Rational, bool)> {
        match ce.child {
            None => vec![(1, ce.cost.clone(), true)],
            Some(c) => {
                let mut opts = Vec::new();
                if let Some(a1) = &self.a[&c][1] {
                    opts.push((1, &ce.cost + a1, true));
                }
                for (beta, val) in self.b[&c].iter().enumerate() {
                    if let Some(val) = val {
                        opts.push((beta, self.cost_h(&ce.cost, beta) + val, false));
                    }
                }
                opts
            }
        }
    }

    /// Cost of a child edge used as v's out-edge with witness size x.
    fn out_cost(&self, ce: &ChildEdge, x: usize) -> Option<Rational> {
        if x == 0 || x > self.m {
            return None;
        }
        let own = self.cost_h(&ce.cost, x);
        match ce.child {
            None => Some(own),
            Some(c) => self.a[&c][x].as_ref().map(|a| own + a),
        }
    }

    fn convolve(&self, options: &[Vec<(usize, Rational, bool)>]) -> Table {
        let mut table: Table = vec![None; self.m + 2];
        table[0] = Some(Rational::zero());
        for opts in options {
            let mut next: Table = vec![None; self.m + 2];
            for (k, base) in table.iter().enumerate() {
                let Some(base) = base else { continue };
                for (d, c, _) in opts {
                    if k + d < next.len() {
                        relax(&mut next[k + d], base + c);
                    }
                }
            }
            table = next;
        }
        table
    }

    fn tables(&self, v: usize) -> (Table, Table) {
        let kids = &self.children[&v];
        let side: Vec<Vec<(usize, Rational, bool)>> = kids.iter().map(|k| self.side_options(k)).collect();
        let b = self.convolve(&side);
        let mut a: Table = vec![None; self.m + 2];
        for o in 0..kids.len() {
            let others: Vec<Vec<(usize, Rational, bool)>> =
                side.iter().enumerate().filter(|(i, _)| *i != o).map(|(_, s)| s.clone()).collect();
            let conv = self.convolve(&others);
            for alpha in 1..=self.m {
                for (k, base) in conv.iter().enumerate() {
                    let Some(base) = base else { continue };
                    if let Some(oc) = self.out_cost(&kids[o], alpha + k) {
                        relax(&mut a[alpha], base + oc);
                    }
                }
            }
        }
        (a, b)
    }

    /// Optimal value and cleanup edges.
    fn solve(&self) -> (Rational, Vec<usize>) {
        let root = self.root_edge.as_ref().expect("root edge set");
        let Some(top) = root.child else {
            return (root.cost.clone(), Vec::new());
        };
        let mut best: Option<(Rational, Option<usize>)> = None;
        if let Some(a1) = &self.a[&top][1] {
            best = Some((&root.cost + a1, None));
        }
        for (beta, val) in self.b[&top].iter().enumerate() {
            if let Some(val) = val {
                let total = self.cost_h(&root.cost, beta) + val;
                if best.as_ref().is_none_or(|(c, _)| total < *c) {
                    best = Some((total, Some(beta)));
                }
            }
        }
        let (value, choice) = best.expect("a splitting set always exists");
        let mut cleanup = Vec::new();
        match choice {
            None => self.explain_a(top, 1, &mut cleanup),
            Some(beta) => {
                cleanup.push(root.id);
                self.explain_b(top, beta, &mut cleanup);
            }
        }
        (value, cleanup)
    }

    /// Picks, for each child in order, an option so that the chosen sizes sum to `total` at
    /// the tabulated optimum; recurses into the children.
    fn explain_side(&self, kids: &[&ChildEdge], total: usize, cleanup: &mut Vec<usize>) {
        let options: Vec<Vec<(usize, Rational, bool)>> = kids.iter().map(|k| self.side_options(k)).collect();
        let mut prefixes = vec![self.convolve(&[])];
        for i in 0..options.len() {
            prefixes.push(self.convolve(&options[..=i]));
        }
        let mut remaining = total;
        for i in (0..kids.len()).rev() {
            let target = prefixes[i + 1][remaining].clone().expect("reachable entry");
            let (k, _, core) = options[i]
                .iter()
                .find(|(k, c, _)| {
                    *k <= remaining && prefixes[i][remaining - k].as_ref().is_some_and(|p| p + c == target)
                })
                .expect("consistent tables")
                .clone();
            remaining -= k;
            let ce = kids[i];
            if let Some(c) = ce.child {
                if core {
                    // the child's out-edge goes down
                    self.explain_a(c, 1, cleanup);
                } else {
                    cleanup.push(ce.id);
                    self.explain_b(c, k, cleanup);
                }
            }
        }
    }

    fn explain_b(&self, v: usize, beta: usize, cleanup: &mut Vec<usize>) {
        let kids: Vec<&ChildEdge> = self.children[&v].iter().collect();
        self.explain_side(&kids, beta, cleanup);
    }

    fn explain_a(&self, v: usize, alpha: usize, cleanup: &mut Vec<usize>) {
        let target = self.a[&v][alpha].clone().expect("reachable entry");
        let kids = &self.children[&v];
        for o in 0..kids.len() {
            let others: Vec<&ChildEdge> = kids.iter().enumerate().filter(|(i, _)| *i != o).map(|(_, k)| k).collect();
            let side: Vec<Vec<(usize, Rational, bool)>> = others.iter().map(|k| self.side_options(k)).collect();
            let conv = self.convolve(&side);
            for (k, base) in conv.iter().enumerate() {
                let Some(base) = base else { continue };
                let Some(oc) = self.out_cost(&kids[o], alpha + k) else { continue };
                if base + &oc == target {
                    cleanup.push(kids[o].id);
                    if let Some(c) = kids[o].child {
                        self.explain_a(c, alpha + k, cleanup);
                    }
                    self.explain_side(&others, k, cleanup);
                    return;
                }
            }
        }
        unreachable!("tabulated optimum must be attained");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_piece, star_piece};
    use crate::oracles::{enumerate_splitting_sets, min_potential_by_enumeration, minimal_witnesses};
    use crate::rational::{frac, harmonic, int};

    fn uniform_star(k: usize) -> BlowupGraph {
        star_piece(&vec![int(1); k]).unwrap()
    }

    #[test]
    fn quasi_rule_on_uniform_stars() {
        for (k, phi) in [(2, int(2)), (3, frac(7, 2)), (5, frac(73, 12))] {
            let g = uniform_star(k);
            let s = quasi_bipartite_splitting_set(&g).unwrap();
            assert_eq!(s.potential(&g), phi);
            assert_eq!(s.witness[&0].len(), k - 1);
            assert!(s.potential(&g) * int(60) <= g.cost() * int(73));
        }
        let g = uniform_star(5);
        let s = quasi_bipartite_splitting_set(&g).unwrap();
        assert_eq!(s.potential(&g) / g.cost(), frac(73, 60));
    }

    #[test]
    fn quasi_ratio_peaks_at_five() {
        let ratio = |k: usize| (int(k as i64 - 1) + harmonic(k - 1)) / int(k as i64);
        for k in 2..12 {
            assert!(ratio(k) <= frac(73, 60), "k = {k}");
        }
        assert_eq!(ratio(5), frac(73, 60));
        assert!(ratio(4) < ratio(5) && ratio(6) < ratio(5));
    }

    #[test]
    fn quasi_rule_rejects_non_stars() {
        let g = random_piece(3, 3, true, 3).unwrap();
        assert!(matches!(quasi_bipartite_splitting_set(&g), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_edge_piece() {
        let g = random_piece(1, 0, true, 3).unwrap();
        let c = g.edges()[0].cost.clone();
        for strategy in [Strategy::Dp, Strategy::Quasi, Strategy::Random(7)] {
            let s = choose_splitting_set(&g, strategy).unwrap();
            assert_eq!(s.core, BTreeSet::from([0]));
            assert_eq!(s.potential(&g), c);
            assert_eq!(s.weights[&0], c);
        }
    }

    #[test]
    fn binarize_four_leaf_star() {
        let g = star_piece(&[int(1), int(2), int(3), int(4)]).unwrap();
        let bin = binarize(&g).unwrap();
        assert_eq!(bin.auxiliary.len(), 1);
        let steiner = bin.graph.vertices().iter().filter(|v| !v.terminal).count();
        assert_eq!(steiner, 2);
        assert_eq!(bin.graph.cost(), g.cost());
        for v in 0..bin.graph.vertices().len() {
            if !bin.graph.is_terminal(v) {
                assert_eq!(bin.graph.edges().iter().filter(|e| e.u == v || e.v == v).count(), 3);
            }
        }
    }

    #[test]
    fn binarize_keeps_binary_graphs() {
        let g = random_piece(11, 4, true, 3).unwrap();
        let bin = binarize(&g).unwrap();
        assert!(bin.auxiliary.is_empty());
        assert_eq!(bin.graph, g);
    }

    #[test]
    fn invalid_core_is_rejected() {
        let g = uniform_star(3);
        assert!(!is_splitting_set(&g, &BTreeSet::from([0])));
        assert!(matches!(
            compute_witnesses_and_weights(&g, &BTreeSet::from([0])),
            Err(Error::InvalidSplittingSet(_))
        ));
    }

    #[test]
    fn weights_sum_to_cost() {
        for seed in 0..40 {
            let g = random_piece(seed, 1 + seed as usize % 5, seed % 2 == 0, 4).unwrap();
            for s in [random_splitting_set(&g, seed).unwrap(), choose_splitting_set(&g, Strategy::Dp).unwrap()] {
                let total: Rational = s.core.iter().map(|e| s.weights[e].clone()).sum();
                assert_eq!(total, g.cost());
            }
        }
    }

    #[test]
    fn witnesses_are_the_unique_minimal_sets() {
        for seed in 0..30 {
            let g = random_piece(seed, 2 + seed as usize % 3, seed % 3 != 0, 4).unwrap();
            let s = random_splitting_set(&g, seed * 7 + 1).unwrap();
            for e in g.edge_ids() {
                if s.is_core(e) {
                    assert_eq!(s.witness[&e], vec![e]);
                    continue;
                }
                let expected: BTreeSet<usize> = s.witness[&e].iter().copied().collect();
                assert_eq!(minimal_witnesses(&g, &s.core, e).unwrap(), vec![expected], "seed {seed} edge {e}");
            }
        }
    }

    #[test]
    fn dp_matches_exhaustive_minimum() {
        for seed in 0..60 {
            let g = random_piece(seed, 1 + seed as usize % 3, true, 3).unwrap();
            let dp = optimal_splitting_set(&g).unwrap();
            assert_eq!(dp.potential(&g), min_potential_by_enumeration(&g).unwrap(), "seed {seed}");
        }
    }

    #[test]
    fn dp_rejects_high_degree() {
        let g = uniform_star(4);
        assert!(matches!(optimal_splitting_set(&g), Err(Error::InvalidArgument(_))));
        assert!(choose_splitting_set(&g, Strategy::Dp).is_ok());
    }

    #[test]
    fn dp_beats_random_choices() {
        for seed in 0..20 {
            let g = random_piece(seed, 3, true, 3).unwrap();
            let best = optimal_splitting_set(&g).unwrap().potential(&g);
            for r in 0..10 {
                assert!(best <= random_splitting_set(&g, r).unwrap().potential(&g));
            }
        }
    }

    #[test]
    fn random_sets_are_splitting_sets() {
        for seed in 0..30 {
            let g = random_piece(seed, 3, true, 3).unwrap();
            let all = enumerate_splitting_sets(&g).unwrap();
            let s = random_splitting_set(&g, seed).unwrap();
            assert!(all.contains(&s.core));
            assert!(s.is_core(g.edges()[0].id), "root edge must be core");
        }
    }
}
