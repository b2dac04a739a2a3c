//! Separation for the component LP and the gammoid independence oracle, both via max-flow.
//!
//! Network D: one node per vertex of 𝒳 plus source s and sink t. Each member C of Γ gets an arc
//! s → r_C (r_C its smallest vertex) and its edges oriented away from r_C, all of capacity 1;
//! each terminal v gets v → t of capacity y_v = |{C : v ∈ C}| − N. The maximum
//! s-(Q ∪ {t}) flow equals y(R) + N + min_{S ⊇ Q} h(S).

use std::collections::{HashMap, HashSet};

use num_traits::{Signed, Zero};

use crate::blowup::{BlowupGraph, FamilyMember};
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::rational::{int, Rational};
use crate::util::bits;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub set: u64,
    pub slack: i64,
}

#[derive(Clone, Debug)]
pub struct SeparationNetwork {
    net: FlowNetwork<i64>,
    s: usize,
    t: usize,
    /// Node of each terminal position.
    terminal_nodes: Vec<usize>,
    y: Vec<i64>,
    n: i64,
    /// Node of each graph vertex that appears in the family.
    vertex_nodes: HashMap<usize, usize>,
    total_capacity: i64,
}

impl SeparationNetwork {
    /// Builds D from a component family over `num_terminals` terminal positions. Terminal
    /// vertex ids must be supplied to place them; other vertices get nodes lazily.
    pub fn from_family(n: i64, terminal_vertices: &[usize], family: &[FamilyMember]) -> Result<Self> {
        let r = terminal_vertices.len();
        let mut y = vec![-n; r];
        for m in family {
            for i in bits(m.terminals) {
                y[i] += 1;
            }
        }
        if let Some(i) = y.iter().position(|&v| v < 0) {
            return Err(Error::NegativeDegree { terminal: i });
        }
        let mut net = FlowNetwork::new(2 + r);
        let (s, t) = (0, 1);
        let terminal_nodes: Vec<usize> = (2..2 + r).collect();
        let mut vertex_nodes: HashMap<usize, usize> =
            terminal_vertices.iter().enumerate().map(|(i, &v)| (v, 2 + i)).collect();
        let mut total = 0i64;
        for m in family {
            let mut node = |v: usize, net: &mut FlowNetwork<i64>| -> usize {
                *vertex_nodes.entry(v).or_insert_with(|| net.add_node())
            };
            let root = node(m.root, &mut net);
            net.add_arc(s, root, 1);
            total += 1;
            for &(a, b, _) in &m.arcs {
                let (na, nb) = (node(a, &mut net), node(b, &mut net));
                net.add_arc(na, nb, 1);
                total += 1;
            }
        }
        for (i, &tn) in terminal_nodes.iter().enumerate() {
            net.add_arc(tn, t, y[i]);
            total += y[i];
        }
        Ok(SeparationNetwork {
            net,
            s,
            t,
            terminal_nodes,
            y,
            n,
            vertex_nodes,
            total_capacity: total,
        })
    }

    pub fn build(g: &BlowupGraph) -> Result<Self> {
        Self::build_without(g, &HashSet::new())
    }

    /// Network for 𝒳 − F.
    pub fn build_without(g: &BlowupGraph, removed: &HashSet<usize>) -> Result<Self> {
        Self::from_family(g.n(), g.terminals(), &g.family(removed))
    }

    pub fn y(&self) -> &[i64] {
        &self.y
    }

    pub fn arc_count(&self) -> usize {
        self.net.arc_count()
    }

    pub fn network(&self) -> &FlowNetwork<i64> {
        &self.net
    }

    pub fn source(&self) -> usize {
        self.s
    }

    pub fn sink(&self) -> usize {
        self.t
    }

    pub fn terminal_node(&self, pos: usize) -> usize {
        self.terminal_nodes[pos]
    }

    pub fn vertex_node(&self, v: usize) -> Option<usize> {
        self.vertex_nodes.get(&v).copied()
    }

    /// Maximum s-(Q ∪ {t}) flow and the minimal sink side U* of a minimum cut (s ∉ U*),
    /// as a node indicator over this network's nodes.
    pub fn max_flow(&self, q: u64) -> (i64, Vec<bool>) {
        let mut net = self.net.clone();
        let sink = net.add_node();
        let big = self.total_capacity + 1;
        net.add_arc(self.t, sink, big);
        for i in bits(q) {
            net.add_arc(self.terminal_nodes[i], sink, big);
        }
        let value = net.max_flow(self.s, sink);
        let mut side = net.reaches_sink(sink);
        side.pop();
        (value, side)
    }

    /// min_{S ⊇ Q} h(S) with the minimizer S* = U* ∩ R.
    pub fn min_slack_over_supersets(&self, q: u64) -> (i64, u64) {
        let (value, side) = self.max_flow(q);
        let mut set = 0u64;
        for (i, &node) in self.terminal_nodes.iter().enumerate() {
            if side[node] {
                set |= 1 << i;
            }
        }
        let y_sum: i64 = self.y.iter().sum();
        (value - y_sum - self.n, set | q)
    }
}

pub fn build_separation_digraph(g: &BlowupGraph) -> Result<SeparationNetwork> {
    SeparationNetwork::build(g)
}

/// min_{S ⊇ Q} h_{𝒳−F}(S) and a minimizer.
pub fn min_slack_over_supersets(g: &BlowupGraph, removed: &HashSet<usize>, q: u64) -> Result<(i64, u64)> {
    if q == 0 {
        return Err(Error::InvalidArgument("Q must be nonempty".into()));
    }
    Ok(SeparationNetwork::build_without(g, removed)?.min_slack_over_supersets(q))
}

/// Most violated subset found by one flow per terminal; `None` if all slacks are nonnegative.
/// Ties on slack go to the smaller bitmask.
pub fn separate_family(n: i64, terminal_vertices: &[usize], family: &[FamilyMember]) -> Result<Option<Violation>> {
    let net = SeparationNetwork::from_family(n, terminal_vertices, family)?;
    let mut best: Option<Violation> = None;
    for v in 0..terminal_vertices.len() {
        let (slack, set) = net.min_slack_over_supersets(1 << v);
        if slack < 0 {
            let better = match &best {
                None => true,
                Some(b) => slack < b.slack || (slack == b.slack && set < b.set),
            };
            if better {
                best = Some(Violation { set, slack });
            }
        }
    }
    Ok(best)
}

/// Outcome of separating a blowup graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationReport {
    pub violation: Option<Violation>,
    /// h(R); zero for feasible graphs.
    pub full_slack: i64,
}

impl SeparationReport {
    pub fn feasible(&self) -> bool {
        self.violation.is_none() && self.full_slack == 0
    }
}

/// Runs `min_slack_over_supersets({v})` for every terminal and reports the most violated set.
pub fn separate(g: &BlowupGraph) -> Result<SeparationReport> {
    separate_without(g, &HashSet::new())
}

pub fn separate_without(g: &BlowupGraph, removed: &HashSet<usize>) -> Result<SeparationReport> {
    let family = g.family(removed);
    let full_slack = crate::blowup::slack_of(g.n(), &family, g.all_terminals());
    let best = separate_family(g.n(), g.terminals(), &family)?;
    Ok(SeparationReport {
        violation: best,
        full_slack,
    })
}

/// Gammoid form of the removal matroid M_Q: every edge f of 𝒳 is split by a node v_f, and
/// ρ(U) = maxflow(D + {s → v_f : f ∈ U}) − maxflow(D).
#[derive(Clone, Debug)]
pub struct GammoidOracle {
    net: FlowNetwork<i64>,
    s: usize,
    sink: usize,
    split_nodes: HashMap<usize, usize>,
    baseline: i64,
    target_rank: i64,
}

impl GammoidOracle {
    pub fn new(g: &BlowupGraph, q: u64) -> Result<Self> {
        if q == 0 || q & !g.all_terminals() != 0 {
            return Err(Error::InvalidArgument("Q must be a nonempty terminal set".into()));
        }
        let family = g.family(&HashSet::new());
        let y = g.y_values();
        if let Some(i) = y.iter().position(|&v| v < 0) {
            return Err(Error::NegativeDegree { terminal: i });
        }
        let mut net = FlowNetwork::new(2);
        let (s, t) = (0, 1);
        let mut nodes: HashMap<usize, usize> = HashMap::new();
        let mut split_nodes = HashMap::new();
        let mut total = 0i64;
        for m in &family {
            let mut node = |v: usize, net: &mut FlowNetwork<i64>| *nodes.entry(v).or_insert_with(|| net.add_node());
            let root = node(m.root, &mut net);
            net.add_arc(s, root, 1);
            total += 1;
            for &(a, b, id) in &m.arcs {
                let (na, nb) = (node(a, &mut net), node(b, &mut net));
                let vf = net.add_node();
                net.add_arc(na, vf, 1);
                net.add_arc(vf, nb, 1);
                split_nodes.insert(id, vf);
                total += 2;
            }
        }
        let sink = net.add_node();
        for (i, &v) in g.terminals().iter().enumerate() {
            let node = *nodes.entry(v).or_insert_with(|| net.add_node());
            net.add_arc(node, t, y[i]);
            total += y[i];
            if q & (1 << i) != 0 {
                net.add_arc(node, sink, total + g.edges().len() as i64 + 1);
            }
        }
        net.add_arc(t, sink, i64::MAX / 4);
        let baseline = net.max_flow(s, sink);
        Ok(GammoidOracle {
            net,
            s,
            sink,
            split_nodes,
            baseline,
            target_rank: g.n() * (q.count_ones() as i64 - 1),
        })
    }

    /// N(|Q| − 1).
    pub fn full_rank(&self) -> i64 {
        self.target_rank
    }

    /// ρ′(X′): the baseline flow, equal to r_Q(∅) + y(R) + N.
    pub fn baseline(&self) -> i64 {
        self.baseline
    }

    pub fn rank(&self, u: &[usize]) -> i64 {
        let mut net = self.net.clone();
        for id in u {
            net.add_arc(self.s, self.split_nodes[id], 1);
        }
        net.max_flow(self.s, self.sink)
    }

    pub fn is_independent(&self, u: &[usize]) -> bool {
        let distinct: HashSet<&usize> = u.iter().collect();
        distinct.len() == u.len() && self.rank(u) == u.len() as i64
    }

    /// Greedy over `order`: keeps an element iff it raises the rank, detected by one augmenting
    /// path on the maintained maximum flow. Stops at full rank.
    pub fn greedy(&self, order: &[usize]) -> Result<Vec<usize>> {
        let mut net = self.net.clone();
        let mut chosen = Vec::new();
        for &id in order {
            if chosen.len() as i64 == self.target_rank {
                break;
            }
            let arc = net.add_arc(self.s, self.split_nodes[&id], 1);
            if net.augment_once(self.s, self.sink).is_some() {
                chosen.push(id);
            } else {
                net.disable_arc(arc);
            }
        }
        if (chosen.len() as i64) < self.target_rank {
            return Err(Error::Invariant(format!(
                "ground set has rank {} < N(|Q|-1) = {}",
                chosen.len(),
                self.target_rank
            )));
        }
        Ok(chosen)
    }
}

/// Separation for a fractional solution `x` over components given by terminal masks:
/// returns the most violated subset S and its slack `(|S|−1) − Σ x_C (|S∩C|−1)⁺ < 0`.
///
/// Uses a rational-capacity network with one gadget node per component (arc s → c_C and arcs
/// c_C → v for v ∈ C, all of capacity x_C) and v → t of capacity x(δ(v)) − 1. If some
/// x(δ(v)) < 1, the set R ∖ {v} is violated under the equality row and is returned directly.
pub fn separate_fractional(columns: &[(u64, Rational)], num_terminals: usize) -> Option<(u64, Rational)> {
    let r = num_terminals;
    let full: u64 = (1u64 << r) - 1;
    let mut y = vec![int(-1); r];
    for (mask, x) in columns {
        for i in bits(*mask) {
            y[i] += x;
        }
    }
    let mut worst: Option<(u64, Rational)> = None;
    let consider = |set: u64, slack: Rational, worst: &mut Option<(u64, Rational)>| {
        if !slack.is_negative() {
            return;
        }
        let better = match worst {
            None => true,
            Some((ws, wv)) => slack < *wv || (slack == *wv && set < *ws),
        };
        if better {
            *worst = Some((set, slack));
        }
    };
    if y.iter().any(|v| v.is_negative()) {
        for (i, v) in y.iter().enumerate() {
            if v.is_negative() && r >= 2 {
                consider(full & !(1 << i), v.clone(), &mut worst);
            }
        }
        return worst;
    }
    let mut base = FlowNetwork::<Rational>::new(2 + r);
    let (s, t) = (0, 1);
    let mut total = Rational::zero();
    for (mask, x) in columns {
        if x.is_zero() {
            continue;
        }
        let c = base.add_node();
        base.add_arc(s, c, x.clone());
        total += x;
        for i in bits(*mask) {
            base.add_arc(c, 2 + i, x.clone());
            total += x;
        }
    }
    for (i, yi) in y.iter().enumerate() {
        base.add_arc(2 + i, t, yi.clone());
        total += yi;
    }
    let y_sum: Rational = y.iter().sum();
    let big = total + int(1);
    for v in 0..r {
        let mut net = base.clone();
        let sink = net.add_node();
        net.add_arc(t, sink, big.clone());
        net.add_arc(2 + v, sink, big.clone());
        let value = net.max_flow(s, sink);
        let slack = value - &y_sum - int(1);
        if slack.is_negative() {
            let side = net.reaches_sink(sink);
            let mut set = 1u64 << v;
            for i in 0..r {
                if side[2 + i] {
                    set |= 1 << i;
                }
            }
            consider(set, slack, &mut worst);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn fractional_separation_finds_violated_pair() {
        // two copies of the pair {0,1} at 1 each plus {1,2} at 0: pair {0,1} overcovered
        let cols = vec![(0b011u64, int(2)), (0b110u64, int(0))];
        let (set, slack) = separate_fractional(&cols, 3).unwrap();
        assert_eq!(slack, int(-1));
        assert_eq!(set & 0b011, 0b011);
    }

    #[test]
    fn fractional_separation_accepts_triangle_half() {
        // x = 1/2 on each pair of a triangle is feasible
        let cols = vec![(0b011u64, frac(1, 2)), (0b101u64, frac(1, 2)), (0b110u64, frac(1, 2))];
        assert_eq!(separate_fractional(&cols, 3), None);
    }

    #[test]
    fn low_degree_terminal_yields_complement_cut() {
        let cols = vec![(0b011u64, int(1)), (0b110u64, frac(1, 2))];
        let (set, slack) = separate_fractional(&cols, 4).unwrap();
        assert_eq!(set, 0b0111);
        assert_eq!(slack, int(-1));
    }

    use crate::blowup::{BEdge, BVertex, FamilyMember};
    use crate::gen::random_hypertree_mixture;

    /// `copies` copies of the star over `k` terminals, unit costs.
    fn star_copies(k: usize, copies: usize) -> BlowupGraph {
        let mut vertices: Vec<BVertex> = (0..k)
            .map(|i| BVertex { terminal: true, origin: Some(i), represents: 1 << i })
            .collect();
        let mut edges = Vec::new();
        for c in 0..copies {
            let center = vertices.len();
            vertices.push(BVertex { terminal: false, origin: None, represents: 0 });
            for t in 0..k {
                let id = edges.len();
                edges.push(BEdge { id, u: t, v: center, cost: int(1), origin: None, component: 0, copy: c });
            }
        }
        BlowupGraph::new(copies as i64, vertices, edges).unwrap()
    }

    fn small_graphs() -> Vec<BlowupGraph> {
        let out: Vec<BlowupGraph> = (1..40)
            .filter_map(|seed| {
                let (inst, x) = random_hypertree_mixture(seed, 3 + seed as usize % 3, 1, 2).unwrap();
                BlowupGraph::from_solution(&inst, &x).ok()
            })
            .filter(|g| g.is_feasible() && g.edges().len() <= 9)
            .take(8)
            .collect();
        assert_eq!(out.len(), 8);
        out
    }

    /// Cheapest cut by enumerating every node set that contains the targets and not s.
    fn brute_min_cut(sep: &SeparationNetwork, q: u64) -> i64 {
        let net = sep.network();
        let nodes = net.num_nodes();
        assert!(nodes <= 16);
        let mut best = i64::MAX;
        for mask in 0u64..(1 << nodes) {
            let side: Vec<bool> = (0..nodes).map(|v| mask & (1 << v) != 0).collect();
            if side[sep.source()] || !side[sep.sink()] || bits(q).any(|i| !side[sep.terminal_node(i)]) {
                continue;
            }
            best = best.min(net.cut_capacity(&side));
        }
        best
    }

    fn exhaustive_min(g: &BlowupGraph, removed: &HashSet<usize>, q: u64) -> i64 {
        let table = g.slack_table(removed).unwrap();
        (1..table.len() as u64).filter(|s| s & q == q).map(|s| table[s as usize]).min().unwrap()
    }

    fn rerooted(family: &[FamilyMember]) -> Vec<FamilyMember> {
        family
            .iter()
            .map(|m| {
                let root = m.arcs.iter().map(|a| a.1).max().unwrap_or(m.root);
                let mut arcs = Vec::new();
                let mut stack = vec![root];
                let mut seen = HashSet::from([root]);
                while let Some(x) = stack.pop() {
                    for &(a, b, id) in &m.arcs {
                        for (from, to) in [(a, b), (b, a)] {
                            if from == x && seen.insert(to) {
                                arcs.push((from, to, id));
                                stack.push(to);
                            }
                        }
                    }
                }
                FamilyMember { terminals: m.terminals, root, arcs }
            })
            .collect()
    }

    #[test]
    fn copies_of_one_star_have_zero_y() {
        let g = star_copies(4, 3);
        let sep = build_separation_digraph(&g).unwrap();
        assert_eq!(sep.y(), &[0, 0, 0, 0]);
        assert_eq!(sep.arc_count(), g.edges().len() + g.pieces().len() + g.num_terminals());
        let net = sep.network();
        for a in (0..2 * net.arc_count()).step_by(2) {
            let (_, to) = net.arc_endpoints(a);
            if to != sep.sink() {
                assert_eq!(net.capacity(a), 1);
            }
        }
        let (value, _) = sep.max_flow(0b0011);
        assert_eq!(value, 3);
        assert_eq!(sep.min_slack_over_supersets(0b0001).0, 0);
    }

    #[test]
    fn negative_y_is_reported() {
        let g = star_copies(3, 2);
        let removed: HashSet<usize> = HashSet::from([0, 3]);
        assert_eq!(SeparationNetwork::build_without(&g, &removed).unwrap().y()[0], 0);
        let family: Vec<FamilyMember> = g.family(&HashSet::new()).into_iter().take(1).collect();
        assert!(matches!(
            SeparationNetwork::from_family(2, g.terminals(), &family),
            Err(Error::NegativeDegree { .. })
        ));
    }

    #[test]
    fn flow_matches_brute_force_cut_and_slack() {
        let mut brute = 0;
        for g in small_graphs() {
            let ids = g.edge_ids();
            let removed: HashSet<usize> = ids.iter().copied().step_by(3).collect();
            for rem in [HashSet::new(), removed] {
                let sep = SeparationNetwork::build_without(&g, &rem).unwrap();
                let other = SeparationNetwork::from_family(g.n(), g.terminals(), &rerooted(&g.family(&rem))).unwrap();
                for q in 1..=g.all_terminals() {
                    let (value, _) = sep.max_flow(q);
                    if sep.network().num_nodes() <= 16 {
                        assert_eq!(value, brute_min_cut(&sep, q));
                        brute += 1;
                    }
                    assert_eq!(value, other.max_flow(q).0);
                    let (min, arg) = min_slack_over_supersets(&g, &rem, q).unwrap();
                    assert_eq!(min, exhaustive_min(&g, &rem, q));
                    assert_eq!(arg & q, q);
                    assert_eq!(g.slack(&rem, arg).unwrap(), min);
                }
            }
        }
        assert!(brute > 0);
    }

    #[test]
    fn separation_on_feasible_and_augmented_graphs() {
        for g in small_graphs() {
            assert!(separate(&g).unwrap().feasible());
            for (i, p) in g.pieces().iter().enumerate() {
                if p.size() < 2 {
                    continue;
                }
                let plus = g.add_component(i, usize::MAX);
                let report = separate(&plus).unwrap();
                assert!(!report.feasible());
                let table = plus.slack_table(&HashSet::new()).unwrap();
                let worst = table.iter().skip(1).min().copied().unwrap();
                if let Some(v) = &report.violation {
                    assert_eq!(v.slack, worst);
                    assert_eq!(v.set & p.terminals, p.terminals);
                }
            }
        }
    }

    #[test]
    fn gammoid_rank_extremes() {
        for g in small_graphs() {
            for q in [0b011u64, g.all_terminals()] {
                let o = GammoidOracle::new(&g, q).unwrap();
                assert_eq!(o.rank(&[]), 0);
                assert_eq!(o.rank(&g.edge_ids()), g.n() * (q.count_ones() as i64 - 1));
            }
        }
    }
}
