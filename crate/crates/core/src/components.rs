//! k-restricted full components with their cheapest realizations.
//!
//! Restricting to components with at most k terminals costs a factor of at most
//! `1 + 1/⌊log₂ k⌋` in the optimum (Borchers–Du).

use std::collections::{BTreeSet, HashMap};

use num_traits::Zero;

use crate::error::{ensure, Error, Result};
use crate::instance::{SteinerInstance, SteinerTree};
use crate::rational::Rational;
use crate::util::bits;

/// Largest terminal count accepted by full enumeration.
pub const MAX_ENUMERATION_TERMINALS: usize = 16;

/// A tree of the instance whose leaves are exactly its terminals and whose internal nodes are
/// Steiner vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// Terminal vertex ids, ascending.
    pub terminals: Vec<usize>,
    /// Bitmask over terminal indices (positions in `SteinerInstance::terminals`).
    pub mask: u64,
    /// Instance edge indices, ascending.
    pub edges: Vec<usize>,
    pub cost: Rational,
}

impl Component {
    pub fn size(&self) -> usize {
        self.terminals.len()
    }

    /// Vertices touched by the tree, ascending.
    pub fn vertices(&self, inst: &SteinerInstance) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .edges
            .iter()
            .flat_map(|&i| [inst.edge(i).u, inst.edge(i).v])
            .collect();
        set.into_iter().collect()
    }

    /// Tree, leaf and internal-node conditions, plus cost consistency.
    pub fn is_valid(&self, inst: &SteinerInstance) -> bool {
        let tree = SteinerTree {
            edges: self.edges.clone(),
            cost: self.cost.clone(),
        };
        let verts = self.vertices(inst);
        if verts.len() != self.edges.len() + 1 || !tree.is_acyclic(inst) {
            return false;
        }
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for &i in &self.edges {
            *degree.entry(inst.edge(i).u).or_default() += 1;
            *degree.entry(inst.edge(i).v).or_default() += 1;
        }
        let leaves: Vec<usize> = verts.iter().copied().filter(|v| degree[v] == 1).collect();
        let cost: Rational = self.edges.iter().map(|&i| &inst.edge(i).cost).sum();
        leaves == self.terminals
            && verts
                .iter()
                .all(|&v| degree[&v] == 1 || !inst.is_terminal(v))
            && cost == self.cost
    }
}

#[derive(Clone, Debug)]
enum Back {
    /// Path from terminal index to this Steiner vertex.
    Path(usize),
    /// Steiner path to branch vertex `u`, then the split stored there.
    Via(usize),
}

struct SubsetDp<'a> {
    inst: &'a SteinerInstance,
    steiner: Vec<usize>,
    /// Steiner-only shortest paths: distance and next hop (positions).
    dist: Vec<Vec<Option<Rational>>>,
    next: Vec<Vec<usize>>,
    /// Terminal index → Steiner position: cost and first Steiner vertex on the path.
    term_dist: Vec<Vec<Option<(Rational, usize)>>>,
    g: HashMap<u64, Vec<Option<(Rational, Back)>>>,
    split: HashMap<u64, Vec<Option<(Rational, u64)>>>,
}

impl<'a> SubsetDp<'a> {
    fn new(inst: &'a SteinerInstance) -> Self {
        let steiner: Vec<usize> = (0..inst.num_vertices()).filter(|&v| !inst.is_terminal(v)).collect();
        let steiner_pos: HashMap<usize, usize> = steiner.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let s = steiner.len();
        let mut dist: Vec<Vec<Option<Rational>>> = vec![vec![None; s]; s];
        let mut next = vec![vec![usize::MAX; s]; s];
        for i in 0..s {
            dist[i][i] = Some(Rational::zero());
            next[i][i] = i;
        }
        let mut term_edges: Vec<Vec<(usize, &Rational)>> = vec![Vec::new(); inst.terminals().len()];
        for e in inst.edges() {
            match (steiner_pos.get(&e.u), steiner_pos.get(&e.v)) {
                (Some(&a), Some(&b)) => {
                    if dist[a][b].as_ref().is_none_or(|d| e.cost < *d) {
                        dist[a][b] = Some(e.cost.clone());
                        dist[b][a] = Some(e.cost.clone());
                        next[a][b] = b;
                        next[b][a] = a;
                    }
                }
                (Some(&a), None) => term_edges[inst.terminal_index(e.v).unwrap()].push((a, &e.cost)),
                (None, Some(&b)) => term_edges[inst.terminal_index(e.u).unwrap()].push((b, &e.cost)),
                (None, None) => {}
            }
        }
        for k in 0..s {
            for i in 0..s {
                let Some(dik) = dist[i][k].clone() else { continue };
                for j in 0..s {
                    let Some(dkj) = &dist[k][j] else { continue };
                    let cand = &dik + dkj;
                    if dist[i][j].as_ref().is_none_or(|d| cand < *d) {
                        dist[i][j] = Some(cand);
                        next[i][j] = next[i][k];
                    }
                }
            }
        }
        let term_dist = term_edges
            .iter()
            .map(|edges| {
                (0..s)
                    .map(|v| {
                        let mut best: Option<(Rational, usize)> = None;
                        for &(w, c) in edges {
                            if let Some(d) = &dist[w][v] {
                                let cand = c + d;
                                if best.as_ref().is_none_or(|(b, bw)| cand < *b || (cand == *b && w < *bw)) {
                                    best = Some((cand, w));
                                }
                            }
                        }
                        best
                    })
                    .collect()
            })
            .collect();
        SubsetDp {
            inst,
            steiner,
            dist,
            next,
            term_dist,
            g: HashMap::new(),
            split: HashMap::new(),
        }
    }

    /// Fills tables for `mask` (all submasks must be done).
    fn fill(&mut self, mask: u64) {
        let s = self.steiner.len();
        if mask.count_ones() == 1 {
            let t = mask.trailing_zeros() as usize;
            let row = (0..s)
                .map(|v| self.term_dist[t][v].as_ref().map(|(c, _)| (c.clone(), Back::Path(t))))
                .collect();
            self.g.insert(mask, row);
            return;
        }
        let low = mask & mask.wrapping_neg();
        let mut split: Vec<Option<(Rational, u64)>> = vec![None; s];
        let rest = mask & !low;
        // A1 ranges over submasks containing the lowest bit, excluding mask itself
        let mut sub = rest;
        loop {
            let a1 = sub | low;
            if a1 != mask {
                let a2 = mask & !a1;
                let (g1, g2) = (&self.g[&a1], &self.g[&a2]);
                for u in 0..s {
                    if let (Some((c1, _)), Some((c2, _))) = (&g1[u], &g2[u]) {
                        let cand = c1 + c2;
                        if split[u].as_ref().is_none_or(|(b, _)| cand < *b) {
                            split[u] = Some((cand, a1));
                        }
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        let mut g: Vec<Option<(Rational, Back)>> = vec![None; s];
        for v in 0..s {
            for u in 0..s {
                if let (Some(d), Some((c, _))) = (&self.dist[v][u], &split[u]) {
                    let cand = d + c;
                    if g[v].as_ref().is_none_or(|(b, _)| cand < *b) {
                        g[v] = Some((cand, Back::Via(u)));
                    }
                }
            }
        }
        self.split.insert(mask, split);
        self.g.insert(mask, g);
    }

    fn steiner_path(&self, mut a: usize, b: usize, out: &mut Vec<(usize, usize)>) {
        while a != b {
            let n = self.next[a][b];
            out.push((self.steiner[a], self.steiner[n]));
            a = n;
        }
    }

    fn emit_g(&self, mask: u64, v: usize, out: &mut Vec<(usize, usize)>) {
        match &self.g[&mask][v].as_ref().unwrap().1 {
            Back::Path(t) => {
                let (_, w) = self.term_dist[*t][v].as_ref().unwrap();
                out.push((self.inst.terminals()[*t], self.steiner[*w]));
                self.steiner_path(*w, v, out);
            }
            Back::Via(u) => {
                self.steiner_path(v, *u, out);
                self.emit_split(mask, *u, out);
            }
        }
    }

    fn emit_split(&self, mask: u64, u: usize, out: &mut Vec<(usize, usize)>) {
        let a1 = self.split[&mask][u].as_ref().unwrap().1;
        self.emit_g(a1, u, out);
        self.emit_g(mask & !a1, u, out);
    }

    fn best_split(&self, mask: u64) -> Option<(Rational, usize)> {
        let mut best: Option<(Rational, usize)> = None;
        for (u, entry) in self.split[&mask].iter().enumerate() {
            if let Some((c, _)) = entry {
                if best.as_ref().is_none_or(|(b, _)| c < b) {
                    best = Some((c.clone(), u));
                }
            }
        }
        best
    }

    /// Cheapest full component on `mask`, cleaned into a tree, or `None`.
    fn component(&self, mask: u64) -> Result<Option<Component>> {
        let inst = self.inst;
        let terms: Vec<usize> = bits(mask).map(|i| inst.terminals()[i]).collect();
        let mut best_cost = self.best_split(mask);
        let mut direct: Option<usize> = None;
        if terms.len() == 2 {
            if let Some(e) = inst.find_edge(terms[0], terms[1]) {
                let c = &inst.edge(e).cost;
                if best_cost.as_ref().is_none_or(|(b, _)| c <= b) {
                    direct = Some(e);
                    best_cost = Some((c.clone(), usize::MAX));
                }
            }
        }
        let Some((cost, u)) = best_cost else {
            return Ok(None);
        };
        let edge_list: Vec<usize> = if let Some(e) = direct {
            vec![e]
        } else {
            let mut pairs = Vec::new();
            self.emit_split(mask, u, &mut pairs);
            pairs
                .into_iter()
                .map(|(a, b)| {
                    inst.find_edge(a, b)
                        .ok_or_else(|| Error::Internal(format!("no edge {a}-{b} in reconstruction")))
                })
                .collect::<Result<_>>()?
        };
        let tree = SteinerTree::pruned(inst, &edge_list);
        ensure!(tree.cost <= cost, "cleaned tree is more expensive than its DP value");
        let comp = Component {
            terminals: terms,
            mask,
            edges: tree.edges,
            cost: tree.cost,
        };
        if !comp.is_valid(inst) {
            return Ok(None);
        }
        Ok(Some(comp))
    }
}

fn check_size(inst: &SteinerInstance) -> Result<()> {
    if inst.terminals().len() > MAX_ENUMERATION_TERMINALS {
        return Err(Error::TooLarge(format!(
            "{} terminals exceed the enumeration limit of {MAX_ENUMERATION_TERMINALS}",
            inst.terminals().len()
        )));
    }
    Ok(())
}

/// Every terminal subset S with `2 ≤ |S| ≤ k` that admits a full component, realized at
/// minimum cost. Sorted by subset bitmask. `k` above `|R|` is treated as `|R|`.
pub fn enumerate_components(inst: &SteinerInstance, k: usize) -> Result<Vec<Component>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be at least 2")));
    }
    check_size(inst)?;
    let r = inst.terminals().len();
    let k = k.min(r);
    let mut masks: Vec<u64> = (1u64..(1u64 << r)).filter(|m| m.count_ones() as usize <= k).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut dp = SubsetDp::new(inst);
    for &m in &masks {
        dp.fill(m);
    }
    let mut out = Vec::new();
    masks.sort_unstable();
    for m in masks {
        if m.count_ones() >= 2 {
            if let Some(c) = dp.component(m)? {
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Cost of the cheapest full component with terminal set exactly `terminals` (vertex ids).
pub fn min_component_cost(inst: &SteinerInstance, terminals: &[usize]) -> Result<Option<Rational>> {
    let mut mask = 0u64;
    for &t in terminals {
        let i = inst
            .terminal_index(t)
            .ok_or_else(|| Error::InvalidArgument(format!("vertex {t} is not a terminal")))?;
        mask |= 1 << i;
    }
    if mask.count_ones() < 2 {
        return Err(Error::InvalidArgument("a component needs at least two terminals".into()));
    }
    check_size(inst)?;
    let mut subs: Vec<u64> = crate::util::submasks(mask).collect();
    subs.sort_by_key(|m| (m.count_ones(), *m));
    let mut dp = SubsetDp::new(inst);
    for m in subs {
        dp.fill(m);
    }
    Ok(dp.component(mask)?.map(|c| c.cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Edge;
    use crate::rational::int;

    fn edge(u: usize, v: usize, c: i64) -> Edge {
        Edge { u, v, cost: int(c) }
    }

    #[test]
    fn path_gives_single_component() {
        let inst = SteinerInstance::new(3, vec![0, 2], vec![edge(0, 1, 1), edge(1, 2, 1)]).unwrap();
        let comps = enumerate_components(&inst, 2).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].terminals, vec![0, 2]);
        assert_eq!(comps[0].cost, int(2));
        assert_eq!(comps[0].edges, vec![0, 1]);
    }

    #[test]
    fn star_components() {
        // hub 3 joined to terminals 0, 1, 2 at cost 1 each
        let inst = SteinerInstance::new(4, vec![0, 1, 2], vec![edge(0, 3, 1), edge(1, 3, 1), edge(2, 3, 1)]).unwrap();
        let comps = enumerate_components(&inst, 3).unwrap();
        let summary: Vec<(u64, Rational)> = comps.iter().map(|c| (c.mask, c.cost.clone())).collect();
        assert_eq!(
            summary,
            vec![(0b011, int(2)), (0b101, int(2)), (0b110, int(2)), (0b111, int(3))]
        );
        assert!(comps.iter().all(|c| c.is_valid(&inst)));
    }

    #[test]
    fn four_terminals_eleven_subsets() {
        // complete graph on 4 terminals
        let mut edges = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push(edge(a, b, 1));
            }
        }
        edges.push(edge(0, 4, 1));
        edges.push(edge(1, 4, 1));
        edges.push(edge(2, 4, 1));
        edges.push(edge(3, 4, 1));
        let inst = SteinerInstance::new(5, vec![0, 1, 2, 3], edges).unwrap();
        assert_eq!(enumerate_components(&inst, 4).unwrap().len(), 11);
    }

    #[test]
    fn k_below_two_is_an_error() {
        let inst = SteinerInstance::new(2, vec![0, 1], vec![edge(0, 1, 1)]).unwrap();
        assert!(enumerate_components(&inst, 1).is_err());
        assert!(min_component_cost(&inst, &[0]).is_err());
    }

    #[test]
    fn disconnected_subset_has_no_component() {
        let inst = SteinerInstance::new(4, vec![0, 1, 2, 3], vec![edge(0, 1, 2), edge(2, 3, 1)]).unwrap();
        assert_eq!(min_component_cost(&inst, &[0, 1]).unwrap(), Some(int(2)));
        assert_eq!(min_component_cost(&inst, &[0, 2]).unwrap(), None);
    }

    #[test]
    fn terminal_is_never_internal() {
        // path 0 - 1 - 2 with all terminals: {0,2} has no full component
        let inst = SteinerInstance::new(3, vec![0, 1, 2], vec![edge(0, 1, 1), edge(1, 2, 1)]).unwrap();
        let comps = enumerate_components(&inst, 3).unwrap();
        let masks: Vec<u64> = comps.iter().map(|c| c.mask).collect();
        assert_eq!(masks, vec![0b011, 0b110]);
    }
}
