//! Blowup graphs: N-scaled multigraph realizations of fractional component solutions.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::components::Component;
use crate::error::{ensure, Error, Result};
use crate::hyperlp::FractionalSolution;
use crate::instance::SteinerInstance;
use crate::rational::{lcm_of_denominators, Rational};
use crate::util::{bits, UnionFind};

/// Largest terminal count handled by subset-indexed tables (masks are `u64`).
pub const MAX_TERMINALS: usize = 63;

/// Largest terminal count for which feasibility is decided by enumerating all subsets.
pub const BRUTE_FORCE_TERMINALS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BVertex {
    pub terminal: bool,
    /// Instance vertex this vertex copies, for Steiner copies and original terminals.
    pub origin: Option<usize>,
    /// Original terminal positions merged into this terminal.
    pub represents: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BEdge {
    /// Stable identifier; survives removals and contractions.
    pub id: usize,
    pub u: usize,
    pub v: usize,
    pub cost: Rational,
    /// Instance edge realized by this edge; `None` for auxiliary zero-cost edges.
    pub origin: Option<usize>,
    /// Source component label and copy number.
    pub component: usize,
    pub copy: usize,
}

impl BEdge {
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// A member of Γ(𝒳): a maximal tree connected through Steiner vertices whose leaves are its
/// terminals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub component: usize,
    pub copy: usize,
    /// Terminal positions covered.
    pub terminals: u64,
    /// Vertex ids, ascending.
    pub vertices: Vec<usize>,
    /// Edge ids, ascending.
    pub edges: Vec<usize>,
}

impl Piece {
    pub fn size(&self) -> usize {
        self.terminals.count_ones() as usize
    }
}

/// A member of the component family of 𝒳 − F, as used by slack and flow computations.
/// Edges are oriented away from `root`, the smallest vertex id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyMember {
    pub terminals: u64,
    pub root: usize,
    /// `(tail, head, edge id)`.
    pub arcs: Vec<(usize, usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlowupGraph {
    n: i64,
    vertices: Vec<BVertex>,
    terminals: Vec<usize>,
    terminal_pos: HashMap<usize, usize>,
    edges: Vec<BEdge>,
    edge_pos: HashMap<usize, usize>,
    pieces: Vec<Piece>,
}

impl BlowupGraph {
    /// Builds a blowup graph and derives Γ. Fails when a piece is not a tree whose leaves are
    /// exactly its terminals.
    pub fn new(n: i64, vertices: Vec<BVertex>, mut edges: Vec<BEdge>) -> Result<Self> {
        ensure!(n >= 1, "blowup factor must be positive");
        edges.sort_by_key(|e| e.id);
        let terminals: Vec<usize> = (0..vertices.len()).filter(|&v| vertices[v].terminal).collect();
        if terminals.len() > MAX_TERMINALS {
            return Err(Error::TooLarge(format!("{} terminals in a blowup graph", terminals.len())));
        }
        let terminal_pos = terminals.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edge_pos: HashMap<usize, usize> = edges.iter().enumerate().map(|(i, e)| (e.id, i)).collect();
        ensure!(edge_pos.len() == edges.len(), "duplicate edge id");
        for e in &edges {
            ensure!(e.u < vertices.len() && e.v < vertices.len() && e.u != e.v, "bad endpoints on edge {}", e.id);
        }
        let mut g = BlowupGraph {
            n,
            vertices,
            terminals,
            terminal_pos,
            edges,
            edge_pos,
            pieces: Vec::new(),
        };
        g.pieces = g.compute_pieces()?;
        Ok(g)
    }

    /// The minimal blowup of `x`: N = lcm of denominators and `x_C·N` copies of each component.
    pub fn from_solution(inst: &SteinerInstance, x: &FractionalSolution) -> Result<Self> {
        let n_big: BigInt = lcm_of_denominators(x.support.iter().map(|(_, v)| v));
        let n = n_big
            .to_i64()
            .ok_or_else(|| Error::TooLarge("blowup factor exceeds i64".into()))?;
        let mut vertices: Vec<BVertex> = inst
            .terminals()
            .iter()
            .enumerate()
            .map(|(i, &t)| BVertex {
                terminal: true,
                origin: Some(t),
                represents: 1 << i,
            })
            .collect();
        let mut edges = Vec::new();
        for (ci, (comp, value)) in x.support.iter().enumerate() {
            let copies = (value * Rational::from_integer(n.into())).to_integer();
            let copies = copies
                .to_usize()
                .ok_or_else(|| Error::TooLarge("copy count".into()))?;
            for copy in 0..copies {
                push_instance_copy(inst, comp, ci, copy, &mut vertices, &mut edges);
            }
        }
        BlowupGraph::new(n, vertices, edges)
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn vertices(&self) -> &[BVertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &BVertex {
        &self.vertices[v]
    }

    /// Terminal vertex ids; the index in this slice is the terminal position used in masks.
    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn all_terminals(&self) -> u64 {
        if self.terminals.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.terminals.len()) - 1
        }
    }

    pub fn terminal_position(&self, v: usize) -> Option<usize> {
        self.terminal_pos.get(&v).copied()
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        self.vertices[v].terminal
    }

    /// Edges in ascending id order.
    pub fn edges(&self) -> &[BEdge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &BEdge {
        &self.edges[self.edge_pos[&id]]
    }

    pub fn has_edge(&self, id: usize) -> bool {
        self.edge_pos.contains_key(&id)
    }

    pub fn edge_ids(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.id).collect()
    }

    pub fn max_edge_id(&self) -> Option<usize> {
        self.edges.last().map(|e| e.id)
    }

    /// Γ(𝒳), ordered by (component, copy, smallest edge id).
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn cost(&self) -> Rational {
        self.edges.iter().map(|e| &e.cost).sum()
    }

    pub fn piece_cost(&self, p: &Piece) -> Rational {
        p.edges.iter().map(|&id| &self.edge(id).cost).sum()
    }

    /// y_v = (number of pieces containing v) − N, per terminal position.
    pub fn y_values(&self) -> Vec<i64> {
        let mut y = vec![-self.n; self.terminals.len()];
        for p in &self.pieces {
            for i in bits(p.terminals) {
                y[i] += 1;
            }
        }
        y
    }

    fn compute_pieces(&self) -> Result<Vec<Piece>> {
        let m = self.edges.len();
        let mut uf = UnionFind::new(m);
        let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, e) in self.edges.iter().enumerate() {
            for x in [e.u, e.v] {
                if !self.vertices[x].terminal {
                    incident.entry(x).or_default().push(i);
                }
            }
        }
        for list in incident.values() {
            for w in list.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..m {
            classes.entry(uf.find(i)).or_default().push(i);
        }
        let mut pieces = Vec::with_capacity(classes.len());
        for members in classes.into_values() {
            let mut verts = BTreeSet::new();
            let mut terminals = 0u64;
            let mut degree: HashMap<usize, usize> = HashMap::new();
            for &i in &members {
                let e = &self.edges[i];
                for x in [e.u, e.v] {
                    verts.insert(x);
                    *degree.entry(x).or_default() += 1;
                    if let Some(p) = self.terminal_position(x) {
                        terminals |= 1 << p;
                    }
                }
            }
            let first = &self.edges[members[0]];
            ensure!(
                verts.len() == members.len() + 1,
                "piece containing edge {} is not a tree",
                first.id
            );
            for (&v, &d) in &degree {
                if self.vertices[v].terminal {
                    ensure!(d == 1, "terminal {v} is internal to a piece");
                } else {
                    ensure!(d >= 2, "pendant edge at Steiner vertex {v}");
                }
            }
            pieces.push(Piece {
                component: first.component,
                copy: first.copy,
                terminals,
                vertices: verts.into_iter().collect(),
                edges: members.iter().map(|&i| self.edges[i].id).collect(),
            });
        }
        pieces.sort_by_key(|p| (p.component, p.copy, p.edges[0]));
        Ok(pieces)
    }

    /// Component family of 𝒳 − F: every piece splits into the connected parts of its vertex set
    /// under the remaining edges. Parts keep every terminal of the piece (possibly isolated), so
    /// terminal multiplicities and hence y are unchanged; parts without terminals are dropped.
    pub fn family(&self, removed: &HashSet<usize>) -> Vec<FamilyMember> {
        let mut out = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            let local: HashMap<usize, usize> = p.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let mut uf = UnionFind::new(p.vertices.len());
            let kept: Vec<&BEdge> = p
                .edges
                .iter()
                .filter(|id| !removed.contains(id))
                .map(|&id| self.edge(id))
                .collect();
            if kept.len() == p.edges.len() {
                out.push(self.orient(p.vertices[0], &kept, p.terminals));
                continue;
            }
            for e in &kept {
                uf.union(local[&e.u], local[&e.v]);
            }
            let mut groups: BTreeMap<usize, (Vec<usize>, u64)> = BTreeMap::new();
            for (i, &v) in p.vertices.iter().enumerate() {
                let entry = groups.entry(uf.find(i)).or_insert((Vec::new(), 0));
                entry.0.push(v);
                if let Some(pos) = self.terminal_position(v) {
                    entry.1 |= 1 << pos;
                }
            }
            let mut edges_by_group: HashMap<usize, Vec<&BEdge>> = HashMap::new();
            for e in kept {
                edges_by_group.entry(uf.find(local[&e.u])).or_default().push(e);
            }
            for (root, (verts, terminals)) in groups {
                if terminals == 0 {
                    continue;
                }
                let es = edges_by_group.remove(&root).unwrap_or_default();
                out.push(self.orient(verts[0], &es, terminals));
            }
        }
        out
    }

    fn orient(&self, root: usize, edges: &[&BEdge], terminals: u64) -> FamilyMember {
        let mut adj: HashMap<usize, Vec<&BEdge>> = HashMap::new();
        for e in edges {
            adj.entry(e.u).or_default().push(e);
            adj.entry(e.v).or_default().push(e);
        }
        let mut arcs = Vec::with_capacity(edges.len());
        let mut stack = vec![(root, usize::MAX)];
        while let Some((x, via)) = stack.pop() {
            if let Some(list) = adj.get(&x) {
                for e in list {
                    if e.id != via {
                        let y = e.other(x);
                        arcs.push((x, y, e.id));
                        stack.push((y, e.id));
                    }
                }
            }
        }
        FamilyMember { terminals, root, arcs }
    }

    /// h_{𝒳−F}(S) = N(|S|−1) − Σ_C (|S∩C|−1)⁺ over the family of 𝒳 − F.
    pub fn slack(&self, removed: &HashSet<usize>, s: u64) -> Result<i64> {
        if s == 0 {
            return Err(Error::InvalidArgument("slack is undefined on the empty set".into()));
        }
        if s & !self.all_terminals() != 0 {
            return Err(Error::InvalidArgument("subset contains a non-terminal position".into()));
        }
        Ok(slack_of(self.n, &self.family(removed), s))
    }

    /// Slack of every nonempty subset, indexed by mask (entry 0 unused).
    pub fn slack_table(&self, removed: &HashSet<usize>) -> Result<Vec<i64>> {
        let r = self.terminals.len();
        if r > BRUTE_FORCE_TERMINALS {
            return Err(Error::TooLarge(format!("{r} terminals for a full slack table")));
        }
        let fam = self.family(removed);
        let sizes: Vec<u64> = fam.iter().map(|m| m.terminals).collect();
        let mut table = vec![0i64; 1 << r];
        for (s, slot) in table.iter_mut().enumerate().skip(1) {
            let s = s as u64;
            let covered: i64 = sizes
                .iter()
                .map(|t| ((t & s).count_ones() as i64 - 1).max(0))
                .sum();
            *slot = self.n * (s.count_ones() as i64 - 1) - covered;
        }
        Ok(table)
    }

    /// h ≥ 0 on every nonempty subset and h(R) = 0.
    pub fn is_feasible(&self) -> bool {
        self.is_feasible_without(&HashSet::new())
    }

    pub fn is_feasible_without(&self, removed: &HashSet<usize>) -> bool {
        if self.terminals.is_empty() {
            return true;
        }
        if self.terminals.len() <= BRUTE_FORCE_TERMINALS {
            let table = self.slack_table(removed).expect("size checked");
            return table[1..].iter().all(|&h| h >= 0) && *table.last().unwrap() == 0;
        }
        let fam = self.family(removed);
        if slack_of(self.n, &fam, self.all_terminals()) != 0 {
            return false;
        }
        matches!(crate::sepflow::separate_family(self.n, &self.terminals, &fam), Ok(None))
    }

    /// 𝒳 ⊛ Q: adds N fresh copies of piece `q` of this graph, labelled `component`.
    pub fn add_component(&self, q: usize, component: usize) -> BlowupGraph {
        let piece = &self.pieces[q];
        let mut vertices = self.vertices.clone();
        let mut edges = self.edges.clone();
        let mut next_id = self.max_edge_id().map_or(0, |m| m + 1);
        for copy in 0..self.n as usize {
            let mut fresh: HashMap<usize, usize> = HashMap::new();
            for &v in &piece.vertices {
                if !self.vertices[v].terminal {
                    fresh.insert(v, vertices.len());
                    vertices.push(self.vertices[v].clone());
                }
            }
            for &id in &piece.edges {
                let e = self.edge(id);
                let map = |x: usize| *fresh.get(&x).unwrap_or(&x);
                edges.push(BEdge {
                    id: next_id,
                    u: map(e.u),
                    v: map(e.v),
                    cost: e.cost.clone(),
                    origin: e.origin,
                    component,
                    copy,
                });
                next_id += 1;
            }
        }
        BlowupGraph::new(self.n, vertices, edges).expect("copies of a valid piece are valid")
    }

    /// 𝒳 ⊛ Q for an instance component whose terminals are original terminals of this graph.
    pub fn add_instance_component(&self, inst: &SteinerInstance, comp: &Component, component: usize) -> Result<BlowupGraph> {
        let mut vertices = self.vertices.clone();
        let mut edges = self.edges.clone();
        let first_id = self.max_edge_id().map_or(0, |m| m + 1);
        let mut shifted = Vec::new();
        for copy in 0..self.n as usize {
            push_instance_copy(inst, comp, component, copy, &mut vertices, &mut shifted);
        }
        // instance terminals map to the current terminal representing them
        for mut e in shifted {
            e.id += first_id;
            for x in [&mut e.u, &mut e.v] {
                if *x < inst.terminals().len() {
                    let bit = 1u64 << *x;
                    *x = *self
                        .terminals
                        .iter()
                        .find(|&&t| self.vertices[t].represents & bit != 0)
                        .ok_or_else(|| Error::InvalidArgument("component terminal not in graph".into()))?;
                }
            }
            edges.push(e);
        }
        BlowupGraph::new(self.n, vertices, edges)
    }

    /// Removes the given edges, keeping everything else (Steiner vertices left isolated are
    /// kept in the vertex list but belong to no piece).
    pub fn remove_edges(&self, removed: &HashSet<usize>) -> Result<BlowupGraph> {
        let edges = self.edges.iter().filter(|e| !removed.contains(&e.id)).cloned().collect();
        BlowupGraph::new(self.n, self.vertices.clone(), edges)
    }

    /// (𝒳 − removed) / Q: removes edges, then merges the terminals at positions `q` into one
    /// fresh terminal appended last. Fails if the result has pendant edges or a piece would
    /// contain the merged terminal twice.
    pub fn remove_and_contract(&self, removed: &HashSet<usize>, q: u64) -> Result<BlowupGraph> {
        ensure!(q != 0 && q & !self.all_terminals() == 0, "contracted set must be nonempty terminals");
        let mut vertices = self.vertices.clone();
        let merged = vertices.len();
        let mut represents = 0u64;
        let mut gone = HashSet::new();
        for i in bits(q) {
            let v = self.terminals[i];
            represents |= self.vertices[v].represents;
            gone.insert(v);
        }
        for &v in &gone {
            vertices[v].terminal = false;
            vertices[v].origin = None;
        }
        vertices.push(BVertex {
            terminal: true,
            origin: None,
            represents,
        });
        let edges: Vec<BEdge> = self
            .edges
            .iter()
            .filter(|e| !removed.contains(&e.id))
            .map(|e| {
                let mut e = e.clone();
                if gone.contains(&e.u) {
                    e.u = merged;
                }
                if gone.contains(&e.v) {
                    e.v = merged;
                }
                e
            })
            .collect();
        for e in &edges {
            ensure!(e.u != e.v, "edge {} became a loop under contraction", e.id);
        }
        // merged originals are dead vertices: keep ids stable but mark as isolated Steiner
        BlowupGraph::new(self.n, vertices, edges)
    }

    /// Instance edges realized by the edge ids (auxiliary edges are skipped).
    pub fn origins(&self, ids: &[usize]) -> Vec<usize> {
        ids.iter().filter_map(|&id| self.edge(id).origin).collect()
    }
}

fn push_instance_copy(
    inst: &SteinerInstance,
    comp: &Component,
    component: usize,
    copy: usize,
    vertices: &mut Vec<BVertex>,
    edges: &mut Vec<BEdge>,
) {
    let mut fresh: HashMap<usize, usize> = HashMap::new();
    let mut map = |x: usize, vertices: &mut Vec<BVertex>| -> usize {
        if let Some(i) = inst.terminal_index(x) {
            return i;
        }
        *fresh.entry(x).or_insert_with(|| {
            vertices.push(BVertex {
                terminal: false,
                origin: Some(x),
                represents: 0,
            });
            vertices.len() - 1
        })
    };
    for &ei in &comp.edges {
        let e = inst.edge(ei);
        let u = map(e.u, vertices);
        let v = map(e.v, vertices);
        let id = edges.len();
        edges.push(BEdge {
            id,
            u,
            v,
            cost: e.cost.clone(),
            origin: Some(ei),
            component,
            copy,
        });
    }
}

pub(crate) fn slack_of(n: i64, family: &[FamilyMember], s: u64) -> i64 {
    let covered: i64 = family
        .iter()
        .map(|m| ((m.terminals & s).count_ones() as i64 - 1).max(0))
        .sum();
    n * (s.count_ones() as i64 - 1) - covered
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_fractional_solution, random_hypertree_mixture};
    use crate::rational::int;

    #[test]
    fn blowup_of_lp_solution_is_feasible() {
        for seed in 0..20 {
            let (inst, x) = random_fractional_solution(seed, 3 + seed as usize % 4, 2, seed % 3 == 0).unwrap();
            let g = BlowupGraph::from_solution(&inst, &x).unwrap();
            assert!(g.is_feasible());
            assert_eq!(g.cost(), &x.objective * int(g.n()));
            let y = g.y_values();
            assert!(y.iter().all(|&v| v >= 0));
            let copies: i64 = x.support.iter().map(|(_, v)| (v * int(g.n())).to_integer().try_into().unwrap_or(0i64)).sum();
            assert_eq!(g.pieces().len() as i64, copies);
        }
    }

    #[test]
    fn adding_a_piece_breaks_only_supersets() {
        for seed in 1..10 {
            let (inst, x) = random_hypertree_mixture(seed, 4, 1, 2).unwrap();
            let g = BlowupGraph::from_solution(&inst, &x).unwrap();
            for (i, p) in g.pieces().iter().enumerate() {
                let plus = g.add_component(i, usize::MAX);
                assert_eq!(plus.pieces().len(), g.pieces().len() + g.n() as usize);
                let table = plus.slack_table(&HashSet::new()).unwrap();
                let base = g.slack_table(&HashSet::new()).unwrap();
                for s in 1..table.len() {
                    let drop = g.n() * ((p.terminals & s as u64).count_ones() as i64 - 1).max(0);
                    assert_eq!(table[s], base[s] - drop);
                }
            }
        }
    }

    #[test]
    fn contraction_merges_terminals() {
        let (inst, x) = random_hypertree_mixture(3, 4, 1, 2).unwrap();
        let g = BlowupGraph::from_solution(&inst, &x).unwrap();
        let q = g.pieces()[0].terminals;
        let removed: HashSet<usize> = g
            .pieces()
            .iter()
            .filter(|p| (p.terminals & q).count_ones() >= 2)
            .flat_map(|p| p.edges.iter().copied())
            .collect();
        let h = g.remove_and_contract(&removed, q).unwrap();
        assert_eq!(h.num_terminals(), g.num_terminals() - q.count_ones() as usize + 1);
        let merged = *h.terminals().last().unwrap();
        assert_eq!(h.vertex(merged).represents, q);
        assert!(h.edges().iter().all(|e| !removed.contains(&e.id)));
        assert!(g.remove_and_contract(&removed, 0).is_err());
    }

    #[test]
    fn pieces_must_be_trees_with_terminal_leaves() {
        let vertices = vec![
            BVertex { terminal: true, origin: Some(0), represents: 1 },
            BVertex { terminal: false, origin: None, represents: 0 },
        ];
        let edges = vec![BEdge { id: 0, u: 0, v: 1, cost: int(1), origin: None, component: 0, copy: 0 }];
        assert!(BlowupGraph::new(1, vertices, edges).is_err());
    }
}
