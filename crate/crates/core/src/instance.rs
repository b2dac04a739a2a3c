//! Steiner tree instances: model, SteinLib STP reading/writing, and seeded generators.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rational::{exact_decimal, int, parse_rational, Rational};
use crate::util::UnionFind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: Rational,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// Weighted undirected simple graph with a terminal set. Vertices are `0..num_vertices`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SteinerInstance {
    num_vertices: usize,
    terminals: Vec<usize>,
    is_terminal: Vec<bool>,
    edges: Vec<Edge>,
}

impl SteinerInstance {
    pub fn new(num_vertices: usize, terminals: Vec<usize>, edges: Vec<Edge>) -> Result<Self> {
        let mut terminals = terminals;
        terminals.sort_unstable();
        terminals.dedup();
        if terminals.is_empty() {
            return Err(Error::InvalidInstance("no terminals".into()));
        }
        if let Some(&t) = terminals.iter().find(|&&t| t >= num_vertices) {
            return Err(Error::InvalidInstance(format!("terminal {t} is not a vertex")));
        }
        let mut seen = HashSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            if e.u >= num_vertices || e.v >= num_vertices {
                return Err(Error::InvalidInstance(format!(
                    "edge ({}, {}) has an endpoint outside 0..{num_vertices}",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidInstance(format!("self-loop at {}", e.u)));
            }
            if e.cost.is_negative() {
                return Err(Error::InvalidInstance(format!("negative cost on ({}, {})", e.u, e.v)));
            }
            let (u, v) = (e.u.min(e.v), e.u.max(e.v));
            if !seen.insert((u, v)) {
                return Err(Error::InvalidInstance(format!("parallel edge ({u}, {v})")));
            }
            normalized.push(Edge { u, v, cost: e.cost });
        }
        let mut is_terminal = vec![false; num_vertices];
        for &t in &terminals {
            is_terminal[t] = true;
        }
        Ok(SteinerInstance {
            num_vertices,
            terminals,
            is_terminal,
            edges: normalized,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Terminals in ascending vertex order; the position in this slice is the terminal index.
    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        self.is_terminal[v]
    }

    pub fn terminal_index(&self, v: usize) -> Option<usize> {
        self.terminals.binary_search(&v).ok()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn total_cost(&self) -> Rational {
        self.edges.iter().map(|e| &e.cost).sum()
    }

    /// Incident edge indices per vertex.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.u].push(i);
            adj[e.v].push(i);
        }
        adj
    }

    /// True iff no edge joins two non-terminals.
    pub fn is_quasi_bipartite(&self) -> bool {
        self.edges
            .iter()
            .all(|e| self.is_terminal[e.u] || self.is_terminal[e.v])
    }

    pub fn terminals_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.num_vertices);
        for e in &self.edges {
            uf.union(e.u, e.v);
        }
        let root = uf.find(self.terminals[0]);
        self.terminals.iter().all(|&t| uf.find(t) == root)
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.num_vertices);
        for e in &self.edges {
            uf.union(e.u, e.v);
        }
        let root = uf.find(0);
        (0..self.num_vertices).all(|v| uf.find(v) == root)
    }

    /// SteinLib STP text; fails when a cost has no finite decimal expansion.
    pub fn to_stp(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str("33D32945 STP File, STP Format Version 1.0\n\n");
        out.push_str("SECTION Graph\n");
        let _ = writeln!(out, "Nodes {}", self.num_vertices);
        let _ = writeln!(out, "Edges {}", self.edges.len());
        for e in &self.edges {
            let cost = exact_decimal(&e.cost).ok_or_else(|| {
                Error::InvalidArgument(format!("cost {} has no finite decimal form", e.cost))
            })?;
            let _ = writeln!(out, "E {} {} {}", e.u + 1, e.v + 1, cost);
        }
        out.push_str("END\n\nSECTION Terminals\n");
        let _ = writeln!(out, "Terminals {}", self.terminals.len());
        for t in &self.terminals {
            let _ = writeln!(out, "T {}", t + 1);
        }
        out.push_str("END\n\nEOF\n");
        Ok(out)
    }
}

/// A Steiner tree given as a multiset of instance edge indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SteinerTree {
    pub edges: Vec<usize>,
    pub cost: Rational,
}

impl SteinerTree {
    /// Reduces an edge multiset to a tree: minimum spanning forest of the touched vertices,
    /// then repeated removal of non-terminal leaves. Never increases cost.
    pub fn pruned(inst: &SteinerInstance, edges: &[usize]) -> SteinerTree {
        let mut distinct: Vec<usize> = edges.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.sort_by(|&a, &b| inst.edge(a).cost.cmp(&inst.edge(b).cost).then(a.cmp(&b)));
        let mut uf = UnionFind::new(inst.num_vertices());
        let mut kept: Vec<usize> = distinct
            .into_iter()
            .filter(|&i| uf.union(inst.edge(i).u, inst.edge(i).v))
            .collect();
        loop {
            let mut degree: HashMap<usize, usize> = HashMap::new();
            for &i in &kept {
                *degree.entry(inst.edge(i).u).or_default() += 1;
                *degree.entry(inst.edge(i).v).or_default() += 1;
            }
            let before = kept.len();
            kept.retain(|&i| {
                let e = inst.edge(i);
                let leaf_steiner = |x: usize| degree[&x] == 1 && !inst.is_terminal(x);
                !(leaf_steiner(e.u) || leaf_steiner(e.v))
            });
            if kept.len() == before {
                break;
            }
        }
        kept.sort_unstable();
        let cost = kept.iter().map(|&i| &inst.edge(i).cost).sum();
        SteinerTree { edges: kept, cost }
    }

    pub fn spans_terminals(&self, inst: &SteinerInstance) -> bool {
        let mut uf = UnionFind::new(inst.num_vertices());
        for &i in &self.edges {
            uf.union(inst.edge(i).u, inst.edge(i).v);
        }
        let root = uf.find(inst.terminals()[0]);
        inst.terminals().iter().all(|&t| uf.find(t) == root)
    }

    pub fn is_acyclic(&self, inst: &SteinerInstance) -> bool {
        let mut uf = UnionFind::new(inst.num_vertices());
        self.edges
            .iter()
            .all(|&i| uf.union(inst.edge(i).u, inst.edge(i).v))
    }

    pub fn leaves_are_terminals(&self, inst: &SteinerInstance) -> bool {
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for &i in &self.edges {
            *degree.entry(inst.edge(i).u).or_default() += 1;
            *degree.entry(inst.edge(i).v).or_default() += 1;
        }
        degree
            .iter()
            .all(|(&v, &d)| d != 1 || inst.is_terminal(v))
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads the SteinLib STP dialect: `SECTION Graph` (`Nodes`, `Edges`, `E i j c`) and
/// `SECTION Terminals` (`T i`). Other sections are skipped.
pub fn parse_stp(text: &[u8]) -> Result<SteinerInstance> {
    let text = std::str::from_utf8(text).map_err(|_| parse_err(0, "input is not UTF-8"))?;
    #[derive(PartialEq)]
    enum Section {
        None,
        Graph,
        Terminals,
        Other,
    }
    let mut section = Section::None;
    let mut nodes: Option<usize> = None;
    let mut edges: Vec<(usize, usize, Rational, usize)> = Vec::new();
    let mut terminals: Vec<(usize, usize)> = Vec::new();
    let mut saw_terminal_section = false;
    let mut saw_graph_section = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        let upper = head.to_ascii_uppercase();
        match upper.as_str() {
            "SECTION" => {
                if section != Section::None {
                    return Err(parse_err(line_no, "SECTION opened before END"));
                }
                let name = rest
                    .first()
                    .ok_or_else(|| parse_err(line_no, "SECTION without a name"))?;
                section = match name.to_ascii_lowercase().as_str() {
                    "graph" => {
                        saw_graph_section = true;
                        Section::Graph
                    }
                    "terminals" => {
                        saw_terminal_section = true;
                        Section::Terminals
                    }
                    _ => Section::Other,
                };
                continue;
            }
            "END" => {
                if section == Section::None {
                    return Err(parse_err(line_no, "END outside a section"));
                }
                section = Section::None;
                continue;
            }
            "EOF" => break,
            _ => {}
        }
        match section {
            Section::None => {
                if idx == 0 {
                    continue; // magic header line
                }
                return Err(parse_err(line_no, format!("unexpected content outside a section: {line}")));
            }
            Section::Other => {}
            Section::Graph => match upper.as_str() {
                "NODES" => {
                    let n = rest
                        .first()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| parse_err(line_no, "malformed Nodes line"))?;
                    nodes = Some(n);
                }
                "EDGES" | "ARCS" => {}
                "E" => {
                    if rest.len() != 3 {
                        return Err(parse_err(line_no, "edge lines need `E i j cost`"));
                    }
                    let i = rest[0]
                        .parse::<usize>()
                        .map_err(|_| parse_err(line_no, "malformed vertex id"))?;
                    let j = rest[1]
                        .parse::<usize>()
                        .map_err(|_| parse_err(line_no, "malformed vertex id"))?;
                    let c = parse_rational(rest[2])
                        .ok_or_else(|| parse_err(line_no, "malformed cost"))?;
                    if c.is_negative() {
                        return Err(parse_err(line_no, "negative cost"));
                    }
                    edges.push((i, j, c, line_no));
                }
                "A" => return Err(parse_err(line_no, "directed arcs are not supported")),
                _ => return Err(parse_err(line_no, format!("unknown graph keyword {head}"))),
            },
            Section::Terminals => match upper.as_str() {
                "TERMINALS" => {}
                "T" => {
                    let t = rest
                        .first()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| parse_err(line_no, "malformed terminal line"))?;
                    terminals.push((t, line_no));
                }
                "ROOT" | "ROOTP" | "TP" => {}
                _ => return Err(parse_err(line_no, format!("unknown terminals keyword {head}"))),
            },
        }
    }
    if section != Section::None {
        return Err(parse_err(text.lines().count(), "unterminated section"));
    }
    if !saw_graph_section {
        return Err(parse_err(0, "missing SECTION Graph"));
    }
    let n = nodes.ok_or_else(|| parse_err(0, "missing Nodes declaration"))?;
    let check = |id: usize, line: usize| -> Result<usize> {
        if id == 0 || id > n {
            Err(parse_err(line, format!("dangling vertex id {id}")))
        } else {
            Ok(id - 1)
        }
    };
    let mut parsed_edges = Vec::with_capacity(edges.len());
    let mut seen = BTreeSet::new();
    for (i, j, c, line) in edges {
        let (a, b) = (check(i, line)?, check(j, line)?);
        if a == b {
            return Err(parse_err(line, "self-loop"));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(parse_err(line, "parallel edge"));
        }
        parsed_edges.push(Edge { u: a, v: b, cost: c });
    }
    if !saw_terminal_section || terminals.is_empty() {
        return Err(parse_err(0, "no terminals"));
    }
    let mut parsed_terminals = Vec::with_capacity(terminals.len());
    for (t, line) in terminals {
        parsed_terminals.push(check(t, line)?);
    }
    SteinerInstance::new(n, parsed_terminals, parsed_edges)
}

/// Seeded random connected instance. Terminals are vertices `0..num_terminals`, Steiner
/// vertices follow. A random spanning tree guarantees connectivity; every other admissible
/// pair becomes an edge with probability `density`. Costs are integers in `1..=10`.
pub fn generate_random(
    num_terminals: usize,
    num_steiner: usize,
    density: &Rational,
    seed: u64,
    quasi_bipartite: bool,
) -> Result<SteinerInstance> {
    if num_terminals < 2 {
        return Err(Error::InvalidArgument("need at least two terminals".into()));
    }
    if density.is_negative() || *density > int(1) {
        return Err(Error::InvalidArgument("density must lie in [0, 1]".into()));
    }
    let n = num_terminals + num_steiner;
    let is_terminal = |v: usize| v < num_terminals;
    let allowed = |a: usize, b: usize| !quasi_bipartite || is_terminal(a) || is_terminal(b);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    // a terminal first so quasi-bipartite attachment always has a candidate
    let first_terminal = order.iter().position(|&v| is_terminal(v)).unwrap();
    order.swap(0, first_terminal);
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 1..order.len() {
        let v = order[i];
        let candidates: Vec<usize> = order[..i].iter().copied().filter(|&u| allowed(u, v)).collect();
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("parameters admit no connected instance".into()));
        }
        let u = candidates[rng.gen_range(0..candidates.len())];
        pairs.insert((u.min(v), u.max(v)));
    }
    let numer = density.numer().clone();
    let denom = density.denom().clone();
    let (numer, denom): (u64, u64) = (
        numer.try_into().unwrap_or(0),
        denom.try_into().unwrap_or(1),
    );
    for a in 0..n {
        for b in a + 1..n {
            if !allowed(a, b) || pairs.contains(&(a, b)) {
                continue;
            }
            if rng.gen_range(0..denom) < numer {
                pairs.insert((a, b));
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(u, v)| Edge {
            u,
            v,
            cost: int(rng.gen_range(1..=10)),
        })
        .collect();
    SteinerInstance::new(n, (0..num_terminals).collect(), edges)
}

impl SteinerInstance {
    /// Cheapest edge between `u` and `v` if any.
    pub fn find_edge(&self, u: usize, v: usize) -> Option<usize> {
        let (a, b) = (u.min(v), u.max(v));
        self.edges.iter().position(|e| e.u == a && e.v == b)
    }

    pub fn has_zero_cost_edge(&self) -> bool {
        self.edges.iter().any(|e| e.cost.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    const PATH: &str = "33D32945 STP File, STP Format Version 1.0\n\
SECTION Comment\nName \"path\"\nEND\n\n\
SECTION Graph\nNodes 3\nEdges 2\nE 1 2 1\nE 2 3 1\nEND\n\n\
SECTION Terminals\nTerminals 2\nT 1\nT 3\nEND\n\n\
SECTION Coordinates\nDD 1 0 0\nEND\nEOF\n";

    #[test]
    fn parses_path_instance() {
        let inst = parse_stp(PATH.as_bytes()).unwrap();
        assert_eq!(inst.num_vertices(), 3);
        assert_eq!(inst.terminals(), &[0, 2]);
        assert_eq!(inst.edges().len(), 2);
        assert_eq!(inst.edge(0), &Edge { u: 0, v: 1, cost: int(1) });
        assert_eq!(inst.edge(1), &Edge { u: 1, v: 2, cost: int(1) });
    }

    #[test]
    fn decimal_cost_is_exact() {
        let text = PATH.replace("E 1 2 1", "E 1 2 1.5");
        let inst = parse_stp(text.as_bytes()).unwrap();
        assert_eq!(inst.edge(0).cost, frac(3, 2));
    }

    #[test]
    fn rejects_empty_terminals() {
        let text = PATH.replace("Terminals 2\nT 1\nT 3\n", "");
        let err = parse_stp(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("no terminals"), "{err}");
    }

    #[test]
    fn rejects_dangling_and_negative() {
        let text = PATH.replace("E 2 3 1", "E 2 4 1");
        match parse_stp(text.as_bytes()).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 10);
                assert!(message.contains("dangling"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = PATH.replace("E 2 3 1", "E 2 3 -1");
        assert!(matches!(parse_stp(text.as_bytes()), Err(Error::Parse { line: 10, .. })));
        let text = PATH.replace("E 2 3 1\nEND", "E 2 3 1");
        assert!(parse_stp(text.as_bytes()).is_err());
    }

    #[test]
    fn stp_round_trip() {
        let inst = generate_random(4, 3, &frac(1, 2), 11, false).unwrap();
        let back = parse_stp(inst.to_stp().unwrap().as_bytes()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn two_terminals_single_edge() {
        for seed in 0..5 {
            for quasi in [false, true] {
                let inst = generate_random(2, 0, &int(1), seed, quasi).unwrap();
                assert_eq!(inst.edges().len(), 1);
                assert_eq!((inst.edge(0).u, inst.edge(0).v), (0, 1));
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_random(5, 4, &frac(1, 3), 99, false).unwrap();
        let b = generate_random(5, 4, &frac(1, 3), 99, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quasi_generator_has_terminal_endpoint() {
        let inst = generate_random(4, 2, &frac(1, 2), 7, true).unwrap();
        assert!(inst
            .edges()
            .iter()
            .all(|e| inst.is_terminal(e.u) || inst.is_terminal(e.v)));
        assert!(inst.is_quasi_bipartite());
        assert!(inst.is_connected());
    }

    #[test]
    fn rejects_one_terminal() {
        assert!(generate_random(1, 3, &int(1), 0, false).is_err());
    }

    #[test]
    fn pruning_drops_steiner_leaves() {
        // 0-1-2 path plus dangling Steiner 3 on vertex 1
        let inst = SteinerInstance::new(
            4,
            vec![0, 2],
            vec![
                Edge { u: 0, v: 1, cost: int(1) },
                Edge { u: 1, v: 2, cost: int(1) },
                Edge { u: 1, v: 3, cost: int(5) },
            ],
        )
        .unwrap();
        let t = SteinerTree::pruned(&inst, &[0, 1, 2, 0]);
        assert_eq!(t.edges, vec![0, 1]);
        assert_eq!(t.cost, int(2));
        assert!(t.spans_terminals(&inst) && t.is_acyclic(&inst) && t.leaves_are_terminals(&inst));
    }
}
