//! The bidirected cut relaxation BCR(r) and its natural decomposition into a hypergraphic LP
//! solution on quasi-bipartite instances.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::blowup::BRUTE_FORCE_TERMINALS;
use crate::components::Component;
use crate::error::{ensure, Error, Result};
use crate::flow::FlowNetwork;
use crate::hyperlp::FractionalSolution;
use crate::instance::{Edge, SteinerInstance};
use crate::rational::{frac, int, serialize, Rational};
use crate::simplex::{Row, Sense, Simplex, Status};

/// Replaces every terminal–terminal edge by two edges through a fresh Steiner vertex, each
/// carrying half the cost. Other edges keep their order; split edges are appended.
pub fn preprocess_quasi(inst: &SteinerInstance) -> Result<SteinerInstance> {
    if !inst.is_quasi_bipartite() {
        return Err(Error::InvalidArgument("instance is not quasi-bipartite".into()));
    }
    let mut n = inst.num_vertices();
    let mut edges: Vec<Edge> = Vec::new();
    let mut split: Vec<Edge> = Vec::new();
    for e in inst.edges() {
        if inst.is_terminal(e.u) && inst.is_terminal(e.v) {
            let half = &e.cost * frac(1, 2);
            split.push(Edge {
                u: e.u,
                v: n,
                cost: half.clone(),
            });
            split.push(Edge { u: n, v: e.v, cost: half });
            n += 1;
        } else {
            edges.push(e.clone());
        }
    }
    edges.extend(split);
    SteinerInstance::new(n, inst.terminals().to_vec(), edges)
}

/// Arc `2i` runs from `edge(i).u` to `edge(i).v`, arc `2i + 1` the other way.
pub fn arc_endpoints(inst: &SteinerInstance, arc: usize) -> (usize, usize) {
    let e = inst.edge(arc / 2);
    if arc.is_multiple_of(2) {
        (e.u, e.v)
    } else {
        (e.v, e.u)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BcrSolution {
    /// Root vertex (a terminal).
    pub root: usize,
    /// Capacity per arc, indexed as in [`arc_endpoints`].
    #[serde(skip)]
    pub x: Vec<Rational>,
    #[serde(serialize_with = "serialize")]
    pub objective: Rational,
}

impl BcrSolution {
    /// x(u,v) + x(v,u) for instance edge `i`.
    pub fn load(&self, i: usize) -> Rational {
        &self.x[2 * i] + &self.x[2 * i + 1]
    }

    pub fn cost(&self, inst: &SteinerInstance) -> Rational {
        self.x.iter().enumerate().map(|(a, v)| &inst.edge(a / 2).cost * v).sum()
    }

    /// Minimum over terminals t ≠ root of the max t→root flow under x.
    pub fn min_terminal_flow(&self, inst: &SteinerInstance) -> Rational {
        min_terminal_flow(inst, &self.x, &BTreeMap::new(), self.root)
    }

    pub fn is_feasible(&self, inst: &SteinerInstance) -> bool {
        self.x.iter().all(|v| !v.is_negative()) && self.min_terminal_flow(inst) >= Rational::one()
    }
}

fn capacity_network(
    n: usize,
    inst: &SteinerInstance,
    x: &[Rational],
    extra: &BTreeMap<(usize, usize), Rational>,
) -> (FlowNetwork<Rational>, Vec<(usize, usize)>) {
    let extra_nodes = extra.keys().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    let mut net = FlowNetwork::new(n.max(extra_nodes));
    // (flow arc, owner): owner < 2|E| is an instance arc, otherwise an index into `extra`
    let mut owners = Vec::new();
    for (a, cap) in x.iter().enumerate() {
        if cap.is_positive() {
            let (u, v) = arc_endpoints(inst, a);
            owners.push((net.add_arc(u, v, cap.clone()), a));
        }
    }
    for (k, (&(u, v), cap)) in extra.iter().enumerate() {
        if cap.is_positive() {
            owners.push((net.add_arc(u, v, cap.clone()), x.len() + k));
        }
    }
    (net, owners)
}

fn min_terminal_flow(
    inst: &SteinerInstance,
    x: &[Rational],
    extra: &BTreeMap<(usize, usize), Rational>,
    root: usize,
) -> Rational {
    let mut best: Option<Rational> = None;
    for &t in inst.terminals() {
        if t == root {
            continue;
        }
        let (mut net, _) = capacity_network(inst.num_vertices(), inst, x, extra);
        let value = net.max_flow(t, root);
        if best.as_ref().is_none_or(|b| value < *b) {
            best = Some(value);
        }
    }
    best.unwrap_or_else(Rational::one)
}

fn cut_row(inst: &SteinerInstance, side: &[bool]) -> Row {
    let coeffs = (0..2 * inst.edges().len())
        .filter(|&a| {
            let (u, v) = arc_endpoints(inst, a);
            side[u] && !side[v]
        })
        .map(|a| (a, -Rational::one()))
        .collect();
    Row {
        coeffs,
        sense: Sense::Le,
        rhs: -Rational::one(),
    }
}

/// Exact optimum of BCR(root) by cutting planes. A terminal whose max flow to the root is below
/// one contributes both its smallest and its largest violated source side. Ties in cost are broken lexicographically by
/// a secondary objective that charges edge `i` the amount `i + 1` per unit in either direction.
pub fn solve_bcr(inst: &SteinerInstance, root: usize) -> Result<BcrSolution> {
    if !inst.is_terminal(root) {
        return Err(Error::InvalidArgument(format!("root {root} is not a terminal")));
    }
    if !inst.terminals_connected() {
        return Err(Error::LpInfeasible);
    }
    let m = 2 * inst.edges().len();
    let cost: Vec<Rational> = (0..m).map(|a| inst.edge(a / 2).cost.clone()).collect();
    let tie: Vec<Rational> = (0..m).map(|a| int(a as i64 / 2 + 1)).collect();
    let mut lp = Simplex::new(m, vec![cost, tie]);
    let n = inst.num_vertices();
    let mut seen: Vec<Vec<bool>> = Vec::new();
    for &t in inst.terminals() {
        if t != root {
            let mut side = vec![false; n];
            side[t] = true;
            lp.push_row(cut_row(inst, &side));
            seen.push(side);
        }
    }
    if lp.num_rows() == 0 {
        return Ok(BcrSolution {
            root,
            x: vec![Rational::zero(); m],
            objective: Rational::zero(),
        });
    }
    let mut status = lp.solve();
    loop {
        if status != Status::Optimal {
            return Err(Error::LpInfeasible);
        }
        let x = lp.values();
        let mut cuts = Vec::new();
        for &t in inst.terminals() {
            if t == root {
                continue;
            }
            let (mut net, _) = capacity_network(n, inst, &x, &BTreeMap::new());
            if net.max_flow(t, root) < Rational::one() {
                let front: Vec<bool> = net.reachable_from(t).into_iter().take(n).collect();
                let back: Vec<bool> = net.reaches_sink(root).into_iter().take(n).map(|b| !b).collect();
                for side in [front, back] {
                    if !seen.contains(&side) && !cuts.contains(&side) {
                        cuts.push(side);
                    }
                }
            }
        }
        if cuts.is_empty() {
            let objective = x.iter().enumerate().map(|(a, v)| &inst.edge(a / 2).cost * v).sum();
            return Ok(BcrSolution { root, x, objective });
        }
        for side in cuts {
            status = lp.add_row_and_resolve(cut_row(inst, &side));
            seen.push(side);
            if status != Status::Optimal {
                return Err(Error::LpInfeasible);
            }
        }
    }
}

/// Moves the root from `from` to `to` by reversing one unit of `to`→`from` flow.
fn reroute(
    inst: &SteinerInstance,
    x: &mut [Rational],
    extra: &mut BTreeMap<(usize, usize), Rational>,
    from: usize,
    to: usize,
) -> Result<()> {
    if from == to {
        return Ok(());
    }
    let (mut net, owners) = capacity_network(inst.num_vertices(), inst, x, extra);
    let source = net.add_node();
    net.add_arc(source, to, Rational::one());
    let value = net.max_flow(source, from);
    ensure!(value.is_one(), "no unit flow from {to} to root {from}; capacities are not BCR-feasible");
    let keys: Vec<(usize, usize)> = extra.keys().copied().collect();
    for (arc, owner) in owners {
        let f = net.flow(arc);
        if !f.is_positive() {
            continue;
        }
        if owner < x.len() {
            x[owner] -= &f;
            x[owner ^ 1] += &f;
        } else {
            let (u, v) = keys[owner - x.len()];
            *extra.get_mut(&(u, v)).expect("key present") -= &f;
            *extra.entry((v, u)).or_insert_with(Rational::zero) += &f;
        }
    }
    extra.retain(|_, c| !c.is_zero());
    Ok(())
}

/// A solution of BCR(`to`) with the same cost and the same undirected loads.
pub fn relocate_root(inst: &SteinerInstance, sol: &BcrSolution, to: usize) -> Result<BcrSolution> {
    if !inst.is_terminal(to) {
        return Err(Error::InvalidArgument(format!("root {to} is not a terminal")));
    }
    let mut x = sol.x.clone();
    reroute(inst, &mut x, &mut BTreeMap::new(), sol.root, to)?;
    Ok(BcrSolution {
        root: to,
        x,
        objective: sol.objective.clone(),
    })
}

/// Whether every edge joins a terminal to a Steiner vertex.
pub fn is_preprocessed(inst: &SteinerInstance) -> bool {
    inst.edges().iter().all(|e| inst.is_terminal(e.u) != inst.is_terminal(e.v))
}

/// Splits an optimal BCR solution into weighted stars, one star center at a time in ascending
/// vertex order. Each step roots the solution at the center's cheapest neighbour r with
/// positive load, takes the arc (u,r) and every loaded arc into u, and moves their common
/// minimum ε into a new component. With `check`, BCR feasibility is re-verified after every
/// step. The result is asserted LP-feasible with objective equal to the BCR objective.
pub fn natural_decomposition(inst: &SteinerInstance, sol: &BcrSolution, check: bool) -> Result<FractionalSolution> {
    if !is_preprocessed(inst) {
        return Err(Error::InvalidArgument(
            "every edge must join a terminal and a Steiner vertex; run preprocess_quasi".into(),
        ));
    }
    let n = inst.num_vertices();
    let mut x = sol.x.clone();
    let mut extra: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
    let mut root = sol.root;
    let mut next_copy = n;
    let mut emitted: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
    let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, e) in inst.edges().iter().enumerate() {
        let center = if inst.is_terminal(e.u) { e.v } else { e.u };
        incident.entry(center).or_default().push(i);
    }
    let step_cap = 4 * x.len() + 16;
    let mut steps = 0;
    for (&u, star) in &incident {
        // arc from u towards the terminal end of edge i, and its reverse
        let out_arc = |i: usize| if inst.edge(i).u == u { 2 * i } else { 2 * i + 1 };
        loop {
            let loaded: Vec<usize> = star
                .iter()
                .copied()
                .filter(|&i| x[2 * i].is_positive() || x[2 * i + 1].is_positive())
                .collect();
            let Some(&cheapest) = loaded.iter().min_by(|&&a, &&b| inst.edge(a).cost.cmp(&inst.edge(b).cost).then(a.cmp(&b)))
            else {
                break;
            };
            steps += 1;
            ensure!(steps <= step_cap, "natural decomposition exceeded {step_cap} steps");
            let r = inst.edge(cheapest).other(u);
            reroute(inst, &mut x, &mut extra, root, r)?;
            root = r;
            ensure!(
                x[out_arc(cheapest) ^ 1].is_zero(),
                "positive flow from root {r} into star {u}"
            );
            let outgoing: Vec<usize> = loaded.iter().copied().filter(|&i| i != cheapest && x[out_arc(i)].is_positive()).collect();
            ensure!(outgoing.is_empty(), "star {u} sends flow to non-root terminals via edges {outgoing:?}");
            let incoming: Vec<usize> = loaded
                .iter()
                .copied()
                .filter(|&i| i != cheapest && x[out_arc(i) ^ 1].is_positive())
                .collect();
            ensure!(!incoming.is_empty(), "star {u} has no incoming flow towards root {r}");
            let eps = incoming
                .iter()
                .map(|&i| x[out_arc(i) ^ 1].clone())
                .chain([x[out_arc(cheapest)].clone()])
                .min()
                .expect("nonempty");
            ensure!(eps.is_positive(), "star {u} has no capacity on its root arc");
            let copy = next_copy;
            next_copy += 1;
            x[out_arc(cheapest)] -= &eps;
            extra.insert((copy, r), eps.clone());
            let mut edges = vec![cheapest];
            for &i in &incoming {
                x[out_arc(i) ^ 1] -= &eps;
                extra.insert((inst.edge(i).other(u), copy), eps.clone());
                edges.push(i);
            }
            edges.sort_unstable();
            *emitted.entry(edges).or_insert_with(Rational::zero) += &eps;
            if check {
                let flow = min_terminal_flow(inst, &x, &extra, root);
                ensure!(flow >= Rational::one(), "capacity is not BCR-feasible after a step at star {u}");
            }
        }
    }
    let support: Vec<(Component, Rational)> = emitted
        .into_iter()
        .map(|(edges, weight)| (star_component(inst, edges), weight))
        .collect();
    let out = FractionalSolution::new(inst.terminals().len(), support);
    ensure!(
        out.objective == sol.objective,
        "decomposition objective {} differs from BCR objective {}",
        out.objective,
        sol.objective
    );
    ensure!(lp_feasible(&out)?, "decomposition is not feasible for the hypergraphic LP");
    Ok(out)
}

fn star_component(inst: &SteinerInstance, edges: Vec<usize>) -> Component {
    let mut terminals: Vec<usize> = edges
        .iter()
        .map(|&i| {
            let e = inst.edge(i);
            if inst.is_terminal(e.u) {
                e.u
            } else {
                e.v
            }
        })
        .collect();
    terminals.sort_unstable();
    let mask = terminals
        .iter()
        .map(|&t| 1u64 << inst.terminal_index(t).expect("terminal"))
        .fold(0, |a, b| a | b);
    let cost = edges.iter().map(|&i| inst.edge(i).cost.clone()).sum();
    Component {
        terminals,
        mask,
        edges,
        cost,
    }
}

fn lp_feasible(x: &FractionalSolution) -> Result<bool> {
    if x.num_terminals <= BRUTE_FORCE_TERMINALS {
        return x.is_feasible();
    }
    let full = (1u64 << x.num_terminals) - 1;
    Ok(x.slack(full).is_zero() && x.violated_subset().is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::enumerate_components;
    use crate::gen::random_star_instance;
    use crate::hyperlp::{solve_lp_exact, LpMode};

    fn edge(u: usize, v: usize, c: i64) -> Edge {
        Edge { u, v, cost: int(c) }
    }

    fn lp_value(inst: &SteinerInstance) -> Rational {
        let r = inst.terminals().len();
        let comps = enumerate_components(inst, r).unwrap();
        solve_lp_exact(&comps, r, LpMode::CuttingPlane).unwrap().objective
    }

    #[test]
    fn path_instance() {
        // a = 0, u = 1, b = 2
        let inst = SteinerInstance::new(3, vec![0, 2], vec![edge(0, 1, 1), edge(1, 2, 1)]).unwrap();
        let sol = solve_bcr(&inst, 0).unwrap();
        assert_eq!(sol.objective, int(2));
        assert_eq!(sol.x, vec![int(0), int(1), int(0), int(1)]);
        let moved = relocate_root(&inst, &sol, 2).unwrap();
        assert_eq!(moved.x, vec![int(1), int(0), int(1), int(0)]);
        assert!(moved.is_feasible(&inst));
        assert_eq!(relocate_root(&inst, &sol, 0).unwrap(), sol);
        let x = natural_decomposition(&inst, &sol, true).unwrap();
        assert_eq!(x.support.len(), 1);
        assert_eq!(x.support[0].1, int(1));
    }

    #[test]
    fn preprocessing_splits_terminal_edges() {
        let inst = SteinerInstance::new(3, vec![0, 1], vec![edge(0, 1, 2), edge(1, 2, 1)]).unwrap();
        let out = preprocess_quasi(&inst).unwrap();
        assert_eq!(out.num_vertices(), 4);
        assert_eq!(out.edges(), &[edge(1, 2, 1), edge(0, 3, 1), edge(1, 3, 1)]);
        assert!(is_preprocessed(&out));
        let star = SteinerInstance::new(3, vec![0, 1], vec![edge(0, 2, 2), edge(1, 2, 1)]).unwrap();
        assert_eq!(preprocess_quasi(&star).unwrap(), star);
        let general = SteinerInstance::new(4, vec![0, 1], vec![edge(0, 2, 1), edge(2, 3, 1), edge(3, 1, 1)]).unwrap();
        assert!(preprocess_quasi(&general).is_err());
    }

    #[test]
    fn half_integral_mixture_of_two_stars() {
        // terminals 0..3; centers 3, 4, 5 each join two terminals, a triangle of stars
        let edges = vec![edge(0, 3, 1), edge(1, 3, 1), edge(1, 4, 1), edge(2, 4, 1), edge(0, 5, 1), edge(2, 5, 1), edge(0, 6, 2), edge(1, 6, 2), edge(2, 6, 2)];
        let inst = SteinerInstance::new(7, vec![0, 1, 2], edges).unwrap();
        let sol = solve_bcr(&inst, 0).unwrap();
        assert_eq!(sol.objective, lp_value(&inst));
        let x = natural_decomposition(&inst, &sol, true).unwrap();
        assert!(x.is_feasible().unwrap());
        assert_eq!(x.objective, sol.objective);
    }

    #[test]
    fn root_independence_and_relocation() {
        for seed in 0..12 {
            let inst = preprocess_quasi(&random_star_instance(seed, 4, 6, seed % 2 == 0).unwrap()).unwrap();
            let lp = lp_value(&inst);
            let sols: Vec<BcrSolution> = inst.terminals().iter().map(|&r| solve_bcr(&inst, r).unwrap()).collect();
            for sol in &sols {
                assert_eq!(sol.objective, lp, "seed {seed}");
                assert!(sol.is_feasible(&inst));
                for &t in inst.terminals() {
                    let moved = relocate_root(&inst, sol, t).unwrap();
                    assert!(moved.is_feasible(&inst));
                    assert_eq!(moved.cost(&inst), sol.objective);
                    for i in 0..inst.edges().len() {
                        assert_eq!(moved.load(i), sol.load(i));
                    }
                }
            }
        }
    }

    #[test]
    fn incoming_flow_condition() {
        for seed in 0..12 {
            let inst = preprocess_quasi(&random_star_instance(seed, 5, 7, false).unwrap()).unwrap();
            for &r in inst.terminals() {
                let sol = solve_bcr(&inst, r).unwrap();
                for (i, e) in inst.edges().iter().enumerate() {
                    if e.u != r && e.v != r {
                        continue;
                    }
                    let u = e.other(r);
                    let into_u = if e.u == r { 2 * i } else { 2 * i + 1 };
                    assert!(sol.x[into_u].is_zero(), "x(r,u) > 0, seed {seed}");
                    for (j, f) in inst.edges().iter().enumerate() {
                        let costlier = f.cost > e.cost || (f.cost == e.cost && j > i);
                        if j != i && (f.u == u || f.v == u) && costlier {
                            let out = if f.u == u { 2 * j } else { 2 * j + 1 };
                            assert!(sol.x[out].is_zero(), "flow out to a costlier terminal, seed {seed}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let inst = SteinerInstance::new(3, vec![0, 2], vec![edge(0, 1, 1)]).unwrap();
        assert_eq!(solve_bcr(&inst, 0), Err(Error::LpInfeasible));
        assert!(solve_bcr(&inst, 1).is_err());
        let direct = SteinerInstance::new(2, vec![0, 1], vec![edge(0, 1, 1)]).unwrap();
        let sol = solve_bcr(&direct, 0).unwrap();
        assert!(natural_decomposition(&direct, &sol, false).is_err());
    }
}
