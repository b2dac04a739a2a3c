//! The contraction algorithm: repeatedly contract a component Q whose maximum-weight basis B
//! of M_Q^K pays for it, remove B and the edges it cleans up, and track the potential.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_traits::Zero;
use serde::Serialize;

use crate::blowup::BlowupGraph;
use crate::components::enumerate_components;
use crate::error::{ensure, Error, Result};
use crate::hyperlp::{solve_lp_with, FractionalSolution, LpOptions};
use crate::instance::{SteinerInstance, SteinerTree};
use crate::matroid::{OracleMode, RemovalMatroid};
use crate::rational::{int, ln4_surrogate, quasi_bound, serialize, Rational};
use crate::splitting::{choose_splitting_set, compute_witnesses_and_weights, potential_of, SplittingState, Strategy};
use crate::util::bits;

#[derive(Clone, Debug)]
pub struct AlgorithmState {
    pub graph: BlowupGraph,
    pub core: BTreeSet<usize>,
    /// W_t(e) for every edge of the current graph.
    pub witness: BTreeMap<usize, Vec<usize>>,
    /// Instance edges of the contracted components so far.
    pub tree_edges: BTreeSet<usize>,
}

impl AlgorithmState {
    pub fn new(graph: BlowupGraph, splitting: &SplittingState) -> Self {
        AlgorithmState {
            graph,
            core: splitting.core.clone(),
            witness: splitting.witness.clone(),
            tree_edges: BTreeSet::new(),
        }
    }

    pub fn potential(&self) -> Rational {
        potential_of(&self.graph, &self.witness)
    }

    /// w(e) = c(e) + Σ_{f ∉ K, e ∈ W(f)} c(f)/|W(f)| for core edges.
    pub fn weights(&self) -> BTreeMap<usize, Rational> {
        let mut w: BTreeMap<usize, Rational> = self.core.iter().map(|&id| (id, self.graph.edge(id).cost.clone())).collect();
        for (id, wit) in &self.witness {
            if self.core.contains(id) {
                continue;
            }
            let share = &self.graph.edge(*id).cost / int(wit.len() as i64);
            for f in wit {
                if let Some(slot) = w.get_mut(f) {
                    *slot += &share;
                }
            }
        }
        w
    }

    pub fn is_done(&self) -> bool {
        self.graph.num_terminals() <= 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    /// Index into the current graph's pieces.
    pub piece: usize,
    /// Terminal positions of Q.
    pub q: u64,
    pub basis: Vec<usize>,
    pub basis_weight: Rational,
    pub cost: Rational,
}

/// Evaluates every distinct terminal set of Γ(𝒳_t) (cheapest piece as representative) and
/// returns the one maximizing w(B^Q)/N − cost(Q); ties go to the earlier piece.
pub fn select_component(state: &AlgorithmState) -> Result<Selection> {
    let g = &state.graph;
    let weights = state.weights();
    let mut reps: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, p) in g.pieces().iter().enumerate() {
        match reps.get(&p.terminals) {
            Some(&j) if g.piece_cost(&g.pieces()[j]) <= g.piece_cost(p) => {}
            _ => {
                reps.insert(p.terminals, i);
            }
        }
    }
    let mut candidates: Vec<(usize, u64)> = reps.into_iter().map(|(q, i)| (i, q)).collect();
    candidates.sort_unstable();
    let n = int(g.n());
    let mut best: Option<(Rational, Selection)> = None;
    for (i, q) in candidates {
        let m = RemovalMatroid::new(g, q, Some(&state.core), OracleMode::Gammoid)?;
        let basis = m.greedy_max_weight_basis(&weights)?;
        let basis_weight: Rational = basis.iter().map(|id| weights[id].clone()).sum();
        let cost = g.piece_cost(&g.pieces()[i]);
        let score = &basis_weight / &n - &cost;
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((
                score,
                Selection {
                    piece: i,
                    q,
                    basis,
                    basis_weight,
                    cost,
                },
            ));
        }
    }
    let (score, sel) = best.ok_or_else(|| Error::Invariant("no component to contract".into()))?;
    ensure!(
        score >= Rational::zero(),
        "no component satisfies cost(Q) <= w(B)/N (best margin {score})"
    );
    Ok(sel)
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationLog {
    /// Original terminal positions merged by Q.
    pub q_terminals: Vec<usize>,
    #[serde(serialize_with = "serialize")]
    pub q_cost: Rational,
    pub basis: Vec<usize>,
    pub cleanup: Vec<usize>,
    #[serde(serialize_with = "serialize")]
    pub basis_weight: Rational,
    #[serde(serialize_with = "serialize")]
    pub potential_before: Rational,
    #[serde(serialize_with = "serialize")]
    pub potential_after: Rational,
}

/// One iteration: F = {e ∉ K | W(e) ⊆ B}, 𝒳 ← (𝒳 − B − F)/Q, K ← K ∖ B, W ← W ∖ B.
/// With `check`, also verifies that (𝒳 ⊛ Q) − B is feasible, that the new graph is feasible
/// and that the updated witnesses agree with a recomputation.
pub fn contract_step(state: &AlgorithmState, sel: &Selection, check: bool) -> Result<(AlgorithmState, IterationLog)> {
    let g = &state.graph;
    let basis: BTreeSet<usize> = sel.basis.iter().copied().collect();
    ensure!(basis.is_subset(&state.core), "basis must consist of core edges");
    ensure!(
        basis.len() as i64 == g.n() * (sel.q.count_ones() as i64 - 1),
        "basis has the wrong size"
    );
    if check {
        let plus = g.add_component(sel.piece, usize::MAX);
        let removed: HashSet<usize> = basis.iter().copied().collect();
        ensure!(plus.is_feasible_without(&removed), "(X + Q) - B is infeasible");
    }
    let cleanup: BTreeSet<usize> = state
        .witness
        .iter()
        .filter(|(id, w)| !state.core.contains(id) && w.iter().all(|f| basis.contains(f)))
        .map(|(id, _)| *id)
        .collect();
    let removed: HashSet<usize> = basis.iter().chain(&cleanup).copied().collect();
    let graph = g.remove_and_contract(&removed, sel.q)?;
    let core: BTreeSet<usize> = state.core.difference(&basis).copied().collect();
    let witness: BTreeMap<usize, Vec<usize>> = state
        .witness
        .iter()
        .filter(|(id, _)| !removed.contains(id))
        .map(|(id, w)| (*id, w.iter().copied().filter(|f| !basis.contains(f)).collect()))
        .collect();
    let mut tree_edges = state.tree_edges.clone();
    tree_edges.extend(g.origins(&g.pieces()[sel.piece].edges));
    let next = AlgorithmState {
        graph,
        core,
        witness,
        tree_edges,
    };
    let before = state.potential();
    let after = next.potential();
    ensure!(
        &before - &after >= sel.basis_weight,
        "potential dropped by {} < w(B) = {}",
        &before - &after,
        sel.basis_weight
    );
    if check {
        ensure!(next.graph.is_feasible(), "contracted blowup graph is infeasible");
        let fresh = compute_witnesses_and_weights(&next.graph, &next.core)?;
        ensure!(fresh.witness == next.witness, "updated witness sets differ from a recomputation");
    }
    let mut q_terminals = Vec::new();
    for i in bits(sel.q) {
        q_terminals.extend(bits(g.vertex(g.terminals()[i]).represents));
    }
    q_terminals.sort_unstable();
    let log = IterationLog {
        q_terminals,
        q_cost: sel.cost.clone(),
        basis: sel.basis.clone(),
        cleanup: cleanup.into_iter().collect(),
        basis_weight: sel.basis_weight.clone(),
        potential_before: before,
        potential_after: after,
    };
    Ok((next, log))
}

/// Runs the loop to completion from a feasible blowup graph and splitting set.
pub fn contract_all(graph: BlowupGraph, splitting: &SplittingState, check: bool) -> Result<(AlgorithmState, Vec<IterationLog>)> {
    let mut state = AlgorithmState::new(graph, splitting);
    let mut log = Vec::new();
    while !state.is_done() {
        let sel = select_component(&state)?;
        let (next, entry) = contract_step(&state, &sel, check)?;
        state = next;
        log.push(entry);
    }
    Ok((state, log))
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Component size bound k.
    pub k: usize,
    pub strategy: Strategy,
    pub check: bool,
    pub lp: LpOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            k: usize::MAX,
            strategy: Strategy::Dp,
            check: false,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub strategy: String,
    pub k: usize,
    pub n: i64,
    #[serde(serialize_with = "serialize")]
    pub lp_value: Rational,
    /// cost(𝒳) = N·lp_value.
    #[serde(serialize_with = "serialize")]
    pub blowup_cost: Rational,
    /// Φ_{K₀}(𝒳₀).
    #[serde(serialize_with = "serialize")]
    pub potential: Rational,
    #[serde(serialize_with = "serialize")]
    pub potential_over_n: Rational,
    /// Σ_t cost(Q_t).
    #[serde(serialize_with = "serialize")]
    pub contracted_cost: Rational,
    #[serde(serialize_with = "serialize")]
    pub tree_cost: Rational,
    /// ln 4 surrogate for `dp` and `random`, 73/60 for `quasi`.
    #[serde(serialize_with = "serialize")]
    pub bound: Rational,
    /// tree_cost ≤ Φ/N.
    pub tree_within_potential: bool,
    /// Φ ≤ bound·cost(𝒳).
    pub potential_within_bound: bool,
    pub iterations: Vec<IterationLog>,
}

impl Certificate {
    /// tree_cost / lp_value, when the LP value is positive.
    pub fn ratio(&self) -> Option<Rational> {
        (!self.lp_value.is_zero()).then(|| &self.tree_cost / &self.lp_value)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub tree: SteinerTree,
    pub solution: FractionalSolution,
    pub certificate: Certificate,
}

fn strategy_name(s: Strategy) -> String {
    match s {
        Strategy::Dp => "dp".into(),
        Strategy::Quasi => "quasi".into(),
        Strategy::Random(seed) => format!("random:{seed}"),
    }
}

/// LP, blowup, splitting set, contraction loop and certificate.
pub fn run(inst: &SteinerInstance, options: &RunOptions) -> Result<RunOutput> {
    if !inst.terminals_connected() {
        return Err(Error::InvalidInstance("terminals are not connected".into()));
    }
    if options.strategy == Strategy::Quasi && !inst.is_quasi_bipartite() {
        return Err(Error::InvalidArgument("the quasi strategy needs a quasi-bipartite instance".into()));
    }
    let r = inst.terminals().len();
    let k = options.k.min(r.max(2));
    let comps = enumerate_components(inst, k)?;
    let solution = solve_lp_with(&comps, r, &options.lp)?;
    run_with_solution(inst, solution, options.strategy, options.check, k)
}

/// The algorithm on a given LP-feasible solution.
pub fn run_with_solution(
    inst: &SteinerInstance,
    solution: FractionalSolution,
    strategy: Strategy,
    check: bool,
    k: usize,
) -> Result<RunOutput> {
    let graph = BlowupGraph::from_solution(inst, &solution)?;
    ensure!(graph.is_feasible(), "blowup graph of the LP solution is infeasible");
    let splitting = choose_splitting_set(&graph, strategy)?;
    let potential = splitting.potential(&graph);
    let n = graph.n();
    let blowup_cost = graph.cost();
    let (state, iterations) = contract_all(graph, &splitting, check)?;
    let contracted_cost: Rational = iterations.iter().map(|it| it.q_cost.clone()).sum();
    let edges: Vec<usize> = state.tree_edges.iter().copied().collect();
    let tree = SteinerTree::pruned(inst, &edges);
    ensure!(tree.spans_terminals(inst), "output does not connect all terminals");
    ensure!(tree.cost <= contracted_cost, "pruning increased the cost");
    let potential_over_n = &potential / int(n);
    let weight_sum: Rational = iterations.iter().map(|it| it.basis_weight.clone()).sum();
    ensure!(weight_sum <= potential, "removed weight exceeds the initial potential");
    let bound = match strategy {
        Strategy::Quasi => quasi_bound(),
        _ => ln4_surrogate(),
    };
    let certificate = Certificate {
        strategy: strategy_name(strategy),
        k,
        n,
        lp_value: solution.objective.clone(),
        potential_within_bound: potential <= &bound * &blowup_cost,
        tree_within_potential: tree.cost <= potential_over_n,
        blowup_cost,
        potential,
        potential_over_n,
        contracted_cost,
        tree_cost: tree.cost.clone(),
        bound,
        iterations,
    };
    ensure!(certificate.tree_within_potential, "tree cost exceeds potential / N");
    Ok(RunOutput {
        tree,
        solution,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_hypertree_mixture, random_star_instance, star_piece};
    use crate::instance::{generate_random, Edge};
    use crate::oracles::exact_steiner_tree;
    use crate::rational::frac;

    #[test]
    fn single_component_is_selected_with_full_basis() {
        let g = star_piece(&[int(1), int(2), int(3)]).unwrap();
        let k = choose_splitting_set(&g, Strategy::Dp).unwrap();
        let state = AlgorithmState::new(g.clone(), &k);
        let sel = select_component(&state).unwrap();
        assert_eq!(sel.q, 0b111);
        assert_eq!(sel.basis.len(), 2);
        assert!(sel.cost <= sel.basis_weight);
        let (done, log) = contract_all(g, &k, true).unwrap();
        assert!(done.is_done());
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].potential_after, int(0));
    }

    #[test]
    fn selection_is_the_best_candidate() {
        for seed in 1..20 {
            let (inst, x) = random_hypertree_mixture(seed, 4, 2, 3).unwrap();
            let g = BlowupGraph::from_solution(&inst, &x).unwrap();
            let k = choose_splitting_set(&g, Strategy::Dp).unwrap();
            let state = AlgorithmState::new(g.clone(), &k);
            let sel = select_component(&state).unwrap();
            let weights = state.weights();
            let n = int(g.n());
            // every piece independently, with the submodular oracle
            let best = g
                .pieces()
                .iter()
                .map(|p| {
                    let m = RemovalMatroid::new(&g, p.terminals, Some(&state.core), OracleMode::Submodular).unwrap();
                    let b = m.greedy_max_weight_basis(&weights).unwrap();
                    b.iter().map(|e| weights[e].clone()).sum::<Rational>() / &n - g.piece_cost(p)
                })
                .max()
                .unwrap();
            assert_eq!(&sel.basis_weight / &n - &sel.cost, best, "seed {seed}");
            assert!(&sel.cost * &n <= sel.basis_weight);
        }
    }

    #[test]
    fn potential_pays_for_every_iteration() {
        for seed in 1..15 {
            let (inst, x) = random_hypertree_mixture(seed, 5, 2, 2).unwrap();
            let out = run_with_solution(&inst, x, Strategy::Dp, true, 5).unwrap();
            for it in &out.certificate.iterations {
                assert!(&it.potential_before - &it.potential_after >= it.basis_weight);
                assert!(&it.q_cost * int(out.certificate.n) <= it.basis_weight);
            }
            assert!(out.certificate.tree_within_potential);
            assert!(out.tree.spans_terminals(&inst));
        }
    }

    #[test]
    fn run_certifies_ln4_on_random_instances() {
        for seed in 0..15 {
            let inst = generate_random(3 + seed as usize % 4, 3, &frac(1, 2), seed, false).unwrap();
            let out = run(&inst, &RunOptions { check: true, ..RunOptions::default() }).unwrap();
            let c = &out.certificate;
            assert!(c.potential_within_bound && c.tree_within_potential);
            assert!(c.tree_cost <= &c.bound * &c.lp_value);
            let (exact, _) = exact_steiner_tree(&inst).unwrap();
            assert!(c.lp_value <= exact && exact <= c.tree_cost);
        }
    }

    #[test]
    fn quasi_strategy() {
        for seed in 0..10 {
            let inst = crate::bcr::preprocess_quasi(&random_star_instance(seed, 4, 5, true).unwrap()).unwrap();
            let out = run(&inst, &RunOptions { strategy: Strategy::Quasi, check: true, ..RunOptions::default() }).unwrap();
            assert_eq!(out.certificate.bound, frac(73, 60));
            assert!(out.certificate.tree_cost * int(60) <= out.certificate.lp_value.clone() * int(73));
        }
        let general = SteinerInstance::new(
            4,
            vec![0, 1],
            vec![
                Edge { u: 0, v: 2, cost: int(1) },
                Edge { u: 2, v: 3, cost: int(1) },
                Edge { u: 3, v: 1, cost: int(1) },
            ],
        )
        .unwrap();
        let opts = RunOptions { strategy: Strategy::Quasi, ..RunOptions::default() };
        assert!(matches!(run(&general, &opts), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn disconnected_terminals_are_rejected() {
        let inst = SteinerInstance::new(3, vec![0, 2], vec![Edge { u: 0, v: 1, cost: int(1) }]).unwrap();
        assert!(matches!(run(&inst, &RunOptions::default()), Err(Error::InvalidInstance(_))));
    }
}
