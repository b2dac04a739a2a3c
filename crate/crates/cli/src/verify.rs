//! Seeded property suites, one check per seed.

use std::collections::{BTreeSet, HashSet};
use std::ops::Range;

use clap::ValueEnum;
use hypersteiner::bcr::{natural_decomposition, preprocess_quasi, solve_bcr};
use hypersteiner::blowup::BlowupGraph;
use hypersteiner::components::enumerate_components;
use hypersteiner::contract::{run, RunOptions};
use hypersteiner::gen::{random_hypertree_mixture, random_piece, random_star_instance};
use hypersteiner::hyperlp::{solve_lp_exact, LpMode};
use hypersteiner::instance::generate_random;
use hypersteiner::matroid::{verify_uniform_point, OracleMode, RemovalMatroid};
use hypersteiner::oracles::{enumerate_minimal_removals, exact_steiner_tree, min_potential_by_enumeration};
use hypersteiner::partition::{decompose, random_intersecting_submodular, verify_claim1};
use hypersteiner::rational::frac;
use hypersteiner::sepflow::{GammoidOracle, SeparationNetwork};
use hypersteiner::splitting::{choose_splitting_set, is_splitting_set, optimal_splitting_set, Strategy};
use hypersteiner::util::bits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::{emit, CliResult, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Rank axioms, bases equal B_Q, basis size N(|Q|-1).
    Matroid,
    /// Gammoid rank equals submodular rank.
    Gammoid,
    /// Max-flow identity against exhaustive minimum slack.
    Separation,
    /// Uniform point and the flow-sum inequality over every F ⊆ K.
    Uniform,
    /// DP splitting set is optimal and valid.
    Splitting,
    /// Partition decomposition invariants.
    Partition,
    /// BCR equals the component LP and decomposes.
    Bcr,
    /// lp ≤ exact ≤ tree ≤ bound·lp on a random instance.
    Contract,
    All,
}

const SUITES: [Suite; 8] = [
    Suite::Matroid,
    Suite::Gammoid,
    Suite::Separation,
    Suite::Uniform,
    Suite::Splitting,
    Suite::Partition,
    Suite::Bcr,
    Suite::Contract,
];

type Check = Result<(), String>;

macro_rules! check {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn err(e: hypersteiner::Error) -> String {
    e.to_string()
}

/// A small blowup graph for `seed`; falls back to a single random piece when the mixture fails.
fn graph(seed: u64, max_terminals: usize) -> BlowupGraph {
    let r = 2 + (seed % (max_terminals as u64 - 1)) as usize;
    match random_hypertree_mixture(seed, r, (seed % 3) as usize, 1 + (seed % 3) as usize) {
        Ok((inst, x)) => BlowupGraph::from_solution(&inst, &x).unwrap(),
        Err(_) => random_piece(seed, 2, false, 3).unwrap(),
    }
}

fn subset(ids: &[usize], mask: u64) -> Vec<usize> {
    bits(mask).map(|i| ids[i]).collect()
}

fn matroid(seed: u64) -> Check {
    let mut g = graph(seed, 4);
    let mut s = seed;
    while g.edges().len() > 10 {
        s += 1_000_003;
        g = graph(s, 3);
    }
    let ids = g.edge_ids();
    let m = ids.len();
    let qs: BTreeSet<u64> = g.pieces().iter().map(|p| p.terminals).collect();
    for q in qs {
        let mat = RemovalMatroid::new(&g, q, None, OracleMode::Submodular).map_err(err)?;
        let table: Vec<i64> = (0..1u64 << m).map(|s| mat.rank(&subset(&ids, s)).unwrap()).collect();
        for s in 0..1u64 << m {
            let r = table[s as usize];
            check!(r >= 0 && r <= s.count_ones() as i64, "rank bound at {s:b}");
            for a in 0..m {
                let sa = (s | 1 << a) as usize;
                check!(table[sa] >= r && table[sa] <= r + 1, "unit increase at {s:b}");
                for b in a + 1..m {
                    let sb = (s | 1 << b) as usize;
                    check!(table[sa] + table[sb] >= table[sa | sb] + r, "submodularity at {s:b}");
                }
            }
        }
        let full = mat.full_rank();
        check!(full == g.n() * (q.count_ones() as i64 - 1), "full rank {full}");
        let bases: BTreeSet<BTreeSet<usize>> = (0..1u64 << m)
            .filter(|&s| s.count_ones() as i64 == full && table[s as usize] == full)
            .map(|s| subset(&ids, s).into_iter().collect())
            .collect();
        let removals: BTreeSet<BTreeSet<usize>> = enumerate_minimal_removals(&g, q).map_err(err)?.into_iter().collect();
        check!(bases == removals, "bases differ from B_Q for Q={q:b}");
    }
    Ok(())
}

fn gammoid(seed: u64) -> Check {
    let g = graph(seed, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = g.edge_ids();
    for _ in 0..5 {
        let q = rng.gen_range(1..=g.all_terminals());
        let sub = RemovalMatroid::new(&g, q, None, OracleMode::Submodular).map_err(err)?;
        let gam = GammoidOracle::new(&g, q).map_err(err)?;
        for _ in 0..20 {
            let f: Vec<usize> = ids.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
            check!(sub.rank(&f).map_err(err)? == gam.rank(&f), "Q={q:b}, F={f:?}");
        }
    }
    Ok(())
}

fn separation(seed: u64) -> Check {
    let mut g = graph(seed, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if rng.gen_bool(0.5) {
        g = g.add_component(rng.gen_range(0..g.pieces().len()), 0);
    }
    let net = SeparationNetwork::build(&g).map_err(err)?;
    let y_sum: i64 = net.y().iter().sum();
    let h = g.slack_table(&HashSet::new()).map_err(err)?;
    for _ in 0..10 {
        let q = rng.gen_range(1..=g.all_terminals());
        let (flow, _) = net.max_flow(q);
        let exhaustive = (1..h.len() as u64).filter(|s| s & q == q).map(|s| h[s as usize]).min().unwrap();
        check!(flow - y_sum - g.n() == exhaustive, "Q={q:b}");
    }
    Ok(())
}

fn uniform(seed: u64) -> Check {
    let mut s = seed;
    loop {
        let g = graph(s, 5);
        let k = choose_splitting_set(&g, Strategy::Dp).map_err(err)?;
        if k.core.len() <= 10 {
            let report = verify_uniform_point(&g, &k.core, 0, seed).map_err(err)?;
            check!(report.holds(), "uniform point fails at {:?}", report.counterexample);
            let core: Vec<usize> = k.core.iter().copied().collect();
            for mask in 0..1u64 << core.len() {
                let f = subset(&core, mask);
                check!(verify_claim1(&g, &f).map_err(err)?.holds(), "flow-sum inequality fails at F={f:?}");
            }
            return Ok(());
        }
        s += 1_000_003;
    }
}

fn splitting(seed: u64) -> Check {
    let g = random_piece(seed, 1 + (seed % 3) as usize, true, 3).map_err(err)?;
    let dp = optimal_splitting_set(&g).map_err(err)?;
    check!(is_splitting_set(&g, &dp.core), "DP output is not a splitting set");
    check!(dp.total_weight() == g.cost(), "weights do not sum to the cost");
    if g.edges().len() <= 10 {
        let best = min_potential_by_enumeration(&g).map_err(err)?;
        check!(dp.potential(&g) == best, "DP {} vs exhaustive {best}", dp.potential(&g));
    }
    Ok(())
}

fn partition(seed: u64) -> Check {
    let n = 2 + (seed % 5) as usize;
    let h = random_intersecting_submodular(seed, n).map_err(err)?;
    let d = decompose(&h).map_err(err)?;
    for s in 0..=h.full() {
        check!(d.eval(s) <= *h.eval(s), "f > h at {s:b}");
    }
    check!(d.eval(h.full()) == *h.eval(h.full()), "f(U) ≠ h(U)");
    check!(d.terms.len() < n, "too many terms");
    check!(d.is_coarsening_chain(), "not a coarsening chain");
    Ok(())
}

fn bcr(seed: u64) -> Check {
    let r = 3 + (seed % 4) as usize;
    let inst = preprocess_quasi(&random_star_instance(seed, r, 3 + (seed % 5) as usize, seed.is_multiple_of(3)).map_err(err)?).map_err(err)?;
    let comps = enumerate_components(&inst, r).map_err(err)?;
    let lp = solve_lp_exact(&comps, r, LpMode::CuttingPlane).map_err(err)?;
    let sol = solve_bcr(&inst, inst.terminals()[0]).map_err(err)?;
    check!(sol.objective == lp.objective, "BCR {} vs LP {}", sol.objective, lp.objective);
    let x = natural_decomposition(&inst, &sol, true).map_err(err)?;
    check!(x.is_feasible().map_err(err)? && x.objective == sol.objective, "decomposition differs");
    Ok(())
}

fn contract(seed: u64) -> Check {
    let r = 3 + (seed % 6) as usize;
    let quasi = seed % 2 == 1;
    let inst = generate_random(r, (seed % 5) as usize, &frac(1, 3), seed, quasi).map_err(err)?;
    let options = RunOptions {
        strategy: if quasi { Strategy::Quasi } else { Strategy::Dp },
        check: true,
        ..RunOptions::default()
    };
    let out = run(&inst, &options).map_err(err)?;
    let c = &out.certificate;
    let (exact, _) = exact_steiner_tree(&inst).map_err(err)?;
    check!(c.lp_value <= exact, "lp > exact");
    check!(exact <= c.tree_cost, "exact > tree");
    check!(c.tree_cost <= &c.bound * &c.lp_value, "tree > bound·lp");
    check!(c.tree_within_potential && c.potential_within_bound, "certificate flags");
    Ok(())
}

fn suite_check(suite: Suite, seed: u64) -> Check {
    match suite {
        Suite::Matroid => matroid(seed),
        Suite::Gammoid => gammoid(seed),
        Suite::Separation => separation(seed),
        Suite::Uniform => uniform(seed),
        Suite::Splitting => splitting(seed),
        Suite::Partition => partition(seed),
        Suite::Bcr => bcr(seed),
        Suite::Contract => contract(seed),
        Suite::All => unreachable!(),
    }
}

fn name(suite: Suite) -> String {
    suite.to_possible_value().unwrap().get_name().to_string()
}

pub fn run_suite(suite: Suite, seeds: Range<u64>, json: bool) -> CliResult<()> {
    let suites: Vec<Suite> = if suite == Suite::All { SUITES.to_vec() } else { vec![suite] };
    let mut report = Vec::new();
    let mut failures = 0;
    for s in suites {
        let failed: Vec<(u64, String)> = seeds
            .clone()
            .filter_map(|seed| suite_check(s, seed).err().map(|e| (seed, e)))
            .collect();
        failures += failed.len();
        if !json {
            let status = if failed.is_empty() { "pass" } else { "FAIL" };
            println!("{}: {} seeds, {} failures, {status}", name(s), seeds.end - seeds.start, failed.len());
            for (seed, e) in &failed {
                println!("  seed {seed}: {e}");
            }
        }
        report.push(json!({
            "suite": name(s),
            "seeds": [seeds.start, seeds.end],
            "failures": failed.iter().map(|(seed, e)| json!({"seed": seed, "error": e})).collect::<Vec<_>>(),
        }));
    }
    if json {
        emit(&report);
    }
    if failures > 0 {
        return Err(Failure::Violated(format!("{failures} failing seeds")));
    }
    Ok(())
}
