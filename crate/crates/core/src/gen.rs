//! Seeded generators of small blowup graphs for property checks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blowup::{BEdge, BVertex, BlowupGraph};
use crate::components::enumerate_components;
use crate::error::Result;
use crate::hyperlp::{solve_lp_exact, FractionalSolution, LpMode};
use crate::instance::{generate_random, Edge, SteinerInstance};
use crate::rational::{frac, int, Rational};
use crate::util::UnionFind;

/// A single random tree piece with N = 1. Steiner nodes get degree 3 when `binary`, otherwise
/// a degree between 2 and `max_degree`.
pub fn random_piece(seed: u64, num_steiner: usize, binary: bool, max_degree: usize) -> Result<BlowupGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_degree = if binary { 3 } else { max_degree.max(3) };
    let mut degree = vec![0usize; num_steiner];
    let mut links: Vec<(usize, usize)> = Vec::new();
    for v in 1..num_steiner {
        let open: Vec<usize> = (0..v).filter(|&u| degree[u] < max_degree - 1).collect();
        let u = if open.is_empty() { v - 1 } else { open[rng.gen_range(0..open.len())] };
        degree[u] += 1;
        degree[v] += 1;
        links.push((u, v));
    }
    let mut targets = Vec::with_capacity(num_steiner);
    for &d in &degree {
        let want = if binary { 3 } else { rng.gen_range(2..=max_degree) };
        targets.push(want.max(d));
    }
    let mut leaves: Vec<usize> = Vec::new();
    for (v, (&d, &t)) in degree.iter().zip(&targets).enumerate() {
        for _ in d..t.max(2) {
            leaves.push(v);
        }
    }
    // terminals first, then Steiner nodes
    let num_terminals = if num_steiner == 0 { 2 } else { leaves.len() };
    let mut vertices: Vec<BVertex> = (0..num_terminals)
        .map(|i| BVertex {
            terminal: true,
            origin: Some(i),
            represents: 1 << i,
        })
        .collect();
    for _ in 0..num_steiner {
        vertices.push(BVertex {
            terminal: false,
            origin: None,
            represents: 0,
        });
    }
    let mut edges = Vec::new();
    let mut push = |u: usize, v: usize, rng: &mut ChaCha8Rng| {
        let id = edges.len();
        edges.push(BEdge {
            id,
            u,
            v,
            cost: int(rng.gen_range(1..=6)),
            origin: None,
            component: 0,
            copy: 0,
        });
    };
    if num_steiner == 0 {
        push(0, 1, &mut rng);
    } else {
        for (u, v) in links {
            push(num_terminals + u, num_terminals + v, &mut rng);
        }
        for (i, &s) in leaves.iter().enumerate() {
            push(i, num_terminals + s, &mut rng);
        }
    }
    BlowupGraph::new(1, vertices, edges)
}

/// An LP-feasible fractional solution on a random instance: the instance's components with a
/// random objective, solved exactly. Random objectives make fractional vertices common.
pub fn random_fractional_solution(
    seed: u64,
    num_terminals: usize,
    num_steiner: usize,
    quasi: bool,
) -> Result<(SteinerInstance, FractionalSolution)> {
    let inst = generate_random(num_terminals, num_steiner, &frac(1, 2), seed, quasi)?;
    let mut comps = enumerate_components(&inst, num_terminals)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for c in &mut comps {
        c.cost = int(rng.gen_range(1..=8) * (c.size() as i64 - 1));
    }
    let x = solve_lp_exact(&comps, inst.terminals().len(), LpMode::CuttingPlane)?;
    let support = x
        .support
        .into_iter()
        .map(|(mut c, v)| {
            c.cost = c.edges.iter().map(|&e| inst.edge(e).cost.clone()).sum();
            (c, v)
        })
        .collect();
    Ok((inst, FractionalSolution::new(num_terminals, support)))
}

/// A feasible blowup graph of a random fractional solution.
pub fn random_blowup(seed: u64, num_terminals: usize, num_steiner: usize, quasi: bool) -> Result<BlowupGraph> {
    let (inst, x) = random_fractional_solution(seed, num_terminals, num_steiner, quasi)?;
    BlowupGraph::from_solution(&inst, &x)
}

fn push_star(edges: &mut Vec<Edge>, center: &mut usize, members: &[usize], rng: &mut ChaCha8Rng, uf: &mut UnionFind) {
    for &t in members {
        edges.push(Edge {
            u: t,
            v: *center,
            cost: int(rng.gen_range(2..=3)),
        });
        uf.union(members[0], t);
    }
    *center += 1;
}

/// A connected quasi-bipartite instance built from random stars: each Steiner center joins 3 or
/// 4 random terminals (fewer if there are fewer) by edges of cost 2 or 3. With `direct_edges`
/// some terminal pairs are also joined directly. Overlapping stars make fractional LP optima
/// common.
pub fn random_star_instance(seed: u64, num_terminals: usize, num_stars: usize, direct_edges: bool) -> Result<SteinerInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = num_terminals.max(2);
    let mut edges: Vec<Edge> = Vec::new();
    let mut uf = UnionFind::new(r);
    let mut center = r;
    for _ in 0..num_stars {
        let size = rng.gen_range(2..=r.min(4)).max(r.min(3));
        let members: Vec<usize> = rand::seq::index::sample(&mut rng, r, size).into_vec();
        push_star(&mut edges, &mut center, &members, &mut rng, &mut uf);
    }
    for t in 1..r {
        if !uf.same(0, t) {
            push_star(&mut edges, &mut center, &[0, t], &mut rng, &mut uf);
        }
    }
    if direct_edges {
        for a in 0..r {
            for b in a + 1..r {
                if rng.gen_bool(0.15) {
                    edges.push(Edge {
                        u: a,
                        v: b,
                        cost: int(rng.gen_range(2..=6)),
                    });
                }
            }
        }
    }
    SteinerInstance::new(center, (0..r).collect(), edges)
}

/// One star piece with N = 1: terminal i joined to a single Steiner center by edge i of cost
/// `costs[i]`.
pub fn star_piece(costs: &[Rational]) -> Result<BlowupGraph> {
    let k = costs.len();
    let mut vertices: Vec<BVertex> = (0..k)
        .map(|i| BVertex {
            terminal: true,
            origin: Some(i),
            represents: 1 << i,
        })
        .collect();
    vertices.push(BVertex {
        terminal: false,
        origin: None,
        represents: 0,
    });
    let edges = costs
        .iter()
        .enumerate()
        .map(|(i, c)| BEdge {
            id: i,
            u: i,
            v: k,
            cost: c.clone(),
            origin: None,
            component: 0,
            copy: 0,
        })
        .collect();
    BlowupGraph::new(1, vertices, edges)
}

/// The average of `mix` random spanning hypertrees of components of a random instance. Any such
/// average is LP-feasible, and its blowup factor divides `mix`.
pub fn random_hypertree_mixture(
    seed: u64,
    num_terminals: usize,
    num_steiner: usize,
    mix: usize,
) -> Result<(SteinerInstance, FractionalSolution)> {
    let inst = generate_random(num_terminals, num_steiner, &frac(1, 2), seed, false)?;
    let comps = enumerate_components(&inst, num_terminals)?;
    let r = inst.terminals().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7ee5);
    let mut weight: BTreeMap<usize, i64> = BTreeMap::new();
    for _ in 0..mix.max(1) {
        let mut uf = UnionFind::new(r);
        let mut order: Vec<usize> = (0..comps.len()).collect();
        order.shuffle(&mut rng);
        for j in order {
            let positions: Vec<usize> = (0..r).filter(|i| comps[j].mask & (1 << i) != 0).collect();
            let mut roots: Vec<usize> = positions.iter().map(|&i| uf.find(i)).collect();
            roots.sort_unstable();
            roots.dedup();
            if roots.len() == positions.len() {
                for w in positions.windows(2) {
                    uf.union(w[0], w[1]);
                }
                *weight.entry(j).or_default() += 1;
            }
        }
    }
    let support = weight
        .into_iter()
        .map(|(j, w)| (comps[j].clone(), frac(w, mix.max(1) as i64)))
        .collect();
    Ok((inst, FractionalSolution::new(r, support)))
}
