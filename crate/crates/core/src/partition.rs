//! Lower-bounding a nonnegative intersecting submodular function by a nested sum of partition
//! functions f_P(S) = (#blocks of P hit by S − 1)⁺.

use std::collections::{BTreeMap, HashSet};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blowup::BlowupGraph;
use crate::error::{ensure, Error, Result};
use crate::gen::random_blowup;
use crate::rational::{frac, int, parse_rational, serialize, Rational};
use crate::sepflow::min_slack_over_supersets;
use crate::util::{bits, UnionFind};

/// Largest ground set for table-backed functions.
pub const MAX_GROUND: usize = 14;

/// A set function on U = {0, …, n−1} stored as a table indexed by bitmask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetFunction {
    n: usize,
    values: Vec<Rational>,
}

/// JSON form: `{"n": 3, "values": ["0", "1/2", ...]}` with `2^n` entries indexed by bitmask.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetFunctionTable {
    pub n: usize,
    pub values: Vec<String>,
}

impl SetFunction {
    pub fn new(n: usize, values: Vec<Rational>) -> Result<Self> {
        if n > MAX_GROUND {
            return Err(Error::TooLarge(format!("ground set of size {n}")));
        }
        if values.len() != 1 << n {
            return Err(Error::InvalidArgument(format!("expected {} values, got {}", 1 << n, values.len())));
        }
        Ok(SetFunction { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(u64) -> Rational) -> Result<Self> {
        if n > MAX_GROUND {
            return Err(Error::TooLarge(format!("ground set of size {n}")));
        }
        Self::new(n, (0..1u64 << n).map(f).collect())
    }

    pub fn from_table(table: &SetFunctionTable) -> Result<Self> {
        let values = table
            .values
            .iter()
            .map(|v| parse_rational(v).ok_or_else(|| Error::InvalidArgument(format!("bad rational {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(table.n, values)
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn full(&self) -> u64 {
        (1u64 << self.n) - 1
    }

    pub fn eval(&self, s: u64) -> &Rational {
        &self.values[s as usize]
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| !v.is_negative())
    }

    /// h(A ∪ B) + h(A ∩ B) ≤ h(A) + h(B) for all A, B with A ∩ B ≠ ∅.
    pub fn is_intersecting_submodular(&self) -> bool {
        let full = self.full();
        (1..=full).all(|a| {
            (1..=full).all(|b| {
                a & b == 0 || self.eval(a | b) + self.eval(a & b) <= self.eval(a) + self.eval(b)
            })
        })
    }
}

/// f_P(S) for a partition given as block masks.
pub fn partition_function_eval(partition: &[u64], s: u64) -> i64 {
    let hit = partition.iter().filter(|&&b| b & s != 0).count() as i64;
    (hit - 1).max(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecompositionTerm {
    #[serde(serialize_with = "serialize")]
    pub lambda: Rational,
    /// Block masks, ascending.
    pub partition: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionDecomposition {
    pub terms: Vec<DecompositionTerm>,
}

impl PartitionDecomposition {
    pub fn eval(&self, s: u64) -> Rational {
        self.terms
            .iter()
            .map(|t| &t.lambda * int(partition_function_eval(&t.partition, s)))
            .sum()
    }

    /// Every later partition is a strict coarsening of the previous one.
    pub fn is_coarsening_chain(&self) -> bool {
        self.terms.windows(2).all(|w| {
            let (fine, coarse) = (&w[0].partition, &w[1].partition);
            coarse.len() < fine.len() && fine.iter().all(|b| coarse.iter().any(|c| b & !c == 0))
        })
    }
}

/// Unions of blocks of `partition` (all 2^|P| of them, including ∅).
fn unions(partition: &[u64]) -> Vec<u64> {
    (0u64..(1 << partition.len()))
        .map(|sel| bits(sel).fold(0u64, |acc, i| acc | partition[i]))
        .collect()
}

/// Maximal tight sets of `h` among the nonempty `family` members; they must partition `full`.
fn maximal_tight(h: &[Rational], family: &[u64], full: u64) -> Result<Vec<u64>> {
    let tight: Vec<u64> = family.iter().copied().filter(|&s| s != 0 && h[s as usize].is_zero()).collect();
    let mut maximal: Vec<u64> = tight
        .iter()
        .copied()
        .filter(|&s| !tight.iter().any(|&t| t != s && s & !t == 0))
        .collect();
    maximal.sort_unstable();
    let covered = maximal.iter().fold(0u64, |acc, b| acc | b);
    if covered != full {
        return Err(Error::TightSetsDoNotCover);
    }
    let disjoint = maximal.iter().map(|b| b.count_ones()).sum::<u32>() == full.count_ones();
    ensure!(disjoint, "maximal tight sets overlap; h is not intersecting submodular");
    Ok(maximal)
}

/// The nested decomposition: P¹ = maximal tight sets of h; λ_i = min over unions S of blocks
/// with f_{P^i}(S) > 0 of h^i(S)/f_{P^i}(S); h^{i+1} = h^i − λ_i f_{P^i}; P^{i+1} = maximal
/// tight unions; stop once h^i(U) = 0.
pub fn decompose(h: &SetFunction) -> Result<PartitionDecomposition> {
    if !h.is_nonnegative() {
        return Err(Error::InvalidArgument("h must be nonnegative".into()));
    }
    let full = h.full();
    let mut current: Vec<Rational> = h.values.clone();
    current[0] = Rational::zero();
    let all: Vec<u64> = (1..=full).collect();
    let mut partition = maximal_tight(&current, &all, full)?;
    let mut terms = Vec::new();
    while current[full as usize].is_positive() {
        ensure!(terms.len() < h.n, "decomposition exceeded |U| - 1 terms");
        let family = unions(&partition);
        let mut lambda: Option<Rational> = None;
        for &s in &family {
            let f = partition_function_eval(&partition, s);
            if f > 0 {
                let ratio = &current[s as usize] / int(f);
                if lambda.as_ref().is_none_or(|l| ratio < *l) {
                    lambda = Some(ratio);
                }
            }
        }
        let lambda = lambda.ok_or_else(|| Error::Internal("single-block partition with h(U) > 0".into()))?;
        ensure!(lambda.is_positive(), "non-positive step; tight sets are not maximal");
        for &s in &family {
            let f = partition_function_eval(&partition, s);
            if f > 0 {
                current[s as usize] -= &lambda * int(f);
            }
        }
        terms.push(DecompositionTerm {
            lambda,
            partition: partition.clone(),
        });
        partition = maximal_tight(&current, &family, full)?;
    }
    Ok(PartitionDecomposition { terms })
}

/// Outcome of checking Σ_{Q ∈ Γ(𝒳)} h_F̄(S_Q) ≥ N·h_F̄(R) for one F.
#[derive(Clone, Debug, Serialize)]
pub struct Claim1Report {
    pub lhs: i64,
    pub rhs: i64,
    /// h_F̄(R) = |F|.
    pub splitting_identity: bool,
}

impl Claim1Report {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs && self.splitting_identity
    }
}

/// S_Q minimizes h_F̄ over supersets of Q (by max-flow on 𝒳 − F); pieces with the same
/// terminal set share one evaluation.
pub fn verify_claim1(g: &BlowupGraph, f: &[usize]) -> Result<Claim1Report> {
    let removed: HashSet<usize> = f.iter().copied().collect();
    let mut multiplicity: BTreeMap<u64, i64> = BTreeMap::new();
    for p in g.pieces() {
        *multiplicity.entry(p.terminals).or_default() += 1;
    }
    let mut lhs = 0;
    for (&q, &m) in &multiplicity {
        lhs += m * min_slack_over_supersets(g, &removed, q)?.0;
    }
    let h_r = g.slack(&removed, g.all_terminals())?;
    Ok(Claim1Report {
        lhs,
        rhs: g.n() * h_r,
        splitting_identity: h_r == removed.len() as i64,
    })
}

/// A random partition of {0, …, n−1} into block masks.
pub fn random_partition(rng: &mut impl Rng, n: usize) -> Vec<u64> {
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let mut blocks: BTreeMap<usize, u64> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        *blocks.entry(l).or_default() |= 1 << i;
    }
    let mut out: Vec<u64> = blocks.into_values().collect();
    out.sort_unstable();
    out
}

/// r(S) − 1 for the graphic matroid of a random multigraph whose edges are the elements of U.
fn graphic_rank_minus_one(rng: &mut impl Rng, n: usize) -> Vec<Rational> {
    let nodes = rng.gen_range(2..=n.max(2) + 1);
    let ends: Vec<(usize, usize)> = (0..n)
        .map(|_| {
            let a = rng.gen_range(0..nodes);
            let mut b = rng.gen_range(0..nodes - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        })
        .collect();
    (0..1u64 << n)
        .map(|s| {
            if s == 0 {
                return Rational::zero();
            }
            let mut uf = UnionFind::new(nodes);
            let rank = bits(s).filter(|&i| uf.union(ends[i].0, ends[i].1)).count() as i64;
            int(rank - 1)
        })
        .collect()
}

/// h_{𝒳−F} of a random blowup graph over n terminals with a random F removed (h(∅) = 0).
fn blowup_slack(rng: &mut impl Rng, n: usize) -> Result<Vec<Rational>> {
    let g = random_blowup(rng.gen(), n, rng.gen_range(0..=3), false)?;
    let removed: HashSet<usize> = g.edge_ids().into_iter().filter(|_| rng.gen_bool(0.3)).collect();
    let table = g.slack_table(&removed)?;
    Ok(table.into_iter().enumerate().map(|(s, v)| if s == 0 { Rational::zero() } else { int(v) }).collect())
}

/// A seeded nonnegative intersecting submodular function on n ≥ 2 elements whose singletons
/// are tight: a positive combination of partition functions, graphic ranks minus one and
/// blowup slack functions.
pub fn random_intersecting_submodular(seed: u64, n: usize) -> Result<SetFunction> {
    if !(2..=MAX_GROUND).contains(&n) {
        return Err(Error::InvalidArgument(format!("ground size {n} outside 2..={MAX_GROUND}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = vec![Rational::zero(); 1 << n];
    for _ in 0..rng.gen_range(1..=3) {
        let weight = frac(rng.gen_range(1..=6), rng.gen_range(1..=3));
        let term: Vec<Rational> = match rng.gen_range(0..3) {
            0 => {
                let p = random_partition(&mut rng, n);
                (0..1u64 << n).map(|s| int(partition_function_eval(&p, s))).collect()
            }
            1 => graphic_rank_minus_one(&mut rng, n),
            _ => blowup_slack(&mut rng, n)?,
        };
        for (t, v) in total.iter_mut().zip(term) {
            *t += &weight * v;
        }
    }
    let h = SetFunction::new(n, total)?;
    ensure!(h.is_nonnegative() && h.is_intersecting_submodular(), "generator produced an invalid function");
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_blowup, random_hypertree_mixture};
    use crate::splitting::random_splitting_set;

    fn check(h: &SetFunction, d: &PartitionDecomposition) {
        let full = h.full();
        for s in 0..=full {
            assert!(d.eval(s) <= *h.eval(s), "f > h at {s:b}");
        }
        assert_eq!(d.eval(full), *h.eval(full));
        assert!(d.terms.len() < h.ground_size().max(1));
        assert!(d.terms.iter().all(|t| t.lambda.is_positive()));
        assert!(d.is_coarsening_chain());
        let total: Rational = d.terms.iter().map(|t| &t.lambda * int(t.partition.len() as i64 - 1)).sum();
        assert_eq!(total, *h.eval(full));
    }

    #[test]
    fn partition_function_examples() {
        let p = [0b001, 0b010, 0b100];
        assert_eq!(partition_function_eval(&p, 0), 0);
        assert_eq!(partition_function_eval(&p, 0b111), 2);
        assert_eq!(partition_function_eval(&p, 0b101), 1);
        assert_eq!(partition_function_eval(&[0b011, 0b100], 0b011), 0);
    }

    #[test]
    fn single_partition_function_is_a_fixed_point() {
        let p = vec![0b0011, 0b0100, 0b1000];
        let lambda = frac(5, 2);
        let h = SetFunction::from_fn(4, |s| &lambda * int(partition_function_eval(&p, s))).unwrap();
        let d = decompose(&h).unwrap();
        assert_eq!(d.terms, vec![DecompositionTerm { lambda, partition: p }]);
    }

    #[test]
    fn zero_on_ground_set_gives_empty_decomposition() {
        let h = SetFunction::from_fn(3, |_| Rational::zero()).unwrap();
        assert!(decompose(&h).unwrap().terms.is_empty());
    }

    #[test]
    fn uncovered_ground_set_is_rejected() {
        let h = SetFunction::from_fn(2, |s| int(s.count_ones() as i64)).unwrap();
        assert_eq!(decompose(&h), Err(Error::TightSetsDoNotCover));
    }

    #[test]
    fn negative_values_are_rejected() {
        let h = SetFunction::from_fn(2, |s| if s == 3 { int(-1) } else { int(0) }).unwrap();
        assert!(matches!(decompose(&h), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn table_round_trip() {
        let table: SetFunctionTable = serde_json::from_str(r#"{"n": 2, "values": ["0", "0", "0", "1/2"]}"#).unwrap();
        let h = SetFunction::from_table(&table).unwrap();
        assert_eq!(*h.eval(3), frac(1, 2));
        let d = decompose(&h).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert_eq!(d.terms[0].partition, vec![1, 2]);
        let bad = SetFunctionTable { n: 2, values: vec!["0".into(); 3] };
        assert!(SetFunction::from_table(&bad).is_err());
    }

    #[test]
    fn random_functions_decompose() {
        for seed in 0..60 {
            let n = 2 + seed as usize % 5;
            let h = random_intersecting_submodular(seed, n).unwrap();
            check(&h, &decompose(&h).unwrap());
        }
    }

    #[test]
    fn minimum_ratio_is_the_largest_feasible_step() {
        for seed in 0..20 {
            let h = random_intersecting_submodular(seed, 4).unwrap();
            let d = decompose(&h).unwrap();
            let Some(first) = d.terms.first() else { continue };
            let family = unions(&first.partition);
            let after = |lambda: &Rational, s: u64| h.eval(s) - lambda * int(partition_function_eval(&first.partition, s));
            assert!(family.iter().all(|&s| !after(&first.lambda, s).is_negative()));
            let bumped = &first.lambda + frac(1, 1000);
            assert!(family.iter().any(|&s| after(&bumped, s).is_negative()));
        }
    }

    #[test]
    fn flow_sum_inequality_on_random_blowups() {
        for seed in 1..15 {
            let (inst, x) = random_hypertree_mixture(seed, 4, 1, 2).unwrap();
            let g = BlowupGraph::from_solution(&inst, &x).unwrap();
            let k = random_splitting_set(&g, seed).unwrap().core;
            let report = verify_claim1(&g, &[]).unwrap();
            assert_eq!(report.rhs, 0);
            assert!(report.holds());
            let all: Vec<usize> = k.iter().copied().collect();
            let report = verify_claim1(&g, &all).unwrap();
            assert!(report.splitting_identity && report.holds(), "seed {seed}");
            for (i, _) in all.iter().enumerate() {
                let f: Vec<usize> = all.iter().copied().skip(i).step_by(2).collect();
                assert!(verify_claim1(&g, &f).unwrap().holds());
            }
        }
        let g = random_blowup(3, 4, 2, false).unwrap();
        assert!(verify_claim1(&g, &[]).unwrap().holds());
    }
}
