//! The removal matroid M_Q on E(𝒳) (or its restriction to a splitting set K), with
//! r_Q(F) = min_{S ⊇ Q} h_{𝒳−F}(S).

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blowup::BlowupGraph;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::sepflow::{min_slack_over_supersets, GammoidOracle};
use crate::splitting::is_splitting_set;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    /// Minimum slack over supersets of Q on 𝒳 − F, by one max-flow.
    Submodular,
    /// Rank in the gammoid of the split separation network.
    Gammoid,
}

pub struct RemovalMatroid<'a> {
    graph: &'a BlowupGraph,
    q: u64,
    ground: BTreeSet<usize>,
    mode: OracleMode,
    gammoid: Option<GammoidOracle>,
}

impl<'a> RemovalMatroid<'a> {
    /// M_Q restricted to `ground` (all of E(𝒳) when `None`).
    pub fn new(g: &'a BlowupGraph, q: u64, ground: Option<&BTreeSet<usize>>, mode: OracleMode) -> Result<Self> {
        if q == 0 || q & !g.all_terminals() != 0 {
            return Err(Error::InvalidArgument("Q must be a nonempty terminal set".into()));
        }
        let ground = match ground {
            Some(set) => {
                if set.iter().any(|&id| !g.has_edge(id)) {
                    return Err(Error::InvalidArgument("ground set contains unknown edges".into()));
                }
                set.clone()
            }
            None => g.edge_ids().into_iter().collect(),
        };
        let gammoid = match mode {
            OracleMode::Gammoid => Some(GammoidOracle::new(g, q)?),
            OracleMode::Submodular => None,
        };
        Ok(RemovalMatroid {
            graph: g,
            q,
            ground,
            mode,
            gammoid,
        })
    }

    pub fn ground(&self) -> &BTreeSet<usize> {
        &self.ground
    }

    /// N(|Q| − 1).
    pub fn full_rank(&self) -> i64 {
        self.graph.n() * (self.q.count_ones() as i64 - 1)
    }

    pub fn rank(&self, f: &[usize]) -> Result<i64> {
        if f.iter().any(|id| !self.ground.contains(id)) {
            return Err(Error::InvalidArgument("F is not a subset of the ground set".into()));
        }
        match self.mode {
            OracleMode::Gammoid => {
                let distinct: BTreeSet<usize> = f.iter().copied().collect();
                let list: Vec<usize> = distinct.into_iter().collect();
                Ok(self.gammoid.as_ref().expect("built in gammoid mode").rank(&list))
            }
            OracleMode::Submodular => {
                let removed: HashSet<usize> = f.iter().copied().collect();
                Ok(min_slack_over_supersets(self.graph, &removed, self.q)?.0)
            }
        }
    }

    pub fn is_independent(&self, f: &[usize]) -> Result<bool> {
        let distinct: BTreeSet<usize> = f.iter().copied().collect();
        if distinct.len() != f.len() || f.len() as i64 > self.full_rank() {
            return Ok(false);
        }
        Ok(self.rank(f)? == f.len() as i64)
    }

    /// Greedy maximum-weight basis: ground elements by weight descending, then by id.
    /// Missing weights count as zero.
    pub fn greedy_max_weight_basis(&self, weights: &BTreeMap<usize, Rational>) -> Result<Vec<usize>> {
        let zero = Rational::from_integer(0.into());
        let mut order: Vec<usize> = self.ground.iter().copied().collect();
        order.sort_by(|a, b| {
            let wa = weights.get(a).unwrap_or(&zero);
            let wb = weights.get(b).unwrap_or(&zero);
            wb.cmp(wa).then(a.cmp(b))
        });
        let basis = match self.mode {
            OracleMode::Gammoid => self.gammoid.as_ref().expect("built in gammoid mode").greedy(&order)?,
            OracleMode::Submodular => {
                let mut chosen: Vec<usize> = Vec::new();
                for id in order {
                    if chosen.len() as i64 == self.full_rank() {
                        break;
                    }
                    chosen.push(id);
                    if self.rank(&chosen)? < chosen.len() as i64 {
                        chosen.pop();
                    }
                }
                chosen
            }
        };
        if (basis.len() as i64) < self.full_rank() {
            return Err(Error::Invariant(format!(
                "ground set has rank {} < N(|Q|-1) = {}",
                basis.len(),
                self.full_rank()
            )));
        }
        Ok(basis)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformPointReport {
    /// Number of sets F checked.
    pub checked: usize,
    /// Whether every F ⊆ K was checked.
    pub exhaustive: bool,
    /// First F with Σ_Q r_Q(F) < |F|·N, if any.
    pub counterexample: Option<Vec<usize>>,
}

impl UniformPointReport {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Largest |K| checked exhaustively by [`verify_uniform_point`].
pub const UNIFORM_EXHAUSTIVE_CAP: usize = 16;

/// Checks Σ_{Q ∈ Γ(𝒳)} r_Q(F) ≥ |F|·N for F ⊆ K: all of them when |K| is at most
/// [`UNIFORM_EXHAUSTIVE_CAP`], otherwise `samples` seeded random subsets.
pub fn verify_uniform_point(g: &BlowupGraph, core: &BTreeSet<usize>, samples: usize, seed: u64) -> Result<UniformPointReport> {
    if !is_splitting_set(g, core) {
        return Err(Error::InvalidSplittingSet("K is not a splitting set".into()));
    }
    let mut multiplicity: BTreeMap<u64, i64> = BTreeMap::new();
    for p in g.pieces() {
        *multiplicity.entry(p.terminals).or_default() += 1;
    }
    let oracles: Vec<(GammoidOracle, i64)> = multiplicity
        .iter()
        .map(|(&q, &m)| Ok((GammoidOracle::new(g, q)?, m)))
        .collect::<Result<_>>()?;
    let k: Vec<usize> = core.iter().copied().collect();
    let check = |f: &[usize]| -> bool {
        let total: i64 = oracles.iter().map(|(o, m)| m * o.rank(f)).sum();
        total >= f.len() as i64 * g.n()
    };
    let exhaustive = k.len() <= UNIFORM_EXHAUSTIVE_CAP;
    let mut checked = 0;
    let mut counterexample = None;
    let mut consider = |f: Vec<usize>| {
        checked += 1;
        if counterexample.is_none() && !check(&f) {
            counterexample = Some(f);
        }
    };
    if exhaustive {
        for mask in 0u64..(1 << k.len()) {
            consider(crate::util::bits(mask).map(|i| k[i]).collect());
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            consider(k.iter().copied().filter(|_| rng.gen_bool(0.5)).collect());
        }
    }
    Ok(UniformPointReport {
        checked,
        exhaustive,
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_hypertree_mixture, star_piece};
    use crate::oracles::{enumerate_minimal_removals, enumerate_splitting_sets};
    use crate::rational::int;
    use crate::util::bits;

    fn small_graphs() -> Vec<BlowupGraph> {
        let mut out = Vec::new();
        let mut seed = 0;
        while out.len() < 6 {
            seed += 1;
            let (inst, x) = random_hypertree_mixture(seed, 3, (seed % 2) as usize, 2).unwrap();
            let Ok(g) = BlowupGraph::from_solution(&inst, &x) else { continue };
            if g.is_feasible() && g.edges().len() <= 9 {
                out.push(g);
            }
        }
        out
    }

    fn subsets(ids: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0u64..(1 << ids.len())).map(move |m| bits(m).map(|i| ids[i]).collect())
    }

    #[test]
    fn star_has_rank_k_minus_one() {
        let g = star_piece(&[int(1), int(2), int(3), int(4)]).unwrap();
        for mode in [OracleMode::Submodular, OracleMode::Gammoid] {
            let m = RemovalMatroid::new(&g, 0b1111, None, mode).unwrap();
            assert_eq!(m.full_rank(), 3);
            assert_eq!(m.rank(&[]).unwrap(), 0);
            assert_eq!(m.rank(&g.edge_ids()).unwrap(), 3);
            let q = RemovalMatroid::new(&g, 0b0011, None, mode).unwrap();
            assert_eq!(q.rank(&g.edge_ids()).unwrap(), 1);
        }
    }

    #[test]
    fn rank_axioms_and_bases() {
        for g in small_graphs() {
            let ids = g.edge_ids();
            for q in [0b011, 0b101, 0b111] {
                let m = RemovalMatroid::new(&g, q, None, OracleMode::Submodular).unwrap();
                let table: Vec<i64> = subsets(&ids).map(|f| m.rank(&f).unwrap()).collect();
                assert_eq!(table[0], 0);
                for x in 0..table.len() {
                    assert!(table[x] <= x.count_ones() as i64);
                    for e in 0..ids.len() {
                        let xe = x | (1 << e);
                        assert!(table[x] <= table[xe] && table[xe] <= table[x] + 1);
                        for f in e + 1..ids.len() {
                            let xf = x | (1 << f);
                            assert!(table[xe] + table[xf] >= table[xe | xf] + table[x]);
                        }
                    }
                }
                let mut bases: Vec<BTreeSet<usize>> = subsets(&ids)
                    .zip(&table)
                    .filter(|(f, &r)| r == f.len() as i64 && r == m.full_rank())
                    .map(|(f, _)| f.into_iter().collect())
                    .collect();
                let mut removals = enumerate_minimal_removals(&g, q).unwrap();
                bases.sort();
                removals.sort();
                assert_eq!(bases, removals);
                assert!(bases.iter().all(|b| b.len() as i64 == g.n() * (q.count_ones() as i64 - 1)));
            }
        }
    }

    #[test]
    fn gammoid_matches_submodular_oracle() {
        for g in small_graphs() {
            let ids = g.edge_ids();
            for q in [0b110, 0b111] {
                let a = RemovalMatroid::new(&g, q, None, OracleMode::Submodular).unwrap();
                let b = RemovalMatroid::new(&g, q, None, OracleMode::Gammoid).unwrap();
                for f in subsets(&ids) {
                    assert_eq!(a.rank(&f).unwrap(), b.rank(&f).unwrap());
                }
            }
        }
    }

    #[test]
    fn greedy_finds_max_weight_basis_inside_splitting_sets() {
        for (i, g) in small_graphs().into_iter().enumerate() {
            let ids = g.edge_ids();
            let weights: BTreeMap<usize, Rational> = ids.iter().map(|&e| (e, int(((e * 7 + i) % 5) as i64))).collect();
            for k in enumerate_splitting_sets(&g).unwrap().into_iter().take(5) {
                let m = RemovalMatroid::new(&g, 0b111, Some(&k), OracleMode::Gammoid).unwrap();
                let basis = m.greedy_max_weight_basis(&weights).unwrap();
                assert!(m.is_independent(&basis).unwrap());
                assert_eq!(basis.len() as i64, m.full_rank());
                let value = |f: &[usize]| f.iter().map(|e| weights[e].clone()).sum::<Rational>();
                let kk: Vec<usize> = k.iter().copied().collect();
                let best = subsets(&kk)
                    .filter(|f| f.len() as i64 == m.full_rank() && m.rank(f).unwrap() == m.full_rank())
                    .map(|f| value(&f))
                    .max()
                    .expect("B_Q^K is nonempty");
                assert_eq!(value(&basis), best);
            }
        }
    }

    #[test]
    fn uniform_point_holds_on_small_graphs() {
        for g in small_graphs() {
            let k = enumerate_splitting_sets(&g).unwrap().swap_remove(0);
            let report = verify_uniform_point(&g, &k, 0, 0).unwrap();
            assert!(report.exhaustive && report.holds());
            assert_eq!(report.checked, 1 << k.len());
        }
    }

    #[test]
    fn bad_arguments() {
        let g = star_piece(&[int(1), int(1), int(1)]).unwrap();
        assert!(RemovalMatroid::new(&g, 0, None, OracleMode::Gammoid).is_err());
        assert!(RemovalMatroid::new(&g, 0b1000, None, OracleMode::Gammoid).is_err());
        let m = RemovalMatroid::new(&g, 0b111, Some(&BTreeSet::from([0])), OracleMode::Gammoid).unwrap();
        assert!(m.rank(&[1]).is_err());
        assert!(verify_uniform_point(&g, &BTreeSet::from([0]), 0, 0).is_err());
    }
}
