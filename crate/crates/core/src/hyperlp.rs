//! The component LP: minimize Σ x_C cost(C) subject to
//! Σ x_C (|S∩C|−1)⁺ ≤ |S|−1 for all nonempty S ⊆ R and Σ x_C (|C|−1) = |R|−1.

use num_traits::{Signed, Zero};

use crate::components::Component;
use crate::error::{ensure, Error, Result};
use crate::rational::{int, Rational};
use crate::sepflow::separate_fractional;
use crate::simplex::{Row, Sense, Simplex, Status};
use crate::util::bits;

/// Default terminal cap for full enumeration of subset rows.
pub const FULL_ENUMERATION_CAP: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpMode {
    FullEnumeration,
    CuttingPlane,
}

#[derive(Clone, Debug)]
pub struct LpOptions {
    pub mode: LpMode,
    /// Terminal cap for full enumeration.
    pub full_cap: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            mode: LpMode::CuttingPlane,
            full_cap: FULL_ENUMERATION_CAP,
        }
    }
}

/// An LP solution restricted to its support, in component order (ascending terminal mask).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalSolution {
    pub num_terminals: usize,
    pub support: Vec<(Component, Rational)>,
    pub objective: Rational,
}

impl FractionalSolution {
    pub fn new(num_terminals: usize, mut support: Vec<(Component, Rational)>) -> Self {
        support.retain(|(_, x)| x.is_positive());
        support.sort_by_key(|(c, _)| c.mask);
        let objective = support.iter().map(|(c, x)| &c.cost * x).sum();
        FractionalSolution {
            num_terminals,
            support,
            objective,
        }
    }

    fn columns(&self) -> Vec<(u64, Rational)> {
        self.support.iter().map(|(c, x)| (c.mask, x.clone())).collect()
    }

    /// Σ x_C (|S∩C|−1)⁺.
    pub fn coverage(&self, s: u64) -> Rational {
        coverage(&self.columns(), s)
    }

    /// (|S|−1) − Σ x_C (|S∩C|−1)⁺.
    pub fn slack(&self, s: u64) -> Rational {
        int(s.count_ones() as i64 - 1) - self.coverage(s)
    }

    /// Checks every subset row and the equality row exactly.
    pub fn is_feasible(&self) -> Result<bool> {
        let r = self.num_terminals;
        if r > crate::blowup::BRUTE_FORCE_TERMINALS {
            return Err(Error::TooLarge(format!("{r} terminals for exhaustive feasibility")));
        }
        if r == 0 {
            return Ok(self.support.is_empty());
        }
        let full = (1u64 << r) - 1;
        let cols = self.columns();
        if coverage(&cols, full) != int(r as i64 - 1) {
            return Ok(false);
        }
        Ok((1..=full).all(|s| coverage(&cols, s) <= int(s.count_ones() as i64 - 1)))
    }

    /// First violated subset found by the flow-based separation, if any.
    pub fn violated_subset(&self) -> Option<(u64, Rational)> {
        separate_fractional(&self.columns(), self.num_terminals)
    }
}

fn coverage(cols: &[(u64, Rational)], s: u64) -> Rational {
    let mut total = Rational::zero();
    for (mask, x) in cols {
        let k = (mask & s).count_ones() as i64 - 1;
        if k > 0 {
            total += x * int(k);
        }
    }
    total
}

fn subset_row(components: &[Component], s: u64) -> Row {
    let coeffs = components
        .iter()
        .enumerate()
        .filter_map(|(j, c)| {
            let k = (c.mask & s).count_ones() as i64 - 1;
            (k > 0).then(|| (j, int(k)))
        })
        .collect();
    Row {
        coeffs,
        sense: Sense::Le,
        rhs: int(s.count_ones() as i64 - 1),
    }
}

/// Exact optimum of the LP over `components` (terminal masks over `num_terminals` positions).
pub fn solve_lp_exact(components: &[Component], num_terminals: usize, mode: LpMode) -> Result<FractionalSolution> {
    solve_lp_with(
        components,
        num_terminals,
        &LpOptions {
            mode,
            ..LpOptions::default()
        },
    )
}

pub fn solve_lp_with(components: &[Component], num_terminals: usize, options: &LpOptions) -> Result<FractionalSolution> {
    let r = num_terminals;
    if r > crate::components::MAX_ENUMERATION_TERMINALS {
        return Err(Error::TooLarge(format!("{r} terminals")));
    }
    if r <= 1 {
        return Ok(FractionalSolution::new(r, Vec::new()));
    }
    let full = (1u64 << r) - 1;
    ensure!(
        components.iter().all(|c| c.mask & !full == 0 && c.mask.count_ones() >= 2),
        "component masks must be subsets of R with at least two terminals"
    );
    let n = components.len();
    let costs: Vec<Rational> = components.iter().map(|c| c.cost.clone()).collect();
    let mut lp = Simplex::new(n, vec![costs]);
    let equality = Row {
        coeffs: components
            .iter()
            .enumerate()
            .map(|(j, c)| (j, int(c.mask.count_ones() as i64 - 1)))
            .collect(),
        sense: Sense::Eq,
        rhs: int(r as i64 - 1),
    };
    lp.push_row(equality);
    let status = match options.mode {
        LpMode::FullEnumeration => {
            if r > options.full_cap {
                return Err(Error::TooLarge(format!(
                    "{r} terminals exceed the full-enumeration cap of {}",
                    options.full_cap
                )));
            }
            for s in 1..=full {
                if s.count_ones() >= 2 {
                    lp.push_row(subset_row(components, s));
                }
            }
            lp.solve()
        }
        LpMode::CuttingPlane => {
            lp.push_row(subset_row(components, full));
            let mut status = lp.solve();
            while status == Status::Optimal {
                let x = lp.values();
                let cols: Vec<(u64, Rational)> = components
                    .iter()
                    .zip(&x)
                    .filter(|(_, v)| v.is_positive())
                    .map(|(c, v)| (c.mask, v.clone()))
                    .collect();
                match separate_fractional(&cols, r) {
                    None => break,
                    Some((s, _)) => status = lp.add_row_and_resolve(subset_row(components, s)),
                }
            }
            status
        }
    };
    match status {
        Status::Optimal => {}
        Status::Infeasible => return Err(Error::LpInfeasible),
        Status::Unbounded => return Err(Error::Internal("component LP reported unbounded".into())),
    }
    let x = lp.values();
    let support: Vec<(Component, Rational)> = components
        .iter()
        .cloned()
        .zip(x)
        .filter(|(_, v)| v.is_positive())
        .collect();
    ensure!(
        support.len() < r,
        "basic solution has support {} but |R| = {r}",
        support.len()
    );
    let sol = FractionalSolution::new(r, support);
    if r <= crate::blowup::BRUTE_FORCE_TERMINALS {
        ensure!(sol.is_feasible()?, "LP optimum fails the subset constraints");
    }
    Ok(sol)
}

/// Terminal positions of a mask, for reporting.
pub fn mask_positions(mask: u64) -> Vec<usize> {
    bits(mask).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn comp(mask: u64, cost: Rational) -> Component {
        Component {
            terminals: bits(mask).collect(),
            mask,
            edges: Vec::new(),
            cost,
        }
    }

    #[test]
    fn single_spanning_component() {
        for mode in [LpMode::FullEnumeration, LpMode::CuttingPlane] {
            let sol = solve_lp_exact(&[comp(0b111, int(5))], 3, mode).unwrap();
            assert_eq!(sol.objective, int(5));
            assert_eq!(sol.support[0].1, int(1));
        }
    }

    #[test]
    fn pairs_beat_expensive_star() {
        // pairwise cost 1, star cost 3/2 + 3/4
        let comps = vec![
            comp(0b011, int(1)),
            comp(0b101, int(1)),
            comp(0b110, int(1)),
            comp(0b111, frac(9, 4)),
        ];
        for mode in [LpMode::FullEnumeration, LpMode::CuttingPlane] {
            let sol = solve_lp_exact(&comps, 3, mode).unwrap();
            assert_eq!(sol.objective, int(2));
            assert!(sol.is_feasible().unwrap());
        }
    }

    #[test]
    fn infeasible_column_set() {
        let comps = vec![comp(0b011, int(1))];
        assert_eq!(solve_lp_exact(&comps, 3, LpMode::CuttingPlane).unwrap_err(), Error::LpInfeasible);
        assert_eq!(solve_lp_exact(&comps, 3, LpMode::FullEnumeration).unwrap_err(), Error::LpInfeasible);
    }

    #[test]
    fn full_mode_cap() {
        let comps = vec![comp(0b11, int(1))];
        let opts = LpOptions {
            mode: LpMode::FullEnumeration,
            full_cap: 1,
        };
        assert!(matches!(solve_lp_with(&comps, 2, &opts), Err(Error::TooLarge(_))));
    }
}
