//! Exact-arithmetic simplex over rationals.
//!
//! Dense tableau, two phases, Bland's rule. Objectives may be lexicographic: a list of cost
//! vectors, minimized in order, which is the simplex for `c¹ + εc² + ε²c³ + …` with symbolic ε.
//! Rows can be appended to a solved program and re-optimized by dual simplex.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

const DUAL_PIVOT_CAP: usize = 5000;

#[derive(Clone, Debug)]
pub struct Simplex {
    num_vars: usize,
    objectives: Vec<Vec<Rational>>,
    rows: Vec<Row>,
    // tableau state
    tableau: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    reduced: Vec<Vec<Rational>>,
    ncols: usize,
    status: Option<Status>,
}

fn lex_cmp_zero(v: impl Iterator<Item = Rational>) -> Ordering {
    for x in v {
        if x.is_positive() {
            return Ordering::Greater;
        }
        if x.is_negative() {
            return Ordering::Less;
        }
    }
    Ordering::Equal
}

impl Simplex {
    /// `objectives` are minimized lexicographically; each has length `num_vars`.
    pub fn new(num_vars: usize, objectives: Vec<Vec<Rational>>) -> Self {
        assert!(!objectives.is_empty());
        assert!(objectives.iter().all(|c| c.len() == num_vars));
        Simplex {
            num_vars,
            objectives,
            rows: Vec::new(),
            tableau: Vec::new(),
            rhs: Vec::new(),
            basis: Vec::new(),
            reduced: Vec::new(),
            ncols: 0,
            status: None,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn push_row(&mut self, row: Row) {
        debug_assert!(row.coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.rows.push(row);
        self.status = None;
    }

    /// Solves from scratch with the two-phase method.
    pub fn solve(&mut self) -> Status {
        let status = self.solve_from_scratch();
        self.status = Some(status.clone());
        status
    }

    /// Appends a `≤` row. If the program was solved to optimality the new row is folded into
    /// the tableau and the optimum is restored by dual simplex; otherwise a full solve runs.
    pub fn add_row_and_resolve(&mut self, row: Row) -> Status {
        let was_optimal = self.status == Some(Status::Optimal);
        self.rows.push(row.clone());
        if !was_optimal || row.sense != Sense::Le {
            return self.solve();
        }
        self.append_le_row(&row);
        let status = match self.dual_simplex() {
            Some(s) => s,
            None => self.solve_from_scratch(),
        };
        self.status = Some(status.clone());
        status
    }

    pub fn status(&self) -> Option<&Status> {
        self.status.as_ref()
    }

    /// Primal values of the structural variables.
    pub fn values(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.num_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.num_vars {
                x[b] = self.rhs[i].clone();
            }
        }
        x
    }

    pub fn objective_values(&self) -> Vec<Rational> {
        let x = self.values();
        self.objectives
            .iter()
            .map(|c| c.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn solve_from_scratch(&mut self) -> Status {
        let m = self.rows.len();
        let n = self.num_vars;
        // normalized rows with nonnegative rhs
        let mut norm: Vec<(Vec<(usize, Rational)>, Sense, Rational)> = Vec::with_capacity(m);
        for r in &self.rows {
            if r.rhs.is_negative() {
                let sense = match r.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                norm.push((
                    r.coeffs.iter().map(|(j, a)| (*j, -a.clone())).collect(),
                    sense,
                    -r.rhs.clone(),
                ));
            } else {
                norm.push((r.coeffs.clone(), r.sense, r.rhs.clone()));
            }
        }
        let num_slack = norm.iter().filter(|r| r.1 != Sense::Eq).count();
        let num_art = norm.iter().filter(|r| r.1 != Sense::Le).count();
        let ncols = n + num_slack + num_art;
        let mut tableau = vec![vec![Rational::zero(); ncols]; m];
        let mut rhs = Vec::with_capacity(m);
        let mut basis = vec![0; m];
        let mut slack = n;
        let mut art = n + num_slack;
        for (i, (coeffs, sense, b)) in norm.into_iter().enumerate() {
            for (j, a) in coeffs {
                tableau[i][j] += a;
            }
            match sense {
                Sense::Le => {
                    tableau[i][slack] = Rational::from_integer(1.into());
                    basis[i] = slack;
                    slack += 1;
                }
                Sense::Ge => {
                    tableau[i][slack] = Rational::from_integer((-1).into());
                    slack += 1;
                    tableau[i][art] = Rational::from_integer(1.into());
                    basis[i] = art;
                    art += 1;
                }
                Sense::Eq => {
                    tableau[i][art] = Rational::from_integer(1.into());
                    basis[i] = art;
                    art += 1;
                }
            }
            rhs.push(b);
        }
        self.tableau = tableau;
        self.rhs = rhs;
        self.basis = basis;
        self.ncols = ncols;

        let art_start = n + num_slack;
        if num_art > 0 {
            let mut cost = vec![Rational::zero(); ncols];
            for c in cost.iter_mut().skip(art_start) {
                *c = Rational::from_integer(1.into());
            }
            self.reduced = vec![self.reduced_costs(&cost)];
            if self.primal_simplex(ncols) != Status::Optimal {
                return Status::Infeasible; // phase one is bounded below by zero
            }
            let infeas: Rational = self
                .basis
                .iter()
                .zip(&self.rhs)
                .filter(|(b, _)| **b >= art_start)
                .map(|(_, v)| v.clone())
                .sum();
            if infeas.is_positive() {
                return Status::Infeasible;
            }
            // drive remaining artificials out of the basis or drop redundant rows
            let mut i = 0;
            while i < self.basis.len() {
                if self.basis[i] >= art_start {
                    match (0..art_start).find(|&j| !self.tableau[i][j].is_zero()) {
                        Some(j) => {
                            self.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            self.tableau.remove(i);
                            self.rhs.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
            for row in &mut self.tableau {
                row.truncate(art_start);
            }
            self.ncols = art_start;
        }
        let costs: Vec<Vec<Rational>> = self
            .objectives
            .iter()
            .map(|c| {
                let mut full = c.clone();
                full.resize(self.ncols, Rational::zero());
                full
            })
            .collect();
        self.reduced = costs.iter().map(|c| self.reduced_costs(c)).collect();
        self.primal_simplex(self.ncols)
    }

    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (j, t) in self.tableau[i].iter().enumerate() {
                if !t.is_zero() {
                    d[j] -= cb * t;
                }
            }
        }
        d
    }

    fn lex_reduced(&self, j: usize) -> Ordering {
        lex_cmp_zero(self.reduced.iter().map(|d| d[j].clone()))
    }

    fn primal_simplex(&mut self, allowed: usize) -> Status {
        loop {
            let entering = (0..allowed).find(|&j| self.lex_reduced(j) == Ordering::Less);
            let Some(q) = entering else {
                return Status::Optimal;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.tableau.len() {
                let a = &self.tableau[i][q];
                if a.is_positive() {
                    let ratio = &self.rhs[i] / a;
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else {
                return Status::Unbounded;
            };
            self.pivot(r, q);
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let p = self.tableau[r][q].clone();
        if p != Rational::from_integer(1.into()) {
            for v in self.tableau[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
            self.rhs[r] /= &p;
        }
        let nz: Vec<usize> = (0..self.ncols)
            .filter(|&j| !self.tableau[r][j].is_zero())
            .collect();
        let prow: Vec<(usize, Rational)> = nz.iter().map(|&j| (j, self.tableau[r][j].clone())).collect();
        let prhs = self.rhs[r].clone();
        for i in 0..self.tableau.len() {
            if i == r || self.tableau[i][q].is_zero() {
                continue;
            }
            let f = self.tableau[i][q].clone();
            for (j, a) in &prow {
                let delta = &f * a;
                self.tableau[i][*j] -= delta;
            }
            if !prhs.is_zero() {
                self.rhs[i] -= &f * &prhs;
            }
        }
        for d in self.reduced.iter_mut() {
            if d[q].is_zero() {
                continue;
            }
            let f = d[q].clone();
            for (j, a) in &prow {
                d[*j] -= &f * a;
            }
        }
        self.basis[r] = q;
    }

    fn append_le_row(&mut self, row: &Row) {
        let slack = self.ncols;
        self.ncols += 1;
        for t in self.tableau.iter_mut() {
            t.push(Rational::zero());
        }
        for d in self.reduced.iter_mut() {
            d.push(Rational::zero());
        }
        let mut a = vec![Rational::zero(); self.ncols];
        for (j, v) in &row.coeffs {
            a[*j] += v;
        }
        a[slack] = Rational::from_integer(1.into());
        let mut b = row.rhs.clone();
        for (i, &bv) in self.basis.iter().enumerate() {
            if a[bv].is_zero() {
                continue;
            }
            let f = a[bv].clone();
            for (j, t) in self.tableau[i].iter().enumerate() {
                if !t.is_zero() {
                    a[j] -= &f * t;
                }
            }
            b -= &f * &self.rhs[i];
        }
        self.tableau.push(a);
        self.rhs.push(b);
        self.basis.push(slack);
    }

    /// Restores primal feasibility while keeping dual feasibility. `None` if the pivot cap is
    /// hit, in which case the caller re-solves from scratch.
    fn dual_simplex(&mut self) -> Option<Status> {
        for _ in 0..DUAL_PIVOT_CAP {
            let leaving = (0..self.tableau.len())
                .filter(|&i| self.rhs[i].is_negative())
                .min_by_key(|&i| self.basis[i]);
            let Some(r) = leaving else {
                return Some(Status::Optimal);
            };
            let mut best: Option<(usize, Vec<Rational>)> = None;
            for j in 0..self.ncols {
                let a = &self.tableau[r][j];
                if !a.is_negative() {
                    continue;
                }
                let ratio: Vec<Rational> = self.reduced.iter().map(|d| &d[j] / -a.clone()).collect();
                let better = match &best {
                    None => true,
                    Some((_, br)) => ratio < *br,
                };
                if better {
                    best = Some((j, ratio));
                }
            }
            let Some((q, _)) = best else {
                return Some(Status::Infeasible);
            };
            self.pivot(r, q);
        }
        None
    }
}

/// One-shot convenience: minimize lexicographically subject to `rows`.
pub fn solve(num_vars: usize, objectives: Vec<Vec<Rational>>, rows: Vec<Row>) -> Result<(Vec<Rational>, Vec<Rational>)> {
    let mut s = Simplex::new(num_vars, objectives);
    for r in rows {
        s.push_row(r);
    }
    match s.solve() {
        Status::Optimal => Ok((s.values(), s.objective_values())),
        Status::Infeasible => Err(Error::LpInfeasible),
        Status::Unbounded => Err(Error::Internal("LP unbounded".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn row(coeffs: &[(usize, i64)], sense: Sense, rhs: i64) -> Row {
        Row {
            coeffs: coeffs.iter().map(|&(j, a)| (j, int(a))).collect(),
            sense,
            rhs: int(rhs),
        }
    }

    #[test]
    fn small_textbook_lp() {
        // max 3x + 5y  s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → (2, 6), value 36
        let (x, obj) = solve(
            2,
            vec![vec![int(-3), int(-5)]],
            vec![
                row(&[(0, 1)], Sense::Le, 4),
                row(&[(1, 2)], Sense::Le, 12),
                row(&[(0, 3), (1, 2)], Sense::Le, 18),
            ],
        )
        .unwrap();
        assert_eq!(x, vec![int(2), int(6)]);
        assert_eq!(obj[0], int(-36));
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y s.t. x + 2y = 3, x ≥ 1/2 → y = 5/4, x = 1/2
        let mut rows = vec![row(&[(0, 1), (1, 2)], Sense::Eq, 3)];
        rows.push(Row { coeffs: vec![(0, int(1))], sense: Sense::Ge, rhs: frac(1, 2) });
        let (x, obj) = solve(2, vec![vec![int(1), int(1)]], rows).unwrap();
        assert_eq!(x, vec![frac(1, 2), frac(5, 4)]);
        assert_eq!(obj[0], frac(7, 4));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let r = solve(1, vec![vec![int(1)]], vec![row(&[(0, 1)], Sense::Ge, 2), row(&[(0, 1)], Sense::Le, 1)]);
        assert_eq!(r.unwrap_err(), Error::LpInfeasible);
        let r = solve(1, vec![vec![int(-1)]], vec![row(&[(0, 1)], Sense::Ge, 2)]);
        assert!(matches!(r, Err(Error::Internal(_))));
    }

    #[test]
    fn lexicographic_tie_break() {
        // min x + y (tie along x + y = 1), then minimize x
        let (x, _) = solve(
            2,
            vec![vec![int(1), int(1)], vec![int(1), int(0)]],
            vec![row(&[(0, 1), (1, 1)], Sense::Ge, 1)],
        )
        .unwrap();
        assert_eq!(x, vec![int(0), int(1)]);
    }

    #[test]
    fn dual_simplex_matches_scratch() {
        let base = vec![
            row(&[(0, 1), (1, 1), (2, 1)], Sense::Eq, 2),
        ];
        let cost = vec![vec![int(1), int(2), int(3)]];
        let mut inc = Simplex::new(3, cost.clone());
        for r in base.clone() {
            inc.push_row(r);
        }
        assert_eq!(inc.solve(), Status::Optimal);
        let cuts = [row(&[(0, 1)], Sense::Le, 1), row(&[(1, 1)], Sense::Le, 0)];
        let mut all = base.clone();
        for c in cuts {
            all.push(c.clone());
            assert_eq!(inc.add_row_and_resolve(c), Status::Optimal);
            let (x, obj) = solve(3, cost.clone(), all.clone()).unwrap();
            assert_eq!(inc.objective_values()[0], obj[0]);
            assert_eq!(inc.values(), x);
        }
        assert_eq!(inc.values(), vec![int(1), int(0), int(1)]);
    }
}
