//! Exact rational linear programming.
//!
//! A small dense two-phase simplex over `Rat` with Bland's smallest-index
//! pivot rule, which guarantees termination without perturbation. Every
//! `Optimal` result carries a dual vector, and strong duality plus dual
//! feasibility are asserted before the solution is returned.

use crate::num::Rat;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub rel: Rel,
    pub rhs: Rat,
}

/// Maximization problem. Variables are free unless flagged nonnegative.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<Rat>,
    pub nonneg: Vec<bool>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: Rat,
    pub assignment: Vec<Rat>,
    /// One multiplier per constraint, in input order.
    pub duals: Vec<Rat>,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![Rat::zero(); num_vars],
            nonneg: vec![false; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<Rat>, rel: Rel, rhs: Rat) {
        assert_eq!(coeffs.len(), self.num_vars());
        self.constraints.push(Constraint { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        let outcome = Tableau::build(self).run();
        if let LpOutcome::Optimal(sol) = &outcome {
            assert!(
                self.check_certificate(sol),
                "internal error: simplex produced an invalid optimality certificate"
            );
        }
        outcome
    }

    /// Primal feasibility, dual feasibility, and equal objective values.
    pub fn check_certificate(&self, sol: &LpSolution) -> bool {
        let n = self.num_vars();
        if sol.assignment.len() != n || sol.duals.len() != self.constraints.len() {
            return false;
        }
        let mut primal = Rat::zero();
        for j in 0..n {
            if self.nonneg[j] && sol.assignment[j].is_negative() {
                return false;
            }
            primal += &self.objective[j] * &sol.assignment[j];
        }
        if primal != sol.value {
            return false;
        }
        let mut dual_value = Rat::zero();
        for (c, y) in self.constraints.iter().zip(&sol.duals) {
            let lhs: Rat = c
                .coeffs
                .iter()
                .zip(&sol.assignment)
                .map(|(a, x)| a * x)
                .sum();
            let ok = match c.rel {
                Rel::Le => lhs <= c.rhs && !y.is_negative(),
                Rel::Ge => lhs >= c.rhs && !y.is_positive(),
                Rel::Eq => lhs == c.rhs,
            };
            if !ok {
                return false;
            }
            dual_value += y * &c.rhs;
        }
        if dual_value != sol.value {
            return false;
        }
        // Dual feasibility: A^T y = c on free variables, >= c on nonnegative ones.
        for j in 0..n {
            let mut aty = Rat::zero();
            for (c, y) in self.constraints.iter().zip(&sol.duals) {
                aty += &c.coeffs[j] * y;
            }
            if self.nonneg[j] {
                if aty < self.objective[j] {
                    return false;
                }
            } else if aty != self.objective[j] {
                return false;
            }
        }
        true
    }
}

/// Dense simplex tableau in dictionary form: basic columns are unit columns.
struct Tableau {
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
    cost: Vec<Rat>,
    num_cols: usize,
    artificial_start: usize,
    // Bookkeeping for mapping the standard form back to the input.
    var_cols: Vec<(usize, Option<usize>)>, // (positive part, negative part)
    row_flipped: Vec<bool>,
    row_dual_col: Vec<(usize, bool)>, // column carrying B^-1 e_i, and whether negated
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.constraints.len();
        let mut var_cols = Vec::with_capacity(lp.num_vars());
        let mut next = 0usize;
        for &nn in &lp.nonneg {
            if nn {
                var_cols.push((next, None));
                next += 1;
            } else {
                var_cols.push((next, Some(next + 1)));
                next += 2;
            }
        }
        let structural = next;

        // Slack/surplus columns and artificial columns come after the
        // structural ones; rhs is normalized to be nonnegative first.
        let mut row_flipped = vec![false; m];
        let mut needs_slack = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut rel = c.rel;
            if c.rhs.is_negative() {
                row_flipped[i] = true;
                rel = match rel {
                    Rel::Le => Rel::Ge,
                    Rel::Ge => Rel::Le,
                    Rel::Eq => Rel::Eq,
                };
            }
            needs_slack.push(rel);
        }
        let mut col = structural;
        let mut slack_col = vec![None; m];
        for (i, rel) in needs_slack.iter().enumerate() {
            if !matches!(rel, Rel::Eq) {
                slack_col[i] = Some(col);
                col += 1;
            }
        }
        let artificial_start = col;
        let mut art_col = vec![None; m];
        for (i, rel) in needs_slack.iter().enumerate() {
            if !matches!(rel, Rel::Le) {
                art_col[i] = Some(col);
                col += 1;
            }
        }
        let num_cols = col;

        let mut rows = vec![vec![Rat::zero(); num_cols]; m];
        let mut rhs = vec![Rat::zero(); m];
        let mut basis = vec![0usize; m];
        let mut row_dual_col = vec![(0usize, false); m];
        for (i, c) in lp.constraints.iter().enumerate() {
            let sign: Rat = if row_flipped[i] { -Rat::one() } else { Rat::one() };
            for (j, a) in c.coeffs.iter().enumerate() {
                let v = a * &sign;
                let (pos, neg) = var_cols[j];
                rows[i][pos] = v.clone();
                if let Some(neg) = neg {
                    rows[i][neg] = -v;
                }
            }
            rhs[i] = &c.rhs * &sign;
            match needs_slack[i] {
                Rel::Le => {
                    let s = slack_col[i].unwrap();
                    rows[i][s] = Rat::one();
                    basis[i] = s;
                    row_dual_col[i] = (s, false);
                }
                Rel::Ge => {
                    let s = slack_col[i].unwrap();
                    rows[i][s] = -Rat::one();
                    let a = art_col[i].unwrap();
                    rows[i][a] = Rat::one();
                    basis[i] = a;
                    row_dual_col[i] = (s, true);
                }
                Rel::Eq => {
                    let a = art_col[i].unwrap();
                    rows[i][a] = Rat::one();
                    basis[i] = a;
                    row_dual_col[i] = (a, false);
                }
            }
        }

        // Phase-2 cost vector over standard-form columns.
        let mut cost = vec![Rat::zero(); num_cols];
        for (j, (pos, neg)) in var_cols.iter().enumerate() {
            cost[*pos] = lp.objective[j].clone();
            if let Some(neg) = neg {
                cost[*neg] = -lp.objective[j].clone();
            }
        }

        Tableau {
            rows,
            rhs,
            basis,
            cost,
            num_cols,
            artificial_start,
            var_cols,
            row_flipped,
            row_dual_col,
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v = &*v / &pivot;
        }
        self.rhs[row] = &self.rhs[row] / &pivot;
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let factor = self.rows[i][col].clone();
            for j in 0..self.num_cols {
                let delta = &self.rows[row][j] * &factor;
                self.rows[i][j] = &self.rows[i][j] - delta;
            }
            let delta = &self.rhs[row] * &factor;
            self.rhs[i] = &self.rhs[i] - delta;
        }
        self.basis[row] = col;
    }

    fn reduced_cost(&self, cost: &[Rat], col: usize) -> Rat {
        let mut z = Rat::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            if !cost[b].is_zero() {
                z += &cost[b] * &self.rows[i][col];
            }
        }
        &cost[col] - z
    }

    /// Bland's rule: entering column is the lowest index with positive
    /// reduced cost; leaving row minimizes the ratio, ties broken by the
    /// lowest basic column index. Returns false on unboundedness.
    fn optimize(&mut self, cost: &[Rat], allow_artificial: bool) -> bool {
        loop {
            let limit = if allow_artificial { self.num_cols } else { self.artificial_start };
            let entering = (0..limit).find(|&j| {
                !self.basis.contains(&j) && self.reduced_cost(cost, j).is_positive()
            });
            let Some(col) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, Rat)> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][col].is_positive() {
                    let ratio = &self.rhs[i] / &self.rows[i][col];
                    let better = match &leaving {
                        None => true,
                        Some((best, r)) => {
                            ratio < *r || (ratio == *r && self.basis[i] < self.basis[*best])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            match leaving {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }

    fn run(mut self) -> LpOutcome {
        let m = self.rows.len();
        if self.artificial_start < self.num_cols {
            // Phase 1: drive the artificial variables to zero.
            let mut phase1 = vec![Rat::zero(); self.num_cols];
            for c in self.artificial_start..self.num_cols {
                phase1[c] = -Rat::one();
            }
            let bounded = self.optimize(&phase1, true);
            debug_assert!(bounded, "phase-1 objective is bounded by zero");
            let infeasibility: Rat = (0..m)
                .filter(|&i| self.basis[i] >= self.artificial_start)
                .map(|i| self.rhs[i].clone())
                .sum();
            if !infeasibility.is_zero() {
                return LpOutcome::Infeasible;
            }
            // Pivot out artificials that linger in the basis at level zero.
            for i in 0..m {
                if self.basis[i] >= self.artificial_start {
                    if let Some(col) =
                        (0..self.artificial_start).find(|&j| !self.rows[i][j].is_zero())
                    {
                        self.pivot(i, col);
                    }
                }
            }
        }
        let cost = self.cost.clone();
        if !self.optimize(&cost, false) {
            return LpOutcome::Unbounded;
        }

        let mut col_value = vec![Rat::zero(); self.num_cols];
        for (i, &b) in self.basis.iter().enumerate() {
            col_value[b] = self.rhs[i].clone();
        }
        let assignment: Vec<Rat> = self
            .var_cols
            .iter()
            .map(|(pos, neg)| match neg {
                Some(neg) => &col_value[*pos] - &col_value[*neg],
                None => col_value[*pos].clone(),
            })
            .collect();
        let value: Rat = (0..self.num_cols)
            .map(|j| &self.cost[j] * &col_value[j])
            .sum();
        // y_i = c_B B^-1 e_i, read off the reduced cost of the column that
        // started as (plus or minus) the i-th identity column.
        let duals: Vec<Rat> = (0..m)
            .map(|i| {
                let (col, negated) = self.row_dual_col[i];
                let r = self.reduced_cost(&cost, col);
                let y = if negated { r } else { -r };
                if self.row_flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        LpOutcome::Optimal(LpSolution { value, assignment, duals })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, rat_int};

    #[test]
    fn max_x_with_upper_bound() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = rat_int(1);
        lp.constrain(vec![rat_int(1)], Rel::Le, rat_int(5));
        let sol = match lp.solve() {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimal, got {other:?}"),
        };
        assert_eq!(sol.value, rat_int(5));
        assert_eq!(sol.assignment[0], rat_int(5));
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = rat_int(1);
        lp.constrain(vec![rat_int(1)], Rel::Ge, rat_int(1));
        lp.constrain(vec![rat_int(1)], Rel::Le, rat_int(0));
        assert!(matches!(lp.solve(), LpOutcome::Infeasible));
    }

    #[test]
    fn free_variable_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = rat_int(1);
        lp.constrain(vec![rat_int(1)], Rel::Ge, rat_int(3));
        assert!(matches!(lp.solve(), LpOutcome::Unbounded));
    }

    #[test]
    fn two_variable_vertex() {
        // max x + 2y s.t. x + y <= 4, x - y >= -2, x,y >= 0 -> (1,3), value 7.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![rat_int(1), rat_int(2)];
        lp.nonneg = vec![true, true];
        lp.constrain(vec![rat_int(1), rat_int(1)], Rel::Le, rat_int(4));
        lp.constrain(vec![rat_int(1), rat_int(-1)], Rel::Ge, rat_int(-2));
        let sol = lp.solve();
        let sol = sol.optimal().expect("optimal");
        assert_eq!(sol.value, rat_int(7));
        assert_eq!(sol.assignment, vec![rat_int(1), rat_int(3)]);
    }

    #[test]
    fn equality_constraints_and_fractional_optimum() {
        // max x + y s.t. 2x + y = 3, x - y = 0 -> x = y = 1, value 2.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![rat_int(1), rat_int(1)];
        lp.constrain(vec![rat_int(2), rat_int(1)], Rel::Eq, rat_int(3));
        lp.constrain(vec![rat_int(1), rat_int(-1)], Rel::Eq, rat_int(0));
        let sol = lp.solve();
        let sol = sol.optimal().expect("optimal");
        assert_eq!(sol.value, rat_int(2));
        assert_eq!(sol.assignment, vec![rat_int(1), rat_int(1)]);
    }

    #[test]
    fn duals_satisfy_strong_duality() {
        // Degenerate-ish problem with mixed relations and free variable.
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![rat_int(2), rat_int(-1), rat(1, 2)];
        lp.nonneg = vec![true, false, true];
        lp.constrain(vec![rat_int(1), rat_int(1), rat_int(0)], Rel::Le, rat_int(4));
        lp.constrain(vec![rat_int(0), rat_int(1), rat_int(1)], Rel::Ge, rat_int(-2));
        lp.constrain(vec![rat_int(1), rat_int(-1), rat_int(1)], Rel::Eq, rat_int(1));
        match lp.solve() {
            LpOutcome::Optimal(sol) => assert!(lp.check_certificate(&sol)),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn negative_rhs_row_normalization() {
        // max -x s.t. -x <= -3  (i.e. x >= 3) -> x = 3.
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = rat_int(-1);
        lp.nonneg[0] = true;
        lp.constrain(vec![rat_int(-1)], Rel::Le, rat_int(-3));
        let sol = lp.solve();
        let sol = sol.optimal().expect("optimal");
        assert_eq!(sol.value, rat_int(-3));
        assert_eq!(sol.assignment[0], rat_int(3));
    }
}
