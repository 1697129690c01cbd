//! Exact two-phase simplex over rationals with Bland's pivoting rule.
//!
//! Every variable is implicitly non-negative.

use num::{Signed, Zero};

use crate::rational::{one, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Vec<(usize, Q)>,
    pub relation: Relation,
    pub rhs: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { point: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearProgram {
    vars: usize,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(vars: usize) -> Self {
        LinearProgram {
            vars,
            constraints: Vec::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn add(&mut self, terms: Vec<(usize, Q)>, relation: Relation, rhs: Q) {
        debug_assert!(terms.iter().all(|(k, _)| *k < self.vars));
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
        });
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn feasible_point(&self) -> Option<Vec<Q>> {
        match self.maximize(&[]) {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn maximize(&self, objective: &[(usize, Q)]) -> LpOutcome {
        let Some(mut t) = Tableau::phase_one(self) else {
            return LpOutcome::Infeasible;
        };
        let mut c = vec![Q::zero(); self.vars];
        for (k, v) in objective {
            c[*k] += v;
        }
        if !t.optimize(&c) {
            return LpOutcome::Unbounded;
        }
        let point = t.point(self.vars);
        let value = objective.iter().map(|(k, v)| v * &point[*k]).sum();
        LpOutcome::Optimal { point, value }
    }

    /// Maximizes the variables in `order` one after another, each time
    /// freezing the optimum before moving on. `None` when infeasible or
    /// unbounded.
    pub fn lexicographic_max(&self, order: &[usize]) -> Option<Vec<Q>> {
        let mut lp = self.clone();
        let mut last = lp.feasible_point()?;
        for &k in order {
            match lp.maximize(&[(k, one())]) {
                LpOutcome::Optimal { point, value } => {
                    lp.add(vec![(k, one())], Relation::Eq, value);
                    last = point;
                }
                _ => return None,
            }
        }
        Some(last)
    }
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    allowed: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.allowed.len()
    }

    /// Builds the tableau and drives it to a feasible basis without
    /// artificial variables.
    fn phase_one(lp: &LinearProgram) -> Option<Tableau> {
        let n = lp.vars;
        let m = lp.constraints.len();
        let mut extra = 0;
        let mut artificial = 0;
        let mut normalized = Vec::with_capacity(m);
        for c in &lp.constraints {
            let mut row = vec![Q::zero(); n];
            for (k, v) in &c.terms {
                row[*k] += v;
            }
            let (rel, rhs) = if c.rhs.is_negative() {
                row.iter_mut().for_each(|v| *v = -v.clone());
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (flipped, -c.rhs.clone())
            } else {
                (c.relation, c.rhs.clone())
            };
            if rel != Relation::Eq {
                extra += 1;
            }
            if rel != Relation::Le {
                artificial += 1;
            }
            normalized.push((row, rel, rhs));
        }
        let width = n + extra + artificial;
        let art_start = n + extra;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut s, mut a) = (n, art_start);
        for (coeffs, rel, rhs) in normalized {
            let mut row = coeffs;
            row.resize(width + 1, Q::zero());
            row[width] = rhs;
            match rel {
                Relation::Le => {
                    row[s] = one();
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -one();
                    s += 1;
                    row[a] = one();
                    basis.push(a);
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = one();
                    basis.push(a);
                    a += 1;
                }
            }
            rows.push(row);
        }
        let mut t = Tableau {
            rows,
            basis,
            allowed: vec![true; width],
        };
        if artificial > 0 {
            let mut c = vec![Q::zero(); width];
            for v in c.iter_mut().skip(art_start) {
                *v = -one();
            }
            t.optimize(&c);
            let infeasibility: Q = t
                .basis
                .iter()
                .zip(&t.rows)
                .filter(|(b, _)| **b >= art_start)
                .map(|(_, r)| r[width].clone())
                .sum();
            if infeasibility.is_positive() {
                return None;
            }
            let mut i = 0;
            while i < t.rows.len() {
                if t.basis[i] >= art_start {
                    match (0..art_start).find(|&k| !t.rows[i][k].is_zero()) {
                        Some(k) => t.pivot(i, k),
                        None => {
                            t.rows.remove(i);
                            t.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
            for k in art_start..width {
                t.allowed[k] = false;
            }
        }
        Some(t)
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let p = self.rows[r][k].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[k].is_zero() {
                continue;
            }
            let f = row[k].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = k;
    }

    /// Maximizes `c . x` from the current feasible basis; `false` if unbounded.
    fn optimize(&mut self, c: &[Q]) -> bool {
        let width = self.width();
        loop {
            let mut reduced: Vec<Q> = (0..width)
                .map(|k| c.get(k).cloned().unwrap_or_else(Q::zero))
                .collect();
            for (row, &b) in self.rows.iter().zip(&self.basis) {
                let cb = c.get(b).cloned().unwrap_or_else(Q::zero);
                if cb.is_zero() {
                    continue;
                }
                for (k, v) in row.iter().take(width).enumerate() {
                    if !v.is_zero() {
                        reduced[k] -= &cb * v;
                    }
                }
            }
            let entering = (0..width).find(|&k| self.allowed[k] && reduced[k].is_positive());
            let Some(k) = entering else { return true };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[k].is_positive() {
                    continue;
                }
                let ratio = &row[width] / &row[k];
                let better = match &leave {
                    None => true,
                    Some((j, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*j])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, k);
        }
    }

    fn point(&self, n: usize) -> Vec<Q> {
        let width = self.width();
        let mut x = vec![Q::zero(); n];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < n {
                x[b] = row[width].clone();
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, q};
    use proptest::prelude::*;

    #[test]
    fn textbook_optimum() {
        let mut lp = LinearProgram::new(2);
        lp.add(vec![(0, q(1)), (1, q(1))], Relation::Le, q(4));
        lp.add(vec![(0, q(1)), (1, q(3))], Relation::Le, q(6));
        match lp.maximize(&[(0, q(3)), (1, q(2))]) {
            LpOutcome::Optimal { point, value } => {
                assert_eq!(point, vec![q(4), q(0)]);
                assert_eq!(value, q(12));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equalities_and_infeasibility() {
        let mut lp = LinearProgram::new(2);
        lp.add(vec![(0, q(2)), (1, q(1))], Relation::Eq, q(3));
        lp.add(vec![(0, q(1))], Relation::Ge, frac(1, 2));
        assert_eq!(
            lp.lexicographic_max(&[1, 0]),
            Some(vec![frac(1, 2), q(2)])
        );
        lp.add(vec![(1, q(1))], Relation::Ge, q(3));
        assert_eq!(lp.maximize(&[]), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_and_negative_rhs() {
        let mut lp = LinearProgram::new(2);
        lp.add(vec![(0, q(1)), (1, q(-1))], Relation::Le, q(-1));
        assert_eq!(lp.maximize(&[(1, q(1))]), LpOutcome::Unbounded);
        assert_eq!(
            lp.maximize(&[(0, q(-1)), (1, q(-1))]),
            LpOutcome::Optimal {
                point: vec![q(0), q(1)],
                value: q(-1)
            }
        );
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.add(vec![(0, q(1)), (1, q(1))], Relation::Eq, q(1));
        lp.add(vec![(0, q(2)), (1, q(2))], Relation::Eq, q(2));
        assert_eq!(lp.lexicographic_max(&[0]), Some(vec![q(1), q(0)]));
    }

    proptest! {
        /// On a box with one cut, the optimum must beat every grid point.
        #[test]
        fn optimum_dominates_grid(c0 in -3i64..=3, c1 in -3i64..=3, a in 1i64..=4, b in 1i64..=4, cap in 1i64..=8) {
            let mut lp = LinearProgram::new(2);
            lp.add(vec![(0, q(1))], Relation::Le, q(4));
            lp.add(vec![(1, q(1))], Relation::Le, q(4));
            lp.add(vec![(0, q(a)), (1, q(b))], Relation::Le, q(cap));
            let LpOutcome::Optimal { point, value } = lp.maximize(&[(0, q(c0)), (1, q(c1))]) else {
                panic!("bounded and feasible");
            };
            prop_assert!(q(a) * &point[0] + q(b) * &point[1] <= q(cap));
            for i in 0..=16 {
                for j in 0..=16 {
                    let (x, y) = (frac(i, 4), frac(j, 4));
                    if q(a) * &x + q(b) * &y <= q(cap) {
                        prop_assert!(q(c0) * x + q(c1) * y <= value);
                    }
                }
            }
        }
    }
}
