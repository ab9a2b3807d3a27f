//! Exact two-phase simplex over rationals with Bland's pivoting rule.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `x` attains `value` for the requested sense.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub value: Rational,
    pub x: Vec<Rational>,
}

/// Optimizes `objective · x` subject to `a x = b`, `x >= 0`.
///
/// Redundant equality rows are detected during phase one and dropped. The pivot rule is
/// Bland's (lowest eligible column enters, lowest basic index leaves among ratio ties),
/// so the returned vertex depends only on the input.
pub fn solve_standard_form(a: &[Vec<Rational>], b: &[Rational], objective: &[Rational], sense: Sense) -> Result<LpSolution> {
    let n = objective.len();
    if a.len() != b.len() || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("constraint matrix shape does not match".into()));
    }
    let m = a.len();
    let mut tab = Tableau::phase_one(a, b, n);

    let phase_one_cost: Vec<Rational> = (0..n + m)
        .map(|j| if j >= n { Rational::one() } else { Rational::zero() })
        .collect();
    tab.optimize(&phase_one_cost, n + m)?;
    if tab.objective(&phase_one_cost).is_positive() {
        return Err(Error::Infeasible);
    }
    tab.drive_out_artificials(n);

    let cost: Vec<Rational> = match sense {
        Sense::Minimize => objective.to_vec(),
        Sense::Maximize => objective.iter().map(|c| -c).collect(),
    };
    let mut cost_ext = cost.clone();
    cost_ext.resize(n + m, Rational::zero());
    tab.optimize(&cost_ext, n)?;

    let mut x = vec![Rational::zero(); n];
    for (i, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = tab.rhs[i].clone();
        }
    }
    let value = objective.iter().zip(&x).fold(Rational::zero(), |acc, (c, v)| acc + c * v);
    Ok(LpSolution { value, x })
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn phase_one(a: &[Vec<Rational>], b: &[Rational], n: usize) -> Self {
        let m = a.len();
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, (row, bi)) in a.iter().zip(b).enumerate() {
            let flip = bi.is_negative();
            let mut r: Vec<Rational> = row.iter().map(|v| if flip { -v } else { v.clone() }).collect();
            r.extend((0..m).map(|k| if k == i { Rational::one() } else { Rational::zero() }));
            rows.push(r);
            rhs.push(if flip { -bi } else { bi.clone() });
        }
        Self {
            rows,
            rhs,
            basis: (n..n + m).collect(),
        }
    }

    fn objective(&self, cost: &[Rational]) -> Rational {
        self.basis
            .iter()
            .zip(&self.rhs)
            .fold(Rational::zero(), |acc, (&j, v)| acc + &cost[j] * v)
    }

    fn reduced_cost(&self, cost: &[Rational], j: usize) -> Rational {
        self.basis
            .iter()
            .zip(&self.rows)
            .fold(cost[j].clone(), |acc, (&bj, row)| acc - &cost[bj] * &row[j])
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        self.rhs[r] /= &p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.rhs[i] -= &f * &pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` letting only columns `< allowed` enter.
    fn optimize(&mut self, cost: &[Rational], allowed: usize) -> Result<()> {
        loop {
            let entering = (0..allowed)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.reduced_cost(cost, j).is_negative());
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let coef = &self.rows[i][c];
                if !coef.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / coef;
                let better = match &leave {
                    None => true,
                    Some((li, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else { return Err(Error::Unbounded) };
            self.pivot(r, c);
        }
    }

    /// After a zero-cost phase one, replaces basic artificials by structural columns and
    /// drops rows that turn out to be linear combinations of the others.
    fn drive_out_artificials(&mut self, n: usize) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= n {
                match (0..n).find(|&j| !self.rows[i][j].is_zero()) {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for row in &mut self.rows {
            row.truncate(n);
        }
    }
}
