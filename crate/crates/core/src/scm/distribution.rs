use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::domain::Variable;
use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};

/// Exact joint distribution over an ordered list of variables.
///
/// Only atoms with positive mass are stored; absent assignments have probability zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    vars: Vec<Variable>,
    mass: BTreeMap<Vec<usize>, Rational>,
}

impl ExactDistribution {
    /// Checks that probabilities are nonnegative, values are in range and the total is 1.
    pub fn new(vars: Vec<Variable>, entries: impl IntoIterator<Item = (Vec<usize>, Rational)>) -> Result<Self> {
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].iter().any(|u| u.name == v.name) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
        }
        let mut mass = BTreeMap::new();
        let mut total = Rational::zero();
        for (assignment, p) in entries {
            if assignment.len() != vars.len() {
                return Err(Error::InvalidDistribution(format!(
                    "assignment has {} values, expected {}",
                    assignment.len(),
                    vars.len()
                )));
            }
            for (v, &x) in vars.iter().zip(&assignment) {
                if x >= v.domain.len() {
                    return Err(Error::UnknownValue {
                        variable: v.name.clone(),
                        value: x.to_string(),
                    });
                }
            }
            if p.is_negative() {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability {}",
                    format_rational(&p)
                )));
            }
            total += &p;
            if p.is_zero() {
                continue;
            }
            if mass.insert(assignment, p).is_some() {
                return Err(Error::InvalidDistribution("duplicate assignment".into()));
            }
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {}",
                format_rational(&total)
            )));
        }
        Ok(Self { vars, mass })
    }

    pub(crate) fn from_parts(vars: Vec<Variable>, mass: BTreeMap<Vec<usize>, Rational>) -> Self {
        debug_assert!(mass.values().all(|p| p.is_positive()));
        Self { vars, mass }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn names(&self) -> Vec<&str> {
        self.vars.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Positive-mass atoms in lexicographic assignment order.
    pub fn support(&self) -> impl Iterator<Item = (&[usize], &Rational)> {
        self.mass.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn prob(&self, assignment: &[usize]) -> Rational {
        self.mass.get(assignment).cloned().unwrap_or_else(Rational::zero)
    }

    /// Probability of a partial event given as `(position, value)` pairs.
    pub fn event_probability(&self, event: &[(usize, usize)]) -> Rational {
        self.mass
            .iter()
            .filter(|(a, _)| event.iter().all(|&(pos, val)| a[pos] == val))
            .fold(Rational::zero(), |acc, (_, p)| acc + p)
    }

    pub fn total(&self) -> Rational {
        self.mass.values().fold(Rational::zero(), |acc, p| acc + p)
    }

    /// Marginal over the variables at `positions`, in that order.
    pub fn marginal(&self, positions: &[usize]) -> ExactDistribution {
        let vars = positions.iter().map(|&p| self.vars[p].clone()).collect();
        let mut mass: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for (a, p) in &self.mass {
            let key: Vec<usize> = positions.iter().map(|&i| a[i]).collect();
            *mass.entry(key).or_insert_with(Rational::zero) += p;
        }
        ExactDistribution { vars, mass }
    }

    pub fn marginal_by_names<S: AsRef<str>>(&self, names: &[S]) -> Result<ExactDistribution> {
        let positions = names
            .iter()
            .map(|n| self.position(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.marginal(&positions))
    }

    /// Exact test of `A ⟂ B | S`, cross-multiplied so no division is needed.
    pub fn check_conditional_independence<S: AsRef<str>>(&self, a: &[S], b: &[S], s: &[S]) -> Result<bool> {
        let pa = self.positions(a)?;
        let pb = self.positions(b)?;
        let ps = self.positions(s)?;
        let mut seen = pa.clone();
        for p in pb.iter().chain(&ps) {
            if seen.contains(p) {
                return Err(Error::InvalidArgument(format!(
                    "variable `{}` appears in more than one set",
                    self.vars[*p].name
                )));
            }
            seen.push(*p);
        }
        if pa.is_empty() || pb.is_empty() {
            return Ok(true);
        }
        let joint = self.marginal(&[pa.clone(), pb.clone(), ps.clone()].concat());
        let a_s = self.marginal(&[pa.clone(), ps.clone()].concat());
        let b_s = self.marginal(&[pb.clone(), ps.clone()].concat());
        let s_m = self.marginal(&ps);
        let cards = |ps: &[usize]| ps.iter().map(|&p| self.vars[p].domain.len()).collect::<Vec<_>>();
        let a_space = assignments(&cards(&pa));
        let b_space = assignments(&cards(&pb));
        for (s_val, p_s) in &s_m.mass {
            for a_val in &a_space {
                let p_as = a_s.prob(&[a_val.as_slice(), s_val].concat());
                for b_val in &b_space {
                    let p_abs = joint.prob(&[a_val.as_slice(), b_val, s_val].concat());
                    let p_bs = b_s.prob(&[b_val.as_slice(), s_val].concat());
                    if &p_abs * p_s != &p_as * &p_bs {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    fn positions<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.position(n.as_ref())).collect()
    }

    /// Renders an assignment with variable names, e.g. `Z=0, Y=1`.
    pub fn render_assignment(&self, assignment: &[usize]) -> String {
        self.vars
            .iter()
            .zip(assignment)
            .map(|(v, &x)| format!("{}={}", v.name, v.domain.value(x)))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// All assignments of a mixed-radix space in lexicographic order.
pub fn assignments(cards: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0; cards.len()];
    for _ in 0..total {
        out.push(cur.clone());
        for i in (0..cards.len()).rev() {
            cur[i] += 1;
            if cur[i] < cards[i] {
                break;
            }
            cur[i] = 0;
        }
    }
    out
}
