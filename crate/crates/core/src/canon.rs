//! Response-function canonical form.
//!
//! Every mechanism `f(parents, noise)` is re-expressed as a random choice among the
//! `V^P` deterministic maps from the `P` parent assignments to the `V` values. Map `i`
//! outputs the `j`-th base-`V` digit of `i` at parent position `j`, where positions
//! enumerate parent assignments lexicographically (first parent most significant).
//! For one binary parent this gives `0: z↦0`, `1: z↦1−z`, `2: z↦z`, `3: z↦1`.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};
use crate::scm::{CausalDag, CounterfactualQuery, DiscreteScm, ExactDistribution, ResolvedQuery, Variable};

/// Default bound on enumerated response functions and response tuples.
pub const DEFAULT_MAX_TUPLES: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CanonConfig {
    pub max_tuples: u64,
}

impl Default for CanonConfig {
    fn default() -> Self {
        Self {
            max_tuples: DEFAULT_MAX_TUPLES,
        }
    }
}

/// Bijection between `0..V^P` and the deterministic functions parent-space → codomain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseFunctionTable {
    parent_space: usize,
    codomain: usize,
    count: u64,
    powers: Vec<u64>,
}

impl ResponseFunctionTable {
    pub fn new(parent_cards: &[usize], codomain: usize, limit: u64) -> Result<Self> {
        if codomain == 0 {
            return Err(Error::InvalidArgument("codomain must be nonempty".into()));
        }
        let parent_space: usize = parent_cards.iter().product();
        let too_many = || Error::ResourceLimit {
            what: "response functions".into(),
            required: format!("{codomain}^{parent_space}"),
            limit,
        };
        let exp = u32::try_from(parent_space).map_err(|_| too_many())?;
        let count = (codomain as u64).checked_pow(exp).ok_or_else(too_many)?;
        if count > limit {
            return Err(too_many());
        }
        let mut powers = Vec::with_capacity(parent_space);
        let mut acc = 1u64;
        for _ in 0..parent_space {
            powers.push(acc);
            acc = acc.saturating_mul(codomain as u64);
        }
        Ok(Self {
            parent_space,
            codomain,
            count,
            powers,
        })
    }

    pub fn for_variable(dag: &CausalDag, v: usize, limit: u64) -> Result<Self> {
        let cards: Vec<usize> = dag.parents(v).iter().map(|&p| dag.cardinality(p)).collect();
        Self::new(&cards, dag.cardinality(v), limit)
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn parent_space(&self) -> usize {
        self.parent_space
    }

    pub fn codomain(&self) -> usize {
        self.codomain
    }

    /// Output of function `index` at parent position `position`.
    pub fn evaluate(&self, index: u64, position: usize) -> usize {
        ((index / self.powers[position]) % self.codomain as u64) as usize
    }

    /// Index of the function with the given output per parent position.
    pub fn index_of(&self, outputs: &[usize]) -> u64 {
        debug_assert_eq!(outputs.len(), self.parent_space);
        outputs
            .iter()
            .zip(&self.powers)
            .map(|(&o, &p)| o as u64 * p)
            .sum()
    }

    pub fn outputs(&self, index: u64) -> Vec<usize> {
        (0..self.parent_space).map(|j| self.evaluate(index, j)).collect()
    }

    /// Output digits in position order, e.g. `"01"` for the identity on one binary parent.
    pub fn render(&self, index: u64) -> String {
        let digits: Vec<String> = self.outputs(index).iter().map(usize::to_string).collect();
        if self.codomain <= 10 {
            digits.concat()
        } else {
            digits.join(".")
        }
    }
}

/// Enumerates the response functions of a codomain over the given parent domains.
pub fn enumerate_response_functions(
    parent_cards: &[usize],
    codomain: usize,
    config: CanonConfig,
) -> Result<ResponseFunctionTable> {
    ResponseFunctionTable::new(parent_cards, codomain, config.max_tuples)
}

/// Distribution over response-index tuples for an ordered list of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalResponseVector {
    pub variables: Vec<usize>,
    pub probabilities: BTreeMap<Vec<u64>, Rational>,
}

impl CanonicalResponseVector {
    pub fn get(&self, tuple: &[u64]) -> Rational {
        self.probabilities.get(tuple).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.probabilities.values().fold(Rational::zero(), |a, p| a + p)
    }

    /// Dense vector for a single variable in canonical index order.
    pub fn dense(&self, table: &ResponseFunctionTable) -> Vec<Rational> {
        assert_eq!(self.variables.len(), 1, "dense form needs exactly one variable");
        (0..table.count()).map(|i| self.get(&[i])).collect()
    }

    /// One line per positive atom: `X=01 Y=10 : 1/4`.
    pub fn render(&self, dag: &CausalDag, tables: &[ResponseFunctionTable]) -> Vec<String> {
        self.probabilities
            .iter()
            .filter(|(_, p)| p.is_positive())
            .map(|(tuple, p)| {
                let parts: Vec<String> = self
                    .variables
                    .iter()
                    .zip(tuple)
                    .map(|(&v, &i)| format!("{}={}", dag.name(v), tables[v].render(i)))
                    .collect();
                format!("{} : {}", parts.join(" "), format_rational(p))
            })
            .collect()
    }
}

/// Independent per-variable response distributions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductCanonicalScm {
    dag: CausalDag,
    tables: Vec<ResponseFunctionTable>,
    factors: Vec<BTreeMap<u64, Rational>>,
}

impl ProductCanonicalScm {
    pub fn new(dag: CausalDag, tables: Vec<ResponseFunctionTable>, factors: Vec<BTreeMap<u64, Rational>>) -> Self {
        Self { dag, tables, factors }
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn tables(&self) -> &[ResponseFunctionTable] {
        &self.tables
    }

    pub fn factor(&self, v: usize) -> &BTreeMap<u64, Rational> {
        &self.factors[v]
    }

    /// Product measure over the response indices of `over`.
    pub fn to_joint_vector(&self, over: &[usize], config: CanonConfig) -> Result<CanonicalResponseVector> {
        if over.is_empty() {
            return Err(Error::InvalidArgument("joint vector needs at least one variable".into()));
        }
        let space = over
            .iter()
            .try_fold(1u64, |acc, &v| acc.checked_mul(self.tables[v].count()))
            .filter(|&s| s <= config.max_tuples);
        if space.is_none() {
            return Err(Error::ResourceLimit {
                what: "response tuples".into(),
                required: over.iter().map(|&v| self.tables[v].count().to_string()).collect::<Vec<_>>().join("*"),
                limit: config.max_tuples,
            });
        }
        let mut probabilities = BTreeMap::from([(Vec::new(), Rational::from_integer(1.into()))]);
        for &v in over {
            let mut next = BTreeMap::new();
            for (prefix, p) in &probabilities {
                for (&i, q) in &self.factors[v] {
                    let mut key: Vec<u64> = prefix.clone();
                    key.push(i);
                    next.insert(key, p * q);
                }
            }
            probabilities = next;
        }
        Ok(CanonicalResponseVector {
            variables: over.to_vec(),
            probabilities,
        })
    }

    /// Joint vector over every variable in index order.
    pub fn full_vector(&self, config: CanonConfig) -> Result<CanonicalResponseVector> {
        let all: Vec<usize> = (0..self.dag.len()).collect();
        self.to_joint_vector(&all, config)
    }
}

/// Maps each noise value to the response function its table row realizes and sums masses.
pub fn canonicalize(model: &DiscreteScm, config: CanonConfig) -> Result<ProductCanonicalScm> {
    let dag = model.dag().clone();
    let mut tables = Vec::with_capacity(dag.len());
    let mut factors = Vec::with_capacity(dag.len());
    for v in 0..dag.len() {
        let table = ResponseFunctionTable::for_variable(&dag, v, config.max_tuples)?;
        let mech = model.mechanism(v);
        let mut factor: BTreeMap<u64, Rational> = BTreeMap::new();
        for (n, p) in model.noise(v).probabilities.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let outputs: Vec<usize> = (0..table.parent_space()).map(|pos| mech.output(pos, n)).collect();
            *factor.entry(table.index_of(&outputs)).or_insert_with(Rational::zero) += p;
        }
        tables.push(table);
        factors.push(factor);
    }
    Ok(ProductCanonicalScm { dag, tables, factors })
}

/// Replays response functions in topological order under an intervention.
///
/// `tuple[v]` is the response index of `v`; it may be `None` only for intervened variables.
pub fn evaluate_world(
    dag: &CausalDag,
    tables: &[ResponseFunctionTable],
    tuple: &[Option<u64>],
    intervention: &[Option<usize>],
) -> Result<Vec<usize>> {
    let mut world = vec![0; dag.len()];
    for &v in dag.topological_order() {
        world[v] = match intervention.get(v).copied().flatten() {
            Some(x) => x,
            None => {
                let idx = tuple.get(v).copied().flatten().ok_or_else(|| {
                    Error::InvalidArgument(format!("no response index for `{}`", dag.name(v)))
                })?;
                tables[v].evaluate(idx, dag.parent_position(v, &world))
            }
        };
    }
    Ok(world)
}

/// Observational or interventional law induced by a joint response vector covering
/// every non-intervened variable.
pub fn induced_distribution(
    dag: &CausalDag,
    tables: &[ResponseFunctionTable],
    vector: &CanonicalResponseVector,
    intervention: &[Option<usize>],
    over: &[usize],
) -> Result<ExactDistribution> {
    let mut mass: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
    let mut tuple = vec![None; dag.len()];
    for (t, p) in vector.probabilities.iter().filter(|(_, p)| p.is_positive()) {
        for (&v, &i) in vector.variables.iter().zip(t) {
            tuple[v] = Some(i);
        }
        let world = evaluate_world(dag, tables, &tuple, intervention)?;
        let key: Vec<usize> = over.iter().map(|&v| world[v]).collect();
        *mass.entry(key).or_insert_with(Rational::zero) += p;
    }
    let vars: Vec<Variable> = over.iter().map(|&v| dag.variable(v).clone()).collect();
    ExactDistribution::new(vars, mass)
}

/// Cross-world probability computed on the canonical side by summing tuple masses.
pub fn canonical_counterfactual_probability(
    dag: &CausalDag,
    tables: &[ResponseFunctionTable],
    vector: &CanonicalResponseVector,
    query: &CounterfactualQuery,
) -> Result<Rational> {
    let resolved = ResolvedQuery::resolve(dag, query)?;
    let mut tuple = vec![None; dag.len()];
    let mut total = Rational::zero();
    for (t, p) in &vector.probabilities {
        for (&v, &i) in vector.variables.iter().zip(t) {
            tuple[v] = Some(i);
        }
        let realized = resolved
            .worlds
            .iter()
            .map(|iv| evaluate_world(dag, tables, &tuple, iv))
            .collect::<Result<Vec<_>>>()?;
        if resolved.holds(&realized) {
            total += p;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, LISTED_TO_CANONICAL};
    use crate::rational::ratio;

    #[test]
    fn binary_functions_on_one_parent() {
        let t = enumerate_response_functions(&[2], 2, CanonConfig::default()).unwrap();
        assert_eq!(t.count(), 4);
        assert_eq!(t.outputs(0), [0, 0]);
        assert_eq!(t.outputs(1), [1, 0]);
        assert_eq!(t.outputs(2), [0, 1]);
        assert_eq!(t.outputs(3), [1, 1]);
        assert_eq!(t.render(2), "01");
    }

    #[test]
    fn root_and_two_parent_counts() {
        let t = enumerate_response_functions(&[], 3, CanonConfig::default()).unwrap();
        assert_eq!(t.count(), 3);
        assert_eq!((0..3).map(|i| t.evaluate(i, 0)).collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(enumerate_response_functions(&[2, 2], 2, CanonConfig::default()).unwrap().count(), 16);
    }

    #[test]
    fn count_limit_is_a_resource_error() {
        let small = CanonConfig { max_tuples: 15 };
        assert!(matches!(
            enumerate_response_functions(&[2, 2], 2, small),
            Err(Error::ResourceLimit { .. })
        ));
        assert!(matches!(
            enumerate_response_functions(&[4, 4, 4], 4, CanonConfig::default()),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn cardinality_matches_power() {
        for v in 1..=4usize {
            for p in 1..=9u32 {
                let expected = (v as u64).pow(p);
                // one parent with `p` values, and the same space split over binary parents
                let t = enumerate_response_functions(&[p as usize], v, CanonConfig::default()).unwrap();
                assert_eq!(t.count(), expected, "V={v} P={p}");
                if p.is_power_of_two() {
                    let cards = vec![2; p.trailing_zeros() as usize];
                    let t = enumerate_response_functions(&cards, v, CanonConfig::default()).unwrap();
                    assert_eq!(t.count(), expected);
                }
                let last = t.count() - 1;
                assert_eq!(t.index_of(&t.outputs(last)), last);
            }
        }
    }

    #[test]
    fn xor_mechanism_canonicalizes_to_identity_and_negation() {
        let canon = canonicalize(&fixtures::xor_model(), CanonConfig::default()).unwrap();
        let y = canon.dag().id("Y").unwrap();
        let vec = canon.to_joint_vector(&[y], CanonConfig::default()).unwrap();
        let dense = vec.dense(&canon.tables()[y]);
        let listed: Vec<Rational> = LISTED_TO_CANONICAL.iter().map(|&i| dense[i as usize].clone()).collect();
        assert_eq!(listed, [ratio(0, 1), ratio(0, 1), ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn constant_and_deterministic_mechanisms() {
        let p = ratio(2, 7);
        let m = fixtures::response_model(ratio(1, 2), [&ratio(1, 1) - &p, p.clone(), ratio(0, 1), ratio(0, 1)]).unwrap();
        let canon = canonicalize(&m, CanonConfig::default()).unwrap();
        let f = canon.factor(1);
        assert_eq!(f.len(), 2);
        assert_eq!(f[&0], &ratio(1, 1) - &p);
        assert_eq!(f[&3], p);

        let det = fixtures::response_model(ratio(1, 2), [ratio(0, 1), ratio(0, 1), ratio(1, 1), ratio(0, 1)]).unwrap();
        let canon = canonicalize(&det, CanonConfig::default()).unwrap();
        assert_eq!(canon.factor(1).len(), 1);
        assert_eq!(canon.factor(1)[&2], ratio(1, 1));
    }

    #[test]
    fn world_replay() {
        let g = fixtures::zy_graph();
        let tables: Vec<_> = (0..2).map(|v| ResponseFunctionTable::for_variable(&g, v, 100).unwrap()).collect();
        let identity = evaluate_world(&g, &tables, &[None, Some(2)], &[Some(1), None]).unwrap();
        assert_eq!(identity, [1, 1]);
        let negation = evaluate_world(&g, &tables, &[None, Some(1)], &[Some(1), None]).unwrap();
        assert_eq!(negation, [1, 0]);
        for z in 0..2 {
            let w = evaluate_world(&g, &tables, &[Some(0), Some(3)], &[Some(z), None]).unwrap();
            assert_eq!(w[1], 1);
        }
        assert!(evaluate_world(&g, &tables, &[None, Some(3)], &[None, None]).is_err());
    }

    #[test]
    fn response_model_vector_is_returned_unchanged() {
        let (p00, p01, lambda) = (ratio(3, 5), ratio(3, 10), ratio(1, 10));
        let a = fixtures::lambda_line(&p00, &p01, &lambda);
        let m = fixtures::response_model(ratio(1, 3), a.clone()).unwrap();
        let canon = canonicalize(&m, CanonConfig::default()).unwrap();
        let v = canon.to_joint_vector(&[1], CanonConfig::default()).unwrap();
        for (listed, &idx) in LISTED_TO_CANONICAL.iter().enumerate() {
            assert_eq!(v.get(&[idx]), a[listed]);
        }
    }

    #[test]
    fn tuple_space_limit() {
        let canon = canonicalize(&fixtures::mod2_model(), CanonConfig::default()).unwrap();
        let tight = CanonConfig { max_tuples: 10 };
        assert!(matches!(canon.full_vector(tight), Err(Error::ResourceLimit { .. })));
    }
}
