//! Random graphs, models and probability vectors.
//!
//! Probability vectors come from a symmetric Dirichlet(1) draw truncated to dyadic
//! rationals, so every generator stays in exact arithmetic while exact coincidences
//! (such as a parameter hitting a measure-zero set) remain astronomically unlikely.

use num_bigint::BigInt;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::canon::ResponseFunctionTable;
use crate::error::Result;
use crate::rational::Rational;
use crate::scm::{CausalDag, DiscreteScm, FiniteDomain, NoiseSpec, TabularMechanism, Variable};

/// Denominator exponent used by [`dirichlet`].
pub const DIRICHLET_BITS: u32 = 60;

/// Symmetric Dirichlet(1) draw on `k` atoms with denominators `2^bits`; every atom positive.
///
/// Each atom gets one unit of `2^-bits` and the remaining units are split by the draw,
/// truncating, with the rounding residue going to the last atom.
pub fn dirichlet_bits<R: Rng + ?Sized>(rng: &mut R, k: usize, bits: u32) -> Vec<Rational> {
    assert!(k >= 1 && bits <= 120);
    let units = 1u128 << bits;
    assert!(k as u128 <= units, "{k} atoms need more than {bits} bits");
    let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    let spare = units - k as u128;
    let mut counts: Vec<u128> = draws
        .iter()
        .map(|x| 1 + (x / total * spare as f64).floor().min(spare as f64) as u128)
        .collect();
    let used: u128 = counts[..k - 1].iter().sum();
    counts[k - 1] = units.saturating_sub(used).max(1);
    // float rounding can overshoot by a few units; take them back from the largest atoms
    while counts.iter().sum::<u128>() > units {
        let i = (0..k).max_by_key(|&i| counts[i]).expect("nonempty");
        counts[i] -= 1;
    }
    let den = BigInt::from(units);
    counts
        .into_iter()
        .map(|c| Rational::new(BigInt::from(c), den.clone()))
        .collect()
}

pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<Rational> {
    dirichlet_bits(rng, k, DIRICHLET_BITS)
}

/// Random DAG on `n` nodes named `V0..`, edges only from lower to higher index.
pub fn random_dag<R: Rng + ?Sized>(rng: &mut R, n: usize, edge_prob: f64, max_card: usize) -> CausalDag {
    let vars: Vec<Variable> = (0..n)
        .map(|i| {
            let card = rng.random_range(2..=max_card.max(2));
            Variable::new(format!("V{i}"), FiniteDomain::range(card)).expect("generated name")
        })
        .collect();
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..j {
            if rng.random_bool(edge_prob) {
                edges.push((format!("V{i}"), format!("V{j}")));
            }
        }
    }
    CausalDag::new(vars, &edges).expect("forward edges are acyclic")
}

/// Every response function of every variable receives positive Dirichlet mass; noise
/// value `i` of a variable selects its response function `i`.
///
/// This is an absolutely continuous draw from the response-function simplex of each
/// variable, the measure under which "almost all models" statements are made.
pub fn random_generic_scm<R: Rng + ?Sized>(rng: &mut R, dag: &CausalDag) -> Result<DiscreteScm> {
    random_generic_scm_bits(rng, dag, DIRICHLET_BITS)
}

pub fn random_generic_scm_bits<R: Rng + ?Sized>(rng: &mut R, dag: &CausalDag, bits: u32) -> Result<DiscreteScm> {
    let mut mechanisms = Vec::with_capacity(dag.len());
    let mut noises = Vec::with_capacity(dag.len());
    for v in 0..dag.len() {
        let table = ResponseFunctionTable::for_variable(dag, v, 1 << 16)?;
        let k = table.count() as usize;
        mechanisms.push(TabularMechanism {
            rows: (0..table.parent_space())
                .map(|pos| (0..k).map(|i| Some(table.evaluate(i as u64, pos))).collect())
                .collect(),
        });
        noises.push(NoiseSpec::new(dirichlet_bits(rng, k, bits)));
    }
    DiscreteScm::new(dag.clone(), mechanisms, noises)
}

/// Small noise domains (`1..=max_noise` values), each value mapped to a uniformly random
/// response function. Coincidences such as vacuous edges and invariant outcomes are common.
pub fn random_sparse_scm<R: Rng + ?Sized>(rng: &mut R, dag: &CausalDag, max_noise: usize, bits: u32) -> Result<DiscreteScm> {
    let mut mechanisms = Vec::with_capacity(dag.len());
    let mut noises = Vec::with_capacity(dag.len());
    for v in 0..dag.len() {
        let k = rng.random_range(1..=max_noise.max(1));
        let card = dag.cardinality(v);
        let rows = (0..dag.parent_space(v))
            .map(|_| (0..k).map(|_| Some(rng.random_range(0..card))).collect::<Vec<_>>())
            .collect();
        mechanisms.push(TabularMechanism { rows });
        noises.push(NoiseSpec::new(dirichlet_bits(rng, k, bits)));
    }
    DiscreteScm::new(dag.clone(), mechanisms, noises)
}
