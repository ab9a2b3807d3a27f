use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dag::CausalDag;
use super::distribution::{assignments, ExactDistribution};
use super::domain::Variable;
use super::query::{resolve_intervention, CounterfactualQuery, ResolvedQuery};
use crate::error::{Error, Result};
use crate::rational::{format_rational, to_f64, Rational};

/// Independent finite noise attached to one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseSpec {
    pub probabilities: Vec<Rational>,
}

impl NoiseSpec {
    pub fn new(probabilities: Vec<Rational>) -> Self {
        Self { probabilities }
    }

    /// A single noise value with probability one.
    pub fn point() -> Self {
        Self::new(vec![Rational::one()])
    }

    pub fn uniform(k: usize) -> Self {
        let p = Rational::new(1.into(), (k as i64).into());
        Self::new(vec![p; k])
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// Extensional mechanism: `rows[parent_position][noise]` is the output value index.
///
/// A `None` cell is a missing row; it only survives in unchecked models and is reported
/// by [`DiscreteScm::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabularMechanism {
    pub rows: Vec<Vec<Option<usize>>>,
}

impl TabularMechanism {
    pub fn output(&self, parent_position: usize, noise: usize) -> usize {
        self.rows[parent_position][noise].expect("mechanism table must be total")
    }
}

/// A violated model invariant, attributed to one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Discrete structural causal model: DAG, one table per node, independent noises.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteScm {
    dag: CausalDag,
    mechanisms: Vec<TabularMechanism>,
    noises: Vec<NoiseSpec>,
}

/// Partial assignment `variable index -> value index`, one slot per variable.
pub type Intervention = Vec<Option<usize>>;

impl DiscreteScm {
    pub fn new(dag: CausalDag, mechanisms: Vec<TabularMechanism>, noises: Vec<NoiseSpec>) -> Result<Self> {
        let model = Self::new_unchecked(dag, mechanisms, noises);
        let report = model.validate();
        if report.is_ok() {
            Ok(model)
        } else {
            Err(Error::InvalidModel(
                report.violations.into_iter().map(|v| v.message).collect(),
            ))
        }
    }

    /// Builds without validation; call [`DiscreteScm::validate`] before evaluating.
    pub fn new_unchecked(dag: CausalDag, mechanisms: Vec<TabularMechanism>, noises: Vec<NoiseSpec>) -> Self {
        Self {
            dag,
            mechanisms,
            noises,
        }
    }

    /// Tabulates `f(variable, parent values, noise)` for every node.
    pub fn from_fn(
        dag: CausalDag,
        noises: Vec<NoiseSpec>,
        f: impl Fn(usize, &[usize], usize) -> usize,
    ) -> Result<Self> {
        let mechanisms = (0..dag.len())
            .map(|v| {
                let k = noises.get(v).map_or(0, NoiseSpec::len);
                TabularMechanism {
                    rows: (0..dag.parent_space(v))
                        .map(|pos| {
                            let pa = dag.parent_assignment(v, pos);
                            (0..k).map(|n| Some(f(v, &pa, n))).collect()
                        })
                        .collect(),
                }
            })
            .collect();
        Self::new(dag, mechanisms, noises)
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn mechanism(&self, v: usize) -> &TabularMechanism {
        &self.mechanisms[v]
    }

    pub fn noise(&self, v: usize) -> &NoiseSpec {
        &self.noises[v]
    }

    pub fn len(&self) -> usize {
        self.dag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dag.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<usize> {
        self.dag.id(name)
    }

    /// Checks every type invariant; violations name the node and, for tables, the row.
    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        let dag = &self.dag;
        let mut push = |v: usize, message: String| {
            out.push(Violation {
                node: dag.name(v).to_string(),
                message,
            })
        };
        if self.mechanisms.len() != dag.len() || self.noises.len() != dag.len() {
            out.push(Violation {
                node: String::new(),
                message: format!(
                    "model has {} nodes but {} mechanisms and {} noises",
                    dag.len(),
                    self.mechanisms.len(),
                    self.noises.len()
                ),
            });
            return ValidationReport { violations: out };
        }
        for v in 0..dag.len() {
            let name = dag.name(v);
            let noise = &self.noises[v];
            if noise.is_empty() {
                push(v, format!("noise of {name} has no values"));
            }
            if let Some(p) = noise.probabilities.iter().find(|p| p.is_negative()) {
                push(v, format!("noise of {name} has negative probability {}", format_rational(p)));
            }
            let total = noise.probabilities.iter().fold(Rational::zero(), |a, p| a + p);
            if !total.is_one() {
                push(v, format!("noise of {name} sums to {}", format_rational(&total)));
            }
            let mech = &self.mechanisms[v];
            let rows = dag.parent_space(v);
            if mech.rows.len() != rows {
                push(
                    v,
                    format!("mechanism of {name} has {} parent rows, expected {rows}", mech.rows.len()),
                );
                continue;
            }
            let card = dag.cardinality(v);
            for (pos, row) in mech.rows.iter().enumerate() {
                for n in 0..noise.len() {
                    match row.get(n).copied().flatten() {
                        None => push(v, format!("mechanism of {name} has no row for {}", self.row_label(v, pos, n))),
                        Some(x) if x >= card => push(
                            v,
                            format!(
                                "mechanism of {name} row {} outputs value index {x} outside the domain",
                                self.row_label(v, pos, n)
                            ),
                        ),
                        Some(_) => {}
                    }
                }
                for n in noise.len()..row.len() {
                    push(v, format!("mechanism of {name} has a row for unknown {}", self.row_label(v, pos, n)));
                }
            }
        }
        ValidationReport { violations: out }
    }

    fn row_label(&self, v: usize, pos: usize, noise: usize) -> String {
        let pa = self.dag.parent_assignment(v, pos);
        let mut parts: Vec<String> = self.dag.parents(v)
            .iter()
            .zip(&pa)
            .map(|(&p, &x)| format!("{}={}", self.dag.name(p), self.dag.variable(p).domain.value(x)))
            .collect();
        parts.push(format!("noise={noise}"));
        parts.join(", ")
    }

    /// Replays the mechanisms for one noise tuple under an intervention.
    pub fn evaluate(&self, noise: &[usize], intervention: &[Option<usize>]) -> Vec<usize> {
        let mut world = vec![0; self.len()];
        for &v in self.dag.topological_order() {
            world[v] = match intervention.get(v).copied().flatten() {
                Some(x) => x,
                None => {
                    let pos = self.dag.parent_position(v, &world);
                    self.mechanisms[v].output(pos, noise[v])
                }
            };
        }
        world
    }

    /// Visits every noise tuple with positive probability together with its weight.
    pub fn for_each_noise(&self, mut f: impl FnMut(&[usize], &Rational)) {
        let support: Vec<Vec<usize>> = self
            .noises
            .iter()
            .map(|n| (0..n.len()).filter(|&i| n.probabilities[i].is_positive()).collect())
            .collect();
        if support.iter().any(Vec::is_empty) {
            return;
        }
        let d = support.len();
        let mut cursor = vec![0usize; d];
        let mut tuple: Vec<usize> = support.iter().map(|s| s[0]).collect();
        // prefix[i] is the product of the first i factors.
        let mut prefix = vec![Rational::one(); d + 1];
        for i in 0..d {
            prefix[i + 1] = &prefix[i] * &self.noises[i].probabilities[tuple[i]];
        }
        loop {
            f(&tuple, &prefix[d]);
            let mut i = d;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                cursor[i] += 1;
                if cursor[i] < support[i].len() {
                    break;
                }
                cursor[i] = 0;
            }
            for j in i..d {
                tuple[j] = support[j][cursor[j]];
                prefix[j + 1] = &prefix[j] * &self.noises[j].probabilities[tuple[j]];
            }
        }
    }

    /// Number of noise tuples with positive probability.
    pub fn noise_support_size(&self) -> u128 {
        self.noises
            .iter()
            .map(|n| n.probabilities.iter().filter(|p| p.is_positive()).count() as u128)
            .product()
    }

    /// Exact marginal of the observational law over `over` (indices, in that order).
    pub fn joint_distribution(&self, over: &[usize]) -> ExactDistribution {
        self.interventional_distribution(over, &vec![None; self.len()])
    }

    pub fn joint_distribution_by_names<S: AsRef<str>>(&self, over: &[S]) -> Result<ExactDistribution> {
        let ids = self.dag.ids(over)?;
        Ok(self.joint_distribution(&ids))
    }

    /// Law of `over` in the world where `intervention` is forced.
    pub fn interventional_distribution(&self, over: &[usize], intervention: &[Option<usize>]) -> ExactDistribution {
        let mut mass: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        self.for_each_noise(|noise, w| {
            let world = self.evaluate(noise, intervention);
            let key: Vec<usize> = over.iter().map(|&v| world[v]).collect();
            *mass.entry(key).or_insert_with(Rational::zero) += w;
        });
        let vars: Vec<Variable> = over.iter().map(|&v| self.dag.variable(v).clone()).collect();
        ExactDistribution::from_parts(vars, mass)
    }

    /// Resolves `(name, value)` pairs into an intervention vector.
    pub fn intervention<S: AsRef<str>>(&self, assignment: &[(S, S)]) -> Result<Intervention> {
        resolve_intervention(&self.dag, assignment)
    }

    /// Replaces each intervened mechanism by a constant and drops its incoming edges.
    pub fn intervene<S: AsRef<str>>(&self, assignment: &[(S, S)]) -> Result<DiscreteScm> {
        let forced = self.intervention(assignment)?;
        Ok(self.intervene_indices(&forced))
    }

    pub fn intervene_indices(&self, forced: &[Option<usize>]) -> DiscreteScm {
        let mut dag = self.dag.clone();
        let mut mechanisms = self.mechanisms.clone();
        for (v, x) in forced.iter().enumerate() {
            if let Some(x) = *x {
                dag = dag.without_incoming(v);
                mechanisms[v] = TabularMechanism {
                    rows: vec![vec![Some(x); self.noises[v].len()]],
                };
            }
        }
        DiscreteScm::new_unchecked(dag, mechanisms, self.noises.clone())
    }

    /// Exact probability of a cross-world conjunction; all worlds share one noise tuple.
    pub fn counterfactual_probability(&self, query: &CounterfactualQuery) -> Result<Rational> {
        let resolved = ResolvedQuery::resolve(&self.dag, query)?;
        let mut total = Rational::zero();
        self.for_each_noise(|noise, w| {
            let realized: Vec<Vec<usize>> = resolved.worlds.iter().map(|iv| self.evaluate(noise, iv)).collect();
            if resolved.holds(&realized) {
                total += w;
            }
        });
        Ok(total)
    }

    /// Whether `child`'s table actually varies with `parent` on positive-probability noise.
    pub fn mechanism_depends_on_parent(&self, child: &str, parent: &str) -> Result<bool> {
        let c = self.dag.id(child)?;
        let p = self.dag.id(parent)?;
        let slot = self.dag.parents(c).iter().position(|&q| q == p).ok_or_else(|| Error::NotAParent {
            child: child.to_string(),
            parent: parent.to_string(),
        })?;
        let card = self.dag.cardinality(p);
        let mech = &self.mechanisms[c];
        let noise = &self.noises[c];
        for pos in 0..self.dag.parent_space(c) {
            let pa = self.dag.parent_assignment(c, pos);
            if pa[slot] != 0 {
                continue;
            }
            let positions: Vec<usize> = (0..card)
                .map(|x| {
                    let mut world = vec![0; self.len()];
                    for (&q, &val) in self.dag.parents(c).iter().zip(&pa) {
                        world[q] = val;
                    }
                    world[p] = x;
                    self.dag.parent_position(c, &world)
                })
                .collect();
            for n in (0..noise.len()).filter(|&n| noise.probabilities[n].is_positive()) {
                let first = mech.output(positions[0], n);
                if positions[1..].iter().any(|&q| mech.output(q, n) != first) {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Draws `n` worlds by sampling every noise independently and replaying the mechanisms.
    pub fn sample_worlds(&self, seed: u64, n: usize) -> Vec<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cumulative: Vec<Vec<f64>> = self
            .noises
            .iter()
            .map(|ns| {
                let mut acc = 0.0;
                ns.probabilities
                    .iter()
                    .map(|p| {
                        acc += to_f64(p);
                        acc
                    })
                    .collect()
            })
            .collect();
        let none = vec![None; self.len()];
        (0..n)
            .map(|_| {
                let noise: Vec<usize> = cumulative
                    .iter()
                    .zip(&self.noises)
                    .map(|(cdf, ns)| {
                        let u: f64 = rng.random::<f64>() * cdf.last().copied().unwrap_or(1.0);
                        let i = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
                        // never land on a zero-probability value through rounding
                        if ns.probabilities[i].is_zero() {
                            (0..ns.len()).rev().find(|&j| ns.probabilities[j].is_positive()).unwrap_or(i)
                        } else {
                            i
                        }
                    })
                    .collect();
                self.evaluate(&noise, &none)
            })
            .collect()
    }

    /// Appends a variable with a deterministic mechanism `f(parent values)`.
    pub fn with_deterministic_variable(
        &self,
        var: Variable,
        parents: &[usize],
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<DiscreteScm> {
        let dag = self.dag.with_node(var, parents)?;
        let v = dag.len() - 1;
        let rows = (0..dag.parent_space(v))
            .map(|pos| vec![Some(f(&dag.parent_assignment(v, pos)))])
            .collect();
        let mut mechanisms = self.mechanisms.clone();
        mechanisms.push(TabularMechanism { rows });
        let mut noises = self.noises.clone();
        noises.push(NoiseSpec::point());
        DiscreteScm::new(dag, mechanisms, noises)
    }

    /// Value names of a world, keyed by variable name.
    pub fn render_world(&self, world: &[usize]) -> BTreeMap<String, String> {
        world
            .iter()
            .enumerate()
            .map(|(v, &x)| {
                let var = self.dag.variable(v);
                (var.name.clone(), var.domain.value(x).to_string())
            })
            .collect()
    }

    /// Every assignment of the full variable space, for exhaustive checks.
    pub fn all_worlds(&self) -> Vec<Vec<usize>> {
        let cards: Vec<usize> = (0..self.len()).map(|v| self.dag.cardinality(v)).collect();
        assignments(&cards)
    }
}
