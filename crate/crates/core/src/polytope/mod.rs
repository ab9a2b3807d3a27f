//! Response distributions observationally equivalent to a given observed law, and exact
//! bounds on counterfactual functionals over them.
//!
//! The intervened variable must be a root. Conditioning on each of its levels turns the
//! observed law into linear constraints on the joint distribution `p` of response indices
//! of the remaining variables: for every level `z` and every assignment `v` of the others,
//! the mass of tuples that produce `v` under `do(Z = z)` equals `P(v | Z = z)`. Joint
//! dependence among the remaining response indices is allowed, so the set is a polytope
//! in the simplex over response tuples.

mod sampler;
mod simplex;

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

pub use sampler::{sample_points, sample_polytope, PolytopeSampler, SamplerConfig};
pub use simplex::{solve_standard_form, LpSolution, Sense};

use crate::canon::{evaluate_world, CanonConfig, CanonicalResponseVector, ResponseFunctionTable};
use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};
use crate::scm::{assignments, CausalDag, ExactDistribution};

/// One observable cell `(Z = level, rest = values)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservableCell {
    pub level: usize,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct EquivalencePolytope {
    dag: CausalDag,
    tables: Vec<ResponseFunctionTable>,
    intervened: usize,
    free: Vec<usize>,
    tuples: Vec<Vec<u64>>,
    /// `worlds[t][z]`: full assignment produced by tuple `t` under `do(Z = z)`.
    worlds: Vec<Vec<Vec<usize>>>,
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    cells: Vec<ObservableCell>,
    levels: Vec<Rational>,
    observed: ExactDistribution,
}

pub fn build_polytope(dag: &CausalDag, observed: &ExactDistribution, intervened: &str) -> Result<EquivalencePolytope> {
    build_polytope_with(dag, observed, intervened, CanonConfig::default())
}

pub fn build_polytope_with(
    dag: &CausalDag,
    observed: &ExactDistribution,
    intervened: &str,
    config: CanonConfig,
) -> Result<EquivalencePolytope> {
    let z = dag.id(intervened)?;
    if !dag.is_root(z) {
        return Err(Error::Unsupported(format!(
            "intervened variable `{intervened}` has parents; only root variables are supported"
        )));
    }
    let mut positions = Vec::with_capacity(dag.len());
    for var in dag.variables() {
        let pos = observed.position(&var.name)?;
        if observed.variables()[pos] != *var {
            return Err(Error::InvalidArgument(format!(
                "observed domain of `{}` differs from the graph",
                var.name
            )));
        }
        positions.push(pos);
    }
    let observed = observed.marginal(&positions);

    let zcard = dag.cardinality(z);
    let levels: Vec<Rational> = (0..zcard).map(|l| observed.event_probability(&[(z, l)])).collect();
    let empty: Vec<String> = (0..zcard)
        .filter(|&l| levels[l].is_zero())
        .map(|l| format!("{}={}", intervened, dag.variable(z).domain.value(l)))
        .collect();
    if !empty.is_empty() {
        return Err(Error::ZeroProbability(format!("P({}) = 0", empty.join(", "))));
    }

    let free: Vec<usize> = (0..dag.len()).filter(|&v| v != z).collect();
    let mut tables = Vec::with_capacity(dag.len());
    for v in 0..dag.len() {
        tables.push(ResponseFunctionTable::for_variable(dag, v, config.max_tuples)?);
    }
    let counts: Vec<u64> = free.iter().map(|&v| tables[v].count()).collect();
    let dimension = counts
        .iter()
        .try_fold(1u64, |acc, &c| acc.checked_mul(c))
        .filter(|&d| d <= config.max_tuples)
        .ok_or_else(|| Error::ResourceLimit {
            what: "response tuples".into(),
            required: counts.iter().map(u64::to_string).collect::<Vec<_>>().join("*"),
            limit: config.max_tuples,
        })?;
    let rest_cards: Vec<usize> = free.iter().map(|&v| dag.cardinality(v)).collect();
    let rest_space: usize = rest_cards.iter().product();
    let cell_count = (rest_space as u64).saturating_mul(zcard as u64);
    if cell_count.saturating_mul(dimension) > config.max_tuples {
        return Err(Error::ResourceLimit {
            what: "constraint matrix entries".into(),
            required: format!("{cell_count}*{dimension}"),
            limit: config.max_tuples,
        });
    }

    let tuples = tuple_list(&counts);
    let mut cells = Vec::with_capacity(cell_count as usize);
    let mut b = Vec::with_capacity(cell_count as usize);
    for level in 0..zcard {
        for values in assignments(&rest_cards) {
            let mut full = vec![0; dag.len()];
            full[z] = level;
            for (&v, &x) in free.iter().zip(&values) {
                full[v] = x;
            }
            b.push(observed.prob(&full) / &levels[level]);
            cells.push(ObservableCell { level, values });
        }
    }

    let mut a = vec![vec![Rational::zero(); tuples.len()]; cells.len()];
    let mut worlds = Vec::with_capacity(tuples.len());
    let mut slot = vec![None; dag.len()];
    for (t, tuple) in tuples.iter().enumerate() {
        for (&v, &i) in free.iter().zip(tuple) {
            slot[v] = Some(i);
        }
        let mut per_level = Vec::with_capacity(zcard);
        for level in 0..zcard {
            let mut iv = vec![None; dag.len()];
            iv[z] = Some(level);
            let world = evaluate_world(dag, &tables, &slot, &iv)?;
            let row = level * rest_space + lex_index(free.iter().map(|&v| world[v]), &rest_cards);
            a[row][t] = Rational::one();
            per_level.push(world);
        }
        worlds.push(per_level);
    }

    Ok(EquivalencePolytope {
        dag: dag.clone(),
        tables,
        intervened: z,
        free,
        tuples,
        worlds,
        a,
        b,
        cells,
        levels,
        observed,
    })
}

fn tuple_list(counts: &[u64]) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for &c in counts {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c).map(move |i| {
                    let mut t = prefix.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

fn lex_index(values: impl Iterator<Item = usize>, cards: &[usize]) -> usize {
    values.zip(cards).fold(0, |acc, (x, &c)| acc * c + x)
}

impl EquivalencePolytope {
    /// Number of response tuples over the non-intervened variables.
    pub fn dimension(&self) -> usize {
        self.tuples.len()
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn tables(&self) -> &[ResponseFunctionTable] {
        &self.tables
    }

    pub fn intervened(&self) -> usize {
        self.intervened
    }

    /// Variables whose response indices make up a tuple, in index order.
    pub fn free_variables(&self) -> &[usize] {
        &self.free
    }

    pub fn tuples(&self) -> &[Vec<u64>] {
        &self.tuples
    }

    pub fn tuple_position(&self, tuple: &[u64]) -> Option<usize> {
        self.tuples.binary_search_by(|t| t.as_slice().cmp(tuple)).ok()
    }

    /// Assignment of every variable produced by tuple `t` under `do(Z = level)`.
    pub fn world(&self, t: usize, level: usize) -> &[usize] {
        &self.worlds[t][level]
    }

    pub fn constraint_matrix(&self) -> &[Vec<Rational>] {
        &self.a
    }

    pub fn rhs(&self) -> &[Rational] {
        &self.b
    }

    pub fn cells(&self) -> &[ObservableCell] {
        &self.cells
    }

    pub fn level_probability(&self, level: usize) -> &Rational {
        &self.levels[level]
    }

    /// Observed law reordered to graph variable order.
    pub fn observed(&self) -> &ExactDistribution {
        &self.observed
    }

    /// Exact membership test.
    pub fn contains(&self, point: &[Rational]) -> bool {
        point.len() == self.dimension()
            && point.iter().all(|x| !x.is_negative())
            && self.a.iter().zip(&self.b).all(|(row, bi)| dot(row, point) == *bi)
    }

    pub fn response_vector(&self, point: &[Rational]) -> CanonicalResponseVector {
        let probabilities: BTreeMap<Vec<u64>, Rational> = self
            .tuples
            .iter()
            .zip(point)
            .filter(|(_, p)| p.is_positive())
            .map(|(t, p)| (t.clone(), p.clone()))
            .collect();
        CanonicalResponseVector {
            variables: self.free.clone(),
            probabilities,
        }
    }

    /// Observed joint produced by `point` together with the observed law of the intervened
    /// variable.
    pub fn induced_joint(&self, point: &[Rational]) -> Result<ExactDistribution> {
        let mut mass: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for (t, p) in point.iter().enumerate().filter(|(_, p)| p.is_positive()) {
            for (level, pz) in self.levels.iter().enumerate() {
                *mass.entry(self.worlds[t][level].clone()).or_insert_with(Rational::zero) += pz * p;
            }
        }
        ExactDistribution::new(self.dag.variables().to_vec(), mass)
    }

    pub fn render_tuple(&self, t: usize) -> String {
        self.free
            .iter()
            .zip(&self.tuples[t])
            .map(|(&v, &i)| format!("{}={}", self.dag.name(v), self.tables[v].render(i)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .filter(|(x, _)| !x.is_zero())
        .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Coefficients over the polytope's response tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFunctional {
    pub coefficients: Vec<Rational>,
}

impl LinearFunctional {
    pub fn apply(&self, point: &[Rational]) -> Rational {
        dot(&self.coefficients, point)
    }

    /// Mass of a single tuple.
    pub fn coordinate(dimension: usize, index: usize) -> Self {
        let mut coefficients = vec![Rational::zero(); dimension];
        coefficients[index] = Rational::one();
        Self { coefficients }
    }
}

/// `P(Y(z) = Y(z'))` as a functional: coefficient one on tuples where the two
/// interventions agree on the target.
pub fn degree_functional(polytope: &EquivalencePolytope, target: &str, z: usize, z_prime: usize) -> Result<LinearFunctional> {
    let y = polytope.dag.id(target)?;
    let zcard = polytope.dag.cardinality(polytope.intervened);
    if z >= zcard || z_prime >= zcard {
        return Err(Error::InvalidArgument(format!("intervention level out of range 0..{zcard}")));
    }
    let coefficients = polytope
        .worlds
        .iter()
        .map(|w| {
            if w[z][y] == w[z_prime][y] {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .collect();
    Ok(LinearFunctional { coefficients })
}

/// Optimum of a functional and a vertex attaining it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    pub value: Rational,
    pub point: Vec<Rational>,
}

pub fn lp_optimize(polytope: &EquivalencePolytope, objective: &LinearFunctional, sense: Sense) -> Result<Optimum> {
    if objective.coefficients.len() != polytope.dimension() {
        return Err(Error::InvalidArgument(format!(
            "functional has {} coefficients, polytope dimension is {}",
            objective.coefficients.len(),
            polytope.dimension()
        )));
    }
    let sol = solve_standard_form(&polytope.a, &polytope.b, &objective.coefficients, sense)?;
    Ok(Optimum {
        value: sol.value,
        point: sol.x,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsResult {
    pub min: Rational,
    pub max: Rational,
    pub argmin: CanonicalResponseVector,
    pub argmax: CanonicalResponseVector,
}

impl BoundsResult {
    pub fn is_point(&self) -> bool {
        self.min == self.max
    }
}

/// Minimum and maximum of `objective` over the polytope.
pub fn functional_bounds(polytope: &EquivalencePolytope, objective: &LinearFunctional) -> Result<BoundsResult> {
    let lo = lp_optimize(polytope, objective, Sense::Minimize)?;
    let hi = lp_optimize(polytope, objective, Sense::Maximize)?;
    Ok(BoundsResult {
        min: lo.value,
        max: hi.value,
        argmin: polytope.response_vector(&lo.point),
        argmax: polytope.response_vector(&hi.point),
    })
}

/// Bounds on the invariance degree `min_{z, z'} P(Y(z) = Y(z'))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeBounds {
    pub bounds: BoundsResult,
    /// Some compatible model is almost surely invariant.
    pub ci_possible: bool,
    /// Every compatible model is almost surely invariant.
    pub ci_forced: bool,
}

pub fn ci_degree_bounds(dag: &CausalDag, observed: &ExactDistribution, target: &str, intervened: &str) -> Result<DegreeBounds> {
    let polytope = build_polytope(dag, observed, intervened)?;
    ci_degree_bounds_on(&polytope, target)
}

/// With more than two levels the maximum of the pairwise minimum is found by one
/// epigraph program: maximize `t` subject to `f_pair · p - t - s_pair = 0`.
pub fn ci_degree_bounds_on(polytope: &EquivalencePolytope, target: &str) -> Result<DegreeBounds> {
    let zcard = polytope.dag.cardinality(polytope.intervened);
    let mut functionals = Vec::new();
    for z in 0..zcard {
        for zp in z + 1..zcard {
            functionals.push(degree_functional(polytope, target, z, zp)?);
        }
    }
    if functionals.is_empty() {
        functionals.push(LinearFunctional {
            coefficients: vec![Rational::one(); polytope.dimension()],
        });
    }

    let mut lowest: Option<Optimum> = None;
    for f in &functionals {
        let lo = lp_optimize(polytope, f, Sense::Minimize)?;
        if lowest.as_ref().is_none_or(|best| lo.value < best.value) {
            lowest = Some(lo);
        }
    }
    let lowest = lowest.expect("at least one functional");

    let highest = if functionals.len() == 1 {
        lp_optimize(polytope, &functionals[0], Sense::Maximize)?
    } else {
        epigraph_max(polytope, &functionals)?
    };

    let one = Rational::one();
    Ok(DegreeBounds {
        ci_possible: highest.value == one,
        ci_forced: lowest.value == one,
        bounds: BoundsResult {
            min: lowest.value,
            max: highest.value,
            argmin: polytope.response_vector(&lowest.point),
            argmax: polytope.response_vector(&highest.point),
        },
    })
}

fn epigraph_max(polytope: &EquivalencePolytope, functionals: &[LinearFunctional]) -> Result<Optimum> {
    let m = polytope.dimension();
    let k = functionals.len();
    let width = m + 1 + k;
    let mut a = Vec::with_capacity(polytope.a.len() + k);
    for row in &polytope.a {
        let mut r = row.clone();
        r.resize(width, Rational::zero());
        a.push(r);
    }
    let mut b = polytope.b.clone();
    for (i, f) in functionals.iter().enumerate() {
        let mut r = f.coefficients.clone();
        r.resize(width, Rational::zero());
        r[m] = -Rational::one();
        r[m + 1 + i] = -Rational::one();
        a.push(r);
        b.push(Rational::zero());
    }
    let mut objective = vec![Rational::zero(); width];
    objective[m] = Rational::one();
    let sol = solve_standard_form(&a, &b, &objective, Sense::Maximize)?;
    Ok(Optimum {
        value: sol.value,
        point: sol.x[..m].to_vec(),
    })
}

/// `P(Y(z') = y | W = w, Z = z)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalQuery {
    pub target: String,
    pub value: String,
    pub intervened: String,
    pub counterfactual_level: String,
    pub factual_level: String,
    pub conditioning: Vec<(String, String)>,
}

pub fn conditional_query_bounds(dag: &CausalDag, observed: &ExactDistribution, query: &ConditionalQuery) -> Result<BoundsResult> {
    let polytope = build_polytope(dag, observed, &query.intervened)?;
    conditional_query_bounds_on(&polytope, query)
}

/// The conditioning event is observational, so its probability is fixed across the
/// polytope and the conditional is the numerator functional scaled by a constant.
pub fn conditional_query_bounds_on(polytope: &EquivalencePolytope, query: &ConditionalQuery) -> Result<BoundsResult> {
    let dag = &polytope.dag;
    let z = polytope.intervened;
    if dag.id(&query.intervened)? != z {
        return Err(Error::InvalidArgument("query intervenes on a different variable than the polytope".into()));
    }
    let y = dag.id(&query.target)?;
    let y_val = dag.value_index(y, &query.value)?;
    let zp = dag.value_index(z, &query.counterfactual_level)?;
    let zf = dag.value_index(z, &query.factual_level)?;
    let mut event = Vec::with_capacity(query.conditioning.len());
    for (name, value) in &query.conditioning {
        let w = dag.id(name)?;
        if w == z {
            return Err(Error::InvalidArgument(format!(
                "conditioning set may not contain the intervened variable `{name}`"
            )));
        }
        event.push((w, dag.value_index(w, value)?));
    }
    let mut full_event = event.clone();
    full_event.push((z, zf));
    let denominator = polytope.observed.event_probability(&full_event) / &polytope.levels[zf];
    if denominator.is_zero() {
        let rendered: Vec<String> = query
            .conditioning
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .chain(std::iter::once(format!("{}={}", query.intervened, query.factual_level)))
            .collect();
        return Err(Error::ZeroProbability(format!("P({}) = 0", rendered.join(", "))));
    }
    let coefficients = polytope
        .worlds
        .iter()
        .map(|w| {
            let hit = w[zp][y] == y_val && event.iter().all(|&(v, x)| w[zf][v] == x);
            if hit {
                Rational::one() / &denominator
            } else {
                Rational::zero()
            }
        })
        .collect();
    functional_bounds(polytope, &LinearFunctional { coefficients })
}

/// `key value` lines for a bounds result, vertices in canonical-index notation.
pub fn render_bounds(prefix: &str, polytope: &EquivalencePolytope, bounds: &BoundsResult) -> Vec<String> {
    let mut out = vec![
        format!("{prefix}_min {}", format_rational(&bounds.min)),
        format!("{prefix}_max {}", format_rational(&bounds.max)),
    ];
    for (tag, vertex) in [("argmin", &bounds.argmin), ("argmax", &bounds.argmax)] {
        let parts: Vec<String> = vertex.render(&polytope.dag, &polytope.tables);
        out.push(format!("{prefix}_{tag} {}", parts.join("; ")));
    }
    out
}
