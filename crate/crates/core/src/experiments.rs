//! Monte Carlo and sweep harnesses for the invariance results.
//!
//! Every run is a pure function of its configuration and master seed. Per-sample seeds
//! are drawn from a ChaCha stream keyed by the master seed, samples run in parallel, and
//! records are collected in sample order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_traits::{One, Signed, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::canon::DEFAULT_MAX_TUPLES;
use crate::error::{Error, Result};
use crate::fixtures::{self, LISTED_TO_CANONICAL};
use crate::graph::descendants;
use crate::invariance::{as_ci_degree, dci_gap, enumerate_fci_functions};
use crate::polytope::{
    build_polytope, ci_degree_bounds_on, degree_functional, functional_bounds, EquivalencePolytope, LinearFunctional,
    PolytopeSampler, SamplerConfig,
};
use crate::random::{dirichlet, random_generic_scm};
use crate::rational::{format_rational, ratio, Rational};
use crate::scm::{assignments, CausalDag, DiscreteScm, ExactDistribution, FiniteDomain, NoiseSpec, Variable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub graph: CausalDag,
    pub intervened: String,
    pub target: String,
    pub samples: usize,
    pub seed: u64,
    /// Degrees at or above `1 - epsilon` count as near-invariant.
    pub epsilon: Rational,
    /// Function inputs for the functional-invariance scan.
    pub inputs: Vec<String>,
    /// Codomain size for the functional-invariance scan.
    pub codomain: usize,
    /// When set, the observed target puts this mass on its first value at every level.
    pub target_mass: Option<Rational>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(graph: CausalDag, intervened: &str, target: &str, samples: usize, seed: u64) -> Self {
        Self {
            graph,
            intervened: intervened.to_string(),
            target: target.to_string(),
            samples,
            seed,
            epsilon: ratio(1, 10),
            inputs: Vec::new(),
            codomain: 2,
            target_mass: None,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        if !self.epsilon.is_positive() || self.epsilon >= Rational::one() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie strictly between 0 and 1, got {}",
                format_rational(&self.epsilon)
            )));
        }
        self.graph.id(&self.intervened)?;
        self.graph.id(&self.target)?;
        Ok(())
    }

    fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("graph_nodes".into(), self.graph.topological_names().join(",")),
            ("intervened".into(), self.intervened.clone()),
            ("target".into(), self.target.clone()),
            ("samples".into(), self.samples.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("epsilon".into(), format_rational(&self.epsilon)),
        ];
        if !self.inputs.is_empty() {
            out.push(("inputs".into(), self.inputs.join(",")));
            out.push(("codomain".into(), self.codomain.to_string()));
        }
        if let Some(p) = &self.target_mass {
            out.push(("target_mass".into(), format_rational(p)));
        }
        out
    }
}

/// One CSV row. Sweeps put the grid index in `seed`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub seed: u64,
    pub degree: Option<Rational>,
    pub gap: Option<Rational>,
    pub fci: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: Vec<(String, String)>,
    pub records: Vec<SampleRecord>,
    pub summary: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn count(&self, key: &str) -> Option<u64> {
        self.get(key)?.parse().ok()
    }

    pub fn to_csv(&self) -> String {
        let opt = |r: &Option<Rational>| r.as_ref().map_or_else(|| "NA".to_string(), format_rational);
        let mut out = String::from("seed,degree,gap,fci\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{}", r.seed, opt(&r.degree), opt(&r.gap), r.fci);
        }
        out
    }

    /// `key value` lines: experiment name, configuration echo, then aggregates.
    pub fn render_summary(&self) -> String {
        let mut out = format!("experiment {}\n", self.experiment);
        for (k, v) in &self.config {
            let _ = writeln!(out, "config_{k} {v}");
        }
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k} {v}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Per-sample seeds drawn from a stream keyed by the master seed.
pub fn derive_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n).map(|_| rng.next_u64()).collect()
}

fn grid_points(lo: &Rational, hi: &Rational, grid: usize) -> Vec<Rational> {
    match grid {
        0 => Vec::new(),
        1 => vec![(lo + hi) / ratio(2, 1)],
        _ => {
            let steps = ratio(grid as i64 - 1, 1);
            (0..grid)
                .map(|k| lo + (hi - lo) * ratio(k as i64, 1) / &steps)
                .collect()
        }
    }
}

fn canonical_point(listed_weights: &[Rational; 4]) -> Vec<Rational> {
    let mut point = vec![Rational::zero(); 4];
    for (i, w) in listed_weights.iter().enumerate() {
        point[LISTED_TO_CANONICAL[i] as usize] = w.clone();
    }
    point
}

/// Invariance degree of a polytope point: minimum over level pairs.
fn point_degree(functionals: &[LinearFunctional], point: &[Rational]) -> Rational {
    functionals
        .iter()
        .map(|f| f.apply(point))
        .min()
        .unwrap_or_else(Rational::one)
}

fn degree_functionals(polytope: &EquivalencePolytope, target: &str) -> Result<Vec<LinearFunctional>> {
    let k = polytope.dag().cardinality(polytope.intervened());
    let mut out = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            out.push(degree_functional(polytope, target, a, b)?);
        }
    }
    Ok(out)
}

/// Unconditional distributional gap of a polytope point. With a root intervened
/// variable, `P(Y(z') = y | Z = z) = P(Y(z') = y)`, so this is the spread of the
/// interventional marginals of the target across levels.
fn point_gap(polytope: &EquivalencePolytope, target: usize, point: &[Rational]) -> Rational {
    let k = polytope.dag().cardinality(polytope.intervened());
    let ky = polytope.dag().cardinality(target);
    let mut marg = vec![vec![Rational::zero(); ky]; k];
    for (t, p) in point.iter().enumerate().filter(|(_, p)| p.is_positive()) {
        for (level, row) in marg.iter_mut().enumerate() {
            row[polytope.world(t, level)[target]] += p;
        }
    }
    let mut gap = Rational::zero();
    for a in 0..k {
        for b in 0..k {
            for y in 0..ky {
                let d = (&marg[a][y] - &marg[b][y]).abs();
                if d > gap {
                    gap = d;
                }
            }
        }
    }
    gap
}

/// Sweeps the response line of `Z -> Y` with `P(Y=0|Z=z) = p` for both levels.
///
/// `Y` is independent of `Z` at every point, yet the degree covers
/// `[1 - 2p + 2 max(0, 2p - 1), 1]`.
pub fn demo_unbounded_degree(p: &Rational, grid: usize) -> Result<ExperimentReport> {
    if !p.is_positive() || *p >= Rational::one() {
        return Err(Error::InvalidArgument(format!(
            "p must lie strictly between 0 and 1, got {}",
            format_rational(p)
        )));
    }
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must have at least one point".into()));
    }
    let observed = fixtures::zy_observation(&ratio(1, 2), p, p)?;
    let polytope = build_polytope(&fixtures::zy_graph(), &observed, "Z")?;
    let lambda_fn = LinearFunctional::coordinate(polytope.dimension(), LISTED_TO_CANONICAL[0] as usize);
    let lambda = functional_bounds(&polytope, &lambda_fn)?;
    let degree = ci_degree_bounds_on(&polytope, "Y")?;
    let functionals = degree_functionals(&polytope, "Y")?;
    let y = polytope.dag().id("Y")?;

    let mut records = Vec::with_capacity(grid);
    for (k, l) in grid_points(&lambda.min, &lambda.max, grid).iter().enumerate() {
        let point = canonical_point(&fixtures::lambda_line(p, p, l));
        debug_assert!(polytope.contains(&point));
        records.push(SampleRecord {
            seed: k as u64,
            degree: Some(point_degree(&functionals, &point)),
            gap: Some(point_gap(&polytope, y, &point)),
            fci: format!("lambda={}", format_rational(l)),
        });
    }
    let swept: Vec<&Rational> = records.iter().filter_map(|r| r.degree.as_ref()).collect();
    let summary = vec![
        ("lambda_min".into(), format_rational(&lambda.min)),
        ("lambda_max".into(), format_rational(&lambda.max)),
        ("degree_min".into(), format_rational(&degree.bounds.min)),
        ("degree_max".into(), format_rational(&degree.bounds.max)),
        ("swept_degree_min".into(), format_rational(swept.iter().min().expect("grid >= 1"))),
        ("swept_degree_max".into(), format_rational(swept.iter().max().expect("grid >= 1"))),
        ("ci_possible".into(), degree.ci_possible.to_string()),
        ("ci_lambda".into(), format_rational(p)),
    ];
    Ok(ExperimentReport {
        experiment: "unbounded-degree".into(),
        config: vec![
            ("p".into(), format_rational(p)),
            ("grid".into(), grid.to_string()),
        ],
        records,
        summary,
    })
}

/// Observed law with the intervened variable independent of everything else: a Dirichlet
/// draw for `P(Z)` times a Dirichlet draw over joint assignments of the rest, optionally
/// with a fixed mass on the target's first value.
pub fn independent_observation(config: &ExperimentConfig, seed: u64) -> Result<ExactDistribution> {
    let dag = &config.graph;
    let z = dag.id(&config.intervened)?;
    let y = dag.id(&config.target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pz = dirichlet(&mut rng, dag.cardinality(z));
    let rest: Vec<usize> = (0..dag.len()).filter(|&v| v != z && (config.target_mass.is_none() || v != y)).collect();
    let rest_cards: Vec<usize> = rest.iter().map(|&v| dag.cardinality(v)).collect();
    let rest_assign = assignments(&rest_cards);
    let q = dirichlet(&mut rng, rest_assign.len());
    let py: Vec<Rational> = match &config.target_mass {
        None => vec![Rational::one()],
        Some(p) => {
            let ky = dag.cardinality(y);
            if p.is_negative() || *p > Rational::one() || (ky == 1 && !p.is_one()) {
                return Err(Error::InvalidArgument("target mass must be a probability".into()));
            }
            let mut v = vec![p.clone()];
            let spread = (Rational::one() - p) / ratio((ky.max(2) - 1) as i64, 1);
            v.extend((1..ky).map(|_| spread.clone()));
            v
        }
    };
    let mut entries = Vec::new();
    for (zv, pzv) in pz.iter().enumerate() {
        for (ra, qa) in rest_assign.iter().zip(&q) {
            for (yv, pyv) in py.iter().enumerate() {
                let mut full = vec![0; dag.len()];
                full[z] = zv;
                for (&v, &x) in rest.iter().zip(ra) {
                    full[v] = x;
                }
                if config.target_mass.is_some() {
                    full[y] = yv;
                }
                let mass = pzv * qa * pyv;
                if mass.is_positive() {
                    entries.push((full, mass));
                }
            }
        }
    }
    ExactDistribution::new(dag.variables().to_vec(), entries)
}

/// Samples compatible response distributions for an observed law that satisfies every
/// independence between the intervened variable and the rest, and counts how often the
/// target is exactly (and nearly) almost-surely invariant.
///
/// Noise probabilities are dyadic with 60-bit denominators and the walk snaps to a 32-bit
/// grid, so an exact hit has tiny but nonzero probability.
pub fn measure_zero_as_ci(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let seeds = derive_seeds(config.seed, config.samples + 1);
    let observed = independent_observation(config, seeds[0])?;
    let polytope = build_polytope(&config.graph, &observed, &config.intervened)?;
    let functionals = degree_functionals(&polytope, &config.target)?;
    let bounds = ci_degree_bounds_on(&polytope, &config.target)?;
    let sampler = PolytopeSampler::new(&polytope)?;
    let y = config.graph.id(&config.target)?;
    let sampler_config = SamplerConfig::default();

    let records: Vec<SampleRecord> = seeds[1..]
        .par_iter()
        .map(|&seed| {
            let point = sampler.sample(1, seed, sampler_config).pop().expect("one sample");
            SampleRecord {
                seed,
                degree: Some(point_degree(&functionals, &point)),
                gap: Some(point_gap(&polytope, y, &point)),
                fci: "NA".into(),
            }
        })
        .collect();

    let threshold = Rational::one() - &config.epsilon;
    let exact = records.iter().filter(|r| r.degree.as_ref().is_some_and(One::is_one)).count();
    let near = records
        .iter()
        .filter(|r| r.degree.as_ref().is_some_and(|d| *d >= threshold))
        .count();
    let n = records.len();
    let summary = vec![
        ("exact_invariant".into(), exact.to_string()),
        ("near_invariant".into(), near.to_string()),
        ("near_fraction".into(), format!("{near}/{n}")),
        ("polytope_dimension".into(), polytope.dimension().to_string()),
        ("chart_dimension".into(), sampler.chart_dimension().to_string()),
        ("degree_min".into(), format_rational(&bounds.bounds.min)),
        ("degree_max".into(), format_rational(&bounds.bounds.max)),
        ("ci_possible".into(), bounds.ci_possible.to_string()),
        (
            "caveat".into(),
            "parameters_are_dyadic_truncations_so_exact_hits_are_improbable_not_impossible".into(),
        ),
    ];
    Ok(ExperimentReport {
        experiment: "measure-zero".into(),
        config: config.echo(),
        records,
        summary,
    })
}

/// Near-invariant fraction as a float, recomputed from the records.
pub fn near_fraction(report: &ExperimentReport, epsilon: &Rational) -> f64 {
    let threshold = Rational::one() - epsilon;
    let near = report
        .records
        .iter()
        .filter(|r| r.degree.as_ref().is_some_and(|d| *d >= threshold))
        .count();
    near as f64 / report.records.len().max(1) as f64
}

/// Outcome of one functional-invariance scan, rendered into the `fci` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FciSummary {
    pub members: usize,
    pub nd_functions: u64,
    pub violation: bool,
}

impl FciSummary {
    pub fn render(&self) -> String {
        format!(
            "members={};nd_functions={};violation={}",
            self.members,
            self.nd_functions,
            u8::from(self.violation)
        )
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut members = None;
        let mut nd = None;
        let mut violation = None;
        for part in s.split(';') {
            let (k, v) = part.split_once('=')?;
            match k {
                "members" => members = v.parse().ok(),
                "nd_functions" => nd = v.parse().ok(),
                "violation" => violation = Some(v == "1"),
                _ => return None,
            }
        }
        Some(Self {
            members: members?,
            nd_functions: nd?,
            violation: violation?,
        })
    }
}

/// Scans every function of `inputs` and compares the invariant ones with the functions of
/// the non-descendant inputs.
pub fn fci_scan(model: &DiscreteScm, inputs: &[String], codomain: usize, intervened: &str) -> Result<FciSummary> {
    let scan = enumerate_fci_functions(model, inputs, &FiniteDomain::range(codomain), intervened, DEFAULT_MAX_TUPLES)?;
    let nd_functions = scan.nd_function_count(model)?;
    let violation = !scan.all_factor_through_nd() || scan.functions.len() as u64 != nd_functions;
    Ok(FciSummary {
        members: scan.functions.len(),
        nd_functions,
        violation,
    })
}

/// Random generic models: invariant functions should be exactly the functions of the
/// inputs that do not descend from the intervened variable. The hand-built parity model
/// is scanned alongside as the non-generic exception.
pub fn fci_rarity(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    if config.inputs.is_empty() {
        return Err(Error::InvalidArgument("the functional scan needs at least one input".into()));
    }
    if config.codomain == 0 {
        return Err(Error::InvalidArgument("codomain must be nonempty".into()));
    }
    config.graph.ids(&config.inputs)?;
    let seeds = derive_seeds(config.seed, config.samples);
    let records: Vec<SampleRecord> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let model = random_generic_scm(&mut rng, &config.graph)?;
            let summary = fci_scan(&model, &config.inputs, config.codomain, &config.intervened)?;
            Ok(SampleRecord {
                seed,
                degree: Some(as_ci_degree(&model, &config.target, &config.intervened)?),
                gap: None,
                fci: summary.render(),
            })
        })
        .collect::<Result<_>>()?;

    let violations = records
        .iter()
        .filter(|r| FciSummary::parse(&r.fci).is_some_and(|s| s.violation))
        .count();
    let z = config.graph.id(&config.intervened)?;
    let de = descendants(&config.graph, z);
    let nd_inputs: Vec<&str> = config
        .inputs
        .iter()
        .filter(|n| config.graph.id(n).is_ok_and(|v| !de.contains(&v)))
        .map(String::as_str)
        .collect();
    let fixture = fixtures::mod2_model();
    let fixture_scan = fci_scan(&fixture, &["X".to_string()], 2, "Z")?;
    let summary = vec![
        ("violations".into(), violations.to_string()),
        ("nd_inputs".into(), format!("{{{}}}", nd_inputs.join(", "))),
        ("fixture_members".into(), fixture_scan.members.to_string()),
        ("fixture_nd_functions".into(), fixture_scan.nd_functions.to_string()),
        ("fixture_flagged".into(), fixture_scan.violation.to_string()),
    ];
    Ok(ExperimentReport {
        experiment: "fci-rarity".into(),
        config: config.echo(),
        records,
        summary,
    })
}

/// Builds the embedding used to show that no independence forces distributional
/// invariance given a mediator `w`: the target copies `w`, and `w` inherits the
/// response line of the first node on a directed path from the intervened variable.
pub fn embedding_model(config: &ExperimentConfig, mediator: &str, lambda: &Rational) -> Result<DiscreteScm> {
    let dag = &config.graph;
    let z = dag.id(&config.intervened)?;
    let y = dag.id(&config.target)?;
    let w = dag.id(mediator)?;
    if !dag.parents(y).contains(&w) {
        return Err(Error::Unsupported(format!(
            "`{mediator}` is not a parent of `{}`",
            config.target
        )));
    }
    if dag.cardinality(z) != 2 {
        return Err(Error::Unsupported(format!("`{}` must be binary", config.intervened)));
    }
    let path = directed_path(dag, z, w);
    for &v in path.iter().flatten().chain([&w, &y]) {
        if dag.cardinality(v) < 2 {
            return Err(Error::Unsupported(format!("`{}` needs at least two values", dag.name(v))));
        }
    }
    let half = ratio(1, 2);
    let line = fixtures::lambda_line(&half, &half, lambda);
    if line.iter().any(Signed::is_negative) {
        return Err(Error::InvalidArgument(format!(
            "lambda {} is outside [0, 1/2]",
            format_rational(lambda)
        )));
    }
    let mut noises = vec![NoiseSpec::point(); dag.len()];
    noises[z] = NoiseSpec::uniform(2);
    let head = path.as_ref().and_then(|p| p.get(1).copied());
    match head {
        Some(h) => noises[h] = NoiseSpec::new(line.to_vec()),
        None => noises[w] = NoiseSpec::uniform(2),
    }
    let pred = |v: usize| -> Option<usize> {
        let p = path.as_ref()?;
        let i = p.iter().position(|&u| u == v)?;
        (i >= 2).then(|| p[i - 1])
    };
    DiscreteScm::from_fn(dag.clone(), noises, |v, pa, n| {
        let parent_value = |u: usize| pa[dag.parents(v).iter().position(|&q| q == u).expect("parent")];
        if v == z {
            n
        } else if Some(v) == head {
            fixtures::LISTED_RESPONSES[n][parent_value(z)]
        } else if let Some(u) = pred(v) {
            parent_value(u)
        } else if v == w {
            n
        } else if v == y {
            parent_value(w)
        } else {
            0
        }
    })
}

/// Shortest directed path `from -> ... -> to`, endpoints included.
fn directed_path(dag: &CausalDag, from: usize, to: usize) -> Option<Vec<usize>> {
    let mut prev = vec![None; dag.len()];
    let mut queue = std::collections::VecDeque::from([from]);
    let mut seen = vec![false; dag.len()];
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut cur = to;
            while let Some(p) = prev[cur] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &c in dag.children(u) {
            if !seen[c] {
                seen[c] = true;
                prev[c] = Some(u);
                queue.push_back(c);
            }
        }
    }
    None
}

/// Sweeps the embedding over `grid` points of the response line and records the gap
/// given `{mediator}` next to the almost-sure degree of the mediator.
pub fn dci_embedding_demo(config: &ExperimentConfig, mediator: &str, grid: usize) -> Result<ExperimentReport> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must have at least one point".into()));
    }
    let dag = &config.graph;
    let z = dag.id(&config.intervened)?;
    let w = dag.id(mediator)?;
    if w == z {
        return Err(Error::Unsupported("the mediator must differ from the intervened variable".into()));
    }
    let on_path = descendants(dag, z).contains(&w);

    // Feasible range of the line from the two-node polytope on (Z, w) with uniform observations.
    let pair = CausalDag::new(vec![Variable::binary("Z"), Variable::binary("W")], &[("Z", "W")])?;
    let obs = ExactDistribution::new(
        pair.variables().to_vec(),
        assignments(&[2, 2]).into_iter().map(|a| (a, ratio(1, 4))),
    )?;
    let pair_polytope = build_polytope(&pair, &obs, "Z")?;
    let lambda = functional_bounds(
        &pair_polytope,
        &LinearFunctional::coordinate(pair_polytope.dimension(), LISTED_TO_CANONICAL[0] as usize),
    )?;

    let mut records = Vec::with_capacity(grid);
    let mut consistent = 0usize;
    for (k, l) in grid_points(&lambda.min, &lambda.max, grid).iter().enumerate() {
        let model = embedding_model(config, mediator, l)?;
        let gap = dci_gap(&model, &config.target, &config.intervened, &[mediator])?.gap;
        let degree = as_ci_degree(&model, mediator, &config.intervened)?;
        if gap.is_zero() == degree.is_one() {
            consistent += 1;
        }
        records.push(SampleRecord {
            seed: k as u64,
            degree: Some(degree),
            gap: Some(gap),
            fci: format!("lambda={}", format_rational(l)),
        });
    }
    let gaps: Vec<&Rational> = records.iter().filter_map(|r| r.gap.as_ref()).collect();
    let gap_min = (*gaps.iter().min().expect("grid >= 1")).clone();
    let gap_max = (*gaps.iter().max().expect("grid >= 1")).clone();
    let summary = vec![
        ("mediator".into(), mediator.to_string()),
        ("mediator_descends".into(), on_path.to_string()),
        ("lambda_min".into(), format_rational(&lambda.min)),
        ("lambda_max".into(), format_rational(&lambda.max)),
        ("gap_min".into(), format_rational(&gap_min)),
        ("gap_max".into(), format_rational(&gap_max)),
        (
            "endpoints_attained".into(),
            (gap_min.is_zero() && gap_max.is_one()).to_string(),
        ),
        ("reduction_consistent".into(), format!("{consistent}/{grid}")),
    ];
    let mut echo = config.echo();
    echo.push(("grid".into(), grid.to_string()));
    Ok(ExperimentReport {
        experiment: "dci-embedding".into(),
        config: echo,
        records,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(names: &[&str], edges: &[(&str, &str)]) -> CausalDag {
        CausalDag::new(names.iter().map(|n| Variable::binary(*n)).collect(), edges).unwrap()
    }

    #[test]
    fn unbounded_degree_hits_both_ends() {
        let r = demo_unbounded_degree(&ratio(1, 2), 11).unwrap();
        assert_eq!(r.records.len(), 11);
        let degrees: Vec<Rational> = r.records.iter().map(|x| x.degree.clone().unwrap()).collect();
        let expected: Vec<Rational> = (0..11).map(|k| ratio(k, 10)).collect();
        assert_eq!(degrees, expected);
        assert!(r.records.iter().all(|x| x.gap == Some(ratio(0, 1))));
        assert_eq!(r.get("degree_min"), Some("0/1"));
        assert_eq!(r.get("degree_max"), Some("1/1"));
    }

    #[test]
    fn unbounded_degree_other_p() {
        let r = demo_unbounded_degree(&ratio(3, 10), 4).unwrap();
        assert_eq!(r.get("degree_min"), Some("2/5"));
        assert_eq!(r.get("degree_max"), Some("1/1"));
        let single = demo_unbounded_degree(&ratio(3, 10), 1).unwrap();
        assert_eq!(single.records.len(), 1);
        // midpoint lambda 3/20 -> 1 - 3/5 + 3/10
        assert_eq!(single.records[0].degree, Some(ratio(7, 10)));
        assert!(demo_unbounded_degree(&ratio(1, 1), 3).is_err());
    }

    #[test]
    fn sweep_matches_direct_enumeration() {
        let p = ratio(2, 5);
        let r = demo_unbounded_degree(&p, 5).unwrap();
        for rec in &r.records {
            let l = crate::rational::parse_rational(rec.fci.trim_start_matches("lambda=")).unwrap();
            let m = fixtures::response_model(ratio(1, 2), fixtures::lambda_line(&p, &p, &l)).unwrap();
            assert_eq!(Some(as_ci_degree(&m, "Y", "Z").unwrap()), rec.degree);
        }
    }

    #[test]
    fn measure_zero_small_run() {
        let mut cfg = ExperimentConfig::new(fixtures::zy_graph(), "Z", "Y", 200, 17);
        cfg.target_mass = Some(ratio(1, 2));
        let r = measure_zero_as_ci(&cfg).unwrap();
        assert_eq!(r.records.len(), 200);
        assert_eq!(r.count("exact_invariant"), Some(0));
        let recount = r
            .records
            .iter()
            .filter(|x| x.degree.as_ref().unwrap() >= &ratio(9, 10))
            .count() as u64;
        assert_eq!(r.count("near_invariant"), Some(recount));
        assert_eq!(measure_zero_as_ci(&cfg).unwrap(), r);
    }

    #[test]
    fn measure_zero_single_record() {
        let cfg = ExperimentConfig::new(fixtures::zy_graph(), "Z", "Y", 1, 3);
        let r = measure_zero_as_ci(&cfg).unwrap();
        assert_eq!(r.records.len(), 1);
        assert!(r.to_csv().starts_with("seed,degree,gap,fci\n"));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::new(fixtures::zy_graph(), "Z", "Y", 0, 3);
        assert!(cfg.validate().is_err());
        cfg.samples = 1;
        cfg.epsilon = ratio(1, 1);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fci_rarity_small_run() {
        let g = graph(&["Z", "X", "Y", "C"], &[("Z", "X"), ("X", "Y")]);
        let mut cfg = ExperimentConfig::new(g, "Z", "Y", 30, 5);
        cfg.inputs = vec!["X".into(), "C".into()];
        let r = fci_rarity(&cfg).unwrap();
        assert_eq!(r.count("violations"), Some(0));
        assert_eq!(r.get("fixture_flagged"), Some("true"));
        assert_eq!(r.get("nd_inputs"), Some("{C}"));
        for rec in &r.records {
            let s = FciSummary::parse(&rec.fci).unwrap();
            assert_eq!(s.members, 4);
        }
    }

    #[test]
    fn fci_rarity_descendant_inputs_give_constants() {
        let g = graph(&["Z", "X", "Y"], &[("Z", "X"), ("X", "Y")]);
        let mut cfg = ExperimentConfig::new(g, "Z", "Y", 20, 8);
        cfg.inputs = vec!["X".into(), "Y".into()];
        let r = fci_rarity(&cfg).unwrap();
        assert_eq!(r.count("violations"), Some(0));
        assert!(r
            .records
            .iter()
            .all(|x| FciSummary::parse(&x.fci).unwrap().members == 2));
    }

    #[test]
    fn embedding_spans_gap_range() {
        let g = graph(&["Z", "W", "Y"], &[("Z", "W"), ("W", "Y")]);
        let cfg = ExperimentConfig::new(g, "Z", "Y", 1, 0);
        let r = dci_embedding_demo(&cfg, "W", 5).unwrap();
        assert_eq!(r.get("gap_min"), Some("0/1"));
        assert_eq!(r.get("gap_max"), Some("1/1"));
        assert_eq!(r.get("endpoints_attained"), Some("true"));
        assert_eq!(r.get("reduction_consistent"), Some("5/5"));
        let one = dci_embedding_demo(&cfg, "W", 1).unwrap();
        assert_eq!(one.records.len(), 1);
    }

    #[test]
    fn embedding_through_longer_path() {
        let g = graph(&["Z", "A", "W", "C", "Y"], &[("Z", "A"), ("A", "W"), ("W", "Y"), ("C", "Y"), ("C", "A")]);
        let cfg = ExperimentConfig::new(g, "Z", "Y", 1, 0);
        let r = dci_embedding_demo(&cfg, "W", 3).unwrap();
        assert_eq!(r.get("endpoints_attained"), Some("true"));
    }

    #[test]
    fn embedding_without_descent_has_no_gap() {
        let g = graph(&["Z", "W", "Y"], &[("W", "Y"), ("Z", "Y")]);
        let cfg = ExperimentConfig::new(g, "Z", "Y", 1, 0);
        let r = dci_embedding_demo(&cfg, "W", 4).unwrap();
        assert!(r.records.iter().all(|x| x.gap == Some(ratio(0, 1))));
        assert_eq!(r.get("mediator_descends"), Some("false"));
    }

    #[test]
    fn embedding_requires_parent() {
        let g = graph(&["Z", "W", "Y"], &[("Z", "W"), ("Z", "Y")]);
        let cfg = ExperimentConfig::new(g, "Z", "Y", 1, 0);
        assert_eq!(dci_embedding_demo(&cfg, "W", 2).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(derive_seeds(1, 3), derive_seeds(1, 3));
        assert_ne!(derive_seeds(1, 3), derive_seeds(2, 3));
    }
}
