//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use cf_invariance::canon::{self, CanonConfig};
use cf_invariance::experiments::{self, ExperimentConfig};
use cf_invariance::fixtures;
use cf_invariance::graph::{self, ForbiddenReading};
use cf_invariance::invariance::{self, FunctionSpec};
use cf_invariance::polytope::{self, solve_standard_form, LinearFunctional, Sense};
use cf_invariance::random::{random_dag, random_generic_scm_bits, random_sparse_scm};
use cf_invariance::rational::{format_rational, ratio, Rational};
use cf_invariance::scm::{assignments, CausalDag, CounterfactualQuery, DiscreteScm, FiniteDomain, Variable};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_probability(rng: &mut impl Rng) -> Rational {
    let den: i64 = rng.random_range(2..=97);
    ratio(rng.random_range(1..den), den)
}

/// DAGs whose edges all point from lower to higher index. Every DAG on `n` nodes is
/// isomorphic to one of these, and all checks below range over every node role.
fn forward_dags(n: usize) -> Vec<CausalDag> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    (0u32..1 << pairs.len())
        .map(|mask| {
            let vars: Vec<Variable> = (0..n).map(|i| Variable::binary(format!("V{i}"))).collect();
            let edges: Vec<(String, String)> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &(i, j))| (format!("V{i}"), format!("V{j}")))
                .collect();
            CausalDag::new(vars, &edges).expect("forward edges")
        })
        .collect()
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0u32..1 << items.len())
        .map(|m| items.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, &v)| v).collect())
        .collect()
}

fn lambda_line() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4c41);
    let one = Rational::one();
    for _ in 0..50 {
        let p00 = random_probability(&mut rng);
        let p01 = random_probability(&mut rng);
        let z_one = random_probability(&mut rng);
        let observed = fixtures::zy_observation(&z_one, &p00, &p01).map_err(err)?;
        let p = polytope::build_polytope(&fixtures::zy_graph(), &observed, "Z").map_err(err)?;
        let pos = p.tuple_position(&[fixtures::LISTED_TO_CANONICAL[0]]).ok_or("missing tuple")?;
        let lambda = polytope::functional_bounds(&p, &LinearFunctional::coordinate(p.dimension(), pos)).map_err(err)?;
        let lo = (&p00 + &p01 - &one).max(Rational::zero());
        let hi = (&p00).min(&p01).clone();
        ensure(lambda.min == lo && lambda.max == hi, || {
            format!(
                "p00={} p01={}: lambda in [{}, {}], expected [{}, {}]",
                format_rational(&p00),
                format_rational(&p01),
                format_rational(&lambda.min),
                format_rational(&lambda.max),
                format_rational(&lo),
                format_rational(&hi)
            )
        })?;
        let d = polytope::ci_degree_bounds_on(&p, "Y").map_err(err)?;
        let base = &one - &p00 - &p01;
        let two = ratio(2, 1);
        ensure(d.bounds.min == &base + &two * &lo && d.bounds.max == &base + &two * &hi, || {
            format!("degree bounds [{}, {}]", format_rational(&d.bounds.min), format_rational(&d.bounds.max))
        })?;
    }
    Ok("50 random observations: lambda interval and degree bounds exact".into())
}

fn unbounded_degree() -> Outcome {
    let half = ratio(1, 2);
    let observed = fixtures::zy_observation(&half, &half, &half).map_err(err)?;
    let d = polytope::ci_degree_bounds(&fixtures::zy_graph(), &observed, "Y", "Z").map_err(err)?;
    ensure(d.bounds.min.is_zero() && d.bounds.max.is_one(), || {
        format!("p=1/2 bounds [{}, {}]", format_rational(&d.bounds.min), format_rational(&d.bounds.max))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5542);
    for _ in 0..20 {
        let p = random_probability(&mut rng);
        let observed = fixtures::zy_observation(&half, &p, &p).map_err(err)?;
        let poly = polytope::build_polytope(&fixtures::zy_graph(), &observed, "Z").map_err(err)?;
        let degree = polytope::degree_functional(&poly, "Y", 0, 1).map_err(err)?;
        let b = polytope::functional_bounds(&poly, &degree).map_err(err)?;
        ensure(b.max.is_one(), || format!("p={}: max {}", format_rational(&p), format_rational(&b.max)))?;
        // The face where the degree equals one must be a single point with lambda = p.
        let mut a = poly.constraint_matrix().to_vec();
        a.push(degree.coefficients.clone());
        let mut rhs = poly.rhs().to_vec();
        rhs.push(Rational::one());
        let lambda_pos = poly.tuple_position(&[fixtures::LISTED_TO_CANONICAL[0]]).ok_or("missing tuple")?;
        for i in 0..poly.dimension() {
            let e = LinearFunctional::coordinate(poly.dimension(), i).coefficients;
            let lo = solve_standard_form(&a, &rhs, &e, Sense::Minimize).map_err(err)?.value;
            let hi = solve_standard_form(&a, &rhs, &e, Sense::Maximize).map_err(err)?.value;
            ensure(lo == hi, || format!("p={}: degree-one face is not a point", format_rational(&p)))?;
            if i == lambda_pos {
                ensure(lo == p, || format!("p={}: maximizer has lambda {}", format_rational(&p), format_rational(&lo)))?;
            }
        }
    }
    Ok("p=1/2 gives [0/1, 1/1]; max 1 attained only at lambda=p on 20 random p".into())
}

fn appendix_counterexample() -> Outcome {
    let m = fixtures::xor_model();
    let degree = invariance::as_ci_degree(&m, "Y", "Z").map_err(err)?;
    let none: &[&str] = &[];
    let gap_empty = invariance::dci_gap(&m, "Y", "Z", none).map_err(err)?.gap;
    let gap_y = invariance::dci_gap(&m, "Y", "Z", &["Y"]).map_err(err)?.gap;
    ensure(degree.is_zero() && gap_empty.is_zero() && gap_y.is_one(), || {
        format!(
            "degree {} gap{{}} {} gap{{Y}} {}",
            format_rational(&degree),
            format_rational(&gap_empty),
            format_rational(&gap_y)
        )
    })?;
    Ok("degree 0/1, gap given {} 0/1, gap given {Y} 1/1".into())
}

fn active_edge_fixture() -> Outcome {
    let m = fixtures::mod2_model();
    let degree = invariance::as_ci_degree(&m, "Y", "Z").map_err(err)?;
    let active = m.mechanism_depends_on_parent("X", "Z").map_err(err)?;
    ensure(degree.is_one() && active, || format!("degree {} edge active {active}", format_rational(&degree)))?;
    Ok("degree 1/1 with the Z->X edge active".into())
}

fn lattice() -> Outcome {
    let results: Vec<Result<(bool, bool), String>> = (0..600u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x1a77 + i);
            let n = rng.random_range(2..=4);
            let dag = random_dag(&mut rng, n, 0.5, 2);
            let model = if i % 2 == 0 {
                random_sparse_scm(&mut rng, &dag, 3, 16).map_err(err)?
            } else {
                random_generic_scm_bits(&mut rng, &dag, 16).map_err(err)?
            };
            let z = rng.random_range(0..n - 1);
            let y = rng.random_range(z + 1..n);
            let (zn, yn) = (dag.name(z).to_string(), dag.name(y).to_string());
            let others: Vec<usize> = (0..n).filter(|&v| v != z).collect();
            let sets: Vec<Vec<String>> = subsets(&others)
                .into_iter()
                .map(|s| s.into_iter().map(|v| dag.name(v).to_string()).collect())
                .collect();
            let report = invariance::implication_lattice_check(&model, &yn, &zn, &sets).map_err(err)?;
            if !report.pass {
                return Err(format!("model {i}: {}", report.violations.join("; ")));
            }
            let inputs: Vec<usize> = others.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
            let input_names: Vec<String> = inputs.iter().map(|&v| dag.name(v).to_string()).collect();
            let space = 1usize << inputs.len();
            let table = (0..space).map(|_| rng.random_range(0..2)).collect();
            let f = FunctionSpec::new(input_names, FiniteDomain::binary(), table);
            let direct = invariance::is_fci(&model, &f, &zn).map_err(err)?.value;
            let augmented = invariance::fci_degree_by_augmentation(&model, &f, &zn).map_err(err)?;
            if direct != augmented {
                return Err(format!(
                    "model {i}: functional degree {} vs augmented {}",
                    format_rational(&direct),
                    format_rational(&augmented)
                ));
            }
            Ok((report.degree.is_one(), !report.notes.is_empty()))
        })
        .collect();
    let mut invariant = 0;
    let mut strict = 0;
    for r in results {
        let (inv, note) = r?;
        invariant += usize::from(inv);
        strict += usize::from(note);
    }
    Ok(format!(
        "600 models, 0 violations, routes agree; {invariant} almost surely invariant, {strict} distributional-only"
    ))
}

fn conditional(joint: &[Vec<usize>], probs: &[Rational], fix: &[(usize, usize)], target: (usize, usize)) -> Option<Rational> {
    let mut num = Rational::zero();
    let mut den = Rational::zero();
    for (w, p) in joint.iter().zip(probs) {
        if fix.iter().all(|&(v, x)| w[v] == x) {
            den += p;
            if w[target.0] == target.1 {
                num += p;
            }
        }
    }
    (!den.is_zero()).then(|| num / den)
}

fn adjustment_soundness() -> Outcome {
    let dags: Vec<CausalDag> = (2..=4).flat_map(forward_dags).collect();
    let results: Vec<Result<(usize, usize, usize), String>> = dags
        .par_iter()
        .enumerate()
        .map(|(d, dag)| {
            let n = dag.len();
            let mut cases = Vec::new();
            for z in 0..n {
                for y in 0..n {
                    if z == y {
                        continue;
                    }
                    let sets = graph::enumerate_adjustment_sets(
                        dag,
                        dag.name(z),
                        dag.name(y),
                        n - 2,
                        ForbiddenReading::ExcludeExposure,
                    )
                    .map_err(err)?;
                    for s in sets {
                        cases.push((z, y, dag.ids(&s.members).map_err(err)?));
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0xad00 + d as u64);
            let all: Vec<usize> = (0..n).collect();
            let (mut identities, mut skipped, mut ci_models) = (0, 0, 0);
            for _ in 0..50 {
                let model = random_sparse_scm(&mut rng, dag, 3, 12).map_err(err)?;
                let joint = model.joint_distribution(&all);
                let worlds: Vec<Vec<usize>> = joint.support().map(|(w, _)| w.to_vec()).collect();
                let probs: Vec<Rational> = joint.support().map(|(_, p)| p.clone()).collect();
                for (z, y, s) in &cases {
                    for zv in 0..2 {
                        let mut forced = vec![None; n];
                        forced[*z] = Some(zv);
                        let truth = model.interventional_distribution(&[*y], &forced);
                        let mut formula = Rational::zero();
                        let mut defined = true;
                        for sv in assignments(&vec![2; s.len()]) {
                            let fix: Vec<(usize, usize)> = s.iter().copied().zip(sv.iter().copied()).collect();
                            let ps = joint.event_probability(&fix);
                            if ps.is_zero() {
                                continue;
                            }
                            let mut cond = fix.clone();
                            cond.push((*z, zv));
                            match conditional(&worlds, &probs, &cond, (*y, 1)) {
                                Some(c) => formula += c * ps,
                                None => defined = false,
                            }
                        }
                        if !defined {
                            skipped += 1;
                            continue;
                        }
                        if formula != truth.prob(&[1]) {
                            return Err(format!(
                                "dag {d}: {}={zv}, set {:?}: adjusted {} vs interventional {}",
                                dag.name(*z),
                                s,
                                format_rational(&formula),
                                format_rational(&truth.prob(&[1]))
                            ));
                        }
                        identities += 1;
                    }
                }
                for z in 0..n {
                    for y in 0..n {
                        if z == y || !invariance::as_ci_degree(&model, dag.name(y), dag.name(z)).map_err(err)?.is_one() {
                            continue;
                        }
                        ci_models += 1;
                        let stmts = graph::implied_independences::<&str>(
                            dag,
                            Some(dag.name(y)),
                            dag.name(z),
                            n,
                            None,
                            ForbiddenReading::ExcludeExposure,
                        )
                        .map_err(err)?;
                        for st in stmts {
                            let holds = joint.check_conditional_independence(&st.left, &st.right, &st.given).map_err(err)?;
                            if !holds {
                                return Err(format!("dag {d}: implied independence {st} fails"));
                            }
                        }
                    }
                }
            }
            Ok((identities, skipped, ci_models))
        })
        .collect();
    let (mut identities, mut skipped, mut ci_models) = (0, 0, 0);
    for r in results {
        let (a, b, c) = r?;
        identities += a;
        skipped += b;
        ci_models += c;
    }
    ensure(identities > 0 && ci_models > 0, || "vacuous check".to_string())?;
    Ok(format!(
        "{} DAGs x 50 models: {identities} identities exact ({skipped} without positivity skipped); implied independences hold on {ci_models} invariant pairs",
        dags.len()
    ))
}

fn measure_zero() -> Outcome {
    let mut cfg = ExperimentConfig::new(fixtures::zy_graph(), "Z", "Y", 1000, 20240917);
    cfg.target_mass = Some(ratio(1, 2));
    let report = experiments::measure_zero_as_ci(&cfg).map_err(err)?;
    let exact = report.count("exact_invariant").ok_or("missing exact count")?;
    let fraction = experiments::near_fraction(&report, &cfg.epsilon);
    ensure(exact == 0 && (fraction - 0.1).abs() <= 0.04, || {
        format!("exact {exact}, near fraction {fraction}")
    })?;
    Ok(format!("n=1000: exact count 0, near fraction {fraction:.3} (target 0.100 +/- 0.04)"))
}

fn fci_rarity() -> Outcome {
    let vars = ["Z", "X", "Y", "C"].map(Variable::binary).to_vec();
    let dag = CausalDag::new(vars, &[("Z", "X"), ("X", "Y")]).map_err(err)?;
    let mut cfg = ExperimentConfig::new(dag, "Z", "Y", 500, 31);
    cfg.inputs = vec!["X".into(), "C".into()];
    let report = experiments::fci_rarity(&cfg).map_err(err)?;
    let violations = report.count("violations").ok_or("missing violations")?;
    let flagged = report.get("fixture_flagged") == Some("true");
    ensure(report.records.len() == 500 && violations == 0 && flagged, || {
        format!("violations {violations}, fixture flagged {flagged}")
    })?;
    Ok("n=500: 0 violations; parity fixture flagged".into())
}

fn embedding() -> Outcome {
    let vars = ["Z", "W", "Y"].map(Variable::binary).to_vec();
    let dag = CausalDag::new(vars, &[("Z", "W"), ("W", "Y")]).map_err(err)?;
    let cfg = ExperimentConfig::new(dag, "Z", "Y", 1, 0);
    let report = experiments::dci_embedding_demo(&cfg, "W", 11).map_err(err)?;
    let ok = report.get("gap_min") == Some("0/1")
        && report.get("gap_max") == Some("1/1")
        && report.get("endpoints_attained") == Some("true")
        && report.get("reduction_consistent") == Some("11/11");
    ensure(ok, || report.render_summary())?;
    Ok("gap endpoints 0/1 and 1/1 attained; reduction consistent on 11/11".into())
}

fn infrastructure() -> Outcome {
    let dags: Vec<CausalDag> = (1..=5).flat_map(forward_dags).collect();
    let queries: Result<Vec<usize>, String> = dags
        .par_iter()
        .map(|dag| {
            let n = dag.len();
            let mut count = 0;
            for a in 0..n {
                for b in a + 1..n {
                    let rest: Vec<usize> = (0..n).filter(|&v| v != a && v != b).collect();
                    for s in subsets(&rest) {
                        let set: BTreeSet<usize> = s.iter().copied().collect();
                        let oracle = graph::skeleton_paths(dag, a, b).iter().all(|p| graph::path_blocked(dag, p, &set));
                        let fast = graph::d_separated(dag, &[a], &[b], &s).map_err(err)?;
                        if oracle != fast {
                            return Err(format!("{a} vs {b} given {s:?}: oracle {oracle}, search {fast}"));
                        }
                        count += 1;
                    }
                }
            }
            Ok(count)
        })
        .collect();
    let queries: usize = queries?.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(0xca11);
    for i in 0..120 {
        let n = rng.random_range(2..=4);
        let card = if n == 4 { 2 } else { 3 };
        let dag = random_dag(&mut rng, n, 0.5, card);
        let model: DiscreteScm = random_sparse_scm(&mut rng, &dag, 4, 20).map_err(err)?;
        let all: Vec<usize> = (0..n).collect();
        let canonical = canon::canonicalize(&model, CanonConfig::default()).map_err(err)?;
        let vector = canonical.full_vector(CanonConfig::default()).map_err(err)?;
        let none = vec![None; n];
        let induced = canon::induced_distribution(&dag, canonical.tables(), &vector, &none, &all).map_err(err)?;
        ensure(induced == model.joint_distribution(&all), || format!("model {i}: joint differs"))?;
        let (z, y) = (0, n - 1);
        let (zn, yn) = (dag.name(z), dag.name(y));
        let vz = |k: usize| dag.variable(z).domain.value(k % dag.cardinality(z)).to_string();
        let vy = |k: usize| dag.variable(y).domain.value(k % dag.cardinality(y)).to_string();
        let (z0, z1, y0, y1) = (vz(0), vz(1), vy(rng.random_range(0..3)), vy(rng.random_range(0..3)));
        let queries = [
            CounterfactualQuery::new().clause(&[(zn, &z0)], &[(yn, &y0)]).clause(&[(zn, &z1)], &[(yn, &y1)]),
            CounterfactualQuery::new().clause(&[(zn, &z1)], &[(yn, &y0)]).clause(&[], &[(zn, &z0)]),
            CounterfactualQuery::new().equal(yn, &[(zn, &z0)], &[(zn, &z1)]),
        ];
        for q in &queries {
            let direct = model.counterfactual_probability(q).map_err(err)?;
            let via = canon::canonical_counterfactual_probability(&dag, canonical.tables(), &vector, q).map_err(err)?;
            ensure(direct == via, || {
                format!("model {i}: counterfactual {} vs canonical {}", format_rational(&direct), format_rational(&via))
            })?;
        }
    }
    Ok(format!(
        "{} DAGs, {queries} separation queries agree; 120 models round-trip through canonical form",
        dags.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("response line interval and degree bounds", lambda_line, Duration::from_secs(1)),
        ("degree unbounded by independences", unbounded_degree, Duration::from_secs(1)),
        ("xor counterexample", appendix_counterexample, Duration::from_secs(1)),
        ("invariance with an active edge", active_edge_fixture, Duration::from_secs(1)),
        ("implication lattice", lattice, Duration::from_secs(120)),
        ("adjustment soundness", adjustment_soundness, Duration::from_secs(300)),
        ("measure-zero sampling", measure_zero, Duration::from_secs(60)),
        ("functional invariance classification", fci_rarity, Duration::from_secs(300)),
        ("mediator embedding", embedding, Duration::from_secs(60)),
        ("separation and canonical form", infrastructure, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > *budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{elapsed:.2?}]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail} [{elapsed:.2?}]", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
