use super::dag::CausalDag;
use crate::error::{Error, Result};

/// One world of a cross-world query: an intervention (empty for the factual world)
/// and the event required to hold in that world.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clause {
    pub intervention: Vec<(String, String)>,
    pub event: Vec<(String, String)>,
}

/// `variable` under `left` equals `variable` under `right`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub variable: String,
    pub left: Vec<(String, String)>,
    pub right: Vec<(String, String)>,
}

/// Conjunction of events across worlds that share a single noise draw.
///
/// ```
/// use cf_invariance::scm::CounterfactualQuery;
/// // P(Y(1) = 0, Y = 1)
/// let q = CounterfactualQuery::new()
///     .clause(&[("Z", "1")], &[("Y", "0")])
///     .clause(&[], &[("Y", "1")]);
/// assert_eq!(q.clauses.len(), 2);
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CounterfactualQuery {
    pub clauses: Vec<Clause>,
    pub comparisons: Vec<Comparison>,
}

fn owned(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

impl CounterfactualQuery {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clause(mut self, intervention: &[(&str, &str)], event: &[(&str, &str)]) -> Self {
        self.clauses.push(Clause {
            intervention: owned(intervention),
            event: owned(event),
        });
        self
    }

    pub fn equal(mut self, variable: &str, left: &[(&str, &str)], right: &[(&str, &str)]) -> Self {
        self.comparisons.push(Comparison {
            variable: variable.to_string(),
            left: owned(left),
            right: owned(right),
        });
        self
    }
}

/// Resolves `(name, value)` pairs into one slot per variable.
pub fn resolve_intervention<S: AsRef<str>>(dag: &CausalDag, assignment: &[(S, S)]) -> Result<Vec<Option<usize>>> {
    let mut out = vec![None; dag.len()];
    for (name, value) in assignment {
        let v = dag.id(name.as_ref())?;
        let x = dag.value_index(v, value.as_ref())?;
        if matches!(out[v], Some(y) if y != x) {
            return Err(Error::InvalidArgument(format!(
                "`{}` is intervened on twice with different values",
                name.as_ref()
            )));
        }
        out[v] = Some(x);
    }
    Ok(out)
}

/// A query with names resolved against a graph. Distinct interventions are listed once
/// so each is replayed a single time per noise draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedQuery {
    pub worlds: Vec<Vec<Option<usize>>>,
    /// `(world, variable, value)`
    pub events: Vec<(usize, usize, usize)>,
    /// `(variable, left world, right world)`
    pub comparisons: Vec<(usize, usize, usize)>,
}

impl ResolvedQuery {
    pub fn resolve(dag: &CausalDag, query: &CounterfactualQuery) -> Result<Self> {
        let mut worlds: Vec<Vec<Option<usize>>> = Vec::new();
        let mut world_of = |iv: Vec<Option<usize>>| match worlds.iter().position(|w| *w == iv) {
            Some(i) => i,
            None => {
                worlds.push(iv);
                worlds.len() - 1
            }
        };
        let mut events = Vec::new();
        for clause in &query.clauses {
            let iv = resolve_intervention(dag, &clause.intervention)?;
            for (name, value) in &clause.event {
                let v = dag.id(name)?;
                if iv[v].is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "event variable `{name}` is also intervened on in the same clause"
                    )));
                }
                let x = dag.value_index(v, value)?;
                events.push((world_of(iv.clone()), v, x));
            }
        }
        let mut comparisons = Vec::new();
        for cmp in &query.comparisons {
            let v = dag.id(&cmp.variable)?;
            let l = world_of(resolve_intervention(dag, &cmp.left)?);
            let r = world_of(resolve_intervention(dag, &cmp.right)?);
            comparisons.push((v, l, r));
        }
        Ok(Self {
            worlds,
            events,
            comparisons,
        })
    }

    /// Whether the realized worlds (one per entry of `worlds`) satisfy every clause.
    pub fn holds(&self, realized: &[Vec<usize>]) -> bool {
        self.events.iter().all(|&(k, v, x)| realized[k][v] == x)
            && self.comparisons.iter().all(|&(v, l, r)| realized[l][v] == realized[r][v])
    }
}
