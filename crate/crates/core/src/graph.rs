//! Descendants, d-separation and covariate adjustment.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::scm::{CausalDag, FiniteDomain, Variable};

/// All nodes reachable from `v` by directed paths, `v` included.
pub fn descendants(dag: &CausalDag, v: usize) -> BTreeSet<usize> {
    reach(v, |u| dag.children(u))
}

/// All nodes with a directed path into `v`, `v` included.
pub fn ancestors(dag: &CausalDag, v: usize) -> BTreeSet<usize> {
    reach(v, |u| dag.parents(u))
}

fn reach<'a>(start: usize, next: impl Fn(usize) -> &'a [usize]) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &w in next(u) {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen
}

pub fn descendants_by_name(dag: &CausalDag, v: &str) -> Result<Vec<String>> {
    let id = dag.id(v)?;
    Ok(names(dag, &descendants(dag, id)))
}

/// Complement of the descendant set.
pub fn non_descendants(dag: &CausalDag, v: usize) -> BTreeSet<usize> {
    let de = descendants(dag, v);
    (0..dag.len()).filter(|u| !de.contains(u)).collect()
}

fn names(dag: &CausalDag, set: &BTreeSet<usize>) -> Vec<String> {
    let mut out: Vec<String> = set.iter().map(|&u| dag.name(u).to_string()).collect();
    out.sort();
    out
}

fn check_disjoint(dag: &CausalDag, sets: &[&[usize]]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for set in sets {
        for &v in *set {
            if !seen.insert(v) {
                return Err(Error::InvalidArgument(format!("`{}` appears in more than one set", dag.name(v))));
            }
        }
    }
    Ok(())
}

/// Whether every path between `a` and `b` is blocked by `s`.
///
/// Reachability over (node, direction) states: a trail may pass a non-collider only when
/// it is unobserved, and a collider only when it or one of its descendants is observed.
pub fn d_separated(dag: &CausalDag, a: &[usize], b: &[usize], s: &[usize]) -> Result<bool> {
    check_disjoint(dag, &[a, b, s])?;
    let observed: BTreeSet<usize> = s.iter().copied().collect();
    let mut opens_collider = BTreeSet::new();
    for &v in s {
        opens_collider.extend(ancestors(dag, v));
    }
    // direction: true = arrived from a child (moving up), false = arrived from a parent
    let mut visited: BTreeSet<(usize, bool)> = BTreeSet::new();
    let mut queue: VecDeque<(usize, bool)> = a.iter().map(|&v| (v, true)).collect();
    let targets: BTreeSet<usize> = b.iter().copied().collect();
    while let Some((v, up)) = queue.pop_front() {
        if !visited.insert((v, up)) {
            continue;
        }
        if !observed.contains(&v) && targets.contains(&v) {
            return Ok(false);
        }
        if up {
            if !observed.contains(&v) {
                queue.extend(dag.parents(v).iter().map(|&p| (p, true)));
                queue.extend(dag.children(v).iter().map(|&c| (c, false)));
            }
        } else {
            if !observed.contains(&v) {
                queue.extend(dag.children(v).iter().map(|&c| (c, false)));
            }
            if opens_collider.contains(&v) {
                queue.extend(dag.parents(v).iter().map(|&p| (p, true)));
            }
        }
    }
    Ok(true)
}

pub fn d_separated_by_name<S: AsRef<str>>(dag: &CausalDag, a: &[S], b: &[S], s: &[S]) -> Result<bool> {
    d_separated(dag, &dag.ids(a)?, &dag.ids(b)?, &dag.ids(s)?)
}

/// Simple paths between `from` and `to` in the skeleton.
pub fn skeleton_paths(dag: &CausalDag, from: usize, to: usize) -> Vec<Vec<usize>> {
    fn walk(dag: &CausalDag, to: usize, path: &mut Vec<usize>, on_path: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let v = *path.last().expect("nonempty path");
        if v == to {
            out.push(path.clone());
            return;
        }
        for &w in dag.parents(v).iter().chain(dag.children(v)) {
            if !on_path[w] {
                on_path[w] = true;
                path.push(w);
                walk(dag, to, path, on_path, out);
                path.pop();
                on_path[w] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut on_path = vec![false; dag.len()];
    on_path[from] = true;
    walk(dag, to, &mut vec![from], &mut on_path, &mut out);
    out
}

/// Whether `s` blocks the path under the usual chain, fork and collider rules.
pub fn path_blocked(dag: &CausalDag, path: &[usize], s: &BTreeSet<usize>) -> bool {
    path.windows(3).any(|w| {
        let (prev, mid, next) = (w[0], w[1], w[2]);
        let collider = dag.has_edge(prev, mid) && dag.has_edge(next, mid);
        if collider {
            !s.contains(&mid) && descendants(dag, mid).is_disjoint(s)
        } else {
            s.contains(&mid)
        }
    })
}

/// Whether the path is `path[0] -> path[1] -> ... -> path[last]`.
pub fn is_directed_path(dag: &CausalDag, path: &[usize]) -> bool {
    path.windows(2).all(|w| dag.has_edge(w[0], w[1]))
}

/// How "descendants of any node on a directed path from Z to Y" treats Z itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ForbiddenReading {
    /// Only nodes after Z on a directed path; Z's other descendants stay admissible.
    #[default]
    ExcludeExposure,
    /// Z counts as a node on the path, so every descendant of Z is forbidden.
    IncludeExposure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjustmentSet {
    pub exposure: String,
    pub outcome: String,
    pub members: Vec<String>,
    pub valid: bool,
    /// 1: some non-directed path is open; 2: a forbidden descendant is included.
    pub failing_condition: Option<u8>,
}

/// Nodes that may not appear in an adjustment set for `(z, y)`.
pub fn forbidden_nodes(dag: &CausalDag, z: usize, y: usize, reading: ForbiddenReading) -> BTreeSet<usize> {
    let an_y = ancestors(dag, y);
    let on_directed: Vec<usize> = descendants(dag, z)
        .into_iter()
        .filter(|v| an_y.contains(v))
        .filter(|&v| v != z || reading == ForbiddenReading::IncludeExposure)
        .collect();
    let mut out = BTreeSet::new();
    if !an_y.contains(&z) && reading == ForbiddenReading::IncludeExposure {
        out.extend(descendants(dag, z));
    }
    for v in on_directed {
        out.extend(descendants(dag, v));
    }
    out
}

fn adjustment_check(dag: &CausalDag, z: usize, y: usize, s: &[usize], reading: ForbiddenReading) -> Result<Option<u8>> {
    if z == y {
        return Err(Error::InvalidArgument("exposure and outcome must differ".into()));
    }
    let set: BTreeSet<usize> = s.iter().copied().collect();
    if set.contains(&z) || set.contains(&y) {
        return Err(Error::InvalidArgument("adjustment set may not contain exposure or outcome".into()));
    }
    let open_backdoor = skeleton_paths(dag, z, y)
        .iter()
        .filter(|p| !is_directed_path(dag, p))
        .any(|p| !path_blocked(dag, p, &set));
    if open_backdoor {
        return Ok(Some(1));
    }
    let forbidden = forbidden_nodes(dag, z, y, reading);
    if !forbidden.is_disjoint(&set) {
        return Ok(Some(2));
    }
    Ok(None)
}

pub fn is_valid_adjustment_set<S: AsRef<str>>(
    dag: &CausalDag,
    exposure: &str,
    outcome: &str,
    s: &[S],
    reading: ForbiddenReading,
) -> Result<AdjustmentSet> {
    let z = dag.id(exposure)?;
    let y = dag.id(outcome)?;
    let ids = dag.ids(s)?;
    let failing = adjustment_check(dag, z, y, &ids, reading)?;
    let set: BTreeSet<usize> = ids.into_iter().collect();
    Ok(AdjustmentSet {
        exposure: exposure.to_string(),
        outcome: outcome.to_string(),
        members: names(dag, &set),
        valid: failing.is_none(),
        failing_condition: failing,
    })
}

/// Subsets of `items` with `k` elements, in lexicographic order.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Every valid adjustment set with at most `max_size` members, by size then name order.
pub fn enumerate_adjustment_sets(
    dag: &CausalDag,
    exposure: &str,
    outcome: &str,
    max_size: usize,
    reading: ForbiddenReading,
) -> Result<Vec<AdjustmentSet>> {
    let z = dag.id(exposure)?;
    let y = dag.id(outcome)?;
    if max_size > dag.len() {
        return Err(Error::InvalidArgument(format!(
            "max size {max_size} exceeds the node count {}",
            dag.len()
        )));
    }
    let mut candidates: Vec<usize> = (0..dag.len()).filter(|&v| v != z && v != y).collect();
    candidates.sort_by(|&a, &b| dag.name(a).cmp(dag.name(b)));
    let mut out = Vec::new();
    for k in 0..=max_size.min(candidates.len()) {
        for combo in combinations(&candidates, k) {
            if adjustment_check(dag, z, y, &combo, reading)?.is_none() {
                let members = combo.iter().map(|&v| dag.name(v).to_string()).collect();
                out.push(AdjustmentSet {
                    exposure: exposure.to_string(),
                    outcome: outcome.to_string(),
                    members,
                    valid: true,
                    failing_condition: None,
                });
            }
        }
    }
    Ok(out)
}

/// Sets valid when Z is excluded from the forbidden-node scan but invalid when it is included.
pub fn forbidden_reading_discrepancy(dag: &CausalDag, exposure: &str, outcome: &str, max_size: usize) -> Result<Vec<Vec<String>>> {
    let loose = enumerate_adjustment_sets(dag, exposure, outcome, max_size, ForbiddenReading::ExcludeExposure)?;
    let strict = enumerate_adjustment_sets(dag, exposure, outcome, max_size, ForbiddenReading::IncludeExposure)?;
    let strict: BTreeSet<Vec<String>> = strict.into_iter().map(|s| s.members).collect();
    Ok(loose
        .into_iter()
        .map(|s| s.members)
        .filter(|m| !strict.contains(m))
        .collect())
}

/// `left ⟂ right | given`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependenceStatement {
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub given: Vec<String>,
}

impl fmt::Display for IndependenceStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} _||_ {} | {{{}}}",
            self.left.join(", "),
            self.right.join(", "),
            self.given.join(", ")
        )
    }
}

/// Name used for the appended function node when `function_inputs` is given.
pub const FUNCTION_NODE: &str = "f_hat";

/// Independences forced by almost-sure invariance of `target`, one per valid adjustment set.
///
/// With `function_inputs`, the target is a fresh childless node whose parents are the
/// inputs, standing for `f(inputs)`.
pub fn implied_independences<S: AsRef<str>>(
    dag: &CausalDag,
    target: Option<&str>,
    exposure: &str,
    max_size: usize,
    function_inputs: Option<&[S]>,
    reading: ForbiddenReading,
) -> Result<Vec<IndependenceStatement>> {
    let (graph, target) = match (function_inputs, target) {
        (Some(inputs), _) => {
            let ids = dag.ids(inputs)?;
            let mut name = FUNCTION_NODE.to_string();
            while dag.id(&name).is_ok() {
                name.push('_');
            }
            let var = Variable::new(name.clone(), FiniteDomain::binary())?;
            (dag.with_node(var, &ids)?, name)
        }
        (None, Some(t)) => (dag.clone(), t.to_string()),
        (None, None) => {
            return Err(Error::InvalidArgument("either a target or function inputs are required".into()))
        }
    };
    let max_size = max_size.min(graph.len());
    Ok(enumerate_adjustment_sets(&graph, exposure, &target, max_size, reading)?
        .into_iter()
        .map(|s| IndependenceStatement {
            left: vec![target.clone()],
            right: vec![exposure.to_string()],
            given: s.members,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn graph(names: &[&str], edges: &[(&str, &str)]) -> CausalDag {
        CausalDag::new(names.iter().map(|n| Variable::binary(*n)).collect(), edges).unwrap()
    }

    const NONE: &[&str] = &[];

    #[test]
    fn descendant_sets() {
        let g = fixtures::chain_graph();
        assert_eq!(descendants_by_name(&g, "Z").unwrap(), ["X", "Y", "Z"]);
        let g = graph(&["Z", "X", "C"], &[("Z", "X")]);
        assert_eq!(descendants_by_name(&g, "Z").unwrap(), ["X", "Z"]);
        assert_eq!(non_descendants(&g, 0), BTreeSet::from([2]));
        assert_eq!(descendants_by_name(&g, "C").unwrap(), ["C"]);
        assert!(descendants_by_name(&g, "Q").is_err());
    }

    #[test]
    fn chain_collider_fork() {
        let chain = fixtures::chain_graph();
        assert!(d_separated_by_name(&chain, &["Z"], &["Y"], &["X"]).unwrap());
        assert!(!d_separated_by_name(&chain, &["Z"], &["Y"], NONE).unwrap());

        let collider = graph(&["Z", "C", "Y"], &[("Z", "C"), ("Y", "C")]);
        assert!(d_separated_by_name(&collider, &["Z"], &["Y"], NONE).unwrap());
        assert!(!d_separated_by_name(&collider, &["Z"], &["Y"], &["C"]).unwrap());

        let fork = graph(&["Z", "C", "Y"], &[("C", "Z"), ("C", "Y")]);
        assert!(!d_separated_by_name(&fork, &["Z"], &["Y"], NONE).unwrap());
        assert!(d_separated_by_name(&fork, &["Z"], &["Y"], &["C"]).unwrap());
    }

    #[test]
    fn collider_opened_by_descendant() {
        let g = graph(&["Z", "C", "D", "Y"], &[("Z", "C"), ("Y", "C"), ("C", "D")]);
        assert!(!d_separated_by_name(&g, &["Z"], &["Y"], &["D"]).unwrap());
    }

    #[test]
    fn chain_adjustment() {
        let g = fixtures::chain_graph();
        let empty = is_valid_adjustment_set(&g, "Z", "Y", NONE, ForbiddenReading::default()).unwrap();
        assert!(empty.valid);
        let x = is_valid_adjustment_set(&g, "Z", "Y", &["X"], ForbiddenReading::default()).unwrap();
        assert!(!x.valid);
        assert_eq!(x.failing_condition, Some(2));
        let sets = enumerate_adjustment_sets(&g, "Z", "Y", 2, ForbiddenReading::default()).unwrap();
        assert_eq!(sets.len(), 1);
        assert!(sets[0].members.is_empty());
    }

    #[test]
    fn confounded_adjustment() {
        let g = graph(&["Z", "C", "Y"], &[("C", "Z"), ("C", "Y"), ("Z", "Y")]);
        let c = is_valid_adjustment_set(&g, "Z", "Y", &["C"], ForbiddenReading::default()).unwrap();
        assert!(c.valid);
        let empty = is_valid_adjustment_set(&g, "Z", "Y", NONE, ForbiddenReading::default()).unwrap();
        assert_eq!(empty.failing_condition, Some(1));
        let sets = enumerate_adjustment_sets(&g, "Z", "Y", 3, ForbiddenReading::default()).unwrap();
        assert_eq!(sets.iter().map(|s| s.members.clone()).collect::<Vec<_>>(), vec![vec!["C".to_string()]]);
    }

    #[test]
    fn direct_edge_only() {
        let g = fixtures::zy_graph();
        let sets = enumerate_adjustment_sets(&g, "Z", "Y", 0, ForbiddenReading::default()).unwrap();
        assert_eq!(sets.len(), 1);
        assert!(sets[0].members.is_empty());
        let stmts = implied_independences(&g, Some("Y"), "Z", 2, None::<&[&str]>, ForbiddenReading::default()).unwrap();
        assert_eq!(stmts.len(), 1);
        assert_eq!(stmts[0].to_string(), "Y _||_ Z | {}");
    }

    #[test]
    fn function_target_on_chain() {
        let g = fixtures::chain_graph();
        let stmts = implied_independences(&g, None, "Z", 3, Some(&["X"][..]), ForbiddenReading::default()).unwrap();
        assert_eq!(stmts.len(), 1);
        assert_eq!(stmts[0].to_string(), "f_hat _||_ Z | {}");
    }

    #[test]
    fn no_valid_set_within_bound() {
        let g = graph(&["Z", "C", "D", "Y"], &[("C", "Z"), ("D", "Z"), ("C", "Y"), ("D", "Y"), ("Z", "Y")]);
        let stmts = implied_independences(&g, Some("Y"), "Z", 1, None::<&[&str]>, ForbiddenReading::default()).unwrap();
        assert!(stmts.is_empty());
        let stmts = implied_independences(&g, Some("Y"), "Z", 2, None::<&[&str]>, ForbiddenReading::default()).unwrap();
        assert_eq!(stmts[0].to_string(), "Y _||_ Z | {C, D}");
    }

    #[test]
    fn forbidden_readings_differ_on_side_branch() {
        // W hangs off Z without reaching Y: admissible only when Z itself is not scanned.
        let g = graph(&["Z", "W", "Y"], &[("Z", "W"), ("Z", "Y")]);
        let d = forbidden_reading_discrepancy(&g, "Z", "Y", 1).unwrap();
        assert_eq!(d, vec![vec!["W".to_string()]]);
    }

    #[test]
    fn max_size_bound_is_checked() {
        let g = fixtures::zy_graph();
        assert!(enumerate_adjustment_sets(&g, "Z", "Y", 3, ForbiddenReading::default()).is_err());
    }
}
