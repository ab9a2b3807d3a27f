use std::collections::{BTreeMap, BTreeSet};

use super::domain::Variable;
use crate::error::{Error, Result};

/// Directed acyclic graph over named, finitely-valued variables.
///
/// Node indices follow declaration order. Parent lists are sorted by index, which fixes
/// the column order of every mechanism table and response-function encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalDag {
    vars: Vec<Variable>,
    index: BTreeMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl CausalDag {
    pub fn new<S: AsRef<str>>(vars: Vec<Variable>, edges: &[(S, S)]) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, v) in vars.iter().enumerate() {
            if index.insert(v.name.clone(), i).is_some() {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
        }
        let mut pairs = Vec::with_capacity(edges.len());
        for (from, to) in edges {
            let f = *index
                .get(from.as_ref())
                .ok_or_else(|| Error::UnknownVariable(from.as_ref().to_string()))?;
            let t = *index
                .get(to.as_ref())
                .ok_or_else(|| Error::UnknownVariable(to.as_ref().to_string()))?;
            pairs.push((f, t));
        }
        Self::from_index_edges(vars, index, &pairs)
    }

    fn from_index_edges(
        vars: Vec<Variable>,
        index: BTreeMap<String, usize>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let n = vars.len();
        let mut parents = vec![BTreeSet::new(); n];
        let mut children = vec![BTreeSet::new(); n];
        for &(f, t) in edges {
            parents[t].insert(f);
            children[f].insert(t);
        }
        let parents: Vec<Vec<usize>> = parents.into_iter().map(|s| s.into_iter().collect()).collect();
        let children: Vec<Vec<usize>> = children.into_iter().map(|s| s.into_iter().collect()).collect();
        let topo = kahn(&vars, &parents, &children)?;
        Ok(Self {
            vars,
            index,
            parents,
            children,
            topo,
        })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, v: usize) -> &Variable {
        &self.vars[v]
    }

    pub fn name(&self, v: usize) -> &str {
        &self.vars[v].name
    }

    pub fn cardinality(&self, v: usize) -> usize {
        self.vars[v].domain.len()
    }

    pub fn id(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn ids<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    pub fn value_index(&self, v: usize, value: &str) -> Result<usize> {
        self.vars[v].domain.index_of(value).ok_or_else(|| Error::UnknownValue {
            variable: self.vars[v].name.clone(),
            value: value.to_string(),
        })
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn is_root(&self, v: usize) -> bool {
        self.parents[v].is_empty()
    }

    /// Parents precede children; ties are broken by variable name.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn topological_names(&self) -> Vec<String> {
        self.topo.iter().map(|&v| self.vars[v].name.clone()).collect()
    }

    /// All edges as `(parent, child)` in index order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((p, child));
            }
        }
        out.sort_unstable();
        out
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    /// Product of parent cardinalities.
    pub fn parent_space(&self, v: usize) -> usize {
        self.parents[v].iter().map(|&p| self.cardinality(p)).product()
    }

    /// Position of a parent assignment in lexicographic order (first parent most significant).
    pub fn parent_position(&self, v: usize, world: &[usize]) -> usize {
        let mut pos = 0;
        for &p in &self.parents[v] {
            pos = pos * self.cardinality(p) + world[p];
        }
        pos
    }

    /// Inverse of [`CausalDag::parent_position`]: parent values in parent order.
    pub fn parent_assignment(&self, v: usize, mut position: usize) -> Vec<usize> {
        let ps = &self.parents[v];
        let mut out = vec![0; ps.len()];
        for (slot, &p) in ps.iter().enumerate().rev() {
            let c = self.cardinality(p);
            out[slot] = position % c;
            position /= c;
        }
        out
    }

    /// Copy of the graph with all edges into `v` removed.
    pub fn without_incoming(&self, v: usize) -> Self {
        let edges: Vec<(usize, usize)> = self.edges().into_iter().filter(|&(_, t)| t != v).collect();
        Self::from_index_edges(self.vars.clone(), self.index.clone(), &edges)
            .expect("removing edges keeps the graph acyclic")
    }

    /// Copy of the graph with one extra node whose parents are `parents`.
    pub fn with_node(&self, var: Variable, parents: &[usize]) -> Result<Self> {
        if self.index.contains_key(&var.name) {
            return Err(Error::DuplicateVariable(var.name));
        }
        let new = self.vars.len();
        let mut vars = self.vars.clone();
        let mut index = self.index.clone();
        index.insert(var.name.clone(), new);
        vars.push(var);
        let mut edges = self.edges();
        edges.extend(parents.iter().map(|&p| (p, new)));
        Self::from_index_edges(vars, index, &edges)
    }

    /// Copy of the graph with the given edge set over the same nodes.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Self> {
        Self::from_index_edges(self.vars.clone(), self.index.clone(), edges)
    }
}

fn kahn(vars: &[Variable], parents: &[Vec<usize>], children: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = vars.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<(&str, usize)> = (0..n)
        .filter(|&v| indeg[v] == 0)
        .map(|v| (vars[v].name.as_str(), v))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&first) = ready.iter().next() {
        ready.remove(&first);
        let v = first.1;
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert((vars[c].name.as_str(), c));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    Err(Error::Cycle(find_cycle(vars, parents, &indeg)))
}

/// Walks parent links among unsorted nodes until a node repeats.
fn find_cycle(vars: &[Variable], parents: &[Vec<usize>], indeg: &[usize]) -> Vec<String> {
    let start = (0..vars.len()).find(|&v| indeg[v] > 0).expect("some node is unsorted");
    let mut seen = vec![usize::MAX; vars.len()];
    let mut path = Vec::new();
    let mut v = start;
    while seen[v] == usize::MAX {
        seen[v] = path.len();
        path.push(v);
        v = *parents[v]
            .iter()
            .find(|&&p| indeg[p] > 0)
            .expect("unsorted node has an unsorted parent");
    }
    let mut cycle: Vec<String> = path[seen[v]..].iter().rev().map(|&u| vars[u].name.clone()).collect();
    cycle.push(cycle[0].clone());
    cycle
}
