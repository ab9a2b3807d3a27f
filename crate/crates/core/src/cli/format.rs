//! Line-oriented text formats for models, graphs and observed distributions.
//!
//! ```text
//! [variables]
//! Z: 0,1
//! Y: 0,1
//!
//! [edges]
//! Z -> Y
//!
//! [mechanism Z]
//! noise: 1/2,1/2
//! noise=0 -> 0
//! noise=1 -> 1
//!
//! [mechanism Y]
//! noise: 1/2,1/2
//! Z=0, noise=0 -> 0
//! ...
//! ```
//!
//! Observation files use `[variables]` and `[rows]`, one row per support point:
//! values in variable order followed by the probability. Blank lines and lines starting
//! with `#` are ignored. Lines and columns in errors are 1-based; an empty document is
//! reported at line 0, column 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, sum, Rational};
use crate::scm::{CausalDag, DiscreteScm, ExactDistribution, FiniteDomain, NoiseSpec, TabularMechanism, Variable};

/// A parsed model plus its free-form metadata section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDocument {
    pub model: DiscreteScm,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy)]
struct Line<'a> {
    number: usize,
    /// Byte offset of `text` within the raw line.
    offset: usize,
    text: &'a str,
}

impl Line<'_> {
    fn error(&self, at: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.number,
            column: self.column(at),
            message: message.into(),
        }
    }

    /// 1-based column of `at`, which must be a subslice of `text`.
    fn column(&self, at: &str) -> usize {
        let base = self.text.as_ptr() as usize;
        let ptr = at.as_ptr() as usize;
        let inner = if ptr >= base && ptr <= base + self.text.len() { ptr - base } else { 0 };
        self.offset + inner + 1
    }
}

struct Section<'a> {
    header: Line<'a>,
    name: &'a str,
    argument: Option<&'a str>,
    body: Vec<Line<'a>>,
}

fn sections(text: &str) -> Result<Vec<Section<'_>>> {
    let mut out: Vec<Section<'_>> = Vec::new();
    let mut any = false;
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        any = true;
        let line = Line {
            number: i + 1,
            offset: raw.len() - raw.trim_start().len(),
            text: trimmed,
        };
        if let Some(rest) = trimmed.strip_prefix('[') {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| line.error(trimmed, "section header is missing `]`"))?
                .trim();
            let mut parts = inner.split_whitespace();
            let name = parts.next().ok_or_else(|| line.error(trimmed, "empty section header"))?;
            let argument = parts.next();
            if let Some(extra) = parts.next() {
                return Err(line.error(extra, "unexpected text in section header"));
            }
            out.push(Section {
                header: line,
                name,
                argument,
                body: Vec::new(),
            });
        } else {
            match out.last_mut() {
                Some(s) => s.body.push(line),
                None => return Err(line.error(trimmed, "content before the first section header")),
            }
        }
    }
    if !any {
        return Err(Error::Parse {
            line: 0,
            column: 0,
            message: "empty document".into(),
        });
    }
    Ok(out)
}

fn split_once_trim<'a>(line: &Line<'a>, text: &'a str, sep: &str, what: &str) -> Result<(&'a str, &'a str)> {
    let (a, b) = text
        .split_once(sep)
        .ok_or_else(|| line.error(text, format!("expected `{sep}` in {what}")))?;
    Ok((a.trim(), b.trim()))
}

fn parse_variables(section: &Section<'_>) -> Result<Vec<Variable>> {
    let mut vars = Vec::new();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for line in &section.body {
        let (name, values) = split_once_trim(line, line.text, ":", "a variable declaration")?;
        if let Some(first) = seen.insert(name, line.number) {
            return Err(line.error(name, format!("variable `{name}` already declared at line {first}")));
        }
        let domain = FiniteDomain::new(values.split(',').map(str::trim))
            .map_err(|e| line.error(values, e.to_string()))?;
        let var = Variable::new(name, domain).map_err(|e| line.error(name, e.to_string()))?;
        vars.push(var);
    }
    Ok(vars)
}

fn parse_edges<'a>(section: &Section<'a>, vars: &[Variable]) -> Result<Vec<(String, String)>> {
    let mut edges = Vec::new();
    let mut seen: BTreeMap<(&'a str, &'a str), usize> = BTreeMap::new();
    for line in &section.body {
        let (from, to) = split_once_trim(line, line.text, "->", "an edge")?;
        for name in [from, to] {
            if !vars.iter().any(|v| v.name == name) {
                return Err(line.error(name, format!("unknown variable `{name}`")));
            }
        }
        if let Some(first) = seen.insert((from, to), line.number) {
            return Err(line.error(from, format!("edge {from} -> {to} already listed at line {first}")));
        }
        edges.push((from.to_string(), to.to_string()));
    }
    Ok(edges)
}

fn graph_from_sections(secs: &[Section<'_>]) -> Result<CausalDag> {
    let vars_sec = find_unique(secs, "variables")?
        .ok_or_else(|| missing_section(secs, "variables"))?;
    let vars = parse_variables(vars_sec)?;
    let edges = match find_unique(secs, "edges")? {
        Some(s) => parse_edges(s, &vars)?,
        None => Vec::new(),
    };
    CausalDag::new(vars, &edges)
}

fn find_unique<'s, 'a>(secs: &'s [Section<'a>], name: &str) -> Result<Option<&'s Section<'a>>> {
    let mut found: Option<&Section<'_>> = None;
    for s in secs.iter().filter(|s| s.name == name) {
        if let Some(first) = found {
            return Err(s.header.error(
                s.header.text,
                format!("section [{name}] repeated (first at line {})", first.header.number),
            ));
        }
        if let Some(arg) = s.argument {
            return Err(s.header.error(arg, format!("section [{name}] takes no argument")));
        }
        found = Some(s);
    }
    Ok(found)
}

fn missing_section(secs: &[Section<'_>], name: &str) -> Error {
    let line = secs.first().map_or(0, |s| s.header.number);
    Error::Parse {
        line,
        column: 1,
        message: format!("missing [{name}] section"),
    }
}

fn check_known_sections(secs: &[Section<'_>], allowed: &[&str]) -> Result<()> {
    for s in secs {
        if !allowed.contains(&s.name) {
            return Err(s.header.error(s.name, format!("unknown section [{}]", s.name)));
        }
    }
    Ok(())
}

/// Parses a `[variables]` / `[edges]` document.
pub fn parse_graph(text: &str) -> Result<CausalDag> {
    let secs = sections(text)?;
    check_known_sections(&secs, &["variables", "edges"])?;
    graph_from_sections(&secs)
}

pub fn serialize_graph(dag: &CausalDag) -> String {
    let mut out = String::from("[variables]\n");
    for var in dag.variables() {
        let _ = writeln!(out, "{}: {}", var.name, var.domain.values().join(","));
    }
    out.push_str("\n[edges]\n");
    for (from, to) in dag.edges() {
        let _ = writeln!(out, "{} -> {}", dag.name(from), dag.name(to));
    }
    out
}

pub fn parse_model(text: &str) -> Result<DiscreteScm> {
    Ok(parse_model_document(text)?.model)
}

pub fn parse_model_document(text: &str) -> Result<ModelDocument> {
    let secs = sections(text)?;
    check_known_sections(&secs, &["variables", "edges", "mechanism", "metadata"])?;
    let dag = graph_from_sections(&secs)?;

    let mut metadata = BTreeMap::new();
    if let Some(meta) = find_unique(&secs, "metadata")? {
        for line in &meta.body {
            let (k, v) = split_once_trim(line, line.text, ":", "a metadata entry")?;
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(line.error(k, "metadata keys are single words"));
            }
            if metadata.insert(k.to_string(), v.to_string()).is_some() {
                return Err(line.error(k, format!("metadata key `{k}` repeated")));
            }
        }
    }

    let mut mechanisms: Vec<Option<(TabularMechanism, NoiseSpec)>> = vec![None; dag.len()];
    let mut headers: Vec<usize> = vec![0; dag.len()];
    for s in secs.iter().filter(|s| s.name == "mechanism") {
        let name = s
            .argument
            .ok_or_else(|| s.header.error(s.header.text, "mechanism section needs a variable name"))?;
        let v = dag.id(name).map_err(|e| s.header.error(name, e.to_string()))?;
        if mechanisms[v].is_some() {
            return Err(s.header.error(
                name,
                format!("mechanism of `{name}` repeated (first at line {})", headers[v]),
            ));
        }
        headers[v] = s.header.number;
        mechanisms[v] = Some(parse_mechanism(s, &dag, v)?);
    }
    let missing: Vec<&str> = (0..dag.len())
        .filter(|&v| mechanisms[v].is_none())
        .map(|v| dag.name(v))
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidModel(
            missing.iter().map(|n| format!("no mechanism section for `{n}`")).collect(),
        ));
    }
    let (tables, noises): (Vec<_>, Vec<_>) = mechanisms.into_iter().map(|m| m.expect("checked")).unzip();
    let model = DiscreteScm::new(dag, tables, noises)?;
    Ok(ModelDocument { model, metadata })
}

fn parse_mechanism(section: &Section<'_>, dag: &CausalDag, v: usize) -> Result<(TabularMechanism, NoiseSpec)> {
    let mut lines = section.body.iter();
    let first = lines.next().ok_or_else(|| {
        section
            .header
            .error(section.header.text, "mechanism section needs a `noise:` line")
    })?;
    let (key, probs) = split_once_trim(first, first.text, ":", "the noise line")?;
    if key != "noise" {
        return Err(first.error(key, "expected `noise: p1,p2,...` as the first line"));
    }
    let mut probabilities = Vec::new();
    for token in probs.split(',') {
        let token = token.trim();
        probabilities.push(parse_rational(token).map_err(|e| first.error(token, e.to_string()))?);
    }
    let noise = NoiseSpec::new(probabilities);
    let parents = dag.parents(v);
    let mut rows: Vec<Vec<Option<usize>>> = vec![vec![None; noise.len()]; dag.parent_space(v)];
    let mut origin: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for line in lines {
        let (lhs, rhs) = split_once_trim(line, line.text, "->", "a mechanism row")?;
        let out = dag
            .value_index(v, rhs)
            .map_err(|_| line.error(rhs, format!("value `{rhs}` is not in the domain of `{}`", dag.name(v))))?;
        let mut values: Vec<Option<usize>> = vec![None; parents.len()];
        let mut noise_index = None;
        for item in lhs.split(',') {
            let item = item.trim();
            let (name, value) = split_once_trim(line, item, "=", "an assignment")?;
            if name == "noise" {
                if noise_index.is_some() {
                    return Err(line.error(item, "noise assigned twice"));
                }
                let k: usize = value
                    .parse()
                    .map_err(|_| line.error(value, format!("noise index `{value}` is not a number")))?;
                if k >= noise.len() {
                    return Err(line.error(
                        value,
                        format!("noise index {k} is outside the noise domain of size {}", noise.len()),
                    ));
                }
                noise_index = Some(k);
                continue;
            }
            let p = dag.id(name).map_err(|e| line.error(name, e.to_string()))?;
            let slot = parents
                .iter()
                .position(|&q| q == p)
                .ok_or_else(|| line.error(name, format!("`{name}` is not a parent of `{}`", dag.name(v))))?;
            if values[slot].is_some() {
                return Err(line.error(name, format!("`{name}` assigned twice")));
            }
            values[slot] = Some(dag.value_index(p, value).map_err(|e| line.error(value, e.to_string()))?);
        }
        let noise_index = noise_index.ok_or_else(|| line.error(lhs, "row does not assign `noise`"))?;
        if let Some(slot) = values.iter().position(Option::is_none) {
            return Err(line.error(lhs, format!("row does not assign parent `{}`", dag.name(parents[slot]))));
        }
        let pos = values
            .iter()
            .zip(parents)
            .fold(0, |acc, (x, &p)| acc * dag.cardinality(p) + x.expect("checked"));
        if let Some(first) = origin.insert((pos, noise_index), line.number) {
            return Err(line.error(lhs, format!("duplicate row at lines {first} and {}", line.number)));
        }
        rows[pos][noise_index] = Some(out);
    }
    Ok((TabularMechanism { rows }, noise))
}

/// Canonical text: variables in declaration order, edges sorted, every row listed.
pub fn serialize_model(model: &DiscreteScm, metadata: &BTreeMap<String, String>) -> String {
    let dag = model.dag();
    let mut out = serialize_graph(dag);
    for v in 0..dag.len() {
        let noise = model.noise(v);
        let probs: Vec<String> = noise.probabilities.iter().map(format_rational).collect();
        let _ = write!(out, "\n[mechanism {}]\nnoise: {}\n", dag.name(v), probs.join(","));
        let mech = model.mechanism(v);
        for pos in 0..dag.parent_space(v) {
            let pa = dag.parent_assignment(v, pos);
            let prefix: String = dag
                .parents(v)
                .iter()
                .zip(&pa)
                .map(|(&p, &x)| format!("{}={}, ", dag.name(p), dag.variable(p).domain.value(x)))
                .collect();
            for n in 0..noise.len() {
                if let Some(x) = mech.rows.get(pos).and_then(|r| r.get(n)).copied().flatten() {
                    let _ = writeln!(out, "{prefix}noise={n} -> {}", dag.variable(v).domain.value(x));
                }
            }
        }
    }
    if !metadata.is_empty() {
        out.push_str("\n[metadata]\n");
        for (k, v) in metadata {
            let _ = writeln!(out, "{k}: {v}");
        }
    }
    out
}

pub fn parse_observation(text: &str) -> Result<ExactDistribution> {
    let secs = sections(text)?;
    check_known_sections(&secs, &["variables", "rows"])?;
    let vars_sec = find_unique(&secs, "variables")?.ok_or_else(|| missing_section(&secs, "variables"))?;
    let vars = parse_variables(vars_sec)?;
    let rows_sec = find_unique(&secs, "rows")?.ok_or_else(|| missing_section(&secs, "rows"))?;
    let mut entries: BTreeMap<Vec<usize>, (Rational, usize)> = BTreeMap::new();
    for line in &rows_sec.body {
        let tokens: Vec<&str> = line.text.split_whitespace().collect();
        if tokens.len() != vars.len() + 1 {
            return Err(line.error(
                line.text,
                format!("expected {} values and a probability, found {} fields", vars.len(), tokens.len()),
            ));
        }
        let mut assignment = Vec::with_capacity(vars.len());
        for (var, tok) in vars.iter().zip(&tokens) {
            let idx = var
                .domain
                .index_of(tok)
                .ok_or_else(|| line.error(tok, format!("value `{tok}` is not in the domain of `{}`", var.name)))?;
            assignment.push(idx);
        }
        let ptok = tokens[vars.len()];
        let p = parse_rational(ptok).map_err(|e| line.error(ptok, e.to_string()))?;
        if p.is_negative() {
            return Err(line.error(ptok, "probability is negative"));
        }
        if let Some((_, first)) = entries.get(&assignment) {
            return Err(line.error(
                line.text,
                format!("duplicate row at lines {first} and {}", line.number),
            ));
        }
        entries.insert(assignment, (p, line.number));
    }
    let total = sum(entries.values().map(|(p, _)| p));
    if total != Rational::one() {
        let diff = Rational::one() - &total;
        let detail = if diff.is_positive() {
            format!("deficit {}", format_rational(&diff))
        } else {
            format!("excess {}", format_rational(&-diff))
        };
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {} ({detail})",
            format_rational(&total)
        )));
    }
    ExactDistribution::new(
        vars,
        entries.into_iter().filter(|(_, (p, _))| !p.is_zero()).map(|(a, (p, _))| (a, p)),
    )
}

pub fn serialize_observation(dist: &ExactDistribution) -> String {
    let mut out = String::from("[variables]\n");
    for var in dist.variables() {
        let _ = writeln!(out, "{}: {}", var.name, var.domain.values().join(","));
    }
    out.push_str("\n[rows]\n");
    for (assignment, p) in dist.support() {
        let values: Vec<&str> = dist
            .variables()
            .iter()
            .zip(assignment)
            .map(|(var, &x)| var.domain.value(x))
            .collect();
        let _ = writeln!(out, "{} {}", values.join(" "), format_rational(p));
    }
    out
}
