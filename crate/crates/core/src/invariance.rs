//! Almost-sure, distributional and functional counterfactual invariance.
//!
//! * almost sure: `Y(z) = Y(z')` with probability one for every pair; the degree is the
//!   minimum over ordered pairs of `P(Y(z) = Y(z'))`.
//! * distributional given `W`: `P(Y(z)=y | W=w, Z=z) = P(Y(z')=y | W=w, Z=z)` on every
//!   cell with positive probability; the gap is the largest absolute difference.
//! * functional: `f(X)` is almost surely invariant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::descendants;
use crate::rational::{format_rational, Rational};
use crate::scm::{assignments, DiscreteScm, FiniteDomain, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Notion {
    AlmostSure,
    Distributional,
    Functional,
}

impl fmt::Display for Notion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Notion::AlmostSure => "almost-sure",
            Notion::Distributional => "distributional",
            Notion::Functional => "functional",
        })
    }
}

/// Evidence that an invariance notion fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// A positive-probability noise tuple on which the two interventions disagree.
    Noise {
        z: usize,
        z_prime: usize,
        noise: Vec<usize>,
    },
    /// A conditioning cell whose two conditionals differ.
    Cell {
        z: usize,
        z_prime: usize,
        y: usize,
        w: Vec<usize>,
    },
}

/// Outcome of one invariance check.
///
/// `value` is the degree for the almost-sure and functional notions (holds iff it is 1)
/// and the gap for the distributional notion (holds iff it is 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceReport {
    pub notion: Notion,
    pub value: Rational,
    pub holds: bool,
    pub witness: Option<Witness>,
}

/// A total function from the joint domain of `inputs` to `codomain`.
///
/// `table` is indexed by input assignments in lexicographic order (first input most
/// significant), holding codomain value indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpec {
    pub inputs: Vec<String>,
    pub codomain: FiniteDomain,
    pub table: Vec<usize>,
}

impl FunctionSpec {
    pub fn new(inputs: Vec<String>, codomain: FiniteDomain, table: Vec<usize>) -> Self {
        Self { inputs, codomain, table }
    }

    pub fn constant(inputs: Vec<String>, codomain: FiniteDomain, space: usize, value: usize) -> Self {
        Self::new(inputs, codomain, vec![value; space])
    }

    /// Builds the table from a closure over input value indices.
    pub fn from_fn(model: &DiscreteScm, inputs: &[&str], codomain: FiniteDomain, f: impl Fn(&[usize]) -> usize) -> Result<Self> {
        let ids = model.dag().ids(inputs)?;
        let cards: Vec<usize> = ids.iter().map(|&v| model.dag().cardinality(v)).collect();
        let table = assignments(&cards).iter().map(|a| f(a)).collect();
        Ok(Self::new(inputs.iter().map(|s| s.to_string()).collect(), codomain, table))
    }

    /// Resolves inputs against the model and checks totality.
    fn resolve(&self, model: &DiscreteScm) -> Result<(Vec<usize>, Vec<usize>)> {
        let ids = model.dag().ids(&self.inputs)?;
        let cards: Vec<usize> = ids.iter().map(|&v| model.dag().cardinality(v)).collect();
        let space: usize = cards.iter().product();
        if self.table.len() != space {
            return Err(Error::InvalidArgument(format!(
                "function is not total: table has {} entries, input space has {space}",
                self.table.len()
            )));
        }
        if let Some(bad) = self.table.iter().find(|&&x| x >= self.codomain.len()) {
            return Err(Error::InvalidArgument(format!("function output index {bad} is outside the codomain")));
        }
        Ok((ids, cards))
    }

    /// Table rendered as digit strings of codomain values, e.g. `0,1,1,0`.
    pub fn render(&self) -> String {
        self.table.iter().map(|&i| self.codomain.value(i)).collect::<Vec<_>>().join(",")
    }
}

fn position_of(world: &[usize], ids: &[usize], cards: &[usize]) -> usize {
    ids.iter().zip(cards).fold(0, |acc, (&v, &c)| acc * c + world[v])
}

fn check_distinct(model: &DiscreteScm, target: usize, intervened: usize) -> Result<()> {
    if target == intervened {
        return Err(Error::InvalidArgument(format!(
            "target and intervened variable are both `{}`",
            model.dag().name(target)
        )));
    }
    Ok(())
}

fn interventions(model: &DiscreteScm, z: usize) -> Vec<Vec<Option<usize>>> {
    (0..model.dag().cardinality(z))
        .map(|x| {
            let mut iv = vec![None; model.len()];
            iv[z] = Some(x);
            iv
        })
        .collect()
}

/// Min over ordered pairs of `P(g(z) = g(z'))` where `g(z)` is computed per noise tuple.
fn pairwise_degree(model: &DiscreteScm, z: usize, mut g: impl FnMut(&[usize]) -> usize) -> (Rational, Option<Witness>) {
    let k = model.dag().cardinality(z);
    let ivs = interventions(model, z);
    let mut agree = vec![vec![Rational::zero(); k]; k];
    let mut first_disagreement: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    model.for_each_noise(|noise, w| {
        let outs: Vec<usize> = ivs.iter().map(|iv| g(&model.evaluate(noise, iv))).collect();
        for a in 0..k {
            for b in a + 1..k {
                if outs[a] == outs[b] {
                    agree[a][b] += w;
                } else {
                    first_disagreement.entry((a, b)).or_insert_with(|| noise.to_vec());
                }
            }
        }
    });
    let mut best = Rational::one();
    let mut pair = None;
    for a in 0..k {
        for b in a + 1..k {
            if agree[a][b] < best {
                best = agree[a][b].clone();
                pair = Some((a, b));
            }
        }
    }
    let witness = pair.map(|(a, b)| Witness::Noise {
        z: a,
        z_prime: b,
        noise: first_disagreement[&(a, b)].clone(),
    });
    (best, witness)
}

/// Almost-sure invariance of `target` under interventions on `intervened`.
pub fn as_ci_report(model: &DiscreteScm, target: &str, intervened: &str) -> Result<InvarianceReport> {
    let y = model.id(target)?;
    let z = model.id(intervened)?;
    check_distinct(model, y, z)?;
    let (value, witness) = pairwise_degree(model, z, |world| world[y]);
    Ok(InvarianceReport {
        notion: Notion::AlmostSure,
        holds: value.is_one(),
        value,
        witness,
    })
}

/// `min_{z, z'} P(Y(z) = Y(z'))`; equals one exactly when `target` is almost surely invariant.
pub fn as_ci_degree(model: &DiscreteScm, target: &str, intervened: &str) -> Result<Rational> {
    Ok(as_ci_report(model, target, intervened)?.value)
}

/// Result of a distributional check, including cells skipped for having probability zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DciReport {
    pub gap: Rational,
    pub witness: Option<Witness>,
    /// Levels `z` with `P(Z = z) = 0`.
    pub skipped_levels: Vec<usize>,
    /// Cells `(z, w)` with `P(Z = z) > 0` but `P(W = w, Z = z) = 0`.
    pub skipped_cells: Vec<(usize, Vec<usize>)>,
}

impl DciReport {
    pub fn holds(&self) -> bool {
        self.gap.is_zero()
    }

    pub fn to_report(&self) -> InvarianceReport {
        InvarianceReport {
            notion: Notion::Distributional,
            value: self.gap.clone(),
            holds: self.holds(),
            witness: self.witness.clone(),
        }
    }
}

/// Largest `|P(Y(z)=y | W=w, Z=z) − P(Y(z')=y | W=w, Z=z)|` over positive cells.
///
/// `conditioning` may contain the target but not the intervened variable.
pub fn dci_gap<S: AsRef<str>>(model: &DiscreteScm, target: &str, intervened: &str, conditioning: &[S]) -> Result<DciReport> {
    let y = model.id(target)?;
    let z = model.id(intervened)?;
    check_distinct(model, y, z)?;
    let w_ids = model.dag().ids(conditioning)?;
    if w_ids.contains(&z) {
        return Err(Error::InvalidArgument(format!(
            "conditioning set may not contain the intervened variable `{intervened}`"
        )));
    }
    if w_ids.iter().enumerate().any(|(i, v)| w_ids[..i].contains(v)) {
        return Err(Error::InvalidArgument("conditioning set lists a variable twice".into()));
    }
    let kz = model.dag().cardinality(z);
    let ky = model.dag().cardinality(y);
    let ivs = interventions(model, z);
    // (factual z, w) -> (denominator, numerators[z'][y])
    let mut cells: BTreeMap<(usize, Vec<usize>), (Rational, Vec<Vec<Rational>>)> = BTreeMap::new();
    let mut pz = vec![Rational::zero(); kz];
    let none = vec![None; model.len()];
    model.for_each_noise(|noise, p| {
        let factual = model.evaluate(noise, &none);
        let zf = factual[z];
        pz[zf] += p;
        let w: Vec<usize> = w_ids.iter().map(|&v| factual[v]).collect();
        let entry = cells
            .entry((zf, w))
            .or_insert_with(|| (Rational::zero(), vec![vec![Rational::zero(); ky]; kz]));
        entry.0 += p;
        for (zp, iv) in ivs.iter().enumerate() {
            let yv = if zp == zf { factual[y] } else { model.evaluate(noise, iv)[y] };
            entry.1[zp][yv] += p;
        }
    });
    let mut gap = Rational::zero();
    let mut witness = None;
    for ((zf, w), (den, nums)) in &cells {
        for zp in 0..kz {
            for yv in 0..ky {
                let diff = (&nums[*zf][yv] - &nums[zp][yv]).abs() / den;
                if diff > gap {
                    gap = diff;
                    witness = Some(Witness::Cell {
                        z: *zf,
                        z_prime: zp,
                        y: yv,
                        w: w.clone(),
                    });
                }
            }
        }
    }
    let skipped_levels: Vec<usize> = (0..kz).filter(|&x| pz[x].is_zero()).collect();
    let w_cards: Vec<usize> = w_ids.iter().map(|&v| model.dag().cardinality(v)).collect();
    let mut skipped_cells = Vec::new();
    for zf in (0..kz).filter(|&x| pz[x].is_positive()) {
        for w in assignments(&w_cards) {
            if !cells.contains_key(&(zf, w.clone())) {
                skipped_cells.push((zf, w));
            }
        }
    }
    Ok(DciReport {
        gap,
        witness,
        skipped_levels,
        skipped_cells,
    })
}

/// Functional invariance of `f` by direct noise enumeration.
pub fn is_fci(model: &DiscreteScm, f: &FunctionSpec, intervened: &str) -> Result<InvarianceReport> {
    let (ids, cards) = f.resolve(model)?;
    let z = model.id(intervened)?;
    let (value, witness) = pairwise_degree(model, z, |world| f.table[position_of(world, &ids, &cards)]);
    Ok(InvarianceReport {
        notion: Notion::Functional,
        holds: value.is_one(),
        value,
        witness,
    })
}

/// Degree of functional invariance via a deterministic child `f(X)` appended to the model.
pub fn fci_degree_by_augmentation(model: &DiscreteScm, f: &FunctionSpec, intervened: &str) -> Result<Rational> {
    let (ids, cards) = f.resolve(model)?;
    let mut name = String::from("f_hat");
    while model.id(&name).is_ok() {
        name.push('_');
    }
    let var = Variable::new(name.clone(), f.codomain.clone())?;
    let parents = sorted(&ids);
    let augmented = model.with_deterministic_variable(var, &parents, |pa| {
        // `pa` follows index order; the table follows `f.inputs` order.
        let by_index: BTreeMap<usize, usize> = parents.iter().copied().zip(pa.iter().copied()).collect();
        let world: Vec<usize> = (0..model.len()).map(|v| by_index.get(&v).copied().unwrap_or(0)).collect();
        f.table[position_of(&world, &ids, &cards)]
    })?;
    as_ci_degree(&augmented, &name, intervened)
}

fn sorted(ids: &[usize]) -> Vec<usize> {
    let set: BTreeSet<usize> = ids.iter().copied().collect();
    set.into_iter().collect()
}

/// All functional-invariant functions over `inputs`, found by exhaustive scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FciEnumeration {
    pub functions: Vec<FunctionSpec>,
    /// Per returned function: whether it ignores every input that descends from Z.
    pub factors_through_nd: Vec<bool>,
    /// Inputs that are not descendants of the intervened variable.
    pub nd_inputs: Vec<String>,
    /// Number of functions scanned.
    pub scanned: u64,
}

impl FciEnumeration {
    /// True iff every invariant function is a function of the non-descendant inputs.
    pub fn all_factor_through_nd(&self) -> bool {
        self.factors_through_nd.iter().all(|&b| b)
    }

    /// Number of functions of the non-descendant inputs alone.
    pub fn nd_function_count(&self, model: &DiscreteScm) -> Result<u64> {
        let ids = model.dag().ids(&self.nd_inputs)?;
        let space: usize = ids.iter().map(|&v| model.dag().cardinality(v)).product();
        let c = self.functions.first().map_or(1, |f| f.codomain.len()) as u64;
        Ok(c.pow(space as u32))
    }
}

/// Scans every function `inputs -> codomain` and keeps those with degree one.
///
/// A function has degree one iff it agrees on every pair of input assignments that some
/// positive-probability noise tuple realizes under two different interventions, so each
/// candidate is checked against that finite pair set.
pub fn enumerate_fci_functions<S: AsRef<str>>(
    model: &DiscreteScm,
    inputs: &[S],
    codomain: &FiniteDomain,
    intervened: &str,
    limit: u64,
) -> Result<FciEnumeration> {
    let names: Vec<String> = inputs.iter().map(|s| s.as_ref().to_string()).collect();
    let ids = model.dag().ids(&names)?;
    let z = model.id(intervened)?;
    if ids.contains(&z) {
        return Err(Error::InvalidArgument("inputs may not contain the intervened variable".into()));
    }
    let cards: Vec<usize> = ids.iter().map(|&v| model.dag().cardinality(v)).collect();
    let space: usize = cards.iter().product();
    let c = codomain.len() as u64;
    let count = u32::try_from(space)
        .ok()
        .and_then(|s| c.checked_pow(s))
        .filter(|&n| n <= limit)
        .ok_or_else(|| Error::ResourceLimit {
            what: "candidate functions".into(),
            required: format!("{c}^{space}"),
            limit,
        })?;

    let ivs = interventions(model, z);
    let mut links: BTreeSet<(usize, usize)> = BTreeSet::new();
    model.for_each_noise(|noise, _| {
        let pos: Vec<usize> = ivs.iter().map(|iv| position_of(&model.evaluate(noise, iv), &ids, &cards)).collect();
        for &p in &pos[1..] {
            if p != pos[0] {
                links.insert((pos[0].min(p), pos[0].max(p)));
            }
        }
    });

    let de = descendants(model.dag(), z);
    let de_slots: Vec<usize> = (0..ids.len()).filter(|&i| de.contains(&ids[i])).collect();
    let nd_inputs: Vec<String> = (0..ids.len())
        .filter(|i| !de_slots.contains(i))
        .map(|i| names[i].clone())
        .collect();
    let all = assignments(&cards);

    let mut functions = Vec::new();
    let mut factors = Vec::new();
    let mut table = vec![0usize; space];
    for index in 0..count {
        let mut rest = index;
        for cell in table.iter_mut() {
            *cell = (rest % c) as usize;
            rest /= c;
        }
        if links.iter().any(|&(a, b)| table[a] != table[b]) {
            continue;
        }
        let through_nd = all.iter().enumerate().all(|(pos, a)| {
            let mut base = a.clone();
            for &s in &de_slots {
                base[s] = 0;
            }
            let base_pos = base.iter().zip(&cards).fold(0, |acc, (&x, &k)| acc * k + x);
            table[pos] == table[base_pos]
        });
        functions.push(FunctionSpec::new(names.clone(), codomain.clone(), table.clone()));
        factors.push(through_nd);
    }
    Ok(FciEnumeration {
        functions,
        factors_through_nd: factors,
        nd_inputs,
        scanned: count,
    })
}

/// Per-model check of the implications between the almost-sure and distributional notions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeReport {
    pub degree: Rational,
    pub gaps: Vec<(Vec<String>, Rational)>,
    pub pass: bool,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

/// Checks (i) degree one implies gap zero for every supplied `W`, and (ii) gap zero for a
/// `W` containing the target implies degree one.
pub fn implication_lattice_check<S: AsRef<str>>(
    model: &DiscreteScm,
    target: &str,
    intervened: &str,
    conditioning_sets: &[Vec<S>],
) -> Result<LatticeReport> {
    let degree = as_ci_degree(model, target, intervened)?;
    let mut gaps = Vec::new();
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    for set in conditioning_sets {
        let names: Vec<String> = set.iter().map(|s| s.as_ref().to_string()).collect();
        let report = dci_gap(model, target, intervened, &names)?;
        let label = format!("{{{}}}", names.join(", "));
        if degree.is_one() && !report.gap.is_zero() {
            violations.push(format!(
                "almost-sure invariance holds but the gap given {label} is {}",
                format_rational(&report.gap)
            ));
        }
        let contains_target = names.iter().any(|n| n == target);
        if contains_target && report.gap.is_zero() && !degree.is_one() {
            violations.push(format!(
                "gap given {label} is 0 but the almost-sure degree is {}",
                format_rational(&degree)
            ));
        }
        if report.gap.is_zero() && !degree.is_one() {
            notes.push(format!(
                "distributional invariance given {label} without almost-sure invariance (degree {})",
                format_rational(&degree)
            ));
        }
        gaps.push((names, report.gap));
    }
    Ok(LatticeReport {
        degree,
        gaps,
        pass: violations.is_empty(),
        violations,
        notes,
    })
}
