//! Clausal knowledge bases and the restriction-closed proof engines used to
//! decide "t provable under rho" and "not-c provable under rho".
//!
//! Every engine starts from the observed cells of `rho` as unit facts and
//! works on `KB|rho`. A derived empty clause is reported as
//! [`Derivation::Contradiction`]; callers treat that as proving everything.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, Literal, Term, TriValue};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("line {line}: attribute x{} appears twice in one clause", .attr + 1)]
    RepeatedAttribute { line: usize, attr: usize },
    #[error("line {line}: attribute x{} is outside the {n} known attributes", .attr + 1)]
    AttributeOutOfRange { line: usize, attr: usize, n: usize },
    #[error("line {line}: cannot read literal `{text}`")]
    BadLiteral { line: usize, text: String },
}

/// Disjunction of literals over distinct attributes, sorted. Empty means false.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Clause(Vec<Literal>);

impl Clause {
    pub fn new(mut literals: Vec<Literal>) -> Result<Self, KbError> {
        literals.sort_unstable();
        literals.dedup();
        if let Some(w) = literals.windows(2).find(|w| w[0].attr == w[1].attr) {
            return Err(KbError::RepeatedAttribute { line: 0, attr: w[0].attr });
        }
        Ok(Clause(literals))
    }

    pub fn literals(&self) -> &[Literal] {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.0.iter().any(|l| l.eval(assignment))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// A CNF knowledge base over `n` attributes, canonically sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    clauses: Vec<Clause>,
    n: usize,
}

impl KnowledgeBase {
    pub fn new(n: usize, clauses: impl IntoIterator<Item = Clause>) -> Result<Self, KbError> {
        let mut clauses: Vec<Clause> = clauses.into_iter().collect();
        for c in &clauses {
            if let Some(l) = c.0.iter().find(|l| l.attr >= n) {
                return Err(KbError::AttributeOutOfRange { line: 0, attr: l.attr, n });
            }
        }
        clauses.sort_unstable();
        clauses.dedup();
        Ok(KnowledgeBase { clauses, n })
    }

    pub fn empty(n: usize) -> Self {
        KnowledgeBase { clauses: Vec::new(), n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.eval(assignment))
    }

    /// Reads the line format: one clause per line, literals `x3` / `~x3`
    /// joined by `|`; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, n: usize) -> Result<Self, KbError> {
        let mut clauses = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut lits = Vec::new();
            for piece in body.split('|') {
                let lit = parse_literal(piece.trim())
                    .ok_or_else(|| KbError::BadLiteral { line, text: String::from(piece.trim()) })?;
                if lit.attr >= n {
                    return Err(KbError::AttributeOutOfRange { line, attr: lit.attr, n });
                }
                lits.push(lit);
            }
            let clause = Clause::new(lits).map_err(|e| match e {
                KbError::RepeatedAttribute { attr, .. } => KbError::RepeatedAttribute { line, attr },
                other => other,
            })?;
            clauses.push(clause);
        }
        KnowledgeBase::new(n, clauses)
    }
}

fn parse_literal(s: &str) -> Option<Literal> {
    let (negated, rest) = match s.strip_prefix('~') {
        Some(r) => (true, r.trim_start()),
        None => (false, s),
    };
    let digits = rest.strip_prefix('x').or_else(|| rest.strip_prefix('X'))?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let index: usize = digits.parse().ok()?;
    let attr = index.checked_sub(1)?;
    Some(Literal { attr, negated })
}

impl fmt::Display for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Which derivations are allowed on top of the observed cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProofEngine {
    /// Only what `rho` observes; the KB is ignored.
    WitnessedOnly,
    /// Unit propagation over `KB|rho` to fixpoint.
    #[default]
    UnitPropagation,
    /// Unit propagation interleaved with saturation under resolvents of width `<= width`.
    BoundedResolution { width: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unknown engine `{0}` (expected witnessed, unitprop or resolution:W with W >= 1)")]
pub struct EngineParseError(pub String);

impl FromStr for ProofEngine {
    type Err = EngineParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || EngineParseError(String::from(s));
        match s {
            "witnessed" => Ok(ProofEngine::WitnessedOnly),
            "unitprop" => Ok(ProofEngine::UnitPropagation),
            _ => {
                let w = s.strip_prefix("resolution:").ok_or_else(err)?;
                let width: usize = w.parse().map_err(|_| err())?;
                if width == 0 {
                    return Err(err());
                }
                Ok(ProofEngine::BoundedResolution { width })
            }
        }
    }
}

impl fmt::Display for ProofEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProofEngine::WitnessedOnly => f.write_str("witnessed"),
            ProofEngine::UnitPropagation => f.write_str("unitprop"),
            ProofEngine::BoundedResolution { width } => write!(f, "resolution:{width}"),
        }
    }
}

/// Outcome of one derivation pass over a row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derivation {
    /// The row extended with derived literals. `rounds` counts propagation
    /// passes that assigned at least one new attribute.
    Assigned { values: Vec<TriValue>, rounds: usize },
    Contradiction,
}

impl Derivation {
    pub fn is_contradiction(&self) -> bool {
        matches!(self, Derivation::Contradiction)
    }

    pub fn values(&self) -> Option<&[TriValue]> {
        match self {
            Derivation::Assigned { values, .. } => Some(values),
            Derivation::Contradiction => None,
        }
    }

    pub fn proves_term(&self, t: &Term) -> bool {
        match self {
            Derivation::Assigned { values, .. } => t.satisfied_by(values),
            Derivation::Contradiction => true,
        }
    }

    /// `c` restricted by the derived assignment collapses to 0.
    pub fn proves_negation(&self, c: &Formula) -> bool {
        match self {
            Derivation::Assigned { values, .. } => c.restrict(values) == Formula::Const(false),
            Derivation::Contradiction => true,
        }
    }
}

pub fn derive_literals(kb: &KnowledgeBase, rho: &[TriValue], engine: ProofEngine) -> Derivation {
    assert_eq!(kb.n(), rho.len(), "knowledge base and example disagree on attribute count");
    let mut values = rho.to_vec();
    match engine {
        ProofEngine::WitnessedOnly => Derivation::Assigned { values, rounds: 0 },
        ProofEngine::UnitPropagation => {
            let clauses: Vec<&[Literal]> = kb.clauses().iter().map(|c| c.literals()).collect();
            match unit_propagate(&clauses, &mut values) {
                Some(rounds) => Derivation::Assigned { values, rounds },
                None => Derivation::Contradiction,
            }
        }
        ProofEngine::BoundedResolution { width } => bounded_resolution(kb, values, width),
    }
}

pub fn term_provable(kb: &KnowledgeBase, t: &Term, rho: &[TriValue], engine: ProofEngine) -> bool {
    derive_literals(kb, rho, engine).proves_term(t)
}

pub fn neg_query_provable(kb: &KnowledgeBase, c: &Formula, rho: &[TriValue], engine: ProofEngine) -> bool {
    derive_literals(kb, rho, engine).proves_negation(c)
}

/// Repeated passes asserting the free literal of every unit clause. Returns
/// the number of productive passes, or `None` on a falsified clause.
fn unit_propagate(clauses: &[&[Literal]], values: &mut [TriValue]) -> Option<usize> {
    let mut rounds = 0;
    loop {
        let mut changed = false;
        for clause in clauses {
            let mut free = None;
            let mut free_count = 0;
            let mut satisfied = false;
            for &l in clause.iter() {
                match l.value(values) {
                    TriValue::True => {
                        satisfied = true;
                        break;
                    }
                    TriValue::Unobserved => {
                        free_count += 1;
                        free = Some(l);
                    }
                    TriValue::False => {}
                }
            }
            if satisfied {
                continue;
            }
            match (free_count, free) {
                (0, _) => return None,
                (1, Some(l)) => {
                    values[l.attr] = TriValue::from_bool(!l.negated);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return Some(rounds);
        }
        rounds += 1;
    }
}

/// `clause|values`: `None` when satisfied, otherwise the unassigned literals.
fn restrict_clause(clause: &[Literal], values: &[TriValue]) -> Option<Vec<Literal>> {
    let mut out = Vec::with_capacity(clause.len());
    for &l in clause {
        match l.value(values) {
            TriValue::True => return None,
            TriValue::Unobserved => out.push(l),
            TriValue::False => {}
        }
    }
    Some(out)
}

/// Resolvent of two sorted clauses, if they clash on exactly one attribute.
fn resolve(a: &[Literal], b: &[Literal]) -> Option<Vec<Literal>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut clashes = 0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (x, y) = (a[i], b[j]);
        if x.attr < y.attr {
            out.push(x);
            i += 1;
        } else if y.attr < x.attr {
            out.push(y);
            j += 1;
        } else {
            if x.negated != y.negated {
                clashes += 1;
            } else {
                out.push(x);
            }
            i += 1;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    (clashes == 1).then_some(out)
}

/// Closes `clauses` under resolvents of width `<= width`. `None` if the empty
/// clause appears.
fn saturate(clauses: BTreeSet<Vec<Literal>>, width: usize) -> Option<Vec<Vec<Literal>>> {
    if clauses.iter().any(|c| c.is_empty()) {
        return None;
    }
    let mut seen = clauses.clone();
    let mut all: Vec<Vec<Literal>> = clauses.into_iter().collect();
    let mut by_literal: BTreeMap<Literal, Vec<usize>> = BTreeMap::new();
    let mut next = 0;
    while next < all.len() {
        let current = all[next].clone();
        // index first so that pairs are visited once, from the later clause
        for &l in &current {
            by_literal.entry(l).or_default().push(next);
        }
        for &l in &current {
            let Some(partners) = by_literal.get(&l.complement()) else { continue };
            let mut fresh = Vec::new();
            for &p in partners {
                if let Some(r) = resolve(&current, &all[p]) {
                    if r.is_empty() {
                        return None;
                    }
                    if r.len() <= width && !seen.contains(&r) {
                        seen.insert(r.clone());
                        fresh.push(r);
                    }
                }
            }
            all.extend(fresh);
        }
        next += 1;
    }
    Some(all)
}

fn bounded_resolution(kb: &KnowledgeBase, mut values: Vec<TriValue>, width: usize) -> Derivation {
    let mut learned: Vec<Vec<Literal>> = Vec::new();
    let mut rounds = 0;
    loop {
        let mut clauses: Vec<&[Literal]> = kb.clauses().iter().map(|c| c.literals()).collect();
        clauses.extend(learned.iter().map(Vec::as_slice));
        match unit_propagate(&clauses, &mut values) {
            Some(r) => rounds += r,
            None => return Derivation::Contradiction,
        }
        let restricted: BTreeSet<Vec<Literal>> =
            clauses.iter().filter_map(|c| restrict_clause(c, &values)).collect();
        let Some(saturated) = saturate(restricted, width) else {
            return Derivation::Contradiction;
        };
        let has_new_unit = saturated.iter().any(|c| c.len() == 1);
        if !has_new_unit {
            return Derivation::Assigned { values, rounds };
        }
        learned = saturated;
    }
}
