//! Propositional formulas over a fixed attribute universe, with restriction
//! to partial assignments and the syntactic "witnessed" check.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One cell of a partial example.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TriValue {
    False,
    True,
    Unobserved,
}

impl TriValue {
    pub fn from_bool(b: bool) -> Self {
        if b {
            TriValue::True
        } else {
            TriValue::False
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            TriValue::False => Some(false),
            TriValue::True => Some(true),
            TriValue::Unobserved => None,
        }
    }

    pub fn is_observed(self) -> bool {
        self != TriValue::Unobserved
    }

    /// Canonical text marker: `0`, `1` or `*`.
    pub fn to_char(self) -> char {
        match self {
            TriValue::False => '0',
            TriValue::True => '1',
            TriValue::Unobserved => '*',
        }
    }

    /// Accepts `0`, `1`, `*` and the alias `?`.
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(TriValue::False),
            '1' => Some(TriValue::True),
            '*' | '?' => Some(TriValue::Unobserved),
            _ => None,
        }
    }
}

impl fmt::Display for TriValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A possibly negated attribute. Ordered by attribute, positive before negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub attr: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(attr: usize) -> Self {
        Literal { attr, negated: false }
    }

    pub fn neg(attr: usize) -> Self {
        Literal { attr, negated: true }
    }

    pub fn complement(self) -> Self {
        Literal { attr: self.attr, negated: !self.negated }
    }

    /// Value of the literal under a tri-valued assignment.
    pub fn value(self, values: &[TriValue]) -> TriValue {
        match values[self.attr] {
            TriValue::Unobserved => TriValue::Unobserved,
            v => TriValue::from_bool((v == TriValue::True) != self.negated),
        }
    }

    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.attr] != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "~x{}", self.attr + 1)
        } else {
            write!(f, "x{}", self.attr + 1)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("a term needs at least one literal")]
    Empty,
    #[error("attribute x{} appears more than once in the term", .0 + 1)]
    RepeatedAttribute(usize),
}

/// Conjunction of literals in canonical (sorted) order, no attribute repeated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Literal>", into = "Vec<Literal>")]
pub struct Term {
    literals: Vec<Literal>,
}

impl Term {
    pub fn new(mut literals: Vec<Literal>) -> Result<Self, TermError> {
        if literals.is_empty() {
            return Err(TermError::Empty);
        }
        literals.sort_unstable();
        for w in literals.windows(2) {
            if w[0].attr == w[1].attr {
                return Err(TermError::RepeatedAttribute(w[0].attr));
            }
        }
        Ok(Term { literals })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn width(&self) -> usize {
        self.literals.len()
    }

    pub fn max_attr(&self) -> usize {
        // sorted by attribute
        self.literals[self.literals.len() - 1].attr
    }

    /// True iff every literal is assigned true.
    pub fn satisfied_by(&self, values: &[TriValue]) -> bool {
        self.literals.iter().all(|l| l.value(values) == TriValue::True)
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.literals.iter().all(|l| l.eval(assignment))
    }

    pub fn to_formula(&self) -> Formula {
        let lits: Vec<Formula> = self.literals.iter().map(|&l| Formula::literal(l)).collect();
        if lits.len() == 1 {
            lits.into_iter().next().unwrap()
        } else {
            Formula::And(lits)
        }
    }
}

impl TryFrom<Vec<Literal>> for Term {
    type Error = TermError;
    fn try_from(v: Vec<Literal>) -> Result<Self, Self::Error> {
        Term::new(v)
    }
}

impl From<Term> for Vec<Literal> {
    fn from(t: Term) -> Self {
        t.literals
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum KDnfError {
    #[error("term `{term}` has {width} literals, more than k = {k}")]
    TooWide { term: String, width: usize, k: usize },
    #[error("term `{0}` appears twice")]
    DuplicateTerm(String),
}

/// Disjunction of terms of width at most `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KDnf {
    terms: Vec<Term>,
    k: usize,
}

impl KDnf {
    pub fn new(terms: Vec<Term>, k: usize) -> Result<Self, KDnfError> {
        for (i, t) in terms.iter().enumerate() {
            if t.width() > k {
                return Err(KDnfError::TooWide { term: t.to_string(), width: t.width(), k });
            }
            if terms[..i].contains(t) {
                return Err(KDnfError::DuplicateTerm(t.to_string()));
            }
        }
        Ok(KDnf { terms, k })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.terms.iter().any(|t| t.eval(assignment))
    }

    pub fn to_formula(&self) -> Formula {
        match self.terms.len() {
            0 => Formula::Const(false),
            1 => self.terms[0].to_formula(),
            _ => Formula::Or(self.terms.iter().map(Term::to_formula).collect()),
        }
    }

    /// Reads a formula that is syntactically a DNF (a literal, a conjunction of
    /// literals, or a disjunction of those).
    pub fn from_formula(f: &Formula, k: usize) -> Result<Self, FormulaError> {
        fn literal_of(f: &Formula) -> Option<Literal> {
            match f {
                Formula::Var(a) => Some(Literal::pos(*a)),
                Formula::Not(inner) => match inner.as_ref() {
                    Formula::Var(a) => Some(Literal::neg(*a)),
                    _ => None,
                },
                _ => None,
            }
        }
        fn term_of(f: &Formula) -> Result<Term, FormulaError> {
            let lits = match f {
                Formula::And(parts) => parts
                    .iter()
                    .map(|p| literal_of(p).ok_or(FormulaError::NotDnf))
                    .collect::<Result<Vec<_>, _>>()?,
                other => alloc::vec![literal_of(other).ok_or(FormulaError::NotDnf)?],
            };
            Term::new(lits).map_err(FormulaError::Term)
        }
        let terms = match f {
            Formula::Const(false) => Vec::new(),
            Formula::Or(parts) => parts.iter().map(term_of).collect::<Result<Vec<_>, _>>()?,
            other => alloc::vec![term_of(other)?],
        };
        KDnf::new(terms, k).map_err(FormulaError::KDnf)
    }
}

impl fmt::Display for KDnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            if t.width() > 1 && self.terms.len() > 1 {
                write!(f, "({t})")?;
            } else {
                write!(f, "{t}")?;
            }
        }
        Ok(())
    }
}

/// Result of restricting a formula and checking whether it collapsed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessStatus {
    WitnessedTrue,
    WitnessedFalse,
    NotWitnessed,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: &'static str },
    #[error("unbalanced parenthesis opened at offset {offset}")]
    Unbalanced { offset: usize },
    #[error("attribute x{} at offset {offset} is outside the {n} known attributes", .attr + 1)]
    AttributeOutOfRange { attr: usize, n: usize, offset: usize },
    #[error("attribute x{} is unobserved in a total assignment", .0 + 1)]
    Unobserved(usize),
    #[error("formula is not a disjunction of conjunctions of literals")]
    NotDnf,
    #[error(transparent)]
    Term(TermError),
    #[error(transparent)]
    KDnf(KDnfError),
}

/// Formula AST. Conjunction and disjunction are n-ary.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Const(bool),
    Var(usize),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn literal(l: Literal) -> Formula {
        if l.negated {
            Formula::Not(Box::new(Formula::Var(l.attr)))
        } else {
            Formula::Var(l.attr)
        }
    }

    pub fn negate(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Var(_) => 1,
            Formula::Not(g) => 1 + g.size(),
            Formula::And(gs) | Formula::Or(gs) => 1 + gs.iter().map(Formula::size).sum::<usize>(),
        }
    }

    /// Largest attribute index mentioned, if any.
    pub fn max_attr(&self) -> Option<usize> {
        match self {
            Formula::Const(_) => None,
            Formula::Var(a) => Some(*a),
            Formula::Not(g) => g.max_attr(),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().filter_map(Formula::max_attr).max(),
        }
    }

    /// Collects the attributes mentioned, sorted and deduplicated.
    pub fn attributes(&self) -> Vec<usize> {
        fn walk(f: &Formula, out: &mut Vec<usize>) {
            match f {
                Formula::Const(_) => {}
                Formula::Var(a) => out.push(*a),
                Formula::Not(g) => walk(g, out),
                Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| walk(g, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `f|rho`: substitutes observed values and propagates constants. Unobserved
    /// variables stay free. Single pass, linear in the size of the formula.
    pub fn restrict(&self, rho: &[TriValue]) -> Formula {
        match self {
            Formula::Const(b) => Formula::Const(*b),
            Formula::Var(a) => match rho[*a] {
                TriValue::Unobserved => Formula::Var(*a),
                v => Formula::Const(v == TriValue::True),
            },
            Formula::Not(g) => match g.restrict(rho) {
                Formula::Const(b) => Formula::Const(!b),
                other => Formula::Not(Box::new(other)),
            },
            Formula::And(gs) => restrict_nary(gs, rho, false),
            Formula::Or(gs) => restrict_nary(gs, rho, true),
        }
    }

    pub fn witness_status(&self, rho: &[TriValue]) -> WitnessStatus {
        match self.restrict(rho) {
            Formula::Const(true) => WitnessStatus::WitnessedTrue,
            Formula::Const(false) => WitnessStatus::WitnessedFalse,
            _ => WitnessStatus::NotWitnessed,
        }
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Var(a) => assignment[*a],
            Formula::Not(g) => !g.eval(assignment),
            Formula::And(gs) => gs.iter().all(|g| g.eval(assignment)),
            Formula::Or(gs) => gs.iter().any(|g| g.eval(assignment)),
        }
    }

    /// Evaluates on a fully observed tri-valued row; any `*` is an error.
    pub fn eval_total(&self, assignment: &[TriValue]) -> Result<bool, FormulaError> {
        let total = assignment
            .iter()
            .enumerate()
            .map(|(i, v)| v.as_bool().ok_or(FormulaError::Unobserved(i)))
            .collect::<Result<Vec<bool>, _>>()?;
        Ok(self.eval(&total))
    }
}

/// Shared body of conjunction (`absorbing = false`) and disjunction
/// (`absorbing = true`) restriction.
fn restrict_nary(children: &[Formula], rho: &[TriValue], absorbing: bool) -> Formula {
    let mut kept = Vec::with_capacity(children.len());
    for g in children {
        match g.restrict(rho) {
            Formula::Const(b) if b == absorbing => return Formula::Const(absorbing),
            Formula::Const(_) => {}
            other => kept.push(other),
        }
    }
    match kept.len() {
        0 => Formula::Const(!absorbing),
        1 => kept.pop().unwrap(),
        _ if absorbing => Formula::Or(kept),
        _ => Formula::And(kept),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_child(f: &mut fmt::Formatter<'_>, g: &Formula) -> fmt::Result {
            match g {
                Formula::And(gs) | Formula::Or(gs) if gs.len() > 1 => write!(f, "({g})"),
                _ => write!(f, "{g}"),
            }
        }
        match self {
            Formula::Const(b) => write!(f, "{}", if *b { 1 } else { 0 }),
            Formula::Var(a) => write!(f, "x{}", a + 1),
            Formula::Not(g) => {
                f.write_str("~")?;
                write_child(f, g)
            }
            Formula::And(gs) | Formula::Or(gs) => {
                let (op, unit) = if matches!(self, Formula::And(_)) { (" & ", "1") } else { (" | ", "0") };
                if gs.is_empty() {
                    return f.write_str(unit);
                }
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write_child(f, g)?;
                }
                Ok(())
            }
        }
    }
}

/// Parses the expression grammar
///
/// ```text
/// disj  := conj ('|' conj)*
/// conj  := unary ('&' unary)*
/// unary := '~' unary | atom
/// atom  := 'x' DIGITS | '0' | '1' | '(' disj ')'
/// ```
///
/// Variables are 1-indexed in text and 0-indexed in the AST. When `n` is given,
/// variables beyond it are rejected.
pub fn parse_formula(text: &str, n: Option<usize>) -> Result<Formula, FormulaError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, n };
    let f = p.disjunction()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        let message = if p.src[p.pos] == b')' { "unmatched `)`" } else { "unexpected character" };
        return Err(FormulaError::Syntax { offset: p.pos, message });
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: Option<usize>,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut parts = alloc::vec![self.conjunction()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut parts = alloc::vec![self.unary()?];
        while self.peek() == Some(b'&') {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if self.peek() == Some(b'~') {
            self.pos += 1;
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        match self.peek() {
            None => Err(FormulaError::Syntax { offset: self.pos, message: "unexpected end of input" }),
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                let inner = match self.disjunction() {
                    Ok(f) => f,
                    Err(FormulaError::Syntax { offset, .. }) if offset >= self.src.len() => {
                        return Err(FormulaError::Unbalanced { offset: open })
                    }
                    Err(e) => return Err(e),
                };
                if self.peek() != Some(b')') {
                    return Err(FormulaError::Unbalanced { offset: open });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'0') => {
                self.pos += 1;
                Ok(Formula::Const(false))
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(Formula::Const(true))
            }
            Some(b'x') | Some(b'X') => {
                let at = self.pos;
                self.pos += 1;
                let digits_start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if digits_start == self.pos {
                    return Err(FormulaError::Syntax { offset: self.pos, message: "expected attribute number" });
                }
                // ASCII digits only, so the slice is valid UTF-8
                let digits = core::str::from_utf8(&self.src[digits_start..self.pos]).unwrap();
                let index: usize = digits
                    .parse()
                    .map_err(|_| FormulaError::Syntax { offset: digits_start, message: "attribute number too large" })?;
                if index == 0 {
                    return Err(FormulaError::Syntax { offset: digits_start, message: "attributes are numbered from 1" });
                }
                let attr = index - 1;
                if let Some(n) = self.n {
                    if attr >= n {
                        return Err(FormulaError::AttributeOutOfRange { attr, n, offset: at });
                    }
                }
                Ok(Formula::Var(attr))
            }
            Some(_) => {
                Err(FormulaError::Syntax { offset: self.pos, message: "expected a variable, constant, `~` or `(`" })
            }
        }
    }
}
