//! Implicit abduction: enumerate candidate terms, count where each is
//! provable and where it co-occurs with a provable `~c`, delete terms over
//! the `mu * eps * m` budget, then greedily cover a `mu` fraction of the
//! examples with what is left.

use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::BitSet;
use crate::dataset::Dataset;
use crate::formula::{Formula, KDnf, Literal, Term};
use crate::proofsys::{derive_literals, KnowledgeBase, ProofEngine};
use crate::sampling::{AbductionParams, SamplingError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AbduceError {
    #[error("need 1 <= k <= n, got k = {k} with {n} candidate attributes")]
    Width { k: usize, n: usize },
    #[error("attribute count mismatch: {what} has {found}, dataset has {expected}")]
    AttributeMismatch { what: &'static str, found: usize, expected: usize },
    #[error("the dataset has no rows")]
    EmptyDataset,
    #[error(transparent)]
    Params(#[from] SamplingError),
}

/// All canonical terms of width `1..=k` over attributes `0..n`, sorted.
pub fn enumerate_terms(n: usize, k: usize) -> Result<Vec<Term>, AbduceError> {
    let attrs: Vec<usize> = (0..n).collect();
    enumerate_terms_over(&attrs, k)
}

/// All canonical terms of width `1..=k` whose attributes come from `attrs`, sorted.
pub fn enumerate_terms_over(attrs: &[usize], k: usize) -> Result<Vec<Term>, AbduceError> {
    let mut attrs = attrs.to_vec();
    attrs.sort_unstable();
    attrs.dedup();
    if k == 0 || k > attrs.len() {
        return Err(AbduceError::Width { k, n: attrs.len() });
    }
    let mut out = Vec::new();
    let mut stack: Vec<Literal> = Vec::with_capacity(k);
    fn extend(attrs: &[usize], from: usize, k: usize, stack: &mut Vec<Literal>, out: &mut Vec<Term>) {
        for i in from..attrs.len() {
            for negated in [false, true] {
                stack.push(Literal { attr: attrs[i], negated });
                // distinct attributes in increasing order: already canonical
                out.push(Term::new(stack.clone()).expect("distinct attributes"));
                if stack.len() < k {
                    extend(attrs, i + 1, k, stack, out);
                }
                stack.pop();
            }
        }
    }
    extend(&attrs, 0, k, &mut stack, &mut out);
    out.sort_unstable();
    Ok(out)
}

/// For each candidate term, the examples where it is provable and how many of
/// those also prove `~c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageMatrix {
    terms: Vec<Term>,
    m: usize,
    provable: Vec<BitSet>,
    bad_counts: Vec<u64>,
    contradictions: u64,
}

impl CoverageMatrix {
    pub fn empty(terms: Vec<Term>, m: usize) -> Self {
        let provable = terms.iter().map(|_| BitSet::new(m)).collect();
        let bad_counts = alloc::vec![0; terms.len()];
        CoverageMatrix { terms, m, provable, bad_counts, contradictions: 0 }
    }

    /// Adds the rows in `rows`. One derivation per row is shared by all terms.
    pub fn accumulate(
        &mut self,
        rows: Range<usize>,
        kb: &KnowledgeBase,
        c: &Formula,
        dataset: &Dataset,
        engine: ProofEngine,
    ) {
        for j in rows {
            let derivation = derive_literals(kb, dataset.rows()[j].values(), engine);
            if derivation.is_contradiction() {
                self.contradictions += 1;
            }
            let neg_c = derivation.proves_negation(c);
            for (i, t) in self.terms.iter().enumerate() {
                if derivation.proves_term(t) {
                    self.provable[i].insert(j);
                    if neg_c {
                        self.bad_counts[i] += 1;
                    }
                }
            }
        }
    }

    /// Combines two matrices built over disjoint row ranges of the same dataset.
    pub fn merge(&mut self, other: &CoverageMatrix) {
        assert_eq!(self.terms, other.terms, "merging matrices over different term lists");
        assert_eq!(self.m, other.m);
        for (a, b) in self.provable.iter_mut().zip(&other.provable) {
            a.union_with(b);
        }
        for (a, b) in self.bad_counts.iter_mut().zip(&other.bad_counts) {
            *a += b;
        }
        self.contradictions += other.contradictions;
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn provable_sets(&self) -> &[BitSet] {
        &self.provable
    }

    pub fn bad_counts(&self) -> &[u64] {
        &self.bad_counts
    }

    /// Rows whose knowledge base restriction is inconsistent (every query is provable there).
    pub fn contradictions(&self) -> u64 {
        self.contradictions
    }
}

fn check_inputs(kb: &KnowledgeBase, c: &Formula, dataset: &Dataset) -> Result<(), AbduceError> {
    let n = dataset.n();
    if kb.n() != n {
        return Err(AbduceError::AttributeMismatch { what: "knowledge base", found: kb.n(), expected: n });
    }
    if let Some(a) = c.max_attr().filter(|&a| a >= n) {
        return Err(AbduceError::AttributeMismatch { what: "query", found: a + 1, expected: n });
    }
    Ok(())
}

pub fn build_coverage(
    terms: Vec<Term>,
    kb: &KnowledgeBase,
    c: &Formula,
    dataset: &Dataset,
    engine: ProofEngine,
) -> CoverageMatrix {
    let mut matrix = CoverageMatrix::empty(terms, dataset.m());
    matrix.accumulate(0..dataset.m(), kb, c, dataset, engine);
    matrix
}

/// Indices of terms whose bad count does not exceed `threshold`.
pub fn filter_terms(matrix: &CoverageMatrix, threshold: u64) -> Vec<usize> {
    (0..matrix.terms.len()).filter(|&i| matrix.bad_counts[i] <= threshold).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverOutcome {
    /// Chosen set indices in selection order.
    pub chosen: Vec<usize>,
    /// Marginal gain of each choice.
    pub gains: Vec<u64>,
    pub covered: u64,
    pub success: bool,
}

/// Greedy partial cover: take the candidate adding the most uncovered
/// elements (lowest index on ties) until `target` elements are covered or no
/// candidate adds anything.
pub fn greedy_partial_cover(sets: &[BitSet], candidates: &[usize], target: u64) -> CoverOutcome {
    let len = sets.first().map_or(0, BitSet::len);
    let mut covered_set = BitSet::new(len);
    let mut out = CoverOutcome { chosen: Vec::new(), gains: Vec::new(), covered: 0, success: false };
    let mut remaining: Vec<usize> = candidates.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    while out.covered < target {
        let mut best: Option<(usize, u64)> = None;
        for (pos, &i) in remaining.iter().enumerate() {
            let gain = sets[i].count_difference(&covered_set) as u64;
            if gain > best.map_or(0, |(_, g)| g) {
                best = Some((pos, gain));
            }
        }
        let Some((pos, gain)) = best else {
            return out;
        };
        let i = remaining.remove(pos);
        covered_set.union_with(&sets[i]);
        out.covered += gain;
        out.chosen.push(i);
        out.gains.push(gain);
    }
    out.success = true;
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbductionStatus {
    Found,
    NoPlausibleExplanation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermStat {
    pub term: Term,
    /// Examples where the term is provable.
    pub coverage: u64,
    /// Examples where the term and `~c` are both provable.
    pub bad_count: u64,
    /// Newly covered examples when the term was picked.
    pub gain: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbductionResult {
    pub status: AbductionStatus,
    pub h: KDnf,
    pub r_prime: usize,
    pub covered: u64,
    pub m: usize,
    pub cover_target: u64,
    pub filter_threshold: u64,
    pub candidate_terms: usize,
    pub surviving_terms: usize,
    pub terms: Vec<TermStat>,
    /// `r' (1+gamma) eps / (1-gamma)`.
    pub theoretical_bound: f64,
    /// Rows where the knowledge base was inconsistent with the observations.
    pub contradictions: u64,
    /// The empty (always true) term is never a candidate.
    pub empty_term_excluded: bool,
}

/// Runs the filter and the greedy cover on a finished coverage matrix.
pub fn abduce_from_matrix(matrix: &CoverageMatrix, params: &AbductionParams) -> Result<AbductionResult, AbduceError> {
    params.validate()?;
    let m = matrix.m();
    if m == 0 {
        return Err(AbduceError::EmptyDataset);
    }
    let threshold = params.filter_threshold(m);
    let target = params.cover_target(m);
    let survivors = filter_terms(matrix, threshold);
    let surviving_terms = survivors.len();
    // terms provable nowhere cannot help the cover
    let useful: Vec<usize> = survivors.into_iter().filter(|&i| !matrix.provable[i].is_empty()).collect();
    let outcome = greedy_partial_cover(&matrix.provable, &useful, target);

    let terms: Vec<TermStat> = outcome
        .chosen
        .iter()
        .zip(&outcome.gains)
        .map(|(&i, &gain)| TermStat {
            term: matrix.terms[i].clone(),
            coverage: matrix.provable[i].count() as u64,
            bad_count: matrix.bad_counts[i],
            gain,
        })
        .collect();
    let (status, h_terms) = if outcome.success {
        (AbductionStatus::Found, terms.iter().map(|s| s.term.clone()).collect())
    } else {
        (AbductionStatus::NoPlausibleExplanation, Vec::new())
    };
    let k = matrix.terms.iter().map(Term::width).max().unwrap_or(params.k).max(params.k);
    let h = KDnf::new(h_terms, k).expect("chosen terms are distinct candidates of width <= k");
    let r_prime = h.len();
    Ok(AbductionResult {
        status,
        r_prime,
        covered: outcome.covered,
        m,
        cover_target: target,
        filter_threshold: threshold,
        candidate_terms: matrix.terms.len(),
        surviving_terms,
        terms,
        theoretical_bound: params.error_ceiling(r_prime),
        contradictions: matrix.contradictions,
        empty_term_excluded: true,
        h,
    })
}

/// Abduction over an explicit candidate term list.
pub fn abduce_over(
    terms: Vec<Term>,
    kb: &KnowledgeBase,
    c: &Formula,
    dataset: &Dataset,
    params: &AbductionParams,
    engine: ProofEngine,
) -> Result<AbductionResult, AbduceError> {
    params.validate()?;
    check_inputs(kb, c, dataset)?;
    if dataset.m() == 0 {
        return Err(AbduceError::EmptyDataset);
    }
    let matrix = build_coverage(terms, kb, c, dataset, engine);
    abduce_from_matrix(&matrix, params)
}

/// Abduction over every term of width at most `params.k`.
pub fn abduce(
    kb: &KnowledgeBase,
    c: &Formula,
    dataset: &Dataset,
    params: &AbductionParams,
    engine: ProofEngine,
) -> Result<AbductionResult, AbduceError> {
    if params.n != dataset.n() {
        return Err(AbduceError::AttributeMismatch { what: "parameters", found: params.n, expected: dataset.n() });
    }
    let terms = enumerate_terms(dataset.n(), params.k)?;
    abduce_over(terms, kb, c, dataset, params, engine)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub mu: f64,
    /// False when no grid value down to the floor admitted a cover.
    pub found: bool,
    /// Grid values tried, largest first.
    pub tried: Vec<f64>,
}

/// Scans `mu = (1+gamma)^-j`, `j = 0, 1, ...` down to `floor` and returns the
/// largest value at which filtering and covering succeed. `params.mu` is ignored.
pub fn estimate_mu_from_matrix(matrix: &CoverageMatrix, params: &AbductionParams, floor: f64) -> Result<MuEstimate, AbduceError> {
    let base = AbductionParams { mu: 1.0, ..params.clone() };
    base.validate()?;
    if !(floor > 0.0 && floor <= 1.0) {
        return Err(SamplingError::Domain { name: "mu floor", value: floor, range: "(0, 1]" }.into());
    }
    let mut tried = Vec::new();
    let mut j = 0i32;
    loop {
        let mu = libm::pow(1.0 + params.gamma, -f64::from(j));
        if mu < floor {
            break;
        }
        tried.push(mu);
        let candidate = AbductionParams { mu, ..base.clone() };
        if abduce_from_matrix(matrix, &candidate)?.status == AbductionStatus::Found {
            return Ok(MuEstimate { mu, found: true, tried });
        }
        j += 1;
    }
    Ok(MuEstimate { mu: floor, found: false, tried })
}

pub fn estimate_mu(
    kb: &KnowledgeBase,
    c: &Formula,
    dataset: &Dataset,
    params: &AbductionParams,
    engine: ProofEngine,
    floor: f64,
) -> Result<MuEstimate, AbduceError> {
    check_inputs(kb, c, dataset)?;
    if dataset.m() == 0 {
        return Err(AbduceError::EmptyDataset);
    }
    let terms = enumerate_terms(dataset.n(), params.k)?;
    let matrix = build_coverage(terms, kb, c, dataset, engine);
    estimate_mu_from_matrix(&matrix, params, floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PartialExample;
    use crate::formula::parse_formula;
    use alloc::string::ToString;
    use alloc::vec;

    fn data(rows: &[&str]) -> Dataset {
        let n = rows.first().map_or(0, |r| r.len());
        Dataset::new(n, None, rows.iter().map(|r| PartialExample::parse(r).unwrap()).collect()).unwrap()
    }

    fn term(s: &str) -> Term {
        KDnf::from_formula(&parse_formula(s, None).unwrap(), 8).unwrap().terms()[0].clone()
    }

    fn params(n: usize, k: usize, mu: f64, epsilon: f64) -> AbductionParams {
        AbductionParams { mu, epsilon, gamma: 0.5, delta: 0.1, k, r: 1, n }
    }

    #[test]
    fn enumeration_examples() {
        let t: Vec<_> = enumerate_terms(2, 1).unwrap().iter().map(|t| t.to_string()).collect();
        assert_eq!(t, ["x1", "~x1", "x2", "~x2"]);
        let t2 = enumerate_terms(2, 2).unwrap();
        assert_eq!(t2.len(), 8);
        assert!(t2.iter().all(|t| t.literals().windows(2).all(|w| w[0].attr != w[1].attr)));
        let t: Vec<_> = enumerate_terms(1, 1).unwrap().iter().map(|t| t.to_string()).collect();
        assert_eq!(t, ["x1", "~x1"]);
        assert!(matches!(enumerate_terms(2, 3), Err(AbduceError::Width { k: 3, n: 2 })));
        assert!(t2.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn enumeration_over_subset() {
        let t: Vec<_> = enumerate_terms_over(&[2, 0], 2).unwrap().iter().map(|t| t.to_string()).collect();
        assert_eq!(t, ["x1", "x1 & x3", "x1 & ~x3", "~x1", "~x1 & x3", "~x1 & ~x3", "x3", "~x3"]);
    }

    #[test]
    fn coverage_examples() {
        let d = data(&["1*", "0*", "**"]);
        let kb = KnowledgeBase::empty(2);
        let c = parse_formula("x2", Some(2)).unwrap();
        let m = build_coverage(vec![term("x1")], &kb, &c, &d, ProofEngine::UnitPropagation);
        assert_eq!(m.provable_sets()[0].iter().collect::<Vec<_>>(), vec![0]);

        let d = data(&["10"]);
        let m = build_coverage(vec![term("x1")], &kb, &c, &d, ProofEngine::UnitPropagation);
        assert_eq!(m.bad_counts(), &[1]);

        let d = data(&["**", "**"]);
        let m = build_coverage(enumerate_terms(2, 2).unwrap(), &kb, &c, &d, ProofEngine::UnitPropagation);
        assert!(m.provable_sets().iter().all(BitSet::is_empty));
    }

    #[test]
    fn filter_semantics() {
        let mut m = CoverageMatrix::empty(enumerate_terms(1, 1).unwrap(), 100);
        m.bad_counts = vec![6, 5];
        let p = params(1, 1, 0.5, 0.1);
        assert_eq!(p.filter_threshold(100), 5);
        assert_eq!(filter_terms(&m, p.filter_threshold(100)), vec![1]);
        m.bad_counts = vec![0, 1];
        assert_eq!(filter_terms(&m, 0), vec![0]);
        m.bad_counts = vec![7, 9];
        assert!(filter_terms(&m, 5).is_empty());
    }

    #[test]
    fn greedy_examples() {
        let sets = vec![BitSet::from_indices(4, [1, 2]), BitSet::from_indices(4, [2, 3]), BitSet::from_indices(4, [3])];
        let out = greedy_partial_cover(&sets, &[0, 1, 2], 3);
        assert!(out.success);
        assert_eq!(out.chosen, vec![0, 1]);
        assert_eq!(out.covered, 3);

        let out = greedy_partial_cover(&sets, &[0, 1, 2], 0);
        assert!(out.success && out.chosen.is_empty());

        let sets = vec![BitSet::from_indices(4, [1]), BitSet::from_indices(4, [2])];
        let out = greedy_partial_cover(&sets, &[0, 1], 3);
        assert!(!out.success);
        assert_eq!(out.covered, 2);
    }

    #[test]
    fn greedy_ties_go_to_lowest_index() {
        let sets = vec![BitSet::from_indices(4, [2, 3]), BitSet::from_indices(4, [0, 1])];
        assert_eq!(greedy_partial_cover(&sets, &[1, 0], 2).chosen, vec![0]);
    }

    #[test]
    fn all_unobserved_has_no_explanation() {
        let d = data(&["***", "***"]);
        let c = parse_formula("x3", Some(3)).unwrap();
        let r = abduce(&KnowledgeBase::empty(3), &c, &d, &params(3, 2, 0.5, 0.1), ProofEngine::UnitPropagation).unwrap();
        assert_eq!(r.status, AbductionStatus::NoPlausibleExplanation);
        assert!(r.h.is_empty());
    }

    #[test]
    fn constant_false_query_filters_everything() {
        let d = data(&["10", "11", "01", "10"]);
        let c = Formula::Const(false);
        let r = abduce(&KnowledgeBase::empty(2), &c, &d, &params(2, 1, 0.5, 0.1), ProofEngine::UnitPropagation).unwrap();
        assert_eq!(r.filter_threshold, 0);
        assert_eq!(r.surviving_terms, 0);
        assert_eq!(r.status, AbductionStatus::NoPlausibleExplanation);
    }

    #[test]
    fn finds_planted_disjunction() {
        // c = x3 holds exactly when x1 | x2 does
        let d = data(&["101", "011", "000", "111", "101", "001"]);
        let c = parse_formula("x3", Some(3)).unwrap();
        let terms = enumerate_terms_over(&[0, 1], 1).unwrap();
        // target ceil(0.65 * 6) = 4 needs both x1 (rows 0, 3, 4) and x2 (rows 1, 3)
        let r = abduce_over(terms, &KnowledgeBase::empty(3), &c, &d, &params(3, 1, 0.65, 0.1), ProofEngine::UnitPropagation)
            .unwrap();
        assert_eq!(r.status, AbductionStatus::Found);
        assert!(r.covered >= r.cover_target);
        assert!(r.terms.iter().all(|s| s.bad_count == 0));
        assert_eq!(r.h.to_string(), "x1 | x2");
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let d = data(&["10"]);
        let c = parse_formula("x1", None).unwrap();
        let p = params(2, 1, 0.5, 0.1);
        assert!(matches!(abduce(&KnowledgeBase::empty(3), &c, &d, &p, ProofEngine::UnitPropagation), Err(AbduceError::AttributeMismatch { .. })));
        let c3 = parse_formula("x3", None).unwrap();
        assert!(matches!(abduce(&KnowledgeBase::empty(2), &c3, &d, &p, ProofEngine::UnitPropagation), Err(AbduceError::AttributeMismatch { .. })));
        let empty = Dataset::new(2, None, vec![]).unwrap();
        assert_eq!(abduce(&KnowledgeBase::empty(2), &c, &empty, &p, ProofEngine::UnitPropagation), Err(AbduceError::EmptyDataset));
    }

    #[test]
    fn merge_of_halves_equals_whole() {
        let d = data(&["10*", "0*1", "111", "*0*", "01*"]);
        let kb = KnowledgeBase::parse("~x1 | x2\n~x3 | ~x2", 3).unwrap();
        let c = parse_formula("x2 | x3", Some(3)).unwrap();
        let terms = enumerate_terms(3, 2).unwrap();
        let whole = build_coverage(terms.clone(), &kb, &c, &d, ProofEngine::UnitPropagation);
        let mut a = CoverageMatrix::empty(terms.clone(), 5);
        a.accumulate(0..2, &kb, &c, &d, ProofEngine::UnitPropagation);
        let mut b = CoverageMatrix::empty(terms, 5);
        b.accumulate(2..5, &kb, &c, &d, ProofEngine::UnitPropagation);
        a.merge(&b);
        assert_eq!(a, whole);
    }

    #[test]
    fn estimate_mu_examples() {
        // x1 provable in 6 of 10 rows; c always true
        let rows = ["11", "11", "11", "11", "11", "11", "01", "01", "01", "01"];
        let d = data(&rows);
        let c = parse_formula("x2", Some(2)).unwrap();
        let matrix = build_coverage(vec![term("x1")], &KnowledgeBase::empty(2), &c, &d, ProofEngine::UnitPropagation);
        let p = params(2, 1, 1.0, 0.1);
        // gamma = 0.5: grid 1, 0.667, 0.444; first value <= 0.6 is 0.444
        let est = estimate_mu_from_matrix(&matrix, &p, 0.01).unwrap();
        assert!(est.found);
        assert!((est.mu - 1.0 / 2.25).abs() < 1e-12);

        let full = data(&["11", "11"]);
        let matrix = build_coverage(enumerate_terms(2, 1).unwrap(), &KnowledgeBase::empty(2), &c, &full, ProofEngine::UnitPropagation);
        assert_eq!(estimate_mu_from_matrix(&matrix, &p, 0.01).unwrap().mu, 1.0);

        let blank = data(&["**", "**"]);
        let est = estimate_mu(&KnowledgeBase::empty(2), &c, &blank, &p, ProofEngine::UnitPropagation, 0.05).unwrap();
        assert!(!est.found);
        assert_eq!(est.mu, 0.05);
    }
}
