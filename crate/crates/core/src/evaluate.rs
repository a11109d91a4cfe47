//! Holdout estimates of plausibility and weak-entailment error, and the
//! comparison against the theoretical floor and ceiling.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::formula::{Formula, KDnf, Term};
use crate::proofsys::{derive_literals, KnowledgeBase, ProofEngine};
use crate::sampling::AbductionParams;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("attribute count mismatch: {what} has {found}, holdout has {expected}")]
    AttributeMismatch { what: &'static str, found: usize, expected: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntailmentStatus {
    Defined,
    /// No holdout row had a provable term.
    Undefined,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEval {
    pub term: Term,
    pub provable: u64,
    /// Rows where the term and `~c` are both provable.
    pub bad: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: u32,
    pub rows: u64,
    /// Rows with some term of `h` provable; the entailment denominator.
    pub denominator: u64,
    /// Of those, rows where `~c` is provable too.
    pub bad_rows: u64,
    pub plausibility_hat: f64,
    pub entailment_status: EntailmentStatus,
    pub entailment_error_hat: Option<f64>,
    pub per_term: Vec<TermEval>,
    pub r_prime: usize,
    pub theoretical_plausibility_floor: f64,
    pub theoretical_error_ceiling: f64,
    /// The caller asserts the holdout was not used for training.
    pub holdout_disjoint: bool,
}

impl EvalReport {
    pub fn term_bad_rate(&self, i: usize) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            self.per_term[i].bad as f64 / self.rows as f64
        }
    }
}

pub fn evaluate(
    h: &KDnf,
    kb: &KnowledgeBase,
    c: &Formula,
    holdout: &Dataset,
    params: &AbductionParams,
    engine: ProofEngine,
) -> Result<EvalReport, EvalError> {
    let n = holdout.n();
    if kb.n() != n {
        return Err(EvalError::AttributeMismatch { what: "knowledge base", found: kb.n(), expected: n });
    }
    if let Some(a) = c.max_attr().filter(|&a| a >= n) {
        return Err(EvalError::AttributeMismatch { what: "query", found: a + 1, expected: n });
    }
    if let Some(t) = h.terms().iter().find(|t| t.max_attr() >= n) {
        return Err(EvalError::AttributeMismatch { what: "hypothesis", found: t.max_attr() + 1, expected: n });
    }
    let mut per_term: Vec<TermEval> = h.terms().iter().map(|t| TermEval { term: t.clone(), provable: 0, bad: 0 }).collect();
    let (mut denominator, mut bad_rows) = (0u64, 0u64);
    for row in holdout.rows() {
        let d = derive_literals(kb, row.values(), engine);
        let neg_c = d.proves_negation(c);
        let mut any = false;
        for te in per_term.iter_mut() {
            if d.proves_term(&te.term) {
                any = true;
                te.provable += 1;
                te.bad += u64::from(neg_c);
            }
        }
        if any {
            denominator += 1;
            bad_rows += u64::from(neg_c);
        }
    }
    let rows = holdout.m() as u64;
    let plausibility_hat = if rows == 0 { 0.0 } else { denominator as f64 / rows as f64 };
    let (entailment_status, entailment_error_hat) = if denominator == 0 {
        (EntailmentStatus::Undefined, None)
    } else {
        (EntailmentStatus::Defined, Some(bad_rows as f64 / denominator as f64))
    };
    Ok(EvalReport {
        schema: REPORT_SCHEMA,
        rows,
        denominator,
        bad_rows,
        plausibility_hat,
        entailment_status,
        entailment_error_hat,
        per_term,
        r_prime: h.len(),
        theoretical_plausibility_floor: params.plausibility_floor(),
        theoretical_error_ceiling: params.error_ceiling(h.len()),
        holdout_disjoint: true,
    })
}

/// `3 * sqrt(1/4 / count)`: three standard deviations of a Bernoulli mean at worst-case variance.
pub fn statistical_slack(count: u64) -> f64 {
    if count == 0 {
        f64::INFINITY
    } else {
        3.0 * libm::sqrt(0.25 / count as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionCheck {
    pub observed: f64,
    pub threshold: f64,
    pub slack: f64,
    /// Positive when on the passing side of the threshold itself.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub plausibility: CriterionCheck,
    /// `None` when the conditional error is undefined.
    pub entailment: Option<CriterionCheck>,
    pub pass: bool,
}

/// Plausibility must reach `(1-gamma) mu - slack`; the conditional error must
/// stay within `r' (1+gamma) eps / (1-gamma) + slack`. Both inclusive.
pub fn compare_bounds(report: &EvalReport, params: &AbductionParams, r_prime: usize) -> BoundCheck {
    let floor = params.plausibility_floor();
    let slack = statistical_slack(report.rows);
    let plausibility = CriterionCheck {
        observed: report.plausibility_hat,
        threshold: floor,
        slack,
        margin: report.plausibility_hat - floor,
        pass: report.plausibility_hat >= floor - slack,
    };
    let ceiling = params.error_ceiling(r_prime);
    let entailment = report.entailment_error_hat.map(|err| {
        let slack = statistical_slack(report.denominator);
        CriterionCheck { observed: err, threshold: ceiling, slack, margin: ceiling - err, pass: err <= ceiling + slack }
    });
    let pass = plausibility.pass && entailment.as_ref().is_some_and(|e| e.pass);
    BoundCheck { plausibility, entailment, pass }
}
