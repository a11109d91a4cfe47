//! Brute-force references for small instances. Nothing here shares the
//! coverage matrix, the bit sets, or the greedy code.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::formula::{Formula, Term, TriValue};
use crate::proofsys::{neg_query_provable, term_provable, KnowledgeBase, ProofEngine};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub max_n: usize,
    pub max_m: usize,
    pub max_terms: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_n: 12, max_m: 2000, max_terms: 24 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{what} = {value} exceeds the oracle limit {limit}")]
    Limit { what: &'static str, value: usize, limit: usize },
}

fn limit(what: &'static str, value: usize, limit: usize) -> Result<(), OracleError> {
    if value > limit {
        Err(OracleError::Limit { what, value, limit })
    } else {
        Ok(())
    }
}

/// Per-term count of rows where the term and `~c` are both provable, one
/// fresh derivation per (term, row) pair.
pub fn exact_filter_counts(
    cfg: &OracleConfig,
    terms: &[Term],
    kb: &KnowledgeBase,
    c: &Formula,
    dataset: &Dataset,
    engine: ProofEngine,
) -> Result<Vec<u64>, OracleError> {
    limit("n", dataset.n(), cfg.max_n)?;
    limit("m", dataset.m(), cfg.max_m)?;
    Ok(terms
        .iter()
        .map(|t| {
            dataset
                .rows()
                .iter()
                .filter(|row| term_provable(kb, t, row.values(), engine) && neg_query_provable(kb, c, row.values(), engine))
                .count() as u64
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverOptimum {
    Sets(usize),
    Infeasible,
}

/// Fewest sets whose union has at least `target` elements, by exhaustive
/// search in order of increasing size with a sum-of-largest-sizes bound.
pub fn optimal_partial_cover(cfg: &OracleConfig, sets: &[Vec<usize>], target: usize) -> Result<CoverOptimum, OracleError> {
    limit("sets", sets.len(), cfg.max_terms)?;
    if target == 0 {
        return Ok(CoverOptimum::Sets(0));
    }
    let mut universe: Vec<usize> = sets.iter().flatten().copied().collect();
    universe.sort_unstable();
    universe.dedup();
    if universe.len() < target {
        return Ok(CoverOptimum::Infeasible);
    }
    let mut dense: Vec<Vec<usize>> = sets
        .iter()
        .map(|s| {
            let mut d: Vec<usize> = s.iter().map(|e| universe.binary_search(e).unwrap()).collect();
            d.sort_unstable();
            d.dedup();
            d
        })
        .collect();
    dense.sort_by_key(|d| core::cmp::Reverse(d.len()));

    struct Search<'a> {
        sets: &'a [Vec<usize>],
        hits: Vec<u32>,
        covered: usize,
        target: usize,
    }
    impl Search<'_> {
        fn add(&mut self, i: usize) {
            for &e in &self.sets[i] {
                if self.hits[e] == 0 {
                    self.covered += 1;
                }
                self.hits[e] += 1;
            }
        }
        fn remove(&mut self, i: usize) {
            for &e in &self.sets[i] {
                self.hits[e] -= 1;
                if self.hits[e] == 0 {
                    self.covered -= 1;
                }
            }
        }
        /// Can `left` more sets, drawn from `start..`, reach the target?
        fn feasible(&mut self, start: usize, left: usize) -> bool {
            if self.covered >= self.target {
                return true;
            }
            if left == 0 || start >= self.sets.len() {
                return false;
            }
            // sets are sorted by size, so the next `left` are the largest remaining
            let best: usize = self.sets[start..].iter().take(left).map(Vec::len).sum();
            if self.covered + best < self.target {
                return false;
            }
            for i in start..self.sets.len() {
                self.add(i);
                let ok = self.feasible(i + 1, left - 1);
                self.remove(i);
                if ok {
                    return true;
                }
            }
            false
        }
    }

    let mut search = Search { sets: &dense, hits: vec![0; universe.len()], covered: 0, target };
    for size in 1..=dense.len() {
        if search.feasible(0, size) {
            return Ok(CoverOptimum::Sets(size));
        }
    }
    Ok(CoverOptimum::Infeasible)
}

/// Every completion of `rho` that satisfies the knowledge base satisfies `t`.
pub fn semantic_provability(cfg: &OracleConfig, kb: &KnowledgeBase, t: &Term, rho: &[TriValue]) -> Result<bool, OracleError> {
    limit("n", rho.len(), cfg.max_n)?;
    let free: Vec<usize> = (0..rho.len()).filter(|&i| rho[i] == TriValue::Unobserved).collect();
    let mut x: Vec<bool> = rho.iter().map(|v| *v == TriValue::True).collect();
    for bits in 0u64..(1u64 << free.len()) {
        for (j, &a) in free.iter().enumerate() {
            x[a] = (bits >> j) & 1 == 1;
        }
        let kb_holds = kb.clauses().iter().all(|cl| cl.literals().iter().any(|l| x[l.attr] != l.negated));
        if kb_holds && !t.literals().iter().all(|l| x[l.attr] != l.negated) {
            return Ok(false);
        }
    }
    Ok(true)
}
