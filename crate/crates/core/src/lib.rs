//! Learning k-DNF explanations from partially observed Boolean examples.
//!
//! Given rows over `n` attributes where each cell is `0`, `1`, or `*`, a
//! clausal knowledge base, and a query formula `c`, [`abduce()`] returns a
//! disjunction of short terms that is provable on at least a `mu` fraction of
//! the rows while rarely co-occurring with a provable `~c`.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, threading and
//! the command-line tool live in the `abduction` crate.
#![no_std]

extern crate alloc;

pub mod abduce;
pub mod bitset;
pub mod dataset;
pub mod evaluate;
pub mod formula;
pub mod oracle;
pub mod proofsys;
pub mod sampling;
pub mod synth;

pub use abduce::{
    abduce, abduce_from_matrix, abduce_over, build_coverage, enumerate_terms, enumerate_terms_over, estimate_mu,
    estimate_mu_from_matrix, filter_terms, greedy_partial_cover, AbduceError, AbductionResult, AbductionStatus,
    CoverOutcome, CoverageMatrix, MuEstimate, TermStat,
};
pub use bitset::BitSet;
pub use dataset::{mask, Dataset, DatasetError, MaskProcess, PartialExample};
pub use evaluate::{compare_bounds, evaluate, BoundCheck, EntailmentStatus, EvalError, EvalReport};
pub use formula::{parse_formula, Formula, FormulaError, KDnf, Literal, Term, TriValue, WitnessStatus};
pub use proofsys::{
    derive_literals, neg_query_provable, term_provable, Clause, Derivation, KbError, KnowledgeBase, ProofEngine,
};
pub use sampling::{required_samples, AbductionParams, DerivedParams, SampleBudget, SamplingError};
pub use synth::{plant, PlantConfig, PlantedInstance, PRNG_NAME};
