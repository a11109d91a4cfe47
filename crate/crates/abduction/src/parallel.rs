//! Coverage built over row chunks on scoped threads.

use std::num::NonZeroUsize;
use std::thread;

use abduction_core::{CoverageMatrix, Dataset, Formula, KnowledgeBase, ProofEngine, Term};

/// `0` means one worker per available core.
pub fn resolve_workers(workers: usize) -> usize {
    if workers == 0 {
        thread::available_parallelism().map_or(1, NonZeroUsize::get)
    } else {
        workers
    }
}

/// Same result as `build_coverage`, bit for bit. Rows are split into
/// contiguous chunks and the partial matrices merged in chunk order.
pub fn build_coverage_parallel(
    terms: Vec<Term>,
    kb: &KnowledgeBase,
    c: &Formula,
    dataset: &Dataset,
    engine: ProofEngine,
    workers: usize,
) -> CoverageMatrix {
    let m = dataset.m();
    let workers = resolve_workers(workers).min(m.max(1));
    let mut total = CoverageMatrix::empty(terms, m);
    if workers <= 1 {
        total.accumulate(0..m, kb, c, dataset, engine);
        return total;
    }
    let chunk = m.div_ceil(workers);
    let parts: Vec<CoverageMatrix> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let rows = (w * chunk).min(m)..((w + 1) * chunk).min(m);
                let mut part = CoverageMatrix::empty(total.terms().to_vec(), m);
                s.spawn(move || {
                    part.accumulate(rows, kb, c, dataset, engine);
                    part
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("coverage worker panicked")).collect()
    });
    for p in &parts {
        total.merge(p);
    }
    total
}
