//! Planted instances: an `r`-term `k`-DNF `h*`, a noisy output attribute `c`
//! driven by it, and proxy attributes whose knowledge-base clauses let a
//! masked planted literal be derived rather than observed.
//!
//! Sampling one ground example:
//! 1. every free attribute is Bernoulli(`base_rate`);
//! 2. with probability `mu_target` a uniformly chosen planted term is forced
//!    true, otherwise the planted attributes are redrawn until no planted
//!    term holds, so `Pr[h*] = mu_target` exactly;
//! 3. `c = 1` when `h*` holds, except with probability `epsilon_star`;
//!    otherwise `c` is Bernoulli(`c_base_rate`);
//! 4. a proxy `p` for planted literal `l` is 1 only when `l` holds, and then
//!    with probability `proxy_rate`. The clause `~p | l` goes into the KB.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{mask, Dataset, DatasetError, MaskProcess, PartialExample};
use crate::formula::{Formula, KDnf, Literal, Term};
use crate::proofsys::{Clause, KnowledgeBase};

/// Name of the generator behind every seeded stream in this crate.
pub const PRNG_NAME: &str = "ChaCha8Rng/rand_chacha-0.9/seed_from_u64";

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SynthError {
    #[error("need r*k + 1 <= n for disjoint planted terms plus the output attribute (r = {r}, k = {k}, n = {n})")]
    TooSmall { n: usize, k: usize, r: usize },
    #[error("{name} = {value} is outside {range}")]
    Domain { name: &'static str, value: f64, range: &'static str },
    #[error("k and r must be at least 1")]
    Zero,
    #[error("could not draw {r} distinct overlapping terms")]
    Overlap { r: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub mu_target: f64,
    pub epsilon_star: f64,
    pub base_rate: f64,
    pub c_base_rate: f64,
    /// Upper bound on proxy attributes; fewer are made if attributes run out.
    pub proxies: usize,
    pub proxy_rate: f64,
    /// Let planted terms share attributes.
    pub overlapping: bool,
}

impl PlantConfig {
    pub fn new(n: usize, k: usize, r: usize, mu_target: f64, epsilon_star: f64) -> Self {
        PlantConfig {
            n,
            k,
            r,
            mu_target,
            epsilon_star,
            base_rate: 0.5,
            c_base_rate: 0.5,
            proxies: r * k,
            proxy_rate: 0.5,
            overlapping: false,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let range = |name, value: f64, ok: bool, range| if ok { Ok(()) } else { Err(SynthError::Domain { name, value, range }) };
        if self.k == 0 || self.r == 0 {
            return Err(SynthError::Zero);
        }
        let needed = if self.overlapping { self.k + 1 } else { self.r * self.k + 1 };
        if needed > self.n {
            return Err(SynthError::TooSmall { n: self.n, k: self.k, r: self.r });
        }
        range("mu_target", self.mu_target, self.mu_target > 0.0 && self.mu_target <= 1.0, "(0, 1]")?;
        range("epsilon_star", self.epsilon_star, (0.0..1.0).contains(&self.epsilon_star), "[0, 1)")?;
        range("base_rate", self.base_rate, self.base_rate > 0.0 && self.base_rate < 1.0, "(0, 1)")?;
        range("c_base_rate", self.c_base_rate, (0.0..=1.0).contains(&self.c_base_rate), "[0, 1]")?;
        range("proxy_rate", self.proxy_rate, (0.0..=1.0).contains(&self.proxy_rate), "[0, 1]")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proxy {
    pub attr: usize,
    pub literal: Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedInstance {
    pub config: PlantConfig,
    pub seed: u64,
    pub h_star: KDnf,
    /// The query: a single output attribute.
    pub c: Formula,
    pub output_attr: usize,
    pub kb: KnowledgeBase,
    pub proxies: Vec<Proxy>,
    /// Attributes that are neither planted, output, nor proxy.
    pub free_attrs: Vec<usize>,
}

/// A total assignment plus its labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSample {
    pub assignment: Vec<bool>,
    pub c: bool,
    pub h_terms: Vec<bool>,
}

pub fn plant(config: &PlantConfig, seed: u64) -> Result<PlantedInstance, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.n;
    let mut attrs: Vec<usize> = (0..n).collect();
    attrs.shuffle(&mut rng);
    let output_attr = attrs.pop().expect("n >= 2");

    let mut terms: Vec<Term> = Vec::with_capacity(config.r);
    let mut used: Vec<usize> = Vec::new();
    if config.overlapping {
        let mut tries = 0;
        while terms.len() < config.r {
            tries += 1;
            if tries > 1000 {
                return Err(SynthError::Overlap { r: config.r });
            }
            let chosen: Vec<usize> = attrs.choose_multiple(&mut rng, config.k).copied().collect();
            let t = random_term(&chosen, &mut rng);
            if terms.contains(&t) {
                continue;
            }
            terms.push(t);
            if covers_everything(&terms) {
                terms.pop();
                continue;
            }
            used.extend(chosen);
        }
        used.sort_unstable();
        used.dedup();
        attrs.retain(|a| !used.contains(a));
    } else {
        for _ in 0..config.r {
            let chosen: Vec<usize> = attrs.split_off(attrs.len() - config.k);
            terms.push(random_term(&chosen, &mut rng));
        }
    }

    let planted_literals: Vec<Literal> = {
        let mut ls: Vec<Literal> = terms.iter().flat_map(|t| t.literals().iter().copied()).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    };
    let mut proxies = Vec::new();
    let mut clauses = Vec::new();
    for &literal in planted_literals.iter().take(config.proxies) {
        let Some(attr) = attrs.pop() else { break };
        proxies.push(Proxy { attr, literal });
        clauses.push(Clause::new(vec![Literal::neg(attr), literal]).expect("proxy differs from its literal"));
    }
    attrs.sort_unstable();
    let kb = KnowledgeBase::new(n, clauses).expect("attributes in range");
    let h_star = KDnf::new(terms, config.k).expect("distinct terms of width k");
    Ok(PlantedInstance {
        config: config.clone(),
        seed,
        h_star,
        c: Formula::Var(output_attr),
        output_attr,
        kb,
        proxies,
        free_attrs: attrs,
    })
}

/// Whether every assignment satisfies some term, which would leave the
/// "no planted term holds" branch of the sampler with nothing to draw.
fn covers_everything(terms: &[Term]) -> bool {
    let mut attrs: Vec<usize> = terms.iter().flat_map(|t| t.literals().iter().map(|l| l.attr)).collect();
    attrs.sort_unstable();
    attrs.dedup();
    let width = attrs.len();
    if width > 24 {
        // FIXME: brute force only; wide overlapping plants are assumed non-covering
        return false;
    }
    let max_attr = attrs.last().copied().unwrap_or(0);
    let mut x = vec![false; max_attr + 1];
    (0u64..1 << width).all(|bits| {
        for (i, &a) in attrs.iter().enumerate() {
            x[a] = bits >> i & 1 == 1;
        }
        terms.iter().any(|t| t.eval(&x))
    })
}

fn random_term<R: Rng + ?Sized>(attrs: &[usize], rng: &mut R) -> Term {
    Term::new(attrs.iter().map(|&a| Literal { attr: a, negated: rng.random_bool(0.5) }).collect()).expect("distinct attributes")
}

impl PlantedInstance {
    pub fn n(&self) -> usize {
        self.config.n
    }

    fn planted_attrs(&self) -> Vec<usize> {
        let mut a: Vec<usize> = self.h_star.terms().iter().flat_map(|t| t.literals().iter().map(|l| l.attr)).collect();
        a.sort_unstable();
        a.dedup();
        a
    }

    pub fn sample_ground<R: Rng + ?Sized>(&self, rng: &mut R) -> GroundSample {
        let cfg = &self.config;
        let mut x = vec![false; cfg.n];
        for &a in &self.free_attrs {
            x[a] = rng.random_bool(cfg.base_rate);
        }
        let planted = self.planted_attrs();
        for &a in &planted {
            x[a] = rng.random_bool(cfg.base_rate);
        }
        let terms = self.h_star.terms();
        if rng.random_bool(cfg.mu_target) {
            let j = rng.random_range(0..terms.len());
            for l in terms[j].literals() {
                x[l.attr] = !l.negated;
            }
        } else {
            // terminates: each redraw has probability >= (1 - base_rate^k)^r of success
            while terms.iter().any(|t| t.eval(&x)) {
                for &a in &planted {
                    x[a] = rng.random_bool(cfg.base_rate);
                }
            }
        }
        let h_terms: Vec<bool> = terms.iter().map(|t| t.eval(&x)).collect();
        let h = h_terms.iter().any(|&b| b);
        let c = if h { !rng.random_bool(cfg.epsilon_star) } else { rng.random_bool(cfg.c_base_rate) };
        x[self.output_attr] = c;
        for p in &self.proxies {
            x[p.attr] = p.literal.eval(&x) && rng.random_bool(cfg.proxy_rate);
        }
        GroundSample { assignment: x, c, h_terms }
    }

    /// `m` masked rows plus the ground truth behind them.
    pub fn sample_masked(&self, m: usize, process: &MaskProcess, seed: u64) -> Result<MaskedSample, SynthError> {
        process.validate(self.n())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(m);
        let mut truth = Vec::with_capacity(m);
        for _ in 0..m {
            let g = self.sample_ground(&mut rng);
            rows.push(mask(&g.assignment, process, &mut rng));
            truth.push(g);
        }
        let dataset = Dataset::new(self.n(), None, rows)?;
        Ok(MaskedSample { dataset, truth })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskedSample {
    pub dataset: Dataset,
    /// Sidecar: the full assignment behind each row. For evaluation only.
    pub truth: Vec<GroundSample>,
}

impl MaskedSample {
    pub fn rows_consistent(&self) -> bool {
        self.dataset.rows().iter().zip(&self.truth).all(|(r, g): (&PartialExample, _)| r.consistent_with(&g.assignment))
    }
}
