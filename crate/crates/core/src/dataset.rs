//! Partial examples, datasets, and the masking processes that turn total
//! assignments into partial ones.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::TriValue;

/// One row: a tri-valued assignment to the `n` attributes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialExample(pub Vec<TriValue>);

impl PartialExample {
    pub fn from_bools(bits: &[bool]) -> Self {
        PartialExample(bits.iter().map(|&b| TriValue::from_bool(b)).collect())
    }

    pub fn values(&self) -> &[TriValue] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses a string over `0`, `1`, `*` (and `?`).
    pub fn parse(s: &str) -> Option<Self> {
        s.chars().map(TriValue::from_char).collect::<Option<Vec<_>>>().map(PartialExample)
    }

    /// `self` observes a superset of `coarser`'s coordinates and agrees on them.
    pub fn refines(&self, coarser: &PartialExample) -> bool {
        self.len() == coarser.len()
            && self.0.iter().zip(&coarser.0).all(|(a, b)| *b == TriValue::Unobserved || a == b)
    }

    /// Agrees with the total assignment on every observed coordinate.
    pub fn consistent_with(&self, total: &[bool]) -> bool {
        self.0.iter().zip(total).all(|(v, &b)| v.as_bool().is_none_or(|x| x == b))
    }
}

impl fmt::Display for PartialExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            write!(f, "{}", v.to_char())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("row {row} has {found} cells, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),
    #[error("illegal probability {0}")]
    Probability(String),
    #[error("attribute index {attr} outside 0..{n}")]
    AttributeOutOfRange { attr: usize, n: usize },
}

/// Rows of partial examples over named attributes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    attribute_names: Vec<String>,
    rows: Vec<PartialExample>,
}

impl Dataset {
    /// Attribute names default to `x1..xn` when `names` is `None`.
    pub fn new(n: usize, names: Option<Vec<String>>, rows: Vec<PartialExample>) -> Result<Self, DatasetError> {
        let names = names.unwrap_or_else(|| default_names(n));
        if names.len() != n {
            return Err(DatasetError::Ragged { row: 0, found: names.len(), expected: n });
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::DuplicateAttribute(name.clone()));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(DatasetError::Ragged { row: i + 1, found: r.len(), expected: n });
            }
        }
        Ok(Dataset { attribute_names: names, rows })
    }

    pub fn n(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn rows(&self) -> &[PartialExample] {
        &self.rows
    }

    /// Keeps the first `m` rows.
    pub fn truncate(&mut self, m: usize) {
        self.rows.truncate(m);
    }

    pub fn unobserved_fraction(&self) -> f64 {
        let cells = self.m() * self.n();
        if cells == 0 {
            return 0.0;
        }
        let hidden: usize = self.rows.iter().map(|r| r.0.iter().filter(|v| !v.is_observed()).count()).sum();
        hidden as f64 / cells as f64
    }
}

pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// How cells get hidden.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskProcess {
    /// Each cell hidden independently with probability `p`.
    Independent { p: f64 },
    /// The listed attributes are always hidden, all others always shown.
    FixedSubset { hidden: BTreeSet<usize> },
    /// `hide[attr][value]` is the probability of hiding `attr` when it takes `value`.
    ValueDependent { hide: Vec<[f64; 2]> },
}

impl MaskProcess {
    pub fn validate(&self, n: usize) -> Result<(), DatasetError> {
        let check = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(DatasetError::Probability(format!("{p}")))
            }
        };
        match self {
            MaskProcess::Independent { p } => check(*p),
            MaskProcess::FixedSubset { hidden } => match hidden.iter().find(|&&a| a >= n) {
                Some(&attr) => Err(DatasetError::AttributeOutOfRange { attr, n }),
                None => Ok(()),
            },
            MaskProcess::ValueDependent { hide } => {
                if hide.len() != n {
                    return Err(DatasetError::Ragged { row: 0, found: hide.len(), expected: n });
                }
                hide.iter().flatten().try_for_each(|&p| check(p))
            }
        }
    }

    fn hides<R: Rng + ?Sized>(&self, attr: usize, value: bool, rng: &mut R) -> bool {
        match self {
            MaskProcess::Independent { p } => rng.random_bool(*p),
            MaskProcess::FixedSubset { hidden } => hidden.contains(&attr),
            MaskProcess::ValueDependent { hide } => rng.random_bool(hide[attr][value as usize]),
        }
    }
}

/// Hides cells of a total assignment; observed cells keep their true value.
pub fn mask<R: Rng + ?Sized>(assignment: &[bool], process: &MaskProcess, rng: &mut R) -> PartialExample {
    PartialExample(
        assignment
            .iter()
            .enumerate()
            .map(|(i, &b)| if process.hides(i, b, rng) { TriValue::Unobserved } else { TriValue::from_bool(b) })
            .collect(),
    )
}
