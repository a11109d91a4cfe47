//! JSON documents written by the command-line tool.

use abduction_core::evaluate::CriterionCheck;
use abduction_core::{
    AbductionParams, AbductionResult, BoundCheck, DerivedParams, EvalReport, MaskProcess, MuEstimate, ProofEngine, PRNG_NAME,
};
use abduction_core::synth::{PlantConfig, Proxy};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;
pub const TOOL: &str = "abduct";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies the build and the random stream behind a document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub prng: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(seed: u64) -> Self {
        Provenance { schema: SCHEMA, tool: TOOL.into(), version: VERSION.into(), prng: PRNG_NAME.into(), seed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbduceConfig {
    pub examples: String,
    pub kb: String,
    pub query: String,
    pub holdout: Option<String>,
    pub params: AbductionParams,
    pub engine: ProofEngine,
    pub budget: Option<u64>,
    pub exclude_query_attrs: bool,
    pub estimate_mu: bool,
    pub mu_floor: f64,
}

/// Rows the theory asks for against rows actually used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub theoretical_m: u64,
    pub actual_m: u64,
    pub available_m: u64,
    pub capped: bool,
    pub derived: DerivedParams,
}

impl SampleRecord {
    /// The first `min(theoretical, budget, available)` rows are used.
    pub fn new(derived: DerivedParams, budget: Option<u64>, available_m: u64) -> Self {
        let actual_m = derived.m.min(budget.unwrap_or(u64::MAX)).min(available_m);
        SampleRecord { theoretical_m: derived.m, actual_m, available_m, capped: actual_m < derived.m, derived }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbduceReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub command: String,
    pub config: AbduceConfig,
    pub samples: SampleRecord,
    pub mu_estimate: Option<MuEstimate>,
    pub result: AbductionResult,
    /// `result.h` as a formula string.
    pub h_formula: String,
    pub evaluation: Option<EvalReport>,
    pub bounds: Option<BoundCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub command: String,
    pub hypothesis: String,
    pub holdout: String,
    pub params: AbductionParams,
    pub engine: ProofEngine,
    pub evaluation: EvalReport,
    pub bounds: BoundCheck,
}

/// Everything needed to regenerate a synthetic instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub provenance: Provenance,
    /// The data model is this tool's own planted construction, not observed data.
    pub generator: String,
    pub plant: PlantConfig,
    pub mask: MaskProcess,
    pub m: usize,
    pub sample_seed: u64,
    pub holdout_m: usize,
    pub holdout_seed: u64,
    pub h_star: String,
    pub query: String,
    pub output_attr: usize,
    pub proxies: Vec<Proxy>,
    pub kb_clauses: usize,
    pub files: Vec<String>,
}

pub fn check_line(name: &str, c: &CriterionCheck) -> String {
    format!(
        "{name:<13} observed {:.4}  threshold {:.4}  slack {:.4}  margin {:+.4}  {}",
        c.observed,
        c.threshold,
        c.slack,
        c.margin,
        if c.pass { "pass" } else { "FAIL" }
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use abduction_core::required_samples;

    fn derived() -> DerivedParams {
        required_samples(&AbductionParams { mu: 0.3, epsilon: 0.1, gamma: 0.5, delta: 0.1, k: 2, r: 3, n: 20 }).unwrap()
    }

    #[test]
    fn sample_record_caps() {
        let s = SampleRecord::new(derived(), None, 50_000);
        assert_eq!((s.theoretical_m, s.actual_m, s.capped), (10368, 10368, false));
        let s = SampleRecord::new(derived(), Some(500), 50_000);
        assert_eq!((s.actual_m, s.capped), (500, true));
        let s = SampleRecord::new(derived(), None, 900);
        assert_eq!((s.actual_m, s.capped), (900, true));
    }

    #[test]
    fn provenance_is_flattened() {
        let v = serde_json::to_value(Provenance::new(9)).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["seed"], 9);
        assert_eq!(v["prng"], PRNG_NAME);
    }
}
