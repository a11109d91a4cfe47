use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abduction::io::{load_dataset, load_kb, read_query, DatasetFormat};
use abduction::parallel::{build_coverage_parallel, resolve_workers};
use abduction::report::{check_line, AbduceConfig, AbduceReport, EvaluateReport, Provenance, SampleRecord};
use abduction::{generate, write_generated, GenerateConfig};
use abduction_core::oracle::{exact_filter_counts, optimal_partial_cover, CoverOptimum, OracleConfig};
use abduction_core::synth::PlantConfig;
use abduction_core::{
    abduce_from_matrix, build_coverage, compare_bounds, enumerate_terms_over, estimate_mu_from_matrix, evaluate,
    filter_terms, greedy_partial_cover, required_samples, AbductionParams, AbductionStatus, Dataset, Formula, KDnf,
    MaskProcess, ProofEngine,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

/// Learn short k-DNF explanations from partially observed examples.
#[derive(Parser, Debug)]
#[command(name = "abduct", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a planted synthetic instance: dataset, kb.txt, query.txt, manifest.json.
    Generate(GenerateArgs),
    /// Search for an explanation of the query. Exit 0 when found, 2 when none exists at this mu.
    Abduce(AbduceArgs),
    /// Print the sample size the guarantees ask for.
    Samples(SamplesArgs),
    /// Score a hypothesis on held-out rows against the theoretical bounds.
    Evaluate(EvaluateArgs),
    /// Cross-check the coverage pipeline against brute force on a small instance.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Plausibility: fraction of rows the explanation must be provable on.
    #[arg(long, default_value_t = 0.3)]
    mu: f64,
    /// Tolerated rate of provable ~c among rows where the explanation is provable.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Maximum literals per term.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Number of terms the target explanation is assumed to have.
    #[arg(long, default_value_t = 3)]
    r: usize,
}

impl ParamArgs {
    fn params(&self, n: usize) -> AbductionParams {
        AbductionParams { mu: self.mu, epsilon: self.epsilon, gamma: self.gamma, delta: self.delta, k: self.k, r: self.r, n }
    }
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Dataset file (.csv, or .jsonl).
    #[arg(long)]
    examples: PathBuf,
    /// Clause file, one clause per line.
    #[arg(long)]
    kb: PathBuf,
    /// Query formula, or @FILE.
    #[arg(long)]
    query: String,
    /// witnessed | unitprop | resolution:W
    #[arg(long, default_value = "unitprop")]
    engine: ProofEngine,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 0.6)]
    mu_target: f64,
    #[arg(long, default_value_t = 0.05)]
    epsilon_star: f64,
    /// Probability that each cell is hidden.
    #[arg(long, default_value_t = 0.2)]
    mask_rate: f64,
    /// Mask as JSON, e.g. '{"kind":"fixed_subset","hidden":[0,3]}'. Overrides --mask-rate.
    #[arg(long)]
    mask: Option<String>,
    #[arg(long, default_value_t = 2000)]
    m: usize,
    /// Rows in a separately seeded holdout file; 0 for none.
    #[arg(long, default_value_t = 0)]
    holdout_m: usize,
    /// Proxy attributes linked to planted literals by kb clauses (default r*k).
    #[arg(long)]
    proxies: Option<usize>,
    #[arg(long)]
    overlapping: bool,
    /// Also write the unmasked assignments.
    #[arg(long)]
    sidecar: bool,
    #[arg(long, value_enum, default_value = "csv")]
    data_format: DatasetFormat,
    #[arg(long, env = "ABDUCT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AbduceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Recorded in the report; the search itself is deterministic.
    #[arg(long, env = "ABDUCT_SEED", default_value_t = 0)]
    seed: u64,
    /// Use at most this many rows (the first ones).
    #[arg(long)]
    budget: Option<u64>,
    /// Held-out dataset to evaluate the explanation on.
    #[arg(long)]
    holdout: Option<PathBuf>,
    /// Leave the query's own attributes out of candidate terms.
    #[arg(long)]
    exclude_query_attrs: bool,
    /// Search mu over (1+gamma)^-j instead of using --mu.
    #[arg(long)]
    estimate_mu: bool,
    #[arg(long, default_value_t = 0.01)]
    mu_floor: f64,
    /// Coverage threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also write the JSON report here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SamplesArgs {
    /// Number of attributes.
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Hypothesis as a DNF formula, or @FILE.
    #[arg(long)]
    hypothesis: String,
    #[arg(long)]
    holdout: PathBuf,
    #[arg(long)]
    kb: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long, default_value = "unitprop")]
    engine: ProofEngine,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, env = "ABDUCT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    exclude_query_attrs: bool,
    #[arg(long, default_value_t = 4)]
    workers: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // exit code 2 is reserved for "no plausible explanation"
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Abduce(a) => cmd_abduce(a),
        Command::Samples(a) => cmd_samples(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<ExitCode> {
    let mask = match &a.mask {
        Some(text) => serde_json::from_str(text).context("--mask")?,
        None => MaskProcess::Independent { p: a.mask_rate },
    };
    let mut plant = PlantConfig::new(a.n, a.k, a.r, a.mu_target, a.epsilon_star);
    if let Some(p) = a.proxies {
        plant.proxies = p;
    }
    plant.overlapping = a.overlapping;
    let cfg = GenerateConfig { plant, mask, m: a.m, holdout_m: a.holdout_m, seed: a.seed, format: a.data_format, sidecar: a.sidecar };
    // everything is validated and sampled before the first write
    let g = generate(&cfg)?;
    let paths = write_generated(&a.out, &cfg, &g)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

struct Inputs {
    dataset: Dataset,
    kb: abduction_core::KnowledgeBase,
    c: Formula,
}

fn load_inputs(examples: &Path, kb: &Path, query: &str) -> Result<Inputs> {
    let dataset = load_dataset(examples)?;
    let n = dataset.n();
    let kb = load_kb(kb, n)?;
    let c = read_query(query, n)?;
    info!("loaded {} rows over {} attributes, {} clauses", dataset.m(), n, kb.clauses().len());
    Ok(Inputs { dataset, kb, c })
}

fn candidate_terms(n: usize, k: usize, c: &Formula, exclude_query_attrs: bool) -> Result<Vec<abduction_core::Term>> {
    let excluded = if exclude_query_attrs { c.attributes() } else { Default::default() };
    let attrs: Vec<usize> = (0..n).filter(|a| !excluded.contains(a)).collect();
    Ok(enumerate_terms_over(&attrs, k)?)
}

fn cmd_abduce(a: AbduceArgs) -> Result<ExitCode> {
    let Inputs { mut dataset, kb, c } = load_inputs(&a.input.examples, &a.input.kb, &a.input.query)?;
    let mut params = a.params.params(dataset.n());
    params.validate()?;
    let derived = required_samples(&params)?;
    let samples = SampleRecord::new(derived, a.budget, dataset.m() as u64);
    dataset.truncate(samples.actual_m as usize);
    if dataset.m() == 0 {
        bail!("{}: no rows", a.input.examples.display());
    }
    info!("theoretical m = {}, using {} rows", samples.theoretical_m, samples.actual_m);

    let terms = candidate_terms(dataset.n(), params.k, &c, a.exclude_query_attrs)?;
    let matrix = build_coverage_parallel(terms, &kb, &c, &dataset, a.input.engine, a.workers);
    let mu_estimate = if a.estimate_mu {
        let est = estimate_mu_from_matrix(&matrix, &params, a.mu_floor)?;
        params.mu = est.mu;
        Some(est)
    } else {
        None
    };
    let result = abduce_from_matrix(&matrix, &params)?;

    let (evaluation, bounds) = match &a.holdout {
        Some(path) if result.status == AbductionStatus::Found => {
            let holdout = load_dataset(path)?;
            let mut report = evaluate(&result.h, &kb, &c, &holdout, &params, a.input.engine)?;
            report.holdout_disjoint = path != &a.input.examples;
            let bounds = compare_bounds(&report, &params, result.r_prime);
            (Some(report), Some(bounds))
        }
        _ => (None, None),
    };

    let report = AbduceReport {
        provenance: Provenance::new(a.seed),
        command: "abduce".into(),
        config: AbduceConfig {
            examples: a.input.examples.display().to_string(),
            kb: a.input.kb.display().to_string(),
            query: c.to_string(),
            holdout: a.holdout.as_ref().map(|p| p.display().to_string()),
            params,
            engine: a.input.engine,
            budget: a.budget,
            exclude_query_attrs: a.exclude_query_attrs,
            estimate_mu: a.estimate_mu,
            mu_floor: a.mu_floor,
        },
        samples,
        mu_estimate,
        h_formula: result.h.to_string(),
        result,
        evaluation,
        bounds,
    };
    if let Some(path) = &a.output {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    match a.format {
        Format::Json => print_json(&report)?,
        Format::Table => print!("{}", abduce_table(&report)),
    }
    Ok(match report.result.status {
        AbductionStatus::Found => ExitCode::SUCCESS,
        AbductionStatus::NoPlausibleExplanation => ExitCode::from(2),
    })
}

fn abduce_table(r: &AbduceReport) -> String {
    let res = &r.result;
    let mut s = String::new();
    let _ = writeln!(s, "status         {:?}", res.status);
    let _ = writeln!(s, "explanation    {}", r.h_formula);
    let _ = writeln!(s, "terms          {}", res.r_prime);
    let _ = writeln!(s, "covered        {} / {} (target {})", res.covered, res.m, res.cover_target);
    let _ = writeln!(s, "filter         {} of {} terms kept (bad count <= {})", res.surviving_terms, res.candidate_terms, res.filter_threshold);
    let _ = writeln!(s, "rows           {} used, {} required{}", r.samples.actual_m, r.samples.theoretical_m, if r.samples.capped { " (capped)" } else { "" });
    if let Some(est) = &r.mu_estimate {
        let _ = writeln!(s, "mu estimate    {:.6} ({} grid values tried)", est.mu, est.tried.len());
    }
    for t in &res.terms {
        let _ = writeln!(s, "  {:<20} coverage {:>7}  bad {:>5}  gain {:>7}", t.term.to_string(), t.coverage, t.bad_count, t.gain);
    }
    if let (Some(e), Some(b)) = (&r.evaluation, &r.bounds) {
        let _ = writeln!(s, "holdout        {} rows, {} with a provable term", e.rows, e.denominator);
        let _ = writeln!(s, "{}", check_line("plausibility", &b.plausibility));
        match &b.entailment {
            Some(c) => {
                let _ = writeln!(s, "{}", check_line("error", c));
            }
            None => {
                let _ = writeln!(s, "error         undefined (no row with a provable term)");
            }
        }
    }
    let _ = writeln!(s, "seed           {}", r.provenance.seed);
    s
}

#[derive(Serialize)]
struct SamplesOutput {
    #[serde(flatten)]
    provenance: Provenance,
    params: AbductionParams,
    #[serde(flatten)]
    derived: abduction_core::DerivedParams,
}

fn cmd_samples(a: SamplesArgs) -> Result<ExitCode> {
    let params = a.params.params(a.n);
    let d = required_samples(&params)?;
    match a.format {
        Format::Json => print_json(&SamplesOutput { provenance: Provenance::new(0), params, derived: d })?,
        Format::Table => {
            println!("|T| terms of width 1..=k           {}", d.term_count);
            println!("L   = ln 2 + r ln|T| - ln delta   {:.6}", d.log_hypotheses);
            println!("m_cover  = ceil(6/(mu gamma^2) L ln(3L/gamma^2))   {}", d.m_cover);
            println!("m_filter = ceil(12/(mu gamma^2) ln(1/delta'))      {}", d.m_filter);
            println!("delta'   = delta / (2 sum_(i<=k) C(2n,i) + 4)      {:.6e}", d.delta_prime);
            println!("m        = max(m_cover, m_filter)                  {}", d.m);
            println!("filter threshold floor(mu eps m)                   {}", d.filter_threshold);
            println!("cover target     ceil(mu m)                        {}", d.cover_target);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<ExitCode> {
    let holdout = load_dataset(&a.holdout)?;
    let n = holdout.n();
    let kb = load_kb(&a.kb, n)?;
    let c = read_query(&a.query, n)?;
    let h_formula = read_query(&a.hypothesis, n).context("--hypothesis")?;
    let params = a.params.params(n);
    params.validate()?;
    let h = KDnf::from_formula(&h_formula, params.k).context("--hypothesis must be a DNF with terms of width <= k")?;
    let evaluation = evaluate(&h, &kb, &c, &holdout, &params, a.engine)?;
    let bounds = compare_bounds(&evaluation, &params, h.len());
    let report = EvaluateReport {
        provenance: Provenance::new(a.seed),
        command: "evaluate".into(),
        hypothesis: h.to_string(),
        holdout: a.holdout.display().to_string(),
        params,
        engine: a.engine,
        evaluation,
        bounds,
    };
    match a.format {
        Format::Json => print_json(&report)?,
        Format::Table => {
            println!("hypothesis    {}", report.hypothesis);
            println!("rows          {} ({} with a provable term)", report.evaluation.rows, report.evaluation.denominator);
            println!("{}", check_line("plausibility", &report.bounds.plausibility));
            match &report.bounds.entailment {
                Some(c) => println!("{}", check_line("error", c)),
                None => println!("error         undefined (no row with a provable term)"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyOutput {
    filter_counts_match: bool,
    parallel_matches_serial: bool,
    /// `None` when the surviving terms exceed the exhaustive search limit.
    greedy_size: Option<usize>,
    optimal_size: Option<CoverOptimum>,
    greedy_within_log_factor: Option<bool>,
    terms: usize,
    rows: usize,
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let Inputs { dataset, kb, c } = load_inputs(&a.input.examples, &a.input.kb, &a.input.query)?;
    let params = a.params.params(dataset.n());
    params.validate()?;
    let cfg = OracleConfig::default();
    let terms = candidate_terms(dataset.n(), params.k, &c, a.exclude_query_attrs)?;
    let serial = build_coverage(terms.clone(), &kb, &c, &dataset, a.input.engine);
    let parallel = build_coverage_parallel(terms.clone(), &kb, &c, &dataset, a.input.engine, resolve_workers(a.workers));
    let exact = exact_filter_counts(&cfg, &terms, &kb, &c, &dataset, a.input.engine)?;

    let survivors: Vec<usize> = filter_terms(&serial, params.filter_threshold(dataset.m()))
        .into_iter()
        .filter(|&i| serial.provable_sets()[i].count() > 0)
        .collect();
    let target = params.cover_target(dataset.m());
    let (mut greedy_size, mut optimal_size, mut within) = (None, None, None);
    if survivors.len() <= cfg.max_terms {
        let greedy = greedy_partial_cover(serial.provable_sets(), &survivors, target);
        let sets: Vec<Vec<usize>> = survivors.iter().map(|&i| serial.provable_sets()[i].iter().collect()).collect();
        let opt = optimal_partial_cover(&cfg, &sets, target as usize)?;
        within = Some(match opt {
            CoverOptimum::Sets(o) => greedy.success && (target == 0 || greedy.chosen.len() as f64 <= o as f64 * (target as f64).ln() + 1.0),
            CoverOptimum::Infeasible => !greedy.success,
        });
        greedy_size = greedy.success.then_some(greedy.chosen.len());
        optimal_size = Some(opt);
    }
    let out = VerifyOutput {
        filter_counts_match: exact == serial.bad_counts(),
        parallel_matches_serial: parallel == serial,
        greedy_size,
        optimal_size,
        greedy_within_log_factor: within,
        terms: terms.len(),
        rows: dataset.m(),
    };
    print_json(&out)?;
    let ok = out.filter_counts_match && out.parallel_matches_serial && out.greedy_within_log_factor != Some(false);
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
