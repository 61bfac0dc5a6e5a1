//! Command layer behind the `wiretap` binary. Every command returns its
//! output as a string so the same code serves the binary and the tests.

pub mod args;

use std::path::Path;

use serde::Serialize;
use wiretap_core::bits::seed_to_hex;
use wiretap_core::optimize::{construction_bound, max_phi_over_p, plan_rates, secrecy_capacity, Construction, PlanOutcome};
use wiretap_core::oracle::{run_suite, Suite, SuiteReport};
use wiretap_core::report::{count, dimensionless, symbols, Quantity, Report, Seeds, Unit, Units};
use wiretap_core::spec::{self, ChannelSpec, CodeSpec, HashSpec, PrefixSpec};
use wiretap_core::{rng, Channel, CosetEncoderFamily, PrefixChannel, SimulationConfig, WiretapCode};

pub use args::{Cli, Command, OutFormat};
use args::{BoundArgs, ConstructArgs, OptimizeArgs, PlanArgs, SimulateArgs, SuiteArg, VerifyArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] wiretap_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// What a command printed and the status it exits with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub status: i32,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Self { stdout, status: 0 }
    }
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let units = Units { bits: cli.bits };
    match &cli.command {
        Command::Bound(a) => bound(a, cli.out, units),
        Command::Plan(a) => plan(a, cli.out, units),
        Command::Optimize(a) => optimize(a, cli.out, units),
        Command::Construct(a) => construct(a, cli.out, units),
        Command::Simulate(a) => simulate(a, cli.out, units),
        Command::Verify(a) => verify(a, cli.out, units),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn json_only(out: OutFormat, what: &str) -> Result<(), CliError> {
    match out {
        OutFormat::Json => Ok(()),
        OutFormat::Csv => Err(CliError::Usage(format!("{what} has no CSV form; use --out json"))),
    }
}

fn channel(path: &Path, prefix: Option<&Path>) -> Result<Channel, CliError> {
    let ch = spec::load::<ChannelSpec>(path)?.build()?;
    Ok(match prefix {
        Some(p) => ch.with_prefix(&load_prefix(Some(p))?)?,
        None => ch,
    })
}

fn load_prefix(prefix: Option<&Path>) -> Result<PrefixChannel, CliError> {
    Ok(match prefix {
        Some(p) => spec::load::<PrefixSpec>(p)?.build()?,
        None => PrefixChannel::identity(2)?,
    })
}

fn check_epsilon(epsilon: Option<f64>) -> Result<(), CliError> {
    match epsilon {
        Some(e) if !(e > 0.0 && e.is_finite()) => Err(CliError::Usage(format!("--epsilon must be positive, got {e}"))),
        _ => Ok(()),
    }
}

fn check_confidence(confidence: Option<f64>) -> Result<(), CliError> {
    match confidence {
        Some(c) if !(c > 0.0 && c <= 1.0) => Err(CliError::Usage(format!("--confidence must lie in (0, 1], got {c}"))),
        _ => Ok(()),
    }
}

/// A wiretap code assembled from spec files and the seeds behind it.
pub struct Built {
    pub code: WiretapCode,
    pub seeds: Seeds,
}

pub fn build_code(
    code: &Path,
    hash: &Path,
    prefix: Option<&Path>,
    construction: Construction,
    master: u64,
) -> Result<Built, CliError> {
    let (linear, code_seed) = spec::load::<CodeSpec>(code)?.build(rng::derive_seed(master, "code"))?;
    let hash = spec::load::<HashSpec>(hash)?.build(rng::derive_seed(master, "hash"))?;
    let prefix = load_prefix(prefix)?;
    let family = CosetEncoderFamily::new(linear)?;
    let g_seed = rng::derive_seed(master, "G");
    let (code, g_seed) = match construction {
        Construction::Randomized => (
            WiretapCode::randomized(family, hash, prefix, &mut rng::stream(g_seed))?,
            Some(g_seed),
        ),
        Construction::Deterministic => (WiretapCode::deterministic(family, hash, prefix)?, None),
    };
    let seeds = Seeds {
        hash: Some(code.hash().seed_hex()),
        code: code_seed.map(seed_to_hex),
        g: g_seed.map(seed_to_hex),
        noise: None,
    };
    Ok(Built { code, seeds })
}

#[derive(Debug, Serialize)]
struct CsvRow {
    n: usize,
    s_star: Option<f64>,
    exponent_nats: Option<f64>,
    log_bound_nats: Option<f64>,
    feasible: bool,
}

fn write_csv(rows: &[CsvRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Usage(e.to_string()))
}

/// Feasible means within `epsilon` when one is given, otherwise a bound
/// that says more than the trivial `I(M;Z) ≤ ln|M|`.
fn feasible(log_bound: f64, ln_m: f64, epsilon: Option<f64>) -> bool {
    match epsilon {
        Some(e) => log_bound <= e.ln(),
        None => ln_m > 0.0 && log_bound < ln_m.ln(),
    }
}

fn bound(a: &BoundArgs, out: OutFormat, units: Units) -> Result<Output, CliError> {
    check_epsilon(a.epsilon)?;
    check_confidence(a.confidence)?;
    let construction: Construction = a.construction.into();
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    match (&a.code, &a.hash) {
        (Some(code), Some(hash)) => {
            let built = build_code(code, hash, a.prefix.as_deref(), construction, a.seed.seed)?;
            let eve = spec::load::<ChannelSpec>(&a.channel)?.build()?;
            for &n in &a.n.0 {
                let rep = wiretap_core::leakage_report(&built.code, &eve, n, a.epsilon, a.confidence)?;
                log::debug!("n = {n}: s* = {}, log bound = {}", rep.s_star, rep.log_bound);
                rows.push(CsvRow {
                    n,
                    s_star: Some(rep.s_star),
                    exponent_nats: Some(rep.exponent),
                    log_bound_nats: Some(rep.log_bound),
                    feasible: feasible(rep.log_bound, rep.ln_m, a.epsilon),
                });
                reports.push(Report::from_leakage(&rep, units).with_seeds(built.seeds.clone(), built.code.g()));
            }
        }
        _ => {
            let (rate_l, rate_m) = match (a.rate_l, a.rate_m) {
                (Some(l), Some(m)) => (l, m),
                _ => return Err(CliError::Usage("bound needs --rate-l and --rate-m, or --code and --hash".into())),
            };
            let ch = channel(&a.channel, a.prefix.as_deref())?;
            for &n in &a.n.0 {
                let plan = construction_bound(construction, &ch, rate_l * n as f64, rate_m * n as f64, n)?;
                log::debug!("n = {n}: s* = {}, log bound = {}", plan.s_star, plan.log_bound);
                rows.push(CsvRow {
                    n,
                    s_star: Some(plan.s_star),
                    exponent_nats: Some(plan.exponent),
                    log_bound_nats: Some(plan.log_bound),
                    feasible: feasible(plan.log_bound, plan.ln_m, a.epsilon),
                });
                reports.push(Report::from_plan(&plan, units).with_targets(plan.log_bound, a.epsilon, a.confidence, units));
            }
        }
    }
    Ok(Output::ok(match out {
        OutFormat::Csv => write_csv(&rows)?,
        OutFormat::Json if a.n.is_sweep() => to_json(&reports)?,
        OutFormat::Json => to_json(&reports[0])?,
    }))
}

#[derive(Debug, Serialize)]
struct FeasiblePlan {
    feasible: bool,
    rate_m: Quantity,
    #[serde(flatten)]
    report: Report,
}

#[derive(Debug, Serialize)]
struct InfeasiblePlan {
    feasible: bool,
    construction: &'static str,
    n: Quantity,
    #[serde(rename = "ln_L")]
    ln_l: Quantity,
    epsilon: Quantity,
    /// Smallest grid value of ln|M| tried, and its bound.
    #[serde(rename = "smallest_ln_M")]
    smallest_ln_m: Quantity,
    log_bound_nats: Quantity,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum PlanOut {
    Feasible(Box<FeasiblePlan>),
    Infeasible(InfeasiblePlan),
}

fn plan(a: &PlanArgs, out: OutFormat, units: Units) -> Result<Output, CliError> {
    check_epsilon(Some(a.epsilon))?;
    let ch = channel(&a.channel, a.prefix.as_deref())?;
    let mut plans = Vec::new();
    let mut rows = Vec::new();
    for &n in &a.n.0 {
        match plan_rates(a.construction.into(), &ch, a.rate_l, n, a.epsilon)? {
            PlanOutcome::Feasible(p) => {
                rows.push(CsvRow {
                    n,
                    s_star: Some(p.s_star),
                    exponent_nats: Some(p.exponent),
                    log_bound_nats: Some(p.log_bound),
                    feasible: true,
                });
                plans.push(PlanOut::Feasible(Box::new(FeasiblePlan {
                    feasible: true,
                    rate_m: units.rate(p.ln_m / n as f64),
                    report: Report::from_plan(&p, units).with_targets(p.log_bound, Some(a.epsilon), None, units),
                })));
            }
            PlanOutcome::Infeasible {
                construction,
                n,
                ln_l,
                epsilon,
                smallest_ln_m,
                log_bound,
            } => {
                rows.push(CsvRow {
                    n,
                    s_star: None,
                    exponent_nats: None,
                    log_bound_nats: Some(log_bound),
                    feasible: false,
                });
                plans.push(PlanOut::Infeasible(InfeasiblePlan {
                    feasible: false,
                    construction: construction.name(),
                    n: symbols(n),
                    ln_l: units.info(ln_l),
                    epsilon: units.info(epsilon),
                    smallest_ln_m: units.info(smallest_ln_m),
                    log_bound_nats: units.log_info(log_bound),
                }));
            }
        }
    }
    Ok(Output::ok(match out {
        OutFormat::Csv => write_csv(&rows)?,
        OutFormat::Json if a.n.is_sweep() => to_json(&plans)?,
        OutFormat::Json => to_json(&plans[0])?,
    }))
}

#[derive(Debug, Serialize)]
struct Law {
    values: Vec<f64>,
    unit: Unit,
}

fn law(p: &[f64]) -> Law {
    Law {
        values: p.to_vec(),
        unit: Unit::Probability,
    }
}

#[derive(Debug, Serialize)]
struct MaxPhiOut {
    s: Quantity,
    input: Law,
    value: Quantity,
    iterations: Quantity,
    residual: Quantity,
}

#[derive(Debug, Serialize)]
struct CapacityOut {
    value: Quantity,
    input: Law,
}

#[derive(Debug, Serialize)]
struct OptimizeOut {
    max_phi: MaxPhiOut,
    secrecy_capacity: Option<CapacityOut>,
}

fn optimize(a: &OptimizeArgs, out: OutFormat, units: Units) -> Result<Output, CliError> {
    json_only(out, "optimize")?;
    let eve = channel(&a.channel, a.prefix.as_deref())?;
    let m = max_phi_over_p(a.s, &eve)?;
    let secrecy = match &a.bob {
        Some(bob) => {
            let bob = channel(bob, a.prefix.as_deref())?;
            let c = secrecy_capacity(&bob, &eve)?;
            Some(CapacityOut {
                value: units.rate(c.value),
                input: law(c.input.probs()),
            })
        }
        None => None,
    };
    to_json(&OptimizeOut {
        max_phi: MaxPhiOut {
            s: dimensionless(a.s),
            input: law(m.p_opt.probs()),
            value: units.rate(m.value),
            iterations: count(m.iterations as u64),
            residual: dimensionless(m.residual),
        },
        secrecy_capacity: secrecy,
    })
    .map(Output::ok)
}

#[derive(Debug, Serialize)]
struct HashOut {
    l: Quantity,
    k: Quantity,
    seed_hex: String,
}

#[derive(Debug, Serialize)]
struct ConstructOut {
    construction: &'static str,
    n: Quantity,
    /// Dimension of the channel code.
    code_k: Quantity,
    cosets: Quantity,
    coset: Quantity,
    #[serde(rename = "ln_L")]
    ln_l: Quantity,
    #[serde(rename = "ln_M")]
    ln_m: Quantity,
    generator_hex: Vec<String>,
    parity_check_hex: Vec<String>,
    hash: HashOut,
    prefix: Vec<Law>,
    seeds: Seeds,
}

fn construct(a: &ConstructArgs, out: OutFormat, units: Units) -> Result<Output, CliError> {
    json_only(out, "construct")?;
    let built = build_code(&a.code, &a.hash, a.prefix.as_deref(), a.construction.into(), a.seed.seed)?;
    let wt = &built.code;
    let code = wt.family().code();
    let rates = Report::from_code(wt, units);
    to_json(&ConstructOut {
        construction: wt.construction().name(),
        n: symbols(wt.n()),
        code_k: count(code.k() as u64),
        cosets: count(wt.family().coset_count()),
        coset: count(wt.g()),
        ln_l: rates.ln_l,
        ln_m: rates.ln_m,
        generator_hex: code.generator_hex(),
        parity_check_hex: code
            .parity_check()
            .iter()
            .map(|&r| wiretap_core::bits::word_to_hex(r, code.n()))
            .collect(),
        hash: HashOut {
            l: count(wt.hash().l_dim() as u64),
            k: count(wt.hash().k_dim() as u64),
            seed_hex: wt.hash().seed_hex(),
        },
        prefix: wt.prefix().matrix().rows().map(law).collect(),
        seeds: built.seeds,
    })
    .map(Output::ok)
}

fn simulate(a: &SimulateArgs, out: OutFormat, units: Units) -> Result<Output, CliError> {
    json_only(out, "simulate")?;
    check_epsilon(a.epsilon)?;
    check_confidence(a.confidence)?;
    let built = build_code(&a.code, &a.hash, a.prefix.as_deref(), a.construction.into(), a.seed.seed)?;
    let bob = spec::load::<ChannelSpec>(&a.channel)?.build()?;
    let config = SimulationConfig {
        trials: a.trials,
        seed: a.seed.seed,
        workers: a.workers,
        trace: a.trace.is_some(),
    };
    let sim = wiretap_core::simulate(&built.code, &bob, &config)?;
    if let (Some(path), Some(trace)) = (&a.trace, &sim.trace) {
        let mut w = csv::Writer::from_path(path)?;
        for r in trace {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    let report = match &a.eve {
        Some(eve) => {
            let eve = spec::load::<ChannelSpec>(eve)?.build()?;
            let n = a.n.unwrap_or(built.code.n());
            let rep = wiretap_core::leakage_report(&built.code, &eve, n, a.epsilon, a.confidence)?;
            Report::from_leakage(&rep, units)
        }
        None => Report::from_code(&built.code, units),
    };
    let seeds = Seeds {
        noise: Some(seed_to_hex(sim.seeds.noise)),
        ..built.seeds
    };
    to_json(&report.with_seeds(seeds, built.code.g()).with_simulation(&sim)).map(Output::ok)
}

#[derive(Debug, Serialize)]
struct VerdictOut {
    name: String,
    bound: wiretap_core::oracle::BoundKind,
    n: Quantity,
    generator_hex: Vec<String>,
    message_bits: Quantity,
    leakage: Quantity,
    best_rhs: Quantity,
    best_s: Quantity,
    min_slack: Quantity,
    worst_s: Quantity,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct ConvergenceOut {
    coarse_bins: Quantity,
    fine_bins: Quantity,
    coarse: Quantity,
    fine: Quantity,
    relative_gap: Quantity,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct VerifyOut {
    suite: Suite,
    passed: bool,
    instances: Quantity,
    self_test_failed: bool,
    convergence: Option<ConvergenceOut>,
    verdicts: Vec<VerdictOut>,
}

fn verify_out(r: &SuiteReport, units: Units) -> VerifyOut {
    VerifyOut {
        suite: r.suite,
        passed: r.passed,
        instances: count(r.verdicts.len() as u64),
        self_test_failed: r.self_test_failed,
        convergence: r.convergence.map(|c| ConvergenceOut {
            coarse_bins: count(c.coarse_bins as u64),
            fine_bins: count(c.fine_bins as u64),
            coarse: units.info(c.coarse),
            fine: units.info(c.fine),
            relative_gap: dimensionless(c.relative_gap),
            passed: c.passed,
        }),
        verdicts: r
            .verdicts
            .iter()
            .map(|v| VerdictOut {
                name: v.instance.name.clone(),
                bound: v.instance.bound,
                n: symbols(v.instance.n),
                generator_hex: v.instance.generator_hex.clone(),
                message_bits: count(v.instance.message_bits as u64),
                leakage: units.info(v.leakage),
                best_rhs: units.info(v.best_rhs),
                best_s: dimensionless(v.best_s),
                min_slack: units.info(v.min_slack),
                worst_s: dimensionless(v.worst_s),
                passed: v.passed,
            })
            .collect(),
    }
}

fn verify(a: &VerifyArgs, out: OutFormat, units: Units) -> Result<Output, CliError> {
    json_only(out, "verify")?;
    let suite = match a.suite {
        SuiteArg::Small => Suite::Small,
        SuiteArg::Full => Suite::Full,
    };
    let report = run_suite(suite)?;
    for v in report.verdicts.iter().filter(|v| !v.passed) {
        log::error!("bound violated on {}: slack {:e} at s = {}", v.instance.name, v.min_slack, v.worst_s);
    }
    Ok(Output {
        stdout: to_json(&verify_out(&report, units))?,
        status: if report.passed { 0 } else { 1 },
    })
}
