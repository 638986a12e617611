//! The `vbcast` command line.
//!
//! Every subcommand that produces a report wraps it in [`Report`]. Reports are
//! byte-identical for identical flags and seed, apart from `timestamp`.
//!
//! Exit codes: 0 when every check passes, 1 when a verification gate fails,
//! 2 on operational errors (bad flags, unreadable input, SDP non-convergence).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::broadcast::{
    canonical_b, check_axioms, choi_projector_hat, cloner, correlator_residual, spectral_decomposition,
    verify_uniqueness,
};
use crate::catalog::{build_named, named_map};
use crate::densemat::{hermitian_eigenvalues, random_density, Operator, Rng, C64};
use crate::diamond::{estimator, estimator_names, SdpConfig};
use crate::error::{Error, Result};
use crate::hovm::{depolarizing_mp, exact_mp_map, mc_mp_apply, mixing_weight};
use crate::qsample::{estimate_observable, sampler_from_decomposition, SampleMode};
use crate::sot::{check_postprocessing_equivalence, check_sot_axioms};
use crate::supermap::{AffineDecomposition, SuperMap};

pub const SCHEMA: u32 = 1;
pub const THREADS_ENV: &str = "VBCAST_THREADS";
/// Largest dimension for which `verify` runs the uniqueness certificate.
pub const UNIQUENESS_MAX_DIM: usize = 3;

const AXIOM_STATES: usize = 100;
const AXIOM_UNITARIES: usize = 20;
const UNIQUENESS_UNITARIES: usize = 20;
const SOT_CASES: usize = 50;
const CORRELATOR_CASES: usize = 100;

#[derive(Parser, Debug)]
#[command(name = "vbcast", version, about = "Virtual broadcasting maps: verification, diamond norms, sampling")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// System dimension d.
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..=6))]
    pub dim: u64,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Gate for algebraic residuals.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the verification suites on a named broadcaster.
    Verify {
        #[arg(long, default_value = "B")]
        object: String,
        /// Parameter of the `B_lambda` family.
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
    },
    /// Diamond norm of a target map.
    Diamond {
        #[arg(long, value_enum, default_value_t = Target::B)]
        target: Target,
        /// Map JSON (`{"d_in", "d_out", "choi"}`) for `--target file`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "sdp")]
        method: String,
    },
    /// Monte-Carlo estimation; writes the running trace as CSV by default.
    Sample {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        /// Two Pauli letters from `ixyz`, acting on the lowest two levels.
        #[arg(long, default_value = "zz")]
        obs: String,
        #[arg(long, default_value = "B")]
        object: String,
        /// Input state: `0`, `plus`, `mixed` or `random`.
        #[arg(long, default_value = "0")]
        state: String,
        #[arg(long, value_enum, default_value_t = Pipeline::Qsample)]
        pipeline: Pipeline,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
    },
    /// Print the Choi and Jamiołkowski matrices of a named map.
    Dump {
        #[arg(long)]
        object: String,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Target {
    #[value(name = "B")]
    #[serde(rename = "B")]
    B,
    #[value(name = "B-minus-Bplus")]
    #[serde(rename = "B-minus-Bplus")]
    BMinusBplus,
    #[value(name = "file")]
    #[serde(rename = "file")]
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Pipeline {
    /// Quasi-probability sampling of `Tr[L(ρ)(O₁⊗O₂)]`.
    Qsample,
    /// Haar measure-and-prepare sampling of `M(ρ)`.
    Mp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    ShotNoise,
}

/// Envelope shared by every JSON report.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report<T> {
    pub schema: u32,
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub dim: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub result: T,
    /// Seconds since the Unix epoch; the only field that varies between runs.
    pub timestamp: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Below,
    AtLeast,
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub rule: Rule,
    pub limit: f64,
    pub status: Status,
    pub note: Option<String>,
}

impl Check {
    fn gate(name: &str, value: f64, rule: Rule, limit: f64) -> Self {
        let ok = match rule {
            Rule::Below => value < limit,
            Rule::AtLeast => value >= limit,
            Rule::Equal => value == limit,
        };
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { name: name.into(), value: Some(value), rule, limit, status, note: None }
    }

    fn skipped(name: &str, rule: Rule, limit: f64, note: &str) -> Self {
        Self { name: name.into(), value: None, rule, limit, status: Status::Skipped, note: Some(note.into()) }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyResult {
    pub object: String,
    pub lambda: f64,
    pub checks: Vec<Check>,
    pub failed: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiamondSummary {
    pub target: Target,
    pub method: String,
    pub d_in: usize,
    pub d_out: usize,
    pub value: f64,
    pub lower_bound: f64,
    pub upper_bound: Option<f64>,
    pub witness_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSummary {
    pub pipeline: String,
    pub object: String,
    pub state: String,
    pub observable: String,
    pub mode: String,
    pub n: u64,
    pub mean: f64,
    pub stderr: f64,
    pub exact: f64,
    /// Largest `|z|`; a single value for the quasi-probability pipeline,
    /// the worst matrix entry for measure-and-prepare.
    pub max_abs_z: f64,
    pub l1_weight: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpResult {
    pub object: String,
    pub lambda: Option<f64>,
    pub d_in: usize,
    pub d_out: usize,
    pub choi: Operator,
    pub jamiolkowski: Operator,
}

/// A finished command: what to print and how to exit.
struct Outcome {
    body: Vec<u8>,
    exit: i32,
    message: Option<String>,
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    match execute(&cli) {
        Ok(outcome) => {
            if let Some(msg) = &outcome.message {
                eprintln!("{msg}");
            }
            match write_output(cli.global.out.as_deref(), &outcome.body) {
                Ok(()) => outcome.exit,
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn write_output(path: Option<&Path>, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(body)?;
            w.flush()?;
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<Outcome> {
    if cli.global.tol.is_nan() || cli.global.tol <= 0.0 {
        return Err(Error::InvalidArgument("--tol must be positive".into()));
    }
    match &cli.command {
        Command::Verify { object, lambda } => cmd_verify(&cli.global, object, *lambda),
        Command::Diamond { target, input, method } => cmd_diamond(&cli.global, *target, input.as_deref(), method),
        Command::Sample { n, obs, object, state, pipeline, mode } => {
            cmd_sample(&cli.global, *n, obs, object, state, *pipeline, *mode)
        }
        Command::Dump { object, lambda } => cmd_dump(&cli.global, object, *lambda),
    }
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|t| t.as_secs()).unwrap_or(0)
}

fn envelope<T: Serialize>(
    g: &GlobalArgs,
    command: &str,
    tolerances: BTreeMap<String, f64>,
    result: T,
) -> Result<Vec<u8>> {
    let report = Report {
        schema: SCHEMA,
        command: command.into(),
        version: crate::VERSION.into(),
        seed: g.seed,
        dim: g.dim as usize,
        tolerances,
        result,
        timestamp: timestamp(),
    };
    let mut body = serde_json::to_vec_pretty(&report)?;
    body.push(b'\n');
    Ok(body)
}

fn tolerance_table(g: &GlobalArgs) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("residual".to_string(), g.tol),
        ("eigenvalue".to_string(), 1e-8),
        ("uniqueness_gap".to_string(), 1e6),
        ("uniqueness_residual".to_string(), 1e-8),
        ("z_score".to_string(), 5.0),
        ("sdp_gap".to_string(), SdpConfig::default().tolerance),
    ])
}

/// Runs every suite on `m` and returns the checks in a fixed order.
pub fn verification_checks(m: &SuperMap, d: usize, tol: f64, seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rng = Rng::new(seed, 0);

    let axioms = check_axioms(m, AXIOM_STATES, AXIOM_UNITARIES, &mut rng)?;
    for (name, value) in axioms.residuals() {
        checks.push(Check::gate(&format!("axioms.{name}"), value, Rule::Below, tol));
    }
    checks.push(Check::gate(
        "correlator",
        correlator_residual(m, CORRELATOR_CASES, &mut Rng::new(seed, 1))?,
        Rule::Below,
        tol,
    ));

    if d <= UNIQUENESS_MAX_DIM {
        let cert = verify_uniqueness(d, UNIQUENESS_UNITARIES, &mut Rng::new(seed, 2))?;
        checks.push(Check::gate("uniqueness.nullity", cert.nullity as f64, Rule::Equal, 0.0));
        checks.push(Check::gate("uniqueness.gap", cert.singular_value_gap, Rule::AtLeast, 1e6));
        checks.push(Check::gate("uniqueness.candidate_residual", cert.candidate_residual, Rule::Below, 1e-8));
        let distance = cert.solution.as_ref().map_or(f64::INFINITY, |s| s.max_abs_diff(m));
        checks.push(Check::gate("uniqueness.object_distance", distance, Rule::Below, 1e-8));
    } else {
        let note = "skipped: desk-scale limit";
        checks.push(Check::skipped("uniqueness.nullity", Rule::Equal, 0.0, note));
        checks.push(Check::skipped("uniqueness.gap", Rule::AtLeast, 1e6, note));
        checks.push(Check::skipped("uniqueness.candidate_residual", Rule::Below, 1e-8, note));
        checks.push(Check::skipped("uniqueness.object_distance", Rule::Below, 1e-8, note));
    }

    let dec = spectral_decomposition(d)?;
    checks.push(Check::gate("spectral.decomposition", dec.reconstruct().max_abs_diff(m), Rule::Below, tol));
    checks.push(Check::gate("spectral.eigenvalues", eigenvalue_defect(m, d)?, Rule::Below, 1e-8));
    checks.push(Check::gate("spectral.projectors", projector_defect(d), Rule::Below, tol));

    let p = mixing_weight(d);
    let mix = SuperMap::linear_combination(&[(p, &exact_mp_map(d)?), (1.0 - p, &depolarizing_mp(d)?)])?;
    checks.push(Check::gate("measure_prepare.mixture", mix.max_abs_diff(m), Rule::Below, tol));

    let sot = check_sot_axioms(m, SOT_CASES, &mut Rng::new(seed, 3))?;
    for (name, value) in sot.residuals() {
        checks.push(Check::gate(&format!("sot.{name}"), value, Rule::Below, tol));
    }
    let post = check_postprocessing_equivalence(m, SOT_CASES, &mut Rng::new(seed, 4))?;
    checks.push(Check::gate("sot.postprocessing", post.postprocessing_residual, Rule::Below, tol));
    checks.push(Check::gate("sot.heisenberg", post.heisenberg_residual, Rule::Below, tol));
    checks.push(Check::gate("sot.convex_linearity", post.convex_linearity_residual, Rule::Below, tol));
    Ok(checks)
}

/// Distance between the sorted Choi spectrum of `m` and
/// `{(d+1)/2 ×d, 0 ×(d³−2d), −(d−1)/2 ×d}`.
fn eigenvalue_defect(m: &SuperMap, d: usize) -> Result<f64> {
    let df = d as f64;
    let mut expected = vec![(df + 1.0) / 2.0; d];
    expected.extend(std::iter::repeat_n(0.0, d * d * d - 2 * d));
    expected.extend(std::iter::repeat_n(-(df - 1.0) / 2.0, d));
    let got = hermitian_eigenvalues(m.choi())?;
    if got.len() != expected.len() {
        return Ok(f64::INFINITY);
    }
    Ok(got.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn projector_defect(d: usize) -> f64 {
    let df = d as f64;
    let plus = choi_projector_hat(d, true);
    let minus = choi_projector_hat(d, false);
    let a = plus.matmul(&plus).max_abs_diff(&plus.scale_re((df + 1.0) / 2.0));
    let b = minus.matmul(&minus).max_abs_diff(&minus.scale_re((df - 1.0) / 2.0));
    let c = plus.matmul(&minus).max_abs();
    a.max(b).max(c)
}

fn cmd_verify(g: &GlobalArgs, object: &str, lambda: f64) -> Result<Outcome> {
    let d = g.dim as usize;
    let entry = named_map(object)?;
    let m = entry.build(d, lambda)?;
    let checks = verification_checks(&m, d, g.tol, g.seed)?;
    let failed: Vec<String> = checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.clone()).collect();
    let passed = failed.is_empty();
    let message = if passed {
        format!("verify {}: all checks passed", entry.name())
    } else {
        format!("verify {}: FAILED {}", entry.name(), failed.join(", "))
    };
    let result = VerifyResult { object: entry.name().into(), lambda, checks: checks.clone(), failed, passed };

    let body = match g.format.unwrap_or(Format::Json) {
        Format::Json => envelope(g, "verify", tolerance_table(g), result)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "value", "rule", "limit", "status", "note"])?;
            for c in &checks {
                w.write_record(&[
                    c.name.clone(),
                    c.value.map(|v| v.to_string()).unwrap_or_default(),
                    serde_json::to_value(c.rule)?.as_str().unwrap_or_default().to_string(),
                    c.limit.to_string(),
                    serde_json::to_value(c.status)?.as_str().unwrap_or_default().to_string(),
                    c.note.clone().unwrap_or_default(),
                ])?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))?
        }
    };
    Ok(Outcome { body, exit: if passed { 0 } else { 1 }, message: Some(message) })
}

/// Reads a bare map JSON or the output of `dump`.
fn load_map(path: &Path) -> Result<SuperMap> {
    let text = std::fs::read_to_string(path)?;
    let mut value: serde_json::Value = serde_json::from_str(&text)?;
    if let Some(result) = value.get_mut("result").map(serde_json::Value::take) {
        let pick = |k: &str| result.get(k).cloned().unwrap_or(serde_json::Value::Null);
        value = serde_json::json!({ "d_in": pick("d_in"), "d_out": pick("d_out"), "choi": pick("choi") });
    }
    Ok(serde_json::from_value(value)?)
}

fn cmd_diamond(g: &GlobalArgs, target: Target, input: Option<&Path>, method: &str) -> Result<Outcome> {
    let d = g.dim as usize;
    let m = match target {
        Target::B => canonical_b(d)?,
        Target::BMinusBplus => canonical_b(d)?.sub(&cloner(d)?)?,
        Target::File => {
            let path = input.ok_or_else(|| Error::InvalidArgument("--target file needs --input".into()))?;
            load_map(path)?
        }
    };
    let cfg = SdpConfig::default();
    let est = estimator(method, &cfg)
        .ok_or_else(|| Error::UnknownName { name: method.into(), valid: estimator_names().join(", ") })?;
    let r = est.estimate(&m, &mut Rng::new(g.seed, 0))?;
    if !r.converged {
        return Err(Error::NotConverged(format!(
            "{} stopped after {} iterations (lower {}, upper {})",
            r.method,
            r.iterations,
            r.lower_bound,
            r.upper_bound.map_or("none".to_string(), |u| u.to_string())
        )));
    }
    let summary = DiamondSummary {
        target,
        method: r.method.clone(),
        d_in: m.d_in(),
        d_out: m.d_out(),
        value: r.value,
        lower_bound: r.lower_bound,
        upper_bound: r.upper_bound,
        witness_value: r.witness_value,
        iterations: r.iterations,
        converged: r.converged,
    };
    let upper = summary.upper_bound.map_or("none".to_string(), |u| u.to_string());
    let body = match g.format {
        None => format!("value {}\nlower {}\nupper {}\n", summary.value, summary.lower_bound, upper).into_bytes(),
        Some(Format::Json) => {
            let mut tol = tolerance_table(g);
            tol.retain(|k, _| k == "sdp_gap");
            envelope(g, "diamond", tol, summary)?
        }
        Some(Format::Csv) => {
            format!("value,lower_bound,upper_bound\n{},{},{}\n", summary.value, summary.lower_bound, upper).into_bytes()
        }
    };
    Ok(Outcome { body, exit: 0, message: None })
}

fn pauli_letter(c: char, d: usize) -> Result<Operator> {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut o = Operator::zeros(d, d);
    match c {
        'i' => return Ok(Operator::identity(d)),
        'x' => {
            o[(0, 1)] = one;
            o[(1, 0)] = one;
        }
        'y' => {
            o[(0, 1)] = -i;
            o[(1, 0)] = i;
        }
        'z' => {
            o[(0, 0)] = one;
            o[(1, 1)] = -one;
        }
        _ => return Err(Error::InvalidArgument(format!("observable letter `{c}` is not one of i, x, y, z"))),
    }
    Ok(o)
}

/// `zz` ↦ `Z⊗Z`, Pauli letters embedded on levels 0 and 1.
pub fn parse_observable(spec: &str, d: usize) -> Result<(Operator, Operator)> {
    let letters: Vec<char> = spec.to_lowercase().chars().collect();
    if letters.len() != 2 {
        return Err(Error::InvalidArgument(format!("--obs takes two letters, got `{spec}`")));
    }
    Ok((pauli_letter(letters[0], d)?, pauli_letter(letters[1], d)?))
}

pub fn parse_state(spec: &str, d: usize, rng: &mut Rng) -> Result<Operator> {
    match spec {
        "0" => Ok(Operator::unit(d, 0, 0)),
        "plus" => {
            let h = C64::new(0.5, 0.0);
            Ok(Operator::from_fn(d, d, |i, j| if i < 2 && j < 2 { h } else { C64::new(0.0, 0.0) }))
        }
        "mixed" => Ok(Operator::identity(d).scale_re(1.0 / d as f64)),
        "random" => Ok(random_density(d, rng)),
        _ => Err(Error::InvalidArgument(format!("unknown state `{spec}`; valid states: 0, plus, mixed, random"))),
    }
}

fn decomposition_for(name: &str, m: SuperMap, d: usize) -> Result<AffineDecomposition> {
    if name == "B" {
        return spectral_decomposition(d);
    }
    if m.is_cptp(1e-8) {
        return Ok(AffineDecomposition::trivial(m));
    }
    Err(Error::InvalidArgument(format!("no quasi-probability decomposition available for {name}")))
}

fn cmd_sample(
    g: &GlobalArgs,
    n: usize,
    obs: &str,
    object: &str,
    state: &str,
    pipeline: Pipeline,
    mode: ModeArg,
) -> Result<Outcome> {
    let d = g.dim as usize;
    let mut rng = Rng::new(g.seed, 0);
    let rho = parse_state(state, d, &mut rng)?;
    let mode_name = match mode {
        ModeArg::Exact => "exact",
        ModeArg::ShotNoise => "shot-noise",
    };
    let (summary, csv_body) = match pipeline {
        Pipeline::Qsample => {
            let entry = named_map(object)?;
            let dec = decomposition_for(entry.name(), entry.build(d, 0.0)?, d)?;
            let sampler = sampler_from_decomposition(&dec)?;
            let (o1, o2) = parse_observable(obs, d)?;
            let observable = crate::densemat::kron(&o1, &o2);
            let mode = match mode {
                ModeArg::Exact => SampleMode::Exact,
                ModeArg::ShotNoise => SampleMode::ShotNoise,
            };
            let run = estimate_observable(&sampler, &rho, &observable, n, mode, &mut rng)?;
            let mut buf = Vec::new();
            run.write_csv(&mut buf)?;
            let est = &run.estimate;
            let summary = SampleSummary {
                pipeline: "qsample".into(),
                object: entry.name().into(),
                state: state.into(),
                observable: obs.to_lowercase(),
                mode: mode_name.into(),
                n: est.n,
                mean: est.mean,
                stderr: est.stderr,
                exact: est.exact.unwrap_or(f64::NAN),
                max_abs_z: est.z_score().map_or(f64::INFINITY, f64::abs),
                l1_weight: Some(run.l1_weight),
            };
            (summary, buf)
        }
        Pipeline::Mp => {
            let run = mc_mp_apply(&rho, d, n, &mut rng)?;
            let exact = exact_mp_map(d)?.apply(&rho)?;
            let mean = run.mean();
            let mut buf = Vec::new();
            run.write_csv(&mut buf)?;
            let summary = SampleSummary {
                pipeline: "mp".into(),
                object: "M".into(),
                state: state.into(),
                observable: "entrywise".into(),
                mode: "exact".into(),
                n: run.n_samples,
                mean: mean.trace().re,
                stderr: run.median_stderr(),
                exact: exact.trace().re,
                max_abs_z: run.max_z_score(&exact),
                l1_weight: None,
            };
            (summary, buf)
        }
    };
    let within = summary.max_abs_z <= 5.0;
    let message = format!(
        "{} mean {} ± {} (exact {}, max |z| {:.3})",
        summary.pipeline, summary.mean, summary.stderr, summary.exact, summary.max_abs_z
    );
    let body = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_body,
        Format::Json => {
            let mut tol = tolerance_table(g);
            tol.retain(|k, _| k == "z_score");
            envelope(g, "sample", tol, summary)?
        }
    };
    Ok(Outcome { body, exit: if within { 0 } else { 1 }, message: Some(message) })
}

fn cmd_dump(g: &GlobalArgs, object: &str, lambda: f64) -> Result<Outcome> {
    if g.format == Some(Format::Csv) {
        return Err(Error::InvalidArgument("dump writes JSON only".into()));
    }
    let d = g.dim as usize;
    let entry = named_map(object)?;
    let m = build_named(entry.name(), d, lambda)?;
    let result = DumpResult {
        object: entry.name().into(),
        lambda: (entry.name() == "B_lambda").then_some(lambda),
        d_in: m.d_in(),
        d_out: m.d_out(),
        jamiolkowski: m.jamiolkowski(),
        choi: m.into_choi(),
    };
    Ok(Outcome { body: envelope(g, "dump", BTreeMap::new(), result)?, exit: 0, message: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from(["vbcast", "verify", "--dim", "3", "--seed", "7"]).unwrap();
        assert_eq!(cli.global.dim, 3);
        assert_eq!(cli.global.seed, 7);
        assert!(Cli::try_parse_from(["vbcast", "verify", "--dim", "7"]).is_err());
        assert!(Cli::try_parse_from(["vbcast", "diamond", "--target", "B-minus-Bplus"]).is_ok());
    }

    #[test]
    fn observables() {
        let (a, b) = parse_observable("zx", 3).unwrap();
        assert_eq!(a[(1, 1)], C64::new(-1.0, 0.0));
        assert_eq!(b[(2, 2)], C64::new(0.0, 0.0));
        assert!(parse_observable("zq", 2).is_err());
        assert!(parse_observable("z", 2).is_err());
    }

    #[test]
    fn failing_gate() {
        assert_eq!(Check::gate("a", 1.0, Rule::Below, 0.5).status, Status::Fail);
        assert_eq!(Check::gate("a", 2e6, Rule::AtLeast, 1e6).status, Status::Pass);
        assert_eq!(Check::gate("a", f64::NAN, Rule::Below, 0.5).status, Status::Fail);
    }

    #[test]
    fn unknown_object_is_operational_error() {
        assert_eq!(run(["vbcast", "dump", "--object", "nope"]), 2);
    }
}
