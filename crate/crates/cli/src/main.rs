use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hardybox::behavior::{self, Behavior};
use hardybox::bell::{self, HardyQuadruple};
use hardybox::examples::{self, ExpectationCheck};
use hardybox::locality::{self, FreeSetId};
use hardybox::montecarlo::{self, SettingPolicy};
use hardybox::quantum::{self, OptimizerConfig, SigmaGoal, StateFamily};
use hardybox::report;

#[derive(Parser)]
#[command(name = "hardybox", version, about = "Analyze two-party, two-setting, two-outcome correlation boxes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Tolerance for normalization, no-signaling and bound checks
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Threshold below which a cell counts as zero for Hardy witnesses
    #[arg(long, global = true, default_value_t = 1e-6)]
    eps: f64,
    /// Exit with status 1 when a checked predicate fails
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full evaluation report for one box
    Check {
        #[arg(long = "input", value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(value_name = "PATH", conflicts_with = "input")]
        path: Option<PathBuf>,
    },
    /// List the 64 Hardy-type inequalities
    Enumerate {
        #[arg(long)]
        json: bool,
    },
    /// Complete a no-signaling box from eight free probabilities
    Complete {
        /// Values of the free cells, in the order the chosen set lists them
        #[arg(num_args = 8, required = true, allow_negative_numbers = true, value_name = "P")]
        free: Vec<f64>,
        /// Which set of eight cells is free: eq12 through eq19
        #[arg(long, default_value = "eq12", value_parser = parse_variant)]
        variant: FreeSetId,
    },
    /// Maximize the Hardy probability over two-qubit states and settings
    QuantumMax {
        #[arg(long, default_value = "1:13", value_parser = parse_quadruple, value_name = "FAMILY:J")]
        quadruple: HardyQuadruple,
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Restrict the search to the singlet state
        #[arg(long)]
        singlet_only: bool,
    },
    /// Extremize a CHSH combination over two-qubit states and settings
    Tsirelson {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=4))]
        sigma: u8,
        #[arg(long, value_enum, default_value_t = Goal::Max)]
        goal: Goal,
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
    /// Simulate a finite experiment and test one inequality
    Simulate {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Policy::Uniform)]
        policy: Policy,
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
        #[arg(long, default_value = "1:13", value_parser = parse_quadruple, value_name = "FAMILY:J")]
        quadruple: HardyQuadruple,
        /// Where to write the trial records
        #[arg(long, default_value = "trials.csv", value_name = "PATH")]
        csv: PathBuf,
    },
    /// Re-derive the expected values of the bundled example boxes
    Examples,
}

#[derive(Clone, Copy, ValueEnum)]
enum Goal {
    Max,
    Min,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Uniform,
    Roundrobin,
}

fn parse_variant(s: &str) -> Result<FreeSetId, String> {
    s.parse::<FreeSetId>().map_err(|e| e.to_string())
}

fn parse_quadruple(s: &str) -> Result<HardyQuadruple, String> {
    let (f, j) = s.split_once(':').ok_or("expected FAMILY:J, e.g. 1:13")?;
    let family: u8 = f.trim().parse().map_err(|_| format!("bad family `{f}`"))?;
    let j: usize = j.trim().parse().map_err(|_| format!("bad index `{j}`"))?;
    HardyQuadruple::find(family, j).ok_or_else(|| format!("no inequality {family}:{j} (family 1..=8, j 1..=16)"))
}

/// Errors carry their exit status.
enum Failure {
    Usage(anyhow::Error),
    Failed(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        use hardybox::Error as E;
        match e.downcast_ref::<hardybox::Error>() {
            Some(E::NotConverged { .. } | E::ConstraintViolation { .. } | E::Precondition(_) | E::EmptyBlock(..)) => {
                Failure::Failed(e)
            }
            _ => Failure::Usage(e),
        }
    }
}

impl From<hardybox::Error> for Failure {
    fn from(e: hardybox::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Write to stdout; a reader that hangs up early is not an error.
fn out(text: &str) -> CmdResult {
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}").and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Failed(e.into())),
        _ => Ok(()),
    }
}

fn emit<T: Serialize>(value: &T) -> CmdResult {
    out(&serde_json::to_string_pretty(value).map_err(|e| Failure::Failed(e.into()))?)
}

fn read_box(path: &Path) -> Result<Behavior, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Usage)?;
    Behavior::from_json_str(&text)
        .with_context(|| format!("{}", path.display()))
        .map_err(Failure::Usage)
}

fn read_config(path: Option<&Path>) -> Result<OptimizerConfig, Failure> {
    let Some(path) = path else {
        return Ok(OptimizerConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Usage)?;
    let cfg: OptimizerConfig = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid optimizer config", path.display()))
        .map_err(Failure::Usage)?;
    cfg.validate().map_err(|e| Failure::Usage(e.into()))?;
    Ok(cfg)
}

fn strict_failure(what: &str) -> Failure {
    Failure::Failed(anyhow!("strict mode: {what}"))
}

fn cmd_check(path: &Path, common: &Common) -> CmdResult {
    let b = read_box(path)?;
    let r = report::evaluate(&b, common.tol, common.eps);
    emit(&r)?;
    eprint!("{}", r.summary());
    if common.strict && !r.physical() {
        let mut failed = Vec::new();
        if !r.valid {
            failed.push("valid");
        }
        if !r.normalized {
            failed.push("normalized");
        }
        if !r.no_signaling {
            failed.push("no-signaling");
        }
        return Err(strict_failure(&format!("{} failed", failed.join(", "))));
    }
    Ok(())
}

#[derive(Serialize)]
struct InequalityLine {
    #[serde(flatten)]
    quadruple: HardyQuadruple,
    sigma: u8,
    primed: bool,
    lower: String,
    upper: String,
}

fn cmd_enumerate(json: bool) -> CmdResult {
    let all = bell::enumerate_hardy_inequalities();
    if json {
        let lines: Vec<_> = all
            .iter()
            .map(|q| {
                let (sigma, primed) = q.variant().sigma();
                let sum = format!("p{} + p{} + p{}", q.k, q.l, q.m);
                InequalityLine {
                    quadruple: *q,
                    sigma,
                    primed,
                    lower: format!("p{} <= {sum}", q.j),
                    upper: format!("{sum} <= 1 + p{}", q.j),
                }
            })
            .collect();
        return emit(&lines);
    }
    let lines: Vec<String> = all.iter().map(|q| q.display()).collect();
    out(&lines.join("\n"))
}

#[derive(Serialize)]
struct Completion {
    variant: String,
    behavior: Behavior,
    valid: bool,
    max_residual: f64,
    negative_cells: Vec<usize>,
}

fn cmd_complete(free: &[f64], variant: FreeSetId, common: &Common) -> CmdResult {
    let values: [f64; 8] = free.try_into().map_err(|_| Failure::Usage(anyhow!("expected 8 values, got {}", free.len())))?;
    let b = locality::complete_from_free_set(values, variant)?;
    let negative_cells: Vec<usize> = (1..=16).filter(|&i| b.p(i) < 0.0).collect();
    let out = Completion {
        variant: variant.flag_name(),
        valid: behavior::is_valid(&b),
        max_residual: locality::constraint_residuals(&b).max_abs(),
        negative_cells,
        behavior: b,
    };
    emit(&out)?;
    if out.valid {
        eprintln!("completed box is a valid no-signaling box");
    } else {
        let cells: Vec<String> = out.negative_cells.iter().map(|i| format!("p{i}")).collect();
        eprintln!("completed box is not valid: negative {}", cells.join(", "));
    }
    if common.strict && !out.valid {
        return Err(strict_failure("completion has negative cells"));
    }
    Ok(())
}

#[derive(Serialize)]
struct HardyMaxOutput {
    reference: f64,
    gap: f64,
    note: Option<&'static str>,
    config: OptimizerConfig,
    optimum: quantum::HardyOptimum,
}

const SINGLET_NOTE: &str =
    "the singlet cannot make the three other cells vanish with a nonzero Hardy probability; the maximum is 0";

fn cmd_quantum_max(q: &HardyQuadruple, config: Option<&Path>, singlet_only: bool) -> CmdResult {
    let mut cfg = read_config(config)?;
    if singlet_only {
        cfg.state_family = StateFamily::Singlet;
    }
    let optimum = quantum::maximize_hardy(q, &cfg)?;
    let reference = quantum::hardy_bound();
    let out = HardyMaxOutput {
        reference,
        gap: reference - optimum.pj_value,
        note: singlet_only.then_some(SINGLET_NOTE),
        config: cfg,
        optimum,
    };
    emit(&out)?;
    eprintln!(
        "{}: p{} = {:.6} (reference {:.6}), zero-cell residual {:e}",
        q.display(),
        q.j,
        out.optimum.pj_value,
        reference,
        out.optimum.zero_residual
    );
    if let Some(note) = out.note {
        eprintln!("note: {note}");
    }
    Ok(())
}

#[derive(Serialize)]
struct SigmaOutput {
    reference: f64,
    gap: f64,
    optimum: quantum::SigmaOptimum,
}

fn cmd_tsirelson(sigma: u8, goal: Goal, config: Option<&Path>) -> CmdResult {
    let cfg = read_config(config)?;
    let (goal, reference) = match goal {
        Goal::Max => (SigmaGoal::Maximize, 2.0 + 2f64.sqrt()),
        Goal::Min => (SigmaGoal::Minimize, 2.0 - 2f64.sqrt()),
    };
    let optimum = quantum::maximize_sigma(sigma, goal, &cfg)?;
    let out = SigmaOutput { reference, gap: (reference - optimum.value).abs(), optimum };
    emit(&out)?;
    eprintln!("Sigma{sigma} = {:.6} (reference {:.6})", out.optimum.value, reference);
    if !out.optimum.converged {
        return Err(Failure::Failed(anyhow!("optimizer did not converge")));
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulationOutput {
    csv: String,
    n: usize,
    seed: u64,
    policy: SettingPolicy,
    stats: montecarlo::SampleStats,
    test: montecarlo::StatTestResult,
    signaling: montecarlo::SignalingReport,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    input: &Path,
    n: usize,
    seed: u64,
    policy: Policy,
    alpha: f64,
    q: &HardyQuadruple,
    csv: &Path,
    common: &Common,
) -> CmdResult {
    let b = read_box(input)?;
    if !behavior::is_valid(&b) || !behavior::is_normalized(&b, common.tol) {
        return Err(Failure::Usage(anyhow!("{}: not a valid normalized box", input.display())));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Failure::Usage(anyhow!("--alpha must lie in (0, 1)")));
    }
    let policy = match policy {
        Policy::Uniform => SettingPolicy::UniformRandom,
        Policy::Roundrobin => SettingPolicy::RoundRobin,
    };
    let trials = montecarlo::simulate(&b, n, seed, policy)?;
    let file = File::create(csv)
        .with_context(|| format!("cannot create {}", csv.display()))
        .map_err(Failure::Usage)?;
    montecarlo::write_trials_csv(BufWriter::new(file), &trials)?;
    let stats = montecarlo::estimate(&trials)?;
    let test = montecarlo::test_inequality(&stats, q, alpha)?;
    let signaling = montecarlo::test_signaling(&stats, alpha)?;
    let out = SimulationOutput { csv: csv.display().to_string(), n, seed, policy, stats, test, signaling };
    emit(&out)?;
    eprintln!(
        "{}: slack {:.6} ± {:.2e}, z = {:.3}, decision {:?}; signaling detected: {}",
        q.display(),
        out.test.point_estimate,
        out.test.standard_error,
        out.test.z_score,
        out.test.decision,
        out.signaling.signaling_detected
    );
    Ok(())
}

#[derive(Serialize)]
struct ExampleOutput {
    label: String,
    file: &'static str,
    behavior: Behavior,
    checks: Vec<ExpectationCheck>,
    ok: bool,
}

fn cmd_examples(common: &Common) -> CmdResult {
    let dir = examples::data_dir();
    let mut out = Vec::new();
    for mut nb in examples::all() {
        nb.behavior = examples::load(&dir, nb.file).with_context(|| format!("{}", dir.join(nb.file).display()))?;
        let checks = examples::verify(&nb, common.tol);
        let ok = checks.iter().all(|c| c.ok);
        eprintln!("{}: {} ({} expected values)", nb.label, if ok { "ok" } else { "MISMATCH" }, checks.len());
        for c in checks.iter().filter(|c| !c.ok) {
            eprintln!("  {}: expected {:?}, got {:?}", c.name, c.expected, c.actual);
        }
        out.push(ExampleOutput { label: nb.label.to_string(), file: nb.file, behavior: nb.behavior, checks, ok });
    }
    emit(&out)?;
    if common.strict && out.iter().any(|e| !e.ok) {
        return Err(strict_failure("an example box does not reproduce its expected values"));
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let common = &cli.common;
    match cli.command {
        Command::Check { input, path } => {
            let path = input.or(path).ok_or_else(|| Failure::Usage(anyhow!("check needs an input file")))?;
            cmd_check(&path, common)
        }
        Command::Enumerate { json } => cmd_enumerate(json),
        Command::Complete { free, variant } => cmd_complete(&free, variant, common),
        Command::QuantumMax { quadruple, config, singlet_only } => {
            cmd_quantum_max(&quadruple, config.as_deref(), singlet_only)
        }
        Command::Tsirelson { sigma, goal, config } => cmd_tsirelson(sigma, goal, config.as_deref()),
        Command::Simulate { input, n, seed, policy, alpha, quadruple, csv } => {
            cmd_simulate(&input, n, seed, policy, alpha, &quadruple, &csv, common)
        }
        Command::Examples => cmd_examples(common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
