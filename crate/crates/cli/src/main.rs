use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use pphs_core::abstraction::{abstract_pphs, pphs_stability_verdict, VerifyError};
use pphs_core::chain::{decide_as_convergence, ChainError, DEFAULT_POLICY_CAP};
use pphs_core::harness::{oracle_max_mean_payoff, simulate_chain, simulate_pphs};
use pphs_core::io::{analysis_report, as_report, parse_model, pphs_report, write_model, IoError, Model, Report, ReportVerdict, Timings, Weight};
use pphs_core::lp::{set_feasibility_tolerance, LpError};
use pphs_core::mdp::{ChainEdge, ModelError, Wdtmc, Wmdp};
use pphs_core::mean_payoff::{analyze, MeanPayoffError};
use pphs_core::models::switched_case_study;
use pphs_core::pphs::PphsError;

/// Stability verification of polyhedral probabilistic hybrid systems.
#[derive(Parser)]
#[command(name = "pphs", version)]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Primal feasibility tolerance of the LP solver.
    #[arg(long, global = true, value_name = "EPS")]
    lp_tolerance: Option<f64>,
    /// Largest number of policies enumerated by `as-check` and `oracle`.
    #[arg(long, global = true, value_name = "N", default_value_t = DEFAULT_POLICY_CAP)]
    policy_cap: u128,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "PPHS_THREADS", value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum expected mean payoff of a WMDP and the stability verdict.
    Analyze { model: PathBuf },
    /// Whether every memoryless policy of a WMDP converges almost surely.
    AsCheck { model: PathBuf },
    /// Abstract a PPHS into a WMDP.
    Abstract {
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Abstract a PPHS and analyze the abstraction.
    Verify { model: PathBuf },
    /// Monte-Carlo partial averages of a single-action WMDP or a PPHS.
    Simulate {
        model: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
        #[arg(long, default_value_t = 8)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Maximum expected mean payoff of a WMDP by policy enumeration.
    Oracle { model: PathBuf },
    /// Generate a case-study PPHS.
    Casestudy {
        system: CaseStudy,
        #[arg(long, default_value_t = 8)]
        sectors: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Verify the generated system instead of printing it.
        #[arg(long)]
        verify: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseStudy {
    Switched,
}

enum Failure {
    Validation(String),
    Cap(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Cap(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Cap(m) | Failure::Other(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io { .. } => Failure::Other(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<LpError> for Failure {
    fn from(e: LpError) -> Self {
        match e {
            LpError::NumericalFailure { .. } => Failure::Cap(e.to_string()),
            LpError::MalformedProgram(_) => Failure::Other(e.to_string()),
        }
    }
}

impl From<PphsError> for Failure {
    fn from(e: PphsError) -> Self {
        match e {
            PphsError::Lp(e) => e.into(),
            e => Failure::Validation(e.to_string()),
        }
    }
}

impl From<ChainError> for Failure {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::EnumerationTooLarge { .. } => Failure::Cap(e.to_string()),
            ChainError::Model(e) => e.into(),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<MeanPayoffError> for Failure {
    fn from(e: MeanPayoffError) -> Self {
        match e {
            MeanPayoffError::Model(e) => e.into(),
            MeanPayoffError::Lp(e) => e.into(),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Model(e) => e.into(),
            VerifyError::Analysis(e) => e.into(),
        }
    }
}

enum Output {
    Report(Report),
    Text(String),
}

fn load_wmdp(path: &PathBuf) -> Result<Wmdp, Failure> {
    match parse_model(path)? {
        Model::Wmdp(m) => Ok(m),
        Model::Pphs(_) => Err(Failure::Validation(format!("{}: expected a wmdp model", path.display()))),
    }
}

fn load_pphs(path: &PathBuf) -> Result<pphs_core::pphs::Pphs, Failure> {
    match parse_model(path)? {
        Model::Pphs(h) => Ok(h),
        Model::Wmdp(_) => Err(Failure::Validation(format!("{}: expected a pphs model", path.display()))),
    }
}

fn as_chain(m: &Wmdp) -> Result<Wdtmc, Failure> {
    if let Some(s) = m.actions.iter().position(|a| a.len() != 1) {
        return Err(Failure::Validation(format!("simulation needs one action per state; state {s} has {}", m.actions[s].len())));
    }
    let rows = m
        .actions
        .iter()
        .map(|a| a[0].dist.iter().filter(|e| e.1 > 0.0).map(|&(target, prob)| ChainEdge { target, prob, weight: a[0].weight }).collect())
        .collect();
    Ok(Wdtmc { rows, init: m.init })
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Analyze { model } => {
            let m = load_wmdp(model)?;
            Ok(Output::Report(analysis_report(&analyze(&m)?)))
        }
        Command::AsCheck { model } => {
            let m = load_wmdp(model)?;
            let start = Instant::now();
            let v = decide_as_convergence(&m, cli.policy_cap)?;
            let mut report = as_report(&v, start.elapsed().as_secs_f64());
            if m.actions.iter().flatten().any(|a| a.weight == f64::INFINITY) {
                report.diagnostics.push(json!({
                    "kind": "note",
                    "message": "+inf weights on transient edges do not affect almost-sure convergence, while `analyze` reports Unknown for any reachable +inf edge",
                }));
            }
            Ok(Output::Report(report))
        }
        Command::Abstract { model, output } => {
            let h = load_pphs(model)?;
            let start = Instant::now();
            let a = abstract_pphs(&h)?;
            let secs = start.elapsed().as_secs_f64();
            let wmdp = Model::Wmdp(a.wmdp.clone());
            let Some(path) = output else {
                return Ok(Output::Text(pphs_core::io::model_to_json(&wmdp)));
            };
            write_model(path, &wmdp)?;
            Ok(Output::Report(Report {
                verdict: None,
                max_mean_payoff: None,
                diagnostics: a.diagnostics.iter().map(|d| serde_json::to_value(d).expect("serializable")).collect(),
                timings: Timings { abstraction_secs: Some(secs), verification_secs: None },
                details: json!({
                    "output": path.display().to_string(),
                    "abstract_states": a.states.len(),
                    "abstract_edges": a.edge_count(),
                    "weight_lps": a.origins.iter().flatten().map(|o| o.lp_cases).sum::<usize>(),
                }),
            }))
        }
        Command::Verify { model } => Ok(Output::Report(pphs_report(&pphs_stability_verdict(&load_pphs(model)?)?))),
        Command::Simulate { model, horizon, runs, seed } => {
            if *horizon == 0 || *runs == 0 {
                return Err(Failure::Validation("horizon and runs must be positive".into()));
            }
            let report = match parse_model(model)? {
                Model::Wmdp(m) => simulate_chain(&as_chain(&m)?, *horizon, *runs, *seed),
                Model::Pphs(h) => simulate_pphs(&h, *horizon, *runs, *seed)?,
            };
            Ok(Output::Report(Report {
                verdict: None,
                max_mean_payoff: None,
                diagnostics: vec![],
                timings: Timings::default(),
                details: serde_json::to_value(&report).expect("serializable"),
            }))
        }
        Command::Oracle { model } => {
            let m = load_wmdp(model)?;
            let start = Instant::now();
            let v = oracle_max_mean_payoff(&m, cli.policy_cap)?;
            Ok(Output::Report(Report {
                verdict: Some(if v < 0.0 { ReportVerdict::Stable } else { ReportVerdict::Unknown }),
                max_mean_payoff: Some(Weight(v)),
                diagnostics: vec![],
                timings: Timings { abstraction_secs: None, verification_secs: Some(start.elapsed().as_secs_f64()) },
                details: json!({ "policies": m.policy_count().to_string() }),
            }))
        }
        Command::Casestudy { system: CaseStudy::Switched, sectors, output, verify } => {
            if *sectors < 3 {
                return Err(Failure::Validation("the switched system needs at least 3 sectors".into()));
            }
            let h = switched_case_study(*sectors);
            if let Some(path) = output {
                write_model(path, &Model::Pphs(h.clone()))?;
            }
            if *verify {
                Ok(Output::Report(pphs_report(&pphs_stability_verdict(&h)?)))
            } else if output.is_none() {
                Ok(Output::Text(pphs_core::io::pphs_to_json(&h)))
            } else {
                Ok(Output::Text(String::new()))
            }
        }
    }
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else {
        format!("{v:.6}")
    }
}

fn human(r: &Report) -> String {
    let mut out = String::new();
    if let Some(v) = r.verdict {
        out += &format!("{:<22}{v}\n", "verdict");
    }
    if let Some(w) = r.max_mean_payoff {
        out += &format!("{:<22}{}\n", "max mean payoff", fmt_num(w.0));
    }
    if let Some(t) = r.timings.abstraction_secs {
        out += &format!("{:<22}{t:.6}\n", "abstraction (s)");
    }
    if let Some(t) = r.timings.verification_secs {
        out += &format!("{:<22}{t:.6}\n", "verification (s)");
    }
    if let Some(map) = r.details.as_object() {
        for (k, v) in map {
            if k == "partial_means" {
                continue;
            }
            out += &format!("{:<22}{v}\n", k.replace('_', " "));
        }
    }
    if !r.diagnostics.is_empty() {
        out += "diagnostics\n";
        for d in &r.diagnostics {
            out += &format!("  {d}\n");
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: could not configure {n} worker threads");
            return ExitCode::from(1);
        }
    }
    if let Some(tol) = cli.lp_tolerance {
        if !(tol.is_finite() && tol > 0.0) {
            eprintln!("error: --lp-tolerance must be positive");
            return ExitCode::from(2);
        }
        set_feasibility_tolerance(tol);
    }
    let (text, code) = match run(&cli) {
        Ok(Output::Report(r)) if cli.json => (r.to_json() + "\n", 0),
        Ok(Output::Report(r)) => (human(&r), 0),
        Ok(Output::Text(t)) => (t, 0),
        Err(f) if cli.json => (json!({ "error": f.message(), "exit_code": f.code() }).to_string() + "\n", f.code()),
        Err(f) => {
            eprintln!("error: {}", f.message());
            (String::new(), f.code())
        }
    };
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    ExitCode::from(code)
}
