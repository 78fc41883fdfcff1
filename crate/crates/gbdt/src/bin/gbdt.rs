//! Thin command-line front end: scenario files in, solution fields and
//! verification reports out.
//!
//! Exit codes: 0 all checks pass, 1 check failure or engine error, 2 input
//! error. `GBDT_SEED` overrides the scenario's generator seed.

use clap::{Args, Parser, Subcommand};
use gbdt_canonical::io::{triple_to_json, write_field_csv};
use gbdt_canonical::scenario::{complete_from_json, Scenario, ScenarioError, SubspaceSpec};
use gbdt_canonical::triple::{random_admissible_in, SpectrumRegion, SignatureJ};
use gbdt_canonical::verify::identity_check;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gbdt", about = "Darboux-transformed canonical systems: solve and verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Work with parameter triples {A, S(0), Pi(0)}
    Triple {
        #[command(subcommand)]
        action: TripleAction,
    },
    /// Sample Y(x,t) and the transformed Hamiltonian on the scenario grid
    Solve {
        scenario: PathBuf,
        /// Write the field CSV here (default: scenario outputs or stdout)
        #[arg(long)]
        field_csv: Option<PathBuf>,
        /// Write run metadata JSON here
        #[arg(long)]
        metadata: Option<PathBuf>,
    },
    /// Run the verification suite and emit a report
    Check {
        scenario: PathBuf,
        /// Write the report JSON here (default: scenario outputs or stdout)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Kappa limits, the transfer-matrix limit, and decay diagnostics
    Asymptotics { scenario: PathBuf },
    /// Boundary matrices from an invariant subspace
    Boundary {
        scenario: PathBuf,
        /// Basis matrix JSON path, or `schur:<upper|lower|re-positive|re-negative>`
        #[arg(long)]
        subspace: String,
    },
}

#[derive(Subcommand)]
enum TripleAction {
    /// Check the identity AS(0) - S(0)A* = i Pi(0) j Pi(0)*
    Verify { file: PathBuf },
    /// Draw a random admissible triple, deterministic in the seed
    Generate(GenerateArgs),
    /// Solve for S(0) from A and Pi(0)
    Complete { file: PathBuf },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m1: usize,
    #[arg(long)]
    m2: usize,
    #[arg(long)]
    seed: u64,
    /// Spectrum placement: any, upper, or split:<k>
    #[arg(long, default_value = "any")]
    spectrum: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed_override = match std::env::var("GBDT_SEED") {
        Ok(s) => match s.parse::<u64>() {
            Ok(v) => Some(v),
            Err(_) => {
                eprintln!("input error: GBDT_SEED must be an unsigned integer, got {s:?}");
                return ExitCode::from(2);
            }
        },
        Err(_) => None,
    };
    match run(cli, seed_override) {
        Ok(code) => code,
        Err(ScenarioError::Input(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(2)
        }
        Err(ScenarioError::Engine(msg)) => {
            eprintln!("engine error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read_json(path: &Path) -> Result<Value, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ScenarioError::Input(format!("malformed JSON: {e}")))
}

fn emit(value: &Value, path: Option<&Path>) -> Result<(), ScenarioError> {
    let text = serde_json::to_string_pretty(value).expect("JSON serialization");
    match path {
        Some(p) => std::fs::write(p, text + "\n")
            .map_err(|e| ScenarioError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli, seed_override: Option<u64>) -> Result<ExitCode, ScenarioError> {
    match cli.command {
        Command::Triple { action } => run_triple(action, seed_override),
        Command::Solve { scenario, field_csv, metadata } => {
            let s = Scenario::load(&scenario)?;
            let (field, meta) = s.solve(seed_override)?;
            let csv_path = field_csv
                .or_else(|| s.outputs.get("field_csv").map(PathBuf::from));
            let mut buf = Vec::new();
            write_field_csv(&field, &mut buf)
                .map_err(|e| ScenarioError::Engine(e.to_string()))?;
            match &csv_path {
                Some(p) => std::fs::write(p, &buf).map_err(|e| {
                    ScenarioError::Input(format!("cannot write {}: {e}", p.display()))
                })?,
                None => print!("{}", String::from_utf8_lossy(&buf)),
            }
            let meta_path = metadata
                .or_else(|| s.outputs.get("metadata_json").map(PathBuf::from));
            if let Some(p) = meta_path {
                emit(&meta, Some(&p))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { scenario, report } => {
            let s = Scenario::load(&scenario)?;
            let rep = s.check(seed_override)?;
            eprint!("{}", rep.render());
            let path = report.or_else(|| s.outputs.get("report_json").map(PathBuf::from));
            emit(&rep.to_json(), path.as_deref())?;
            Ok(if rep.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Asymptotics { scenario } => {
            let s = Scenario::load(&scenario)?;
            let (out, pass) = s.asymptotics(seed_override)?;
            emit(&out, None)?;
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Boundary { scenario, subspace } => {
            let s = Scenario::load(&scenario)?;
            let (out, pass) = s.boundary(seed_override, &SubspaceSpec::parse(&subspace))?;
            emit(&out, None)?;
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn run_triple(
    action: TripleAction,
    seed_override: Option<u64>,
) -> Result<ExitCode, ScenarioError> {
    match action {
        TripleAction::Verify { file } => {
            let v = read_json(&file)?;
            let obj = v
                .as_object()
                .ok_or_else(|| ScenarioError::Input("triple must be an object".into()))?;
            let get = |k: &str| {
                obj.get(k).ok_or_else(|| ScenarioError::Input(format!("missing field {k}")))
            };
            let m1 = get("m1")?
                .as_u64()
                .ok_or_else(|| ScenarioError::Input("m1 must be an integer".into()))?;
            let m2 = get("m2")?
                .as_u64()
                .ok_or_else(|| ScenarioError::Input("m2 must be an integer".into()))?;
            let a = gbdt_canonical::io::matrix_from_json(get("A")?)
                .map_err(|e| ScenarioError::Input(e.to_string()))?;
            let s0 = gbdt_canonical::io::matrix_from_json(get("S0")?)
                .map_err(|e| ScenarioError::Input(e.to_string()))?;
            let pi0 = gbdt_canonical::io::matrix_from_json(get("Pi0")?)
                .map_err(|e| ScenarioError::Input(e.to_string()))?;
            let check = identity_check(&a, &s0, &pi0, SignatureJ::new(m1 as usize, m2 as usize));
            let ok = check.pass;
            emit(&serde_json::to_value(&check).expect("check serialization"), None)?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        TripleAction::Generate(args) => {
            let region = match args.spectrum.as_str() {
                "any" => SpectrumRegion::Any,
                "upper" => SpectrumRegion::UpperHalf,
                s if s.starts_with("split:") => {
                    let k = s[6..].parse().map_err(|_| {
                        ScenarioError::Input(format!("bad spectrum spec {s:?}"))
                    })?;
                    SpectrumRegion::Split { upper: k }
                }
                s => return Err(ScenarioError::Input(format!("unknown spectrum region {s:?}"))),
            };
            let seed = seed_override.unwrap_or(args.seed);
            let t = random_admissible_in(args.n, SignatureJ::new(args.m1, args.m2), seed, region)
                .map_err(|e| ScenarioError::Input(format!("generation failed: {e}")))?;
            emit(&triple_to_json(&t), None)?;
            Ok(ExitCode::SUCCESS)
        }
        TripleAction::Complete { file } => {
            let v = read_json(&file)?;
            let t = complete_from_json(&v)?;
            emit(&triple_to_json(&t), None)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
