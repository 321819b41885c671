// Copyright 2026 The ftprep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ftprep_core::analysis::{self, emit, AnalysisConfig, CrossoverEstimate, Evaluator, SweepPoint};
use ftprep_core::circuit::Circuit;
use ftprep_core::dm::BackendKind;
use ftprep_core::steane::{build_direct_circuit, build_ft_circuit};
use ftprep_core::Error;

#[derive(Parser, Debug)]
#[command(name = "ftprep", version, about = "Direct and fault-tolerant Steane logical-zero preparation under depolarizing noise")]
struct Cli {
    /// JSON analysis configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON circuit used in place of the built-in one (the FT circuit for sweeps).
    #[arg(long, global = true)]
    circuit_file: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Backend {
    Sparse,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    Direct,
    Ft,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resource counts of a circuit.
    Stats {
        #[arg(long, value_enum, default_value = "direct")]
        circuit: Which,
        /// Also write the circuit as JSON.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Every single Pauli error at p = 0, written as CSV.
    Inject {
        #[arg(long, value_enum, default_value = "direct")]
        circuit: Which,
    },
    /// Fidelities of both circuits over the configured grid.
    Sweep {
        /// Error rates overriding the configured grid.
        #[arg(long = "p", num_args = 1..)]
        p: Vec<f64>,
    },
    /// Quadratic fit of the FT failure probability.
    FitC {
        /// Sweep JSON; defaults to `sweep.json` in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<f64>>,
    },
    /// Error rate at which both circuits have equal fidelity.
    Crossover {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Plot-ready datasets from a stored sweep.
    Emit {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

enum Failure {
    Analysis(Error),
    Other(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Fit(_) | Error::NoBracket => Failure::Analysis(e),
            other => Failure::Other(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Analysis(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<AnalysisConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => AnalysisConfig::load(path)?,
        None => AnalysisConfig::default(),
    };
    if let Some(b) = cli.backend {
        cfg.backend = match b {
            Backend::Sparse => BackendKind::Sparse,
            Backend::Dense => BackendKind::Dense,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn circuit_file(cli: &Cli) -> Result<Option<Circuit>, Error> {
    let Some(path) = &cli.circuit_file else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Circuit::from_json(&text).map(Some)
}

fn chosen_circuit(cli: &Cli, cfg: &AnalysisConfig, which: Which) -> Result<(String, Circuit), Error> {
    if let Some(c) = circuit_file(cli)? {
        let id = cli.circuit_file.as_ref().and_then(|p| p.file_stem()).map_or("custom".into(), |s| s.to_string_lossy().into_owned());
        return Ok((id, c));
    }
    Ok(match which {
        Which::Direct => ("direct".into(), build_direct_circuit()),
        Which::Ft => ("ft".into(), build_ft_circuit(cfg.ft_options())),
    })
}

fn evaluator(cli: &Cli, cfg: &AnalysisConfig) -> Result<Evaluator, Error> {
    let mut eval = Evaluator::new(cfg);
    if let Some(c) = circuit_file(cli)? {
        eval.ft = c;
    }
    Ok(eval)
}

fn out_dir(cli: &Cli) -> Result<&Path, Error> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    Ok(&cli.out_dir)
}

fn load_sweep(cli: &Cli, input: &Option<PathBuf>) -> Result<Vec<SweepPoint>, Error> {
    let path = input.clone().unwrap_or_else(|| cli.out_dir.join("sweep.json"));
    emit::read_sweep_json(&path)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Stats { circuit, export } => {
            let (id, c) = chosen_circuit(cli, &cfg, *circuit)?;
            let s = c.stats();
            println!("circuit = {id}\nqubits = {}\ndepth = {}\narea = {}\ngate_ops = {}", s.qubits, s.depth, s.area, s.gate_ops);
            for v in c.validate() {
                eprintln!("warning: {v}");
            }
            if let Some(path) = export {
                emit::write_file(path, &c.to_json())?;
            }
        }
        Command::Inject { circuit } => {
            let (id, c) = chosen_circuit(cli, &cfg, *circuit)?;
            let report = analysis::inject_single(&id, &c, cfg.engine(), &cfg.scenario_settings())?;
            let path = out_dir(cli)?.join(format!("inject_{id}.csv"));
            emit::write_file(&path, &report.to_csv())?;
            println!("circuit = {id}\ninjections = {}\nfailing_count = {}", report.injections.len(), report.failing_count);
            for r in report.failures() {
                println!("fails: step {} qubit {} {} (S = {:.6})", r.location.step, r.location.qubit, r.pauli, r.success);
            }
        }
        Command::Sweep { p } => {
            let eval = evaluator(cli, &cfg)?;
            let grid = if p.is_empty() { cfg.p_grid.clone() } else { p.clone() };
            let points = analysis::run_sweep(&eval, &grid, cfg.threads)?;
            for pt in &points {
                if let Some(w) = pt.warning() {
                    eprintln!("warning: {w}");
                }
            }
            let dir = out_dir(cli)?;
            emit::write_file(&dir.join("sweep.json"), &serde_json::to_string_pretty(&points).expect("sweep serializes"))?;
            let csv = emit::sweep_csv(&points);
            emit::write_file(&dir.join("sweep.csv"), &csv)?;
            print!("{csv}");
        }
        Command::FitC { input, window } => {
            let points = load_sweep(cli, input)?;
            let window = window.as_ref().map_or(cfg.fit_window(), |w| (w[0], w[1]));
            let report = analysis::fit_sweep(&points, window, cfg.fit_tolerance)?;
            let text = report.text();
            emit::write_file(&out_dir(cli)?.join("fit.txt"), &text)?;
            print!("{text}");
            if !report.is_well_conditioned() {
                return Err(Error::Fit(format!("relative residual {:.3e} above tolerance {:.3e}", report.success.max_rel_residual, report.success.tolerance)).into());
            }
        }
        Command::Crossover { input } => {
            let points = load_sweep(cli, input)?;
            let eval = evaluator(cli, &cfg)?;
            let fits = analysis::fit_sweep(&points, cfg.fit_window(), cfg.fit_tolerance)?;
            let direct = analysis::inject_single("direct", &eval.direct, cfg.engine(), &cfg.scenario_settings())?;
            let area = eval.ft.stats().area;
            let mut run = |p: f64| eval.point(p);
            let est = analysis::find_crossover(&points, &mut run, &fits, direct.failing_count, area, cfg.crossover_tolerance, cfg.crossover_max_evaluations)?;
            let dir = out_dir(cli)?;
            emit::write_file(&dir.join("crossover.txt"), &est.text())?;
            emit::write_file(&dir.join("crossover.json"), &serde_json::to_string_pretty(&est).expect("estimate serializes"))?;
            print!("{}", est.text());
        }
        Command::Emit { input } => {
            let points = load_sweep(cli, input)?;
            let path = cli.out_dir.join("crossover.json");
            let report: Option<CrossoverEstimate> = match std::fs::read_to_string(&path) {
                Ok(text) => Some(serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?),
                Err(_) => None,
            };
            for f in emit::emit_all(&cli.out_dir, &points, report.as_ref())? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}
