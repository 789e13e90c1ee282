use clap::{Args, Parser, Subcommand};
use pdbundle_harness::check::{parse_seeds, run_suite, Suite};
use pdbundle_harness::config::{Settings, OUT_DIR_ENV};
use pdbundle_harness::error::HarnessError;
use pdbundle_harness::report::{read_trace, summarize, summary_table, write_series};
use pdbundle_harness::run::{load_instance, run_experiment, write_csv};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes: 0 ok, 1 usage/config/io error, 2 failed check, 3 budget
/// exhausted before the target gap (the trace is still written).
const EXIT_ERROR: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "pdbundle", version, about = "Primal-dual bundle solvers for regularized matrix games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random game instance as text.
    Generate(GenerateArgs),
    /// Run one method and write its CSV trace.
    Run(Box<RunArgs>),
    /// Run a randomized property suite and print a JSON report.
    Check(CheckArgs),
    /// Summarize traces and write plot-ready series.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    density: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma_x: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma_y: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Defaults to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// cs-spp, pb-spp-1cut, pb-spp-2cut, pb-spp-multicut-K, pdpb, pds,
    /// cg-open-loop, cg-adaptive, cg-line-search
    #[arg(long)]
    method: Option<String>,
    /// Instance file; a game is generated when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    gamma_x: Option<f64>,
    #[arg(long)]
    gamma_y: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps_bar: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    log_every: Option<usize>,
    #[arg(long)]
    max_iters: Option<f64>,
    #[arg(long)]
    improved: bool,
    #[arg(long)]
    parallel: bool,
    /// Trace path; defaults to `$PDBUNDLE_OUT_DIR/<method>.csv`.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// duality, certificates, rates or exact-solver
    #[arg(long)]
    suite: Suite,
    /// `a..b`, `1,5,9`, or empty for none.
    #[arg(long, default_value = "0..10")]
    seeds: String,
    #[arg(long, default_value_t = 10)]
    max_dim: usize,
    /// Also write the JSON report here.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace files written by `run`.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, HarnessError> {
    match command {
        Command::Generate(a) => {
            let g = pdbundle::game::GameInstance::generate(a.m, a.n, a.density, a.gamma_x, a.gamma_y, a.seed)
                .map_err(HarnessError::Instance)?;
            let text = g.to_text();
            match a.output {
                Some(p) => std::fs::write(&p, text).map_err(|e| HarnessError::io(&p, e))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Run(a) => {
            let mut s = match &a.config {
                Some(p) => Settings::parse_file(p)?,
                None => Settings::default(),
            };
            let overrides: [(&str, Option<String>); 14] = [
                ("method", a.method.clone()),
                ("instance", a.instance.as_ref().map(|p| p.display().to_string())),
                ("m", a.m.map(|v| v.to_string())),
                ("n", a.n.map(|v| v.to_string())),
                ("density", a.density.map(|v| v.to_string())),
                ("gamma_x", a.gamma_x.map(|v| v.to_string())),
                ("gamma_y", a.gamma_y.map(|v| v.to_string())),
                ("seed", a.seed.map(|v| v.to_string())),
                ("eps_bar", a.eps_bar.map(|v| v.to_string())),
                ("lambda", a.lambda.map(|v| v.to_string())),
                ("lambda1", a.lambda1.map(|v| v.to_string())),
                ("log_every", a.log_every.map(|v| v.to_string())),
                ("max_iters", a.max_iters.map(|v| v.to_string())),
                ("output", a.output.as_ref().map(|p| p.display().to_string())),
            ];
            for (k, v) in overrides {
                if let Some(v) = v {
                    s.set(k, v);
                }
            }
            if a.improved {
                s.set("improved", true);
            }
            if a.parallel {
                s.set("parallel", true);
            }
            let cfg = s.into_config()?;
            // Fail on a bad instance before any solver work.
            load_instance(&cfg.instance)?;
            let out = run_experiment(&cfg)?;
            let path = cfg.output_path();
            write_csv(&path, &out.records)?;
            let last = out.records.last().expect("every run logs its initial state");
            eprintln!("{}: {} rows, final gap {:.3e} -> {}", cfg.method, out.records.len(), last.gap, path.display());
            if out.reached_target {
                Ok(0)
            } else {
                eprintln!("budget exhausted before gap <= {:e}", cfg.eps_bar);
                Ok(EXIT_BUDGET)
            }
        }
        Command::Check(a) => {
            let seeds = parse_seeds(&a.seeds)?;
            let report = run_suite(a.suite, &seeds, a.max_dim)?;
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            if let Some(p) = a.output {
                std::fs::write(&p, &json).map_err(|e| HarnessError::io(&p, e))?;
            }
            for f in &report.failures {
                eprintln!("FAIL {} seed {} residual {:e}", f.check, f.seed, f.residual);
            }
            Ok(if report.passed { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Report(a) => {
            let traces = a.traces.iter().map(|p| read_trace(p)).collect::<Result<Vec<_>, _>>()?;
            let summaries: Vec<_> = traces.iter().filter_map(|t| summarize(t)).collect();
            print!("{}", summary_table(&summaries));
            for p in write_series(&traces, &a.out_dir)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(0)
        }
    }
}
