use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use molcreativity_cli::tools::{self, CorrRows, LineResult};
use molcreativity_cli::{prepare, run_eval, CliError, Config, Overrides};

#[derive(Parser)]
#[command(
    name = "molcreativity",
    version,
    about = "Creativity metrics for constrained molecular generation"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory for outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    batch: Option<usize>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate tasks with the configured backend.
    Eval {
        /// Task names; defaults to the config's task list.
        #[arg(long, value_delimiter = ',')]
        tasks: Vec<String>,
    },
    /// Evaluate tasks with the offline mock generator.
    MockEval {
        #[arg(long, value_delimiter = ',')]
        tasks: Vec<String>,
    },
    /// Pick in-context examples from an activity file.
    SelectIcl {
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        records: PathBuf,
    },
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Print a validity verdict per SMILES.
    Validate { smiles: Vec<String> },
    /// Print the canonical form per SMILES.
    Canon { smiles: Vec<String> },
    /// Print the hex fingerprint per SMILES.
    Fp { smiles: Vec<String> },
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Correlation matrix of the base metrics.
    Corr {
        /// Report files or run directories.
        #[arg(long, num_args = 1..)]
        reports: Vec<PathBuf>,
        /// CSV with metric columns instead of reports.
        #[arg(long, conflicts_with = "reports")]
        csv: Option<PathBuf>,
        /// Use one row per run instead of per-task means.
        #[arg(long)]
        per_run: bool,
    },
    /// Association between numeric targets and scored values.
    Logp {
        /// Run directories.
        #[arg(long, num_args = 1.., required = true)]
        runs_dir: Vec<PathBuf>,
        #[arg(long, default_value = "logp")]
        property: String,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
}

fn read_inputs(args: Vec<String>) -> Result<Vec<String>, CliError> {
    if !args.is_empty() {
        return Ok(args);
    }
    let stdin = io::stdin();
    let mut out = Vec::new();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| CliError::io(Path::new("<stdin>"), e))?;
        if !line.trim().is_empty() {
            out.push(line);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("no SMILES given".into()));
    }
    Ok(out)
}

fn line_command(args: Vec<String>, f: fn(&str) -> LineResult) -> Result<(), CliError> {
    let inputs = read_inputs(args)?;
    let (lines, any) = tools::run_lines(&inputs, f);
    let mut out = io::stdout().lock();
    for l in lines {
        let _ = writeln!(out, "{l}");
    }
    if any {
        Ok(())
    } else {
        Err(CliError::Data("no input line succeeded".into()))
    }
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    let overrides = Overrides {
        seed: g.seed,
        runs: g.runs,
        batch: g.batch,
        temperature: g.temperature,
    };
    match cli.command {
        cmd @ (Command::Eval { .. } | Command::MockEval { .. }) => {
            let (tasks, mock) = match cmd {
                Command::Eval { tasks } => (tasks, false),
                Command::MockEval { tasks } => (tasks, true),
                _ => unreachable!(),
            };
            let config = match &g.config {
                Some(p) => Config::load(p)?,
                None => return Err(CliError::Config("--config is required".into())),
            };
            let out_dir = g.out_dir.unwrap_or_else(|| PathBuf::from("runs/latest"));
            let prepared = prepare(config, &tasks, &overrides, mock)?;
            let outcome = run_eval(&prepared, &out_dir)?;
            print!("{}", outcome.summary_csv);
            eprintln!(
                "run {} written to {}",
                outcome.manifest.hash,
                out_dir.display()
            );
            Ok(())
        }
        Command::SelectIcl { target, k, records } => {
            let selection = tools::cmd_select_icl(&records, &target, k)?;
            let text = json(&selection);
            match g.out_dir {
                Some(dir) => write_out(&dir, &format!("icl_{target}.json"), &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Stats(StatsCommand::Corr {
            reports,
            csv,
            per_run,
        }) => {
            let matrix = match csv {
                Some(path) => tools::cmd_corr_csv(&path)?,
                None if reports.is_empty() => {
                    return Err(CliError::Config("give --reports or --csv".into()))
                }
                None => tools::cmd_corr_reports(
                    &reports,
                    if per_run {
                        CorrRows::Runs
                    } else {
                        CorrRows::TaskMeans
                    },
                )?,
            };
            if let Some(dir) = g.out_dir {
                write_out(&dir, "corr.json", &json(&matrix))?;
                write_out(&dir, "corr.csv", &matrix.to_csv())?;
            }
            print!("{}", matrix.to_csv());
            Ok(())
        }
        Command::Stats(StatsCommand::Logp {
            runs_dir,
            property,
            bins,
        }) => {
            let analysis = tools::cmd_logp(&runs_dir, &property, bins)?;
            if let Some(dir) = g.out_dir {
                write_out(
                    &dir,
                    &format!("{property}_association.json"),
                    &json(&analysis.association),
                )?;
                write_out(
                    &dir,
                    &format!("{property}_histogram.csv"),
                    &analysis.histogram_csv,
                )?;
            }
            print!("{}", json(&analysis.association));
            Ok(())
        }
        Command::Validate { smiles } => line_command(smiles, tools::validate_line),
        Command::Canon { smiles } => line_command(smiles, tools::canon_line),
        Command::Fp { smiles } => line_command(smiles, tools::fp_line),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
