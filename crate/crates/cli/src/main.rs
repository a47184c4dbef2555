use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hopfield_cli::config::{parse_config, schema};
use hopfield_cli::{run_scenario, CliError, Scenario};

#[derive(Parser)]
#[command(name = "hopfield", version, about = "Particle creation in a dissipative Hopfield dielectric: scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output.dir from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and mode fan-outs.
    #[arg(long)]
    threads: Option<usize>,
    /// Reject unknown configuration keys instead of warning.
    #[arg(long)]
    strict: bool,
    /// Accepted for scripts; nothing here draws random numbers.
    #[arg(long)]
    seedless: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in the config.
    Run(RunArgs),
    Dispersion(RunArgs),
    Bands(RunArgs),
    Spectrum(RunArgs),
    YieldSweep(RunArgs),
    ExactVsPerturbative(RunArgs),
    CorrelationMap(RunArgs),
    SuddenSwitch(RunArgs),
    OracleCompare(RunArgs),
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Print the configuration JSON schema.
    Schema,
}

fn fail(e: &CliError) -> ExitCode {
    let record = e.record();
    eprintln!("error: {}", record.message);
    ExitCode::from(e.exit_code() as u8)
}

fn run(args: &RunArgs, forced: Option<Scenario>) -> ExitCode {
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let cfg = match parse_config(&args.config, forced, args.strict) {
        Ok(c) => c,
        Err(e) => return fail(&e.into()),
    };
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => Path::new(&cfg.raw.output.dir).to_path_buf(),
    };
    match run_scenario(&cfg, &dir) {
        Ok(report) => {
            if let Some(err) = &report.error {
                eprintln!("error: {}", err.message);
            }
            println!("{}: {:?}, report at {}", cfg.scenario, report.status, dir.join("report.json").display());
            for (k, v) in &report.headline {
                println!("  {k} = {v}");
            }
            ExitCode::from(report.status.exit_code() as u8)
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(a) => run(a, None),
        Command::Dispersion(a) => run(a, Some(Scenario::Dispersion)),
        Command::Bands(a) => run(a, Some(Scenario::Bands)),
        Command::Spectrum(a) => run(a, Some(Scenario::Spectrum)),
        Command::YieldSweep(a) => run(a, Some(Scenario::YieldSweep)),
        Command::ExactVsPerturbative(a) => run(a, Some(Scenario::ExactVsPerturbative)),
        Command::CorrelationMap(a) => run(a, Some(Scenario::CorrelationMap)),
        Command::SuddenSwitch(a) => run(a, Some(Scenario::SuddenSwitch)),
        Command::OracleCompare(a) => run(a, Some(Scenario::OracleCompare)),
        Command::Validate { config, strict } => match parse_config(config, None, *strict) {
            Ok(cfg) => {
                for w in &cfg.warnings {
                    eprintln!("warning: {w}");
                }
                println!("{}: valid", cfg.scenario);
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e.into()),
        },
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&schema()).expect("static schema"));
            ExitCode::SUCCESS
        }
    }
}
