use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mppt::harness::{self, ScenarioConfig};
use mppt::power_model;
use mppt::Error;

#[derive(Debug, Parser)]
#[command(
    name = "mppt",
    version,
    about = "Cycle-accurate MPPT controller simulator"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Directory for traces, summaries and plot data.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Keep every N-th cycle in the trace CSV.
    #[arg(long, global = true)]
    decimate: Option<u64>,

    /// Noise seed, overriding the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of system-clock cycles to simulate.
    #[arg(long, global = true)]
    cycles: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and write its trace and summary.
    Run { scenario: PathBuf },
    /// Simulate two scenarios and print their metrics side by side.
    Compare { a: PathBuf, b: PathBuf },
    /// Print the brute-force optimum for each irradiance segment.
    Oracle { scenario: PathBuf },
    /// Controller power-model utilities.
    Power {
        #[command(subcommand)]
        command: PowerCommand,
    },
}

#[derive(Debug, Subcommand)]
enum PowerCommand {
    /// Fit every corner/temperature cell of a characterization table.
    Fit { table: PathBuf },
}

impl Overrides {
    fn load(&self, path: &Path) -> Result<ScenarioConfig, Error> {
        let mut cfg = harness::read_scenario(path)?;
        if cfg.name == ScenarioConfig::default().name {
            if let Some(stem) = path.file_stem() {
                cfg.name = stem.to_string_lossy().into_owned();
            }
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        if let Some(d) = self.decimate {
            cfg.decimate = d;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.cycles {
            cfg.n_cycles = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { scenario } => {
            let cfg = cli.overrides.load(&scenario)?;
            let out = harness::run_scenario(&cfg)?;
            println!("trace: {}", out.trace_path.display());
            println!("summary: {}", out.summary_path.display());
            print!("{}", harness::output::summary_to_string(&out.summary));
        }
        Command::Compare { a, b } => {
            let cfg_a = cli.overrides.load(&a)?;
            let mut cfg_b = cli.overrides.load(&b)?;
            if cfg_a.name == cfg_b.name && cfg_a.out_dir == cfg_b.out_dir {
                cfg_b.name.push_str("_b");
            }
            let cmp = harness::compare_runs(&cfg_a, &cfg_b)?;
            print!("{}", cmp.report(&cfg_a.name, &cfg_b.name));
        }
        Command::Oracle { scenario } => {
            let cfg = cli.overrides.load(&scenario)?;
            print!("{}", harness::oracle_report(&cfg)?);
        }
        Command::Power {
            command: PowerCommand::Fit { table },
        } => {
            let samples = power_model::load_table(&table)?;
            let out_dir = cli
                .overrides
                .out_dir
                .unwrap_or_else(|| PathBuf::from("out"));
            let (_, report) = harness::power_fit(&samples, &out_dir)?;
            print!("{report}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
