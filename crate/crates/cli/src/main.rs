//! `dirsens`: batch directional sensitivity analysis driven by plan files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dirsens::plan::{
    emit, exit_code, load_plan, render_csv, render_json, render_text, run_plan, Format,
};

#[derive(Parser)]
#[command(
    name = "dirsens",
    version,
    about = "Directional sensitivity of optimal value functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check of a plan and write the report.
    Analyze {
        plan: PathBuf,
        /// Output directory; the report goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        format: OutFormat,
        /// Seed for the regularity probes (overrides the plan).
        #[arg(long)]
        seed: Option<u64>,
        /// Grid points per decision coordinate (overrides the plan).
        #[arg(long)]
        grid: Option<usize>,
        /// Number of sequence shells (overrides the plan).
        #[arg(long)]
        shells: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Text,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
            OutFormat::Text => Format::Text,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Analyze {
        plan,
        out,
        format,
        seed,
        grid,
        shells,
    } = cli.command;
    let mut plan = match load_plan(&plan) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(s) = seed {
        plan.seed = s;
    }
    if let Some(g) = grid {
        plan.config.solver.grid = g;
    }
    if let Some(k) = shells {
        plan.config.schedule.shells = k;
    }
    let report = run_plan(&plan);
    let format = Format::from(format);
    match out {
        Some(dir) => {
            if let Err(e) = emit(&report, format, &dir) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
        None => print!(
            "{}",
            match format {
                Format::Json => render_json(&report),
                Format::Csv => render_csv(&report),
                Format::Text => render_text(&report),
            }
        ),
    }
    ExitCode::from(exit_code(&report) as u8)
}
