use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fraclab_cli::{run, Command, Format, OnedimTask, Overrides, RunConfig};

/// Numerical verification of fractional Hardy and Hardy–Sobolev–Maz'ya inequalities.
#[derive(Debug, Parser)]
#[command(name = "fraclab", version)]
struct Args {
    command: Command,
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// spatial dimension
    #[arg(long = "N")]
    dim: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    /// nodes per axis of the base grid
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// sub-task of `onedim`
    #[arg(long, value_enum)]
    task: Option<OnedimTask>,
    /// number of random trials
    #[arg(long)]
    count: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let overrides = Overrides {
        dim: args.dim,
        p: args.p,
        s: args.s,
        resolution: args.resolution,
        seed: args.seed,
        out: args.out,
        format: args.format,
        task: args.task,
        count: args.count,
    };
    let outcome = args
        .config
        .as_deref()
        .map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
        .and_then(|mut cfg| {
            cfg.apply(args.command, &overrides)?;
            run(&cfg)
        });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("fraclab: {e}");
            ExitCode::from(e.code)
        }
    }
}
