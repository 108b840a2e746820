use std::path::PathBuf;

use clap::Parser;
use heatlab_cli::config::{GridConfig, TimesSpec};
use heatlab_cli::{execute, ConfigFile, Experiment};

/// Heat-equation experiments: writes CSV series and prints a JSON report.
#[derive(Debug, Parser)]
#[command(name = "heatlab", version)]
struct Args {
    /// conserve | rates | dipole | scaling | mixing | spectrum | entropy |
    /// tails | front | counterexample | smoothing
    experiment: String,
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid, e.g. `dim=1,L=40,n=4096`.
    #[arg(long)]
    grid: Option<String>,
    /// Initial data, e.g. `box:center=0,radius=1,mass=1`.
    #[arg(long)]
    data: Option<String>,
    /// `geometric:a:b:n`, `linear:a:b:n` or `t1,t2,...`.
    #[arg(long)]
    times: Option<String>,
    /// Comma-separated norms: sup, l1, l1w, l2mu.
    #[arg(long)]
    norm: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let args = Args::parse();
    let result = (|| {
        let experiment: Experiment = args.experiment.parse()?;
        let file = args.config.as_deref().map(ConfigFile::load).transpose()?;
        let flags = ConfigFile {
            grid: args.grid.map(GridConfig::Text),
            data: args.data,
            times: args.times.map(TimesSpec::Text),
            norms: args
                .norm
                .map(|n| n.split(',').map(|s| s.trim().to_string()).collect()),
            out: args.out,
            seed: args.seed,
            ..Default::default()
        };
        execute(experiment, file, flags)
    })();
    match result {
        Ok((report, code)) => {
            println!("{}", report.to_json());
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("heatlab: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
