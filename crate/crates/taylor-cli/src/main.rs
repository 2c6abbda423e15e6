use clap::Parser;
use std::path::PathBuf;
use taylor_cli::{run, CliError, RunConfig};

/// Taylor-state solver for axisymmetric tori and toroidal shells.
#[derive(Parser, Debug)]
#[command(name = "taylor", version)]
struct Args {
    /// Run configuration (`key = value` lines).
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Nodes per boundary curve.
    #[arg(long)]
    n: Option<usize>,
    /// Beltrami parameter.
    #[arg(long)]
    lambda: Option<f64>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = (|| -> Result<(), CliError> {
        let mut cfg = RunConfig::load(&args.config)?;
        if let Some(n) = args.n {
            cfg.set("n", n);
        }
        if let Some(l) = args.lambda {
            cfg.set("lambda", l);
        }
        let out = args
            .out
            .clone()
            .or_else(|| cfg.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let art = run(&cfg, &out)?;
        println!("{}", art.report.display());
        for f in &art.files {
            println!("{}", f.display());
        }
        Ok(())
    })();
    if let Err(e) = result {
        eprintln!("taylor: {e}");
        std::process::exit(e.exit_code());
    }
}
