use anyhow::{Context, Result};
use clap::Parser;
use fewbody_harness::cli::{summary, Cli};

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = cli.resolved_config()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let outcome = cli.execute(&cfg)?;
    print!("{}", summary(&outcome));
    Ok(())
}
