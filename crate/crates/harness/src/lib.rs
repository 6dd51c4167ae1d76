//! Config-driven runs of the fewbody toolkit with reproducible outputs.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;

use std::path::Path;

use anyhow::Result;
use clap::ValueEnum;

use config::ExperimentConfig;
use experiments::Timings;
use output::{write_table, RunManifest, Seed, Table, Timing, WrittenFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Tune,
    CouplingCurve,
    Universality,
    Contradiction,
    S0,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Tune => "tune",
            Command::CouplingCurve => "coupling-curve",
            Command::Universality => "universality",
            Command::Contradiction => "contradiction",
            Command::S0 => "s0",
        }
    }

    fn uses_seed(self) -> bool {
        matches!(self, Command::Universality | Command::Contradiction)
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub tables: Vec<Table>,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn digest(&self, file: &str) -> Option<&str> {
        self.manifest
            .outputs
            .iter()
            .find(|w| w.file == file)
            .map(|w| w.sha256.as_str())
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Runs one subcommand and writes its tables and `manifest.json` into `out`.
pub fn run(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut timings = Timings::default();
    let tables = match command {
        Command::Tune => experiments::tune(cfg, &mut timings)?,
        Command::CouplingCurve => experiments::coupling_curve(cfg, &mut timings)?,
        Command::Universality => experiments::universality(cfg, &mut timings)?,
        Command::Contradiction => experiments::contradiction(cfg, &mut timings)?,
        Command::S0 => experiments::s0(&mut timings)?,
    };
    let mut outputs: Vec<WrittenFile> = Vec::new();
    let mut warnings = Vec::new();
    for t in &tables {
        for &f in &cfg.formats {
            let (w, warn) = write_table(t, f, out)?;
            outputs.push(w);
            warnings.extend(warn);
        }
    }
    let seeds = if command.uses_seed() {
        vec![Seed {
            name: "basis_growth".into(),
            value: cfg.seed,
        }]
    } else {
        Vec::new()
    };
    let manifest = RunManifest {
        command: command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        seeds,
        wall_times: timings
            .0
            .into_iter()
            .map(|(operation, seconds)| Timing { operation, seconds })
            .collect(),
        outputs,
        warnings,
    };
    manifest.write(out)?;
    Ok(RunOutcome { tables, manifest })
}
