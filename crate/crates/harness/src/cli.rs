//! Command-line interface.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use clap::Parser;

use crate::config::ExperimentConfig;
use crate::output::Cell;
use crate::{run, Command, RunOutcome};

#[derive(Parser, Debug)]
#[command(
    name = "fewbody",
    version,
    about = "Pair criticality and few-boson experiments"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML config; the bundled default when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; overrides `threads`.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Cli {
    /// The config file (or the bundled default) with command-line overrides applied.
    pub fn resolved_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default_config(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn execute(&self, cfg: &ExperimentConfig) -> Result<RunOutcome> {
        run(self.command, cfg, &cfg.output_dir)
    }
}

/// Small tables in full, larger ones as a row count.
pub fn summary(outcome: &RunOutcome) -> String {
    let mut s = String::new();
    for t in &outcome.tables {
        let _ = writeln!(s, "[{}] {} rows", t.name, t.rows.len());
        if t.rows.len() > 12 {
            continue;
        }
        let _ = writeln!(s, "  {}", t.headers.join(" "));
        for row in &t.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format!("{x:.10}"),
                    other => other.csv_text(),
                })
                .collect();
            let _ = writeln!(s, "  {}", cells.join(" "));
        }
    }
    for w in &outcome.manifest.outputs {
        let _ = writeln!(s, "{} sha256 {}", w.file, w.sha256);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("fewbody").chain(args.iter().copied()))
    }

    #[test]
    fn subcommands_and_overrides() {
        for c in [
            "tune",
            "coupling-curve",
            "universality",
            "contradiction",
            "s0",
        ] {
            assert!(parse(&[c]).is_ok(), "{c}");
        }
        assert!(parse(&["plot"]).is_err());
        let cli = parse(&[
            "universality",
            "--seed",
            "7",
            "--threads",
            "2",
            "--out",
            "elsewhere",
        ])
        .unwrap();
        let cfg = cli.resolved_config().unwrap();
        assert_eq!((cfg.seed, cfg.threads), (7, Some(2)));
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
        assert!(parse(&["s0", "--threads", "0"])
            .unwrap()
            .resolved_config()
            .is_err());
    }

    #[test]
    fn config_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        let text = ExperimentConfig::default_config()
            .to_toml()
            .unwrap()
            .replace("\"csv\"", "\"xlsx\"");
        std::fs::write(&path, text).unwrap();
        let cli = parse(&["tune", "--config", path.to_str().unwrap()]).unwrap();
        assert!(format!("{:#}", cli.resolved_config().unwrap_err()).contains("config error"));
        let missing = parse(&["tune", "--config", "/nonexistent/c.toml"]).unwrap();
        assert!(
            format!("{:#}", missing.resolved_config().unwrap_err()).contains("/nonexistent/c.toml")
        );
    }

    #[test]
    fn s0_run_writes_outputs_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cli = parse(&["s0", "--out", dir.path().to_str().unwrap()]).unwrap();
        let out = cli.execute(&cli.resolved_config().unwrap()).unwrap();
        let s0 = match out.table("s0").unwrap().rows[0][0] {
            Cell::Num(x) => x,
            _ => unreachable!(),
        };
        assert!((s0 - 1.006).abs() < 1e-3);
        let manifest: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["command"], "s0");
        let bytes = std::fs::read(dir.path().join("s0.csv")).unwrap();
        assert_eq!(
            out.digest("s0.csv").unwrap(),
            crate::output::sha256_hex(&bytes)
        );
        assert!(summary(&out).contains("s0.csv"));
    }

    #[test]
    fn empty_shape_list_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default_config();
        cfg.shapes.clear();
        cfg.output_dir = dir.path().to_path_buf();
        for c in [Command::Tune, Command::Universality] {
            let err = run(c, &cfg, dir.path()).unwrap_err();
            assert!(err.to_string().contains("config error"));
        }
    }

    #[test]
    fn bracket_failure_is_listed_and_run_continues() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default_config();
        cfg.shapes.truncate(2);
        cfg.shapes[0].bracket = (3.0, 4.0);
        let out = run(Command::Tune, &cfg, dir.path()).unwrap();
        let status = out.table("tune").unwrap().column("status").unwrap();
        assert!(matches!(status[0], Cell::Text(s) if s.starts_with("error")));
        assert_eq!(status[1], &Cell::Text("ok".into()));
    }
}
