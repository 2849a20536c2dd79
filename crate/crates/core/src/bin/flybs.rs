use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flybs::sim::{
    export, export_trajectory, run, sweep, ExportFormat, RunSummary, ScenarioConfig, Scheme,
    Snapshot, SweepParam,
};
use flybs::Error;

/// Flying base station positioning and power allocation simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mission campaign and export per-step CSV and a JSON summary.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also write node trajectories.
        #[arg(long)]
        trajectory: bool,
    },
    /// Run the campaign once per value of one parameter.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_parser = parse_param)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Check a frozen timestep for a feasible FlyBS position.
    FeasibilityCheck {
        #[arg(long)]
        snapshot: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// JSON scenario file; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    #[arg(long)]
    n_nodes: Option<usize>,
    /// Minimum capacity per node, bit/s.
    #[arg(long)]
    cmin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_drops: Option<usize>,
    /// Mission duration, s.
    #[arg(long)]
    duration: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl ScenarioArgs {
    fn config(&self) -> flybs::Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if let Some(n) = self.n_nodes {
            cfg.n_nodes = n;
        }
        if let Some(c) = self.cmin {
            cfg.cmin = c;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.n_drops {
            cfg.n_drops = d;
        }
        if let Some(d) = self.duration {
            cfg.duration = d;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self) -> flybs::Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        Ok(dir)
    }
}

fn print_summary(s: &RunSummary) {
    println!(
        "scheme={} nodes={} cmin={} drops={} steps={} mean_sum_capacity={:.6e} infeasible_steps={} qos_violations={} mean_iterations={:.3} mean_propulsion_power={:.3}",
        s.config.scheme,
        s.config.n_nodes,
        s.config.cmin,
        s.drops.len(),
        s.total_steps(),
        s.mean_sum_capacity,
        s.infeasible_steps,
        s.qos_violations,
        s.mean_iterations,
        s.mean_propulsion_power
    );
}

fn write_run(s: &RunSummary, dir: &Path, prefix: &str, trajectory: bool) -> flybs::Result<()> {
    export(
        s,
        &dir.join(format!("{prefix}steps.csv")),
        ExportFormat::Csv,
    )?;
    export(
        s,
        &dir.join(format!("{prefix}summary.json")),
        ExportFormat::Json,
    )?;
    if trajectory {
        export_trajectory(s, &dir.join(format!("{prefix}trajectory.csv")))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> flybs::Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            scenario,
            trajectory,
        } => {
            let mut cfg = scenario.config()?;
            cfg.record_trajectory |= trajectory;
            let dir = scenario.out_dir()?;
            let s = run(&cfg)?;
            write_run(&s, &dir, "", cfg.record_trajectory)?;
            print_summary(&s);
        }
        Command::Sweep {
            scenario,
            param,
            values,
        } => {
            let cfg = scenario.config()?;
            let dir = scenario.out_dir()?;
            let results = sweep(&cfg, param, &values)?;
            let table = dir.join("sweep.csv");
            let mut w = csv::Writer::from_path(&table)?;
            w.write_record([
                "value",
                "mean_sum_capacity",
                "infeasible_steps",
                "qos_violations",
                "mean_iterations",
            ])?;
            for (v, s) in &results {
                w.serialize((
                    v,
                    s.mean_sum_capacity,
                    s.infeasible_steps,
                    s.qos_violations,
                    s.mean_iterations,
                ))?;
                write_run(s, &dir, &format!("{v}_"), false)?;
                print_summary(s);
            }
            w.flush().map_err(|e| Error::Io {
                path: table,
                source: e,
            })?;
        }
        Command::FeasibilityCheck { snapshot } => {
            let out = Snapshot::load(&snapshot)?.check()?;
            println!("{}", serde_json::to_string(&out)?);
            if !out.feasible {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
