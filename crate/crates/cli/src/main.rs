//! `resq` — run qubit-resonator scenarios from config files, materialize the
//! built-in figure presets, sweep parameters, and cross-check the pipeline
//! against the independent single-excitation integrator.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use resq_core::scenarios::{
    oracle_compare, parse_config, preset, run_labeled, run_scenario, sweep_configs, Preset,
    RunOptions, ScenarioConfig, ScenarioRun,
};

#[derive(Parser)]
#[command(
    name = "resq",
    version,
    about = "Density-matrix simulator for charge qubits coupled to a damped resonator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario from a config file and write its configured outputs.
    Run {
        /// Path to a `key = value` config file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Materialize a named preset (fig1..fig7) into CSV/SVG files.
    Preset {
        /// Preset name: fig1, fig2, ... fig7.
        #[arg(long)]
        name: String,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a config once per value of a swept key, embedding the value in
    /// each output file name.
    Sweep {
        /// Path to the base config file.
        #[arg(long)]
        config: PathBuf,
        /// Dotted config key to sweep, e.g. dissipation.kappa.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 0.01,0.1,1.0.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Evolve a config through the full pipeline and print the maximum
    /// deviation from the independent single-excitation integrator.
    Oracle {
        /// Path to the config file to compare.
        #[arg(long = "compare")]
        compare: PathBuf,
    },
}

fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("cannot parse config {}", path.display()))
}

fn describe(run: &ScenarioRun) -> String {
    let cutoff = match run.cutoff.converged {
        Some(true) => "cutoff converged".to_string(),
        Some(false) => format!(
            "cutoff NOT converged (last delta {:.3e})",
            run.cutoff.max_delta.unwrap_or(f64::NAN)
        ),
        None => "cutoff unchecked".to_string(),
    };
    format!(
        "{} rows x {} cols, n_max {} ({}), max |Tr rho - 1| = {:.3e}, min eig = {:.3e}",
        run.rows.len(),
        run.header.len(),
        run.cutoff.n_max_used,
        cutoff,
        run.physicality.max_trace_dev,
        run.physicality.min_eigenvalue
    )
}

/// Insert a label before the file extension: out.csv -> out_kappa0.1.csv.
fn labeled_path(base: &Path, label: &str) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".to_string());
    let ext = base
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_string());
    base.with_file_name(format!("{stem}_{label}.{ext}"))
}

fn report_jobs(results: Vec<(String, resq_core::scenarios::Result<ScenarioRun>)>) -> Result<()> {
    let mut failed = 0usize;
    for (label, result) in results {
        match result {
            Ok(run) => println!("{label}: {}", describe(&run)),
            Err(e) => {
                eprintln!("{label}: FAILED: {e}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        bail!("{failed} run(s) failed");
    }
    Ok(())
}

fn cmd_run(config: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let run = run_scenario(&cfg)?;
    println!("{}", describe(&run));
    match (&cfg.csv_path, &cfg.svg_path) {
        (None, None) => println!("no output.csv / output.svg configured; nothing written"),
        (csv, svg) => {
            if let Some(p) = csv {
                println!("wrote {}", p.display());
            }
            if let Some(p) = svg {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn cmd_preset(name: &str, out: &Path) -> Result<()> {
    let Preset { name, runs, .. } = preset(name)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let jobs: Vec<(String, ScenarioConfig)> = runs
        .into_iter()
        .map(|(label, mut cfg)| {
            let stem = if label == name {
                label.clone()
            } else {
                format!("{name}_{label}")
            };
            cfg.csv_path = Some(out.join(format!("{stem}.csv")));
            cfg.svg_path = Some(out.join(format!("{stem}.svg")));
            (stem, cfg)
        })
        .collect();
    for (stem, _) in &jobs {
        println!("queued {name} run -> {}", out.join(format!("{stem}.csv")).display());
    }
    report_jobs(run_labeled(&jobs, &RunOptions::default()))
}

fn cmd_sweep(config: &Path, param: &str, values: &[String]) -> Result<()> {
    let base = load_config(config)?;
    let csv_base = base
        .csv_path
        .clone()
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let jobs: Vec<(String, ScenarioConfig)> = sweep_configs(&base, param, values)?
        .into_iter()
        .map(|(label, mut cfg)| {
            cfg.csv_path = Some(labeled_path(&csv_base, &label));
            cfg.svg_path = cfg.svg_path.take().map(|p| labeled_path(&p, &label));
            (label, cfg)
        })
        .collect();
    report_jobs(run_labeled(&jobs, &RunOptions::default()))
}

fn cmd_oracle(config: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let cmp = oracle_compare(&cfg, &RunOptions::default())?;
    println!(
        "max |pipeline - reference| = {:.6e} over {} grid points",
        cmp.max_abs_dev, cmp.n_points
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run { config } => cmd_run(&config),
        Cmd::Preset { name, out } => cmd_preset(&name, &out),
        Cmd::Sweep {
            config,
            param,
            values,
        } => cmd_sweep(&config, &param, &values),
        Cmd::Oracle { compare } => cmd_oracle(&compare),
    }
}
