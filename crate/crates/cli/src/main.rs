//! `toba`: run experiment configs, granularity sweeps and bias diagnostics.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use toba_core::diagnostics::{write_bins_csv, Bin};
use toba_core::experiment::{
    compare_granularity, diagnose, load_config, load_probs, run_experiment, write_outputs,
    Aggregate, MeanStd,
};
use toba_core::graph::load_graph_with_split;

#[derive(Parser)]
#[command(name = "toba", version, about = "Class-imbalanced node classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config and write results.csv,
    /// summary.json and per-seed training histories.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace the config's seed list with 1..=k.
        #[arg(long)]
        seeds: Option<u64>,
        /// Set a config value by dotted key, e.g. `train.epochs=500`.
        /// The value is parsed as JSON, falling back to a plain string.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Rerun an augmenting config at several augmentation granularities.
    Granularity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,50,100")]
        values: Vec<usize>,
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy by heterophily, supervision distance and risk for saved
    /// class probabilities. The graph file must carry a split.
    Diagnose {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        probs: PathBuf,
        /// Number of equal-count bins.
        #[arg(long, default_value_t = 10)]
        windows: usize,
        /// Directory for the bin tables (CSV).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &Path, seeds: Option<u64>, overrides: &[String]) -> Result<toba_core::experiment::ExperimentConfig> {
    let mut overrides = overrides.to_vec();
    if let Some(k) = seeds {
        if k == 0 {
            bail!("--seeds must be at least 1");
        }
        let list: Vec<String> = (1..=k).map(|s| s.to_string()).collect();
        overrides.push(format!("seeds=[{}]", list.join(",")));
    }
    Ok(load_config(config, &overrides)?)
}

fn pm(m: &MeanStd) -> String {
    format!("{:.4} ± {:.4}", m.mean, m.std)
}

fn print_aggregate(name: &str, method: &str, runs: usize, agg: &Aggregate) {
    println!("{name} {method} ({runs} runs)");
    println!("  bacc        {}", pm(&agg.bacc));
    println!("  macro_f1    {}", pm(&agg.macro_f1));
    println!("  disparity   {}", pm(&agg.disparity));
    println!("  runtime_ms  {:.1}", agg.runtime_ms.mean);
    println!("  vedge_ratio {:.5}", agg.virtual_edge_ratio.mean);
}

fn write_bins(path: PathBuf, bins: &[Bin]) -> Result<()> {
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_bins_csv(BufWriter::new(f), bins)?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seeds,
            overrides,
        } => {
            let cfg = load(&config, seeds, &overrides)?;
            let result = run_experiment(&cfg)?;
            write_outputs(&result, &out)?;
            print_aggregate(&cfg.dataset_name(), &cfg.method.to_string(), result.rows.len(), &result.aggregate);
            println!("wrote {}", out.display());
        }
        Command::Granularity {
            config,
            values,
            seeds,
            overrides,
            out,
        } => {
            if values.is_empty() {
                bail!("--values needs at least one granularity");
            }
            let cfg = load(&config, seeds, &overrides)?;
            let rows = compare_granularity(&cfg, &values)?;
            println!("granularity  bacc               macro_f1           invocations  aug_ms/iter");
            for r in &rows {
                println!(
                    "{:>11}  {}  {}  {:>11}  {:.4}",
                    r.granularity,
                    pm(&r.bacc),
                    pm(&r.macro_f1),
                    r.invocations,
                    r.augment_ms_per_iteration
                );
            }
            if let Some(dir) = out {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join("granularity.json");
                fs::write(&path, serde_json::to_string_pretty(&rows)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Diagnose {
            graph,
            probs,
            windows,
            out,
        } => {
            let (g, split) = load_graph_with_split(&graph)?;
            let split = split.context("the graph file has no train/val/test split")?;
            let pred = load_probs(&probs)?;
            let d = diagnose(&g, &split, &pred, windows)?;
            println!("{}", serde_json::to_string_pretty(&d.metrics)?);
            if let Some(dir) = out {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                write_bins(dir.join("heterophily.csv"), &d.heterophily_bins)?;
                write_bins(dir.join("risk.csv"), &d.risk_bins)?;
                let dist: Vec<Bin> = d.distance_groups.into_iter().map(|(_, b)| b).collect();
                write_bins(dir.join("distance.csv"), &dist)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
