//! `nbv-bench`: command-line front end of the next-best-view workbench.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use nbv_core::harness::{
    emit_plots, run_experiment, run_sweep, run_trial, trials_to_csv, AggregateResult, ExperimentConfig, PlannerChoice,
    PreparedScene, SweepAxis,
};
use nbv_core::verify::all_suites;

#[derive(Parser)]
#[command(name = "nbv-bench", version, about = "Attention-driven next-best-view planning workbench")]
struct Cli {
    /// JSON experiment config; defaults reproduce the desk-scale study.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full study: every planner on every plant model and orientation.
    Run {
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Repeat the study for each level of one sensitivity axis.
    Sweep {
        /// occlusion, candidates or resolution.
        #[arg(long)]
        axis: String,
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one planner on one plant and print its trace and metrics.
    Trial {
        /// `nbv` (uses --attention as its ROI), `nbv_<target>`, `predefined-<k>` or `random`.
        #[arg(long)]
        planner: String,
        /// Evaluation target: whole_plant, main_stem, leaf_nodes or none.
        #[arg(long, default_value = "whole_plant")]
        attention: String,
        /// Plant model seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Plant yaw offset in degrees.
        #[arg(long, default_value_t = 0.0)]
        orientation: f64,
    },
    /// Render plots from a summary table.
    Plot {
        /// Path to a summary.csv produced by `run` or `sweep`.
        summary: PathBuf,
    },
    /// Print the effective config as complete JSON, or the paper-scale study
    /// (10 models × 12 orientations) with `--paper`.
    Config {
        #[arg(long)]
        paper: bool,
    },
    /// Run all brute-force verification suites.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn report(agg: &AggregateResult, out: &std::path::Path) {
    println!("wrote {}", out.display());
    for r in agg.summary.iter().filter(|r| r.view == 3 || r.view == 10) {
        println!(
            "  {:<16} {:<12} view {:>2}: F1 {:.4} ± {:.4}  chamfer {:.5} m  (n = {})",
            r.planner, r.attention, r.view, r.f1_mean, r.f1_ci95, r.chamfer_mean, r.trials
        );
    }
    if !agg.failures.is_empty() {
        println!("  {} failed trials recorded in failures.csv", agg.failures.len());
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Run { seed } => {
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let started = Instant::now();
            let agg = run_experiment(&cfg)?;
            report(&agg, &cfg.output_dir);
            println!("finished in {:.1} s", started.elapsed().as_secs_f64());
        }
        Command::Sweep { axis, seed } => {
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let axis: SweepAxis = axis.parse()?;
            for (label, agg) in run_sweep(&cfg, axis)? {
                println!("level {label}");
                report(&agg, &cfg.output_dir.join(format!("sweep_{}", axis.name())).join(&label));
            }
        }
        Command::Trial { planner, attention, seed, orientation } => {
            let choice = if planner == "nbv" { PlannerChoice::Nbv(attention.clone()) } else {
                let c = ExperimentConfig { planners: vec![planner.clone()], ..cfg.clone() }.planner_choices()?;
                match c.as_slice() {
                    [one] => one.clone(),
                    _ => bail!("'{planner}' names more than one planner; pick a single pattern such as predefined-1"),
                }
            };
            cfg.attention = vec![attention];
            cfg.validate()?;
            let scene = PreparedScene::new(&cfg, seed, orientation)?;
            let started = Instant::now();
            let outcome = run_trial(&cfg, &scene, &choice)?;
            let elapsed = started.elapsed();
            println!("{}", outcome.trace.to_json()?);
            print!("{}", trials_to_csv(&outcome.rows));
            eprintln!("trial finished in {:.2} s", elapsed.as_secs_f64());
        }
        Command::Plot { summary } => {
            let agg = AggregateResult::read_summary(&summary)?;
            let dir = cli.out.unwrap_or_else(|| summary.parent().unwrap_or(std::path::Path::new(".")).join("plots"));
            for p in emit_plots(&agg, &dir)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Config { paper } => {
            let effective = if paper { ExperimentConfig::paper() } else { cfg };
            println!("{}", effective.to_json()?);
        }
        Command::Oracle { seed } => {
            let mut ok = true;
            for s in all_suites(seed)? {
                println!(
                    "{} {:<36} cases {:>5}  mismatches {:>3}  max error {:.3e}  ({:.2} s)",
                    if s.passed() { "PASS" } else { "FAIL" },
                    s.name,
                    s.cases,
                    s.mismatches,
                    s.max_error,
                    s.elapsed.as_secs_f64()
                );
                for n in &s.notes {
                    println!("       {n}");
                }
                ok &= s.passed();
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
