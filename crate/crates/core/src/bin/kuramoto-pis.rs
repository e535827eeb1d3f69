use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kuramoto_pis::bounds::{evaluate, BoundReport, Condition};
use kuramoto_pis::coupling_opt::{binding_constraints, generate_constraints, solve_lp, LpStatus};
use kuramoto_pis::harness::{self, Check, ExperimentConfig};
use kuramoto_pis::io::{read_json, write_json, InitFile, SystemFile};
use kuramoto_pis::simulator::{simulate, SimConfig};
use kuramoto_pis::Result;

#[derive(Parser)]
#[command(version, about = "Kuramoto synchronization on diameter-two graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a system and write the trajectory as CSV.
    Simulate {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        init: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 100.0)]
        tmax: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate sufficient coupling bounds for a system and initial state.
    Bound {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        init: PathBuf,
        /// all, theorem1, lp, c3, c5 or c28.
        #[arg(long, default_value = "all")]
        condition: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum-total per-edge couplings for a phase cap.
    Optimize {
        #[arg(long)]
        system: PathBuf,
        /// Initial spread; the cap is max(π/2, d0).
        #[arg(long)]
        d0: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fraction of random initial phases admitted by each condition.
    Exp1(ExpArgs),
    /// Mean coupling bounds over random diameter-two graphs.
    Exp2(ExpArgs),
    /// Star graph that never synchronizes despite a stable equilibrium.
    Example1 {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Four-node example comparing equal and per-edge couplings.
    Example2 {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExpArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples (or graphs) per n; defaults depend on the experiment.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

impl ExpArgs {
    fn config(&self, base: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            seed: self.seed,
            samples: self.samples.unwrap_or(base.samples),
            n_min: self.n_min.unwrap_or(base.n_min),
            n_max: self.n_max.unwrap_or(base.n_max),
            ..base
        }
    }
}

fn print_checks(checks: &[Check]) -> bool {
    for c in checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.passed)
}

fn print_reports(reports: &[BoundReport]) {
    for r in reports {
        let value = match r.bound.value() {
            Some(v) => format!("{v:.6}"),
            None => "infeasible".to_string(),
        };
        println!(
            "{:<12} K >= {value:<14} phase constraints {}",
            r.condition.name(),
            if r.phase_constraints_ok { "hold" } else { "violated" }
        );
    }
}

#[derive(Serialize)]
struct OptimizeOutput {
    d: f64,
    status: LpStatus,
    objective: f64,
    constraints: usize,
    couplings: Vec<(usize, usize, f64)>,
    binding: usize,
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Simulate {
            system,
            init,
            dt,
            tmax,
            out,
        } => {
            let sys = read_json::<SystemFile>(&system)?.to_system()?;
            let state = read_json::<InitFile>(&init)?.to_state();
            let cfg = SimConfig {
                dt,
                t_max: tmax,
                ..SimConfig::default()
            };
            let traj = simulate(&sys, &state, &cfg)?;
            create_parent(&out)?;
            traj.write_csv(File::create(&out)?)?;
            println!("{:?}; max spread {:.6}", traj.outcome, traj.max_spread);
            Ok(true)
        }
        Command::Bound {
            system,
            init,
            condition,
            out,
        } => {
            let sys = read_json::<SystemFile>(&system)?.to_system()?;
            let state = read_json::<InitFile>(&init)?.to_state();
            let conditions: Vec<Condition> = if condition == "all" {
                Condition::ALL.to_vec()
            } else {
                vec![condition.parse()?]
            };
            let reports: Vec<BoundReport> =
                conditions.into_iter().map(|c| evaluate(c, &sys, &state)).collect();
            print_reports(&reports);
            if let Some(out) = out {
                write_json(&out, &reports)?;
            }
            Ok(true)
        }
        Command::Optimize { system, d0, out } => {
            let sys = read_json::<SystemFile>(&system)?.to_system()?;
            let d = d0.map_or(FRAC_PI_2, |v| v.max(FRAC_PI_2));
            let lp = generate_constraints(&sys, d)?;
            let sol = solve_lp(&lp)?;
            let couplings: Vec<(usize, usize, f64)> = lp
                .edges
                .iter()
                .zip(&sol.values)
                .map(|(&(i, j), &k)| (i + 1, j + 1, k))
                .collect();
            println!("status {:?}, total coupling {:.9}", sol.status, sol.objective);
            for (i, j, k) in &couplings {
                println!("K_{i}{j} = {k:.9}");
            }
            let output = OptimizeOutput {
                d,
                status: sol.status,
                objective: sol.objective,
                constraints: lp.constraints.len(),
                binding: binding_constraints(&lp, &sol.values, 1e-9).count(),
                couplings,
            };
            if let Some(out) = out {
                write_json(&out, &output)?;
            }
            Ok(sol.status == LpStatus::Optimal)
        }
        Command::Exp1(args) => {
            let res = harness::experiment1(&args.config(ExperimentConfig::experiment1()))?;
            res.write(&args.out)?;
            Ok(print_checks(&res.checks))
        }
        Command::Exp2(args) => {
            let res = harness::experiment2(&args.config(ExperimentConfig::experiment2()))?;
            res.write(&args.out)?;
            Ok(print_checks(&res.checks))
        }
        Command::Example1 { eps, out } => {
            let (_, report) = harness::example1(eps, Some(&out))?;
            Ok(print_checks(&report.checks))
        }
        Command::Example2 { seed, out } => {
            let report = harness::example2(seed, Some(&out))?;
            Ok(print_checks(&report.checks))
        }
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
