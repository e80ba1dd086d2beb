use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use w2swarm::geometry::build_geodesic;
use w2swarm::ot::w2_distance;
use w2swarm::scenario::{
    load_cloud, load_scenario, run_scenario, verify_scenario, write_outputs, CheckStatus, Mode, Overrides,
    ScenarioError,
};

/// Optimal swarm tracking in 2-Wasserstein space.
#[derive(Debug, Parser)]
#[command(name = "w2swarm", version, about)]
struct Cli {
    /// Override the motion-cost weight α.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Override the horizon T.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Override the number of time steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Override the sampler seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for trajectory, summary and report files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Also write cost-vs-time and W₂-vs-time series.
    #[arg(long, global = true)]
    emit_plot_data: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// W₂ distance between two cloud files.
    Distance { a: PathBuf, b: PathBuf },
    /// Point on the geodesic between two clouds, printed as CSV.
    Geodesic {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        t: f64,
    },
    /// Closed-form optimal trajectory.
    Plan { scenario: PathBuf },
    /// Closed-loop feedback simulation.
    Simulate { scenario: PathBuf },
    /// Direct transcription solved by descent.
    Oracle { scenario: PathBuf },
    /// Receding-horizon tracking of a demand schedule.
    Mpc { scenario: PathBuf },
    /// Run the invariant suite.
    Verify { scenario: PathBuf },
}

fn overrides(cli: &Cli) -> Overrides {
    Overrides {
        alpha: cli.alpha,
        horizon: cli.horizon,
        steps: cli.steps,
        seed: cli.seed,
    }
}

fn load(cli: &Cli, path: &Path, mode: Option<Mode>) -> Result<w2swarm::scenario::Scenario, ScenarioError> {
    let mut scenario = load_scenario(path)?;
    scenario.apply(&overrides(cli));
    if let Some(mode) = mode {
        scenario.mode = mode;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn run(cli: &Cli) -> Result<bool, ScenarioError> {
    let seed = cli.seed.unwrap_or(0);
    let mode = match &cli.command {
        Command::Distance { a, b } => {
            let d = w2_distance(&load_cloud(a, seed)?, &load_cloud(b, seed)?)?;
            println!("{d:.16e}");
            return Ok(true);
        }
        Command::Geodesic { a, b, t } => {
            let path = build_geodesic(&load_cloud(a, seed)?, &load_cloud(b, seed)?)?;
            let cloud = path.eval(*t)?;
            let mut header = String::from("particle_id");
            for d in 1..=cloud.dim() {
                header += &format!(",x{d}");
            }
            println!("{header},weight");
            for (i, (x, w)) in cloud.iter().enumerate() {
                let coords: Vec<String> = x.iter().map(|c| format!("{c:.16e}")).collect();
                println!("{i},{},{w:.16e}", coords.join(","));
            }
            return Ok(true);
        }
        Command::Verify { scenario } => {
            let scenario = load(cli, scenario, None)?;
            let outcomes = verify_scenario(&scenario)?;
            for o in &outcomes {
                let tag = match o.status {
                    CheckStatus::Pass => "PASS",
                    CheckStatus::Fail => "FAIL",
                    CheckStatus::Skip => "SKIP",
                };
                println!("{tag} {}: {}", o.name, o.detail);
            }
            return Ok(outcomes.iter().all(|o| o.passed()));
        }
        Command::Plan { .. } => Mode::Plan,
        Command::Simulate { .. } => Mode::ClosedLoop,
        Command::Oracle { .. } => Mode::Oracle,
        Command::Mpc { .. } => Mode::Mpc,
    };
    let path = match &cli.command {
        Command::Plan { scenario }
        | Command::Simulate { scenario }
        | Command::Oracle { scenario }
        | Command::Mpc { scenario } => scenario,
        _ => unreachable!("handled above"),
    };
    let scenario = load(cli, path, Some(mode))?;
    let (record, report) = run_scenario(&scenario)?;
    let files = write_outputs(&cli.out_dir, &record, &report, cli.emit_plot_data)?;
    println!("scenario {} ({})", report.scenario, mode.as_str());
    println!("cost {:.16e}", report.cost.numeric);
    if let Some(a) = report.cost.analytic {
        println!("closed form {a:.16e}");
    }
    if let Some(o) = &report.oracle {
        println!(
            "oracle objective {:.16e}, ratio to plan {:.6}, {} iterations, converged {}",
            o.objective, o.cost_ratio, o.iterations, o.converged
        );
    }
    if let Some(d) = report.geodesic_defect_max {
        println!("geodesic defect {d:.3e}");
    }
    println!("wrote {}", files.trajectory.display());
    let mut ok = true;
    if let Some(o) = &report.oracle {
        ok &= o.converged;
    }
    if let Some(equivalent) = report.mpc.as_ref().and_then(|m| m.closed_loop_equivalent) {
        ok &= equivalent;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: invariant check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
