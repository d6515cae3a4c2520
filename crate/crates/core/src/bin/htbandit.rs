use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use htbandit::bench::{run_experiment, verify_all, write_outputs, ExperimentConfig, VerifyLevel};
use htbandit::clip::NormIndex;
use htbandit::zeroth::{plan_parameters, theorem1_planner, Accuracy, Prox, ZoProblem};
use htbandit::Result;

#[derive(Parser)]
#[command(name = "htbandit", version, about = "Heavy-tailed bandit simulations and planners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProxKind {
    Negentropy,
    Euclidean,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write CSV plus sidecars.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: the config's `output`, else the cwd).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "HTBANDIT_THREADS")]
        threads: Option<usize>,
    },
    /// Print planner outputs as JSON.
    Plan {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        theorem: u8,
        #[arg(long)]
        alpha: f64,
        #[arg(long = "T")]
        horizon: f64,
        #[arg(long)]
        n: usize,
        /// Moment scale (bandit planner) or Lipschitz constant (gradient-free planner).
        #[arg(long = "M")]
        m: Option<f64>,
        /// Smoothness constant (gradient-free planner).
        #[arg(long = "L")]
        l: Option<f64>,
        /// Dual norm index, a number >= 2 or "inf".
        #[arg(long, default_value = "inf")]
        q: NormIndex,
        #[arg(long = "B", default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long, value_enum, default_value = "negentropy")]
        prox: ProxKind,
        #[arg(long, default_value_t = Prox::DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Overrides the domain-derived R1.
        #[arg(long = "R1")]
        r1: Option<f64>,
        /// Overrides the domain-derived D_psi.
        #[arg(long = "D")]
        d_psi: Option<f64>,
        /// Target accuracy for tau and iteration counts.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run the verification suite; exit code 1 on any failure.
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        level: Level,
        #[arg(long)]
        json: bool,
    },
}

fn simulate(config: &Path, out: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let default_name = format!(
        "{}.csv",
        config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into())
    );
    let path = match (out, &cfg.output) {
        (Some(dir), Some(file)) => dir.join(file.file_name().unwrap_or(file.as_os_str())),
        (Some(dir), None) => dir.join(default_name),
        (None, Some(file)) => file.clone(),
        (None, None) => PathBuf::from(default_name),
    };
    let result = run_experiment(&cfg, threads)?;
    write_outputs(&result, &path)?;
    for c in &result.curves {
        let (m, se) = c.final_prob_optimal();
        let (r, rse) = c.average_regret();
        println!(
            "{:<10} alpha={:<4} lambda={:<12} mu={:<12} P(opt)@T={m:.4}±{se:.4} avg regret={r:.5}±{rse:.5}",
            c.algo(),
            c.alpha(),
            c.policy.lambda.map_or("-".into(), |v| format!("{v:.5}")),
            c.policy.mu.map_or("-".into(), |v| format!("{v:.5e}")),
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn plan(cmd: Command) -> Result<()> {
    let Command::Plan {
        theorem,
        alpha,
        horizon,
        n,
        m,
        l,
        q,
        b,
        delta,
        tau,
        prox,
        gamma,
        radius,
        r1,
        d_psi,
        eps,
    } = cmd
    else {
        unreachable!()
    };
    if theorem == 1 {
        let m = m.unwrap_or(1.0);
        let (lambda, mu, bound) = theorem1_planner(horizon, alpha, n, m)?;
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "theorem": 1, "alpha": alpha, "T": horizon, "n": n, "M": m,
                "lambda": lambda, "mu": mu, "bound": bound,
            }))
            .expect("json")
        );
        return Ok(());
    }
    let prox = match prox {
        ProxKind::Negentropy => Prox::ShiftedNegentropy { gamma },
        ProxKind::Euclidean => Prox::Euclidean { radius },
    };
    let problem = ZoProblem {
        n,
        q,
        alpha,
        moment_bound: b,
        delta,
        tau,
        horizon,
    };
    let r1 = r1.unwrap_or_else(|| prox.r1(n, alpha));
    let d = d_psi.unwrap_or_else(|| prox.diameter(n, alpha));
    let target = match (eps, m, l) {
        (Some(eps), Some(m), _) => Some(Accuracy::Lipschitz { eps, m }),
        (Some(eps), None, Some(l)) => Some(Accuracy::Smooth { eps, l }),
        _ => None,
    };
    let out = plan_parameters(&problem, r1, d, target)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({ "theorem": 2, "problem": problem, "plan": out }))
            .expect("json")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate {
            config,
            out,
            threads,
        } => simulate(&config, out, threads),
        cmd @ Command::Plan { .. } => plan(cmd),
        Command::Verify { level, json } => {
            let level = match level {
                Level::Quick => VerifyLevel::Quick,
                Level::Full => VerifyLevel::Full,
            };
            let report = verify_all(level);
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            } else {
                for e in &report.entries {
                    println!("{} {:<32} {}", if e.passed { "PASS" } else { "FAIL" }, e.name, e.detail);
                }
                println!("{} checks, {} failed", report.entries.len(), report.failures());
            }
            return if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            };
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
