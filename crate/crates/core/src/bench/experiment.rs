//! Repeated bandit runs, aggregation and CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, PolicyId, PolicySpec};
use crate::clip::ClipLevel;
use crate::dist::log_pareto_arms;
use crate::envs::ArmEnvironment;
use crate::error::{Error, Result};
use crate::policy::{run_policy, InfClip, Policy, PolicyTrace, RobustUcb, UpdateRule};
use crate::rng::{streams, SeededRng};
use crate::tsallis::TsallisConfig;
use crate::zeroth::{theorem1_mu, theorem1_planner};

pub const CSV_HEADER: [&str; 7] = [
    "algo",
    "alpha",
    "seed_base",
    "t",
    "mean_prob_optimal",
    "std_prob_optimal",
    "mean_cum_regret",
];

/// Policy parameters after applying planner defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedPolicy {
    pub id: PolicyId,
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub q: Option<f64>,
    pub c: Option<f64>,
    /// Moment scale `M` of the environment.
    pub scale: f64,
}

impl ResolvedPolicy {
    /// INF-clip and Skip-INF default to the bandit planner; a `λ`
    /// override without `μ` takes `μ` from the same formula at that `λ`.
    pub fn resolve(spec: &PolicySpec, alpha: f64, horizon: usize, env: &ArmEnvironment) -> Result<Self> {
        let scale = env.moment_scale();
        let n = env.n_arms();
        let mut out = Self {
            id: spec.id,
            alpha,
            lambda: None,
            mu: None,
            q: None,
            c: None,
            scale,
        };
        match spec.id {
            PolicyId::InfClip | PolicyId::SkipInf => {
                let t = horizon as f64;
                let (lambda, mu) = match (spec.lambda, spec.mu) {
                    (Some(l), Some(m)) => (l, m),
                    (Some(l), None) => (l, theorem1_mu(t, alpha, l, scale)),
                    (None, mu) => {
                        let (l, m, _) = theorem1_planner(t, alpha, n, scale)?;
                        (l, mu.unwrap_or(m))
                    }
                };
                out.lambda = Some(lambda);
                out.mu = Some(mu);
                out.q = Some(spec.q.unwrap_or(0.5));
            }
            PolicyId::RobustUcb => {
                out.c = Some(spec.c.unwrap_or(RobustUcb::DEFAULT_C));
            }
        }
        Ok(out)
    }

    pub fn build(&self, n: usize, seed: u64) -> Result<Box<dyn Policy>> {
        Ok(match self.id {
            PolicyId::InfClip | PolicyId::SkipInf => {
                let rule = if self.id == PolicyId::InfClip {
                    UpdateRule::Clip
                } else {
                    UpdateRule::Skip
                };
                let cfg = TsallisConfig::new(self.q.unwrap_or(0.5), self.mu.unwrap_or(1.0))?;
                let lam = ClipLevel::new(self.lambda.unwrap_or(f64::MAX))?;
                Box::new(InfClip::with_rule(
                    n,
                    cfg,
                    lam,
                    rule,
                    SeededRng::new(seed, streams::POLICY),
                )?)
            }
            PolicyId::RobustUcb => Box::new(RobustUcb::with_c(
                n,
                self.alpha,
                self.scale,
                self.c.unwrap_or(RobustUcb::DEFAULT_C),
            )?),
        })
    }
}

/// One independent run with seed `seed`.
pub fn run_single(
    policy: &ResolvedPolicy,
    env: &ArmEnvironment,
    horizon: usize,
    seed: u64,
) -> Result<PolicyTrace> {
    let mut p = policy.build(env.n_arms(), seed)?;
    let mut rng = SeededRng::new(seed, streams::ENVIRONMENT);
    run_policy(p.as_mut(), env, horizon, env.best_arm(), &mut rng)
}

/// Statistics across repetitions for one (policy, alpha) pair.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateCurve {
    pub policy: ResolvedPolicy,
    pub seed_base: u64,
    pub repetitions: usize,
    pub mean_prob_optimal: Vec<f64>,
    pub std_prob_optimal: Vec<f64>,
    pub mean_cum_regret: Vec<f64>,
    /// Average pseudo-regret `R_T / T` of each run, in run order.
    pub final_average_regret: Vec<f64>,
    #[serde(skip)]
    pub raw: Option<Vec<PolicyTrace>>,
}

impl AggregateCurve {
    pub fn from_traces(
        policy: ResolvedPolicy,
        seed_base: u64,
        traces: &[PolicyTrace],
        keep_raw: bool,
    ) -> Self {
        let r = traces.len();
        let horizon = traces.first().map_or(0, PolicyTrace::len);
        let mut mean = vec![0.0; horizon];
        let mut std = vec![0.0; horizon];
        let mut regret = vec![0.0; horizon];
        for t in 0..horizon {
            let m = traces.iter().map(|tr| tr.prob_optimal[t]).sum::<f64>() / r as f64;
            let var = if r > 1 {
                traces
                    .iter()
                    .map(|tr| (tr.prob_optimal[t] - m).powi(2))
                    .sum::<f64>()
                    / (r - 1) as f64
            } else {
                0.0
            };
            mean[t] = m;
            std[t] = var.sqrt();
            regret[t] = traces.iter().map(|tr| tr.cum_regret[t]).sum::<f64>() / r as f64;
        }
        Self {
            policy,
            seed_base,
            repetitions: r,
            mean_prob_optimal: mean,
            std_prob_optimal: std,
            mean_cum_regret: regret,
            final_average_regret: traces.iter().map(PolicyTrace::average_pseudo_regret).collect(),
            raw: keep_raw.then(|| traces.to_vec()),
        }
    }

    pub fn algo(&self) -> &'static str {
        self.policy.id.as_str()
    }

    pub fn alpha(&self) -> f64 {
        self.policy.alpha
    }

    pub fn len(&self) -> usize {
        self.mean_prob_optimal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_prob_optimal.is_empty()
    }

    /// Final-step mean and its standard error.
    pub fn final_prob_optimal(&self) -> (f64, f64) {
        let t = self.len() - 1;
        (
            self.mean_prob_optimal[t],
            self.std_prob_optimal[t] / (self.repetitions as f64).sqrt(),
        )
    }

    /// Mean of the per-run average pseudo-regret and its standard error.
    pub fn average_regret(&self) -> (f64, f64) {
        mean_and_se(&self.final_average_regret)
    }
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Trailing moving average: `out[t] = mean(xs[max(0, t−w+1) ..= t])`.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..xs.len())
        .map(|t| {
            let lo = (t + 1).saturating_sub(w);
            // Averaging offsets from xs[t] keeps constant runs exact.
            let c = xs[t];
            c + xs[lo..=t].iter().map(|v| v - c).sum::<f64>() / (t + 1 - lo) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub curves: Vec<AggregateCurve>,
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every (alpha, policy) pair for `repetitions` seeds. Results depend
/// only on the config: runs are collected in run order whatever the
/// scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let pool = thread_pool(threads)?;
    let mut curves = Vec::new();
    for &alpha in &cfg.alphas {
        let env = ArmEnvironment::new(log_pareto_arms(alpha, &cfg.means)?)?;
        for spec in &cfg.policies {
            let policy = ResolvedPolicy::resolve(spec, alpha, cfg.horizon, &env)?;
            let traces: Vec<PolicyTrace> = pool.install(|| {
                (0..cfg.repetitions)
                    .into_par_iter()
                    .map(|i| run_single(&policy, &env, cfg.horizon, cfg.base_seed + i as u64))
                    .collect::<Result<Vec<_>>>()
            })?;
            curves.push(AggregateCurve::from_traces(
                policy,
                cfg.base_seed,
                &traces,
                cfg.raw_traces,
            ));
        }
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        curves,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let file = File::create(path)?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Sidecar path `stem.<suffix>` next to the CSV.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Serialize)]
struct CurveMeta<'a> {
    algo: &'a str,
    alpha: f64,
    lambda: Option<f64>,
    mu: Option<f64>,
    q: Option<f64>,
    c: Option<f64>,
    moment_scale: f64,
    final_mean_prob_optimal: f64,
    final_std_error: f64,
    mean_average_regret: f64,
    average_regret_std_error: f64,
}

#[derive(Serialize)]
struct Meta<'a> {
    horizon: usize,
    repetitions: usize,
    base_seed: u64,
    filter_window: usize,
    means: &'a [f64],
    curves: Vec<CurveMeta<'a>>,
}

/// Writes the aggregate CSV (moving-average filtered mean and std), a
/// `.meta.json` sidecar with the resolved parameters, and the raw traces
/// when requested.
pub fn write_outputs(result: &ExperimentResult, path: &Path) -> Result<()> {
    let cfg = &result.config;
    let mut w = csv_writer(path)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for curve in &result.curves {
        let mean = moving_average(&curve.mean_prob_optimal, cfg.filter_window);
        let std = moving_average(&curve.std_prob_optimal, cfg.filter_window);
        let algo = curve.algo();
        let alpha = curve.alpha().to_string();
        let seed = curve.seed_base.to_string();
        for t in 0..curve.len() {
            w.write_record([
                algo,
                &alpha,
                &seed,
                &(t + 1).to_string(),
                &mean[t].to_string(),
                &std[t].to_string(),
                &curve.mean_cum_regret[t].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;

    let meta = Meta {
        horizon: cfg.horizon,
        repetitions: cfg.repetitions,
        base_seed: cfg.base_seed,
        filter_window: cfg.filter_window,
        means: &cfg.means,
        curves: result
            .curves
            .iter()
            .map(|c| {
                let (fm, fse) = c.final_prob_optimal();
                let (rm, rse) = c.average_regret();
                CurveMeta {
                    algo: c.algo(),
                    alpha: c.alpha(),
                    lambda: c.policy.lambda,
                    mu: c.policy.mu,
                    q: c.policy.q,
                    c: c.policy.c,
                    moment_scale: c.policy.scale,
                    final_mean_prob_optimal: fm,
                    final_std_error: fse,
                    mean_average_regret: rm,
                    average_regret_std_error: rse,
                }
            })
            .collect(),
    };
    let mut f = BufWriter::new(File::create(sibling(path, "meta.json"))?);
    serde_json::to_writer_pretty(&mut f, &meta).map_err(|e| Error::Io(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;

    if result.curves.iter().any(|c| c.raw.is_some()) {
        let mut w = csv_writer(&sibling(path, "raw.csv"))?;
        w.write_record(["algo", "alpha", "run", "t", "arm", "loss", "prob_optimal", "cum_regret"])
            .map_err(csv_err)?;
        for curve in &result.curves {
            let Some(raw) = &curve.raw else { continue };
            let alpha = curve.alpha().to_string();
            for (run, tr) in raw.iter().enumerate() {
                for t in 0..tr.len() {
                    w.write_record([
                        curve.algo(),
                        &alpha,
                        &run.to_string(),
                        &(t + 1).to_string(),
                        &tr.arms[t].to_string(),
                        &tr.losses[t].to_string(),
                        &tr.prob_optimal[t].to_string(),
                        &tr.cum_regret[t].to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        w.flush()?;
    }
    Ok(())
}
