//! Bandit policies and the simulation loop.
//!
//! All policies minimize losses. INF-clip and Skip-INF share the Tsallis
//! step and differ only in what they do with a loss above `λ`: INF-clip
//! clips it, Skip-INF drops the sample.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::Serialize;

use crate::clip::{iw_clipped_estimate, ClipLevel, GradientEstimate};
use crate::envs::ArmEnvironment;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tsallis::{omd_step, SimplexPoint, TsallisConfig};

pub trait Policy: Send {
    fn name(&self) -> &'static str;
    fn n_arms(&self) -> usize;
    /// Chooses the arm for round `t` (1-based).
    fn select(&mut self, t: u64) -> usize;
    fn update(&mut self, arm: usize, loss: f64) -> Result<()>;
    /// Probability that the next selection is `arm`.
    fn prob_of(&self, arm: usize) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UpdateRule {
    Clip,
    Skip,
}

/// Tsallis-INF with a clipped (or skipped) importance-weighted estimate.
#[derive(Debug, Clone)]
pub struct InfClip {
    x: SimplexPoint,
    cfg: TsallisConfig,
    lambda: ClipLevel,
    rule: UpdateRule,
    rng: SeededRng,
    informative_updates: u64,
}

impl InfClip {
    pub fn new(n: usize, cfg: TsallisConfig, lambda: ClipLevel, rng: SeededRng) -> Result<Self> {
        Self::with_rule(n, cfg, lambda, UpdateRule::Clip, rng)
    }

    pub fn skip_inf(n: usize, cfg: TsallisConfig, lambda: ClipLevel, rng: SeededRng) -> Result<Self> {
        Self::with_rule(n, cfg, lambda, UpdateRule::Skip, rng)
    }

    pub fn with_rule(
        n: usize,
        cfg: TsallisConfig,
        lambda: ClipLevel,
        rule: UpdateRule,
        rng: SeededRng,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(Self {
            x: SimplexPoint::uniform(n),
            cfg,
            lambda,
            rule,
            rng,
            informative_updates: 0,
        })
    }

    /// Starts from `x` instead of the uniform point.
    pub fn with_start(mut self, x: SimplexPoint) -> Result<Self> {
        if x.len() != self.x.len() {
            return Err(Error::invalid("x", "length does not match the arm count"));
        }
        self.x = x;
        Ok(self)
    }

    pub fn distribution(&self) -> &SimplexPoint {
        &self.x
    }

    pub fn rule(&self) -> UpdateRule {
        self.rule
    }

    pub fn lambda(&self) -> ClipLevel {
        self.lambda
    }

    pub fn config(&self) -> &TsallisConfig {
        &self.cfg
    }

    /// Updates that used the observed loss (skipped samples excluded).
    pub fn informative_updates(&self) -> u64 {
        self.informative_updates
    }
}

impl Policy for InfClip {
    fn name(&self) -> &'static str {
        match self.rule {
            UpdateRule::Clip => "inf-clip",
            UpdateRule::Skip => "skip-inf",
        }
    }

    fn n_arms(&self) -> usize {
        self.x.len()
    }

    fn select(&mut self, _t: u64) -> usize {
        let u: f64 = self.rng.random();
        let probs = self.x.probs();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // u landed in the rounding gap above the final partial sum.
        probs.len() - 1
    }

    fn update(&mut self, arm: usize, loss: f64) -> Result<()> {
        let g = if self.rule == UpdateRule::Skip && loss > self.lambda.value() {
            GradientEstimate::zeros(self.x.len())
        } else {
            self.informative_updates += 1;
            iw_clipped_estimate(loss, arm, &self.x, self.lambda)?
        };
        let (next, _) = omd_step(&self.x, &g, &self.cfg)?;
        self.x = next;
        Ok(())
    }

    fn prob_of(&self, arm: usize) -> f64 {
        self.x.probs()[arm]
    }
}

#[derive(Debug, Clone, Default)]
struct ArmStats {
    pulls: u64,
    kept_sum: f64,
    // min-heap on the drop threshold κ_j = u·j/|X_j|^{1+α}; a sample is
    // kept while 2 ln t <= κ_j, so once dropped it never returns.
    pending: BinaryHeap<Reverse<(u64, usize)>>,
    values: Vec<f64>,
}

impl ArmStats {
    fn purge(&mut self, level: f64) {
        while let Some(Reverse((bits, idx))) = self.pending.peek().copied() {
            if f64::from_bits(bits) >= level {
                break;
            }
            self.pending.pop();
            self.kept_sum -= self.values[idx];
        }
    }
}

/// Truncated-mean robust UCB, in lower-confidence form for losses.
#[derive(Debug, Clone)]
pub struct RobustUcb {
    alpha: f64,
    scale: f64,
    c: f64,
    arms: Vec<ArmStats>,
    t: u64,
    next: usize,
}

impl RobustUcb {
    pub const DEFAULT_C: f64 = 4.0;

    /// `scale` is `M` with `E|X|^{1+α} <= M^{1+α}`.
    pub fn new(n: usize, alpha: f64, scale: f64) -> Result<Self> {
        Self::with_c(n, alpha, scale, Self::DEFAULT_C)
    }

    pub fn with_c(n: usize, alpha: f64, scale: f64, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1]")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("scale", format!("{scale} must be > 0")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid("c", format!("{c} must be >= 0")));
        }
        Ok(Self {
            alpha,
            scale,
            c,
            arms: vec![ArmStats::default(); n],
            t: 0,
            next: 0,
        })
    }

    pub fn pulls(&self) -> Vec<u64> {
        self.arms.iter().map(|a| a.pulls).collect()
    }

    fn level(t: u64) -> f64 {
        2.0 * (t.max(1) as f64).ln()
    }

    /// Confidence width `c·M·(log t² / s)^{α/(1+α)}`.
    pub fn width(&self, pulls: u64, t: u64) -> f64 {
        self.c
            * self.scale
            * (Self::level(t) / pulls as f64).powf(self.alpha / (1.0 + self.alpha))
    }

    /// Lower-confidence index of `arm` at round `t`, from the currently
    /// retained samples.
    pub fn index(&self, arm: usize, t: u64) -> f64 {
        let a = &self.arms[arm];
        a.kept_sum / a.pulls as f64 - self.width(a.pulls, t)
    }

    fn choose(&mut self, t: u64) -> usize {
        let n = self.arms.len();
        if let Some(i) = self.arms.iter().position(|a| a.pulls == 0) {
            return i;
        }
        let level = Self::level(t);
        for a in &mut self.arms {
            a.purge(level);
        }
        let mut best = 0;
        let mut best_val = self.index(0, t);
        for i in 1..n {
            let v = self.index(i, t);
            if v < best_val {
                best = i;
                best_val = v;
            }
        }
        best
    }
}

impl Policy for RobustUcb {
    fn name(&self) -> &'static str {
        "robust-ucb"
    }

    fn n_arms(&self) -> usize {
        self.arms.len()
    }

    fn select(&mut self, t: u64) -> usize {
        self.t = t;
        self.next = self.choose(t);
        self.next
    }

    fn update(&mut self, arm: usize, loss: f64) -> Result<()> {
        if arm >= self.arms.len() {
            return Err(Error::invalid("arm", format!("{arm} out of range")));
        }
        let u = self.scale.powf(1.0 + self.alpha);
        let a = &mut self.arms[arm];
        a.pulls += 1;
        let j = a.pulls as f64;
        let kappa = if loss == 0.0 {
            f64::INFINITY
        } else {
            u * j / loss.abs().powf(1.0 + self.alpha)
        };
        let idx = a.values.len();
        a.values.push(loss);
        a.kept_sum += loss;
        a.pending.push(Reverse((kappa.to_bits(), idx)));
        // Truncation is monotone in t, so purging for the next round now is
        // what select would do anyway.
        let t = self.t + 1;
        self.next = self.choose(t);
        Ok(())
    }

    fn prob_of(&self, arm: usize) -> f64 {
        if arm == self.next {
            1.0
        } else {
            0.0
        }
    }
}

/// Per-step record of one run.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyTrace {
    pub arms: Vec<usize>,
    pub losses: Vec<f64>,
    /// Mass on the known-optimal arm after each update.
    pub prob_optimal: Vec<f64>,
    pub cum_loss: Vec<f64>,
    /// Cumulative pseudo-regret against the competitor.
    pub cum_regret: Vec<f64>,
    pub competitor: usize,
    pub optimal_arm: usize,
}

impl PolicyTrace {
    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    /// Terminal pseudo-regret `Σ E-loss(A_t) − T·E-loss(u)`.
    pub fn pseudo_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }

    pub fn average_pseudo_regret(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.pseudo_regret() / self.len() as f64
        }
    }
}

pub fn run_policy<P: Policy + ?Sized>(
    policy: &mut P,
    env: &ArmEnvironment,
    horizon: usize,
    competitor: usize,
    rng: &mut SeededRng,
) -> Result<PolicyTrace> {
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be >= 1"));
    }
    if competitor >= env.n_arms() {
        return Err(Error::invalid("competitor", format!("{competitor} out of range")));
    }
    if policy.n_arms() != env.n_arms() {
        return Err(Error::invalid("policy", "arm count does not match the environment"));
    }
    let means = env.known_means();
    let optimal_arm = env.best_arm();
    let mut trace = PolicyTrace {
        arms: Vec::with_capacity(horizon),
        losses: Vec::with_capacity(horizon),
        prob_optimal: Vec::with_capacity(horizon),
        cum_loss: Vec::with_capacity(horizon),
        cum_regret: Vec::with_capacity(horizon),
        competitor,
        optimal_arm,
    };
    let mut cum_loss = 0.0;
    let mut cum_regret = 0.0;
    for t in 1..=horizon as u64 {
        let arm = policy.select(t);
        let loss = env.pull(arm, rng);
        policy.update(arm, loss)?;
        cum_loss += loss;
        cum_regret += means[arm] - means[competitor];
        trace.arms.push(arm);
        trace.losses.push(loss);
        trace.prob_optimal.push(policy.prob_of(optimal_arm));
        trace.cum_loss.push(cum_loss);
        trace.cum_regret.push(cum_regret);
    }
    Ok(trace)
}
