//! Gradient-free clipped mirror descent for convex losses observed through
//! noisy one-point feedback, and the parameter planners.
//!
//! Each step queries the loss at `z_t = x_t + τe_t` with `e_t` uniform on
//! the unit sphere, forms `g = (n/τ)·φ(z_t)·e_t`, clips it in the `q`-norm
//! and takes a mirror step followed by a Bregman projection onto `S`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::clip::{clip_vector, norm, ClipLevel, NormIndex};
use crate::envs::{Domain, FunctionEnvironment, Regularity};
use crate::error::{Error, Result};

/// Point on the unit Euclidean sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSample {
    e: Vec<f64>,
}

impl SphereSample {
    pub fn as_slice(&self) -> &[f64] {
        &self.e
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.e
    }

    pub fn dim(&self) -> usize {
        self.e.len()
    }
}

/// Uniform draw from the unit sphere in `R^n` (normalized Gaussian).
pub fn sample_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SphereSample> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    loop {
        let mut e: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.0 && r.is_finite() {
            for v in &mut e {
                *v /= r;
            }
            return Ok(SphereSample { e });
        }
    }
}

/// `(n/τ)·loss·e`.
pub fn one_point_gradient(loss: f64, e: &SphereSample, tau: f64) -> Vec<f64> {
    let s = e.dim() as f64 / tau * loss;
    e.e.iter().map(|v| s * v).collect()
}

/// `a_q = n^{1/q − 1/2}·min{√(32 ln n − 8), √(2q − 1)}`; the `q = ∞` limit
/// drops the second branch.
pub fn a_q_constant(n: usize, q: NormIndex) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let nf = n as f64;
    let log_branch = (32.0 * nf.ln() - 8.0).sqrt();
    Ok(match q {
        NormIndex::Infinity => log_branch / nf.sqrt(),
        NormIndex::Finite(q) => {
            if q < 2.0 {
                return Err(Error::invalid("q", format!("{q} must be >= 2")));
            }
            nf.powf(1.0 / q - 0.5) * log_branch.min((2.0 * q - 1.0).sqrt())
        }
    })
}

fn check_alpha_open(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || alpha.is_nan() {
        return Err(Error::invalid("alpha", format!("{alpha} must be > 0")));
    }
    if alpha >= 1.0 {
        return Err(Error::DegenerateAlpha(alpha));
    }
    Ok(())
}

/// Clip level, step size and average-regret bound for INF-clip.
pub fn theorem1_planner(horizon: f64, alpha: f64, n: usize, m: f64) -> Result<(f64, f64, f64)> {
    check_alpha_open(alpha)?;
    if !(horizon >= 1.0) || n == 0 || !(m > 0.0 && m.is_finite()) {
        return Err(Error::invalid("planner", "need T >= 1, n >= 1 and M > 0"));
    }
    let a1 = 1.0 + alpha;
    let nf = n as f64;
    let ratio = alpha / (1.0 - alpha);
    let lambda = horizon.powf(1.0 / a1) * (2.0 * ratio).powf(2.0 / a1) / (8.0 * nf).powf(1.0 / a1) * m;
    let mu = theorem1_mu(horizon, alpha, lambda, m);
    let bound = horizon.powf(-alpha / a1)
        * m
        * nf.powf(alpha / a1)
        * 2f64.powf(2.0 - alpha * alpha / a1)
        * ratio.powf(2.0 / a1);
    Ok((lambda, mu, bound))
}

/// Bandit step size `√2/√(Tλ^{1−α}M^{1+α})` at a given clip level.
pub fn theorem1_mu(horizon: f64, alpha: f64, lambda: f64, m: f64) -> f64 {
    2f64.sqrt() / (horizon * lambda.powf(1.0 - alpha) * m.powf(1.0 + alpha)).sqrt()
}

/// Inputs to the gradient-free planner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoProblem {
    pub n: usize,
    pub q: NormIndex,
    pub alpha: f64,
    /// `B` with `E|l(x, ξ)|^{1+α} <= B^{1+α}` on `S_τ`.
    pub moment_bound: f64,
    /// Adversarial bound `Δ`.
    pub delta: f64,
    pub tau: f64,
    pub horizon: f64,
}

/// Target accuracy for the iteration-count formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Accuracy {
    Lipschitz { eps: f64, m: f64 },
    Smooth { eps: f64, l: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannerOutput {
    pub a_q: f64,
    pub sigma_q: f64,
    pub mu_star: f64,
    pub lambda_star: f64,
    /// `τ_M` or `τ_L` when an accuracy target was given.
    pub tau_star: Option<f64>,
    /// `T_M` or `T_L` when an accuracy target was given.
    pub iterations: Option<f64>,
    pub r1: f64,
    pub d_psi: f64,
}

/// `σ_q^{α+1} = 2^α(n a_q B/τ)^{α+1} + 2^α(n a_q Δ/τ)^{α+1}`.
pub fn sigma_q_pow(p: &ZoProblem, a_q: f64) -> f64 {
    let a1 = p.alpha + 1.0;
    let k = p.n as f64 * a_q / p.tau;
    2f64.powf(p.alpha) * ((k * p.moment_bound).powf(a1) + (k * p.delta).powf(a1))
}

pub fn plan_parameters(
    p: &ZoProblem,
    r1: f64,
    d_psi: f64,
    target: Option<Accuracy>,
) -> Result<PlannerOutput> {
    check_alpha_open(p.alpha)?;
    if !(r1 > 0.0 && d_psi > 0.0 && r1.is_finite() && d_psi.is_finite()) {
        return Err(Error::invalid("R1/D_psi", "must be positive and finite"));
    }
    if !(p.tau > 0.0) || !(p.horizon >= 1.0) || !(p.moment_bound > 0.0) || p.delta < 0.0 {
        return Err(Error::invalid("problem", "need tau > 0, T >= 1, B > 0, Δ >= 0"));
    }
    let alpha = p.alpha;
    let a1 = alpha + 1.0;
    let a_q = a_q_constant(p.n, p.q)?;
    let sp = sigma_q_pow(p, a_q);
    let mu_star = (r1 * r1 / (4.0 * p.horizon * sp * d_psi.powf(1.0 - alpha))).powf(1.0 / a1);
    let lambda_star = 2.0 * alpha * d_psi / ((1.0 - alpha) * mu_star);
    let core = 4.0
        * r1.powf(2.0 * alpha / a1)
        * d_psi.powf((1.0 - alpha) / a1)
        * p.n as f64
        * a_q
        * p.moment_bound;
    let (tau_star, iterations) = match target {
        None => (None, None),
        Some(Accuracy::Lipschitz { eps, m }) => {
            check_target(eps, m)?;
            (Some(eps / (8.0 * m)), Some((8.0 * m * core / (eps * eps)).powf(a1 / alpha)))
        }
        Some(Accuracy::Smooth { eps, l }) => {
            check_target(eps, l)?;
            (
                Some((eps / (4.0 * l)).sqrt()),
                Some(((4.0 * l).sqrt() * core / eps.powf(1.5)).powf(a1 / alpha)),
            )
        }
    };
    Ok(PlannerOutput {
        a_q,
        sigma_q: sp.powf(1.0 / a1),
        mu_star,
        lambda_star,
        tau_star,
        iterations,
        r1,
        d_psi,
    })
}

fn check_target(eps: f64, c: f64) -> Result<()> {
    if eps > 0.0 && c > 0.0 && eps.is_finite() && c.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("accuracy", "eps and the regularity constant must be > 0"))
    }
}

/// Right-hand side of the average pseudo-regret bound.
pub fn theorem2_bound(p: &ZoProblem, r1: f64, d_psi: f64, reg: Regularity) -> Result<f64> {
    let a_q = a_q_constant(p.n, p.q)?;
    let alpha = p.alpha;
    let a1 = alpha + 1.0;
    let smoothing = match reg {
        Regularity::Lipschitz(m) => 4.0 * m * p.tau,
        Regularity::Smooth(l) => 2.0 * l * p.tau * p.tau,
    };
    let adversarial = p.delta * (p.n as f64).sqrt() / p.tau * d_psi;
    let stochastic = 4.0
        * r1.powf(2.0 * alpha / a1)
        * d_psi.powf((1.0 - alpha) / a1)
        * p.n as f64
        * a_q
        * (p.delta + p.moment_bound)
        / (p.tau * p.horizon.powf(alpha / a1));
    Ok(smoothing + adversarial + stochastic)
}

/// Smoothing radius minimizing the Lipschitz-case bound over `τ` at the
/// problem's horizon: `√((√n Δ D + 4R₁^{2α/(α+1)} D^{(1−α)/(α+1)} n a_q (Δ+B) T^{−α/(α+1)}) / (4M))`.
/// `B` is taken as given, although it may itself depend on `τ`.
pub fn optimal_tau_lipschitz(p: &ZoProblem, r1: f64, d_psi: f64, m: f64) -> Result<f64> {
    let a_q = a_q_constant(p.n, p.q)?;
    let alpha = p.alpha;
    let a1 = alpha + 1.0;
    let nf = p.n as f64;
    let num = nf.sqrt() * p.delta * d_psi
        + 4.0
            * r1.powf(2.0 * alpha / a1)
            * d_psi.powf((1.0 - alpha) / a1)
            * nf
            * a_q
            * (p.delta + p.moment_bound)
            * p.horizon.powf(-alpha / a1);
    Ok((num / (4.0 * m)).sqrt())
}

/// Prox-functions with their domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Prox {
    /// `½||x||²` on the ball of the given radius (p = q = 2).
    Euclidean { radius: f64 },
    /// `(1+γ)Σ(x_i + γ/n) ln(x_i + γ/n)` on the simplex.
    ShiftedNegentropy { gamma: f64 },
}

impl Prox {
    pub const DEFAULT_GAMMA: f64 = 1e-3;

    pub fn domain(&self, n: usize) -> Domain {
        match *self {
            Prox::Euclidean { radius } => Domain::Ball { dim: n, radius },
            Prox::ShiftedNegentropy { .. } => Domain::Simplex { dim: n },
        }
    }

    /// Whether the prox is 1-strongly convex in the primal norm dual to `q`.
    /// The shifted negentropy is 1-strongly convex w.r.t. the 1-norm and
    /// hence also w.r.t. every p-norm with p >= 1.
    pub fn supports(&self, q: NormIndex) -> bool {
        match self {
            Prox::Euclidean { .. } => q == NormIndex::Finite(2.0),
            Prox::ShiftedNegentropy { .. } => match q {
                NormIndex::Infinity => true,
                NormIndex::Finite(q) => q >= 2.0,
            },
        }
    }

    pub fn initial_point(&self, n: usize) -> Vec<f64> {
        match self {
            Prox::Euclidean { .. } => vec![0.0; n],
            Prox::ShiftedNegentropy { .. } => vec![1.0 / n as f64; n],
        }
    }

    fn shift(gamma: f64, n: usize) -> f64 {
        gamma / n as f64
    }

    /// Unconstrained mirror step `∇ψ*(∇ψ(x) − μg)`.
    pub fn mirror_step(&self, x: &[f64], g: &[f64], mu: f64) -> Vec<f64> {
        match *self {
            Prox::Euclidean { .. } => x.iter().zip(g).map(|(a, b)| a - mu * b).collect(),
            Prox::ShiftedNegentropy { gamma } => {
                let s = Self::shift(gamma, x.len());
                x.iter()
                    .zip(g)
                    .map(|(a, b)| (a + s) * (-mu * b / (1.0 + gamma)).exp() - s)
                    .collect()
            }
        }
    }

    /// Bregman projection onto the domain.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Prox::Euclidean { radius } => Ok(Domain::Ball { dim: y.len(), radius }.project(y)),
            Prox::ShiftedNegentropy { gamma } => {
                let n = y.len();
                let s = Self::shift(gamma, n);
                // Solution has the form x_i = max(0, w_i·c − s) with w = y + s.
                let w: Vec<f64> = y.iter().map(|v| v + s).collect();
                if w.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::ProjectionFailure(f64::NAN));
                }
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
                let mut top = 0.0;
                let mut c = 0.0;
                for (k, &i) in order.iter().enumerate() {
                    top += w[i];
                    let ck = (1.0 + (k + 1) as f64 * s) / top;
                    if w[i] * ck - s > 0.0 {
                        c = ck;
                    } else {
                        break;
                    }
                }
                let mut x: Vec<f64> = w.iter().map(|wi| (wi * c - s).max(0.0)).collect();
                let total: f64 = x.iter().sum();
                let err = (total - 1.0).abs();
                if !(err <= 1e-10) {
                    return Err(Error::ProjectionFailure(err));
                }
                for v in &mut x {
                    *v /= total;
                }
                Ok(x)
            }
        }
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        match *self {
            Prox::Euclidean { .. } => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Prox::ShiftedNegentropy { gamma } => {
                let s = Self::shift(gamma, x.len());
                (1.0 + gamma) * x.iter().map(|v| (v + s) * (v + s).ln()).sum::<f64>()
            }
        }
    }

    pub fn bregman(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Prox::Euclidean { .. } => {
                0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            Prox::ShiftedNegentropy { gamma } => {
                let s = Self::shift(gamma, x.len());
                (1.0 + gamma)
                    * x.iter()
                        .zip(y)
                        .map(|(a, b)| (a + s) * ((a + s) / (b + s)).ln() - (a - b))
                        .sum::<f64>()
            }
        }
    }

    /// `sup_{x,y ∈ S} B_ψ(x, y)`.
    pub fn sup_bregman(&self, n: usize) -> f64 {
        match *self {
            Prox::Euclidean { radius } => 2.0 * radius * radius,
            Prox::ShiftedNegentropy { gamma } => (1.0 + gamma) * (1.0 + n as f64 / gamma).ln(),
        }
    }

    /// `D_ψ` with `D^{(α+1)/α} = ((α+1)/α)·sup B_ψ`.
    pub fn diameter(&self, n: usize, alpha: f64) -> f64 {
        ((alpha + 1.0) / alpha * self.sup_bregman(n)).powf(alpha / (alpha + 1.0))
    }

    /// `R_1` from the worst case `sup_{x*} B_ψ(x*, x_1)`; for these
    /// convex-in-x* divergences the sup sits at an extreme point of `S`.
    pub fn r1(&self, n: usize, alpha: f64) -> f64 {
        let sup = match *self {
            Prox::Euclidean { radius } => 0.5 * radius * radius,
            Prox::ShiftedNegentropy { .. } => {
                let mut v = vec![0.0; n];
                v[0] = 1.0;
                self.bregman(&v, &self.initial_point(n))
            }
        };
        ((alpha + 1.0) / alpha * sup).powf(alpha / (alpha + 1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoConfig {
    pub tau: f64,
    pub q: NormIndex,
    pub mu: f64,
    pub lambda: f64,
    pub horizon: usize,
}

impl ZoConfig {
    pub fn from_plan(p: &ZoProblem, plan: &PlannerOutput) -> Self {
        Self {
            tau: p.tau,
            q: p.q,
            mu: plan.mu_star,
            lambda: plan.lambda_star,
            horizon: p.horizon as usize,
        }
    }
}

/// Result of one gradient-free step.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoStep {
    pub next: Vec<f64>,
    pub query_point: Vec<f64>,
    pub feedback: f64,
    /// Clipped estimate actually used.
    pub gradient: Vec<f64>,
}

pub fn zo_step<R, F>(
    x: &[f64],
    cfg: &ZoConfig,
    prox: &Prox,
    mut oracle: F,
    sphere_rng: &mut R,
) -> Result<ZoStep>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x.len();
    let e = sample_sphere(n, sphere_rng)?;
    let z: Vec<f64> = x.iter().zip(e.as_slice()).map(|(a, b)| a + cfg.tau * b).collect();
    let feedback = oracle(&z)?;
    let g = one_point_gradient(feedback, &e, cfg.tau);
    let g = clip_vector(&g, ClipLevel::new(cfg.lambda)?, cfg.q);
    let next = if g.iter().all(|v| *v == 0.0) {
        x.to_vec()
    } else {
        prox.project(&prox.mirror_step(x, &g, cfg.mu))?
    };
    Ok(ZoStep {
        next,
        query_point: z,
        feedback,
        gradient: g,
    })
}

/// Per-step pseudo-regret `l(z_t) − l(u)` from the known expected loss.
#[derive(Debug, Clone, Serialize)]
pub struct ZoTrace {
    pub instant_regret: Vec<f64>,
}

impl ZoTrace {
    pub fn average_regret(&self) -> f64 {
        if self.instant_regret.is_empty() {
            return 0.0;
        }
        self.instant_regret.iter().sum::<f64>() / self.instant_regret.len() as f64
    }
}

pub fn run_zo<R1, R2>(
    cfg: &ZoConfig,
    prox: &Prox,
    env: &FunctionEnvironment,
    competitor: &[f64],
    sphere_rng: &mut R1,
    env_rng: &mut R2,
) -> Result<ZoTrace>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let n = env.dim();
    if competitor.len() != n {
        return Err(Error::invalid("competitor", "dimension mismatch"));
    }
    if prox.domain(n) != *env.domain() {
        return Err(Error::invalid("prox", "prox domain differs from the environment's"));
    }
    if !prox.supports(cfg.q) {
        return Err(Error::invalid("q", "norm index not supported by this prox"));
    }
    let base = env.mean_loss(competitor);
    let mut x = prox.initial_point(n);
    let mut instant_regret = Vec::with_capacity(cfg.horizon);
    for _ in 0..cfg.horizon {
        let step = zo_step(&x, cfg, prox, |z| env.query(z, &mut *env_rng), sphere_rng)?;
        instant_regret.push(env.mean_loss(&step.query_point) - base);
        x = step.next;
    }
    Ok(ZoTrace { instant_regret })
}

/// Monte-Carlo smoothing gap at one probe point.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothingProbe {
    pub gap: f64,
    pub std_error: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Estimates `|E_e f(x + τe) − f(x)|` at each probe and compares it with
/// `τM` (Lipschitz) or `Lτ²/2` (smooth), allowing three standard errors.
/// Draws are antithetic pairs `(e, −e)`, which the sphere law permits.
pub fn smoothing_gap_check<F, R>(
    f: F,
    reg: Regularity,
    tau: f64,
    probes: &[Vec<f64>],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<SmoothingProbe>>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let bound = match reg {
        Regularity::Lipschitz(m) => tau * m,
        Regularity::Smooth(l) => 0.5 * l * tau * tau,
    };
    let mut out = Vec::with_capacity(probes.len());
    let mut z = Vec::new();
    for x in probes {
        let fx = f(x);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n_samples {
            let e = sample_sphere(x.len(), rng)?;
            z.clear();
            z.extend(x.iter().zip(e.as_slice()).map(|(a, b)| a + tau * b));
            let up = f(&z);
            z.clear();
            z.extend(x.iter().zip(e.as_slice()).map(|(a, b)| a - tau * b));
            let d = 0.5 * (up + f(&z)) - fx;
            s += d;
            s2 += d * d;
        }
        let m = s / n_samples as f64;
        let var = (s2 / n_samples as f64 - m * m).max(0.0);
        let std_error = (var / n_samples as f64).sqrt();
        let gap = m.abs();
        out.push(SmoothingProbe {
            gap,
            std_error,
            bound,
            passed: gap <= bound + 3.0 * std_error + 1e-12,
        });
    }
    Ok(out)
}

/// Empirical `E|⟨e, r⟩|` over `draws` sphere samples, with `||r||_2/√n`.
pub fn inner_product_check<R: Rng + ?Sized>(
    r: &[f64],
    draws: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let n = r.len();
    let mut s = 0.0;
    for _ in 0..draws {
        let e = sample_sphere(n, rng)?;
        s += e.as_slice().iter().zip(r).map(|(a, b)| a * b).sum::<f64>().abs();
    }
    let bound = norm(r, NormIndex::Finite(2.0)) / (n as f64).sqrt();
    Ok((s / draws as f64, bound))
}
