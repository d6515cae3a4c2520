//! Clipping operators and the clipped importance-weighted estimator.
//!
//! Two different clips live here. [`clip_scalar`] is the one-sided cap
//! `min{g, λ}` applied to a single observed loss; [`clip_vector`] rescales a
//! whole vector so its q-norm is at most `λ`. They disagree on negative
//! inputs, so they are kept apart.

use rand::Rng;
use serde::Serialize;

use crate::dist::HeavyTailSpec;
use crate::error::{Error, Result};
use crate::tsallis::SimplexPoint;

/// Probabilities below this are treated as degenerate by the estimator.
pub const PROB_FLOOR: f64 = 1e-15;

/// A strictly positive, finite clipping level `λ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct ClipLevel(f64);

impl ClipLevel {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self(lambda))
        } else {
            Err(Error::invalid("lambda", format!("{lambda} must be finite and > 0")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Norm index `q` in `[2, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NormIndex {
    Finite(f64),
    Infinity,
}

impl NormIndex {
    pub fn finite(q: f64) -> Result<Self> {
        if q.is_infinite() && q > 0.0 {
            return Ok(NormIndex::Infinity);
        }
        if q >= 2.0 && q.is_finite() {
            Ok(NormIndex::Finite(q))
        } else {
            Err(Error::invalid("q", format!("{q} is not in [2, inf]")))
        }
    }

    /// `1/q`, zero for the max-norm.
    pub fn reciprocal(self) -> f64 {
        match self {
            NormIndex::Finite(q) => 1.0 / q,
            NormIndex::Infinity => 0.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, NormIndex::Infinity)
    }
}

impl std::str::FromStr for NormIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(NormIndex::Infinity),
            other => {
                let q: f64 = other
                    .parse()
                    .map_err(|_| Error::invalid("q", format!("cannot parse `{other}`")))?;
                NormIndex::finite(q)
            }
        }
    }
}

impl std::fmt::Display for NormIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormIndex::Finite(q) => write!(f, "{q}"),
            NormIndex::Infinity => write!(f, "inf"),
        }
    }
}

pub fn norm(v: &[f64], q: NormIndex) -> f64 {
    match q {
        NormIndex::Infinity => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
        NormIndex::Finite(p) if p == 2.0 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormIndex::Finite(p) => {
            // scale by the max entry to avoid overflow of |x|^p
            let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if m == 0.0 {
                return 0.0;
            }
            m * v.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// One-sided cap `min{g, λ}`.
pub fn clip_scalar(g: f64, lam: ClipLevel) -> f64 {
    g.min(lam.0)
}

/// `g / ||g||_q · min(||g||_q, λ)`; the zero vector maps to itself.
pub fn clip_vector(g: &[f64], lam: ClipLevel, q: NormIndex) -> Vec<f64> {
    let n = norm(g, q);
    if n <= lam.0 || n == 0.0 {
        return g.to_vec();
    }
    let t = lam.0 / n;
    g.iter().map(|x| x * t).collect()
}

/// A loss-gradient estimate. Linear-case estimates are supported on a
/// single arm; dense nonlinear estimates carry `source_arm = None`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub values: Vec<f64>,
    pub source_arm: Option<usize>,
}

impl GradientEstimate {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            source_arm: None,
        }
    }

    pub fn dense(values: Vec<f64>) -> Self {
        Self {
            values,
            source_arm: None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// `ĝ[arm] = min{loss, λ} / x[arm]`, zero elsewhere.
pub fn iw_clipped_estimate(
    loss: f64,
    arm: usize,
    x: &SimplexPoint,
    lam: ClipLevel,
) -> Result<GradientEstimate> {
    let probs = x.probs();
    if arm >= probs.len() {
        return Err(Error::invalid("arm", format!("{arm} out of range")));
    }
    let p = probs[arm];
    if p < PROB_FLOOR {
        return Err(Error::DegenerateProbability { arm, prob: p });
    }
    let mut values = vec![0.0; probs.len()];
    values[arm] = clip_scalar(loss, lam) / p;
    Ok(GradientEstimate {
        values,
        source_arm: Some(arm),
    })
}

/// Outcome of the Monte-Carlo clipping-lemma checks.
#[derive(Debug, Clone, Serialize)]
pub struct ClipLemmaReport {
    pub n_samples: usize,
    pub lambda: f64,
    pub sigma_pow: f64,
    /// max over samples of `||x̄ − Ê[x̄]||_q`
    pub max_deviation: f64,
    pub deviation_bound: f64,
    pub deviation_ok: bool,
    /// `Ê[||x̄||_q^2]`
    pub second_moment: f64,
    pub second_moment_bound: f64,
    pub second_moment_ok: bool,
    /// `||Ê[x] − Ê[x̄]||_q`
    pub bias: f64,
    pub bias_bound: f64,
    /// CLT allowance added to the bias bound
    pub bias_allowance: f64,
    pub bias_ok: bool,
}

impl ClipLemmaReport {
    pub fn passed(&self) -> bool {
        self.deviation_ok && self.second_moment_ok && self.bias_ok
    }
}

/// Slack applied to the expectation bounds.
pub const LEMMA_SLACK: f64 = 1.1;

/// Checks the clipping lemma on vectors drawn by `draw`:
///
/// (a) `||x̄ − Ê[x̄]||_q <= 2λ` for every sample,
/// (b) `Ê||x̄||_q^2 <= σ^{α+1} λ^{1−α}` with slack,
/// (c) `||Ê[x] − Ê[x̄]||_q <= σ^{α+1} / λ^α` with slack plus a CLT allowance.
///
/// `sigma_pow` is `σ_q^{α+1}`, an upper bound on `E||x||_q^{α+1}`. The
/// clipping operator is a parameter so the suite can be run against a
/// deliberately broken clip.
pub fn verify_clip_lemma_with<D, C>(
    mut draw: D,
    clip: C,
    lam: ClipLevel,
    q: NormIndex,
    alpha: f64,
    sigma_pow: f64,
    n_samples: usize,
) -> ClipLemmaReport
where
    D: FnMut() -> Vec<f64>,
    C: Fn(&[f64], ClipLevel, NormIndex) -> Vec<f64>,
{
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(n_samples);
    let mut clipped: Vec<Vec<f64>> = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let x = draw();
        clipped.push(clip(&x, lam, q));
        raw.push(x);
    }
    let dim = raw.first().map_or(0, Vec::len);
    let nf = n_samples as f64;
    let mut mean_raw = vec![0.0; dim];
    let mut mean_clip = vec![0.0; dim];
    let mut second = 0.0;
    for (x, c) in raw.iter().zip(&clipped) {
        for j in 0..dim {
            mean_raw[j] += x[j] / nf;
            mean_clip[j] += c[j] / nf;
        }
        second += norm(c, q).powi(2) / nf;
    }

    let mut max_dev = 0.0_f64;
    let mut diff = vec![0.0; dim];
    for c in &clipped {
        for j in 0..dim {
            diff[j] = c[j] - mean_clip[j];
        }
        max_dev = max_dev.max(norm(&diff, q));
    }

    // per-coordinate standard error of mean(x - x̄)
    let mut se2 = vec![0.0; dim];
    let gap: Vec<f64> = (0..dim).map(|j| mean_raw[j] - mean_clip[j]).collect();
    for (x, c) in raw.iter().zip(&clipped) {
        for j in 0..dim {
            let d = x[j] - c[j] - gap[j];
            se2[j] += d * d;
        }
    }
    let se: Vec<f64> = se2
        .iter()
        .map(|s| (s / (nf * (nf - 1.0).max(1.0))).sqrt())
        .collect();
    let allowance = 3.0 * norm(&se, q);
    let bias = norm(&gap, q);

    let lamv = lam.value();
    let deviation_bound = 2.0 * lamv;
    let second_moment_bound = sigma_pow * lamv.powf(1.0 - alpha);
    let bias_bound = sigma_pow / lamv.powf(alpha);
    ClipLemmaReport {
        n_samples,
        lambda: lamv,
        sigma_pow,
        max_deviation: max_dev,
        deviation_bound,
        deviation_ok: max_dev <= deviation_bound + 1e-12,
        second_moment: second,
        second_moment_bound,
        second_moment_ok: second <= LEMMA_SLACK * second_moment_bound,
        bias,
        bias_bound,
        bias_allowance: allowance,
        bias_ok: bias <= LEMMA_SLACK * bias_bound + allowance,
    }
}

/// Clipping-lemma check on scalar draws from `spec`, using its certified
/// `M^{1+α}` as `σ^{α+1}` unless `sigma_pow` is given.
pub fn verify_clip_lemma<R: Rng + ?Sized>(
    spec: &HeavyTailSpec,
    lam: ClipLevel,
    n_samples: usize,
    sigma_pow: Option<f64>,
    rng: &mut R,
) -> ClipLemmaReport {
    let alpha = spec.alpha();
    let sigma_pow = sigma_pow.unwrap_or_else(|| spec.moment_scale().powf(1.0 + alpha));
    verify_clip_lemma_with(
        || vec![spec.sample(rng)],
        clip_vector,
        lam,
        NormIndex::Finite(2.0),
        alpha,
        sigma_pow,
        n_samples,
    )
}
