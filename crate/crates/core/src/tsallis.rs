//! Tsallis-entropy mirror map and the implicitly normalized OMD step.
//!
//! With `ψ_q(x) = (1 − Σ x_i^q) / (1 − q)` the step
//!
//! ```text
//! x_{t+1} = argmin_{x ∈ Δ_n}  μ⟨x, ĝ⟩ + B_ψ(x, x_t)
//! ```
//!
//! has the KKT solution `x_i(ν) = [x_{t,i}^{q−1} + ((1−q)/q)(μĝ_i + ν)]^{1/(q−1)}`
//! where the multiplier `ν` makes the entries sum to one. `Σ x_i(ν)` is
//! strictly decreasing and convex in `ν`, so `ν` is found by bracketing,
//! bisection and a Newton polish.

use serde::Serialize;

use crate::clip::GradientEstimate;
use crate::error::{Error, Result};

/// Minimum entry of a [`SimplexPoint`].
pub const SIMPLEX_FLOOR: f64 = 1e-15;

/// A probability vector with entries `>= SIMPLEX_FLOOR` summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    /// Validates `probs` (finite, non-negative, sum within 1e-9 of one),
    /// then floors and renormalizes.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("probs", "empty probability vector"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("probs", "entries must be finite and >= 0"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("probs", format!("sum is {sum}, not 1")));
        }
        Ok(Self::floored(probs))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "simplex needs at least one arm");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// The vertex `e_i`, floored.
    pub fn vertex(n: usize, i: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        Self::floored(probs)
    }

    fn floored(mut probs: Vec<f64>) -> Self {
        for p in probs.iter_mut() {
            if *p < SIMPLEX_FLOOR {
                *p = SIMPLEX_FLOOR;
            }
        }
        let s: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            // Re-clamp so renormalization cannot push an entry under the floor.
            *p = (*p / s).max(SIMPLEX_FLOOR);
        }
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Checks the floor and sum invariants.
    pub fn is_valid(&self) -> bool {
        let s: f64 = self.probs.iter().sum();
        (s - 1.0).abs() <= 1e-9 && self.probs.iter().all(|&p| p >= SIMPLEX_FLOOR * (1.0 - 1e-9))
    }
}

/// Exponent `q ∈ (0, 1)` and stepsize `μ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TsallisConfig {
    q: f64,
    mu: f64,
}

impl TsallisConfig {
    pub fn new(q: f64, mu: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid("q", format!("{q} is not in (0, 1)")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid("mu", format!("{mu} must be finite and > 0")));
        }
        Ok(Self { q, mu })
    }

    /// `q = 1/2`.
    pub fn half(mu: f64) -> Result<Self> {
        Self::new(0.5, mu)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSolveDiagnostics {
    pub nu: f64,
    pub iterations: usize,
    /// `Σ x_i(ν) − 1` before flooring.
    pub residual: f64,
}

pub fn tsallis_potential(x: &SimplexPoint, q: f64) -> f64 {
    let s: f64 = x.probs.iter().map(|p| p.powf(q)).sum();
    (1.0 - s) / (1.0 - q)
}

/// `B_ψ(x, y) = ψ(x) − ψ(y) − ⟨∇ψ(y), x − y⟩`, `∇ψ(y)_i = −q y_i^{q−1}/(1−q)`.
pub fn bregman(x: &SimplexPoint, y: &SimplexPoint, q: f64) -> f64 {
    let mut acc = 0.0;
    for (&xi, &yi) in x.probs.iter().zip(&y.probs) {
        // per-coordinate form keeps the sum of non-negative terms
        acc += (-xi.powf(q) + yi.powf(q) + q * yi.powf(q - 1.0) * (xi - yi)) / (1.0 - q);
    }
    acc.max(0.0)
}

/// The step objective `μ⟨x, ĝ⟩ − Σ x_i^q/(1−q) + (q/(1−q)) Σ x_{t,i}^{q−1} x_i`.
pub fn step_objective(x: &[f64], x_t: &[f64], g_hat: &[f64], cfg: &TsallisConfig) -> f64 {
    let (q, mu) = (cfg.q, cfg.mu);
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += mu * x[i] * g_hat[i] - x[i].powf(q) / (1.0 - q)
            + q / (1.0 - q) * x_t[i].powf(q - 1.0) * x[i];
    }
    acc
}

struct Kkt<'a> {
    base: Vec<f64>,
    scaled_g: &'a [f64],
    mu: f64,
    coef: f64,
    exponent: f64,
    half: bool,
}

impl Kkt<'_> {
    fn entry(&self, i: usize, nu: f64) -> f64 {
        let s = self.base[i] + self.coef * (self.mu * self.scaled_g[i] + nu);
        if s <= 0.0 {
            return f64::INFINITY;
        }
        if self.half {
            1.0 / (s * s)
        } else {
            s.powf(self.exponent)
        }
    }

    fn sum(&self, nu: f64) -> f64 {
        (0..self.base.len()).map(|i| self.entry(i, nu)).sum()
    }

    /// `d/dν Σ x_i(ν) = −(1/q) Σ s_i^{(2−q)/(q−1)}`.
    fn slope(&self, nu: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.base.len() {
            let s = self.base[i] + self.coef * (self.mu * self.scaled_g[i] + nu);
            acc += self.exponent * self.coef * s.powf(self.exponent - 1.0);
        }
        acc
    }
}

/// One INF step. Returns the next iterate and the solver diagnostics.
pub fn omd_step(
    x_t: &SimplexPoint,
    g_hat: &GradientEstimate,
    cfg: &TsallisConfig,
) -> Result<(SimplexPoint, StepSolveDiagnostics)> {
    let n = x_t.len();
    let g = &g_hat.values;
    if g.len() != n {
        return Err(Error::invalid("g_hat", format!("length {} != {n}", g.len())));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("g_hat", "estimate must be finite"));
    }
    let (gmin, gmax) = g
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    // A constant gradient leaves the argmin at x_t.
    if cfg.mu * (gmax - gmin) == 0.0 {
        return Ok((
            x_t.clone(),
            StepSolveDiagnostics {
                nu: -cfg.mu * gmin,
                iterations: 0,
                residual: 0.0,
            },
        ));
    }

    let q = cfg.q;
    let kkt = Kkt {
        base: x_t.probs.iter().map(|p| p.powf(q - 1.0)).collect(),
        scaled_g: g,
        mu: cfg.mu,
        coef: (1.0 - q) / q,
        exponent: 1.0 / (q - 1.0),
        half: q == 0.5,
    };

    // s_i > 0 requires ν > ν_min.
    let nu_min = (0..n)
        .map(|i| -kkt.base[i] / kkt.coef - cfg.mu * g[i])
        .fold(f64::NEG_INFINITY, f64::max);
    // At ν = −μ max ĝ every entry is >= x_t (sum >= 1); at ν = −μ min ĝ every
    // entry is <= x_t (sum <= 1).
    let mut lo = (-cfg.mu * gmax).max(nu_min);
    let mut hi = -cfg.mu * gmin;
    let mut iterations = 0usize;
    if !(kkt.sum(hi) <= 1.0) {
        // fall back to geometric expansion
        let mut width = hi.abs().max(1.0);
        loop {
            hi += width;
            width *= 2.0;
            iterations += 1;
            if kkt.sum(hi) <= 1.0 {
                break;
            }
            if iterations > 2000 || !hi.is_finite() {
                return Err(Error::RootBracketFailure(format!(
                    "no upper bracket found (hi = {hi})"
                )));
            }
        }
    }
    // The lower end sums to >= 1 exactly; allow for rounding in the sum.
    if !(kkt.sum(lo) >= 1.0 - 1e-12 * n as f64) {
        return Err(Error::RootBracketFailure(format!(
            "sum at lower end {lo} is {} < 1",
            kkt.sum(lo)
        )));
    }

    // bisection to ~1e-13 relative width
    while hi - lo > 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kkt.sum(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 10_000 {
            break;
        }
    }
    let mut nu = 0.5 * (lo + hi);
    if !kkt.sum(nu).is_finite() {
        nu = hi;
    }
    for _ in 0..2 {
        let f = kkt.sum(nu) - 1.0;
        let d = kkt.slope(nu);
        let next = nu - f / d;
        if next.is_finite() && next > nu_min && kkt.sum(next).is_finite() {
            if (kkt.sum(next) - 1.0).abs() <= f.abs() {
                nu = next;
            }
        }
        iterations += 1;
    }
    let probs: Vec<f64> = (0..n).map(|i| kkt.entry(i, nu)).collect();
    let residual = probs.iter().sum::<f64>() - 1.0;
    if !residual.is_finite() {
        return Err(Error::RootBracketFailure(format!("non-finite iterate at ν = {nu}")));
    }
    Ok((
        SimplexPoint::floored(probs),
        StepSolveDiagnostics {
            nu,
            iterations,
            residual,
        },
    ))
}
