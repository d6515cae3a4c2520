//! Simulated environments.
//!
//! [`ArmEnvironment`] serves independent heavy-tailed losses per arm.
//! [`FunctionEnvironment`] serves noisy convex losses `l(x)·ξ + δ(x)` for the
//! gradient-free setting, where `ξ` is a mean-one heavy-tailed factor and
//! `δ` a bounded adversarial perturbation.

use rand::Rng;
use serde::Serialize;

use crate::dist::HeavyTailSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ArmEnvironment {
    arms: Vec<HeavyTailSpec>,
    known_means: Vec<f64>,
}

impl ArmEnvironment {
    pub fn new(arms: Vec<HeavyTailSpec>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::invalid("arms", "environment needs at least one arm"));
        }
        let known_means = arms.iter().map(HeavyTailSpec::mean).collect();
        Ok(Self { arms, known_means })
    }

    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[HeavyTailSpec] {
        &self.arms
    }

    pub fn known_means(&self) -> &[f64] {
        &self.known_means
    }

    /// Arm with the smallest mean loss (lowest index on ties).
    pub fn best_arm(&self) -> usize {
        let mut best = 0;
        for (i, &m) in self.known_means.iter().enumerate() {
            if m < self.known_means[best] {
                best = i;
            }
        }
        best
    }

    /// Largest certified moment scale `M` across arms.
    pub fn moment_scale(&self) -> f64 {
        self.arms
            .iter()
            .map(HeavyTailSpec::moment_scale)
            .fold(0.0, f64::max)
    }

    /// Smallest moment exponent across arms.
    pub fn alpha(&self) -> f64 {
        self.arms
            .iter()
            .map(HeavyTailSpec::alpha)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        self.arms[arm].sample(rng)
    }

    /// The same environment with arm labels permuted: new arm `i` is old
    /// arm `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.arms.len() {
            return Err(Error::invalid("perm", "length mismatch"));
        }
        Self::new(perm.iter().map(|&i| self.arms[i].clone()).collect())
    }
}

/// Feasible set `S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Domain {
    Simplex { dim: usize },
    Ball { dim: usize, radius: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Simplex { dim } | Domain::Ball { dim, .. } => *dim,
        }
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Simplex { .. } => {
                let p = project_simplex_euclidean(x);
                x.iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            }
            Domain::Ball { radius, .. } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                (r - radius).max(0.0)
            }
        }
    }

    /// `sup_{x ∈ S} ||x − c||_2`.
    pub fn farthest_distance(&self, c: &[f64]) -> f64 {
        match self {
            Domain::Simplex { dim } => (0..*dim)
                .map(|i| {
                    (0..*dim)
                        .map(|j| {
                            let v = if i == j { 1.0 } else { 0.0 };
                            (v - c[j]) * (v - c[j])
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max),
            Domain::Ball { radius, .. } => c.iter().map(|v| v * v).sum::<f64>().sqrt() + radius,
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Domain::Simplex { .. } => project_simplex_euclidean(x),
            Domain::Ball { radius, .. } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r <= *radius {
                    x.to_vec()
                } else {
                    x.iter().map(|v| v * radius / r).collect()
                }
            }
        }
    }
}

/// Sort-based Euclidean projection onto the probability simplex.
pub fn project_simplex_euclidean(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        css += uk;
        let t = (css - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Deterministic part `l(x)` of a loss.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LossFamily {
    /// `⟨c, x⟩`
    Linear { c: Vec<f64> },
    /// `(a/2) ||x − center||^2`
    Quadratic { center: Vec<f64>, curvature: f64 },
    /// `||x − center||_2`
    Norm { center: Vec<f64> },
}

impl LossFamily {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            LossFamily::Linear { c } => c.iter().zip(x).map(|(a, b)| a * b).sum(),
            LossFamily::Quadratic { center, curvature } => {
                0.5 * curvature
                    * center
                        .iter()
                        .zip(x)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
            }
            LossFamily::Norm { center } => center
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            LossFamily::Linear { c } => c.len(),
            LossFamily::Quadratic { center, .. } | LossFamily::Norm { center } => center.len(),
        }
    }
}

/// Bounded perturbation `δ(x)` with `|δ| <= Δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Adversary {
    Zero,
    Constant { delta: f64 },
    /// `Δ · sign(sin⟨w, x⟩)`, with `sign(0) = +1`.
    SignOscillating { delta: f64, w: Vec<f64> },
}

impl Adversary {
    pub fn bound(&self) -> f64 {
        match self {
            Adversary::Zero => 0.0,
            Adversary::Constant { delta } | Adversary::SignOscillating { delta, .. } => delta.abs(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Adversary::Zero => 0.0,
            Adversary::Constant { delta } => *delta,
            Adversary::SignOscillating { delta, w } => {
                let s: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
                if s.sin() >= 0.0 {
                    delta.abs()
                } else {
                    -delta.abs()
                }
            }
        }
    }
}

/// Regularity class with its constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Regularity {
    Lipschitz(f64),
    Smooth(f64),
}

#[derive(Debug, Clone)]
pub struct FunctionEnvironment {
    family: LossFamily,
    noise: Option<HeavyTailSpec>,
    adversary: Adversary,
    domain: Domain,
    tau: f64,
}

impl FunctionEnvironment {
    /// `noise`, when given, is rescaled to mean one.
    pub fn new(
        family: LossFamily,
        noise: Option<HeavyTailSpec>,
        adversary: Adversary,
        domain: Domain,
        tau: f64,
    ) -> Result<Self> {
        if family.dim() != domain.dim() {
            return Err(Error::invalid("family", "dimension does not match the domain"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid("tau", format!("{tau} must be > 0")));
        }
        if let Adversary::SignOscillating { w, .. } = &adversary {
            if w.len() != domain.dim() {
                return Err(Error::invalid("w", "dimension does not match the domain"));
            }
        }
        let noise = match noise {
            Some(spec) => {
                let m = spec.mean();
                if !(m > 0.0) {
                    return Err(Error::invalid("noise", "noise factor needs a positive mean"));
                }
                Some(spec.rescaled(1.0 / m)?)
            }
            None => None,
        };
        Ok(Self {
            family,
            noise,
            adversary,
            domain,
            tau,
        })
    }

    pub fn family(&self) -> &LossFamily {
        &self.family
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn adversary(&self) -> &Adversary {
        &self.adversary
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Same environment with another adversary.
    pub fn with_adversary(&self, adversary: Adversary) -> Self {
        Self {
            adversary,
            ..self.clone()
        }
    }

    /// Moment exponent of the noise (1 when noiseless).
    pub fn alpha(&self) -> f64 {
        self.noise.as_ref().map_or(1.0, HeavyTailSpec::alpha)
    }

    fn noise_scale(&self) -> f64 {
        self.noise.as_ref().map_or(1.0, HeavyTailSpec::moment_scale)
    }

    /// Expected loss `l(x) = E_ξ l(x, ξ)`.
    pub fn mean_loss(&self, x: &[f64]) -> f64 {
        self.family.value(x)
    }

    /// `B` with `E|l(x, ξ)|^{1+α} <= B^{1+α}` on the enlarged set `S_τ`.
    pub fn moment_bound(&self) -> f64 {
        let sup = match (&self.family, &self.domain) {
            (LossFamily::Linear { c }, Domain::Simplex { .. }) => {
                let cmax = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                cmax + self.tau * c.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
            (LossFamily::Linear { c }, Domain::Ball { radius, .. }) => {
                c.iter().map(|v| v * v).sum::<f64>().sqrt() * (radius + self.tau)
            }
            (LossFamily::Quadratic { center, curvature }, d) => {
                let r = d.farthest_distance(center) + self.tau;
                0.5 * curvature * r * r
            }
            (LossFamily::Norm { center }, d) => d.farthest_distance(center) + self.tau,
        };
        sup * self.noise_scale()
    }

    pub fn regularity(&self) -> Regularity {
        let s = self.noise_scale();
        match &self.family {
            LossFamily::Linear { c } => {
                Regularity::Lipschitz(c.iter().map(|v| v * v).sum::<f64>().sqrt() * s)
            }
            LossFamily::Norm { .. } => Regularity::Lipschitz(s),
            LossFamily::Quadratic { curvature, .. } => Regularity::Smooth(curvature * s),
        }
    }

    /// A minimizer of `l` over `S`.
    pub fn minimizer(&self) -> Vec<f64> {
        match (&self.family, &self.domain) {
            (LossFamily::Linear { c }, Domain::Simplex { dim }) => {
                let mut best = 0;
                for i in 0..*dim {
                    if c[i] < c[best] {
                        best = i;
                    }
                }
                let mut v = vec![0.0; *dim];
                v[best] = 1.0;
                v
            }
            (LossFamily::Linear { c }, Domain::Ball { radius, .. }) => {
                let nc = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nc == 0.0 {
                    vec![0.0; c.len()]
                } else {
                    c.iter().map(|v| -v * radius / nc).collect()
                }
            }
            (LossFamily::Quadratic { center, .. }, d) | (LossFamily::Norm { center }, d) => {
                d.project(center)
            }
        }
    }

    /// `l(x, ξ) + δ(x)` with a fresh `ξ`.
    pub fn query<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<f64> {
        let distance = self.domain.distance(x);
        if distance > self.tau * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::OutOfDomain {
                distance,
                radius: self.tau,
            });
        }
        let xi = self.noise.as_ref().map_or(1.0, |n| n.sample(rng));
        Ok(self.family.value(x) * xi + self.adversary.value(x))
    }
}
