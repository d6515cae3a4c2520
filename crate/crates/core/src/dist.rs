//! Heavy-tailed loss laws with certified moment parameters.
//!
//! Every [`HeavyTailSpec`] carries an exponent `alpha` and a scale `M` such
//! that `E|X|^(1+alpha) <= M^(1+alpha)`. The log-Pareto law
//! `pdf(x) = C / (x^(2+alpha) ln^2 x)` on `[2, inf)` has no closed-form CDF,
//! so it is sampled through a quadrature-built inverse-CDF table.
//!
//! All integrals are taken in log space (`u = ln x`), where the density
//! becomes `C e^{-(1+alpha) u} / u^2` on `[ln 2, inf)`.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre5, integrate};

/// Number of inverse-CDF knots, uniformly spaced in probability.
pub const TABLE_KNOTS: usize = 4096;

/// Truncation threshold for the analytic tail bound.
const TAIL_CUTOFF: f64 = 1e-14;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} is not in (0, 1]")));
    }
    Ok(())
}

/// `∫_a^∞ e^{-k u} / u^2 du` by adaptive quadrature up to a cutoff where
/// the bound `e^{-kU}/(k U^2)` drops below `rel_cutoff * estimate`, with
/// the bound added back.
fn exp_over_u2_tail(k: f64, a: f64, tol: f64) -> Result<f64> {
    let f = |u: f64| (-k * u).exp() / (u * u);
    let bound = |u: f64| (-k * u).exp() / (k * u * u);
    let mut lo = a;
    let mut width = 1.0_f64.max(1.0 / k);
    let mut total = 0.0;
    loop {
        let hi = lo + width;
        total += integrate(f, lo, hi, tol)?;
        if bound(hi) < TAIL_CUTOFF * total {
            return Ok(total + bound(hi));
        }
        lo = hi;
        width *= 2.0;
        if lo > 1e6 {
            return Err(Error::NonConvergence(format!(
                "tail of e^(-{k}u)/u^2 did not fall below cutoff"
            )));
        }
    }
}

/// Normalizing constant `C` and mean `E[ξ]` of the log-Pareto law.
pub fn log_pareto_normalizer(alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let ln2 = std::f64::consts::LN_2;
    let z = exp_over_u2_tail(1.0 + alpha, ln2, 1e-16)?;
    let c = 1.0 / z;
    let mean = c * exp_over_u2_tail(alpha, ln2, 1e-15)?;
    if !(c.is_finite() && mean.is_finite() && mean > 2.0) {
        return Err(Error::NonConvergence(format!(
            "normalizer produced C = {c}, mean = {mean}"
        )));
    }
    Ok((c, mean))
}

/// The standard (unit-scale) log-Pareto law with its sampling table.
#[derive(Debug, Clone)]
pub struct LogParetoLaw {
    alpha: f64,
    c: f64,
    mean: f64,
    /// `E[ξ^(1+alpha)]`, computed by quadrature with analytic tail.
    moment: f64,
    /// `u` coordinates of the knots `F(u_k) = k / TABLE_KNOTS`.
    knots: Vec<f64>,
}

impl LogParetoLaw {
    pub fn new(alpha: f64) -> Result<Self> {
        let (c, mean) = log_pareto_normalizer(alpha)?;
        let ln2 = std::f64::consts::LN_2;
        // ∫ x^{1+α} pdf dx = ∫_{ln 2}^∞ C / u^2 du; the tail past U is C / U.
        let cut = 1e6;
        let head = integrate(|u: f64| 1.0 / (u * u), ln2, 64.0, 1e-15)?
            + integrate(|u: f64| 1.0 / (u * u), 64.0, cut, 1e-15)?;
        let moment = c * (head + 1.0 / cut);

        let mut law = Self {
            alpha,
            c,
            mean,
            moment,
            knots: Vec::new(),
        };
        law.knots = law.build_knots()?;
        Ok(law)
    }

    fn k(&self) -> f64 {
        1.0 + self.alpha
    }

    /// Density in log space.
    fn density_u(&self, u: f64) -> f64 {
        self.c * (-self.k() * u).exp() / (u * u)
    }

    /// `P(ln ξ > u)` computed directly (no cancellation near 1).
    fn survival_u(&self, u: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        let u = u.max(ln2);
        self.c * exp_over_u2_tail(self.k(), u, 1e-18).unwrap_or(0.0)
    }

    fn build_knots(&self) -> Result<Vec<f64>> {
        let ln2 = std::f64::consts::LN_2;
        let h = 2e-3;
        let stop_mass = 0.25 / TABLE_KNOTS as f64;
        // Dense grid with cumulative mass.
        let mut grid = vec![ln2];
        let mut cdf = vec![0.0];
        loop {
            let u0 = *grid.last().unwrap();
            let u1 = u0 + h;
            let m = gauss_legendre5(|u| self.density_u(u), u0, u1);
            grid.push(u1);
            cdf.push(cdf.last().unwrap() + m);
            if 1.0 - cdf.last().unwrap() < stop_mass {
                break;
            }
            if grid.len() > 50_000_000 {
                return Err(Error::NonConvergence("inverse-CDF grid overflow".into()));
            }
        }
        let mut knots = Vec::with_capacity(TABLE_KNOTS);
        knots.push(ln2);
        for k in 1..TABLE_KNOTS {
            let p = k as f64 / TABLE_KNOTS as f64;
            // bisection over the monotone grid
            let j = cdf.partition_point(|&v| v <= p).max(1) - 1;
            let (u0, p0) = (grid[j], cdf[j]);
            let u1 = grid[(j + 1).min(grid.len() - 1)];
            let mut u = u0 + (p - p0) / self.density_u(u0).max(1e-300);
            u = u.clamp(u0, u1);
            for _ in 0..4 {
                let fu = p0 + gauss_legendre5(|s| self.density_u(s), u0, u);
                u = (u - (fu - p) / self.density_u(u)).clamp(u0, u1);
            }
            knots.push(u);
        }
        Ok(knots)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn normalizer(&self) -> f64 {
        self.c
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `E[ξ^(1+alpha)]`.
    pub fn certified_moment(&self) -> f64 {
        self.moment
    }

    /// `(E[ξ^(1+alpha)])^(1/(1+alpha))`.
    pub fn moment_scale(&self) -> f64 {
        self.moment.powf(1.0 / self.k())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 2.0 {
            return 0.0;
        }
        let l = x.ln();
        self.c / (x.powf(2.0 + self.alpha) * l * l)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 2.0 {
            return 0.0;
        }
        1.0 - self.survival_u(x.ln())
    }

    /// Inverse CDF at `p` in (0, 1).
    pub fn quantile(&self, p: f64) -> f64 {
        self.quantile_u(p).exp()
    }

    fn quantile_u(&self, p: f64) -> f64 {
        let scaled = p * TABLE_KNOTS as f64;
        let k = scaled.floor() as usize;
        if k + 1 >= TABLE_KNOTS {
            return self.tail_quantile_u(p);
        }
        let (u0, u1) = (self.knots[k], self.knots[k + 1]);
        let p0 = k as f64 / TABLE_KNOTS as f64;
        let mut u = u0 + (scaled - k as f64) * (u1 - u0);
        // one Newton step on F(u) - p, safeguarded to the bracket
        let fu = p0 + gauss_legendre5(|s| self.density_u(s), u0, u);
        let next = u - (fu - p) / self.density_u(u);
        if next.is_finite() && next >= u0 && next <= u1 {
            u = next;
        }
        u
    }

    fn tail_quantile_u(&self, p: f64) -> f64 {
        let target = 1.0 - p;
        let k = self.k();
        let mut lo = self.knots[TABLE_KNOTS - 1];
        // asymptotic start: c e^{-ku}/(k u^2) = target
        let mut u = lo.max(1.0);
        for _ in 0..50 {
            let next = (-(target * k / self.c).ln() - 2.0 * u.ln()) / k;
            if (next - u).abs() < 1e-12 {
                break;
            }
            u = next.max(lo);
        }
        let mut hi = u.max(lo) * 2.0 + 1.0;
        while self.survival_u(hi) > target {
            lo = hi;
            hi *= 2.0;
        }
        // Newton on ln S(u) - ln target, bracketed
        for _ in 0..60 {
            let s = self.survival_u(u);
            if (s - target).abs() <= 1e-13 * target {
                break;
            }
            if s > target {
                lo = u;
            } else {
                hi = u;
            }
            let step = (s.ln() - target.ln()) * s / self.density_u(u);
            let next = u + step;
            u = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        u
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p: f64 = loop {
            let v = rng.random::<f64>();
            if v > 0.0 {
                break v;
            }
        };
        self.quantile(p)
    }
}

/// The distribution family of an arm or a noise factor.
#[derive(Debug, Clone)]
pub enum TailKind {
    /// Pareto with shape `shape` on `[scale, inf)`.
    ParetoScaled { shape: f64, scale: f64 },
    /// `β · ξ` with ξ log-Pareto.
    LogPareto { law: Arc<LogParetoLaw>, scale: f64 },
    PointMass { value: f64 },
}

/// A loss law with certified `(alpha, M)`: `E|X|^(1+alpha) <= M^(1+alpha)`.
#[derive(Debug, Clone)]
pub struct HeavyTailSpec {
    kind: TailKind,
    alpha: f64,
    moment_scale: f64,
}

impl HeavyTailSpec {
    pub fn point_mass(value: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !value.is_finite() {
            return Err(Error::invalid("value", "point mass must be finite"));
        }
        Ok(Self {
            kind: TailKind::PointMass { value },
            alpha,
            moment_scale: value.abs(),
        })
    }

    /// Pareto(shape, scale); needs `shape > 1 + alpha` for a finite moment.
    pub fn pareto(shape: f64, scale: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("scale", format!("{scale} must be positive")));
        }
        if !(shape > 1.0 + alpha) {
            return Err(Error::invalid(
                "shape",
                format!("{shape} must exceed 1 + alpha = {}", 1.0 + alpha),
            ));
        }
        let moment = shape * scale.powf(1.0 + alpha) / (shape - 1.0 - alpha);
        Ok(Self {
            kind: TailKind::ParetoScaled { shape, scale },
            alpha,
            moment_scale: moment.powf(1.0 / (1.0 + alpha)),
        })
    }

    pub fn log_pareto(alpha: f64, scale: f64) -> Result<Self> {
        let law = Arc::new(LogParetoLaw::new(alpha)?);
        Self::log_pareto_with_law(law, scale)
    }

    /// Reuses an already built law (tables are shared across arms).
    pub fn log_pareto_with_law(law: Arc<LogParetoLaw>, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("scale", format!("{scale} must be positive")));
        }
        let alpha = law.alpha();
        let moment_scale = scale * law.moment_scale();
        Ok(Self {
            kind: TailKind::LogPareto { law, scale },
            alpha,
            moment_scale,
        })
    }

    pub fn kind(&self) -> &TailKind {
        &self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The certified `M`.
    pub fn moment_scale(&self) -> f64 {
        self.moment_scale
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            TailKind::ParetoScaled { shape, scale } => shape * scale / (shape - 1.0),
            TailKind::LogPareto { law, scale } => scale * law.mean(),
            TailKind::PointMass { value } => *value,
        }
    }

    /// Lower end of the support.
    pub fn support_min(&self) -> f64 {
        match &self.kind {
            TailKind::ParetoScaled { scale, .. } => *scale,
            TailKind::LogPareto { scale, .. } => 2.0 * scale,
            TailKind::PointMass { value } => *value,
        }
    }

    /// Same law multiplied by `factor > 0`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("factor", format!("{factor} must be positive")));
        }
        let kind = match &self.kind {
            TailKind::ParetoScaled { shape, scale } => TailKind::ParetoScaled {
                shape: *shape,
                scale: scale * factor,
            },
            TailKind::LogPareto { law, scale } => TailKind::LogPareto {
                law: Arc::clone(law),
                scale: scale * factor,
            },
            TailKind::PointMass { value } => TailKind::PointMass {
                value: value * factor,
            },
        };
        Ok(Self {
            kind,
            alpha: self.alpha,
            moment_scale: self.moment_scale * factor,
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            TailKind::ParetoScaled { shape, scale } => {
                if x < *scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(*shape)
                }
            }
            TailKind::LogPareto { law, scale } => law.cdf(x / scale),
            TailKind::PointMass { value } => {
                if x < *value {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            TailKind::ParetoScaled { shape, scale } => {
                let u: f64 = loop {
                    let v = rng.random::<f64>();
                    if v > 0.0 {
                        break v;
                    }
                };
                scale * u.powf(-1.0 / shape)
            }
            TailKind::LogPareto { law, scale } => scale * law.sample(rng),
            TailKind::PointMass { value } => *value,
        }
    }
}

/// The two-arm study: losses `ξ·β_i` with `β_0 = 3/E[ξ]`, `β_1 = 3.1/E[ξ]`.
pub fn experiment_arms(alpha: f64) -> Result<(HeavyTailSpec, HeavyTailSpec)> {
    let law = Arc::new(LogParetoLaw::new(alpha)?);
    let mean = law.mean();
    Ok((
        HeavyTailSpec::log_pareto_with_law(Arc::clone(&law), 3.0 / mean)?,
        HeavyTailSpec::log_pareto_with_law(law, 3.1 / mean)?,
    ))
}

/// Log-Pareto arms with the given mean losses, sharing one table.
pub fn log_pareto_arms(alpha: f64, means: &[f64]) -> Result<Vec<HeavyTailSpec>> {
    let law = Arc::new(LogParetoLaw::new(alpha)?);
    means
        .iter()
        .map(|&m| HeavyTailSpec::log_pareto_with_law(Arc::clone(&law), m / law.mean()))
        .collect()
}
