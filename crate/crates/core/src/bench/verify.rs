//! Machine-checkable verification suite behind `htbandit verify`.

use rand::Rng;
use serde::Serialize;

use crate::clip::{
    clip_vector, iw_clipped_estimate, verify_clip_lemma_with, ClipLevel, NormIndex,
};
use crate::dist::HeavyTailSpec;
use crate::envs::{Adversary, Domain, FunctionEnvironment, LossFamily, Regularity};
use crate::rng::{streams, SeededRng};
use crate::tsallis::{omd_step, step_objective, SimplexPoint, TsallisConfig};
use crate::clip::GradientEstimate;
use crate::zeroth::{
    a_q_constant, inner_product_check, one_point_gradient, sample_sphere, sigma_q_pow,
    smoothing_gap_check, theorem1_planner, ZoProblem,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyLevel {
    Quick,
    Full,
}

impl VerifyLevel {
    pub fn samples(self) -> usize {
        match self {
            VerifyLevel::Quick => 10_000,
            VerifyLevel::Full => 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub level: VerifyLevel,
    pub entries: Vec<VerifyEntry>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| !e.passed).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.entries.push(VerifyEntry {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

/// Minimizes the INF step objective over the simplex by repeated pairwise
/// mass exchange with a golden-section line search. Slow but independent
/// of the KKT solver.
pub fn brute_force_step(x_t: &[f64], g: &[f64], cfg: &TsallisConfig) -> Vec<f64> {
    let n = x_t.len();
    let mut x = x_t.to_vec();
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _sweep in 0..20_000 {
        let mut moved = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                // move d from j to i, d ∈ [−x_i, x_j]
                let f = |d: f64, x: &mut Vec<f64>| {
                    let (xi, xj) = (x[i], x[j]);
                    x[i] = xi + d;
                    x[j] = xj - d;
                    let v = step_objective(x, x_t, g, cfg);
                    x[i] = xi;
                    x[j] = xj;
                    v
                };
                let (mut a, mut b) = (-x[i], x[j]);
                let mut c = b - phi * (b - a);
                let mut d = a + phi * (b - a);
                let mut fc = f(c, &mut x);
                let mut fd = f(d, &mut x);
                for _ in 0..200 {
                    if b - a <= 1e-17 + 1e-15 * (x[i] + x[j]) {
                        break;
                    }
                    if fc < fd {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - phi * (b - a);
                        fc = f(c, &mut x);
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + phi * (b - a);
                        fd = f(d, &mut x);
                    }
                }
                let step = 0.5 * (a + b);
                if f(step, &mut x) <= f(0.0, &mut x) {
                    x[i] += step;
                    x[j] -= step;
                    moved = moved.max(step.abs());
                }
            }
        }
        if moved < 1e-16 {
            break;
        }
    }
    x
}

/// Random step instance for the oracle comparison.
pub fn random_step_instance<R: Rng + ?Sized>(rng: &mut R) -> (SimplexPoint, GradientEstimate, TsallisConfig) {
    let n = rng.random_range(2..=4);
    let q = [0.3, 0.5, 0.8][rng.random_range(0..3)];
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let x = SimplexPoint::new(raw.iter().map(|v| v / s).collect()).unwrap();
    let mu = rng.random_range(0.01..1.0);
    let g = if rng.random::<f64>() < 0.5 {
        let arm = rng.random_range(0..n);
        let loss = rng.random_range(0.0..5.0);
        iw_clipped_estimate(loss, arm, &x, ClipLevel::new(3.0).unwrap()).unwrap()
    } else {
        GradientEstimate::dense((0..n).map(|_| rng.random_range(0.0..5.0)).collect())
    };
    (x, g, TsallisConfig::new(q, mu).unwrap())
}

/// Compares `omd_step` with the brute-force minimizer on `instances`
/// random draws. Returns (max coordinate gap, max objective gap).
pub fn step_oracle_gaps(instances: usize, seed: u64) -> (f64, f64) {
    let mut rng = SeededRng::new(seed, streams::VERIFY);
    let mut worst_x = 0.0_f64;
    let mut worst_f = 0.0_f64;
    for _ in 0..instances {
        let (x, g, cfg) = random_step_instance(&mut rng);
        let (fast, _) = omd_step(&x, &g, &cfg).unwrap();
        let slow = brute_force_step(x.probs(), &g.values, &cfg);
        let dx = fast
            .probs()
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let f_fast = step_objective(fast.probs(), x.probs(), &g.values, &cfg);
        let f_slow = step_objective(&slow, x.probs(), &g.values, &cfg);
        worst_x = worst_x.max(dx);
        // The solver must not lose to the oracle by more than the tolerance.
        worst_f = worst_f.max(f_fast - f_slow).max((f_fast - f_slow).abs());
    }
    (worst_x, worst_f)
}

/// Checks `Σ_i x[i]·ĝ(i)[j] = min{ℓ_j, λ}` by enumerating the drawn arm.
/// Returns the largest discrepancy.
pub fn estimator_enumeration_gap(tuples: usize, seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed, streams::VERIFY);
    let mut worst = 0.0_f64;
    for _ in 0..tuples {
        let n = rng.random_range(2..=6);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let x = SimplexPoint::new(raw.iter().map(|v| v / s).collect()).unwrap();
        let losses: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..20.0)).collect();
        let lam = ClipLevel::new(rng.random_range(0.5..15.0)).unwrap();
        let mut expect = vec![0.0; n];
        for i in 0..n {
            let g = iw_clipped_estimate(losses[i], i, &x, lam).unwrap();
            for j in 0..n {
                expect[j] += x.probs()[i] * g.values[j];
            }
        }
        for j in 0..n {
            worst = worst.max((expect[j] - losses[j].min(lam.value())).abs());
        }
    }
    worst
}

type ClipFn = fn(&[f64], ClipLevel, NormIndex) -> Vec<f64>;

/// Clipping-lemma suites (scalar log-Pareto and 3-d vectors in the 2- and
/// ∞-norms) against the given clip operator.
pub fn clip_suite(level: VerifyLevel, clip: ClipFn) -> Vec<VerifyEntry> {
    let n = level.samples();
    let mut out = Vec::new();
    let alpha = 0.5;
    let spec = HeavyTailSpec::log_pareto(alpha, 1.0).unwrap();
    let m = spec.moment_scale();
    let sp1 = m.powf(1.0 + alpha);
    for (name, dim, q, lam) in [
        ("clip.lemma.scalar", 1usize, NormIndex::Finite(2.0), 3.0 * m),
        ("clip.lemma.vector_l2", 3, NormIndex::Finite(2.0), 5.0 * m),
        ("clip.lemma.vector_linf", 3, NormIndex::Infinity, 4.0 * m),
    ] {
        let mut rng = SeededRng::new(17, streams::VERIFY);
        // ||x||_q <= ||x||_1, and E(Σ|x_i|)^{1+α} <= d^{1+α} M^{1+α}.
        let sigma_pow = (dim as f64).powf(1.0 + alpha) * sp1;
        let report = verify_clip_lemma_with(
            || {
                (0..dim)
                    .map(|_| {
                        let v = spec.sample(&mut rng);
                        if rng.random::<bool>() { v } else { -v }
                    })
                    .collect()
            },
            clip,
            ClipLevel::new(lam).unwrap(),
            q,
            alpha,
            sigma_pow,
            n,
        );
        out.push(VerifyEntry {
            name: name.to_string(),
            passed: report.passed(),
            detail: format!(
                "max dev {:.4} <= {:.4}; E|x̄|² {:.4} <= 1.1·{:.4}; bias {:.4} <= 1.1·{:.4} + {:.4}",
                report.max_deviation,
                report.deviation_bound,
                report.second_moment,
                report.second_moment_bound,
                report.bias,
                report.bias_bound,
                report.bias_allowance
            ),
        });
    }
    out
}

/// A clip that overshoots the level by a factor of two.
pub fn broken_clip(g: &[f64], lam: ClipLevel, q: NormIndex) -> Vec<f64> {
    clip_vector(g, ClipLevel::new(2.0 * lam.value()).unwrap(), q)
}

pub fn verify_all(level: VerifyLevel) -> VerifyReport {
    let n = level.samples();
    let mut report = VerifyReport {
        level,
        entries: Vec::new(),
    };

    let instances = match level {
        VerifyLevel::Quick => 20,
        VerifyLevel::Full => 200,
    };
    let (dx, df) = step_oracle_gaps(instances, 1);
    report.push(
        "tsallis.step_oracle",
        dx <= 1e-6 && df <= 1e-10,
        format!("{instances} instances: max |Δx| {dx:.2e}, max Δobjective {df:.2e}"),
    );

    let gap = estimator_enumeration_gap(100, 2);
    report.push(
        "estimator.enumeration",
        gap <= 1e-12,
        format!("max |Σ x_i ĝ(i) − clip(ℓ)| = {gap:.2e}"),
    );

    report.entries.extend(clip_suite(level, clip_vector));
    let mutant = clip_suite(level, broken_clip);
    let detected = mutant.iter().any(|e| !e.passed);
    report.push(
        "clip.lemma.mutation_detected",
        detected,
        format!(
            "factor-2 clip: {} of {} suites fail",
            mutant.iter().filter(|e| !e.passed).count(),
            mutant.len()
        ),
    );

    let mut rng = SeededRng::new(3, streams::SPHERE);
    let mut worst = 0.0_f64;
    for k in 0..n {
        let e = sample_sphere(1 + k % 12, &mut rng).unwrap();
        let r = e.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max((r - 1.0).abs());
    }
    report.push("sphere.unit_norm", worst <= 1e-12, format!("max |‖e‖ − 1| = {worst:.2e}"));

    let mut ok = true;
    let mut detail = String::new();
    for dim in [2usize, 5, 10] {
        let r: Vec<f64> = (0..dim).map(|i| ((i + 1) as f64).sin() + 0.3).collect();
        let (emp, bound) = inner_product_check(&r, n, &mut rng).unwrap();
        ok &= emp <= 1.05 * bound;
        detail += &format!("n={dim}: {emp:.4} <= 1.05·{bound:.4}; ");
    }
    report.push("sphere.inner_product", ok, detail);

    let probes: Vec<Vec<f64>> = (0..20)
        .map(|k| {
            let t = k as f64;
            vec![(0.7 * t).sin(), (0.3 * t).cos(), 0.1 * t - 1.0]
        })
        .collect();
    let per_probe = (n / 20).max(1000);
    let checks: [(&str, Box<dyn Fn(&[f64]) -> f64>, Regularity); 3] = [
        ("smoothing.linear", Box::new(|x: &[f64]| 0.5 * x[0] - x[1] + 2.0 * x[2]), Regularity::Lipschitz(0.0)),
        (
            "smoothing.lipschitz_norm",
            Box::new(|x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt()),
            Regularity::Lipschitz(1.0),
        ),
        (
            "smoothing.smooth_quadratic",
            Box::new(|x: &[f64]| 1.5 * x.iter().map(|v| v * v).sum::<f64>()),
            Regularity::Smooth(3.0),
        ),
    ];
    for (name, f, reg) in checks {
        let res = smoothing_gap_check(f, reg, 0.1, &probes, per_probe, &mut rng).unwrap();
        let worst = res
            .iter()
            .map(|p| p.gap - p.bound - 3.0 * p.std_error)
            .fold(f64::NEG_INFINITY, f64::max);
        report.push(
            name,
            res.iter().all(|p| p.passed),
            format!("20 probes, worst gap − (bound + 3σ) = {worst:.2e}"),
        );
    }

    let mut rng = SeededRng::new(4, streams::VERIFY);
    let mut jensen_ok = true;
    for _ in 0..10_000 {
        let dim = rng.random_range(1..6);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let q = if rng.random::<f64>() < 0.2 {
            NormIndex::Infinity
        } else {
            NormIndex::Finite(rng.random_range(1.0..8.0))
        };
        let a: f64 = rng.random_range(0.01..1.0);
        let d: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u - v).collect();
        let lhs = crate::clip::norm(&d, q).powf(a + 1.0);
        let rhs = 2f64.powf(a)
            * (crate::clip::norm(&x, q).powf(a + 1.0) + crate::clip::norm(&y, q).powf(a + 1.0));
        jensen_ok &= lhs <= rhs * (1.0 + 1e-12) + 1e-12;
    }
    report.push("jensen.norm", jensen_ok, "10000 random (x, y, q, α) tuples".into());

    // Heavy-tailed linear loss: moment certificate and estimator moment.
    let alpha = 0.5;
    let env = FunctionEnvironment::new(
        LossFamily::Linear { c: vec![0.3, 1.0] },
        Some(HeavyTailSpec::log_pareto(alpha, 1.0).unwrap()),
        Adversary::Zero,
        Domain::Simplex { dim: 2 },
        0.2,
    )
    .unwrap();
    let b = env.moment_bound();
    let mut srng = SeededRng::new(5, streams::SPHERE);
    let mut erng = SeededRng::new(5, streams::ENVIRONMENT);
    let x = [0.4, 0.6];
    let problem = ZoProblem {
        n: 2,
        q: NormIndex::Finite(2.0),
        alpha,
        moment_bound: b,
        delta: 0.0,
        tau: 0.2,
        horizon: 1.0,
    };
    let sp = sigma_q_pow(&problem, a_q_constant(2, problem.q).unwrap());
    let (mut loss_moment, mut grad_moment) = (0.0, 0.0);
    for _ in 0..n {
        let e = sample_sphere(2, &mut srng).unwrap();
        let z: Vec<f64> = x.iter().zip(e.as_slice()).map(|(a, b)| a + 0.2 * b).collect();
        let v = env.query(&z, &mut erng).unwrap();
        loss_moment += v.abs().powf(1.0 + alpha) / n as f64;
        let g = one_point_gradient(v, &e, 0.2);
        grad_moment += crate::clip::norm(&g, problem.q).powf(1.0 + alpha) / n as f64;
    }
    let bp = b.powf(1.0 + alpha);
    report.push(
        "envs.loss_moment",
        loss_moment <= 1.1 * bp,
        format!("E|l|^1.5 {loss_moment:.4} <= 1.1·{bp:.4}"),
    );
    report.push(
        "zeroth.estimator_moment",
        grad_moment <= 1.1 * sp,
        format!("E‖g‖^1.5 {grad_moment:.4} <= 1.1·{sp:.4}"),
    );

    let (l, m, bnd) = theorem1_planner(8000.0, 0.5, 2, 1.0).unwrap();
    let ok = (l - 158.740_105_196_819_95).abs() < 1e-9
        && ((m - 4.454_493_590_701_697e-3) / m).abs() < 1e-10
        && ((bnd - 0.224_492_409_661_874_6) / bnd).abs() < 1e-10;
    report.push(
        "planner.theorem1_reference",
        ok,
        format!("λ {l:.6}, μ {m:.6e}, bound {bnd:.6}"),
    );

    report
}
