//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line.
//!
//! Heavy criteria run in release-like speed thanks to the workspace test
//! profile; see the README for expected runtimes.

#![allow(clippy::excessive_precision)]

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use htbandit::bench::verify::{clip_suite, estimator_enumeration_gap, step_oracle_gaps};
use htbandit::bench::{run_experiment, ExperimentConfig, PolicyId, VerifyLevel};
use htbandit::clip::{ClipLevel, NormIndex};
use htbandit::dist::{HeavyTailSpec, LogParetoLaw};
use htbandit::envs::{Adversary, ArmEnvironment, Domain, FunctionEnvironment, LossFamily, Regularity};
use htbandit::policy::{run_policy, InfClip};
use htbandit::rng::{streams, SeededRng};
use htbandit::tsallis::TsallisConfig;
use htbandit::zeroth::{
    a_q_constant, inner_product_check, optimal_tau_lipschitz, plan_parameters, run_zo,
    sample_sphere, smoothing_gap_check, theorem1_planner, Accuracy, Prox, ZoConfig, ZoProblem,
};

fn report(id: u32, passed: bool, detail: &str) {
    println!(
        "ACCEPTANCE {id:>2} {} {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn acceptance_01_step_solver_oracle() {
    let start = Instant::now();
    let (dx, df) = step_oracle_gaps(200, 101);
    let secs = start.elapsed().as_secs_f64();
    let ok = dx <= 1e-6 && df <= 1e-10 && secs < 30.0;
    report(1, ok, &format!("200 instances: max |Δx| {dx:.2e} (<= 1e-6), max Δobjective {df:.2e} (<= 1e-10), {secs:.1}s"));
    assert!(ok);
}

#[test]
fn acceptance_02_clip_lemma_suite() {
    let start = Instant::now();
    let entries = clip_suite(VerifyLevel::Full, htbandit::clip::clip_vector);
    let secs = start.elapsed().as_secs_f64();
    let ok = entries.iter().all(|e| e.passed) && secs < 120.0;
    let detail: Vec<String> = entries.iter().map(|e| format!("{} [{}]", e.name, e.detail)).collect();
    report(2, ok, &format!("10^6 samples, {secs:.1}s: {}", detail.join("; ")));
    assert!(ok);
}

#[test]
fn acceptance_03_estimator_unbiasedness() {
    let gap = estimator_enumeration_gap(100, 103);
    let ok = gap <= 1e-12;
    report(3, ok, &format!("100 tuples, max |Σ x_i ĝ(i)_j − clip(ℓ_j)| = {gap:.2e}"));
    assert!(ok);
}

#[test]
fn acceptance_04_theorem1_bound() {
    let start = Instant::now();
    let alpha = 0.5;
    let horizon = 8000;
    let law = Arc::new(LogParetoLaw::new(alpha).unwrap());
    let mx = law.moment_scale();
    // Arm scales chosen so that E|X|^{1.5} <= M^{1.5} with M = 0.5 and 1.
    let arms = vec![
        HeavyTailSpec::log_pareto_with_law(Arc::clone(&law), 0.5 / mx).unwrap(),
        HeavyTailSpec::log_pareto_with_law(Arc::clone(&law), 1.0 / mx).unwrap(),
    ];
    let env = ArmEnvironment::new(arms).unwrap();
    let m = env.moment_scale();
    let (lambda, mu, bound) = theorem1_planner(horizon as f64, alpha, 2, m).unwrap();
    let regrets: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mut p = InfClip::new(
                2,
                TsallisConfig::half(mu).unwrap(),
                ClipLevel::new(lambda).unwrap(),
                SeededRng::new(seed, streams::POLICY),
            )
            .unwrap();
            let mut rng = SeededRng::new(seed, streams::ENVIRONMENT);
            run_policy(&mut p, &env, horizon, env.best_arm(), &mut rng)
                .unwrap()
                .average_pseudo_regret()
        })
        .collect();
    let (mean, se) = mean_se(&regrets);
    let secs = start.elapsed().as_secs_f64();
    let ok = mean <= bound && (m - 1.0).abs() < 1e-12 && secs < 300.0;
    report(
        4,
        ok,
        &format!(
            "M {m:.6}, λ {lambda:.3}, μ {mu:.4e}, mean avg pseudo-regret {mean:.5} ± {se:.5} <= bound {bound:.5}, gap {:.4}, {secs:.1}s",
            env.known_means()[1] - env.known_means()[0]
        ),
    );
    assert!(ok);
}

#[test]
fn acceptance_05_clip_beats_skip() {
    let start = Instant::now();
    let cfg = ExperimentConfig::load(&configs_dir().join("clip_vs_skip.toml")).unwrap();
    assert_eq!(cfg.horizon, 8000);
    assert_eq!(cfg.repetitions, 100);
    let res = run_experiment(&cfg, None).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for &alpha in &[0.1, 0.3] {
        let get = |id: PolicyId| {
            res.curves
                .iter()
                .find(|c| c.policy.id == id && c.alpha() == alpha)
                .unwrap()
        };
        let (ci, si) = get(PolicyId::InfClip).final_prob_optimal();
        let (cs, ss) = get(PolicyId::SkipInf).final_prob_optimal();
        let z = (ci - cs) / (si * si + ss * ss).sqrt();
        ok &= z > 2.0;
        detail.push(format!("α={alpha}: INF-clip {ci:.4}±{si:.4} vs Skip-INF {cs:.4}±{ss:.4} (z = {z:.2})"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 900.0;
    report(5, ok, &format!("{}, {secs:.1}s", detail.join("; ")));
    assert!(ok);
}

/// Linear-on-simplex loss `⟨c, x⟩·ξ` with mean-one log-Pareto `ξ`.
fn linear_env(alpha: f64, tau: f64, adversary: Adversary) -> FunctionEnvironment {
    FunctionEnvironment::new(
        LossFamily::Linear { c: vec![-0.5, 0.5] },
        Some(HeavyTailSpec::log_pareto(alpha, 1.0).unwrap()),
        adversary,
        Domain::Simplex { dim: 2 },
        tau,
    )
    .unwrap()
}

fn lipschitz(env: &FunctionEnvironment) -> f64 {
    match env.regularity() {
        Regularity::Lipschitz(m) => m,
        Regularity::Smooth(_) => unreachable!(),
    }
}

#[test]
fn acceptance_06_nonlinear_rate() {
    let start = Instant::now();
    let alpha = 0.5;
    let q = NormIndex::Finite(2.0);
    let prox = Prox::ShiftedNegentropy { gamma: Prox::DEFAULT_GAMMA };
    let (r1, d) = (prox.r1(2, alpha), prox.diameter(2, alpha));
    // τ from the bound-optimal formula at the middle horizon, held fixed
    // across T (B depends on τ, so iterate to a fixed point).
    let mut tau = 0.1;
    for _ in 0..50 {
        let env = linear_env(alpha, tau, Adversary::Zero);
        let p = ZoProblem { n: 2, q, alpha, moment_bound: env.moment_bound(), delta: 0.0, tau, horizon: 4096.0 };
        tau = optimal_tau_lipschitz(&p, r1, d, lipschitz(&env)).unwrap();
    }
    let env = linear_env(alpha, tau, Adversary::Zero);
    let u = env.minimizer();
    let mut pts = Vec::new();
    let mut detail = Vec::new();
    for k in 10..=14 {
        let horizon = 1usize << k;
        let p = ZoProblem { n: 2, q, alpha, moment_bound: env.moment_bound(), delta: 0.0, tau, horizon: horizon as f64 };
        let plan = plan_parameters(&p, r1, d, None).unwrap();
        let cfg = ZoConfig::from_plan(&p, &plan);
        let regs: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|s| {
                run_zo(
                    &cfg,
                    &prox,
                    &env,
                    &u,
                    &mut SeededRng::new(s, streams::SPHERE),
                    &mut SeededRng::new(s, streams::ENVIRONMENT),
                )
                .unwrap()
                .average_regret()
            })
            .collect();
        let (m, se) = mean_se(&regs);
        pts.push(((horizon as f64).ln(), m.ln()));
        detail.push(format!("T=2^{k}: {m:.4}±{se:.4}"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let target = -alpha / (1.0 + alpha) + 0.15;
    let secs = start.elapsed().as_secs_f64();
    let ok = slope <= target && secs < 1200.0;
    report(
        6,
        ok,
        &format!("τ {tau:.4}, slope {slope:.4} (target <= {target:.4}); {}; {secs:.1}s", detail.join(", ")),
    );
    assert!(ok, "log-log slope {slope} above {target}");
}

#[test]
fn acceptance_07_adversarial_sensitivity() {
    let alpha = 0.5;
    let tau = 0.5;
    let delta = 0.1;
    let horizon = 4096;
    let q = NormIndex::Finite(2.0);
    let prox = Prox::ShiftedNegentropy { gamma: Prox::DEFAULT_GAMMA };
    let (r1, d) = (prox.r1(2, alpha), prox.diameter(2, alpha));
    let adv = Adversary::SignOscillating { delta, w: vec![40.0, -25.0] };
    let noisy = linear_env(alpha, tau, adv);
    let clean = noisy.with_adversary(Adversary::Zero);
    let p = ZoProblem {
        n: 2,
        q,
        alpha,
        moment_bound: clean.moment_bound(),
        delta,
        tau,
        horizon: horizon as f64,
    };
    let plan = plan_parameters(&p, r1, d, None).unwrap();
    let cfg = ZoConfig::from_plan(&p, &plan);
    let u = clean.minimizer();
    let diffs: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|s| {
            let run = |env: &FunctionEnvironment| {
                run_zo(
                    &cfg,
                    &prox,
                    env,
                    &u,
                    &mut SeededRng::new(s, streams::SPHERE),
                    &mut SeededRng::new(s, streams::ENVIRONMENT),
                )
                .unwrap()
                .average_regret()
            };
            run(&noisy) - run(&clean)
        })
        .collect();
    let (excess, se) = mean_se(&diffs);
    let allowance = delta * 2f64.sqrt() * d / tau;
    let ok = excess <= allowance + 3.0 * se;
    report(
        7,
        ok,
        &format!("Δ {delta}, τ {tau}: excess {excess:.5} ± {se:.5} <= Δ√n·D/τ {allowance:.4} + 3σ"),
    );
    assert!(ok);
}

struct Tuple {
    n: usize,
    q: NormIndex,
    alpha: f64,
    b: f64,
    delta: f64,
    tau: f64,
    horizon: f64,
    r1: f64,
    d_psi: f64,
    eps: f64,
    m: f64,
    l: f64,
    a_q: f64,
    sigma_q: f64,
    mu_star: f64,
    lambda_star: f64,
    tau_m: f64,
    tau_l: f64,
    t1_lambda: f64,
    t1_mu: f64,
    t1_bound: f64,
}

// Independent 40-digit evaluations of the closed forms.
#[rustfmt::skip]
const TUPLES: [Tuple; 20] = [
    Tuple { n: 5, q: NormIndex::Finite(2.0), alpha: 0.7, b: 0.5, delta: 0.5, tau: 0.05, horizon: 8000.0, r1: 2.2, d_psi: 3.1, eps: 0.3, m: 3.0, l: 4.0,
      a_q: 1.7320508075688772935, sigma_q: 173.20508075688772935, mu_star: 0.000026760269058181445458, lambda_star: 540602.43696405426514, tau_m: 0.0125, tau_l: 0.13693063937629152836, t1_lambda: 414.70102817653499463, t1_mu: 0.0025162667044454317803, t1_bound: 1.2763921351198344354 },
    Tuple { n: 5, q: NormIndex::Finite(3.0), alpha: 0.7, b: 2.5, delta: 0.1, tau: 0.05, horizon: 1000.0, r1: 2.2, d_psi: 1.0, eps: 0.01, m: 1.0, l: 1.0,
      a_q: 1.7099759466766969894, sigma_q: 570.10503360903746526, mu_star: 0.00003373156715320332198, lambda_star: 138347.16440749466199, tau_m: 0.00125, tau_l: 0.05, t1_lambda: 40.680328689886424035, t1_mu: 0.025651178913884415218, t1_bound: 1.0016671879917717676 },
    Tuple { n: 10, q: NormIndex::Finite(3.0), alpha: 0.1, b: 1.0, delta: 0.0, tau: 0.05, horizon: 65536.0, r1: 0.5, d_psi: 1.7, eps: 0.1, m: 1.0, l: 4.0,
      a_q: 1.5234153789450825438, sigma_q: 324.49999497225285875, mu_star: 6.7137248680977682847e-9, lambda_star: 56269475.61895180237, tau_m: 0.0125, tau_l: 0.0790569415042094833, t1_lambda: 28.898626129349268265, t1_mu: 0.0012158508258851445485, t1_bound: 0.032914271958948361171 },
    Tuple { n: 5, q: NormIndex::Infinity, alpha: 0.7, b: 0.5, delta: 0.0, tau: 0.5, horizon: 8000.0, r1: 1.0, d_psi: 1.7, eps: 0.1, m: 1.0, l: 1.0,
      a_q: 2.9496444937616198085, sigma_q: 19.619738187243890818, mu_star: 0.00010388458592093250901, lambda_star: 76366.799395739658209, tau_m: 0.0125, tau_l: 0.1581138830084189666, t1_lambda: 138.23367605884499821, t1_mu: 0.0075488001133362953408, t1_bound: 0.42546404503994481179 },
    Tuple { n: 5, q: NormIndex::Finite(2.0), alpha: 0.25, b: 2.5, delta: 0.0, tau: 0.5, horizon: 8000.0, r1: 1.0, d_psi: 1.0, eps: 0.1, m: 3.0, l: 1.0,
      a_q: 1.7320508075688772935, sigma_q: 49.740097835641384435, mu_star: 5.0023420222878087433e-6, lambda_star: 133270.90864566040141, tau_m: 0.0041666666666666666667, tau_l: 0.1581138830084189666, t1_lambda: 108.69241461412303269, t1_mu: 0.0013714958769589823672, t1_bound: 0.45699530907143256432 },
    Tuple { n: 5, q: NormIndex::Finite(3.0), alpha: 0.5, b: 1.0, delta: 0.5, tau: 2.0, horizon: 1000.0, r1: 0.5, d_psi: 3.1, eps: 0.1, m: 0.5, l: 1.0,
      a_q: 1.7099759466766969894, sigma_q: 6.5905794936241987519, mu_star: 0.00016388624733819793352, lambda_star: 37831.118234134643345, tau_m: 0.025, tau_l: 0.1581138830084189666, t1_lambda: 10.772173450159418609, t1_mu: 0.041515632622248537493, t1_bound: 0.30468307578901650875 },
    Tuple { n: 10, q: NormIndex::Infinity, alpha: 0.5, b: 0.5, delta: 0.0, tau: 0.05, horizon: 8000.0, r1: 0.5, d_psi: 1.7, eps: 0.01, m: 3.0, l: 1.0,
      a_q: 2.5628640809806801358, sigma_q: 322.90064036470377564, mu_star: 1.0216641166165557442e-6, lambda_star: 3327903.9017830804712, tau_m: 0.00041666666666666666667, tau_l: 0.05, t1_lambda: 162.86505699569439429, t1_mu: 0.0019416550845845216167, t1_bound: 1.151629862199890672 },
    Tuple { n: 3, q: NormIndex::Finite(2.0), alpha: 0.25, b: 2.5, delta: 0.1, tau: 0.1, horizon: 1000.0, r1: 1.0, d_psi: 1.0, eps: 0.3, m: 0.5, l: 0.2,
      a_q: 1.7320508075688772935, sigma_q: 151.35196754288343798, mu_star: 8.6768868850666832439e-6, lambda_star: 76832.471772108762279, tau_m: 0.075, tau_l: 0.61237243569579452455, t1_lambda: 5.1648176931936459492, t1_mu: 0.037261739167191098373, t1_bound: 0.10423384040749190737 },
    Tuple { n: 10, q: NormIndex::Infinity, alpha: 0.9, b: 0.5, delta: 0.0, tau: 0.1, horizon: 65536.0, r1: 1.0, d_psi: 3.1, eps: 0.3, m: 0.5, l: 0.2,
      a_q: 2.5628640809806801358, sigma_q: 177.94620672099410924, mu_star: 7.4470969341863000546e-6, lambda_star: 7492852.6502518170582, tau_m: 0.075, tau_l: 0.61237243569579452455, t1_lambda: 357.82659154890130218, t1_mu: 0.0079537126680049838951, t1_bound: 0.23407534485591177121 },
    Tuple { n: 2, q: NormIndex::Finite(3.0), alpha: 0.1, b: 0.5, delta: 0.5, tau: 0.05, horizon: 65536.0, r1: 1.0, d_psi: 1.7, eps: 0.1, m: 0.5, l: 4.0,
      a_q: 1.9921100948292237111, sigma_q: 79.684403793168948445, mu_star: 9.6412239595318799501e-8, lambda_star: 3918359.1146047851213, tau_m: 0.025, tau_l: 0.0790569415042094833, t1_lambda: 62.412916527745428192, t1_mu: 0.0012588326984673398748, t1_bound: 0.014217116752543790966 },
    Tuple { n: 5, q: NormIndex::Infinity, alpha: 0.5, b: 1.0, delta: 0.0, tau: 2.0, horizon: 65536.0, r1: 1.0, d_psi: 1.7, eps: 0.1, m: 3.0, l: 1.0,
      a_q: 2.9496444937616198085, sigma_q: 9.2907979684919292204, mu_star: 0.000022017638078754222909, lambda_star: 154421.6499444056151, tau_m: 0.0041666666666666666667, tau_l: 0.1581138830084189666, t1_lambda: 1050.6092216381626303, t1_mu: 0.00042567073112364277058, t1_bound: 0.45342584533536698831 },
    Tuple { n: 2, q: NormIndex::Finite(2.0), alpha: 0.9, b: 1.0, delta: 0.5, tau: 0.1, horizon: 1000.0, r1: 0.5, d_psi: 3.1, eps: 0.3, m: 0.5, l: 1.0,
      a_q: 1.7320508075688772935, sigma_q: 54.506319899873900209, mu_star: 0.00010592470659957161417, lambda_star: 526789.28071938288536, tau_m: 0.075, tau_l: 0.27386127875258305673, t1_lambda: 92.365437682343623809, t1_mu: 0.068899809175001058539, t1_bound: 0.79195859970788507841 },
    Tuple { n: 5, q: NormIndex::Finite(2.0), alpha: 0.9, b: 0.5, delta: 0.0, tau: 2.0, horizon: 1000.0, r1: 1.0, d_psi: 3.1, eps: 0.1, m: 1.0, l: 0.2,
      a_q: 1.7320508075688772935, sigma_q: 3.0065179162464492781, mu_star: 0.0039834008705497513383, lambda_star: 14008.130693685120224, tau_m: 0.0125, tau_l: 0.3535533905932737622, t1_lambda: 114.05054852616121563, t1_mu: 0.035290688308933245918, t1_bound: 2.444727025960946664 },
    Tuple { n: 3, q: NormIndex::Finite(2.0), alpha: 0.7, b: 2.5, delta: 0.5, tau: 0.5, horizon: 8000.0, r1: 0.5, d_psi: 3.1, eps: 0.01, m: 1.0, l: 4.0,
      a_q: 1.7320508075688772935, sigma_q: 35.86342312837109318, mu_star: 0.000022614980314856957264, lambda_star: 639693.97564156890327, tau_m: 0.00125, tau_l: 0.025, t1_lambda: 186.68658952163450372, t1_mu: 0.0072161081926723497422, t1_bound: 0.34475722760396386006 },
    Tuple { n: 2, q: NormIndex::Finite(4.5), alpha: 0.9, b: 1.0, delta: 0.1, tau: 2.0, horizon: 65536.0, r1: 1.0, d_psi: 1.7, eps: 0.1, m: 1.0, l: 4.0,
      a_q: 2.3330580791522331618, sigma_q: 3.2612068446943964621, mu_star: 0.00041940117941151132923, lambda_star: 72961.168213539172445, tau_m: 0.0125, tau_l: 0.0790569415042094833, t1_lambda: 1669.481292639098224, t1_mu: 0.0038119391087149266512, t1_bound: 0.21842111152970859681 },
    Tuple { n: 10, q: NormIndex::Infinity, alpha: 0.9, b: 0.5, delta: 0.5, tau: 0.5, horizon: 65536.0, r1: 2.2, d_psi: 1.7, eps: 0.3, m: 0.5, l: 1.0,
      a_q: 2.5628640809806801358, sigma_q: 51.257281619613602716, mu_star: 0.000061192380681498938935, lambda_star: 500062.25708508318185, tau_m: 0.075, tau_l: 0.27386127875258305673, t1_lambda: 357.82659154890130218, t1_mu: 0.0079537126680049838951, t1_bound: 0.23407534485591177121 },
    Tuple { n: 50, q: NormIndex::Finite(4.5), alpha: 0.1, b: 0.5, delta: 0.5, tau: 2.0, horizon: 8000.0, r1: 1.0, d_psi: 1.7, eps: 0.3, m: 1.0, l: 1.0,
      a_q: 0.95413292178932036208, sigma_q: 23.853323044733009052, mu_star: 2.1792703156836109013e-6, lambda_star: 173350.58210035473736, tau_m: 0.0375, tau_l: 0.27386127875258305673, t1_lambda: 0.98877032881167073656, t1_mu: 0.015891945347159219951, t1_bound: 0.046127766891699293413 },
    Tuple { n: 50, q: NormIndex::Infinity, alpha: 0.9, b: 1.0, delta: 0.5, tau: 2.0, horizon: 8000.0, r1: 0.5, d_psi: 1.0, eps: 0.01, m: 1.0, l: 4.0,
      a_q: 1.5309130358952508043, sigma_q: 60.22083424801281194, mu_star: 0.000034060262071610505612, lambda_star: 528475.08812925842249, tau_m: 0.00125, tau_l: 0.025, t1_lambda: 101.41264462906346946, t1_mu: 0.0125506263128357546, t1_bound: 2.717284531976349214 },
    Tuple { n: 2, q: NormIndex::Finite(2.0), alpha: 0.9, b: 1.0, delta: 0.1, tau: 0.5, horizon: 1000.0, r1: 1.0, d_psi: 1.7, eps: 0.01, m: 1.0, l: 4.0,
      a_q: 1.7320508075688772935, sigma_q: 9.6844154879412366083, mu_star: 0.0012763701758255021366, lambda_star: 23974.236142120146957, tau_m: 0.00125, tau_l: 0.025, t1_lambda: 184.73087536468724762, t1_mu: 0.034449904587500529269, t1_bound: 1.5839171994157701568 },
    Tuple { n: 50, q: NormIndex::Infinity, alpha: 0.7, b: 1.0, delta: 0.1, tau: 2.0, horizon: 8000.0, r1: 1.0, d_psi: 1.0, eps: 0.1, m: 0.5, l: 0.2,
      a_q: 1.5309130358952508043, sigma_q: 51.509948515702324175, mu_star: 0.000043453089658359680548, lambda_star: 107395.50865904594018, tau_m: 0.025, tau_l: 0.3535533905932737622, t1_lambda: 17.838098906544192717, t1_mu: 0.018498785452560898237, t1_bound: 0.54903189533714856996 },
];

#[test]
fn acceptance_08_formula_planners() {
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let mut worst = 0.0_f64;
    for t in &TUPLES {
        let p = ZoProblem {
            n: t.n,
            q: t.q,
            alpha: t.alpha,
            moment_bound: t.b,
            delta: t.delta,
            tau: t.tau,
            horizon: t.horizon,
        };
        let lip = plan_parameters(&p, t.r1, t.d_psi, Some(Accuracy::Lipschitz { eps: t.eps, m: t.m })).unwrap();
        let sm = plan_parameters(&p, t.r1, t.d_psi, Some(Accuracy::Smooth { eps: t.eps, l: t.l })).unwrap();
        let (l1, m1, b1) = theorem1_planner(t.horizon, t.alpha, t.n, t.m).unwrap();
        for (got, want) in [
            (a_q_constant(t.n, t.q).unwrap(), t.a_q),
            (lip.sigma_q, t.sigma_q),
            (lip.mu_star, t.mu_star),
            (lip.lambda_star, t.lambda_star),
            (lip.tau_star.unwrap(), t.tau_m),
            (sm.tau_star.unwrap(), t.tau_l),
            (l1, t.t1_lambda),
            (m1, t.t1_mu),
            (b1, t.t1_bound),
        ] {
            worst = worst.max(rel(got, want));
        }
    }
    let ok = worst <= 1e-10;
    report(8, ok, &format!("20 tuples × 9 quantities, max relative error {worst:.2e}"));
    assert!(ok);
}

#[test]
fn acceptance_09_sphere_and_smoothing() {
    let mut rng = SeededRng::new(109, streams::SPHERE);
    let mut worst_norm = 0.0_f64;
    for k in 0..1_000_000usize {
        let e = sample_sphere(1 + k % 10, &mut rng).unwrap();
        let r = e.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_norm = worst_norm.max((r - 1.0).abs());
    }
    let r = vec![0.3, -1.2, 0.8, 2.0, -0.1];
    let (emp, bound) = inner_product_check(&r, 1_000_000, &mut rng).unwrap();
    let probes: Vec<Vec<f64>> = (0..20)
        .map(|k| {
            let t = k as f64;
            vec![(0.7 * t).sin(), (0.3 * t).cos(), 0.1 * t - 1.0]
        })
        .collect();
    let lip = smoothing_gap_check(
        |x| x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Regularity::Lipschitz(1.0),
        0.1,
        &probes,
        50_000,
        &mut rng,
    )
    .unwrap();
    let smooth = smoothing_gap_check(
        |x| 1.5 * x.iter().map(|v| v * v).sum::<f64>(),
        Regularity::Smooth(3.0),
        0.1,
        &probes,
        50_000,
        &mut rng,
    )
    .unwrap();
    let ok_norm = worst_norm <= 1e-12;
    let ok_ip = emp <= 1.05 * bound;
    let ok_lip = lip.iter().all(|p| p.passed);
    let ok_smooth = smooth.iter().all(|p| p.passed);
    let ok = ok_norm && ok_ip && ok_lip && ok_smooth;
    report(
        9,
        ok,
        &format!(
            "unit norm err {worst_norm:.2e}; E|⟨e,r⟩| {emp:.5} <= 1.05·{bound:.5}; Lipschitz probes {}/20; smooth probes {}/20",
            lip.iter().filter(|p| p.passed).count(),
            smooth.iter().filter(|p| p.passed).count()
        ),
    );
    assert!(ok);
}

#[test]
fn acceptance_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("det.toml");
    std::fs::write(
        &cfg_path,
        r#"
alphas = [0.3, 0.7]
horizon = 300
repetitions = 12
base_seed = 42
filter_window = 30

[[policy]]
id = "inf-clip"

[[policy]]
id = "skip-inf"
lambda = 3.5

[[policy]]
id = "robust-ucb"
"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_htbandit");
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3", "1"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let status = std::process::Command::new(bin)
            .args(["simulate", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push(std::fs::read(out.join("det.csv")).unwrap());
    }
    let ok = outputs[0] == outputs[1] && outputs[0] == outputs[2] && !outputs[0].is_empty();
    report(10, ok, &format!("3 invocations (threads 1, 3, 1), {} CSV bytes each, identical: {ok}", outputs[0].len()));
    assert!(ok);
}
