//! Acceptance checks 1 to 12, one PASS/FAIL line each.
//!
//! The process fails when a criterion fails, except for criteria listed in
//! `KNOWN_FAILING`, which still print FAIL with their numbers. A listed
//! criterion that starts passing also fails the run, so the list cannot go
//! stale.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use realrate::altmodels::{
    alpha0_sweep, ext_long_run, ext_ou_autocorr, ext_ou_variance, feller_long_run, lognormal_regime,
    sweep_zero_crossing, ExtOuParams, LognormalRegime, SweepConvention,
};
use realrate::estimation::{fit_feller, fit_lognormal, fit_ou_series, FellerFit, FellerParams};
use realrate::montecarlo::{simulate_feller, simulate_lognormal, simulate_ou, SimConfig};
use realrate::ou::{
    dimensionless, discount_rate_envelope, long_run_rate, neg_prob, neg_prob_expansion, Dimensionless,
    ExpansionRegime,
};
use realrate::verify::{discount_checks, equal_ratio_params, stationary_checks, VerifyConfig};
use realrate::{OuFit, OuParams, TimeGrid};

/// The stated 2.2% ceiling does not hold for the US row once its own
/// standard errors are applied; see the printed maximum.
const KNOWN_FAILING: &[u32] = &[11];

struct Row {
    label: &'static str,
    params: OuParams,
    se: [f64; 3],
}

fn row(label: &'static str, m: f64, sm: f64, a: f64, sa: f64, k2: f64, sk2: f64) -> Row {
    Row {
        label,
        params: OuParams {
            level: m,
            reversion: a,
            noise_sq: k2,
        },
        se: [sm, sa, sk2],
    }
}

fn usa() -> Row {
    row("USA", 0.0319, 0.0123, 0.0603, 0.0257, 10.03e-5, 1.05e-5)
}

fn fit_from(r: &Row) -> OuFit {
    OuFit::from_parts(r.params, r.se[0], r.se[1], r.se[2], 0, f64::NAN)
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn criterion_1() -> Outcome {
    let p = neg_prob(&Dimensionless::new(1.0, 1.0).unwrap());
    outcome((p - 0.079).abs() <= 5e-4, format!("P(r<0) at mu = kappa: {p:.6}"))
}

fn criterion_2() -> Outcome {
    let us = long_run_rate(&usa().params);
    let nl = long_run_rate(&row("NLD", 0.0599, 0.0, 0.1648, 0.0, 17.97e-5, 0.0).params);
    let d_us = dimensionless(&usa().params);
    let d_uk = dimensionless(&row("GBR", 0.0342, 0.0, 0.1635, 0.0, 31.37e-5, 0.0).params);
    let ok = (us - 0.0181).abs() <= 5e-4
        && (nl - 0.0566).abs() <= 5e-4
        && (d_us.scaled_mean - 0.53).abs() <= 0.01
        && (d_us.scaled_noise - 0.68).abs() <= 0.01
        && (d_uk.scaled_mean - 0.21).abs() <= 0.01
        && (d_uk.scaled_noise - 0.27).abs() <= 0.01;
    outcome(
        ok,
        format!(
            "r_inf USA {us:.5}, NLD {nl:.5}; (mu, kappa) USA ({:.4}, {:.4}), GBR ({:.4}, {:.4})",
            d_us.scaled_mean, d_us.scaled_noise, d_uk.scaled_mean, d_uk.scaled_noise
        ),
    )
}

fn criterion_3() -> Outcome {
    let (m, k2) = (0.0130, 0.0309);
    let drift = m - k2 / 2.0;
    let regime = lognormal_regime(m, k2);
    let ok = (drift + 0.0024).abs() <= 1e-4 && regime.as_ref().ok() == Some(&LognormalRegime::Constant);
    outcome(ok, format!("m - k2/2 = {drift:.5}, regime {regime:?}"))
}

fn criterion_4() -> Outcome {
    let cfg = VerifyConfig {
        n_paths: 100_000,
        dt: 0.01,
        r0: 0.01,
        ..VerifyConfig::default()
    };
    let checks = discount_checks(&usa().params, &cfg).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for c in checks.iter().filter(|c| c.name.starts_with("discount.t=")) {
        let rel = (c.simulated - c.analytic).abs() / c.simulated;
        let rel_se = c.stderr / c.simulated;
        ok &= rel <= 3.0 * rel_se;
        parts.push(format!("{}: rel err {rel:.2e} vs 3 rel se {:.2e}", c.name, 3.0 * rel_se));
    }
    outcome(ok && parts.len() == 3, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let cfg = VerifyConfig {
        n_paths: 100_000,
        ..VerifyConfig::default()
    };
    let checks = stationary_checks(&equal_ratio_params(), &cfg, "").unwrap();
    let c = checks.iter().find(|c| c.name == "negative_occupation").unwrap();
    let z = (c.simulated - c.analytic) / c.stderr;
    outcome(
        z.abs() <= 3.0,
        format!(
            "occupation {:.5} vs exact {:.5} (se {:.1e}, z = {z:.2})",
            c.simulated, c.analytic, c.stderr
        ),
    )
}

fn criterion_6() -> Outcome {
    let truth = OuParams {
        level: 0.03,
        reversion: 0.06,
        noise_sq: 1e-4,
    };
    let (reps, n, dt) = (200, 2000, 0.25);
    let cfg = SimConfig::new(reps, (n - 1) as f64 * dt, dt, 6, truth.level).unwrap();
    let e = simulate_ou(&truth, &cfg).unwrap();
    let deltas = vec![dt; n - 1];
    let target = [truth.level, truth.reversion, truth.noise_sq];
    let mut covered = [0usize; 3];
    let mut first_ok = false;
    for (i, path) in e.states.iter().enumerate() {
        assert_eq!(path.len(), n);
        let fit = fit_ou_series(path, &deltas).unwrap();
        let est = [fit.params.level, fit.params.reversion, fit.params.noise_sq];
        let se = [fit.se_level, fit.se_reversion, fit.se_noise_sq];
        let z: Vec<f64> = (0..3).map(|j| (est[j] - target[j]) / se[j]).collect();
        if i == 0 {
            first_ok = z.iter().all(|z| z.abs() <= 3.0);
        }
        for j in 0..3 {
            if z[j].abs() <= 1.0 {
                covered[j] += 1;
            }
        }
    }
    let cov: Vec<f64> = covered.iter().map(|&c| c as f64 / reps as f64).collect();
    let ok = first_ok && cov.iter().all(|&c| (0.58..=0.78).contains(&c));
    outcome(
        ok,
        format!(
            "first replication within 3 se: {first_ok}; 1-sigma coverage m {:.3}, alpha {:.3}, k2 {:.3}",
            cov[0], cov[1], cov[2]
        ),
    )
}

fn criterion_7() -> Outcome {
    let (n, dt) = (2000, 0.25);
    let deltas = vec![dt; n - 1];
    let horizon = (n - 1) as f64 * dt;

    let fp = FellerParams::new(0.09, 0.06, 1.2e-4).unwrap();
    let cfg = SimConfig::new(1, horizon, dt, 7, 0.0).unwrap();
    let y = simulate_feller(&fp, fp.level, &cfg).unwrap().states.remove(0);
    let f = fit_feller(&y, &deltas).unwrap();
    let fz = [
        (f.params.level - fp.level) / f.se_level,
        (f.params.reversion - fp.reversion) / f.se_reversion,
        (f.params.noise_sq - fp.noise_sq) / f.se_noise_sq,
    ];

    let (m, k2) = (0.013, 0.031);
    let y = simulate_lognormal(m, k2, 0.05, &cfg).unwrap().states.remove(0);
    let l = fit_lognormal(&y, &deltas).unwrap();
    let lz = [(l.level - m) / l.se_level, (l.noise_sq - k2) / l.se_noise_sq];

    let ok = fz.iter().chain(&lz).all(|z| z.abs() <= 3.0);
    outcome(
        ok,
        format!(
            "square-root z = ({:.2}, {:.2}, {:.2}); lognormal z = ({:.2}, {:.2})",
            fz[0], fz[1], fz[2], lz[0], lz[1]
        ),
    )
}

fn feller_fit(level: f64, reversion: f64, noise_sq: f64, r_min: f64) -> FellerFit {
    FellerFit {
        params: FellerParams::new(level, reversion, noise_sq).unwrap(),
        se_level: 0.0,
        se_reversion: 0.0,
        se_noise_sq: 0.0,
        r_min,
        n_obs: 0,
        loglik: f64::NAN,
        flags: Vec::new(),
    }
}

fn criterion_8() -> Outcome {
    let (m, a, r_min) = (0.0431, 0.0577, -0.0412);
    let exact = feller_long_run(&feller_fit(m, a, 0.0, r_min)).unwrap().rate.value;
    let reduces = exact == r_min + m;
    let sweep: Vec<f64> = (0..10)
        .map(|i| {
            let k2 = 1e-5 * (1.0 + 3.0 * i as f64);
            feller_long_run(&feller_fit(m, a, k2, r_min)).unwrap().shifted.value
        })
        .collect();
    let decreasing = sweep.windows(2).all(|w| w[1] < w[0]);
    outcome(
        reduces && decreasing,
        format!("k2 = 0 gives r_min + m exactly: {reduces}; y_inf decreasing over 10 points: {decreasing}"),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = rng.random_range(0.01..2.0);
        let p = ExtOuParams::new(
            rng.random_range(-0.05..0.1),
            a,
            rng.random_range(1e-6..1e-3),
            a * rng.random_range(0.01..0.99),
            rng.random_range(0.0..1e-3),
        )
        .unwrap();
        let v = ext_ou_variance(&p).unwrap();
        let k0 = ext_ou_autocorr(&p, 0.0).unwrap();
        worst = worst.max(((k0 - v) / v).abs());
    }

    let us = usa().params;
    let reduced = ExtOuParams::new(us.level, us.reversion, us.noise_sq, 0.01, 0.0).unwrap();
    let reduces = ext_long_run(&reduced).unwrap() == long_run_rate(&us);

    let grid: Vec<f64> = (1..1000).map(|i| i as f64 * 0.0005 * us.reversion).collect();
    let sweep = alpha0_sweep(&us, 9.82e-4, &grid, SweepConvention::Published).unwrap();
    let crossing = sweep_zero_crossing(&sweep).map(|a0| a0 / us.reversion);
    let crossing_ok = crossing.is_some_and(|q| (q - 0.05).abs() <= 0.01);

    outcome(
        worst <= 1e-12 && reduces && crossing_ok,
        format!(
            "max rel |K(0) - Var| = {worst:.1e}; k0^2 = 0 reduces exactly: {reduces}; zero crossing at alpha0/alpha = {}",
            crossing.map_or("none".to_string(), |q| format!("{q:.5}"))
        ),
    )
}

fn criterion_10() -> Outcome {
    let kappa = 0.7;
    let mut worst_small = 0.0f64;
    for ratio in [0.001, 0.01, 0.02, 0.03, 0.04, 0.05] {
        let d = Dimensionless::new(ratio * kappa, kappa).unwrap();
        let (approx, regime) = neg_prob_expansion(&d).unwrap();
        assert_eq!(regime, ExpansionRegime::SmallRatio);
        worst_small = worst_small.max((approx - neg_prob(&d)).abs());
    }
    let mut worst_large = 0.0f64;
    for ratio in [4.0, 4.5, 5.0, 6.0, 8.0] {
        let d = Dimensionless::new(ratio * kappa, kappa).unwrap();
        let (approx, regime) = neg_prob_expansion(&d).unwrap();
        assert_eq!(regime, ExpansionRegime::LargeRatio);
        let exact = neg_prob(&d);
        worst_large = worst_large.max(((approx - exact) / exact).abs());
    }
    outcome(
        worst_small <= 1e-3 && worst_large <= 0.2,
        format!("small-ratio max abs err {worst_small:.2e}; large-ratio max rel err {worst_large:.3}"),
    )
}

fn criterion_11() -> Outcome {
    let rows = [
        usa(),
        row("DEU", -0.0945, 0.6695, 0.0071, 0.0089, 41.72e-4, 2.19e-4),
        row("ZAF", 0.0269, 0.0472, 0.0154, 0.0193, 4.35e-5, 0.34e-5),
        row("ESP", 0.0671, 0.0692, 0.0167, 0.0137, 23.71e-5, 1.26e-5),
    ];
    let grid = TimeGrid::default();
    let mut inside = true;
    let mut parts = Vec::new();
    let mut us_max = f64::NAN;
    for r in &rows {
        let c = discount_rate_envelope(&fit_from(r), 0.01, &grid).unwrap();
        let (lo, hi) = (c.rate_lo.as_ref().unwrap(), c.rate_hi.as_ref().unwrap());
        let ok = (0..c.times.len()).all(|i| lo[i] <= c.rate_central[i] && c.rate_central[i] <= hi[i]);
        inside &= ok;
        let max = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if r.label == "USA" {
            us_max = max;
        }
        parts.push(format!("{} inside {ok} max {max:.4}", r.label));
    }
    outcome(
        inside && us_max < 0.022,
        format!("{}; USA envelope max {us_max:.4} vs ceiling 0.022", parts.join(", ")),
    )
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> Vec<u8> {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_realrate"))
            .args(["verify", "--seed", "42", "--out"])
            .arg(&path)
            .status()
            .expect("run verify");
        assert!(status.code().is_some());
        std::fs::read(&path).expect("verify output")
    };
    let a = run("first.csv");
    let b = run("second.csv");
    outcome(
        !a.is_empty() && a == b,
        format!("two runs of `verify --seed 42`: {} bytes, identical: {}", a.len(), a == b),
    )
}

type Criterion = (u32, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(1)),
        (3, criterion_3, Duration::from_secs(1)),
        (4, criterion_4, Duration::from_secs(120)),
        (5, criterion_5, Duration::from_secs(60)),
        (6, criterion_6, Duration::from_secs(300)),
        (7, criterion_7, Duration::from_secs(300)),
        (8, criterion_8, Duration::from_secs(1)),
        (9, criterion_9, Duration::from_secs(1)),
        (10, criterion_10, Duration::from_secs(1)),
        (11, criterion_11, Duration::from_secs(10)),
        (12, criterion_12, Duration::from_secs(300)),
    ];
    let mut unexpected = Vec::new();
    for (id, check, budget) in criteria {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let passed = out.passed && in_time;
        let known = KNOWN_FAILING.contains(&id);
        let tag = match (passed, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "PASS (listed as known failing)",
        };
        let timing = if in_time {
            format!("{:.2}s", elapsed.as_secs_f64())
        } else {
            format!("{:.2}s, over the {}s budget", elapsed.as_secs_f64(), budget.as_secs())
        };
        println!("criterion {id:>2}: {tag} [{timing}] {}", out.detail);
        if passed == known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
