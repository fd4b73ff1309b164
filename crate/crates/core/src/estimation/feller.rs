//! Maximum likelihood for the square-root (Feller) diffusion
//! dy = −α(y − m)dt + k√y dw on a positive series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{covariance_from_loglik_hessian, hessian, nelder_mead};
use crate::special::ln_bessel_i;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FellerParams {
    pub level: f64,
    pub reversion: f64,
    pub noise_sq: f64,
}

impl FellerParams {
    pub fn new(level: f64, reversion: f64, noise_sq: f64) -> Result<Self> {
        if !(level > 0.0 && level.is_finite()) {
            return Err(Error::InvalidParameter(format!("level must be positive, got {level}")));
        }
        if !(reversion > 0.0 && reversion.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reversion must be positive, got {reversion}"
            )));
        }
        if !(noise_sq >= 0.0 && noise_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise_sq must be nonnegative, got {noise_sq}"
            )));
        }
        Ok(Self {
            level,
            reversion,
            noise_sq,
        })
    }

    /// 2αm ≥ k²: the process never reaches zero.
    pub fn satisfies_feller_condition(&self) -> bool {
        2.0 * self.reversion * self.level >= self.noise_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FellerFlag {
    /// 2αm < k²: zero is attainable.
    FellerConditionViolated,
    /// Observed information was not positive definite; standard errors are
    /// from the diagonal only.
    DiagonalStandardErrors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FellerFit {
    pub params: FellerParams,
    pub se_level: f64,
    pub se_reversion: f64,
    pub se_noise_sq: f64,
    /// Shift subtracted from the rates before fitting (zero if none).
    pub r_min: f64,
    pub n_obs: usize,
    pub loglik: f64,
    pub flags: Vec<FellerFlag>,
}

impl FellerFit {
    pub fn with_shift(mut self, r_min: f64) -> Self {
        self.r_min = r_min;
        self
    }
}

/// ln p(y_next | y) over a step `dt`, from the noncentral chi-square law.
pub fn feller_log_transition(p: &FellerParams, y: f64, y_next: f64, dt: f64) -> f64 {
    let (m, a, k2) = (p.level, p.reversion, p.noise_sq);
    let decay = (-a * dt).exp();
    let c = 2.0 * a / (k2 * -(-a * dt).exp_m1());
    let u = c * y * decay;
    let v = c * y_next;
    let q = 2.0 * a * m / k2 - 1.0;
    c.ln() - u - v + 0.5 * q * (v / u).ln() + ln_bessel_i(q, 2.0 * (u * v).sqrt())
}

fn loglik(values: &[f64], deltas: &[f64], p: &FellerParams) -> f64 {
    values
        .windows(2)
        .zip(deltas)
        .map(|(w, &dt)| feller_log_transition(p, w[0], w[1], dt))
        .sum()
}

/// Conditional least squares on y' = a·y + b + e with uniform-step
/// moments; only used as a starting point.
fn cls_start(values: &[f64], mean_dt: f64) -> [f64; 3] {
    let x = &values[..values.len() - 1];
    let y = &values[1..];
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let mut slope = sxy / sxx;
    if !(slope > 0.0 && slope < 1.0) {
        slope = (-0.1f64).exp();
    }
    let alpha = -slope.ln() / mean_dt;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let level = {
        let m = (my - slope * mx) / (1.0 - slope);
        if m > 0.0 {
            m
        } else {
            mean
        }
    };
    let intercept = level * (1.0 - slope);
    let resid2 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / n;
    // Var(y'|y) = k²[y(a − a²)/α + m(1 − a)²/(2α)]
    let scale = x
        .iter()
        .map(|&yi| yi * (slope - slope * slope) / alpha + level * (1.0 - slope).powi(2) / (2.0 * alpha))
        .sum::<f64>()
        / n;
    let noise_sq = (resid2 / scale).max(1e-12);
    [level, alpha, noise_sq]
}

pub fn fit_feller(values: &[f64], deltas: &[f64]) -> Result<FellerFit> {
    if values.len() < 3 {
        return Err(Error::TooFewObservations {
            needed: 3,
            got: values.len(),
        });
    }
    if deltas.len() + 1 != values.len() || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidParameter(
            "need one positive step duration per transition".into(),
        ));
    }
    if let Some(bad) = values.iter().find(|&&y| !(y > 0.0)) {
        return Err(Error::Domain(format!(
            "square-root model needs a strictly positive series, found {bad}"
        )));
    }
    let mean_dt = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let start = cls_start(values, mean_dt);

    let objective = |x: &[f64]| {
        let p = FellerParams {
            level: x[0].exp(),
            reversion: x[1].exp(),
            noise_sq: x[2].exp(),
        };
        let ll = loglik(values, deltas, &p);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };
    let mut x: Vec<f64> = start.iter().map(|v| v.ln()).collect();
    let mut converged = false;
    // restarts shake the simplex out of premature collapse
    for _ in 0..4 {
        let min = nelder_mead(objective, &x, &[0.2, 0.3, 0.3], 1e-13, 20_000);
        let moved = min.x.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = min.x;
        if min.converged && moved < 1e-7 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence("square-root likelihood search".into()));
    }
    let params = FellerParams::new(x[0].exp(), x[1].exp(), x[2].exp())?;
    let ll = loglik(values, deltas, &params);

    let mut flags = Vec::new();
    if !params.satisfies_feller_condition() {
        flags.push(FellerFlag::FellerConditionViolated);
    }
    let theta = [params.level, params.reversion, params.noise_sq];
    let steps: Vec<f64> = theta.iter().map(|v| 1e-4 * v).collect();
    let f = |t: &[f64]| {
        if t.iter().any(|v| !(*v > 0.0)) {
            return f64::NEG_INFINITY;
        }
        let p = FellerParams {
            level: t[0],
            reversion: t[1],
            noise_sq: t[2],
        };
        loglik(values, deltas, &p)
    };
    let h = hessian(f, &theta, &steps);
    let se = match covariance_from_loglik_hessian(&h) {
        Some(cov) => [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt(), cov[(2, 2)].sqrt()],
        None => {
            flags.push(FellerFlag::DiagonalStandardErrors);
            let d = |i: usize| 1.0 / (-h[(i, i)]).max(f64::MIN_POSITIVE).sqrt();
            [d(0), d(1), d(2)]
        }
    };
    Ok(FellerFit {
        params,
        se_level: se[0],
        se_reversion: se[1],
        se_noise_sq: se[2],
        r_min: 0.0,
        n_obs: values.len(),
        loglik: ll,
        flags,
    })
}
