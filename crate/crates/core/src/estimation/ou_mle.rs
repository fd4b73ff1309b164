//! Exact-discretization maximum likelihood for the OU model.
//!
//! Conditional on rᵢ, r_{i+1} ~ N(m + (rᵢ − m)aᵢ, k²(1 − aᵢ²)/(2α)) with
//! aᵢ = exp(−αΔᵢ). Uniform spacing has a closed form (an AR(1) regression);
//! mixed spacing profiles out m and k² and searches over α alone.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{brent_root, covariance_from_loglik_hessian, golden_section_max, hessian};
use crate::ou::OuParams;
use crate::rates::RealRateSeries;
use crate::timeseries::step_durations;

pub const MIN_OBSERVATIONS: usize = 30;
pub const WARN_OBSERVATIONS: usize = 100;

const ALPHA_FLOOR: f64 = 1e-6;
const ALPHA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    ClosedForm,
    ProfileSearch,
    /// Built from externally supplied numbers (e.g. a published table).
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitFlag {
    /// Fewer than 100 observations.
    FewObservations,
    /// Lag-one regression slope at or above one: no detectable reversion.
    NoMeanReversion,
    /// Lag-one regression slope at or below zero.
    NonPositivePersistence,
    /// α̂ sits on an edge of the search bracket.
    ReversionAtBound,
    /// Observed information was not positive definite; standard errors come
    /// from the asymptotic formulas instead.
    AsymptoticStandardErrors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuFit {
    pub params: OuParams,
    pub se_level: f64,
    pub se_reversion: f64,
    pub se_noise_sq: f64,
    /// Covariance of (m, α, k²) from the inverse observed information.
    pub covariance: Option<[[f64; 3]; 3]>,
    pub n_obs: usize,
    pub loglik: f64,
    pub method: FitMethod,
    pub flags: Vec<FitFlag>,
}

impl OuFit {
    /// Assembles a fit from known numbers, e.g. a row of a published table.
    pub fn from_parts(
        params: OuParams,
        se_level: f64,
        se_reversion: f64,
        se_noise_sq: f64,
        n_obs: usize,
        loglik: f64,
    ) -> Self {
        Self {
            params,
            se_level,
            se_reversion,
            se_noise_sq,
            covariance: None,
            n_obs,
            loglik,
            method: FitMethod::External,
            flags: Vec::new(),
        }
    }

    pub fn has_flag(&self, flag: FitFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Exact Gaussian transition log-likelihood.
pub fn ou_loglik(values: &[f64], deltas: &[f64], p: &OuParams) -> f64 {
    let (m, alpha, k2) = (p.level, p.reversion, p.noise_sq);
    let mut ll = 0.0;
    for (w, &dt) in values.windows(2).zip(deltas) {
        let a = (-alpha * dt).exp();
        let var = k2 * (-(-2.0 * alpha * dt).exp_m1()) / (2.0 * alpha);
        let e = w[1] - m - (w[0] - m) * a;
        ll += -0.5 * (2.0 * PI * var).ln() - e * e / (2.0 * var);
    }
    ll
}

pub fn fit_ou(r: &RealRateSeries) -> Result<OuFit> {
    let deltas = step_durations(&r.series)?.deltas;
    fit_ou_series(&r.values(), &deltas)
}

fn check_inputs(values: &[f64], deltas: &[f64]) -> Result<()> {
    if values.len() < MIN_OBSERVATIONS {
        return Err(Error::TooFewObservations {
            needed: MIN_OBSERVATIONS,
            got: values.len(),
        });
    }
    if deltas.len() + 1 != values.len() || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidParameter(
            "need one positive step duration per transition".into(),
        ));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if !(spread > 1e-14 * mean.abs().max(1e-300)) {
        return Err(Error::DegenerateVariance("the series is constant".into()));
    }
    Ok(())
}

/// Fits with the closed form when spacing is uniform and the lag-one slope
/// lies in (0, 1); otherwise with the profile search over α.
pub fn fit_ou_series(values: &[f64], deltas: &[f64]) -> Result<OuFit> {
    check_inputs(values, deltas)?;
    let uniform = deltas.windows(2).all(|w| w[0] == w[1]);
    let mut flags = Vec::new();
    let estimate = if uniform {
        let ar = ar1_regression(values);
        if ar.slope >= 1.0 {
            flags.push(FitFlag::NoMeanReversion);
            None
        } else if ar.slope <= 0.0 {
            flags.push(FitFlag::NonPositivePersistence);
            None
        } else {
            Some(closed_form(&ar, deltas[0])?)
        }
    } else {
        None
    };
    let (params, method) = match estimate {
        Some(p) => (p, FitMethod::ClosedForm),
        None => {
            let (p, at_bound) = profile_search(values, deltas)?;
            if at_bound {
                flags.push(FitFlag::ReversionAtBound);
            }
            (p, FitMethod::ProfileSearch)
        }
    };
    finish(values, deltas, params, method, flags)
}

/// Always uses the profile search, whatever the spacing.
pub fn fit_ou_profile(values: &[f64], deltas: &[f64]) -> Result<OuFit> {
    check_inputs(values, deltas)?;
    let (p, at_bound) = profile_search(values, deltas)?;
    let flags = if at_bound {
        vec![FitFlag::ReversionAtBound]
    } else {
        Vec::new()
    };
    finish(values, deltas, p, FitMethod::ProfileSearch, flags)
}

struct Ar1 {
    slope: f64,
    sum_x: f64,
    sum_y: f64,
    n: f64,
    resid_var: f64,
}

fn ar1_regression(values: &[f64]) -> Ar1 {
    let x = &values[..values.len() - 1];
    let y = &values[1..];
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sx += xi;
        sy += yi;
        sxx += xi * xi;
        sxy += xi * yi;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let resid_var = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let e = yi - intercept - slope * xi;
            e * e
        })
        .sum::<f64>()
        / n;
    Ar1 {
        slope,
        sum_x: sx,
        sum_y: sy,
        n,
        resid_var,
    }
}

fn closed_form(ar: &Ar1, dt: f64) -> Result<OuParams> {
    let a = ar.slope;
    if !(ar.resid_var > 0.0) {
        return Err(Error::DegenerateVariance("zero residual variance".into()));
    }
    let alpha = -a.ln() / dt;
    let level = (ar.sum_y - a * ar.sum_x) / (ar.n * (1.0 - a));
    let noise_sq = 2.0 * alpha * ar.resid_var / (1.0 - a * a);
    OuParams::new(level, alpha, noise_sq)
}

/// (m̂, v̂) given α, where v = k²/(2α) is the stationary variance.
fn profile_at(values: &[f64], deltas: &[f64], alpha: f64) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (w, &dt) in values.windows(2).zip(deltas) {
        let a = (-alpha * dt).exp();
        let q = -(-2.0 * alpha * dt).exp_m1();
        let b = 1.0 - a;
        num += b * (w[1] - a * w[0]) / q;
        den += b * b / q;
    }
    let m = num / den;
    let mut v = 0.0;
    for (w, &dt) in values.windows(2).zip(deltas) {
        let a = (-alpha * dt).exp();
        let q = -(-2.0 * alpha * dt).exp_m1();
        let e = w[1] - m - (w[0] - m) * a;
        v += e * e / q;
    }
    (m, v / deltas.len() as f64)
}

fn profile_loglik(values: &[f64], deltas: &[f64], alpha: f64) -> f64 {
    let (_, v) = profile_at(values, deltas, alpha);
    let n = deltas.len() as f64;
    let log_q: f64 = deltas
        .iter()
        .map(|&dt| (-(-2.0 * alpha * dt).exp_m1()).ln())
        .sum();
    -0.5 * n * (2.0 * PI * v).ln() - 0.5 * log_q - 0.5 * n
}

/// dℓ/dα at (m̂(α), v̂(α)); by the envelope theorem this is the derivative
/// of the profile log-likelihood.
fn profile_score(values: &[f64], deltas: &[f64], alpha: f64) -> f64 {
    let (m, v) = profile_at(values, deltas, alpha);
    let mut s = 0.0;
    for (w, &dt) in values.windows(2).zip(deltas) {
        let a = (-alpha * dt).exp();
        let q = -(-2.0 * alpha * dt).exp_m1();
        let x = w[0] - m;
        let e = w[1] - m - x * a;
        let d_da = a / q + (e * x * q - e * e * a) / (v * q * q);
        s += -dt * a * d_da;
    }
    s
}

fn profile_search(values: &[f64], deltas: &[f64]) -> Result<(OuParams, bool)> {
    let mean_dt = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let lo = ALPHA_FLOOR;
    let hi = 20.0 / mean_dt;
    let f = |alpha: f64| profile_loglik(values, deltas, alpha);

    // coarse log-spaced scan to find the basin, then golden section inside it
    const SCAN: usize = 240;
    let ratio = (hi / lo).ln() / (SCAN - 1) as f64;
    let grid: Vec<f64> = (0..SCAN).map(|i| lo * (ratio * i as f64).exp()).collect();
    let (best, _) = grid
        .iter()
        .map(|&a| f(a))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(SCAN - 1)];
    let golden = golden_section_max(|u: f64| f(u.exp()), left.ln(), right.ln(), 1e-12).exp();

    // polish on the score, which has a clean sign change at the optimum
    let score = |a: f64| profile_score(values, deltas, a);
    let alpha = brent_root(score, left, right, ALPHA_TOL)
        .filter(|a| f(*a) >= f(golden) - 1e-9)
        .unwrap_or(golden);

    if !alpha.is_finite() {
        return Err(Error::NonConvergence("reversion search produced a non-finite value".into()));
    }
    let at_bound = best == 0 || best == SCAN - 1;
    let (m, v) = profile_at(values, deltas, alpha);
    if !(v > 0.0) {
        return Err(Error::DegenerateVariance("zero residual variance".into()));
    }
    Ok((OuParams::new(m, alpha, 2.0 * alpha * v)?, at_bound))
}

/// Large-sample standard errors for uniform spacing dt:
/// se(α̂)² = (e^{2αΔ} − 1)/(NΔ²), se(m̂)² = (k²/2α)(1 + a)/(N(1 − a)),
/// se(k̂²)² = 2k⁴/N, with N transitions and a = e^{−αΔ}.
pub fn asymptotic_standard_errors(p: &OuParams, transitions: usize, dt: f64) -> [f64; 3] {
    let n = transitions as f64;
    let a = (-p.reversion * dt).exp();
    let se_m = (p.stationary_variance() * (1.0 + a) / (n * (1.0 - a))).sqrt();
    let se_alpha = ((2.0 * p.reversion * dt).exp_m1() / (n * dt * dt)).sqrt();
    let se_k2 = (2.0 * p.noise_sq * p.noise_sq / n).sqrt();
    [se_m, se_alpha, se_k2]
}

fn finish(
    values: &[f64],
    deltas: &[f64],
    params: OuParams,
    method: FitMethod,
    mut flags: Vec<FitFlag>,
) -> Result<OuFit> {
    if values.len() < WARN_OBSERVATIONS {
        flags.insert(0, FitFlag::FewObservations);
    }
    let loglik = ou_loglik(values, deltas, &params);
    let theta = [params.level, params.reversion, params.noise_sq];
    let sd = params.stationary_variance().sqrt();
    let steps = [1e-4 * sd.max(1e-12), 1e-4 * params.reversion, 1e-4 * params.noise_sq];
    let f = |x: &[f64]| {
        if x[1] <= 0.0 || x[2] <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let p = OuParams {
            level: x[0],
            reversion: x[1],
            noise_sq: x[2],
        };
        ou_loglik(values, deltas, &p)
    };
    let h = hessian(f, &theta, &steps);
    let (se, covariance) = match covariance_from_loglik_hessian(&h) {
        Some(cov) => {
            let mut c = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] = cov[(i, j)];
                }
            }
            ([c[0][0].sqrt(), c[1][1].sqrt(), c[2][2].sqrt()], Some(c))
        }
        None => {
            flags.push(FitFlag::AsymptoticStandardErrors);
            let mean_dt = deltas.iter().sum::<f64>() / deltas.len() as f64;
            (asymptotic_standard_errors(&params, deltas.len(), mean_dt), None)
        }
    };
    Ok(OuFit {
        params,
        se_level: se[0],
        se_reversion: se[1],
        se_noise_sq: se[2],
        covariance,
        n_obs: values.len(),
        loglik,
        method,
        flags,
    })
}
