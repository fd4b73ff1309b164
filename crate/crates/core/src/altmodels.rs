//! Positive-rate alternatives applied to the shifted rate y = r − r_min
//! (square-root and lognormal), and the two-level OU model in which the
//! reversion level itself follows a slower OU process.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{Estimate, FellerFit};
use crate::ou::{long_run_rate, OuParams};
use crate::rates::RealRateSeries;
use crate::report::fmt_num;
use crate::special::digamma;
use crate::timeseries::TimeSeries;

/// Value given to shifted observations that would otherwise be ≤ 0.
pub const SHIFT_NUDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedSeries {
    pub y: TimeSeries,
    /// min(r) when negative, otherwise 0.
    pub r_min: f64,
    /// Indices whose shifted value was raised to [`SHIFT_NUDGE`].
    pub nudged: Vec<usize>,
}

/// y = r − r_min with r_min = min(r, 0); points landing at zero are nudged
/// up to keep the series strictly positive.
pub fn shift_series(r: &RealRateSeries) -> Result<ShiftedSeries> {
    let values = r.values();
    if values.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let r_min = min.min(0.0);
    let mut nudged = Vec::new();
    let y: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let s = v - r_min;
            if s <= 0.0 {
                nudged.push(i);
                SHIFT_NUDGE
            } else {
                s
            }
        })
        .collect();
    Ok(ShiftedSeries {
        y: r.series.with_values(format!("{} (shifted)", r.series.label), &y),
        r_min,
        nudged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FellerLongRun {
    /// y^F∞ for the shifted process.
    pub shifted: Estimate,
    /// r^F∞ = r_min + y^F∞.
    pub rate: Estimate,
}

/// y^F∞ = 2m/(1 + √(1 + 2k²/α²)) with independent-error delta method.
pub fn feller_long_run(f: &FellerFit) -> Result<FellerLongRun> {
    let p = f.params;
    let (m, a, k2) = (p.level, p.reversion, p.noise_sq);
    if !(a > 0.0) {
        return Err(Error::InvalidParameter("reversion must be positive".into()));
    }
    let s = (1.0 + 2.0 * k2 / (a * a)).sqrt();
    let y = 2.0 * m / (1.0 + s);
    let dy_ds = -2.0 * m / ((1.0 + s) * (1.0 + s));
    let g = [
        2.0 / (1.0 + s),
        dy_ds * (-2.0 * k2 / (a * a * a)) / s,
        dy_ds / (a * a * s),
    ];
    let se = (g[0] * g[0] * f.se_level * f.se_level
        + g[1] * g[1] * f.se_reversion * f.se_reversion
        + g[2] * g[2] * f.se_noise_sq * f.se_noise_sq)
        .sqrt();
    Ok(FellerLongRun {
        shifted: Estimate::new(y, se),
        rate: Estimate::new(f.r_min + y, se),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LognormalRegime {
    /// m_L < k_L²/2: D(t) tends to a positive constant.
    Constant,
    /// m_L > k_L²/2: D(t) decays exponentially.
    Exponential,
    /// m_L = k_L²/2: D(t) decays like t^{−1/2}.
    PowerLaw,
}

pub fn lognormal_regime(level: f64, noise_sq: f64) -> Result<LognormalRegime> {
    if !(noise_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lognormal regime needs k² > 0, got {noise_sq}"
        )));
    }
    let half = 0.5 * noise_sq;
    let diff = level - half;
    let band = 1e-12 * level.abs().max(half);
    Ok(if diff.abs() <= band {
        LognormalRegime::PowerLaw
    } else if diff > 0.0 {
        LognormalRegime::Exponential
    } else {
        LognormalRegime::Constant
    })
}

/// y^L∞ = (m − k²/2)/[ψ(2m/k²) + 1/(2m/k² − 1)], exponential regime only.
pub fn lognormal_long_run(level: f64, noise_sq: f64) -> Result<f64> {
    if lognormal_regime(level, noise_sq)? != LognormalRegime::Exponential {
        return Err(Error::Domain(format!(
            "long-run rate exists only for m > k²/2 (m = {level}, k² = {noise_sq})"
        )));
    }
    let x = 2.0 * level / noise_sq;
    Ok((level - 0.5 * noise_sq) / (digamma(x)? + 1.0 / (x - 1.0)))
}

/// How the initial shifted state is read in the lognormal mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanReading {
    /// (r0 + r_min)e^{mt} − r_min
    #[default]
    AsPrinted,
    /// r_min + (r0 − r_min)e^{mt}, i.e. y0 = r0 − r_min
    ShiftedState,
}

pub fn lognormal_mean(r0: f64, r_min: f64, level: f64, t: f64, reading: MeanReading) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    let g = (level * t).exp();
    Ok(match reading {
        MeanReading::AsPrinted => (r0 + r_min) * g - r_min,
        MeanReading::ShiftedState => r_min + (r0 - r_min) * g,
    })
}

/// dr = −α(r − m)dt + k dw, dm = −α₀(m − m₀)dt + k₀ dw₀, independent noises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtOuParams {
    pub base_level: f64,
    pub reversion: f64,
    pub noise_sq: f64,
    pub slow_reversion: f64,
    pub slow_noise_sq: f64,
}

impl ExtOuParams {
    pub fn new(
        base_level: f64,
        reversion: f64,
        noise_sq: f64,
        slow_reversion: f64,
        slow_noise_sq: f64,
    ) -> Result<Self> {
        let p = Self {
            base_level,
            reversion,
            noise_sq,
            slow_reversion,
            slow_noise_sq,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.base_level.is_finite() {
            return Err(Error::InvalidParameter("base level is not finite".into()));
        }
        if !(self.reversion > self.slow_reversion && self.slow_reversion > 0.0)
            || !self.reversion.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "need α > α₀ > 0, got α = {}, α₀ = {}",
                self.reversion, self.slow_reversion
            )));
        }
        if !(self.noise_sq >= 0.0 && self.slow_noise_sq >= 0.0)
            || !self.noise_sq.is_finite()
            || !self.slow_noise_sq.is_finite()
        {
            return Err(Error::InvalidParameter("noise terms must be finite and ≥ 0".into()));
        }
        Ok(())
    }

    pub fn fast(&self) -> OuParams {
        OuParams {
            level: self.base_level,
            reversion: self.reversion,
            noise_sq: self.noise_sq,
        }
    }
}

fn ext_coefficients(p: &ExtOuParams) -> (f64, f64) {
    let (a, a0, k2, k02) = (p.reversion, p.slow_reversion, p.noise_sq, p.slow_noise_sq);
    let d = a * a - a0 * a0;
    let fast = k2 / (2.0 * a) - k02 * a / (2.0 * d);
    let slow = k02 * a * a / (2.0 * d * a0);
    (fast, slow)
}

/// Stationary variance of r, equal to the autocorrelation at lag zero:
/// k²/2α + k₀²α/(2α₀(α + α₀)).
pub fn ext_ou_variance(p: &ExtOuParams) -> Result<f64> {
    p.validate()?;
    let (a, a0) = (p.reversion, p.slow_reversion);
    Ok(p.noise_sq / (2.0 * a) + p.slow_noise_sq * a / (2.0 * a0 * (a + a0)))
}

/// k²/2α + k₀²/2α₀, the variance when α₀ ≪ α.
pub fn ext_ou_variance_slow_limit(p: &ExtOuParams) -> Result<f64> {
    p.validate()?;
    Ok(p.noise_sq / (2.0 * p.reversion) + p.slow_noise_sq / (2.0 * p.slow_reversion))
}

/// K(τ) as a fast and a slow exponential.
pub fn ext_ou_autocorr(p: &ExtOuParams, lag: f64) -> Result<f64> {
    p.validate()?;
    if !(lag >= 0.0) {
        return Err(Error::Domain(format!("lag must be nonnegative, got {lag}")));
    }
    let (fast, slow) = ext_coefficients(p);
    Ok(fast * (-p.reversion * lag).exp() + slow * (-p.slow_reversion * lag).exp())
}

/// m₀ − ∫₀^∞ K(τ)dτ = m₀ − k²/2α² − k₀²/2α₀².
pub fn ext_long_run(p: &ExtOuParams) -> Result<f64> {
    p.validate()?;
    let slow = p.slow_noise_sq / (2.0 * p.slow_reversion * p.slow_reversion);
    Ok(long_run_rate(&p.fast()) - slow)
}

/// How the slow noise is backed out of the historical variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepConvention {
    /// m₀ − ½[k²/2α² + (Var − k²/2α)/α₀]
    #[default]
    Published,
    /// k₀² from the exact variance, then [`ext_long_run`].
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub slow_reversion: f64,
    pub long_run_rate: f64,
}

/// r∞^ext as a function of α₀ for fixed OU parameters and a historical
/// variance of the rate.
pub fn alpha0_sweep(
    p: &OuParams,
    historical_variance: f64,
    grid: &[f64],
    convention: SweepConvention,
) -> Result<Vec<SweepPoint>> {
    p.validate()?;
    let share = historical_variance - p.stationary_variance();
    if share < 0.0 {
        return Err(Error::Domain(format!(
            "historical variance {historical_variance} is below the fitted OU variance {}; \
             implied slow share {share}",
            p.stationary_variance()
        )));
    }
    if let Some(bad) = grid.iter().find(|&&a0| !(a0 > 0.0 && a0 < p.reversion)) {
        return Err(Error::InvalidParameter(format!(
            "α₀ grid values must lie in (0, {}), got {bad}",
            p.reversion
        )));
    }
    let fast_term = p.noise_sq / (2.0 * p.reversion * p.reversion);
    Ok(grid
        .iter()
        .map(|&a0| {
            let r = match convention {
                SweepConvention::Published => p.level - 0.5 * (fast_term + share / a0),
                SweepConvention::Consistent => {
                    let k02 = 2.0 * a0 * (p.reversion + a0) * share / p.reversion;
                    p.level - fast_term - k02 / (2.0 * a0 * a0)
                }
            };
            SweepPoint {
                slow_reversion: a0,
                long_run_rate: r,
            }
        })
        .collect())
}

/// First α₀ where the swept rate crosses zero, by linear interpolation.
pub fn sweep_zero_crossing(points: &[SweepPoint]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.long_run_rate == 0.0 {
            Some(a.slow_reversion)
        } else if a.long_run_rate.signum() != b.long_run_rate.signum() {
            let f = a.long_run_rate / (a.long_run_rate - b.long_run_rate);
            Some(a.slow_reversion + f * (b.slow_reversion - a.slow_reversion))
        } else {
            None
        }
    })
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["alpha0", "r_inf_ext"])?;
    for p in points {
        wtr.write_record([fmt_num(p.slow_reversion), fmt_num(p.long_run_rate)])?;
    }
    wtr.flush().map_err(|e| Error::write("<csv>", e))?;
    Ok(())
}
