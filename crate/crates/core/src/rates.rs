//! Nominal log rates, forward-averaged inflation and real rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{align, fill_gaps, step_durations, Period, TimeSeries};

pub const DEFAULT_WINDOW_YEARS: u32 = 10;

/// r(t) = n(t) − i(t), together with the aligned inputs it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealRateSeries {
    pub series: TimeSeries,
    pub nominal: Option<TimeSeries>,
    pub inflation: Option<TimeSeries>,
    pub window_years: u32,
    /// Timestamps whose inflation window was cut short by a frequency change.
    pub truncated_windows: Vec<Period>,
}

impl RealRateSeries {
    /// Wraps an already-computed real-rate series (e.g. read from disk).
    pub fn from_series(series: TimeSeries) -> Result<Self> {
        if series.has_gaps() {
            return Err(Error::HasGaps);
        }
        Ok(Self {
            series,
            nominal: None,
            inflation: None,
            window_years: DEFAULT_WINDOW_YEARS,
            truncated_windows: Vec::new(),
        })
    }

    pub fn values(&self) -> Vec<f64> {
        self.series.values().expect("real-rate series are gap-free")
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

/// n(t) = ln(1 + β(t)).
pub fn nominal_log_rate(yields: &TimeSeries) -> Result<TimeSeries> {
    let values = yields.values()?;
    let mut out = Vec::with_capacity(values.len());
    for (obs, &beta) in yields.observations().iter().zip(&values) {
        if beta <= -1.0 {
            return Err(Error::Domain(format!(
                "{}: yield {beta} at {} is not above -1",
                yields.label, obs.period
            )));
        }
        out.push(beta.ln_1p());
    }
    Ok(yields.with_values(format!("{} (log)", yields.label), &out))
}

/// Forward moving average of ln(1 + C) together with the windows that hit
/// a frequency change.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardAverage {
    pub series: TimeSeries,
    pub truncated: Vec<Period>,
}

/// i(t) = mean of ln(1 + C) over the `window_years` of observations starting
/// at t.
///
/// The window holds `window_years` observations on annual stretches and four
/// times as many on quarterly ones. A window never crosses a change of
/// spacing: it stops at the boundary and the start date is reported in
/// `truncated`. Starts whose window would run past the end of the data are
/// dropped, so the output loses one window (minus one point) at the right.
pub fn forward_inflation(cpi_rates: &TimeSeries, window_years: u32) -> Result<ForwardAverage> {
    if window_years == 0 {
        return Err(Error::InvalidParameter("window_years must be positive".into()));
    }
    let values = cpi_rates.values()?;
    let mut logs = Vec::with_capacity(values.len());
    for (obs, &c) in cpi_rates.observations().iter().zip(&values) {
        if c <= -1.0 {
            return Err(Error::Domain(format!(
                "{}: inflation {c} at {} is not above -1",
                cpi_rates.label, obs.period
            )));
        }
        logs.push(c.ln_1p());
    }
    let n = logs.len();
    let steps = if n >= 2 {
        step_durations(cpi_rates)?.deltas
    } else {
        Vec::new()
    };
    let local_step = |j: usize| -> f64 {
        if steps.is_empty() {
            cpi_rates.frequency().quarters().unwrap_or(4) as f64 / 4.0
        } else if j < steps.len() {
            steps[j]
        } else {
            steps[j - 1]
        }
    };

    let mut out_idx = Vec::new();
    let mut out_vals = Vec::new();
    let mut truncated = Vec::new();
    for j in 0..n {
        let step = local_step(j);
        let target = (window_years as f64 / step).round() as usize;
        let mut end = j + 1;
        let mut cut = false;
        while end - j < target {
            if end >= n {
                break;
            }
            if steps[end - 1] != step {
                cut = true;
                break;
            }
            end += 1;
        }
        if end - j < target && !cut {
            continue;
        }
        let window = &logs[j..end];
        out_vals.push(window.iter().sum::<f64>() / window.len() as f64);
        out_idx.push(j);
        if cut {
            truncated.push(cpi_rates.observations()[j].period);
        }
    }
    if out_idx.is_empty() {
        return Err(Error::TooFewObservations {
            needed: (window_years as f64 / local_step(0)).round() as usize,
            got: n,
        });
    }
    let first = out_idx[0];
    let last = *out_idx.last().unwrap();
    debug_assert_eq!(last - first + 1, out_idx.len());
    let base = cpi_rates.slice(first..last + 1)?;
    Ok(ForwardAverage {
        series: base.with_values(format!("{} (forward {window_years}y)", cpi_rates.label), &out_vals),
        truncated,
    })
}

/// Pointwise r = n − i on identical timestamps.
pub fn real_rate(nominal: &TimeSeries, inflation: &TimeSeries) -> Result<RealRateSeries> {
    real_rate_with_window(nominal, inflation, DEFAULT_WINDOW_YEARS)
}

pub fn real_rate_with_window(
    nominal: &TimeSeries,
    inflation: &TimeSeries,
    window_years: u32,
) -> Result<RealRateSeries> {
    if nominal.periods() != inflation.periods() {
        return Err(Error::Misaligned(format!(
            "{} has {} points, {} has {}; timestamps differ",
            nominal.label,
            nominal.len(),
            inflation.label,
            inflation.len()
        )));
    }
    let n = nominal.values()?;
    let i = inflation.values()?;
    let r: Vec<f64> = n.iter().zip(&i).map(|(a, b)| a - b).collect();
    Ok(RealRateSeries {
        series: nominal.with_values(format!("real rate ({} - {})", nominal.label, inflation.label), &r),
        nominal: Some(nominal.clone()),
        inflation: Some(inflation.clone()),
        window_years,
        truncated_windows: Vec::new(),
    })
}

/// Full transform from raw yields and CPI change rates: fill gaps, take
/// logs, forward-average inflation, align and subtract.
pub fn build_real_rates(
    yields: &TimeSeries,
    cpi_rates: &TimeSeries,
    window_years: u32,
) -> Result<RealRateSeries> {
    let nominal = nominal_log_rate(&fill_gaps(yields)?)?;
    let forward = forward_inflation(&fill_gaps(cpi_rates)?, window_years)?;
    let (n, i) = align(&nominal, &forward.series)?;
    let mut real = real_rate_with_window(&n, &i, window_years)?;
    real.truncated_windows = forward
        .truncated
        .into_iter()
        .filter(|p| real.series.periods().contains(p))
        .collect();
    Ok(real)
}

/// Converts CPI index levels into annualized change rates,
/// C = (I_k / I_{k-1})^(1/Δ) − 1, dated at the later observation.
pub fn cpi_levels_to_rates(levels: &TimeSeries) -> Result<TimeSeries> {
    let values = levels.values()?;
    let deltas = step_durations(levels)?.deltas;
    let mut rates = Vec::with_capacity(values.len() - 1);
    for (k, w) in values.windows(2).enumerate() {
        if w[0] <= 0.0 || w[1] <= 0.0 {
            return Err(Error::Domain(format!(
                "{}: CPI levels must be positive",
                levels.label
            )));
        }
        rates.push((w[1] / w[0]).powf(1.0 / deltas[k]) - 1.0);
    }
    let tail = levels.slice(1..levels.len())?;
    Ok(tail.with_values(format!("{} (rate)", levels.label), &rates))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeRateStats {
    pub fraction_negative: f64,
    pub years_negative: f64,
    pub span_years: f64,
}

/// Duration-weighted share of time with r < 0. Each observation stands for
/// the step that ends at it.
pub fn negative_stats(r: &RealRateSeries) -> Result<NegativeRateStats> {
    if r.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    let weights = r.series.coverage_weights();
    let values = r.values();
    let span: f64 = weights.iter().sum();
    let negative: f64 = weights
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v < 0.0)
        .map(|(w, _)| w)
        .sum();
    let fraction = negative / span;
    Ok(NegativeRateStats {
        fraction_negative: fraction,
        years_negative: fraction * span,
        span_years: span,
    })
}
