//! Loading, validating, gap-filling and aligning annual/quarterly series.
//!
//! Timestamps are calendar quarters. An ISO date maps to the quarter that
//! contains it, so `1932-12-31` and `1932Q4` are the same stamp; step
//! durations are counted in quarters and divided by four, never by day count.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period {
    pub year: i32,
    /// 1..=4
    pub quarter: u8,
}

impl Period {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::Domain(format!("quarter {quarter} outside 1..=4")));
        }
        Ok(Self { year, quarter })
    }

    /// Annual stamps sit at the fourth quarter (year end).
    pub fn year_end(year: i32) -> Self {
        Self { year, quarter: 4 }
    }

    /// Quarters since year 0, Q1.
    pub fn index(self) -> i64 {
        self.year as i64 * 4 + (self.quarter as i64 - 1)
    }

    pub fn from_index(index: i64) -> Self {
        Self {
            year: index.div_euclid(4) as i32,
            quarter: (index.rem_euclid(4) + 1) as u8,
        }
    }

    /// Position in years, measured at the end of the quarter.
    pub fn years(self) -> f64 {
        (self.index() + 1) as f64 / 4.0
    }

    pub fn offset(self, quarters: i64) -> Self {
        Self::from_index(self.index() + quarters)
    }

    /// Last calendar day of the quarter as `YYYY-MM-DD`.
    pub fn iso_date(self) -> String {
        let (month, day) = match self.quarter {
            1 => (3, 31),
            2 => (6, 30),
            3 => (9, 30),
            _ => (12, 31),
        };
        format!("{:04}-{:02}-{:02}", self.year, month, day)
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.iso_date())
    }
}

impl FromStr for Period {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((year, q)) = s.split_once(['Q', 'q']) {
            let year: i32 = year.parse().map_err(|_| format!("bad year in {s:?}"))?;
            let quarter: u8 = q.parse().map_err(|_| format!("bad quarter in {s:?}"))?;
            return Period::new(year, quarter).map_err(|e| e.to_string());
        }
        let parts: Vec<&str> = s.split('-').collect();
        if parts.len() != 3 || parts[0].len() != 4 {
            return Err(format!("expected YYYY-MM-DD or YYYYQn, got {s:?}"));
        }
        let year: i32 = parts[0].parse().map_err(|_| format!("bad year in {s:?}"))?;
        let month: u32 = parts[1].parse().map_err(|_| format!("bad month in {s:?}"))?;
        let day: u32 = parts[2].parse().map_err(|_| format!("bad day in {s:?}"))?;
        if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
            return Err(format!("invalid calendar date {s:?}"));
        }
        Ok(Period {
            year,
            quarter: ((month - 1) / 3 + 1) as u8,
        })
    }
}

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => 31,
    }
}

/// One dated value; `None` marks a gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub period: Period,
    pub value: Option<f64>,
}

impl Observation {
    pub fn new(period: Period, value: f64) -> Self {
        Self {
            period,
            value: Some(value),
        }
    }

    pub fn gap(period: Period) -> Self {
        Self {
            period,
            value: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Annual,
    Quarterly,
    Mixed,
}

impl Frequency {
    /// Step length in quarters for the uniform frequencies.
    pub fn quarters(self) -> Option<i64> {
        match self {
            Frequency::Annual => Some(4),
            Frequency::Quarterly => Some(1),
            Frequency::Mixed => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    frequency: Frequency,
    observations: Vec<Observation>,
    /// Number of gaps replaced by carry-forward so far.
    filled_gaps: usize,
}

impl TimeSeries {
    /// Validates ordering and spacing and infers the frequency.
    pub fn new(label: impl Into<String>, observations: Vec<Observation>) -> Result<Self> {
        let label = label.into();
        if observations.is_empty() {
            return Err(Error::TooFewObservations { needed: 1, got: 0 });
        }
        for obs in &observations {
            if let Some(v) = obs.value {
                if !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "{label}: non-finite value at {}",
                        obs.period
                    )));
                }
            }
        }
        let mut steps = BTreeSet::new();
        for w in observations.windows(2) {
            let step = w[1].period.index() - w[0].period.index();
            if step <= 0 {
                return Err(Error::NonMonotone(format!(
                    "{label}: {} follows {}",
                    w[1].period, w[0].period
                )));
            }
            steps.insert(step);
        }
        let frequency = infer_frequency(&label, &steps, observations[0].period)?;
        Ok(Self {
            label,
            frequency,
            observations,
            filled_gaps: 0,
        })
    }

    /// Gap-free series with uniform spacing starting at `start`.
    pub fn from_values(
        label: impl Into<String>,
        start: Period,
        frequency: Frequency,
        values: &[f64],
    ) -> Result<Self> {
        let step = frequency.quarters().ok_or_else(|| {
            Error::InvalidParameter("from_values needs a uniform frequency".into())
        })?;
        let observations = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Observation::new(start.offset(step * i as i64), v))
            .collect();
        let mut ts = Self::new(label, observations)?;
        if values.len() == 1 {
            ts.frequency = frequency;
        }
        Ok(ts)
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn filled_gaps(&self) -> usize {
        self.filled_gaps
    }

    pub fn gap_count(&self) -> usize {
        self.observations.iter().filter(|o| o.value.is_none()).count()
    }

    pub fn has_gaps(&self) -> bool {
        self.gap_count() > 0
    }

    pub fn periods(&self) -> Vec<Period> {
        self.observations.iter().map(|o| o.period).collect()
    }

    /// Values of a gap-free series.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.observations
            .iter()
            .map(|o| o.value.ok_or(Error::HasGaps))
            .collect()
    }

    /// Observation times in years (end of quarter).
    pub fn times(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.period.years()).collect()
    }

    /// Same timestamps, new values. Used by the pointwise transforms.
    pub(crate) fn with_values(&self, label: impl Into<String>, values: &[f64]) -> Self {
        debug_assert_eq!(values.len(), self.len());
        Self {
            label: label.into(),
            frequency: self.frequency,
            observations: self
                .observations
                .iter()
                .zip(values)
                .map(|(o, &v)| Observation::new(o.period, v))
                .collect(),
            filled_gaps: self.filled_gaps,
        }
    }

    /// Sub-series over `range`, with the frequency re-inferred.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let mut ts = Self::new(self.label.clone(), self.observations[range].to_vec())?;
        if ts.len() == 1 {
            ts.frequency = self.frequency;
        }
        ts.filled_gaps = self.filled_gaps;
        Ok(ts)
    }

    /// Width in years attributed to each observation: the step that ends at
    /// it, with the first observation taking the first step. A lone
    /// observation takes one step of its declared frequency.
    pub fn coverage_weights(&self) -> Vec<f64> {
        let n = self.len();
        if n == 1 {
            return vec![self.frequency.quarters().unwrap_or(4) as f64 / 4.0];
        }
        let steps = step_durations(self).expect("n >= 2").deltas;
        let mut w = Vec::with_capacity(n);
        w.push(steps[0]);
        w.extend_from_slice(&steps);
        w
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["date", "value"])?;
        for obs in &self.observations {
            let value = obs.value.map(crate::report::fmt_num).unwrap_or_default();
            wtr.write_record([obs.period.iso_date(), value])?;
        }
        wtr.flush()
            .map_err(|e| Error::write("<csv>", e))?;
        Ok(())
    }
}

fn infer_frequency(label: &str, steps: &BTreeSet<i64>, first: Period) -> Result<Frequency> {
    let steps: Vec<i64> = steps.iter().copied().collect();
    match steps.as_slice() {
        [] => Ok(if first.quarter == 4 {
            Frequency::Annual
        } else {
            Frequency::Quarterly
        }),
        [4] => Ok(Frequency::Annual),
        [1] => Ok(Frequency::Quarterly),
        [1, 4] => Ok(Frequency::Mixed),
        other => Err(Error::IrregularSpacing(format!(
            "{label}: steps of {other:?} quarters; only 1 (quarterly) and 4 (annual) are supported"
        ))),
    }
}

/// Per-step spacings Δᵢ in years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDurations {
    pub deltas: Vec<f64>,
}

impl StepDurations {
    pub fn total(&self) -> f64 {
        self.deltas.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.deltas.len() as f64
    }

    /// True when every step has the same length.
    pub fn is_uniform(&self) -> bool {
        self.deltas.windows(2).all(|w| w[0] == w[1])
    }
}

pub fn step_durations(ts: &TimeSeries) -> Result<StepDurations> {
    if ts.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: ts.len(),
        });
    }
    let deltas = ts
        .observations
        .windows(2)
        .map(|w| (w[1].period.index() - w[0].period.index()) as f64 / 4.0)
        .collect();
    Ok(StepDurations { deltas })
}

/// Reads `date,value` rows. A first row whose date does not parse is taken
/// as a header; an empty value cell records a gap.
pub fn load_csv(path: impl AsRef<Path>, label: &str) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label, &path.display().to_string())
}

pub fn read_csv<R: Read>(input: R, label: &str, context: &str) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut observations = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        let parse_err = |message: String| Error::Parse {
            context: context.to_string(),
            line,
            message,
        };
        let date = record.get(0).unwrap_or("");
        if date.is_empty() && record.len() <= 1 {
            continue;
        }
        let period = match date.parse::<Period>() {
            Ok(p) => p,
            Err(_) if i == 0 => continue,
            Err(msg) => return Err(parse_err(msg)),
        };
        let value = match record.get(1).unwrap_or("") {
            "" => None,
            cell => Some(
                cell.parse::<f64>()
                    .map_err(|_| parse_err(format!("bad value {cell:?}")))?,
            ),
        };
        observations.push(Observation { period, value });
    }
    let valid = observations.iter().filter(|o| o.value.is_some()).count();
    if valid < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: valid,
        });
    }
    TimeSeries::new(label, observations)
}

/// Replaces each gap with the most recent prior value.
pub fn fill_gaps(ts: &TimeSeries) -> Result<TimeSeries> {
    let mut last = None;
    let mut filled = 0;
    let mut observations = Vec::with_capacity(ts.len());
    for obs in &ts.observations {
        let value = match obs.value {
            Some(v) => v,
            None => {
                filled += 1;
                last.ok_or(Error::LeadingGap)?
            }
        };
        last = Some(value);
        observations.push(Observation::new(obs.period, value));
    }
    Ok(TimeSeries {
        label: ts.label.clone(),
        frequency: ts.frequency,
        observations,
        filled_gaps: ts.filled_gaps + filled,
    })
}

/// Restricts two gap-free series to their common timestamps.
pub fn align(a: &TimeSeries, b: &TimeSeries) -> Result<(TimeSeries, TimeSeries)> {
    if a.has_gaps() || b.has_gaps() {
        return Err(Error::HasGaps);
    }
    let common: BTreeSet<Period> = {
        let pa: BTreeSet<Period> = a.observations.iter().map(|o| o.period).collect();
        b.observations
            .iter()
            .map(|o| o.period)
            .filter(|p| pa.contains(p))
            .collect()
    };
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let restrict = |ts: &TimeSeries| -> Result<TimeSeries> {
        let obs: Vec<Observation> = ts
            .observations
            .iter()
            .filter(|o| common.contains(&o.period))
            .copied()
            .collect();
        let mut out = TimeSeries::new(ts.label.clone(), obs)?;
        if out.len() == 1 {
            out.frequency = ts.frequency;
        }
        out.filled_gaps = ts.filled_gaps;
        Ok(out)
    };
    Ok((restrict(a)?, restrict(b)?))
}
