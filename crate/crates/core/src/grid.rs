use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing, strictly positive evaluation times in years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("empty time grid".into()));
        }
        if points.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter(
                "time grid must contain only finite t > 0".into(),
            ));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "time grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn linear(start: f64, stop: f64, n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::InvalidParameter("grid needs at least one point".into())),
            1 => Self::new(vec![start]),
            _ => {
                let h = (stop - start) / (n - 1) as f64;
                Self::new((0..n).map(|i| start + h * i as f64).collect())
            }
        }
    }

    pub fn geometric(start: f64, stop: f64, n: usize) -> Result<Self> {
        if !(start > 0.0 && stop > 0.0) {
            return Err(Error::InvalidParameter(
                "geometric grid bounds must be positive".into(),
            ));
        }
        match n {
            0 => Err(Error::InvalidParameter("grid needs at least one point".into())),
            1 => Self::new(vec![start]),
            _ => {
                let ratio = (stop / start).ln() / (n - 1) as f64;
                let mut pts: Vec<f64> = (0..n).map(|i| start * (ratio * i as f64).exp()).collect();
                pts[n - 1] = stop;
                Self::new(pts)
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for TimeGrid {
    /// 200 geometric points from a quarter to 500 years.
    fn default() -> Self {
        Self::geometric(0.25, 500.0, 200).expect("valid default grid")
    }
}

impl FromStr for TimeGrid {
    type Err = Error;

    /// `geometric:<start>:<stop>:<n>` or `linear:<start>:<stop>:<n>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad grid spec {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let start: f64 = parts[1].parse().map_err(|_| bad())?;
        let stop: f64 = parts[2].parse().map_err(|_| bad())?;
        let n: usize = parts[3].parse().map_err(|_| bad())?;
        match parts[0] {
            "geometric" => Self::geometric(start, stop, n),
            "linear" => Self::linear(start, stop, n),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} points in [{}, {}]",
            self.points.len(),
            self.points[0],
            self.points[self.points.len() - 1]
        )
    }
}
