//! Maximum likelihood for geometric Brownian motion dy = m·y dt + k·y dw.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LognormalFit {
    /// Drift m_L (1/year).
    pub level: f64,
    /// Squared volatility k_L² (1/year).
    pub noise_sq: f64,
    pub se_level: f64,
    pub se_noise_sq: f64,
    pub r_min: f64,
    pub n_obs: usize,
    pub loglik: f64,
}

impl LognormalFit {
    pub fn with_shift(mut self, r_min: f64) -> Self {
        self.r_min = r_min;
        self
    }

    /// m_L − k_L²/2, the growth rate of ln y.
    pub fn log_drift(&self) -> f64 {
        self.level - 0.5 * self.noise_sq
    }
}

/// Log-increments are Normal((m − k²/2)Δ, k²Δ), which gives closed forms.
pub fn fit_lognormal(values: &[f64], deltas: &[f64]) -> Result<LognormalFit> {
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
            "lognormal model needs a strictly positive series, found {bad}"
        )));
    }
    let incs: Vec<f64> = values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let n = incs.len() as f64;
    let span: f64 = deltas.iter().sum();
    let drift = incs.iter().sum::<f64>() / span;
    let noise_sq = incs
        .iter()
        .zip(deltas)
        .map(|(x, &dt)| (x - drift * dt).powi(2) / dt)
        .sum::<f64>()
        / n;
    let level = drift + 0.5 * noise_sq;
    let se_noise_sq = (2.0 * noise_sq * noise_sq / n).sqrt();
    let se_level = (noise_sq / span + 0.25 * se_noise_sq * se_noise_sq).sqrt();
    let loglik = if noise_sq > 0.0 {
        incs.iter()
            .zip(deltas)
            .map(|(x, &dt)| {
                let var = noise_sq * dt;
                -0.5 * (2.0 * PI * var).ln() - (x - drift * dt).powi(2) / (2.0 * var)
            })
            .sum()
    } else {
        f64::INFINITY
    };
    Ok(LognormalFit {
        level,
        noise_sq,
        se_level,
        se_noise_sq,
        r_min: 0.0,
        n_obs: values.len(),
        loglik,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn deterministic_exponential() {
        let deltas = vec![0.25; 99];
        let values: Vec<f64> = (0..100).map(|i| 0.03 * (0.02 * 0.25 * i as f64).exp()).collect();
        let fit = fit_lognormal(&values, &deltas).unwrap();
        assert!((fit.level - 0.02).abs() < 1e-12);
        assert!(fit.noise_sq < 1e-20);
    }

    #[test]
    fn recovers_synthetic_gbm() {
        let (m, k2): (f64, f64) = (0.013, 0.031);
        let deltas = vec![0.25; 1999];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut y = 0.05;
        let mut values = vec![y];
        for &dt in &deltas {
            let z: f64 = StandardNormal.sample(&mut rng);
            y *= ((m - 0.5 * k2) * dt + (k2 * dt).sqrt() * z).exp();
            values.push(y);
        }
        let fit = fit_lognormal(&values, &deltas).unwrap();
        assert!((fit.level - m).abs() < 3.0 * fit.se_level);
        assert!((fit.noise_sq - k2).abs() < 3.0 * fit.se_noise_sq);
        let scaled: Vec<f64> = values.iter().map(|v| v * 7.5).collect();
        let again = fit_lognormal(&scaled, &deltas).unwrap();
        assert!((again.level - fit.level).abs() < 1e-12);
        assert!((again.noise_sq - fit.noise_sq).abs() < 1e-12 * fit.noise_sq);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(fit_lognormal(&[0.1, -0.1, 0.2], &[1.0, 1.0]).is_err());
    }
}
