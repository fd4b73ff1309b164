//! Closed-form analytics for the Ornstein-Uhlenbeck rate model
//! dr = −α(r − m)dt + k dw.
//!
//! Everything here is a pure function of [`OuParams`]: stationary moments,
//! the autocorrelation, the stationary probability of negative rates, the
//! exact log-discount function and its long-run slope, the dimensionless
//! (μ, κ) coordinates with their four-region classification, and discount
//! rate curves with ±1σ envelopes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::OuFit;
use crate::grid::TimeGrid;
use crate::report::fmt_num;
use crate::special::erfc;

/// Lower clamp for α and k² when building envelopes.
pub const ENVELOPE_FLOOR: f64 = 1e-6;

pub const DEFAULT_R0: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    /// Mean-reversion level m (1/year). May be negative.
    pub level: f64,
    /// Reversion strength α (1/year).
    pub reversion: f64,
    /// Squared noise amplitude k² (1/year³).
    pub noise_sq: f64,
}

impl OuParams {
    pub fn new(level: f64, reversion: f64, noise_sq: f64) -> Result<Self> {
        let p = Self {
            level,
            reversion,
            noise_sq,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.level.is_finite() {
            return Err(Error::InvalidParameter(format!("level {} is not finite", self.level)));
        }
        if !(self.reversion > 0.0) || !self.reversion.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "reversion must be positive, got {}",
                self.reversion
            )));
        }
        if !(self.noise_sq >= 0.0) || !self.noise_sq.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise_sq must be nonnegative, got {}",
                self.noise_sq
            )));
        }
        Ok(())
    }

    /// k²/(2α)
    pub fn stationary_variance(&self) -> f64 {
        self.noise_sq / (2.0 * self.reversion)
    }
}

/// Stationary (mean, variance) = (m, k²/2α).
pub fn stationary_moments(p: &OuParams) -> Result<(f64, f64)> {
    p.validate()?;
    Ok((p.level, p.stationary_variance()))
}

/// K(τ) = (k²/2α)·exp(−ατ).
pub fn autocorrelation(p: &OuParams, lag: f64) -> Result<f64> {
    p.validate()?;
    if !(lag >= 0.0) {
        return Err(Error::Domain(format!("lag must be nonnegative, got {lag}")));
    }
    Ok(p.stationary_variance() * (-p.reversion * lag).exp())
}

/// μ = m/α and κ = k/α^{3/2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensionless {
    pub scaled_mean: f64,
    pub scaled_noise: f64,
}

impl Dimensionless {
    pub fn new(scaled_mean: f64, scaled_noise: f64) -> Result<Self> {
        if !(scaled_noise >= 0.0) || !scaled_mean.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need finite mean and nonnegative noise, got ({scaled_mean}, {scaled_noise})"
            )));
        }
        Ok(Self {
            scaled_mean,
            scaled_noise,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.scaled_mean / self.scaled_noise
    }
}

pub fn dimensionless(p: &OuParams) -> Dimensionless {
    Dimensionless {
        scaled_mean: p.level / p.reversion,
        scaled_noise: p.noise_sq.sqrt() / p.reversion.powf(1.5),
    }
}

/// Stationary probability of a negative rate, ½·erfc(μ/κ).
///
/// With κ = 0 the rate sits at m forever: the result is 0 for μ > 0, 1 for
/// μ < 0 and ½ for μ = 0.
pub fn neg_prob(d: &Dimensionless) -> f64 {
    if d.scaled_noise == 0.0 {
        return match d.scaled_mean.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 0.0,
            Some(std::cmp::Ordering::Less) => 1.0,
            _ => 0.5,
        };
    }
    0.5 * erfc(d.ratio())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionRegime {
    /// μ < κ: ½ − (μ/κ)/√π
    SmallRatio,
    /// μ > κ: κ/(2√π μ)·exp(−μ²/κ²)
    LargeRatio,
}

/// Leading-order asymptotic form of [`neg_prob`] on either side of μ = κ.
/// At μ = κ neither expansion applies and the caller should use the exact
/// value.
pub fn neg_prob_expansion(d: &Dimensionless) -> Result<(f64, ExpansionRegime)> {
    if !(d.scaled_noise > 0.0) {
        return Err(Error::Domain("expansions need a positive noise amplitude".into()));
    }
    let x = d.ratio();
    let sqrt_pi = std::f64::consts::PI.sqrt();
    if x < 1.0 {
        Ok((0.5 - x / sqrt_pi, ExpansionRegime::SmallRatio))
    } else if x > 1.0 {
        Ok(((-x * x).exp() / (2.0 * sqrt_pi * x), ExpansionRegime::LargeRatio))
    } else {
        Err(Error::Domain("mu == kappa: no expansion, use the exact value".into()))
    }
}

/// Exact ln D(t) for the OU model started at r0.
pub fn log_discount(p: &OuParams, r0: f64, t: f64) -> f64 {
    let (m, a, k2) = (p.level, p.reversion, p.noise_sq);
    let decay = (-a * t).exp();
    let one_minus = -(-a * t).exp_m1();
    -(m - k2 / (2.0 * a * a)) * t + (m - r0 - k2 / (4.0 * a * a) * (3.0 - decay)) * one_minus / a
}

/// r∞ = m − k²/(2α²).
pub fn long_run_rate(p: &OuParams) -> f64 {
    p.level - p.noise_sq / (2.0 * p.reversion * p.reversion)
}

/// r∞ in dimensionless form, α(μ − κ²/2).
pub fn long_run_rate_dimensionless(reversion: f64, d: &Dimensionless) -> f64 {
    reversion * (d.scaled_mean - 0.5 * d.scaled_noise * d.scaled_noise)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeLabel {
    /// r∞ > 0, negative rates rarer than 7.9%.
    R1,
    /// r∞ > 0, negative rates more frequent.
    R2,
    /// r∞ < 0, negative rates frequent.
    R3,
    /// r∞ < 0 driven by noise intensity.
    R4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Zero,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub label: RegimeLabel,
    pub r_inf_sign: Sign,
}

impl Regime {
    /// On the μ = κ²/2 line the discount function tends to a constant.
    pub fn is_boundary(&self) -> bool {
        self.r_inf_sign == Sign::Zero
    }
}

/// Places (μ, κ) in the phase plane split by μ = κ²/2 and μ = κ.
pub fn classify_regime(d: &Dimensionless) -> Regime {
    let (mu, kappa) = (d.scaled_mean, d.scaled_noise);
    let half_sq = 0.5 * kappa * kappa;
    let label = match (mu >= half_sq, mu >= kappa) {
        (true, true) => RegimeLabel::R1,
        (true, false) => RegimeLabel::R2,
        (false, false) => RegimeLabel::R3,
        (false, true) => RegimeLabel::R4,
    };
    let r_inf_sign = if mu > half_sq {
        Sign::Positive
    } else if mu < half_sq {
        Sign::Negative
    } else {
        Sign::Zero
    };
    Regime { label, r_inf_sign }
}

/// Discount rate −ln D(t)/t on a grid, optionally with a min/max envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurve {
    pub times: Vec<f64>,
    pub rate_central: Vec<f64>,
    pub rate_lo: Option<Vec<f64>>,
    pub rate_hi: Option<Vec<f64>>,
    pub r0: f64,
}

impl DiscountCurve {
    pub fn has_envelope(&self) -> bool {
        self.rate_lo.is_some() && self.rate_hi.is_some()
    }

    /// CSV with columns `t,rate,rate_lo,rate_hi`; envelope cells are empty
    /// when there is no envelope.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "rate", "rate_lo", "rate_hi"])?;
        for (i, (&t, &r)) in self.times.iter().zip(&self.rate_central).enumerate() {
            let lo = self.rate_lo.as_ref().map(|v| fmt_num(v[i])).unwrap_or_default();
            let hi = self.rate_hi.as_ref().map(|v| fmt_num(v[i])).unwrap_or_default();
            wtr.write_record([fmt_num(t), fmt_num(r), lo, hi])?;
        }
        wtr.flush().map_err(|e| Error::write("<csv>", e))?;
        Ok(())
    }
}

fn rate_at(p: &OuParams, r0: f64, t: f64) -> f64 {
    -log_discount(p, r0, t) / t
}

pub fn discount_rate_curve(p: &OuParams, r0: f64, grid: &TimeGrid) -> Result<DiscountCurve> {
    p.validate()?;
    let times = grid.points().to_vec();
    let rate_central = times.iter().map(|&t| rate_at(p, r0, t)).collect();
    Ok(DiscountCurve {
        times,
        rate_central,
        rate_lo: None,
        rate_hi: None,
        r0,
    })
}

/// Central curve plus the pointwise min/max over all 27 combinations of
/// {θ̂ − σ, θ̂, θ̂ + σ} for (m, α, k²). α and k² are clamped at
/// [`ENVELOPE_FLOOR`].
pub fn discount_rate_envelope(fit: &OuFit, r0: f64, grid: &TimeGrid) -> Result<DiscountCurve> {
    let se = [fit.se_level, fit.se_reversion, fit.se_noise_sq];
    if se.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("non-finite standard errors".into()));
    }
    let mut curve = discount_rate_curve(&fit.params, r0, grid)?;
    let p = fit.params;
    let mut lo = curve.rate_central.clone();
    let mut hi = curve.rate_central.clone();
    for dm in [-1.0, 0.0, 1.0] {
        for da in [-1.0, 0.0, 1.0] {
            for dk in [-1.0, 0.0, 1.0] {
                let corner = OuParams {
                    level: p.level + dm * fit.se_level,
                    reversion: (p.reversion + da * fit.se_reversion).max(ENVELOPE_FLOOR),
                    noise_sq: (p.noise_sq + dk * fit.se_noise_sq).max(ENVELOPE_FLOOR),
                };
                for (i, &t) in curve.times.iter().enumerate() {
                    let r = rate_at(&corner, r0, t);
                    lo[i] = lo[i].min(r);
                    hi[i] = hi[i].max(r);
                }
            }
        }
    }
    curve.rate_lo = Some(lo);
    curve.rate_hi = Some(hi);
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn usa() -> OuParams {
        OuParams::new(0.0319, 0.0603, 10.03e-5).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(OuParams::new(0.03, 0.0, 1e-4).is_err());
        assert!(OuParams::new(0.03, 0.1, -1e-4).is_err());
        assert!(OuParams::new(f64::NAN, 0.1, 1e-4).is_err());
        assert!(OuParams::new(-0.09, 0.1, 1e-4).is_ok());
    }

    #[test]
    fn stationary_moment_cases() {
        let (mean, var) = stationary_moments(&OuParams::new(0.02, 0.3, 0.0).unwrap()).unwrap();
        assert_eq!((mean, var), (0.02, 0.0));
        // 1.003e-4 / (2 * 0.0603)
        let (_, var) = stationary_moments(&usa()).unwrap();
        assert_relative_eq!(var, 8.316_749_585_406_302e-4, max_relative = 1e-12);
        let doubled = OuParams::new(0.0319, 0.1206, 10.03e-5).unwrap();
        assert_relative_eq!(stationary_moments(&doubled).unwrap().1, var / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn autocorrelation_cases() {
        let p = usa();
        let var = p.stationary_variance();
        assert_eq!(autocorrelation(&p, 0.0).unwrap(), var);
        assert_relative_eq!(
            autocorrelation(&p, 1.0 / p.reversion).unwrap(),
            var * (-1.0f64).exp(),
            max_relative = 1e-14
        );
        assert!(autocorrelation(&p, -1.0).is_err());
    }

    #[test]
    fn correlation_time_by_quadrature() {
        // Simpson on [0, 40/α] of K(τ)/K(0); the tail beyond is e^-40
        let p = usa();
        let k0 = autocorrelation(&p, 0.0).unwrap();
        let upper = 40.0 / p.reversion;
        let n = 20_000;
        let h = upper / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * autocorrelation(&p, i as f64 * h).unwrap() / k0;
        }
        let tau_c = s * h / 3.0;
        assert_relative_eq!(tau_c, 1.0 / p.reversion, max_relative = 1e-9);
    }

    #[test]
    fn neg_prob_reference_points() {
        // ½ erfc(1) = 0.0786496...
        let at_one = neg_prob(&Dimensionless::new(0.7, 0.7).unwrap());
        assert!((at_one - 0.079).abs() < 5e-4);
        assert_eq!(neg_prob(&Dimensionless::new(0.0, 0.4).unwrap()), 0.5);
        // ½ erfc(3), reference from a 40-digit evaluation
        let at_three = neg_prob(&Dimensionless::new(3.0, 1.0).unwrap());
        assert_relative_eq!(at_three, 1.104_524_849_929_272e-5, max_relative = 1e-12);
    }

    #[test]
    fn neg_prob_degenerate_noise() {
        assert_eq!(neg_prob(&Dimensionless::new(1.0, 0.0).unwrap()), 0.0);
        assert_eq!(neg_prob(&Dimensionless::new(-1.0, 0.0).unwrap()), 1.0);
        assert_eq!(neg_prob(&Dimensionless::new(0.0, 0.0).unwrap()), 0.5);
    }

    #[test]
    fn expansions_track_exact_values() {
        let small = Dimensionless::new(0.05, 1.0).unwrap();
        let (approx, tag) = neg_prob_expansion(&small).unwrap();
        assert_eq!(tag, ExpansionRegime::SmallRatio);
        assert!((approx - neg_prob(&small)).abs() < 1e-3);

        let large = Dimensionless::new(4.0, 1.0).unwrap();
        let (approx, tag) = neg_prob_expansion(&large).unwrap();
        assert_eq!(tag, ExpansionRegime::LargeRatio);
        let exact = neg_prob(&large);
        assert!(((approx - exact) / exact).abs() < 0.2);

        assert_eq!(neg_prob_expansion(&Dimensionless::new(0.0, 2.0).unwrap()).unwrap().0, 0.5);
        assert!(neg_prob_expansion(&Dimensionless::new(1.5, 1.5).unwrap()).is_err());
        assert!(neg_prob_expansion(&Dimensionless::new(1.5, 0.0).unwrap()).is_err());
    }

    #[test]
    fn log_discount_limits() {
        let p = usa();
        assert_eq!(log_discount(&p, 0.01, 0.0), 0.0);
        let t = 1e-6;
        assert_relative_eq!(-log_discount(&p, 0.01, t) / t, 0.01, max_relative = 1e-5);
        let big = 50.0 / p.reversion;
        let slope = (log_discount(&p, 0.01, 2.0 * big) - log_discount(&p, 0.01, big)) / big;
        assert_relative_eq!(-slope, long_run_rate(&p), max_relative = 1e-10);
    }

    #[test]
    fn long_run_rate_from_published_rows() {
        assert!((long_run_rate(&usa()) - 0.0181).abs() < 5e-4);
        let nld = OuParams::new(0.0599, 0.1648, 17.97e-5).unwrap();
        assert!((long_run_rate(&nld) - 0.0566).abs() < 5e-4);
        let flat = OuParams::new(0.04, 0.2, 0.0).unwrap();
        assert_eq!(long_run_rate(&flat), 0.04);
    }

    #[test]
    fn dimensionless_from_published_rows() {
        let d = dimensionless(&usa());
        assert!((d.scaled_mean - 0.53).abs() < 0.01);
        assert!((d.scaled_noise - 0.68).abs() < 0.01);
        let uk = dimensionless(&OuParams::new(0.0342, 0.1635, 31.37e-5).unwrap());
        assert!((uk.scaled_mean - 0.21).abs() < 0.01);
        assert!((uk.scaled_noise - 0.27).abs() < 0.01);
        assert_eq!(dimensionless(&OuParams::new(0.0, 0.37, 1e-4).unwrap()).scaled_mean, 0.0);
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(&Dimensionless::new(2.0, 1.0).unwrap()).label, RegimeLabel::R1);
        let us = classify_regime(&Dimensionless::new(0.53, 0.68).unwrap());
        assert_eq!(us.label, RegimeLabel::R2);
        assert_eq!(us.r_inf_sign, Sign::Positive);
        let esp = classify_regime(&Dimensionless::new(4.02, 7.13).unwrap());
        assert_eq!(esp.r_inf_sign, Sign::Negative);
        assert_eq!(esp.label, RegimeLabel::R3);
        // μ ≥ κ but μ < κ²/2
        assert_eq!(classify_regime(&Dimensionless::new(3.0, 2.9).unwrap()).label, RegimeLabel::R4);
        let edge = classify_regime(&Dimensionless::new(0.5, 1.0).unwrap());
        assert!(edge.is_boundary());
        assert_eq!(edge.label, RegimeLabel::R2);
    }

    #[test]
    fn discount_curves() {
        let grid = TimeGrid::default();
        let flat = OuParams::new(0.02, 0.1, 0.0).unwrap();
        let c = discount_rate_curve(&flat, 0.02, &grid).unwrap();
        for r in &c.rate_central {
            assert_relative_eq!(*r, 0.02, max_relative = 1e-12);
        }

        let c = discount_rate_curve(&usa(), 0.01, &grid).unwrap();
        assert!(c.rate_central.windows(2).all(|w| w[1] > w[0]));
        let last = *c.rate_central.last().unwrap();
        assert!((last - 0.0181).abs() < 1e-3, "{last}");

        let deu = OuParams::new(-0.0945, 0.0071, 41.72e-4).unwrap();
        let c = discount_rate_curve(&deu, 0.01, &grid).unwrap();
        assert!(c.rate_central.windows(2).all(|w| w[1] < w[0]));
        assert!(*c.rate_central.last().unwrap() < -1.0);
    }

    fn fit_with_se(p: OuParams, se: [f64; 3]) -> OuFit {
        OuFit::from_parts(p, se[0], se[1], se[2], 100, 0.0)
    }

    #[test]
    fn envelope_collapses_without_errors() {
        let grid: TimeGrid = "geometric:0.5:300:40".parse().unwrap();
        let c = discount_rate_envelope(&fit_with_se(usa(), [0.0; 3]), 0.01, &grid).unwrap();
        assert_eq!(c.rate_lo.as_ref().unwrap(), &c.rate_central);
        assert_eq!(c.rate_hi.as_ref().unwrap(), &c.rate_central);
    }

    #[test]
    fn envelope_brackets_central_curve() {
        let grid = TimeGrid::default();
        let c = discount_rate_envelope(&fit_with_se(usa(), [0.0123, 0.0257, 1.05e-5]), 0.01, &grid)
            .unwrap();
        let (lo, hi) = (c.rate_lo.unwrap(), c.rate_hi.unwrap());
        for i in 0..c.times.len() {
            assert!(lo[i] <= c.rate_central[i] && c.rate_central[i] <= hi[i]);
        }
        // σ_α larger than α: clamping keeps everything finite
        let c = discount_rate_envelope(
            &fit_with_se(OuParams::new(0.0502, 0.0053, 13.96e-5).unwrap(), [0.2468, 0.0114, 1.09e-5]),
            0.01,
            &grid,
        )
        .unwrap();
        assert!(c.rate_lo.unwrap().iter().all(|x| x.is_finite()));
        let bad = fit_with_se(usa(), [f64::NAN, 0.0, 0.0]);
        assert!(discount_rate_envelope(&bad, 0.01, &grid).is_err());
    }

    #[test]
    fn curve_csv_layout() {
        let grid: TimeGrid = "linear:1:2:2".parse().unwrap();
        let c = discount_rate_curve(&usa(), 0.01, &grid).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,rate,rate_lo,rate_hi");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(",,"));
    }

    fn arb_params() -> impl Strategy<Value = OuParams> {
        (-0.1f64..0.1, 0.001f64..1.0, 0.0f64..1e-2)
            .prop_map(|(m, a, k2)| OuParams::new(m, a, k2).unwrap())
    }

    proptest! {
        #[test]
        fn long_run_rate_is_asymptotic_slope(p in arb_params(), r0 in -0.05f64..0.1) {
            let t = 200.0 / p.reversion;
            let h = 1.0 / p.reversion;
            let slope = -(log_discount(&p, r0, t + h) - log_discount(&p, r0, t)) / h;
            let r_inf = long_run_rate(&p);
            prop_assert!((slope - r_inf).abs() <= 1e-6 * (1.0 + r_inf.abs()));
        }

        #[test]
        fn neg_prob_monotone_and_antisymmetric(x in -5.0f64..5.0, dx in 1e-3f64..1.0) {
            let p = |r: f64| neg_prob(&Dimensionless::new(r, 1.0).unwrap());
            prop_assert!(p(x + dx) < p(x));
            prop_assert!((p(-x) - (1.0 - p(x))).abs() < 1e-15);
        }

        #[test]
        fn regime_sign_matches_long_run_rate(p in arb_params()) {
            prop_assume!(p.noise_sq > 0.0);
            let regime = classify_regime(&dimensionless(&p));
            let r = long_run_rate(&p);
            let expected = if r > 0.0 { Sign::Positive } else if r < 0.0 { Sign::Negative } else { Sign::Zero };
            prop_assert_eq!(regime.r_inf_sign, expected);
        }

        #[test]
        fn two_routes_to_long_run_rate(p in arb_params()) {
            let d = dimensionless(&p);
            let a = long_run_rate_dimensionless(p.reversion, &d);
            let b = long_run_rate(&p);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()).max(p.noise_sq / p.reversion.powi(2)));
        }

        #[test]
        fn zero_noise_discount_is_deterministic(m in -0.1f64..0.1, a in 0.001f64..1.0, r0 in -0.1f64..0.1, t in 0.0f64..500.0) {
            let p = OuParams::new(m, a, 0.0).unwrap();
            let expected = -m * t + (1.0 / a) * (m - r0) * (1.0 - (-a * t).exp());
            let got = log_discount(&p, r0, t);
            prop_assert!((got - expected).abs() <= 1e-13 * (1.0 + expected.abs()));
        }
    }
}
