//! Maximum-likelihood calibration and error propagation.

mod feller;
mod lognormal;
mod ou_mle;

pub use feller::{feller_log_transition, fit_feller, FellerFit, FellerFlag, FellerParams};
pub use lognormal::{fit_lognormal, LognormalFit};
pub use ou_mle::{
    asymptotic_standard_errors, fit_ou, fit_ou_profile, fit_ou_series, ou_loglik, FitFlag,
    FitMethod, OuFit, MIN_OBSERVATIONS, WARN_OBSERVATIONS,
};

use serde::{Deserialize, Serialize};

use crate::ou::{dimensionless, long_run_rate};

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Self { value, se }
    }
}

/// r∞, μ and κ with delta-method standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub long_run_rate: Estimate,
    pub scaled_mean: Estimate,
    pub scaled_noise: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMethod {
    /// Marginal standard errors only, treated as uncorrelated.
    #[default]
    Independent,
    /// Full parameter covariance from the fit, when it has one.
    FullCovariance,
}

/// Delta-method propagation with independent parameter errors.
pub fn propagate(fit: &OuFit) -> DerivedQuantities {
    propagate_with(fit, DeltaMethod::Independent)
}

/// Delta-method propagation of (m, α, k²) errors to r∞, μ and κ.
///
/// With k² = 0 the κ gradient is singular; κ's error is then taken as the
/// exact change √σ_k² / α^{3/2} caused by moving k² up by one standard error.
pub fn propagate_with(fit: &OuFit, method: DeltaMethod) -> DerivedQuantities {
    let p = fit.params;
    let (m, a, k2) = (p.level, p.reversion, p.noise_sq);
    let d = dimensionless(&p);
    let r_inf = long_run_rate(&p);

    // gradients w.r.t. (m, α, k²)
    let g_r = [1.0, k2 / (a * a * a), -1.0 / (2.0 * a * a)];
    let g_mu = [1.0 / a, -m / (a * a), 0.0];
    let k = k2.sqrt();

    let cov = match (method, fit.covariance) {
        (DeltaMethod::FullCovariance, Some(c)) => c,
        _ => {
            let s = [fit.se_level, fit.se_reversion, fit.se_noise_sq];
            let mut c = [[0.0; 3]; 3];
            for i in 0..3 {
                c[i][i] = s[i] * s[i];
            }
            c
        }
    };
    let quad = |g: &[f64; 3]| -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if g[i] != 0.0 && g[j] != 0.0 {
                    acc += g[i] * cov[i][j] * g[j];
                }
            }
        }
        acc.max(0.0).sqrt()
    };

    let se_kappa = if k2 > 0.0 {
        let g_kappa = [0.0, -1.5 * k / a.powf(2.5), 1.0 / (2.0 * k * a.powf(1.5))];
        quad(&g_kappa)
    } else {
        fit.se_noise_sq.sqrt() / a.powf(1.5)
    };

    DerivedQuantities {
        long_run_rate: Estimate::new(r_inf, quad(&g_r)),
        scaled_mean: Estimate::new(d.scaled_mean, quad(&g_mu)),
        scaled_noise: Estimate::new(d.scaled_noise, se_kappa),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou::OuParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn usa_fit() -> OuFit {
        OuFit::from_parts(
            OuParams::new(0.0319, 0.0603, 10.03e-5).unwrap(),
            0.0123,
            0.0257,
            1.05e-5,
            193,
            0.0,
        )
    }

    #[test]
    fn zero_errors_give_zero_derived_errors() {
        let mut fit = usa_fit();
        fit.se_level = 0.0;
        fit.se_reversion = 0.0;
        fit.se_noise_sq = 0.0;
        let d = propagate(&fit);
        assert_eq!(d.long_run_rate.se, 0.0);
        assert_eq!(d.scaled_mean.se, 0.0);
        assert_eq!(d.scaled_noise.se, 0.0);
    }

    #[test]
    fn usa_row_propagation() {
        let d = propagate(&usa_fit());
        assert_relative_eq!(d.long_run_rate.value, 0.018_107_712_130_337_8, max_relative = 1e-9);
        // sqrt(σm² + (k²/α³ σα)² + (σk²/2α²)²) with the published σ's
        assert_relative_eq!(d.long_run_rate.se, 0.017_076_083_033_258, max_relative = 1e-9);
        // the published 0.0124 is what the same formula gives with σα left out
        let mut no_alpha = usa_fit();
        no_alpha.se_reversion = 0.0;
        let published = propagate(&no_alpha).long_run_rate.se;
        assert!(((published - 0.0124) / 0.0124).abs() < 0.15, "{published}");
        // the μ and κ errors in the dimensionless table do include σα
        assert!((d.scaled_mean.se - 0.30).abs() < 0.01);
        assert!((d.scaled_noise.se - 0.43).abs() < 0.01);
    }

    #[test]
    fn zero_noise_kappa_convention() {
        let mut fit = usa_fit();
        fit.params.noise_sq = 0.0;
        let d = propagate(&fit);
        assert_relative_eq!(d.scaled_noise.se, 1.05e-5f64.sqrt() / 0.0603f64.powf(1.5), max_relative = 1e-14);
    }

    #[test]
    fn full_covariance_without_covariance_falls_back() {
        let fit = usa_fit();
        assert_eq!(
            propagate_with(&fit, DeltaMethod::FullCovariance),
            propagate_with(&fit, DeltaMethod::Independent)
        );
    }

    #[test]
    fn correlation_changes_propagated_error() {
        let mut fit = usa_fit();
        let (sm, sa) = (fit.se_level, fit.se_reversion);
        let mut cov = [[0.0; 3]; 3];
        cov[0][0] = sm * sm;
        cov[1][1] = sa * sa;
        cov[2][2] = fit.se_noise_sq * fit.se_noise_sq;
        cov[0][1] = 0.5 * sm * sa;
        cov[1][0] = cov[0][1];
        fit.covariance = Some(cov);
        let ind = propagate_with(&fit, DeltaMethod::Independent);
        let full = propagate_with(&fit, DeltaMethod::FullCovariance);
        // positive m-α correlation widens r∞ (both gradients positive)
        assert!(full.long_run_rate.se > ind.long_run_rate.se);
        // and narrows μ (gradients of opposite sign)
        assert!(full.scaled_mean.se < ind.scaled_mean.se);
    }

    proptest! {
        #[test]
        fn first_order_homogeneity(scale in 0.1f64..10.0) {
            let base = usa_fit();
            let mut scaled = base.clone();
            scaled.se_level *= scale;
            scaled.se_reversion *= scale;
            scaled.se_noise_sq *= scale;
            let (a, b) = (propagate(&base), propagate(&scaled));
            for (x, y) in [
                (a.long_run_rate.se, b.long_run_rate.se),
                (a.scaled_mean.se, b.scaled_mean.se),
                (a.scaled_noise.se, b.scaled_noise.se),
            ] {
                prop_assert!((y - scale * x).abs() <= 1e-12 * y.abs());
            }
        }
    }
}
