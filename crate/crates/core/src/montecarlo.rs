//! Path simulation used as a brute-force check on the closed forms.
//!
//! Every model is stepped with its exact transition law. Path `i` draws
//! from ChaCha8 stream `i` of the configured seed, so a path does not depend
//! on how many others are simulated or on thread scheduling. Normals come
//! from the Ziggurat sampler in `rand_distr`. Integrals of the rate use the
//! trapezoid rule at the simulation step, and all cross-path means use
//! compensated summation in path order.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::altmodels::ExtOuParams;
use crate::error::{Error, Result};
use crate::estimation::{Estimate, FellerParams};
use crate::ou::OuParams;
use crate::report::fmt_num;
use crate::special::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Years.
    pub horizon: f64,
    /// Simulation step in years.
    pub dt: f64,
    pub seed: u64,
    /// Starting value of the simulated state.
    pub r0: f64,
    /// Record integrals and states every this many steps (the final step is
    /// always recorded).
    pub record_every: usize,
}

impl SimConfig {
    pub fn new(n_paths: usize, horizon: f64, dt: f64, seed: u64, r0: f64) -> Result<Self> {
        let cfg = Self {
            n_paths,
            horizon,
            dt,
            seed,
            r0,
            record_every: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn recording_every(mut self, steps: usize) -> Self {
        self.record_every = steps;
        self
    }

    /// Records at (approximately) every `interval` years.
    pub fn recording_interval(self, interval: f64) -> Self {
        let steps = (interval / self.dt).round().max(1.0) as usize;
        self.recording_every(steps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("need at least one path".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon {} must be at least dt {}",
                self.horizon, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be positive".into()));
        }
        if !self.r0.is_finite() {
            return Err(Error::InvalidParameter("initial value is not finite".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    fn recorded_steps(&self) -> Vec<usize> {
        let n = self.n_steps();
        let mut steps: Vec<usize> = (0..=n).step_by(self.record_every).collect();
        if *steps.last().unwrap() != n {
            steps.push(n);
        }
        steps
    }
}

/// One model's exact one-step transition at a fixed dt.
pub trait Stepper: Sync {
    type State: Copy + Send;
    fn start(&self, r0: f64) -> Self::State;
    fn advance(&self, state: Self::State, rng: &mut ChaCha8Rng) -> Self::State;
    /// The quantity integrated for discounting.
    fn rate(&self, state: &Self::State) -> f64;
}

pub struct OuStepper {
    level: f64,
    decay: f64,
    sd: f64,
}

impl OuStepper {
    pub fn new(p: &OuParams, dt: f64) -> Result<Self> {
        p.validate()?;
        let decay = (-p.reversion * dt).exp();
        let var = p.noise_sq * -(-2.0 * p.reversion * dt).exp_m1() / (2.0 * p.reversion);
        Ok(Self {
            level: p.level,
            decay,
            sd: var.sqrt(),
        })
    }
}

impl Stepper for OuStepper {
    type State = f64;
    fn start(&self, r0: f64) -> f64 {
        r0
    }
    fn advance(&self, r: f64, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.level + (r - self.level) * self.decay + self.sd * z
    }
    fn rate(&self, r: &f64) -> f64 {
        *r
    }
}

/// Exact joint Gaussian transition of the deviations x = r − m₀ and
/// z = m − m₀.
pub struct ExtOuStepper {
    base_level: f64,
    decay: f64,
    slow_decay: f64,
    coupling: f64,
    chol_zz: f64,
    chol_xz: f64,
    chol_xx: f64,
}

impl ExtOuStepper {
    pub fn new(p: &ExtOuParams, dt: f64) -> Result<Self> {
        p.validate()?;
        let (a, a0, k2, k02) = (p.reversion, p.slow_reversion, p.noise_sq, p.slow_noise_sq);
        // ∫₀^dt e^{−βv} dv
        let int = |beta: f64| -(-beta * dt).exp_m1() / beta;
        let decay = (-a * dt).exp();
        let slow_decay = (-a0 * dt).exp();
        let g = a / (a - a0);
        let var_z = k02 * int(2.0 * a0);
        let var_x = k2 * int(2.0 * a) + k02 * g * g * (int(2.0 * a0) - 2.0 * int(a + a0) + int(2.0 * a));
        let cov = k02 * g * (int(2.0 * a0) - int(a + a0));
        let chol_zz = var_z.sqrt();
        let chol_xz = if chol_zz > 0.0 { cov / chol_zz } else { 0.0 };
        let chol_xx = (var_x - chol_xz * chol_xz).max(0.0).sqrt();
        Ok(Self {
            base_level: p.base_level,
            decay,
            slow_decay,
            coupling: g * (slow_decay - decay),
            chol_zz,
            chol_xz,
            chol_xx,
        })
    }
}

impl Stepper for ExtOuStepper {
    type State = (f64, f64);
    fn start(&self, r0: f64) -> (f64, f64) {
        (r0 - self.base_level, 0.0)
    }
    fn advance(&self, (x, z): (f64, f64), rng: &mut ChaCha8Rng) -> (f64, f64) {
        let e1: f64 = StandardNormal.sample(rng);
        let e2: f64 = StandardNormal.sample(rng);
        let x_next = x * self.decay + z * self.coupling + self.chol_xz * e1 + self.chol_xx * e2;
        let z_next = z * self.slow_decay + self.chol_zz * e1;
        (x_next, z_next)
    }
    fn rate(&self, s: &(f64, f64)) -> f64 {
        self.base_level + s.0
    }
}

/// Noncentral chi-square transition drawn as a Poisson mixture of Gammas.
pub struct FellerStepper {
    level: f64,
    decay: f64,
    /// c = 2α/(k²(1 − e^{−αdt})); zero when k² = 0.
    scale: f64,
    half_df: f64,
}

impl FellerStepper {
    pub fn new(p: &FellerParams, dt: f64) -> Result<Self> {
        let p = FellerParams::new(p.level, p.reversion, p.noise_sq)?;
        let decay = (-p.reversion * dt).exp();
        let (scale, half_df) = if p.noise_sq > 0.0 {
            (
                2.0 * p.reversion / (p.noise_sq * -(-p.reversion * dt).exp_m1()),
                2.0 * p.reversion * p.level / p.noise_sq,
            )
        } else {
            (0.0, 0.0)
        };
        Ok(Self {
            level: p.level,
            decay,
            scale,
            half_df,
        })
    }
}

impl Stepper for FellerStepper {
    type State = f64;
    fn start(&self, y0: f64) -> f64 {
        y0
    }
    fn advance(&self, y: f64, rng: &mut ChaCha8Rng) -> f64 {
        if self.scale == 0.0 {
            return self.level + (y - self.level) * self.decay;
        }
        let lambda = self.scale * y * self.decay;
        let n: f64 = if lambda > 0.0 {
            Poisson::new(lambda).expect("finite positive mean").sample(rng)
        } else {
            0.0
        };
        let x: f64 = Gamma::new(self.half_df + n, 1.0)
            .expect("positive shape")
            .sample(rng);
        x / self.scale
    }
    fn rate(&self, y: &f64) -> f64 {
        *y
    }
}

pub struct LognormalStepper {
    drift: f64,
    sd: f64,
}

impl LognormalStepper {
    pub fn new(level: f64, noise_sq: f64, dt: f64) -> Result<Self> {
        if !(noise_sq >= 0.0) || !level.is_finite() {
            return Err(Error::InvalidParameter("need finite m and k² ≥ 0".into()));
        }
        Ok(Self {
            drift: (level - 0.5 * noise_sq) * dt,
            sd: (noise_sq * dt).sqrt(),
        })
    }
}

impl Stepper for LognormalStepper {
    type State = f64;
    fn start(&self, y0: f64) -> f64 {
        y0
    }
    fn advance(&self, y: f64, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        y * (self.drift + self.sd * z).exp()
    }
    fn rate(&self, y: &f64) -> f64 {
        *y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub times: Vec<f64>,
    /// `integrals[path][j]` is ∫₀^{times[j]} r dt along that path.
    pub integrals: Vec<Vec<f64>>,
    /// `states[path][j]` is the simulated rate at `times[j]`.
    pub states: Vec<Vec<f64>>,
    /// Time each path spent with a negative rate.
    pub neg_occupation: Vec<f64>,
    /// Same, restricted to the second half of the horizon.
    pub late_neg_occupation: Vec<f64>,
    pub late_window: f64,
    pub horizon: f64,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.integrals.len()
    }

    /// Index of the recorded time closest to `t`.
    pub fn time_index(&self, t: f64) -> usize {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Cross-path mean and standard error of the state at a recorded time.
    pub fn state_mean(&self, j: usize) -> Estimate {
        mean_and_stderr(self.states.iter().map(|s| s[j]))
    }

    /// Cross-path sample variance (n − 1) of the state and its standard
    /// error from the fourth central moment.
    pub fn state_variance(&self, j: usize) -> Estimate {
        let xs: Vec<f64> = self.states.iter().map(|s| s[j]).collect();
        variance_with_stderr(&xs)
    }

    /// Debug dump with columns `path_id,t,integral`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["path_id", "t", "integral"])?;
        for (i, row) in self.integrals.iter().enumerate() {
            for (t, v) in self.times.iter().zip(row) {
                wtr.write_record([i.to_string(), fmt_num(*t), fmt_num(*v)])?;
            }
        }
        wtr.flush().map_err(|e| Error::write("<csv>", e))?;
        Ok(())
    }
}

pub(crate) fn mean_and_stderr<I: IntoIterator<Item = f64>>(values: I) -> Estimate {
    let xs: Vec<f64> = values.into_iter().collect();
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return Estimate::new(mean, 0.0);
    }
    let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    Estimate::new(mean, (ss / (n - 1.0) / n).sqrt())
}

pub(crate) fn variance_with_stderr(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Estimate::new(0.0, 0.0);
    }
    let mean = compensated_sum(xs.iter().copied()) / n;
    let m2 = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / n;
    let m4 = compensated_sum(xs.iter().map(|x| (x - mean).powi(4))) / n;
    let var = m2 * n / (n - 1.0);
    Estimate::new(var, ((m4 - m2 * m2) / n).max(0.0).sqrt())
}

struct PathRecord {
    integrals: Vec<f64>,
    states: Vec<f64>,
    neg: f64,
    late_neg: f64,
}

/// Runs `stepper` over all paths. Paths are simulated in parallel and
/// collected in path order.
pub fn simulate<S: Stepper>(stepper: &S, cfg: &SimConfig) -> Result<PathEnsemble> {
    cfg.validate()?;
    let n_steps = cfg.n_steps();
    let recorded = cfg.recorded_steps();
    let late_start = n_steps / 2;
    let dt = cfg.dt;

    let run = |path: usize| -> PathRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(path as u64);
        let mut state = stepper.start(cfg.r0);
        let mut r = stepper.rate(&state);
        let mut integral = 0.0;
        let mut neg = 0.0;
        let mut late_neg = 0.0;
        let mut integrals = Vec::with_capacity(recorded.len());
        let mut states = Vec::with_capacity(recorded.len());
        integrals.push(0.0);
        states.push(r);
        let mut next = 1;
        for step in 1..=n_steps {
            state = stepper.advance(state, &mut rng);
            let r_next = stepper.rate(&state);
            integral += 0.5 * dt * (r + r_next);
            if r_next < 0.0 {
                neg += dt;
                if step > late_start {
                    late_neg += dt;
                }
            }
            r = r_next;
            if next < recorded.len() && recorded[next] == step {
                integrals.push(integral);
                states.push(r);
                next += 1;
            }
        }
        PathRecord {
            integrals,
            states,
            neg,
            late_neg,
        }
    };

    let records: Vec<PathRecord> = (0..cfg.n_paths).into_par_iter().map(run).collect();
    let mut ensemble = PathEnsemble {
        times: recorded.iter().map(|&s| s as f64 * dt).collect(),
        integrals: Vec::with_capacity(records.len()),
        states: Vec::with_capacity(records.len()),
        neg_occupation: Vec::with_capacity(records.len()),
        late_neg_occupation: Vec::with_capacity(records.len()),
        late_window: (n_steps - late_start) as f64 * dt,
        horizon: n_steps as f64 * dt,
    };
    for rec in records {
        ensemble.integrals.push(rec.integrals);
        ensemble.states.push(rec.states);
        ensemble.neg_occupation.push(rec.neg);
        ensemble.late_neg_occupation.push(rec.late_neg);
    }
    Ok(ensemble)
}

pub fn simulate_ou(p: &OuParams, cfg: &SimConfig) -> Result<PathEnsemble> {
    simulate(&OuStepper::new(p, cfg.dt)?, cfg)
}

pub fn simulate_ext_ou(p: &ExtOuParams, cfg: &SimConfig) -> Result<PathEnsemble> {
    simulate(&ExtOuStepper::new(p, cfg.dt)?, cfg)
}

/// Simulates the shifted state y from `y0`; `cfg.r0` is ignored.
pub fn simulate_feller(p: &FellerParams, y0: f64, cfg: &SimConfig) -> Result<PathEnsemble> {
    if !(y0 > 0.0) {
        return Err(Error::InvalidParameter(format!("y0 must be positive, got {y0}")));
    }
    simulate(&FellerStepper::new(p, cfg.dt)?, &SimConfig { r0: y0, ..*cfg })
}

/// Simulates the shifted state y from `y0`; `cfg.r0` is ignored.
pub fn simulate_lognormal(level: f64, noise_sq: f64, y0: f64, cfg: &SimConfig) -> Result<PathEnsemble> {
    if !(y0 > 0.0) {
        return Err(Error::InvalidParameter(format!("y0 must be positive, got {y0}")));
    }
    simulate(&LognormalStepper::new(level, noise_sq, cfg.dt)?, &SimConfig { r0: y0, ..*cfg })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountEstimate {
    pub t: f64,
    pub discount: f64,
    pub stderr: f64,
}

impl DiscountEstimate {
    pub fn relative_stderr(&self) -> f64 {
        self.stderr / self.discount
    }
}

/// D̂(t) = e^{−shift·t} · mean over paths of exp(−∫r) at every recorded time.
pub fn mc_discount(e: &PathEnsemble, shift: f64) -> Result<Vec<DiscountEstimate>> {
    if e.n_paths() == 0 {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    Ok(e.times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let est = mean_and_stderr(e.integrals.iter().map(|row| (-row[j]).exp()));
            let factor = (-shift * t).exp();
            DiscountEstimate {
                t,
                discount: factor * est.value,
                stderr: factor * est.se,
            }
        })
        .collect())
}

/// Fraction of time spent below zero over the second half of the horizon,
/// averaged over paths, with the cross-path standard error.
pub fn mc_negative_fraction(e: &PathEnsemble) -> Result<Estimate> {
    if e.n_paths() == 0 || !(e.late_window > 0.0) {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    Ok(mean_and_stderr(e.late_neg_occupation.iter().map(|x| x / e.late_window)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::altmodels::ext_ou_variance;
    use crate::ou::log_discount;

    fn usa() -> OuParams {
        OuParams::new(0.0319, 0.0603, 10.03e-5).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0, 1.0, 0.01, 1, 0.0).is_err());
        assert!(SimConfig::new(10, 0.001, 0.01, 1, 0.0).is_err());
        assert!(SimConfig::new(10, 1.0, 0.0, 1, 0.0).is_err());
        let cfg = SimConfig::new(10, 1.0, 0.3, 1, 0.0).unwrap();
        assert_eq!(cfg.recorded_steps(), vec![0, 1, 2, 3]);
        let cfg = SimConfig::new(10, 1.0, 0.01, 1, 0.0).unwrap().recording_every(30);
        assert_eq!(*cfg.recorded_steps().last().unwrap(), 100);
    }

    #[test]
    fn deterministic_ou_path() {
        let p = OuParams::new(0.03, 0.2, 0.0).unwrap();
        let cfg = SimConfig::new(3, 10.0, 0.01, 7, 0.03).unwrap().recording_every(100);
        let e = simulate_ou(&p, &cfg).unwrap();
        for row in &e.integrals {
            for (t, v) in e.times.iter().zip(row) {
                assert!((v - 0.03 * t).abs() < 1e-13);
            }
        }
        let d = mc_discount(&e, 0.0).unwrap();
        assert!((d.last().unwrap().discount - (-0.3f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn reproducible_and_independent_of_path_count() {
        let cfg = SimConfig::new(50, 5.0, 0.05, 42, 0.01).unwrap();
        let a = simulate_ou(&usa(), &cfg).unwrap();
        let b = simulate_ou(&usa(), &cfg).unwrap();
        assert_eq!(a, b);
        let more = simulate_ou(&usa(), &SimConfig { n_paths: 80, ..cfg }).unwrap();
        assert_eq!(a.integrals[..], more.integrals[..50]);
        let other = simulate_ou(&usa(), &SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.integrals, other.integrals);
    }

    #[test]
    fn discount_at_zero_and_jensen() {
        let cfg = SimConfig::new(2000, 20.0, 0.05, 1, 0.01).unwrap().recording_every(20);
        let e = simulate_ou(&usa(), &cfg).unwrap();
        let d = mc_discount(&e, 0.0).unwrap();
        assert_eq!(d[0].discount, 1.0);
        assert_eq!(d[0].stderr, 0.0);
        for (j, est) in d.iter().enumerate() {
            let mean_int = compensated_sum(e.integrals.iter().map(|r| r[j])) / e.n_paths() as f64;
            assert!(est.discount >= (-mean_int).exp());
        }
    }

    #[test]
    fn discount_matches_closed_form() {
        let cfg = SimConfig::new(20_000, 50.0, 0.02, 11, 0.01).unwrap().recording_interval(1.0);
        let e = simulate_ou(&usa(), &cfg).unwrap();
        let d = mc_discount(&e, 0.0).unwrap();
        for t in [1.0, 10.0, 50.0] {
            let est = d[e.time_index(t)];
            let exact = log_discount(&usa(), 0.01, t).exp();
            assert!((est.discount - exact).abs() <= 3.0 * est.stderr, "t={t}: {est:?} vs {exact}");
        }
    }

    #[test]
    fn ou_stationary_moments_and_dt_invariance() {
        let p = OuParams::new(0.02, 0.5, 1e-3).unwrap();
        let var = p.stationary_variance();
        for dt in [0.1, 0.05] {
            let cfg = SimConfig::new(20_000, 20.0, dt, 3, 0.02).unwrap().recording_every(1_000_000);
            let e = simulate_ou(&p, &cfg).unwrap();
            let j = e.times.len() - 1;
            let m = e.state_mean(j);
            let v = e.state_variance(j);
            assert!((m.value - 0.02).abs() < 3.0 * m.se);
            assert!((v.value - var).abs() < 3.0 * v.se, "{v:?} vs {var}");
        }
    }

    #[test]
    fn negative_fraction_limits() {
        let cfg = SimConfig::new(400, 60.0, 0.05, 9, 0.0).unwrap().recording_every(1_000_000);
        let zero_mean = simulate_ou(&OuParams::new(0.0, 0.5, 1e-3).unwrap(), &cfg).unwrap();
        let f = mc_negative_fraction(&zero_mean).unwrap();
        assert!((f.value - 0.5).abs() < 3.0 * f.se + 1e-3, "{f:?}");
        let high = simulate_ou(&OuParams::new(1.0, 0.5, 1e-6).unwrap(), &cfg).unwrap();
        assert_eq!(mc_negative_fraction(&high).unwrap().value, 0.0);
    }

    #[test]
    fn ext_ou_moments() {
        let p = ExtOuParams::new(0.03, 0.5, 1e-3, 0.1, 1e-4).unwrap();
        let cfg = SimConfig::new(20_000, 80.0, 0.1, 5, 0.03).unwrap().recording_every(1_000_000);
        let e = simulate_ext_ou(&p, &cfg).unwrap();
        let j = e.times.len() - 1;
        let m = e.state_mean(j);
        let v = e.state_variance(j);
        let exact = ext_ou_variance(&p).unwrap();
        assert!((m.value - 0.03).abs() < 3.0 * m.se);
        assert!((v.value - exact).abs() < 3.0 * v.se, "{v:?} vs {exact}");
    }

    #[test]
    fn ext_ou_without_slow_noise_matches_ou() {
        let p = ExtOuParams::new(0.03, 0.5, 1e-3, 0.1, 0.0).unwrap();
        let cfg = SimConfig::new(5000, 4.0, 0.1, 5, 0.0).unwrap();
        let e = simulate_ext_ou(&p, &cfg).unwrap();
        let j = e.times.len() - 1;
        let ou = p.fast();
        let t = e.times[j];
        let mean = 0.03 * (1.0 - (-0.5 * t).exp());
        let var = ou.stationary_variance() * (1.0 - (-2.0 * 0.5 * t).exp());
        let m = e.state_mean(j);
        let v = e.state_variance(j);
        assert!((m.value - mean).abs() < 3.0 * m.se);
        assert!((v.value - var).abs() < 3.0 * v.se);
    }

    #[test]
    fn feller_paths() {
        let p = FellerParams::new(0.05, 0.3, 1e-3).unwrap();
        let cfg = SimConfig::new(5000, 30.0, 0.25, 2, 0.0).unwrap().recording_every(1_000_000);
        let e = simulate_feller(&p, 0.02, &cfg).unwrap();
        assert!(e.states.iter().flatten().all(|&y| y >= 0.0));
        let m = e.state_mean(e.times.len() - 1);
        assert!((m.value - 0.05).abs() < 3.0 * m.se, "{m:?}");

        let flat = FellerParams::new(0.05, 0.3, 0.0).unwrap();
        let e = simulate_feller(&flat, 0.02, &SimConfig::new(2, 10.0, 0.1, 2, 0.0).unwrap()).unwrap();
        for (t, y) in e.times.iter().zip(&e.states[0]) {
            assert!((y - (0.05 - 0.03 * (-0.3 * t).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn lognormal_paths() {
        let cfg = SimConfig::new(20_000, 5.0, 0.05, 4, 0.0).unwrap().recording_every(1_000_000);
        let e = simulate_lognormal(0.05, 0.04, 0.02, &cfg).unwrap();
        let j = e.times.len() - 1;
        let t = e.times[j];
        let m = e.state_mean(j);
        assert!((m.value - 0.02 * (0.05 * t).exp()).abs() < 3.0 * m.se);
        let logs = mean_and_stderr(e.states.iter().map(|s| (s[j] / 0.02).ln()));
        assert!((logs.value - 0.03 * t).abs() < 3.0 * logs.se);

        let det = simulate_lognormal(0.05, 0.0, 0.02, &SimConfig::new(1, 2.0, 0.5, 0, 0.0).unwrap()).unwrap();
        for (t, y) in det.times.iter().zip(&det.states[0]) {
            assert!((y - 0.02 * (0.05 * t).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn shift_scales_discount() {
        let cfg = SimConfig::new(10, 2.0, 0.5, 4, 0.0).unwrap();
        let e = simulate_lognormal(0.05, 0.01, 0.02, &cfg).unwrap();
        let a = mc_discount(&e, 0.0).unwrap();
        let b = mc_discount(&e, -0.04).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y.discount - x.discount * (0.04 * x.t).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn dump_layout() {
        let e = simulate_ou(&usa(), &SimConfig::new(2, 1.0, 0.5, 4, 0.0).unwrap()).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("path_id,t,integral\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 3);
    }
}
